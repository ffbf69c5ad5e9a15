//! Linear structural causal models fitted on a DAG, and deterministic
//! counterfactuals by abduction, action and prediction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{Dag, GraphJson};
use crate::linalg::{Matrix, Moments};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Equation<T> {
    pub intercept: T,
    /// `(parent index, coefficient)` sorted by parent index.
    pub coefficients: Vec<(usize, T)>,
    pub residual_sd: T,
    pub ridge: bool,
}

impl<T: Real> Equation<T> {
    fn predict(&self, row: &[T]) -> T {
        self.coefficients
            .iter()
            .fold(self.intercept, |acc, &(p, c)| acc + c * row[p])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearScm<T> {
    dag: Dag,
    equations: Vec<Equation<T>>,
    order: Vec<usize>,
    fitted_on: Option<usize>,
}

/// A counterfactual row together with the evidence it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterfactual<T> {
    pub original: Vec<T>,
    pub variable: usize,
    pub value: T,
    pub row: Vec<T>,
    pub noise: Vec<T>,
}

/// OLS of every node on its parents, using precomputed moments.
pub fn fit_from_moments<T: Real>(g: &Dag, moments: &Moments<T>, replicate: Option<usize>) -> Result<LinearScm<T>> {
    if moments.dim() != g.n() {
        return Err(Error::LengthMismatch {
            left: moments.dim(),
            right: g.n(),
        });
    }
    let parents = g.parent_lists();
    let max_p = parents.iter().map(Vec::len).max().unwrap_or(0);
    if moments.n() <= max_p + 1 {
        return Err(Error::Data(format!(
            "{} rows cannot fit a node with {} parents",
            moments.n(),
            max_p
        )));
    }
    let equations = parents
        .iter()
        .enumerate()
        .map(|(v, pa)| {
            let fit = moments.ols(v, pa);
            let dof = T::of_usize(moments.n() - pa.len() - 1);
            Equation {
                intercept: fit.intercept,
                coefficients: pa.iter().copied().zip(fit.coefficients).collect(),
                residual_sd: (fit.rss / dof).sqrt(),
                ridge: fit.ridge,
            }
        })
        .collect();
    LinearScm::new(g.clone(), equations, replicate)
}

/// Fits on the rows of `data`, whose columns follow the DAG's variables.
pub fn fit_linear_scm<T: Real>(g: &Dag, data: &Matrix<T>, replicate: Option<usize>) -> Result<LinearScm<T>> {
    fit_from_moments(g, &Moments::from_matrix(data), replicate)
}

impl<T: Real> LinearScm<T> {
    pub fn new(dag: Dag, equations: Vec<Equation<T>>, fitted_on: Option<usize>) -> Result<Self> {
        if equations.len() != dag.n() {
            return Err(Error::LengthMismatch {
                left: equations.len(),
                right: dag.n(),
            });
        }
        for (v, eq) in equations.iter().enumerate() {
            let keys: Vec<usize> = eq.coefficients.iter().map(|c| c.0).collect();
            if keys != dag.parents(v) {
                return Err(Error::Data(format!(
                    "equation for `{}` does not match its parents",
                    dag.variables()[v]
                )));
            }
        }
        let order = dag.topological_order()?;
        Ok(Self {
            dag,
            equations,
            order,
            fitted_on,
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn equations(&self) -> &[Equation<T>] {
        &self.equations
    }

    pub fn fitted_on(&self) -> Option<usize> {
        self.fitted_on
    }

    pub fn uses_ridge(&self) -> bool {
        self.equations.iter().any(|e| e.ridge)
    }

    fn check_row(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dag.n() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.dag.n(),
            });
        }
        Ok(())
    }

    /// Exogenous noise implied by the row: `u_v = x_v - (b_v + Σ β x_pa)`.
    pub fn abduct(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_row(x)?;
        Ok(self
            .equations
            .iter()
            .enumerate()
            .map(|(v, eq)| x[v] - eq.predict(x))
            .collect())
    }

    /// Evaluates the model from noise values with no intervention.
    pub fn predict(&self, u: &[T]) -> Result<Vec<T>> {
        self.check_row(u)?;
        let mut row = vec![T::zero(); u.len()];
        for &v in &self.order {
            row[v] = self.equations[v].predict(&row) + u[v];
        }
        Ok(row)
    }

    /// Writes the counterfactual of `x` under `do(a := value)` into `out`.
    /// Only descendants of `a` are recomputed; everything else is copied.
    pub fn counterfactual_into(&self, x: &[T], a: usize, value: T, affected: &[bool], out: &mut [T]) {
        out.copy_from_slice(x);
        out[a] = value;
        for &v in &self.order {
            if v == a || !affected[v] {
                continue;
            }
            let eq = &self.equations[v];
            let u = x[v] - eq.predict(x);
            out[v] = eq.predict(out) + u;
        }
    }

    /// Nodes recomputed under an intervention on `a`: its strict descendants.
    pub fn affected_by(&self, a: usize) -> Vec<bool> {
        let mut affected = vec![false; self.dag.n()];
        for d in self.dag.descendants(a) {
            affected[d] = d != a;
        }
        affected
    }

    pub fn counterfactual(&self, x: &[T], a: &str, value: T) -> Result<Counterfactual<T>> {
        let ai = self.dag.index_of(a)?;
        let noise = self.abduct(x)?;
        let mut row = vec![T::zero(); x.len()];
        self.counterfactual_into(x, ai, value, &self.affected_by(ai), &mut row);
        Ok(Counterfactual {
            original: x.to_vec(),
            variable: ai,
            value,
            row,
            noise,
        })
    }

    pub fn to_json(&self) -> ScmJson {
        let vars = self.dag.variables();
        ScmJson {
            graph: GraphJson::from(self.dag.clone()),
            fitted_on: self.fitted_on,
            nodes: self
                .equations
                .iter()
                .enumerate()
                .map(|(v, eq)| NodeJson {
                    name: vars[v].clone(),
                    intercept: eq.intercept.to_f64_lossy(),
                    coefficients: eq
                        .coefficients
                        .iter()
                        .map(|&(p, c)| (vars[p].clone(), c.to_f64_lossy()))
                        .collect(),
                    residual_sd: eq.residual_sd.to_f64_lossy(),
                    ridge: eq.ridge,
                })
                .collect(),
        }
    }

    pub fn from_json(j: &ScmJson) -> Result<Self> {
        let dag = Dag::try_from(j.graph.clone())?;
        let mut by_name: BTreeMap<&str, &NodeJson> = BTreeMap::new();
        for node in &j.nodes {
            by_name.insert(&node.name, node);
        }
        let mut equations = Vec::with_capacity(dag.n());
        for (v, name) in dag.variables().iter().enumerate() {
            let node = by_name
                .get(name.as_str())
                .ok_or_else(|| Error::Data(format!("no equation for `{name}`")))?;
            let mut coefficients = Vec::new();
            for p in dag.parents(v) {
                let c = node.coefficients.get(&dag.variables()[p]).ok_or_else(|| {
                    Error::Data(format!("missing coefficient {} -> {name}", dag.variables()[p]))
                })?;
                coefficients.push((p, T::of(*c)));
            }
            if node.coefficients.len() != coefficients.len() {
                return Err(Error::Data(format!("extra coefficients for `{name}`")));
            }
            equations.push(Equation {
                intercept: T::of(node.intercept),
                coefficients,
                residual_sd: T::of(node.residual_sd),
                ridge: node.ridge,
            });
        }
        Self::new(dag, equations, j.fitted_on)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub name: String,
    pub intercept: f64,
    pub coefficients: BTreeMap<String, f64>,
    pub residual_sd: f64,
    #[serde(default)]
    pub ridge: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmJson {
    pub graph: GraphJson,
    pub fitted_on: Option<usize>,
    pub nodes: Vec<NodeJson>,
}
