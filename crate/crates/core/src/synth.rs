//! Synthetic linear data with a logistic target, including the three-node
//! protected-attribute experiment and its knowledge scenarios.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, ColumnSpec, Dataset};
use crate::error::{Error, Result};
use crate::graphs::{variables, Dag};
use crate::knowledge::Knowledge;
use crate::linalg::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    /// Root-only: the node is a 0/1 draw.
    Bernoulli { p: f64 },
    Gaussian { sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    #[serde(default)]
    pub intercept: f64,
    /// Parent name to coefficient.
    #[serde(default)]
    pub coefficients: BTreeMap<String, f64>,
    pub noise: Noise,
}

/// `target ~ Bernoulli(sigmoid(intercept + Σ coef · x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub name: String,
    #[serde(default)]
    pub intercept: f64,
    pub coefficients: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub nodes: Vec<NodeSpec>,
    pub target: TargetSpec,
    pub protected: String,
    pub n: usize,
    pub seed: u64,
}

/// Default structural coefficients of the three-node experiment. Only the
/// Bernoulli(0.5) protected attribute, unit Gaussian noise and the
/// target's log-odds are fixed by the experiment; these are tunable.
pub const A_TO_X1: f64 = 0.8;
pub const X1_TO_X2: f64 = 0.6;
pub const A_TO_X2: f64 = 0.2;

impl SynthSpec {
    /// `A -> X1 -> X2` plus a weak `A -> X2`, `A ~ Bernoulli(0.5)`, unit
    /// Gaussian noise, and `Y ~ Bernoulli(sigmoid(1.2 X1 + 0.8 X2 - 0.5))`.
    pub fn three_node(n: usize, seed: u64) -> Self {
        let mut s = Self::three_node_chain(n, seed);
        s.nodes[2].coefficients.insert("A".into(), A_TO_X2);
        s
    }

    /// The default without the direct `A -> X2` effect.
    pub fn three_node_chain(n: usize, seed: u64) -> Self {
        let coef = |pairs: &[(&str, f64)]| -> BTreeMap<String, f64> {
            pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
        };
        SynthSpec {
            nodes: vec![
                NodeSpec {
                    name: "A".into(),
                    intercept: 0.0,
                    coefficients: BTreeMap::new(),
                    noise: Noise::Bernoulli { p: 0.5 },
                },
                NodeSpec {
                    name: "X1".into(),
                    intercept: 0.0,
                    coefficients: coef(&[("A", A_TO_X1)]),
                    noise: Noise::Gaussian { sd: 1.0 },
                },
                NodeSpec {
                    name: "X2".into(),
                    intercept: 0.0,
                    coefficients: coef(&[("X1", X1_TO_X2)]),
                    noise: Noise::Gaussian { sd: 1.0 },
                },
            ],
            target: TargetSpec {
                name: "Y".into(),
                intercept: -0.5,
                coefficients: coef(&[("X1", 1.2), ("X2", 0.8)]),
            },
            protected: "A".into(),
            n,
            seed,
        }
    }

    pub fn dag(&self) -> Result<Dag> {
        let names: Vec<&str> = self.nodes.iter().map(|n| n.name.as_str()).collect();
        let vars = variables(&names);
        let mut edges = Vec::new();
        for (j, node) in self.nodes.iter().enumerate() {
            for parent in node.coefficients.keys() {
                let i = names
                    .iter()
                    .position(|n| n == parent)
                    .ok_or_else(|| Error::UnknownVariable(parent.clone()))?;
                edges.push((i, j));
            }
        }
        Dag::new(vars, edges)
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.dag()?;
        for node in &self.nodes {
            match node.noise {
                Noise::Bernoulli { p } => {
                    if !node.coefficients.is_empty() || node.intercept != 0.0 {
                        return Err(Error::Config(format!(
                            "Bernoulli node `{}` must be a root without intercept",
                            node.name
                        )));
                    }
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::Config(format!("Bernoulli p out of range for `{}`", node.name)));
                    }
                }
                Noise::Gaussian { sd } if !(sd >= 0.0) => {
                    return Err(Error::Config(format!("negative noise sd for `{}`", node.name)));
                }
                _ => {}
            }
        }
        for parent in self.target.coefficients.keys() {
            g.index_of(parent)?;
        }
        let p = g.index_of(&self.protected)?;
        if !matches!(self.nodes[p].noise, Noise::Bernoulli { .. }) {
            return Err(Error::Config("protected attribute must be a Bernoulli node".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Samples `spec.n` rows by ancestral sampling, then the target.
pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let g = spec.dag()?;
    let order = g.topological_order()?;
    let parents = g.parent_lists();
    let d = spec.nodes.len();
    let target_coef: Vec<(usize, f64)> = spec
        .target
        .coefficients
        .iter()
        .map(|(k, &v)| Ok((g.index_of(k)?, v)))
        .collect::<Result<_>>()?;
    let mut rng = rng::stream_rng(spec.seed, rng::stream::SYNTH, 0);
    let mut data = Vec::with_capacity(spec.n * (d + 1));
    let mut row = vec![0.0; d];
    for _ in 0..spec.n {
        for &v in &order {
            let node = &spec.nodes[v];
            row[v] = match node.noise {
                Noise::Bernoulli { p } => {
                    f64::from(Bernoulli::new(p).expect("validated").sample(&mut rng))
                }
                Noise::Gaussian { sd } => {
                    let eps = if sd > 0.0 {
                        Normal::new(0.0, sd).expect("validated").sample(&mut rng)
                    } else {
                        0.0
                    };
                    let mut x = node.intercept + eps;
                    for &p in &parents[v] {
                        x += node.coefficients[&spec.nodes[p].name] * row[p];
                    }
                    x
                }
            };
        }
        let z = spec.target.intercept + target_coef.iter().map(|&(j, c)| c * row[j]).sum::<f64>();
        let y = f64::from(rng.random::<f64>() < sigmoid(z));
        data.extend_from_slice(&row);
        data.push(y);
    }
    let binary = |name: &str| ColumnSpec {
        name: name.to_string(),
        kind: ColumnKind::Binary,
        categories: vec!["0".into(), "1".into()],
    };
    let mut columns: Vec<ColumnSpec> = spec
        .nodes
        .iter()
        .map(|n| match n.noise {
            Noise::Bernoulli { .. } => binary(&n.name),
            Noise::Gaussian { .. } => ColumnSpec::continuous(&n.name),
        })
        .collect();
    columns.push(binary(&spec.target.name));
    Dataset::new(
        columns,
        Matrix::from_vec(spec.n, d + 1, data)?,
        spec.protected.clone(),
        spec.target.name.clone(),
    )
}

/// Knowledge settings of the three-node experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// No constraints.
    Low,
    /// `A` before `{X1, X2}`.
    Medium,
    /// `A` before `X1` before `X2`.
    High,
    /// No ordering, `A -> X1` forbidden.
    ForbidX1,
    /// No ordering, `A -> X2` forbidden.
    ForbidX2,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Low,
        Scenario::Medium,
        Scenario::High,
        Scenario::ForbidX1,
        Scenario::ForbidX2,
    ];

    pub fn knowledge(self) -> Knowledge {
        match self {
            Scenario::Low => Knowledge::empty(),
            Scenario::Medium => Knowledge::with_tiers(&[&["A"], &["X1", "X2"]]),
            Scenario::High => Knowledge::with_tiers(&[&["A"], &["X1"], &["X2"]]),
            Scenario::ForbidX1 => Knowledge::empty().forbid("A", "X1"),
            Scenario::ForbidX2 => Knowledge::empty().forbid("A", "X2"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Low => "low",
            Scenario::Medium => "medium",
            Scenario::High => "high",
            Scenario::ForbidX1 => "forbid-x1",
            Scenario::ForbidX2 => "forbid-x2",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown preset `{s}` (expected one of low, medium, high, forbid-x1, forbid-x2)"
                ))
            })
    }
}
