//! Bootstrap bags of DAGs and the edge-frequency entropies computed on them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::discovery::{discover_cpdag, ScoreParams, SearchParams};
use crate::error::{Error, Result};
use crate::graphs::{enumerate_mec_with, variables, Cpdag, Dag, Variables, DEFAULT_MEC_CAP};
use crate::knowledge::Knowledge;
use crate::rng;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BagParams {
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default = "default_fraction")]
    pub sample_fraction: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Unset means unlimited for up to 15 variables and 8 beyond.
    #[serde(default)]
    pub max_parents: Option<usize>,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    #[serde(default = "default_mec_cap")]
    pub mec_cap: usize,
}

fn default_bootstrap() -> usize {
    100
}
fn default_fraction() -> f64 {
    1.0
}
fn default_restarts() -> usize {
    3
}
fn default_penalty() -> f64 {
    ScoreParams::default().penalty
}
fn default_mec_cap() -> usize {
    DEFAULT_MEC_CAP
}

impl Default for BagParams {
    fn default() -> Self {
        Self {
            bootstrap: default_bootstrap(),
            sample_fraction: default_fraction(),
            restarts: default_restarts(),
            max_parents: None,
            penalty: default_penalty(),
            mec_cap: default_mec_cap(),
        }
    }
}

impl BagParams {
    pub fn validate(&self) -> Result<()> {
        if self.bootstrap == 0 {
            return Err(Error::Config("bootstrap must be at least 1".into()));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction.is_finite()) {
            return Err(Error::Config("sample_fraction must be positive".into()));
        }
        if self.mec_cap == 0 {
            return Err(Error::Config("mec_cap must be at least 1".into()));
        }
        self.search(0, 0).validate()?;
        self.score().validate()
    }

    pub fn search(&self, d: usize, seed: u64) -> SearchParams {
        let mut sp = SearchParams::for_variables(d, seed);
        sp.restarts = self.restarts;
        if self.max_parents.is_some() {
            sp.max_parents = self.max_parents;
        }
        sp
    }

    pub fn score(&self) -> ScoreParams {
        ScoreParams {
            penalty: self.penalty,
        }
    }
}

/// One bootstrap replicate: its resampled rows and discovered class.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub index: usize,
    /// Row indices into the training set, with repetition.
    pub rows: Vec<usize>,
    pub cpdag: Cpdag,
    pub dag_count: usize,
    pub score: f64,
    pub ridge_fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub dag: Dag,
    pub replicate: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniqueCpdag {
    pub cpdag: Cpdag,
    pub multiplicity: usize,
}

#[derive(Debug, Clone)]
pub struct GraphBag {
    variables: Variables,
    replicates: Vec<Replicate>,
    members: Vec<Member>,
    unique: Vec<UniqueCpdag>,
}

impl GraphBag {
    /// A bag with one replicate per DAG, none of which carry data rows.
    pub fn from_dags(dags: Vec<Dag>) -> Result<Self> {
        let first = dags.first().ok_or(Error::Empty("bag"))?;
        let vars = first.variables().clone();
        let mut replicates = Vec::new();
        let mut members = Vec::new();
        for (b, dag) in dags.into_iter().enumerate() {
            if dag.variables() != &vars {
                return Err(Error::Data("bag members disagree on variables".into()));
            }
            replicates.push(Replicate {
                index: b,
                rows: Vec::new(),
                cpdag: Cpdag::from(&dag),
                dag_count: 1,
                score: f64::NAN,
                ridge_fallbacks: 0,
            });
            members.push(Member { dag, replicate: b });
        }
        Ok(Self::assemble(vars, replicates, members))
    }

    fn assemble(variables: Variables, replicates: Vec<Replicate>, members: Vec<Member>) -> Self {
        let mut unique: Vec<UniqueCpdag> = Vec::new();
        let mut seen: HashMap<Cpdag, usize> = HashMap::new();
        for r in &replicates {
            match seen.get(&r.cpdag) {
                Some(&i) => unique[i].multiplicity += 1,
                None => {
                    seen.insert(r.cpdag.clone(), unique.len());
                    unique.push(UniqueCpdag {
                        cpdag: r.cpdag.clone(),
                        multiplicity: 1,
                    });
                }
            }
        }
        Self {
            variables,
            replicates,
            members,
            unique,
        }
    }

    pub fn variables(&self) -> &Variables {
        &self.variables
    }

    pub fn replicates(&self) -> &[Replicate] {
        &self.replicates
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn unique_cpdags(&self) -> &[UniqueCpdag] {
        &self.unique
    }

    /// Number of bootstrap replicates.
    pub fn b(&self) -> usize {
        self.replicates.len()
    }

    /// Total number of DAGs.
    pub fn m(&self) -> usize {
        self.members.len()
    }

    pub fn ridge_fallbacks(&self) -> usize {
        self.replicates.iter().map(|r| r.ridge_fallbacks).sum()
    }
}

/// Columns used for discovery: every column except the target.
pub fn discovery_columns(ds: &Dataset) -> Vec<usize> {
    (0..ds.d()).filter(|&j| j != ds.target_index()).collect()
}

fn bootstrap_rows(n: usize, fraction: f64, seed: u64, b: usize) -> Vec<usize> {
    let size = ((fraction * n as f64).ceil() as usize).max(1);
    let mut r = rng::stream_rng(seed, rng::stream::BOOTSTRAP, b as u64);
    (0..size).map(|_| r.random_range(0..n)).collect()
}

/// Runs discovery on `bootstrap` resamples of `train` and pools the
/// equivalence classes. `k` refers to the discovery columns of `train`.
pub fn bootstrap_bag<T: Real>(
    train: &Dataset,
    k: &Knowledge,
    params: &BagParams,
    seed: u64,
) -> Result<GraphBag> {
    params.validate()?;
    let cols = discovery_columns(train);
    let names: Vec<String> = cols.iter().map(|&j| train.columns()[j].name.clone()).collect();
    let vars = variables(&names);
    let constraints = k.compile(&names)?;
    let full = train.matrix::<T>();
    let n = train.n();
    if n < 2 {
        return Err(Error::Data("training set needs at least 2 rows".into()));
    }
    let d = cols.len();

    let run = |b: usize| -> Result<(Replicate, Vec<Dag>)> {
        let rows = bootstrap_rows(n, params.sample_fraction, seed, b);
        let mut data = Vec::with_capacity(rows.len() * d);
        for &r in &rows {
            let row = full.row(r);
            data.extend(cols.iter().map(|&j| row[j]));
        }
        let m = crate::linalg::Matrix::from_vec(rows.len(), d, data)?;
        let sp = params.search(d, rng::derive(seed, b as u64));
        let found = discover_cpdag(&vars, &m, &constraints, &sp, &params.score())?;
        let dags = enumerate_mec_with(&found.cpdag, &constraints, params.mec_cap).map_err(|e| match e {
            Error::MecCapExceeded { cap, .. } => Error::MecCapExceeded {
                cap,
                replicate: Some(b),
            },
            Error::NoExtension { .. } => Error::NoExtension { replicate: Some(b) },
            other => other.context(format!("replicate {b}")),
        })?;
        Ok((
            Replicate {
                index: b,
                rows,
                cpdag: found.cpdag,
                dag_count: dags.len(),
                score: found.search.score,
                ridge_fallbacks: found.search.ridge_fallbacks,
            },
            dags,
        ))
    };

    let results: Vec<Result<(Replicate, Vec<Dag>)>> =
        (0..params.bootstrap).into_par_iter().map(run).collect();
    let mut replicates = Vec::with_capacity(params.bootstrap);
    let mut members = Vec::new();
    for res in results {
        let (rep, dags) = res?;
        members.extend(dags.into_iter().map(|dag| Member {
            dag,
            replicate: rep.index,
        }));
        replicates.push(rep);
    }
    log::debug!(
        "bag: {} replicates, {} DAGs, {} unique CPDAGs",
        replicates.len(),
        members.len(),
        replicates.iter().map(|r| &r.cpdag).collect::<BTreeSet<_>>().len()
    );
    Ok(GraphBag::assemble(vars, replicates, members))
}

/// Binary entropy in nats, with `0 ln 0 = 0`.
pub fn edge_entropy<T: Real>(p: T) -> T {
    let term = |q: T| if q > T::zero() { -q * q.ln() } else { T::zero() };
    term(p) + term(T::one() - p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeStat {
    pub from: String,
    pub to: String,
    pub count: usize,
    pub p: f64,
    pub entropy: f64,
}

/// Frequencies of the directed edges seen in a bag and their normalized
/// entropy `Σ H_e / (|E| ln 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyStats {
    pub edges: Vec<EdgeStat>,
    pub edge_count: usize,
    pub normalized_entropy: f64,
}

impl EntropyStats {
    pub fn from_edge_sets<'a>(
        vars: &Variables,
        sets: impl IntoIterator<Item = &'a BTreeSet<(usize, usize)>>,
        m: usize,
    ) -> Self {
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for set in sets {
            for &e in set {
                *counts.entry(e).or_default() += 1;
            }
        }
        let edges: Vec<EdgeStat> = counts
            .into_iter()
            .map(|((a, b), count)| {
                let p = count as f64 / m as f64;
                EdgeStat {
                    from: vars[a].clone(),
                    to: vars[b].clone(),
                    count,
                    p,
                    entropy: edge_entropy(p),
                }
            })
            .collect();
        let normalized_entropy = if edges.is_empty() {
            0.0
        } else {
            let h: f64 = edges.iter().map(|e| e.entropy).sum();
            (h / (edges.len() as f64 * std::f64::consts::LN_2)).clamp(0.0, 1.0)
        };
        Self {
            edge_count: edges.len(),
            edges,
            normalized_entropy,
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
        w.write_record(["edge", "p_e", "H_e"])?;
        for e in &self.edges {
            w.write_record([
                format!("{} -> {}", e.from, e.to),
                format!("{}", e.p),
                format!("{}", e.entropy),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

pub fn total_entropy(bag: &GraphBag) -> EntropyStats {
    EntropyStats::from_edge_sets(bag.variables(), bag.members.iter().map(|m| m.dag.edges()), bag.m())
}

/// Entropy over the subgraphs induced by `a` and its descendants, with
/// frequencies taken out of the full bag size.
pub fn subgraph_entropy(bag: &GraphBag, a: &str) -> Result<EntropyStats> {
    let mut sets = Vec::with_capacity(bag.m());
    for m in &bag.members {
        let keep = m.dag.descendants_of(a)?;
        sets.push(m.dag.induced_edges(&keep));
    }
    Ok(EntropyStats::from_edge_sets(bag.variables(), &sets, bag.m()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySummary {
    pub protected: String,
    pub bootstrap: usize,
    pub unique_cpdags: usize,
    pub total_dags: usize,
    pub total: EntropyStats,
    pub subgraph: EntropyStats,
}

impl EntropySummary {
    pub fn h_g(&self) -> f64 {
        self.total.normalized_entropy
    }

    pub fn h_ga(&self) -> f64 {
        self.subgraph.normalized_entropy
    }
}

pub fn entropy_summary(bag: &GraphBag, protected: &str) -> Result<EntropySummary> {
    Ok(EntropySummary {
        protected: protected.to_string(),
        bootstrap: bag.b(),
        unique_cpdags: bag.unique_cpdags().len(),
        total_dags: bag.m(),
        total: total_entropy(bag),
        subgraph: subgraph_entropy(bag, protected)?,
    })
}
