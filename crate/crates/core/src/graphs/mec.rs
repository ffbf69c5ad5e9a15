use std::collections::BTreeSet;

use super::cpdag::{close_pattern, Pattern};
use super::{variables, Cpdag, Dag};
use crate::data::EncodingMap;
use crate::error::{Error, Result};
use crate::knowledge::{Constraints, Knowledge};

/// Default upper bound on the number of DAGs enumerated per CPDAG.
pub const DEFAULT_MEC_CAP: usize = 100_000;

/// All knowledge-consistent DAGs in the equivalence class of `c`, sorted.
pub fn enumerate_mec(c: &Cpdag, k: &Knowledge, cap: usize) -> Result<Vec<Dag>> {
    enumerate_mec_with(c, &k.compile(c.variables())?, cap)
}

pub fn enumerate_mec_with(c: &Cpdag, k: &Constraints, cap: usize) -> Result<Vec<Dag>> {
    let cap = cap.max(1);
    let mut found = BTreeSet::new();
    let vstructs = c.v_structures();
    let mut start = Pattern::from_cpdag(c);
    if close_pattern(&mut start, k, c.variables()).is_ok() && !start.has_directed_cycle() {
        extend(&start, c, k, &vstructs, cap, &mut found)?;
    }
    if found.is_empty() {
        return Err(Error::NoExtension { replicate: None });
    }
    Ok(found.into_iter().collect())
}

/// Orients the lowest-indexed undirected edge both ways, closes, recurses.
fn extend(
    p: &Pattern,
    c: &Cpdag,
    k: &Constraints,
    vstructs: &BTreeSet<(usize, usize, usize)>,
    cap: usize,
    found: &mut BTreeSet<Dag>,
) -> Result<()> {
    let vars = c.variables();
    let Some((a, b)) = p.first_undirected() else {
        let cand = p.to_cpdag(vars);
        if let Ok(g) = Dag::new(vars.clone(), cand.directed().iter().copied()) {
            if is_consistent(&g, c, k, vstructs) {
                found.insert(g);
                if found.len() > cap {
                    return Err(Error::MecCapExceeded {
                        cap,
                        replicate: None,
                    });
                }
            }
        }
        return Ok(());
    };
    for (x, y) in [(a, b), (b, a)] {
        let mut q = p.clone();
        if q.orient(x, y, k, vars, "branch").is_err() {
            continue;
        }
        if close_pattern(&mut q, k, vars).is_err() || q.has_directed_cycle() {
            continue;
        }
        extend(&q, c, k, vstructs, cap, found)?;
    }
    Ok(())
}

fn is_consistent(
    g: &Dag,
    c: &Cpdag,
    k: &Constraints,
    vstructs: &BTreeSet<(usize, usize, usize)>,
) -> bool {
    g.skeleton() == c.skeleton()
        && c.directed().is_subset(g.edges())
        && &g.v_structures() == vstructs
        && g.edges().iter().all(|&(a, b)| !k.is_forbidden(a, b))
        && k
            .required_edges()
            .all(|(a, b)| !g.adjacent(a, b) || g.has_edge(a, b))
}

/// Rewrites a DAG over original columns into one over encoded columns: every
/// edge `u -> v` becomes all `indicator(u) -> indicator(v)` edges.
pub fn replicate_edges(g: &Dag, map: &EncodingMap) -> Result<Dag> {
    let mut names = Vec::new();
    let mut groups = Vec::with_capacity(g.n());
    for v in g.variables().iter() {
        let expanded = map.expand(v)?;
        let start = names.len();
        names.extend(expanded);
        groups.push(start..names.len());
    }
    let vars = variables(&names);
    let mut edges = Vec::new();
    for &(a, b) in g.edges() {
        for ea in groups[a].clone() {
            for eb in groups[b].clone() {
                edges.push((ea, eb));
            }
        }
    }
    Dag::new(vars, edges)
}
