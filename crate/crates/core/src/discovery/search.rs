//! Permutation search in the style of BOSS: each variable is moved to the
//! admissible position that maximizes the total score, until a full pass
//! brings no improvement.

use std::cell::RefCell;
use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::score::{GaussianBic, ScoreParams};
use crate::error::{Error, Result};
use crate::graphs::{dag_to_cpdag_with, Cpdag, Dag, Variables};
use crate::knowledge::Constraints;
use crate::linalg::Matrix;
use crate::rng;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchParams {
    pub restarts: usize,
    /// `None` means unlimited.
    pub max_parents: Option<usize>,
    pub seed: u64,
}

impl SearchParams {
    /// Three restarts; parent sets unlimited up to 15 variables, else 8.
    pub fn for_variables(d: usize, seed: u64) -> Self {
        Self {
            restarts: 3,
            max_parents: if d <= 15 { None } else { Some(8) },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.max_parents == Some(0) {
            return Err(Error::Config("max_parents must be at least 1 when set".into()));
        }
        Ok(())
    }
}

/// Forward-backward parent selection for one node among `candidates`.
/// Forbidden candidates are dropped and required ones pre-seeded; the
/// backward phase never removes a required parent. Ties go to the lowest
/// variable index. Returns the sorted parent set and its score.
pub fn grow_shrink_parents<T: Real>(
    score: &GaussianBic<T>,
    node: usize,
    candidates: &[usize],
    k: &Constraints,
    max_parents: Option<usize>,
) -> (Vec<usize>, T) {
    let mut allowed: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&c| c != node && !k.is_forbidden(c, node))
        .collect();
    allowed.sort_unstable();
    allowed.dedup();
    let mut current: Vec<usize> = allowed
        .iter()
        .copied()
        .filter(|&c| k.is_required(c, node))
        .collect();
    let mut best = score.score(node, &current);
    let limit = max_parents.unwrap_or(usize::MAX);
    // OLS with intercept needs n > |parents| + 1.
    let rank_limit = score.n().saturating_sub(2);

    loop {
        if current.len() >= limit || current.len() >= rank_limit {
            break;
        }
        let mut pick: Option<(usize, T)> = None;
        for &c in &allowed {
            if current.contains(&c) {
                continue;
            }
            let mut trial = current.clone();
            trial.push(c);
            let s = score.score(node, &trial);
            if pick.is_none_or(|(_, ps)| s > ps) {
                pick = Some((c, s));
            }
        }
        match pick {
            Some((c, s)) if s > best => {
                current.push(c);
                current.sort_unstable();
                best = s;
            }
            _ => break,
        }
    }
    loop {
        let mut pick: Option<(usize, T)> = None;
        for &c in &current {
            if k.is_required(c, node) {
                continue;
            }
            let trial: Vec<usize> = current.iter().copied().filter(|&x| x != c).collect();
            let s = score.score(node, &trial);
            if pick.is_none_or(|(_, ps)| s > ps) {
                pick = Some((c, s));
            }
        }
        match pick {
            Some((c, s)) if s > best => {
                current.retain(|&x| x != c);
                best = s;
            }
            _ => break,
        }
    }
    (current, best)
}

/// Outcome of a permutation search.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub dag: Dag,
    pub order: Vec<usize>,
    pub score: f64,
    /// Rank-deficient parent designs resolved by ridge regularization.
    pub ridge_fallbacks: usize,
}

struct Search<'a, T> {
    score: GaussianBic<T>,
    k: &'a Constraints,
    max_parents: Option<usize>,
    memo: RefCell<HashMap<(usize, Vec<u64>), (Vec<usize>, T)>>,
}

impl<'a, T: Real> Search<'a, T> {
    fn best_parents(&self, node: usize, candidates: &[usize]) -> (Vec<usize>, T) {
        let words = self.score.dim().div_ceil(64).max(1);
        let mut key = vec![0u64; words];
        for &c in candidates {
            key[c / 64] |= 1 << (c % 64);
        }
        if let Some(hit) = self.memo.borrow().get(&(node, key.clone())) {
            return hit.clone();
        }
        let out = grow_shrink_parents(&self.score, node, candidates, self.k, self.max_parents);
        self.memo.borrow_mut().insert((node, key), out.clone());
        out
    }

    fn total(&self, order: &[usize]) -> T {
        (0..order.len())
            .map(|p| self.best_parents(order[p], &order[..p]).1)
            .sum()
    }

    /// One improvement pass; returns whether any move was accepted.
    fn pass(&self, order: &mut Vec<usize>, total: &mut T) -> bool {
        let d = order.len();
        let mut improved = false;
        for v in 0..d {
            let base: Vec<usize> = order.iter().copied().filter(|&x| x != v).collect();
            // Scores of each base node without v among its predecessors and
            // with v inserted before it.
            let mut without = Vec::with_capacity(d - 1);
            let mut with = Vec::with_capacity(d - 1);
            let mut cand = Vec::with_capacity(d);
            for (t, &u) in base.iter().enumerate() {
                cand.clear();
                cand.extend_from_slice(&base[..t]);
                without.push(self.best_parents(u, &cand).1);
                cand.push(v);
                with.push(self.best_parents(u, &cand).1);
            }
            // suffix_with[j] = Σ_{t >= j} with[t]
            let mut suffix_with = vec![T::zero(); d];
            for t in (0..d - 1).rev() {
                suffix_with[t] = suffix_with[t + 1] + with[t];
            }
            let mut prefix_without = T::zero();
            let mut best: Option<(usize, T)> = None;
            for j in 0..d {
                if j > 0 {
                    prefix_without = prefix_without + without[j - 1];
                }
                let admissible = base[..j].iter().all(|&u| !self.k.must_precede(v, u))
                    && base[j..].iter().all(|&u| !self.k.must_precede(u, v));
                if !admissible {
                    continue;
                }
                let s = prefix_without + suffix_with[j] + self.best_parents(v, &base[..j]).1;
                if best.is_none_or(|(_, bs)| s > bs) {
                    best = Some((j, s));
                }
            }
            if let Some((j, s)) = best {
                let tol = T::of(1e-9).max(T::epsilon() * T::of(100.0)) * (T::one() + total.abs());
                if s > *total + tol {
                    let mut next = base;
                    next.insert(j, v);
                    *order = next;
                    *total = s;
                    improved = true;
                }
            }
        }
        improved
    }
}

/// Best-order search over admissible variable permutations.
pub fn boss_search<T: Real>(
    vars: &Variables,
    data: &Matrix<T>,
    k: &Constraints,
    sp: &SearchParams,
    scp: &ScoreParams,
) -> Result<SearchOutcome> {
    sp.validate()?;
    scp.validate()?;
    let d = vars.len();
    if data.ncols() != d || k.len() != d {
        return Err(Error::LengthMismatch {
            left: data.ncols(),
            right: d,
        });
    }
    let search = Search {
        score: GaussianBic::new(data, scp),
        k,
        max_parents: sp.max_parents,
        memo: RefCell::new(HashMap::new()),
    };

    let mut best: Option<(Vec<usize>, T)> = None;
    for restart in 0..sp.restarts {
        let start = if restart == 0 {
            k.precedence_order(|v| k.tier(v).unwrap_or(0))
        } else {
            let mut r = rng::stream_rng(sp.seed, rng::stream::SEARCH, restart as u64);
            let keys: Vec<u64> = (0..d).map(|_| r.random()).collect();
            k.precedence_order(|v| keys[v])
        };
        let mut order = start.ok_or_else(|| {
            Error::Knowledge(vec!["precedence constraints are cyclic".into()])
        })?;
        let mut total = search.total(&order);
        while search.pass(&mut order, &mut total) {}
        total = search.total(&order);
        if best.as_ref().is_none_or(|(_, b)| total > *b) {
            best = Some((order, total));
        }
    }
    let (order, total) = best.expect("restarts >= 1");
    let mut edges = Vec::new();
    for (p, &v) in order.iter().enumerate() {
        let (parents, _) = search.best_parents(v, &order[..p]);
        edges.extend(parents.into_iter().map(|u| (u, v)));
    }
    Ok(SearchOutcome {
        dag: Dag::new(vars.clone(), edges)?,
        order,
        score: total.to_f64_lossy(),
        ridge_fallbacks: search.score.ridge_fallbacks(),
    })
}

/// Search result together with its equivalence class.
#[derive(Debug, Clone)]
pub struct Discovered {
    pub cpdag: Cpdag,
    pub search: SearchOutcome,
}

pub fn discover_cpdag<T: Real>(
    vars: &Variables,
    data: &Matrix<T>,
    k: &Constraints,
    sp: &SearchParams,
    scp: &ScoreParams,
) -> Result<Discovered> {
    let search = boss_search(vars, data, k, sp, scp)?;
    let cpdag = dag_to_cpdag_with(&search.dag, k)?;
    Ok(Discovered { cpdag, search })
}
