use std::collections::BTreeMap;

use super::{Cpdag, Dag, Variables};
use crate::error::{Error, Result};
use crate::knowledge::{Constraints, Knowledge};

const NONE: u8 = 0;
const ARROW: u8 = 1;
const LINE: u8 = 2;

/// Mutable adjacency-matrix form of a partially directed graph.
/// `m[a][b] == ARROW` means `a -> b`; `LINE` on both sides means `a -- b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Pattern {
    n: usize,
    m: Vec<u8>,
}

impl Pattern {
    pub(crate) fn from_cpdag(c: &Cpdag) -> Self {
        let n = c.n();
        let mut m = vec![NONE; n * n];
        for &(a, b) in c.directed() {
            m[a * n + b] = ARROW;
        }
        for &(a, b) in c.undirected() {
            m[a * n + b] = LINE;
            m[b * n + a] = LINE;
        }
        Self { n, m }
    }

    pub(crate) fn to_cpdag(&self, vars: &Variables) -> Cpdag {
        let mut d = Vec::new();
        let mut u = Vec::new();
        for a in 0..self.n {
            for b in 0..self.n {
                match self.m[a * self.n + b] {
                    ARROW => d.push((a, b)),
                    LINE if a < b => u.push((a, b)),
                    _ => {}
                }
            }
        }
        Cpdag::new(vars.clone(), d, u).expect("pattern holds one mark per pair")
    }

    #[inline]
    pub(crate) fn is_dir(&self, a: usize, b: usize) -> bool {
        self.m[a * self.n + b] == ARROW
    }

    #[inline]
    pub(crate) fn is_und(&self, a: usize, b: usize) -> bool {
        self.m[a * self.n + b] == LINE
    }

    #[inline]
    pub(crate) fn adj(&self, a: usize, b: usize) -> bool {
        self.m[a * self.n + b] != NONE || self.m[b * self.n + a] != NONE
    }

    pub(crate) fn first_undirected(&self) -> Option<(usize, usize)> {
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                if self.is_und(a, b) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    pub(crate) fn has_directed_cycle(&self) -> bool {
        let n = self.n;
        let mut indeg = vec![0usize; n];
        for a in 0..n {
            for b in 0..n {
                if self.is_dir(a, b) {
                    indeg[b] += 1;
                }
            }
        }
        let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for b in 0..n {
                if self.is_dir(v, b) {
                    indeg[b] -= 1;
                    if indeg[b] == 0 {
                        stack.push(b);
                    }
                }
            }
        }
        seen != n
    }

    /// Orients `a -> b`. Returns whether anything changed.
    pub(crate) fn orient(
        &mut self,
        a: usize,
        b: usize,
        k: &Constraints,
        vars: &[String],
        why: &str,
    ) -> Result<bool> {
        if self.is_dir(a, b) {
            return Ok(false);
        }
        let err = |reason: String| Error::Orientation {
            from: vars[a].clone(),
            to: vars[b].clone(),
            reason,
        };
        if self.is_dir(b, a) {
            return Err(err(format!("{why} conflicts with the existing reverse edge")));
        }
        if !self.is_und(a, b) {
            return Err(err(format!("{why} on a non-adjacent pair")));
        }
        if k.is_forbidden(a, b) {
            return Err(err(format!("{why} demands a forbidden direction")));
        }
        self.m[a * self.n + b] = ARROW;
        self.m[b * self.n + a] = NONE;
        Ok(true)
    }
}

/// Closes `p` under knowledge orientations and Meek rules R1-R4.
pub(crate) fn close_pattern(p: &mut Pattern, k: &Constraints, vars: &[String]) -> Result<()> {
    let n = p.n;
    for a in 0..n {
        for b in 0..n {
            if p.is_dir(a, b) && k.is_forbidden(a, b) {
                return Err(Error::Orientation {
                    from: vars[a].clone(),
                    to: vars[b].clone(),
                    reason: "directed edge is forbidden by knowledge".into(),
                });
            }
        }
    }
    loop {
        let mut changed = false;
        for a in 0..n {
            for b in 0..n {
                if a == b || !p.is_und(a, b) {
                    continue;
                }
                if k.is_required(a, b) {
                    changed |= p.orient(a, b, k, vars, "required edge")?;
                } else if k.is_forbidden(b, a) {
                    if k.is_forbidden(a, b) {
                        return Err(Error::Orientation {
                            from: vars[a].clone(),
                            to: vars[b].clone(),
                            reason: "both directions of an adjacent pair are forbidden".into(),
                        });
                    }
                    changed |= p.orient(a, b, k, vars, "knowledge")?;
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if a == b || !p.is_und(a, b) {
                    continue;
                }
                if meek_rule_fires(p, a, b) {
                    changed |= p.orient(a, b, k, vars, "Meek rule")?;
                }
            }
        }
        if !changed {
            return Ok(());
        }
    }
}

/// Whether some Meek rule orients the undirected edge `a -- b` as `a -> b`.
fn meek_rule_fires(p: &Pattern, a: usize, b: usize) -> bool {
    let n = p.n;
    // R1: c -> a -- b, c and b nonadjacent.
    if (0..n).any(|c| c != b && p.is_dir(c, a) && !p.adj(c, b)) {
        return true;
    }
    // R2: a -> c -> b.
    if (0..n).any(|c| p.is_dir(a, c) && p.is_dir(c, b)) {
        return true;
    }
    // R3: a -- c -> b and a -- d -> b with c, d nonadjacent.
    let cs: Vec<usize> = (0..n)
        .filter(|&c| c != b && p.is_und(a, c) && p.is_dir(c, b))
        .collect();
    for (i, &c) in cs.iter().enumerate() {
        if cs[i + 1..].iter().any(|&d| !p.adj(c, d)) {
            return true;
        }
    }
    // R4: d -> c -> b with a adjacent to c and d, and d, b nonadjacent.
    for c in 0..n {
        if c == a || !p.is_dir(c, b) || !p.adj(a, c) {
            continue;
        }
        if (0..n).any(|d| d != a && d != b && p.is_dir(d, c) && p.adj(a, d) && !p.adj(d, b)) {
            return true;
        }
    }
    false
}

/// Fixed point of knowledge orientations and Meek rules R1-R4.
pub fn meek_close(c: &Cpdag, k: &Knowledge) -> Result<Cpdag> {
    meek_close_with(c, &k.compile(c.variables())?)
}

pub fn meek_close_with(c: &Cpdag, k: &Constraints) -> Result<Cpdag> {
    let mut p = Pattern::from_cpdag(c);
    close_pattern(&mut p, k, c.variables())?;
    Ok(p.to_cpdag(c.variables()))
}

/// Markov equivalence class of `g` as a CPDAG, refined by knowledge.
pub fn dag_to_cpdag(g: &Dag, k: &Knowledge) -> Result<Cpdag> {
    dag_to_cpdag_with(g, &k.compile(g.variables())?)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Label {
    Unknown,
    Compelled,
    Reversible,
}

/// Chickering's edge ordering and compelled-edge labeling, followed by
/// knowledge orientations and Meek closure.
pub fn dag_to_cpdag_with(g: &Dag, k: &Constraints) -> Result<Cpdag> {
    let order = g.topological_order()?;
    let mut pos = vec![0usize; g.n()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let parents = g.parent_lists();

    // Edges sorted by (position of head ascending, position of tail descending).
    let mut ordered: Vec<(usize, usize)> = Vec::with_capacity(g.edges().len());
    for &y in &order {
        let mut ps = parents[y].clone();
        ps.sort_by_key(|&x| std::cmp::Reverse(pos[x]));
        ordered.extend(ps.into_iter().map(|x| (x, y)));
    }
    let mut label: BTreeMap<(usize, usize), Label> =
        ordered.iter().map(|&e| (e, Label::Unknown)).collect();

    'outer: while let Some(&(x, y)) = ordered.iter().find(|e| label[e] == Label::Unknown) {
        for &w in &parents[x] {
            if label[&(w, x)] != Label::Compelled {
                continue;
            }
            if !g.has_edge(w, y) {
                for &p in &parents[y] {
                    label.insert((p, y), Label::Compelled);
                }
                continue 'outer;
            }
            label.insert((w, y), Label::Compelled);
        }
        let compelled = parents[y]
            .iter()
            .any(|&z| z != x && !g.has_edge(z, x));
        let new = if compelled {
            Label::Compelled
        } else {
            Label::Reversible
        };
        for &p in &parents[y] {
            if label[&(p, y)] == Label::Unknown {
                label.insert((p, y), new);
            }
        }
    }

    let directed = label
        .iter()
        .filter(|(_, &l)| l == Label::Compelled)
        .map(|(&e, _)| e);
    let undirected = label
        .iter()
        .filter(|(_, &l)| l == Label::Reversible)
        .map(|(&e, _)| e);
    let c = Cpdag::new(g.variables().clone(), directed, undirected)?;
    meek_close_with(&c, k)
}
