//! DAGs and CPDAGs over an ordered variable list, with conversion between
//! them, Meek-rule closure and Markov equivalence class enumeration.

mod cpdag;
mod mec;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cpdag::{dag_to_cpdag, dag_to_cpdag_with, meek_close, meek_close_with};
pub use mec::{enumerate_mec, enumerate_mec_with, replicate_edges, DEFAULT_MEC_CAP};

/// Shared, immutable variable list.
pub type Variables = Arc<[String]>;

pub fn variables<S: AsRef<str>>(names: &[S]) -> Variables {
    names.iter().map(|s| s.as_ref().to_string()).collect()
}

fn index_of(vars: &[String], name: &str) -> Result<usize> {
    vars.iter()
        .position(|v| v == name)
        .ok_or_else(|| Error::UnknownVariable(name.to_string()))
}

/// Directed acyclic graph. Two DAGs are equal when their variable lists and
/// edge sets are identical.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Dag {
    vars: Variables,
    edges: BTreeSet<(usize, usize)>,
}

impl Dag {
    pub fn new(vars: Variables, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = vars.len();
        let edges: BTreeSet<(usize, usize)> = edges.into_iter().collect();
        for &(a, b) in &edges {
            if a >= n || b >= n {
                return Err(Error::Data(format!("edge ({a}, {b}) out of range for {n} variables")));
            }
            if a == b {
                return Err(Error::Data(format!("self-loop on `{}`", vars[a])));
            }
            if edges.contains(&(b, a)) {
                return Err(Error::Cycle);
            }
        }
        let g = Self { vars, edges };
        g.topological_order()?;
        Ok(g)
    }

    pub fn empty(vars: Variables) -> Self {
        Self {
            vars,
            edges: BTreeSet::new(),
        }
    }

    /// Builds a DAG from named edges.
    pub fn from_names<S: AsRef<str>>(names: &[S], edges: &[(&str, &str)]) -> Result<Self> {
        let vars = variables(names);
        let idx = edges
            .iter()
            .map(|(a, b)| Ok((index_of(&vars, a)?, index_of(&vars, b)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vars, idx)
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn variables(&self) -> &Variables {
        &self.vars
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        index_of(&self.vars, name)
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a, b))
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    pub fn parents(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, b)| b == v)
            .map(|&(a, _)| a)
            .collect()
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        self.edges
            .range((v, 0)..(v + 1, 0))
            .map(|&(_, b)| b)
            .collect()
    }

    /// Parent lists for every node.
    pub fn parent_lists(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n()];
        for &(a, b) in &self.edges {
            out[b].push(a);
        }
        out
    }

    /// Kahn's algorithm, always taking the lowest-indexed available node.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.n();
        let mut indeg = vec![0usize; n];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for c in self.children(v) {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err(Error::Cycle)
        }
    }

    /// `v` together with everything reachable from it.
    pub fn descendants(&self, v: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([v]);
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            for c in self.children(u) {
                if seen.insert(c) {
                    queue.push_back(c);
                }
            }
        }
        seen
    }

    pub fn descendants_of(&self, name: &str) -> Result<BTreeSet<usize>> {
        Ok(self.descendants(self.index_of(name)?))
    }

    /// Edges with both endpoints in `keep`.
    pub fn induced_edges(&self, keep: &BTreeSet<usize>) -> BTreeSet<(usize, usize)> {
        self.edges
            .iter()
            .filter(|(a, b)| keep.contains(a) && keep.contains(b))
            .copied()
            .collect()
    }

    /// Unshielded colliders `(a, b, c)` meaning `a -> b <- c`, with `a < c`.
    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        let parents = self.parent_lists();
        let mut out = BTreeSet::new();
        for (b, ps) in parents.iter().enumerate() {
            for (i, &a) in ps.iter().enumerate() {
                for &c in &ps[i + 1..] {
                    if !self.adjacent(a, c) {
                        out.insert((a.min(c), b, a.max(c)));
                    }
                }
            }
        }
        out
    }

    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect()
    }

    pub fn edge_names(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(a, b)| (self.vars[a].clone(), self.vars[b].clone()))
            .collect()
    }

    /// One `u -> v` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (a, b) in self.edge_names() {
            s.push_str(&format!("{a} -> {b}\n"));
        }
        s
    }

    pub fn parse_edge_list(vars: Variables, text: &str) -> Result<Self> {
        let (directed, undirected) = parse_lines(&vars, text)?;
        if !undirected.is_empty() {
            return Err(Error::Data("a DAG cannot contain undirected `--` edges".into()));
        }
        Self::new(vars, directed)
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self
            .edge_names()
            .into_iter()
            .map(|(a, b)| format!("{a}->{b}"))
            .collect();
        write!(f, "Dag{{{}}}", edges.join(", "))
    }
}

/// Completed partially directed acyclic graph.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Cpdag {
    vars: Variables,
    directed: BTreeSet<(usize, usize)>,
    /// Stored as `(min, max)`.
    undirected: BTreeSet<(usize, usize)>,
}

impl Cpdag {
    pub fn new(
        vars: Variables,
        directed: impl IntoIterator<Item = (usize, usize)>,
        undirected: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = vars.len();
        let directed: BTreeSet<_> = directed.into_iter().collect();
        let undirected: BTreeSet<_> = undirected
            .into_iter()
            .map(|(a, b): (usize, usize)| (a.min(b), a.max(b)))
            .collect();
        for &(a, b) in directed.iter().chain(&undirected) {
            if a >= n || b >= n || a == b {
                return Err(Error::Data(format!("invalid edge ({a}, {b})")));
            }
        }
        for &(a, b) in &directed {
            if directed.contains(&(b, a)) || undirected.contains(&(a.min(b), a.max(b))) {
                return Err(Error::Data(format!(
                    "pair `{}`/`{}` carries more than one edge",
                    vars[a], vars[b]
                )));
            }
        }
        Ok(Self {
            vars,
            directed,
            undirected,
        })
    }

    pub fn from_names<S: AsRef<str>>(
        names: &[S],
        directed: &[(&str, &str)],
        undirected: &[(&str, &str)],
    ) -> Result<Self> {
        let vars = variables(names);
        let d = directed
            .iter()
            .map(|(a, b)| Ok((index_of(&vars, a)?, index_of(&vars, b)?)))
            .collect::<Result<Vec<_>>>()?;
        let u = undirected
            .iter()
            .map(|(a, b)| Ok((index_of(&vars, a)?, index_of(&vars, b)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vars, d, u)
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn variables(&self) -> &Variables {
        &self.vars
    }

    pub fn directed(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    pub fn undirected(&self) -> &BTreeSet<(usize, usize)> {
        &self.undirected
    }

    pub fn is_fully_directed(&self) -> bool {
        self.undirected.is_empty()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.directed.contains(&(a, b))
            || self.directed.contains(&(b, a))
            || self.undirected.contains(&(a.min(b), a.max(b)))
    }

    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.directed
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .chain(self.undirected.iter().copied())
            .collect()
    }

    /// Unshielded colliders among the directed edges.
    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut parents = vec![Vec::new(); self.n()];
        for &(a, b) in &self.directed {
            parents[b].push(a);
        }
        let mut out = BTreeSet::new();
        for (b, ps) in parents.iter().enumerate() {
            for (i, &a) in ps.iter().enumerate() {
                for &c in &ps[i + 1..] {
                    if !self.adjacent(a, c) {
                        out.insert((a.min(c), b, a.max(c)));
                    }
                }
            }
        }
        out
    }

    /// The DAG, if no edge is left undirected.
    pub fn to_dag(&self) -> Result<Dag> {
        if !self.undirected.is_empty() {
            return Err(Error::Data("CPDAG still has undirected edges".into()));
        }
        Dag::new(self.vars.clone(), self.directed.iter().copied())
    }

    /// `u -> v` lines followed by `u -- v` lines.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for &(a, b) in &self.directed {
            s.push_str(&format!("{} -> {}\n", self.vars[a], self.vars[b]));
        }
        for &(a, b) in &self.undirected {
            s.push_str(&format!("{} -- {}\n", self.vars[a], self.vars[b]));
        }
        s
    }

    pub fn parse_edge_list(vars: Variables, text: &str) -> Result<Self> {
        let (d, u) = parse_lines(&vars, text)?;
        Self::new(vars, d, u)
    }
}

impl From<&Dag> for Cpdag {
    /// The DAG viewed as a pattern with every edge directed.
    fn from(g: &Dag) -> Self {
        Cpdag {
            vars: g.vars.clone(),
            directed: g.edges.clone(),
            undirected: BTreeSet::new(),
        }
    }
}

impl fmt::Debug for Cpdag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cpdag{{{}}}", self.to_edge_list().trim_end().replace('\n', ", "))
    }
}

type EdgeSets = (Vec<(usize, usize)>, Vec<(usize, usize)>);

fn parse_lines(vars: &[String], text: &str) -> Result<EdgeSets> {
    let mut directed = Vec::new();
    let mut undirected = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (parts, is_directed) = if let Some(p) = line.split_once("->") {
            (p, true)
        } else if let Some(p) = line.split_once("--") {
            (p, false)
        } else {
            return Err(Error::Data(format!(
                "line {}: expected `u -> v` or `u -- v`, got `{line}`",
                lineno + 1
            )));
        };
        let e = (index_of(vars, parts.0.trim())?, index_of(vars, parts.1.trim())?);
        if is_directed {
            directed.push(e);
        } else {
            undirected.push(e);
        }
    }
    Ok((directed, undirected))
}

/// JSON form shared by [`Dag`] and [`Cpdag`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub variables: Vec<String>,
    pub directed: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undirected: Vec<[String; 2]>,
}

fn name_pairs(vars: &[String], e: &BTreeSet<(usize, usize)>) -> Vec<[String; 2]> {
    e.iter()
        .map(|&(a, b)| [vars[a].clone(), vars[b].clone()])
        .collect()
}

fn index_pairs(vars: &[String], e: &[[String; 2]]) -> Result<Vec<(usize, usize)>> {
    e.iter()
        .map(|[a, b]| Ok((index_of(vars, a)?, index_of(vars, b)?)))
        .collect()
}

impl From<Dag> for GraphJson {
    fn from(g: Dag) -> Self {
        GraphJson {
            directed: name_pairs(&g.vars, &g.edges),
            variables: g.vars.to_vec(),
            undirected: Vec::new(),
        }
    }
}

impl TryFrom<GraphJson> for Dag {
    type Error = Error;
    fn try_from(j: GraphJson) -> Result<Self> {
        if !j.undirected.is_empty() {
            return Err(Error::Data("a DAG cannot contain undirected edges".into()));
        }
        let vars = variables(&j.variables);
        let e = index_pairs(&vars, &j.directed)?;
        Dag::new(vars, e)
    }
}

impl From<Cpdag> for GraphJson {
    fn from(c: Cpdag) -> Self {
        GraphJson {
            directed: name_pairs(&c.vars, &c.directed),
            undirected: name_pairs(&c.vars, &c.undirected),
            variables: c.vars.to_vec(),
        }
    }
}

impl TryFrom<GraphJson> for Cpdag {
    type Error = Error;
    fn try_from(j: GraphJson) -> Result<Self> {
        let vars = variables(&j.variables);
        let d = index_pairs(&vars, &j.directed)?;
        let u = index_pairs(&vars, &j.undirected)?;
        Cpdag::new(vars, d, u)
    }
}
