//! Domain-knowledge constraints: tiered causal ordering plus forbidden and
//! required directed edges.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::EncodingMap;
use crate::error::{Error, Result};

pub type Edge = (String, String);

/// Background knowledge over named variables. Variables outside every tier
/// are unconstrained by the ordering.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "KnowledgeFile", into = "KnowledgeFile")]
pub struct Knowledge {
    pub tiers: Vec<Vec<String>>,
    /// Per-tier flag; missing entries default to `false`.
    pub forbid_within_tier: Vec<bool>,
    pub forbidden: BTreeSet<Edge>,
    pub required: BTreeSet<Edge>,
}

/// On-disk form: edges written as `"from -> to"`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeFile {
    #[serde(default)]
    pub tiers: Vec<Vec<String>>,
    #[serde(default)]
    pub forbid_within_tier: Vec<bool>,
    #[serde(default)]
    pub forbidden: Vec<String>,
    #[serde(default)]
    pub required: Vec<String>,
}

impl TryFrom<KnowledgeFile> for Knowledge {
    type Error = Error;

    fn try_from(f: KnowledgeFile) -> Result<Self> {
        Ok(Knowledge {
            tiers: f.tiers,
            forbid_within_tier: f.forbid_within_tier,
            forbidden: f.forbidden.iter().map(|s| parse_edge(s)).collect::<Result<_>>()?,
            required: f.required.iter().map(|s| parse_edge(s)).collect::<Result<_>>()?,
        })
    }
}

impl From<Knowledge> for KnowledgeFile {
    fn from(k: Knowledge) -> Self {
        KnowledgeFile {
            tiers: k.tiers,
            forbid_within_tier: k.forbid_within_tier,
            forbidden: k.forbidden.iter().map(|(a, b)| format!("{a} -> {b}")).collect(),
            required: k.required.iter().map(|(a, b)| format!("{a} -> {b}")).collect(),
        }
    }
}

/// Parses `"from -> to"`.
pub fn parse_edge(s: &str) -> Result<Edge> {
    let (a, b) = s
        .split_once("->")
        .ok_or_else(|| Error::Config(format!("edge `{s}` is not of the form `from -> to`")))?;
    let (a, b) = (a.trim(), b.trim());
    if a.is_empty() || b.is_empty() {
        return Err(Error::Config(format!("edge `{s}` has an empty endpoint")));
    }
    Ok((a.to_string(), b.to_string()))
}

impl Knowledge {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("knowledge: {e}")))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("knowledge serializes")
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| e.context(format!("{}", path.display())))
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_tiers<S: AsRef<str>>(tiers: &[&[S]]) -> Self {
        Self {
            tiers: tiers
                .iter()
                .map(|t| t.iter().map(|s| s.as_ref().to_string()).collect())
                .collect(),
            ..Self::default()
        }
    }

    pub fn forbid(mut self, from: &str, to: &str) -> Self {
        self.forbidden.insert((from.into(), to.into()));
        self
    }

    pub fn require(mut self, from: &str, to: &str) -> Self {
        self.required.insert((from.into(), to.into()));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.tiers.iter().all(Vec::is_empty) && self.forbidden.is_empty() && self.required.is_empty()
    }

    pub fn tier_of(&self, v: &str) -> Option<usize> {
        self.tiers.iter().position(|t| t.iter().any(|x| x == v))
    }

    fn within_forbidden(&self, tier: usize) -> bool {
        self.forbid_within_tier.get(tier).copied().unwrap_or(false)
    }

    fn tier_blocks(&self, from: &str, to: &str) -> bool {
        match (self.tier_of(from), self.tier_of(to)) {
            (Some(tf), Some(tt)) => tt < tf || (tt == tf && self.within_forbidden(tf)),
            _ => false,
        }
    }

    /// Whether `from -> to` is ruled out. Required edges are never forbidden.
    pub fn is_forbidden(&self, from: &str, to: &str, variables: &[String]) -> Result<bool> {
        for v in [from, to] {
            if !variables.iter().any(|x| x == v) {
                return Err(Error::UnknownVariable(v.to_string()));
            }
        }
        let key = (from.to_string(), to.to_string());
        if self.required.contains(&key) {
            return Ok(false);
        }
        Ok(self.forbidden.contains(&key) || self.tier_blocks(from, to))
    }

    /// Every problem with this knowledge relative to `variables`.
    pub fn validate(&self, variables: &[String]) -> std::result::Result<(), Vec<String>> {
        let mut problems = Vec::new();
        let known: BTreeSet<&str> = variables.iter().map(String::as_str).collect();
        let check = |v: &str, place: &str, problems: &mut Vec<String>| {
            if !known.contains(v) {
                problems.push(format!("unknown variable `{v}` in {place}"));
            }
        };
        let mut placed: BTreeMap<&str, usize> = BTreeMap::new();
        for (t, tier) in self.tiers.iter().enumerate() {
            for v in tier {
                check(v, "tiers", &mut problems);
                if let Some(prev) = placed.insert(v.as_str(), t) {
                    problems.push(format!("variable `{v}` appears in tiers {prev} and {t}"));
                }
            }
        }
        if self.forbid_within_tier.len() > self.tiers.len() {
            problems.push(format!(
                "forbid_within_tier has {} entries for {} tiers",
                self.forbid_within_tier.len(),
                self.tiers.len()
            ));
        }
        for (a, b) in self.forbidden.iter().chain(&self.required) {
            check(a, "edge list", &mut problems);
            check(b, "edge list", &mut problems);
            if a == b {
                problems.push(format!("self-loop `{a} -> {a}`"));
            }
        }
        for e in self.forbidden.intersection(&self.required) {
            problems.push(format!("edge `{} -> {}` is both forbidden and required", e.0, e.1));
        }
        for (a, b) in &self.required {
            if self.tier_blocks(a, b) {
                problems.push(format!("required edge `{a} -> {b}` violates the tier order"));
            }
        }
        if problems.is_empty() && self.has_precedence_cycle(variables) {
            problems.push(
                "required edges form a directed cycle (possibly through the tier order)".into(),
            );
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }

    pub fn validated(self, variables: &[String]) -> Result<Self> {
        self.validate(variables).map_err(Error::Knowledge)?;
        Ok(self)
    }

    fn has_precedence_cycle(&self, variables: &[String]) -> bool {
        match Constraints::compile(self, variables) {
            Ok(c) => c.precedence_order(|_| 0).is_none(),
            Err(_) => true,
        }
    }

    /// Knowledge over the encoded columns: each constraint on an original
    /// column is copied onto all of its indicators, and indicators of one
    /// categorical column are forbidden from pointing at each other.
    pub fn replicate_for_encoding(&self, map: &EncodingMap) -> Result<Knowledge> {
        let expand_edges = |edges: &BTreeSet<Edge>| -> Result<BTreeSet<Edge>> {
            let mut out = BTreeSet::new();
            for (a, b) in edges {
                for ea in map.expand(a)? {
                    for eb in map.expand(b)? {
                        out.insert((ea.clone(), eb));
                    }
                }
            }
            Ok(out)
        };
        let mut tiers = Vec::with_capacity(self.tiers.len());
        for t in &self.tiers {
            let mut expanded = Vec::new();
            for v in t {
                expanded.extend(map.expand(v)?);
            }
            tiers.push(expanded);
        }
        let mut forbidden = expand_edges(&self.forbidden)?;
        for g in &map.groups {
            for a in &g.indicators {
                for b in &g.indicators {
                    if a != b {
                        forbidden.insert((a.clone(), b.clone()));
                    }
                }
            }
        }
        Ok(Knowledge {
            tiers,
            forbid_within_tier: self.forbid_within_tier.clone(),
            forbidden,
            required: expand_edges(&self.required)?,
        })
    }

    pub fn compile(&self, variables: &[String]) -> Result<Constraints> {
        Constraints::compile(self, variables)
    }
}

/// Knowledge resolved to variable indices for fast queries during search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraints {
    n: usize,
    tier: Vec<Option<usize>>,
    forbidden: Vec<bool>,
    required: Vec<bool>,
}

impl Constraints {
    pub fn none(n: usize) -> Self {
        Self {
            n,
            tier: vec![None; n],
            forbidden: vec![false; n * n],
            required: vec![false; n * n],
        }
    }

    pub fn compile(k: &Knowledge, variables: &[String]) -> Result<Self> {
        let n = variables.len();
        let index: BTreeMap<&str, usize> = variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let idx = |v: &str| {
            index
                .get(v)
                .copied()
                .ok_or_else(|| Error::UnknownVariable(v.to_string()))
        };
        let mut c = Self::none(n);
        for (t, vars) in k.tiers.iter().enumerate() {
            for v in vars {
                c.tier[idx(v)?] = Some(t);
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && k.tier_blocks(&variables[i], &variables[j]) {
                    c.forbidden[i * n + j] = true;
                }
            }
        }
        for (a, b) in &k.forbidden {
            let (i, j) = (idx(a)?, idx(b)?);
            c.forbidden[i * n + j] = true;
        }
        for (a, b) in &k.required {
            let (i, j) = (idx(a)?, idx(b)?);
            c.required[i * n + j] = true;
            c.forbidden[i * n + j] = false;
        }
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn is_forbidden(&self, from: usize, to: usize) -> bool {
        self.forbidden[from * self.n + to]
    }

    #[inline]
    pub fn is_required(&self, from: usize, to: usize) -> bool {
        self.required[from * self.n + to]
    }

    pub fn tier(&self, v: usize) -> Option<usize> {
        self.tier[v]
    }

    pub fn required_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n)
            .flat_map(move |i| (0..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.is_required(i, j))
    }

    /// `a` has to come before `b` in any admissible variable order.
    pub fn must_precede(&self, a: usize, b: usize) -> bool {
        match (self.tier[a], self.tier[b]) {
            (Some(ta), Some(tb)) if ta < tb => return true,
            _ => {}
        }
        self.is_required(a, b)
    }

    /// Whether `order` respects every precedence constraint.
    pub fn order_is_admissible(&self, order: &[usize]) -> bool {
        for (p, &a) in order.iter().enumerate() {
            for &b in &order[..p] {
                if self.must_precede(a, b) {
                    return false;
                }
            }
        }
        true
    }

    /// An admissible order built by repeatedly taking the available variable
    /// with the smallest `key`; `None` if the precedence relation is cyclic.
    pub fn precedence_order<K: Ord>(&self, mut key: impl FnMut(usize) -> K) -> Option<Vec<usize>> {
        let n = self.n;
        let mut indeg = vec![0usize; n];
        for a in 0..n {
            for b in 0..n {
                if a != b && self.must_precede(a, b) {
                    indeg[b] += 1;
                }
            }
        }
        let mut done = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for _ in 0..n {
            let next = (0..n)
                .filter(|&v| !done[v] && indeg[v] == 0)
                .min_by_key(|&v| (key(v), v))?;
            done[next] = true;
            order.push(next);
            for b in 0..n {
                if b != next && self.must_precede(next, b) {
                    indeg[b] -= 1;
                }
            }
        }
        Some(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{encode, ColumnSpec, Dataset};
    use crate::linalg::Matrix;

    fn vars(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tiers_forbid_backward_edges() {
        let v = vars(&["A", "X1", "X2"]);
        let k = Knowledge::with_tiers(&[&["A"], &["X1", "X2"]]);
        assert!(k.is_forbidden("X1", "A", &v).unwrap());
        assert!(!k.is_forbidden("A", "X1", &v).unwrap());
        assert!(!k.is_forbidden("X1", "X2", &v).unwrap());
        let k = Knowledge::empty().forbid("A", "X2");
        assert!(k.is_forbidden("A", "X2", &v).unwrap());
        assert!(!k.is_forbidden("X2", "A", &v).unwrap());
        assert!(matches!(
            k.is_forbidden("A", "Z", &v),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn within_tier_flag_and_required_override() {
        let v = vars(&["A", "S", "X"]);
        let mut k = Knowledge::with_tiers(&[&["A", "S"], &["X"]]);
        k.forbid_within_tier = vec![true];
        assert!(k.is_forbidden("A", "S", &v).unwrap());
        assert!(k.is_forbidden("S", "A", &v).unwrap());
        let k = Knowledge::empty().forbid("A", "X").require("A", "X");
        assert!(!k.is_forbidden("A", "X", &v).unwrap());
    }

    #[test]
    fn validate_reports_problems() {
        let v = vars(&["A", "B", "C"]);
        assert!(Knowledge::empty().validate(&v).is_ok());
        let cyc = Knowledge::empty().require("A", "B").require("B", "A");
        let errs = cyc.validate(&v).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("cycle")), "{errs:?}");
        let tier = Knowledge::with_tiers(&[&["A"], &["B"]]).require("B", "A");
        let errs = tier.validate(&v).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("tier order")), "{errs:?}");
        let both = Knowledge::empty().forbid("A", "C").require("A", "C");
        assert!(both.validate(&v).unwrap_err()[0].contains("both"));
        let unknown = Knowledge::empty().forbid("A", "Q");
        assert!(unknown.validate(&v).unwrap_err()[0].contains("unknown"));
        // B (tier 1) -> C (unlisted) -> A (tier 0) closes a cycle with the order.
        let indirect = Knowledge::with_tiers(&[&["A"], &["B"]])
            .require("B", "C")
            .require("C", "A");
        assert!(indirect.validate(&v).is_err());
    }

    #[test]
    fn parses_edges_and_round_trips_files() {
        assert_eq!(parse_edge(" A ->X2 ").unwrap(), ("A".into(), "X2".into()));
        assert!(parse_edge("A - B").is_err());
        let k = Knowledge::with_tiers(&[&["A"], &["X1"]]).forbid("A", "X2");
        let text = toml::to_string(&k).unwrap();
        assert!(text.contains("A -> X2"));
        let back: Knowledge = toml::from_str(&text).unwrap();
        assert_eq!(back, k);
    }

    fn occupation_map(levels: usize) -> EncodingMap {
        let labels: Vec<String> = (0..levels).map(|i| format!("o{i}")).collect();
        let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let cols = vec![
            ColumnSpec {
                name: "A".into(),
                kind: crate::data::ColumnKind::Binary,
                categories: vec!["0".into(), "1".into()],
            },
            ColumnSpec::categorical("occupation", &label_refs),
        ];
        let rows: Vec<Vec<f64>> = (0..levels * 2)
            .map(|i| vec![(i % 2) as f64, (i % levels) as f64])
            .collect();
        let ds = Dataset::new(cols, Matrix::from_rows(&rows).unwrap(), "A", "A").unwrap();
        encode(&ds).unwrap().1
    }

    #[test]
    fn replication_copies_constraints_onto_indicators() {
        let map = occupation_map(4);
        let k = Knowledge::empty().forbid("A", "occupation");
        let r = k.replicate_for_encoding(&map).unwrap();
        assert_eq!(r.forbidden.iter().filter(|(a, _)| a == "A").count(), 4);
        let intra = r
            .forbidden
            .iter()
            .filter(|(a, b)| a.starts_with("occupation") && b.starts_with("occupation"))
            .count();
        assert_eq!(intra, 4 * 3);

        let map3 = occupation_map(3);
        let r = Knowledge::empty().replicate_for_encoding(&map3).unwrap();
        assert_eq!(r.forbidden.len(), 6);
        let k = Knowledge::with_tiers(&[&["A"], &["occupation"]]);
        let r = k.replicate_for_encoding(&map3).unwrap();
        assert_eq!(r.tiers[1].len(), 3);
        let names: Vec<String> = map3.origin_of().into_keys().collect();
        assert!(r.validate(&names).is_ok());
    }

    #[test]
    fn identity_map_leaves_knowledge_unchanged() {
        let cols = vec![ColumnSpec::continuous("x"), ColumnSpec::continuous("y")];
        let map = EncodingMap::identity(&cols);
        let k = Knowledge::with_tiers(&[&["x"], &["y"]]).forbid("x", "y");
        assert_eq!(k.replicate_for_encoding(&map).unwrap(), k);
    }

    #[test]
    fn precedence_order_respects_tiers_and_required() {
        let v = vars(&["X", "Y", "A"]);
        let k = Knowledge::with_tiers(&[&["A"]]).require("Y", "X");
        let c = k.compile(&v).unwrap();
        let order = c.precedence_order(|i| c.tier(i).unwrap_or(0)).unwrap();
        assert!(c.order_is_admissible(&order));
        assert_eq!(order, vec![1, 0, 2]);
    }
}
