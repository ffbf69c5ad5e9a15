//! Run configuration: a TOML file whose keys can be overridden by flags.

use std::path::{Path, PathBuf};

use cfgu::audit::{AuditParams, ScorerSpec};
use cfgu::data::{load_csv, ColumnSpec, Dataset};
use cfgu::ensemble::BagParams;
use cfgu::knowledge::{parse_edge, Knowledge};
use cfgu::synth::{generate, Scenario, SynthSpec};
use cfgu::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    pub protected: String,
    pub target: String,
    pub columns: Vec<ColumnSpec>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_test_fraction() -> f64 {
    0.2
}

/// Synthetic data in place of a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    #[serde(default)]
    pub preset: Option<Scenario>,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Drop the direct `A -> X2` effect.
    #[serde(default)]
    pub chain_only: bool,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_n() -> usize {
    1000
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            preset: None,
            n: default_n(),
            chain_only: false,
            test_fraction: default_test_fraction(),
        }
    }
}

impl SynthSection {
    pub fn spec(&self, seed: u64) -> SynthSpec {
        if self.chain_only {
            SynthSpec::three_node_chain(self.n, seed)
        } else {
            SynthSpec::three_node(self.n, seed)
        }
    }
}

/// Knowledge given inline or by reference to a TOML file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tiers: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forbid_within_tier: Vec<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forbidden: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required: Vec<String>,
}

impl KnowledgeSection {
    fn has_inline(&self) -> bool {
        !(self.tiers.is_empty()
            && self.forbid_within_tier.is_empty()
            && self.forbidden.is_empty()
            && self.required.is_empty())
    }

    pub fn resolve(&self) -> Result<Knowledge> {
        if let Some(file) = &self.file {
            if self.has_inline() {
                return Err(Error::Config(
                    "[knowledge] sets both `file` and inline constraints".into(),
                ));
            }
            return Knowledge::load(file);
        }
        Ok(Knowledge {
            tiers: self.tiers.clone(),
            forbid_within_tier: self.forbid_within_tier.clone(),
            forbidden: self.forbidden.iter().map(|e| parse_edge(e)).collect::<Result<_>>()?,
            required: self.required.iter().map(|e| parse_edge(e)).collect::<Result<_>>()?,
        })
    }

    pub fn inline(k: &Knowledge) -> Self {
        let edge = |(a, b): &(String, String)| format!("{a} -> {b}");
        Self {
            file: None,
            tiers: k.tiers.clone(),
            forbid_within_tier: k.forbid_within_tier.clone(),
            forbidden: k.forbidden.iter().map(edge).collect(),
            required: k.required.iter().map(edge).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub individual_limit: Option<usize>,
    #[serde(default)]
    pub report_individuals: bool,
    #[serde(default = "default_scorers")]
    pub scorers: Vec<ScorerSpec>,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_scorers() -> Vec<ScorerSpec> {
    vec![ScorerSpec::builtin("lr")]
}

impl Default for AuditSection {
    fn default() -> Self {
        Self {
            alpha: default_alpha(),
            individual_limit: None,
            report_individuals: false,
            scorers: default_scorers(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSection>,
    #[serde(default)]
    pub knowledge: KnowledgeSection,
    #[serde(default)]
    pub discovery: BagParams,
    #[serde(default)]
    pub audit: AuditSection,
}


/// Training and test sets with the original row numbers of the test rows.
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub test_ids: Vec<usize>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a config file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| e.context(path.display().to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = &mut cfg.data {
            rebase(&mut d.path);
        }
        if let Some(f) = &mut cfg.knowledge.file {
            rebase(f);
        }
        if let Some(o) = &mut cfg.out {
            rebase(o);
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Switches to a synthetic preset: its data and its knowledge.
    pub fn apply_preset(&mut self, preset: Scenario) {
        let mut synth = self.synth.take().unwrap_or_default();
        synth.preset = Some(preset);
        self.synth = Some(synth);
        self.data = None;
        self.knowledge = KnowledgeSection::inline(&preset.knowledge());
    }

    /// Checks everything that can be checked without touching data.
    pub fn validate(&self) -> Result<()> {
        match (&self.data, &self.synth) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("set either [data] or [synth], not both".into()))
            }
            (None, None) => {
                return Err(Error::Config(
                    "no input: add a [data] section, a [synth] section or pass --preset".into(),
                ))
            }
            _ => {}
        }
        let fraction = match (&self.data, &self.synth) {
            (Some(d), _) => d.test_fraction,
            (_, Some(s)) => s.test_fraction,
            _ => unreachable!(),
        };
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::Config("test_fraction must lie in (0, 1)".into()));
        }
        if let Some(s) = &self.synth {
            if s.n < 4 {
                return Err(Error::Config("synthetic n must be at least 4".into()));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.audit_params().validate()?;
        if self.audit.scorers.is_empty() {
            return Err(Error::Config("at least one scorer is required".into()));
        }
        for s in &self.audit.scorers {
            s.validate()?;
        }
        self.knowledge.resolve()?;
        Ok(())
    }

    pub fn audit_params(&self) -> AuditParams {
        AuditParams {
            bag: self.discovery.clone(),
            alpha: self.audit.alpha,
            individual_limit: self.audit.individual_limit,
            report_individuals: self.audit.report_individuals,
        }
    }

    pub fn bag_params(&self) -> &BagParams {
        &self.discovery
    }

    pub fn dataset(&self) -> Result<Dataset> {
        match (&self.data, &self.synth) {
            (Some(d), _) => load_csv(&d.path, &d.columns, &d.protected, &d.target),
            (_, Some(s)) => generate(&s.spec(self.seed)),
            _ => Err(Error::Config("no input configured".into())),
        }
    }

    fn test_fraction(&self) -> f64 {
        match (&self.data, &self.synth) {
            (Some(d), _) => d.test_fraction,
            (_, Some(s)) => s.test_fraction,
            _ => default_test_fraction(),
        }
    }

    pub fn split(&self, ds: &Dataset) -> Result<Split> {
        let s = cfgu::data::split_indices(ds, self.test_fraction(), self.seed)?;
        Ok(Split {
            train: ds.select_rows(&s.train),
            test: ds.select_rows(&s.test),
            test_ids: s.test,
        })
    }

    /// The config as echoed into reports: run-location keys are dropped so
    /// that the echo only reflects what determines the results.
    pub fn echo(&self) -> serde_json::Value {
        let mut c = self.clone();
        c.out = None;
        c.workers = None;
        serde_json::to_value(&c).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_parses() {
        let cfg = RunConfig::from_toml_str(
            r#"
            seed = 7
            precision = "f32"

            [data]
            path = "d.csv"
            protected = "A"
            target = "Y"
            columns = [
              { name = "A", kind = "binary" },
              { name = "X1", kind = "continuous" },
              { name = "Y", kind = "binary" },
            ]

            [knowledge]
            tiers = [["A"], ["X1"]]
            forbidden = ["X1 -> A"]

            [discovery]
            bootstrap = 10
            penalty = 1.5

            [audit]
            alpha = 0.1

            [[audit.scorers]]
            kind = "builtin_logreg"
            name = "lr"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.precision, Precision::F32);
        assert_eq!(cfg.discovery.bootstrap, 10);
        assert_eq!(cfg.discovery.restarts, 3);
        assert_eq!(cfg.knowledge.resolve().unwrap().tiers.len(), 2);
        cfg.validate().unwrap();
        let back = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_and_missing_input_are_rejected() {
        assert!(RunConfig::from_toml_str("sed = 1").is_err());
        let cfg = RunConfig::default();
        assert!(cfg.validate().unwrap_err().is_validation());
    }

    #[test]
    fn preset_replaces_input_and_knowledge() {
        let mut cfg = RunConfig::default();
        cfg.apply_preset(Scenario::High);
        cfg.validate().unwrap();
        assert_eq!(cfg.knowledge.resolve().unwrap(), Scenario::High.knowledge());
        assert_eq!(cfg.dataset().unwrap().n(), 1000);
    }
}
