//! The end-to-end audit: bag of DAGs, one SCM per DAG, counterfactual test
//! sets per model, and the switch-rate and score statistics across models.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{ccm, check_alpha, metric_stats, Ccm, IndividualStats, MetricStats, Welford};
use crate::data::{encode, fit_scaler, Dataset, EncodingMap, Scaler};
use crate::ensemble::{bootstrap_bag, discovery_columns, entropy_summary, BagParams, EntropySummary, GraphBag};
use crate::error::{Error, Result};
use crate::knowledge::Knowledge;
use crate::linalg::{Matrix, Moments};
use crate::models::{project, train_logreg, ExternalCommand, LogRegModel, LogRegParams, Scorer, ScorerKind, DEFAULT_THRESHOLD};
use crate::rng;
use crate::scalar::Real;
use crate::scm::{fit_from_moments, LinearScm};

pub const SCHEMA_VERSION: u32 = 1;

/// Upper bound on rows sent to an external scorer in one call.
const EXTERNAL_BATCH_ROWS: usize = 100_000;

/// How to obtain one audited classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScorerSpec {
    /// Logistic regression trained on the standardized training set.
    BuiltinLogreg {
        name: String,
        #[serde(default)]
        features: Option<Vec<String>>,
        #[serde(default)]
        include_protected: bool,
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    External {
        name: String,
        command: ExternalCommand,
        #[serde(default)]
        features: Option<Vec<String>>,
        #[serde(default)]
        include_protected: bool,
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_lambda() -> f64 {
    LogRegParams::default().lambda
}
fn default_max_iter() -> usize {
    LogRegParams::default().max_iter
}
fn default_tol() -> f64 {
    LogRegParams::default().tol
}

impl ScorerSpec {
    pub fn builtin(name: impl Into<String>) -> Self {
        ScorerSpec::BuiltinLogreg {
            name: name.into(),
            features: None,
            include_protected: false,
            threshold: DEFAULT_THRESHOLD,
            lambda: default_lambda(),
            max_iter: default_max_iter(),
            tol: default_tol(),
        }
    }

    pub fn logreg_params(&self) -> Option<LogRegParams> {
        match self {
            ScorerSpec::BuiltinLogreg {
                lambda, max_iter, tol, ..
            } => Some(LogRegParams {
                lambda: *lambda,
                max_iter: *max_iter,
                tol: *tol,
            }),
            ScorerSpec::External { .. } => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            ScorerSpec::BuiltinLogreg { name, .. } | ScorerSpec::External { name, .. } => name,
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            ScorerSpec::BuiltinLogreg { threshold, .. } | ScorerSpec::External { threshold, .. } => *threshold,
        }
    }

    pub fn set_threshold(&mut self, t: f64) {
        match self {
            ScorerSpec::BuiltinLogreg { threshold, .. } | ScorerSpec::External { threshold, .. } => *threshold = t,
        }
    }

    fn feature_request(&self) -> (&Option<Vec<String>>, bool) {
        match self {
            ScorerSpec::BuiltinLogreg {
                features,
                include_protected,
                ..
            }
            | ScorerSpec::External {
                features,
                include_protected,
                ..
            } => (features, *include_protected),
        }
    }

    /// Encoded feature names: explicit ones expanded through the encoding,
    /// otherwise every discovery column except the protected attribute.
    pub fn resolve_features(&self, map: &EncodingMap, columns: &[String], protected: &str) -> Result<Vec<String>> {
        let (explicit, include_protected) = self.feature_request();
        let feats: Vec<String> = match explicit {
            Some(list) => {
                let mut out = Vec::new();
                for f in list {
                    if columns.contains(f) {
                        out.push(f.clone());
                    } else {
                        out.extend(map.expand(f)?);
                    }
                }
                out
            }
            None => columns
                .iter()
                .filter(|c| include_protected || c.as_str() != protected)
                .cloned()
                .collect(),
        };
        for f in &feats {
            if !columns.contains(f) {
                return Err(Error::UnknownVariable(f.clone()));
            }
        }
        if feats.is_empty() {
            return Err(Error::Config(format!("scorer `{}` has no features", self.name())));
        }
        Ok(feats)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.threshold();
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Config(format!(
                "scorer `{}`: threshold must lie in (0, 1)",
                self.name()
            )));
        }
        if let Some(p) = self.logreg_params() {
            p.validate()?;
        }
        if let ScorerSpec::External { command, .. } = self {
            if command.program.trim().is_empty() {
                return Err(Error::Config(format!("scorer `{}`: empty command", self.name())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditParams {
    #[serde(default)]
    pub bag: BagParams,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Evaluate per-individual statistics on at most this many test rows
    /// per direction.
    #[serde(default)]
    pub individual_limit: Option<usize>,
    /// Embed per-individual statistics in the report.
    #[serde(default)]
    pub report_individuals: bool,
}

fn default_alpha() -> f64 {
    0.05
}

impl Default for AuditParams {
    fn default() -> Self {
        Self {
            bag: BagParams::default(),
            alpha: default_alpha(),
            individual_limit: None,
            report_individuals: false,
        }
    }
}

impl AuditParams {
    pub fn validate(&self) -> Result<()> {
        self.bag.validate()?;
        check_alpha(self.alpha)?;
        if self.individual_limit == Some(0) {
            return Err(Error::Config("individual_limit must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub model_index: usize,
    pub replicate: usize,
    pub ccm: Ccm,
    pub psr: Option<f64>,
    pub nsr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionReport {
    pub from: String,
    pub to: String,
    pub from_value: f64,
    pub to_value: f64,
    /// Test rows whose protected attribute equals `from`.
    pub rows: usize,
    pub models: Vec<ModelMetrics>,
    pub psr: Option<MetricStats<f64>>,
    pub nsr: Option<MetricStats<f64>>,
    pub psr_undefined: usize,
    pub nsr_undefined: usize,
    pub individuals_evaluated: usize,
    pub individuals_subsampled: bool,
    /// Across individuals: statistics of the per-individual score variance.
    pub score_variance: Option<MetricStats<f64>>,
    /// Across individuals: average per-individual variance of each feature.
    pub feature_variance: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub individuals: Option<Vec<IndividualStats>>,
}

impl DirectionReport {
    pub fn label(&self) -> String {
        format!("{} -> {}", self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerReport {
    pub name: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub command: Option<String>,
    pub features: Vec<String>,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<LogRegModel<f64>>,
    pub directions: Vec<DirectionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub discovery_ridge_fallbacks: usize,
    pub scm_models_with_ridge: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub config: serde_json::Value,
    pub protected: String,
    pub target: String,
    pub train_rows: usize,
    pub test_rows: usize,
    pub variables: Vec<String>,
    pub encoding: EncodingMap,
    pub scaler: Scaler,
    pub entropy: EntropySummary,
    pub unique_cpdags: usize,
    pub total_dags: usize,
    pub diagnostics: Diagnostics,
    pub scorers: Vec<ScorerReport>,
    pub warnings: Vec<String>,
}

/// Report plus the intermediate artifacts a caller may want to persist.
#[derive(Debug, Clone)]
pub struct Audit<T> {
    pub report: AuditReport,
    pub bag: GraphBag,
    pub scms: Vec<LinearScm<T>>,
    /// `[scorer][direction]`, whether or not embedded in the report.
    pub individuals: Vec<Vec<Vec<IndividualStats>>>,
}

/// Training and test sets after encoding and standardization.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub map: EncodingMap,
    pub scaler: Scaler,
    pub knowledge: Knowledge,
}

/// Encodes both sets, standardizes with training statistics and carries
/// the knowledge over to encoded names.
pub fn prepare(train: &Dataset, test: &Dataset, k: &Knowledge) -> Result<Prepared> {
    if train.columns() != test.columns() {
        return Err(Error::Schema("train and test schemas differ".into()));
    }
    let original: Vec<String> = discovery_columns(train)
        .into_iter()
        .map(|j| train.columns()[j].name.clone())
        .collect();
    k.validate(&original).map_err(Error::Knowledge)?;
    let (train_e, map) = encode(train)?;
    let (test_e, _) = encode(test)?;
    let scaler = fit_scaler(&train_e)?;
    let knowledge = k.replicate_for_encoding(&map)?;
    Ok(Prepared {
        train: scaler.apply(&train_e)?,
        test: scaler.apply(&test_e)?,
        map,
        scaler,
        knowledge,
    })
}

fn discovery_matrix<T: Real>(ds: &Dataset, cols: &[usize]) -> Matrix<T> {
    project(&ds.matrix::<T>(), cols)
}

/// One SCM per bag member, fitted on its replicate's bootstrap rows.
pub fn fit_bag<T: Real>(bag: &GraphBag, train: &Matrix<T>) -> Result<Vec<LinearScm<T>>> {
    let mut by_rep: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, m) in bag.members().iter().enumerate() {
        by_rep.entry(m.replicate).or_default().push(i);
    }
    let reps: Vec<(usize, Vec<usize>)> = by_rep.into_iter().collect();
    let fitted: Vec<Result<Vec<(usize, LinearScm<T>)>>> = reps
        .par_iter()
        .map(|(b, idx)| {
            let rows = &bag.replicates()[*b].rows;
            let moments = if rows.is_empty() {
                Moments::from_matrix(train)
            } else {
                Moments::from_matrix(&train.select_rows(rows))
            };
            idx.iter()
                .map(|&i| {
                    fit_from_moments(&bag.members()[i].dag, &moments, Some(*b))
                        .map(|m| (i, m))
                        .map_err(|e| e.context(format!("model {i} (replicate {b})")))
                })
                .collect()
        })
        .collect();
    let mut out: Vec<Option<LinearScm<T>>> = vec![None; bag.m()];
    for group in fitted {
        for (i, m) in group? {
            out[i] = Some(m);
        }
    }
    Ok(out.into_iter().map(|m| m.expect("every member fitted")).collect())
}

fn counterfactual_matrix<T: Real>(scm: &LinearScm<T>, x: &Matrix<T>, a: usize, value: T) -> Matrix<T> {
    let affected = scm.affected_by(a);
    let mut out = Matrix::zeros(x.nrows(), x.ncols());
    for r in 0..x.nrows() {
        scm.counterfactual_into(x.row(r), a, value, &affected, out.row_mut(r));
    }
    out
}

struct DirectionInput<'a, T> {
    rows: &'a [usize],
    x: Matrix<T>,
    from: (String, f64),
    to: (String, f64),
}

fn score_models<T: Real>(
    scorer: &Scorer<T>,
    feature_idx: &[usize],
    scms: &[LinearScm<T>],
    models: &[usize],
    x: &Matrix<T>,
    a: usize,
    value: T,
) -> Result<Vec<(Matrix<T>, Vec<T>)>> {
    let cfs: Vec<Matrix<T>> = models
        .par_iter()
        .map(|&m| counterfactual_matrix(&scms[m], x, a, value))
        .collect();
    match &scorer.kind {
        ScorerKind::Builtin(_) => cfs
            .into_par_iter()
            .zip(models.par_iter())
            .map(|(cf, &m)| {
                let s = scorer
                    .score_features(&project(&cf, feature_idx))
                    .map_err(|e| e.context(format!("model {m}")))?;
                Ok((cf, s))
            })
            .collect(),
        ScorerKind::External(_) => {
            let width = feature_idx.len();
            let mut batch = Vec::with_capacity(cfs.len() * x.nrows() * width);
            for cf in &cfs {
                batch.extend_from_slice(project(cf, feature_idx).as_slice());
            }
            let total = cfs.len() * x.nrows();
            let scores = scorer
                .score_features(&Matrix::from_vec(total, width, batch)?)
                .map_err(|e| e.context(format!("models {}..={}", models[0], models[models.len() - 1])))?;
            Ok(cfs.into_iter().zip(scores.chunks(x.nrows()).map(<[T]>::to_vec)).collect())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn audit_direction<T: Real>(
    scorer: &Scorer<T>,
    columns: &[String],
    scms: &[LinearScm<T>],
    bag: &GraphBag,
    input: &DirectionInput<'_, T>,
    row_ids: &[usize],
    a: usize,
    params: &AuditParams,
    seed: u64,
    stream_index: u64,
    warnings: &mut Vec<String>,
) -> Result<(DirectionReport, Vec<IndividualStats>)> {
    let feature_idx = scorer.feature_indices(columns)?;
    let n = input.x.nrows();
    let m_total = scms.len();
    let label = format!("scorer `{}`, {} -> {}", scorer.name, input.from.0, input.to.0);

    let original = if n > 0 {
        scorer.predict(&scorer.score_features(&project(&input.x, &feature_idx))?)
    } else {
        Vec::new()
    };

    // Rows receiving per-individual statistics.
    let tracked: Vec<usize> = match params.individual_limit {
        Some(limit) if limit < n => {
            let mut r = rng::stream_rng(seed, rng::stream::SUBSAMPLE, stream_index);
            let mut pick = sample(&mut r, n, limit).into_vec();
            pick.sort_unstable();
            pick
        }
        _ => (0..n).collect(),
    };
    let mut acc: Vec<Welford> = tracked.iter().map(|_| Welford::new(columns.len())).collect();
    let mut scores: Vec<Vec<f64>> = tracked.iter().map(|_| Vec::with_capacity(m_total)).collect();
    let mut models = Vec::with_capacity(m_total);

    let chunk = match scorer.kind {
        ScorerKind::External(_) => (EXTERNAL_BATCH_ROWS / n.max(1)).max(1),
        ScorerKind::Builtin(_) => 64,
    };
    let all: Vec<usize> = (0..m_total).collect();
    if n > 0 {
        for block in all.chunks(chunk) {
            let out = score_models(scorer, &feature_idx, scms, block, &input.x, a, T::of(input.to.1))?;
            for (&m, (cf, s)) in block.iter().zip(out) {
                let pred = scorer.predict(&s);
                let c = ccm(&original, &pred)?;
                models.push(ModelMetrics {
                    model_index: m,
                    replicate: bag.members()[m].replicate,
                    ccm: c,
                    psr: c.psr(),
                    nsr: c.nsr(),
                });
                for (t, &r) in tracked.iter().enumerate() {
                    acc[t].push(cf.row(r));
                    scores[t].push(s[r].to_f64_lossy());
                }
            }
        }
    } else {
        for m in 0..m_total {
            models.push(ModelMetrics {
                model_index: m,
                replicate: bag.members()[m].replicate,
                ccm: Ccm::default(),
                psr: None,
                nsr: None,
            });
        }
        warnings.push(format!("{label}: no test rows with the source value"));
    }

    let psr_vals: Vec<f64> = models.iter().filter_map(|m| m.psr).collect();
    let nsr_vals: Vec<f64> = models.iter().filter_map(|m| m.nsr).collect();
    let (psr_undefined, nsr_undefined) = (m_total - psr_vals.len(), m_total - nsr_vals.len());
    if n > 0 && psr_undefined > 0 {
        warnings.push(format!(
            "{label}: PSR undefined for {psr_undefined} of {m_total} models (no negative predictions)"
        ));
    }
    if n > 0 && nsr_undefined > 0 {
        warnings.push(format!(
            "{label}: NSR undefined for {nsr_undefined} of {m_total} models (no positive predictions)"
        ));
    }
    let psr = (!psr_vals.is_empty())
        .then(|| metric_stats(&psr_vals, params.alpha))
        .transpose()?;
    let nsr = (!nsr_vals.is_empty())
        .then(|| metric_stats(&nsr_vals, params.alpha))
        .transpose()?;

    let individuals: Vec<IndividualStats> = tracked
        .iter()
        .zip(scores)
        .zip(&acc)
        .map(|((&r, s), w)| IndividualStats::from_parts(row_ids[input.rows[r]], s, w, params.alpha))
        .collect::<Result<_>>()?;
    let variances: Vec<f64> = individuals.iter().map(|i| i.variance).collect();
    let score_variance = (!variances.is_empty())
        .then(|| metric_stats(&variances, params.alpha))
        .transpose()?;
    let mut feature_variance = BTreeMap::new();
    if !individuals.is_empty() {
        for (j, name) in columns.iter().enumerate() {
            let avg = individuals.iter().map(|i| i.feature_variance[j]).sum::<f64>() / individuals.len() as f64;
            feature_variance.insert(name.clone(), avg);
        }
    }

    Ok((
        DirectionReport {
            from: input.from.0.clone(),
            to: input.to.0.clone(),
            from_value: input.from.1,
            to_value: input.to.1,
            rows: n,
            models,
            psr,
            nsr,
            psr_undefined,
            nsr_undefined,
            individuals_evaluated: tracked.len(),
            individuals_subsampled: tracked.len() < n,
            score_variance,
            feature_variance,
            individuals: None,
        },
        individuals,
    ))
}

fn build_scorer<T: Real>(
    spec: &ScorerSpec,
    prepared: &Prepared,
    columns: &[String],
    train_x: &Matrix<T>,
) -> Result<Scorer<T>> {
    let protected = prepared.train.protected();
    let features = spec.resolve_features(&prepared.map, columns, protected)?;
    match spec {
        ScorerSpec::BuiltinLogreg { name, threshold, .. } => {
            let params = spec.logreg_params().expect("builtin");
            let idx: Vec<usize> = features
                .iter()
                .map(|f| columns.iter().position(|c| c == f).expect("resolved"))
                .collect();
            let y: Vec<T> = prepared
                .train
                .values()
                .column(prepared.train.target_index())
                .into_iter()
                .map(T::of)
                .collect();
            let model = train_logreg(&project(train_x, &idx), &y, &features, &params)
                .map_err(|e| e.context(format!("training scorer `{name}`")))?;
            Scorer::builtin(name.clone(), model, *threshold)
        }
        ScorerSpec::External {
            name,
            command,
            threshold,
            ..
        } => Scorer::bind_external(name.clone(), command.clone(), features, *threshold),
    }
}

/// Runs the full audit. `test_row_ids` label test rows in exported tables;
/// `config` is echoed into the report.
pub fn run_audit<T: Real>(
    train: &Dataset,
    test: &Dataset,
    test_row_ids: &[usize],
    k: &Knowledge,
    scorers: &[ScorerSpec],
    params: &AuditParams,
    seed: u64,
    config: serde_json::Value,
) -> Result<Audit<T>> {
    params.validate()?;
    if scorers.is_empty() {
        return Err(Error::Config("at least one scorer is required".into()));
    }
    let mut names = std::collections::BTreeSet::new();
    for s in scorers {
        s.validate()?;
        if !names.insert(s.name()) {
            return Err(Error::Config(format!("duplicate scorer name `{}`", s.name())));
        }
    }
    if test_row_ids.len() != test.n() {
        return Err(Error::LengthMismatch {
            left: test_row_ids.len(),
            right: test.n(),
        });
    }
    let prepared = prepare(train, test, k)?;
    let cols = discovery_columns(&prepared.train);
    let columns: Vec<String> = cols.iter().map(|&j| prepared.train.columns()[j].name.clone()).collect();
    let protected = prepared.train.protected().to_string();
    let a = columns.iter().position(|c| *c == protected).expect("protected is a discovery column");
    for s in scorers {
        s.resolve_features(&prepared.map, &columns, &protected)?;
    }

    let bag = bootstrap_bag::<T>(&prepared.train, &prepared.knowledge, &params.bag, seed)?;
    let entropy = entropy_summary(&bag, &protected)?;
    let train_x = discovery_matrix::<T>(&prepared.train, &cols);
    let test_x = discovery_matrix::<T>(&prepared.test, &cols);
    let scms = fit_bag(&bag, &train_x)?;
    log::info!("fitted {} causal models from {} replicates", scms.len(), bag.b());

    let labels = prepared.train.columns()[prepared.train.protected_index()].categories.clone();
    let a_col = prepared.test.values().column(prepared.test.protected_index());
    let rows_with = |v: f64| -> Vec<usize> { (0..test.n()).filter(|&r| a_col[r] == v).collect() };
    let rows0 = rows_with(0.0);
    let rows1 = rows_with(1.0);
    let directions = [
        DirectionInput {
            rows: &rows0,
            x: test_x.select_rows(&rows0),
            from: (labels[0].clone(), 0.0),
            to: (labels[1].clone(), 1.0),
        },
        DirectionInput {
            rows: &rows1,
            x: test_x.select_rows(&rows1),
            from: (labels[1].clone(), 1.0),
            to: (labels[0].clone(), 0.0),
        },
    ];

    let mut warnings = Vec::new();
    let mut reports = Vec::new();
    let mut all_individuals = Vec::new();
    for (si, spec) in scorers.iter().enumerate() {
        let scorer = build_scorer(spec, &prepared, &columns, &train_x)?;
        let mut dirs = Vec::new();
        let mut inds = Vec::new();
        for (di, d) in directions.iter().enumerate() {
            let (mut rep, ind) = audit_direction(
                &scorer,
                &columns,
                &scms,
                &bag,
                d,
                test_row_ids,
                a,
                params,
                seed,
                (si * 2 + di) as u64,
                &mut warnings,
            )
            .map_err(|e| e.context(format!("scorer `{}`", scorer.name)))?;
            if params.report_individuals {
                rep.individuals = Some(ind.clone());
            }
            dirs.push(rep);
            inds.push(ind);
        }
        let (kind, command, model) = match &scorer.kind {
            ScorerKind::Builtin(m) => ("builtin_logreg", None, Some(m.cast::<f64>())),
            ScorerKind::External(c) => ("external", Some(c.display()), None),
        };
        reports.push(ScorerReport {
            name: scorer.name.clone(),
            kind: kind.to_string(),
            command,
            features: scorer.features.clone(),
            threshold: scorer.threshold,
            model,
            directions: dirs,
        });
        all_individuals.push(inds);
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let report = AuditReport {
        schema_version: SCHEMA_VERSION,
        config,
        protected,
        target: prepared.train.target().to_string(),
        train_rows: prepared.train.n(),
        test_rows: prepared.test.n(),
        variables: columns,
        encoding: prepared.map.clone(),
        scaler: prepared.scaler.clone(),
        unique_cpdags: entropy.unique_cpdags,
        total_dags: entropy.total_dags,
        entropy,
        diagnostics: Diagnostics {
            discovery_ridge_fallbacks: bag.ridge_fallbacks(),
            scm_models_with_ridge: scms.iter().filter(|m| m.uses_ridge()).count(),
        },
        scorers: reports,
        warnings,
    };
    Ok(Audit {
        report,
        bag,
        scms,
        individuals: all_individuals,
    })
}
