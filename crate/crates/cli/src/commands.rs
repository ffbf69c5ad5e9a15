//! Subcommand implementations and artifact writers.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use cfgu::audit::{prepare, run_audit, Audit, DirectionReport, IndividualStats};
use cfgu::data::{write_csv, ColumnSpec};
use cfgu::ensemble::{bootstrap_bag, entropy_summary, EntropySummary, GraphBag};
use cfgu::graphs::GraphJson;
use cfgu::linalg::Matrix;
use cfgu::models::LogRegModel;
use cfgu::synth::generate;
use cfgu::{Error, Real, Result};
use serde::Serialize;

use crate::config::{DataSection, KnowledgeSection, Precision, RunConfig};

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

/// Keeps file names portable: anything outside `[A-Za-z0-9_.-]` becomes `_`.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.') { c } else { '_' })
        .collect()
}

/// `synth`: data, knowledge and a config that audits them.
pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let section = cfg.synth.clone().unwrap_or_default();
    let spec = section.spec(cfg.seed);
    let ds = generate(&spec)?;
    create_dir(out)?;

    let data_path = out.join("data.csv");
    write_csv(&ds, &data_path)?;
    let knowledge = section.preset.map(|p| p.knowledge()).unwrap_or_default();
    let knowledge_path = out.join("knowledge.toml");
    write_file(&knowledge_path, &knowledge.to_toml_string())?;

    let columns: Vec<ColumnSpec> = ds.columns().to_vec();
    let run = RunConfig {
        seed: cfg.seed,
        out: None,
        workers: None,
        precision: cfg.precision,
        data: Some(DataSection {
            path: "data.csv".into(),
            protected: ds.protected().to_string(),
            target: ds.target().to_string(),
            columns,
            test_fraction: section.test_fraction,
        }),
        synth: None,
        knowledge: KnowledgeSection {
            file: Some("knowledge.toml".into()),
            ..Default::default()
        },
        discovery: cfg.discovery.clone(),
        audit: cfg.audit.clone(),
    };
    let config_path = out.join("config.toml");
    write_file(&config_path, &run.to_toml_string())?;
    Ok(vec![data_path, knowledge_path, config_path])
}

#[derive(Serialize)]
struct EntropyJson<'a> {
    #[serde(rename = "H_G")]
    h_g: f64,
    #[serde(rename = "H_GA")]
    h_ga: f64,
    unique_cpdags: usize,
    total_dags: usize,
    #[serde(flatten)]
    summary: &'a EntropySummary,
}

#[derive(Serialize)]
struct DagLine {
    index: usize,
    replicate: usize,
    graph: GraphJson,
}

fn write_bag(out: &Path, bag: &GraphBag, entropy: &EntropySummary) -> Result<()> {
    write_json(
        &out.join("entropy.json"),
        &EntropyJson {
            h_g: entropy.h_g(),
            h_ga: entropy.h_ga(),
            unique_cpdags: entropy.unique_cpdags,
            total_dags: entropy.total_dags,
            summary: entropy,
        },
    )?;
    entropy.total.write_csv(out.join("edges.csv"))?;
    entropy.subgraph.write_csv(out.join("edges_subgraph.csv"))?;

    let dir = out.join("bag");
    create_dir(&dir)?;
    let mut cpdags = String::new();
    for (i, u) in bag.unique_cpdags().iter().enumerate() {
        cpdags.push_str(&format!("# cpdag {i} multiplicity {}\n", u.multiplicity));
        cpdags.push_str(&u.cpdag.to_edge_list());
        cpdags.push('\n');
    }
    write_file(&dir.join("cpdags.txt"), &cpdags)?;

    let mut dags = String::new();
    for (i, m) in bag.members().iter().enumerate() {
        let line = DagLine {
            index: i,
            replicate: m.replicate,
            graph: m.dag.clone().into(),
        };
        dags.push_str(&serde_json::to_string(&line).map_err(|e| Error::Data(e.to_string()))?);
        dags.push('\n');
    }
    write_file(&dir.join("dags.jsonl"), &dags)?;

    let mut reps = String::from("replicate,cpdag_dags,score,ridge_fallbacks\n");
    for r in bag.replicates() {
        reps.push_str(&format!("{},{},{},{}\n", r.index, r.dag_count, r.score, r.ridge_fallbacks));
    }
    write_file(&dir.join("replicates.csv"), &reps)
}

/// `discover`: bootstrap discovery and edge entropies.
pub fn cmd_discover(cfg: &RunConfig, out: &Path) -> Result<EntropySummary> {
    match cfg.precision {
        Precision::F64 => discover::<f64>(cfg, out),
        Precision::F32 => discover::<f32>(cfg, out),
    }
}

fn discover<T: Real>(cfg: &RunConfig, out: &Path) -> Result<EntropySummary> {
    let k = cfg.knowledge.resolve()?;
    let ds = cfg.dataset()?;
    let split = cfg.split(&ds)?;
    let prepared = prepare(&split.train, &split.test, &k)?;
    let bag = bootstrap_bag::<T>(&prepared.train, &prepared.knowledge, cfg.bag_params(), cfg.seed)?;
    let entropy = entropy_summary(&bag, prepared.train.protected())?;
    create_dir(out)?;
    write_json(&out.join("config.json"), &cfg.echo())?;
    write_bag(out, &bag, &entropy)?;
    Ok(entropy)
}

/// `audit`: the full pipeline.
pub fn cmd_audit(cfg: &RunConfig, out: &Path) -> Result<cfgu::audit::AuditReport> {
    match cfg.precision {
        Precision::F64 => audit::<f64>(cfg, out),
        Precision::F32 => audit::<f32>(cfg, out),
    }
}

fn audit<T: Real>(cfg: &RunConfig, out: &Path) -> Result<cfgu::audit::AuditReport> {
    let k = cfg.knowledge.resolve()?;
    let ds = cfg.dataset()?;
    let split = cfg.split(&ds)?;
    let result: Audit<T> = run_audit(
        &split.train,
        &split.test,
        &split.test_ids,
        &k,
        &cfg.audit.scorers,
        &cfg.audit_params(),
        cfg.seed,
        cfg.echo(),
    )?;
    create_dir(out)?;
    write_json(&out.join("config.json"), &cfg.echo())?;
    write_bag(out, &result.bag, &result.report.entropy)?;
    write_json(&out.join("report.json"), &result.report)?;
    for (si, s) in result.report.scorers.iter().enumerate() {
        let name = sanitize(&s.name);
        if let Some(m) = &s.model {
            write_json(&out.join(format!("model_{name}.json")), m)?;
        }
        for (di, d) in s.directions.iter().enumerate() {
            let tag = format!("{name}_{}_to_{}", sanitize(&d.from), sanitize(&d.to));
            write_file(&out.join(format!("models_{tag}.csv")), &model_table(d))?;
            write_file(
                &out.join(format!("individuals_{tag}.csv")),
                &individual_table(&result.individuals[si][di]),
            )?;
        }
    }
    Ok(result.report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn model_table(d: &DirectionReport) -> String {
    let mut s = String::from("model_index,replicate,n00,n01,n10,n11,PSR,NSR\n");
    for m in &d.models {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            m.model_index,
            m.replicate,
            m.ccm.n00,
            m.ccm.n01,
            m.ccm.n10,
            m.ccm.n11,
            opt(m.psr),
            opt(m.nsr)
        ));
    }
    s
}

fn individual_table(rows: &[IndividualStats]) -> String {
    let mut s = String::from("row_id,mean,var,ci_lo,ci_hi\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.row_id, r.mean, r.variance, r.ci_lower, r.ci_upper));
    }
    s
}

/// `score`: reads feature rows as CSV and writes one probability per line.
pub fn cmd_score(model_path: &Path, input: impl BufRead, mut output: impl Write) -> Result<usize> {
    let text = fs::read_to_string(model_path).map_err(|e| Error::io(model_path, e))?;
    let model: LogRegModel<f64> = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", model_path.display())))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("stdin: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let idx = model
        .features
        .iter()
        .map(|f| {
            header
                .iter()
                .position(|h| h == f)
                .ok_or_else(|| Error::Schema(format!("input lacks feature column `{f}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = Vec::new();
    let mut n = 0;
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("stdin: {e}")))?;
        for (&j, f) in idx.iter().zip(&model.features) {
            let cell = rec.get(j).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::Cell {
                path: "stdin".into(),
                row: row + 1,
                column: f.clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            data.push(v);
        }
        n += 1;
    }
    let x = Matrix::from_vec(n, idx.len(), data)?;
    let p = model.predict_proba(&x)?;
    let mut buf = String::with_capacity(n * 20);
    for v in p {
        buf.push_str(&format!("{v}\n"));
    }
    output.write_all(buf.as_bytes()).map_err(|e| Error::io("stdout", e))?;
    Ok(n)
}
