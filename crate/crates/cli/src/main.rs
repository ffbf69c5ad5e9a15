//! `cfgu` command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid input or configuration, 2 on
//! failures during computation.

mod commands;
mod config;

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfgu::audit::ScorerSpec;
use cfgu::models::{ExternalCommand, DEFAULT_THRESHOLD};
use cfgu::synth::Scenario;
use cfgu::{Error, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "cfgu", version, about = "Counterfactual fairness audits under causal-graph uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset with its knowledge file and a config.
    Synth(Common),
    /// Bootstrap causal discovery and report edge entropies.
    Discover(Common),
    /// Run the full counterfactual audit.
    Audit(Common),
    /// Score feature rows read as CSV from stdin with an exported model.
    Score {
        /// Model JSON written by `audit`.
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, env = "CFGU_WORKERS")]
    workers: Option<usize>,
    /// Synthetic scenario: low, medium, high, forbid-x1, forbid-x2.
    #[arg(long)]
    preset: Option<Scenario>,
    /// Replace the configured scorers with one external command.
    #[arg(long)]
    scorer_cmd: Option<String>,
    /// Decision threshold applied to every scorer.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of bootstrap replicates.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// BIC penalty discount.
    #[arg(long)]
    penalty: Option<f64>,
    #[arg(long)]
    mec_cap: Option<usize>,
}

macro_rules! out {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

const DEFAULT_OUT: &str = "cfgu-out";

impl Common {
    fn resolve(&self, require_input: bool) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p).map_err(|e| match e {
                Error::Io { path, source } => Error::Config(format!("cannot read {}: {source}", path.display())),
                e => e,
            })?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        if let Some(p) = self.preset {
            cfg.apply_preset(p);
        }
        if let Some(cmd) = &self.scorer_cmd {
            let mut words = shlex::split(cmd)
                .filter(|w| !w.is_empty())
                .ok_or_else(|| Error::Config(format!("cannot parse scorer command `{cmd}`")))?;
            let program = words.remove(0);
            cfg.audit.scorers = vec![ScorerSpec::External {
                name: "external".into(),
                command: ExternalCommand { program, args: words },
                features: None,
                include_protected: false,
                threshold: DEFAULT_THRESHOLD,
            }];
        }
        if let Some(t) = self.threshold {
            for s in &mut cfg.audit.scorers {
                s.set_threshold(t);
            }
        }
        if let Some(a) = self.alpha {
            cfg.audit.alpha = a;
        }
        if let Some(b) = self.bootstrap {
            cfg.discovery.bootstrap = b;
        }
        if let Some(p) = self.penalty {
            cfg.discovery.penalty = p;
        }
        if let Some(c) = self.mec_cap {
            cfg.discovery.mec_cap = c;
        }
        if require_input {
            cfg.validate()?;
        } else {
            if cfg.workers == Some(0) {
                return Err(Error::Config("workers must be at least 1".into()));
            }
            if cfg.data.is_some() && cfg.synth.is_none() && self.preset.is_none() {
                return Err(Error::Config("synth needs --preset or a [synth] section".into()));
            }
        }
        let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok((cfg, out))
    }
}

fn init_pool(workers: Option<usize>) -> Result<()> {
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(c) => {
            let (cfg, out) = c.resolve(false)?;
            init_pool(cfg.workers)?;
            for p in commands::cmd_synth(&cfg, &out)? {
                out!("wrote {}", p.display());
            }
        }
        Command::Discover(c) => {
            let (cfg, out) = c.resolve(true)?;
            init_pool(cfg.workers)?;
            let e = commands::cmd_discover(&cfg, &out)?;
            out!(
                "H_G = {:.4}  H_GA = {:.4}  unique CPDAGs = {}  total DAGs = {}",
                e.h_g(),
                e.h_ga(),
                e.unique_cpdags,
                e.total_dags
            );
            out!("artifacts in {}", out.display());
        }
        Command::Audit(c) => {
            let (cfg, out) = c.resolve(true)?;
            init_pool(cfg.workers)?;
            let report = commands::cmd_audit(&cfg, &out)?;
            summarize(&report, &out);
        }
        Command::Score { model } => {
            let stdin = std::io::stdin();
            if stdin.is_terminal() {
                log::warn!("reading feature rows from the terminal");
            }
            commands::cmd_score(&model, stdin.lock(), std::io::stdout().lock())?;
        }
    }
    Ok(())
}

fn fmt_stats(s: &Option<cfgu::audit::MetricStats<f64>>) -> String {
    match s {
        Some(s) => format!("{:.3} ({:.3}, {:.3})", s.mean, s.ci_lower, s.ci_upper),
        None => "undefined".into(),
    }
}

fn summarize(r: &cfgu::audit::AuditReport, out: &Path) {
    out!(
        "H_G = {:.4}  H_GA = {:.4}  unique CPDAGs = {}  total DAGs = {}",
        r.entropy.h_g(),
        r.entropy.h_ga(),
        r.unique_cpdags,
        r.total_dags
    );
    for s in &r.scorers {
        for d in &s.directions {
            out!(
                "{} [{}]: PSR {}  NSR {}",
                s.name,
                d.label(),
                fmt_stats(&d.psr),
                fmt_stats(&d.nsr)
            );
        }
    }
    out!("report written to {}", out.join("report.json").display());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if e.is_validation() { 1 } else { 2 };
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
