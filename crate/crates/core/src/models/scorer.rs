//! Black-box scorers: the built-in logistic regression or an external
//! process speaking a CSV-in, scores-out protocol.

use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use super::logreg::LogRegModel;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// A program and its arguments, run without a shell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalCommand {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl ExternalCommand {
    pub fn new(program: impl Into<String>, args: &[&str]) -> Self {
        Self {
            program: program.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn display(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScorerKind<T> {
    Builtin(LogRegModel<T>),
    External(ExternalCommand),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scorer<T> {
    pub name: String,
    pub kind: ScorerKind<T>,
    pub features: Vec<String>,
    pub threshold: f64,
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("threshold must lie in (0, 1), got {t}")))
    }
}

impl<T: Real> Scorer<T> {
    pub fn builtin(name: impl Into<String>, model: LogRegModel<T>, threshold: f64) -> Result<Self> {
        check_threshold(threshold)?;
        Ok(Self {
            name: name.into(),
            features: model.features.clone(),
            kind: ScorerKind::Builtin(model),
            threshold,
        })
    }

    pub fn bind_external(
        name: impl Into<String>,
        command: ExternalCommand,
        features: Vec<String>,
        threshold: f64,
    ) -> Result<Self> {
        check_threshold(threshold)?;
        if command.program.trim().is_empty() {
            return Err(Error::Config("external scorer command is empty".into()));
        }
        if features.is_empty() {
            return Err(Error::Config("external scorer needs at least one feature".into()));
        }
        Ok(Self {
            name: name.into(),
            kind: ScorerKind::External(command),
            features,
            threshold,
        })
    }

    /// Positions of the scorer's features among `columns`.
    pub fn feature_indices(&self, columns: &[String]) -> Result<Vec<usize>> {
        self.features
            .iter()
            .map(|f| {
                columns
                    .iter()
                    .position(|c| c == f)
                    .ok_or_else(|| Error::UnknownVariable(f.clone()))
            })
            .collect()
    }

    /// Scores rows whose columns are `columns`.
    pub fn score(&self, data: &Matrix<T>, columns: &[String]) -> Result<Vec<T>> {
        let idx = self.feature_indices(columns)?;
        self.score_features(&project(data, &idx))
    }

    /// Scores rows that already hold exactly the scorer's features.
    pub fn score_features(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        match &self.kind {
            ScorerKind::Builtin(m) => m.predict_proba(x),
            ScorerKind::External(cmd) => run_external(cmd, &self.features, x),
        }
    }

    pub fn predict(&self, scores: &[T]) -> Vec<bool> {
        predict(scores, self.threshold)
    }
}

/// `score > threshold`.
pub fn predict<T: Real>(scores: &[T], threshold: f64) -> Vec<bool> {
    let t = T::of(threshold);
    scores.iter().map(|&s| s > t).collect()
}

pub fn project<T: Real>(data: &Matrix<T>, idx: &[usize]) -> Matrix<T> {
    let mut out = Vec::with_capacity(data.nrows() * idx.len());
    for row in data.rows_iter() {
        out.extend(idx.iter().map(|&j| row[j]));
    }
    Matrix::from_vec(data.nrows(), idx.len(), out).expect("consistent shape")
}

/// Writes the feature CSV consumed by external scorers.
pub fn write_feature_csv<T: Real, W: Write>(out: W, header: &[String], x: &Matrix<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    let mut rec = Vec::with_capacity(header.len());
    for row in x.rows_iter() {
        rec.clear();
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Scorer(format!("writing scorer input: {e}")))?;
    Ok(())
}

/// Parses one score per line, checking count and range.
pub fn parse_scores<T: Real>(text: &str, expected: usize) -> Result<Vec<T>> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != expected {
        return Err(Error::Scorer(format!(
            "expected {expected} score lines, got {}",
            lines.len()
        )));
    }
    lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let v: f64 = line.trim().parse().map_err(|_| {
                Error::Scorer(format!("line {}: cannot parse score `{}`", i + 1, line.trim()))
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Scorer(format!("line {}: score {v} outside [0, 1]", i + 1)));
            }
            Ok(T::of(v))
        })
        .collect()
}

fn run_external<T: Real>(cmd: &ExternalCommand, header: &[String], x: &Matrix<T>) -> Result<Vec<T>> {
    let mut input = Vec::new();
    write_feature_csv(&mut input, header, x)?;
    let mut child = Command::new(&cmd.program)
        .args(&cmd.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Scorer(format!("cannot start `{}`: {e}", cmd.display())))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let writer = std::thread::spawn(move || stdin.write_all(&input));
    let output = child
        .wait_with_output()
        .map_err(|e| Error::Scorer(format!("`{}` failed: {e}", cmd.display())))?;
    let write_result = writer.join().expect("writer thread panicked");
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        let tail: Vec<&str> = stderr.lines().rev().take(5).collect();
        let tail: Vec<&str> = tail.into_iter().rev().collect();
        return Err(Error::Scorer(format!(
            "`{}` exited with {}: {}",
            cmd.display(),
            output.status,
            tail.join(" | ")
        )));
    }
    if let Err(e) = write_result {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            return Err(Error::Scorer(format!("writing to `{}`: {e}", cmd.display())));
        }
    }
    let text = String::from_utf8(output.stdout)
        .map_err(|_| Error::Scorer(format!("`{}` wrote non-UTF-8 output", cmd.display())))?;
    parse_scores(&text, x.nrows())
}
