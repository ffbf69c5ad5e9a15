//! Tabular datasets: CSV ingestion, stratified splitting, standardization and
//! one-hot encoding.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Binary,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Labels in code order. May be left empty in a schema, in which case the
    /// observed first-appearance order is recorded on load.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl ColumnSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Continuous,
            categories: Vec::new(),
        }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Binary,
            categories: Vec::new(),
        }
    }

    pub fn categorical(name: impl Into<String>, categories: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories: categories.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn is_discrete(&self) -> bool {
        self.kind != ColumnKind::Continuous
    }
}

/// An `n x d` table with typed columns. Binary and categorical cells hold the
/// integer code of their label.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<ColumnSpec>,
    values: Matrix<f64>,
    protected: String,
    target: String,
}

impl Dataset {
    pub fn new(
        columns: Vec<ColumnSpec>,
        values: Matrix<f64>,
        protected: impl Into<String>,
        target: impl Into<String>,
    ) -> Result<Self> {
        let ds = Self {
            columns,
            values,
            protected: protected.into(),
            target: target.into(),
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        if self.values.ncols() != self.columns.len() {
            return Err(Error::Schema(format!(
                "{} columns declared but matrix has {}",
                self.columns.len(),
                self.values.ncols()
            )));
        }
        if self.values.nrows() == 0 {
            return Err(Error::Data("dataset has no rows".into()));
        }
        let mut seen = HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
            match c.kind {
                ColumnKind::Binary if c.categories.len() != 2 => {
                    return Err(Error::Schema(format!(
                        "binary column `{}` must have exactly two labels, found {}",
                        c.name,
                        c.categories.len()
                    )))
                }
                ColumnKind::Categorical if c.categories.len() < 2 => {
                    return Err(Error::Schema(format!(
                        "categorical column `{}` needs at least two categories",
                        c.name
                    )))
                }
                _ => {}
            }
        }
        for (role, name) in [("protected attribute", &self.protected), ("target", &self.target)] {
            let j = self
                .column_index(name)
                .ok_or_else(|| Error::Schema(format!("{role} `{name}` is not a column")))?;
            if self.columns[j].kind != ColumnKind::Binary {
                return Err(Error::Schema(format!("{role} not binary: `{name}`")));
            }
        }
        for (j, c) in self.columns.iter().enumerate() {
            for r in 0..self.values.nrows() {
                let v = self.values.get(r, j);
                let ok = match c.kind {
                    ColumnKind::Continuous => v.is_finite(),
                    _ => v.fract() == 0.0 && v >= 0.0 && (v as usize) < c.categories.len(),
                };
                if !ok {
                    return Err(Error::Data(format!(
                        "row {}, column `{}`: invalid value {v}",
                        r + 1,
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn values(&self) -> &Matrix<f64> {
        &self.values
    }

    pub fn protected(&self) -> &str {
        &self.protected
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn protected_index(&self) -> usize {
        self.column_index(&self.protected).expect("validated")
    }

    pub fn target_index(&self) -> usize {
        self.column_index(&self.target).expect("validated")
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            values: self.values.select_rows(idx),
            protected: self.protected.clone(),
            target: self.target.clone(),
        }
    }

    /// Values as a matrix of another scalar type.
    pub fn matrix<T: crate::Real>(&self) -> Matrix<T> {
        self.values.cast()
    }

    /// Text of a cell as it would appear in a CSV file.
    pub fn format_cell(&self, r: usize, j: usize) -> String {
        let c = &self.columns[j];
        let v = self.values.get(r, j);
        match c.kind {
            ColumnKind::Continuous => format!("{v}"),
            _ => c.categories[v as usize].clone(),
        }
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan")
}

/// Reads a header-first, comma-separated file into a [`Dataset`] with the
/// columns of `schema`, in schema order. Extra file columns are ignored.
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &[ColumnSpec],
    protected: &str,
    target: &str,
) -> Result<Dataset> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Data(format!("{label}: {other:?}")),
        })?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut positions = Vec::with_capacity(schema.len());
    for c in schema {
        let pos = header.iter().position(|h| *h == c.name).ok_or_else(|| {
            Error::Schema(format!("{label}: missing column `{}` in header", c.name))
        })?;
        positions.push(pos);
    }
    for role in [protected, target] {
        if !schema.iter().any(|c| c.name == role) {
            return Err(Error::Schema(format!("`{role}` is not in the schema")));
        }
    }

    let mut columns: Vec<ColumnSpec> = schema.to_vec();
    let mut raw: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let mut cells = Vec::with_capacity(schema.len());
        for (c, &pos) in schema.iter().zip(&positions) {
            let cell = record.get(pos).unwrap_or("");
            if is_missing(cell) {
                return Err(Error::Cell {
                    path: label.clone(),
                    row,
                    column: c.name.clone(),
                    message: "missing value".into(),
                });
            }
            cells.push(cell.to_string());
        }
        raw.push(cells);
    }
    if raw.is_empty() {
        return Err(Error::Data(format!("{label}: no data rows")));
    }

    // Label sets: declared order if given, else first appearance, except that
    // a 0/1 binary column keeps its numeric coding.
    for (j, c) in columns.iter_mut().enumerate() {
        if !c.is_discrete() {
            continue;
        }
        let mut observed: Vec<String> = Vec::new();
        for cells in &raw {
            if !observed.contains(&cells[j]) {
                observed.push(cells[j].clone());
            }
        }
        if c.categories.is_empty() {
            let numeric01 = observed
                .iter()
                .all(|l| matches!(l.parse::<f64>(), Ok(v) if v == 0.0 || v == 1.0));
            if c.kind == ColumnKind::Binary && numeric01 && observed.len() == 2 {
                observed.sort_by(|a, b| {
                    a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap())
                });
            }
            c.categories = observed.clone();
        } else if let Some((row, cells)) = raw
            .iter()
            .enumerate()
            .find(|(_, cells)| !c.categories.contains(&cells[j]))
        {
            return Err(Error::Cell {
                path: label.clone(),
                row: row + 1,
                column: c.name.clone(),
                message: format!("label `{}` not among declared categories", cells[j]),
            });
        }
        if c.kind == ColumnKind::Binary && c.categories.len() != 2 {
            let what = if c.name == protected {
                "protected attribute not binary".to_string()
            } else if c.name == target {
                "target not binary".to_string()
            } else {
                "column not binary".to_string()
            };
            return Err(Error::Schema(format!(
                "{label}: {what}: `{}` has {} distinct labels",
                c.name,
                c.categories.len()
            )));
        }
    }

    let mut data = Vec::with_capacity(raw.len() * columns.len());
    for (i, cells) in raw.iter().enumerate() {
        for (c, cell) in columns.iter().zip(cells) {
            let v = match c.kind {
                ColumnKind::Continuous => match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        return Err(Error::Cell {
                            path: label.clone(),
                            row: i + 1,
                            column: c.name.clone(),
                            message: format!("cannot parse `{cell}` as a number"),
                        })
                    }
                },
                _ => c.categories.iter().position(|l| l == cell).unwrap() as f64,
            };
            data.push(v);
        }
    }
    let values = Matrix::from_vec(raw.len(), columns.len(), data)?;
    Dataset::new(columns, values, protected, target)
}

pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    })?;
    w.write_record(ds.columns.iter().map(|c| c.name.as_str()))?;
    for r in 0..ds.n() {
        w.write_record((0..ds.d()).map(|j| ds.format_cell(r, j)))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Row indices of a stratified split, each list in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let y = ds.target_index();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..2u64 {
        let mut members: Vec<usize> = (0..ds.n())
            .filter(|&r| ds.values.get(r, y) == class as f64)
            .collect();
        if members.len() < 2 {
            return Err(Error::Data(format!(
                "target class {} has {} row(s); stratified split needs at least 2",
                ds.columns[y].categories[class as usize],
                members.len()
            )));
        }
        let mut rng = rng::stream_rng(seed, rng::stream::SPLIT, class);
        members.shuffle(&mut rng);
        // Round half up, so ties go to the test set.
        let k = ((test_fraction * members.len() as f64) + 0.5).floor() as usize;
        let k = k.clamp(1, members.len() - 1);
        test.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

/// Splits rows into train and test sets preserving the target's class balance.
pub fn split_stratified(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let s = split_indices(ds, test_fraction, seed)?;
    Ok((ds.select_rows(&s.train), ds.select_rows(&s.test)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledColumn {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

/// Per-column standardization fitted on continuous training columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub columns: Vec<ScaledColumn>,
}

pub fn fit_scaler(train: &Dataset) -> Result<Scaler> {
    let n = train.n();
    if n < 2 {
        return Err(Error::Data("standardization needs at least two rows".into()));
    }
    let mut columns = Vec::new();
    for (j, c) in train.columns.iter().enumerate() {
        if c.kind != ColumnKind::Continuous {
            continue;
        }
        let col = train.values.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if !(sd > 0.0) {
            return Err(Error::Data(format!(
                "continuous column `{}` has zero variance",
                c.name
            )));
        }
        columns.push(ScaledColumn {
            name: c.name.clone(),
            mean,
            sd,
        });
    }
    Ok(Scaler { columns })
}

impl Scaler {
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let mut out = ds.clone();
        for s in &self.columns {
            let j = ds.require_column(&s.name)?;
            for r in 0..out.n() {
                let v = out.values.get(r, j);
                out.values.set(r, j, (v - s.mean) / s.sd);
            }
        }
        Ok(out)
    }

    pub fn invert(&self, ds: &Dataset) -> Result<Dataset> {
        let mut out = ds.clone();
        for s in &self.columns {
            let j = ds.require_column(&s.name)?;
            for r in 0..out.n() {
                let v = out.values.get(r, j);
                out.values.set(r, j, v * s.sd + s.mean);
            }
        }
        Ok(out)
    }
}

pub fn apply_scaler(scaler: &Scaler, ds: &Dataset) -> Result<Dataset> {
    scaler.apply(ds)
}

/// Provenance of one categorical column after encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedGroup {
    pub original: String,
    pub kind: ColumnKind,
    pub indicators: Vec<String>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingMap {
    pub original_columns: Vec<ColumnSpec>,
    pub groups: Vec<EncodedGroup>,
}

impl EncodingMap {
    /// Identity map over columns without categoricals.
    pub fn identity(columns: &[ColumnSpec]) -> Self {
        Self {
            original_columns: columns.to_vec(),
            groups: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group(&self, original: &str) -> Option<&EncodedGroup> {
        self.groups.iter().find(|g| g.original == original)
    }

    /// Encoded names standing for an original column.
    pub fn expand(&self, original: &str) -> Result<Vec<String>> {
        if let Some(g) = self.group(original) {
            return Ok(g.indicators.clone());
        }
        if self.original_columns.iter().any(|c| c.name == original) {
            Ok(vec![original.to_string()])
        } else {
            Err(Error::UnknownVariable(original.to_string()))
        }
    }

    /// Original column for every encoded name.
    pub fn origin_of(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for c in &self.original_columns {
            for e in self.expand(&c.name).expect("own column") {
                out.insert(e, c.name.clone());
            }
        }
        out
    }

    /// Inverse of [`encode`] on observed data.
    pub fn decode(&self, encoded: &Dataset) -> Result<Dataset> {
        let n = encoded.n();
        let d = self.original_columns.len();
        let mut data = vec![0.0; n * d];
        for (j, c) in self.original_columns.iter().enumerate() {
            match (c.kind, self.group(&c.name)) {
                (ColumnKind::Categorical, Some(g)) => {
                    let idx: Vec<usize> = g
                        .indicators
                        .iter()
                        .map(|e| encoded.require_column(e))
                        .collect::<Result<_>>()?;
                    for r in 0..n {
                        let mut best = 0;
                        for (k, &col) in idx.iter().enumerate() {
                            if encoded.values.get(r, col) > encoded.values.get(r, idx[best]) {
                                best = k;
                            }
                        }
                        data[r * d + j] = best as f64;
                    }
                }
                _ => {
                    let col = encoded.require_column(&c.name)?;
                    for r in 0..n {
                        data[r * d + j] = encoded.values.get(r, col);
                    }
                }
            }
        }
        Dataset::new(
            self.original_columns.clone(),
            Matrix::from_vec(n, d, data)?,
            encoded.protected.clone(),
            encoded.target.clone(),
        )
    }
}

pub fn indicator_name(column: &str, label: &str) -> String {
    format!("{column}={label}")
}

/// Replaces every categorical column with one 0/1 indicator per category.
/// Binary columns already are a single 0/1 indicator and keep their name, so
/// only categorical columns appear in the map.
pub fn encode(ds: &Dataset) -> Result<(Dataset, EncodingMap)> {
    let mut columns = Vec::new();
    let mut groups = Vec::new();
    // (source column, Some(category) for indicators)
    let mut plan: Vec<(usize, Option<usize>)> = Vec::new();
    for (j, c) in ds.columns.iter().enumerate() {
        match c.kind {
            ColumnKind::Continuous => {
                columns.push(c.clone());
                plan.push((j, None));
            }
            ColumnKind::Binary => {
                columns.push(c.clone());
                plan.push((j, None));
            }
            ColumnKind::Categorical => {
                let mut indicators = Vec::new();
                for (k, label) in c.categories.iter().enumerate() {
                    let name = indicator_name(&c.name, label);
                    columns.push(ColumnSpec {
                        name: name.clone(),
                        kind: ColumnKind::Binary,
                        categories: vec!["0".into(), "1".into()],
                    });
                    indicators.push(name);
                    plan.push((j, Some(k)));
                }
                groups.push(EncodedGroup {
                    original: c.name.clone(),
                    kind: c.kind,
                    indicators,
                    labels: c.categories.clone(),
                });
            }
        }
    }
    let mut names = HashMap::new();
    for c in &columns {
        if names.insert(c.name.clone(), ()).is_some() {
            return Err(Error::Schema(format!(
                "encoded column name `{}` collides with an existing column",
                c.name
            )));
        }
    }
    let n = ds.n();
    let mut data = Vec::with_capacity(n * plan.len());
    for r in 0..n {
        for &(j, cat) in &plan {
            let v = ds.values.get(r, j);
            data.push(match cat {
                None => v,
                Some(k) => f64::from(v as usize == k),
            });
        }
    }
    let encoded = Dataset::new(
        columns,
        Matrix::from_vec(n, plan.len(), data)?,
        ds.protected.clone(),
        ds.target.clone(),
    )?;
    Ok((
        encoded,
        EncodingMap {
            original_columns: ds.columns.clone(),
            groups,
        },
    ))
}
