//! Delimited-text ingestion, dummy encoding and robust per-column scaling.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simgen::LabeledDataset;
use crate::types::TimeSeriesMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    /// Class label; excluded from the features.
    Label,
}

#[derive(Clone, Debug)]
pub struct LoadOptions {
    pub delimiter: u8,
    /// Name of the class-label column, if any.
    pub label: Option<String>,
    pub overrides: HashMap<String, ColumnKind>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            label: None,
            overrides: HashMap::new(),
        }
    }
}

/// A parsed table with one kind per column.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub names: Vec<String>,
    pub kinds: Vec<ColumnKind>,
    /// Row-major cells, trimmed.
    pub rows: Vec<Vec<String>>,
}

fn parse_cell(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a delimited file with a header row.
pub fn load_table(path: impl AsRef<Path>, options: &LoadOptions) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let names: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() != names.len() {
            return Err(Error::RaggedRow {
                row: k + 1,
                expected: names.len(),
                found: record.len(),
            });
        }
        rows.push(record.iter().map(str::to_owned).collect::<Vec<_>>());
    }
    RawTable::new(names, rows, options)
}

impl RawTable {
    /// Builds a table from header and cells, inferring column kinds.
    pub fn new(names: Vec<String>, rows: Vec<Vec<String>>, options: &LoadOptions) -> Result<Self> {
        if let Some(label) = &options.label {
            if !names.contains(label) {
                return Err(Error::invalid(format!("label column '{label}' not found")));
            }
        }
        if let Some(unknown) = options.overrides.keys().find(|k| !names.contains(k)) {
            return Err(Error::invalid(format!(
                "override for unknown column '{unknown}'"
            )));
        }
        let mut kinds = Vec::with_capacity(names.len());
        for (j, name) in names.iter().enumerate() {
            let kind = if options.label.as_deref() == Some(name) {
                ColumnKind::Label
            } else if let Some(&k) = options.overrides.get(name) {
                k
            } else if rows.iter().all(|r| parse_cell(&r[j]).is_some()) {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical
            };
            if kind == ColumnKind::Numeric {
                if let Some(row) = rows.iter().position(|r| parse_cell(&r[j]).is_none()) {
                    return Err(Error::ParseNumber {
                        row: row + 1,
                        column: name.clone(),
                        value: rows[row][j].clone(),
                    });
                }
            }
            kinds.push(kind);
        }
        Ok(Self { names, kinds, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Class ids of the label column, numbered by sorted label value.
    pub fn labels(&self) -> Option<Vec<usize>> {
        let j = self.kinds.iter().position(|&k| k == ColumnKind::Label)?;
        let ids: BTreeMap<&str, usize> = self
            .rows
            .iter()
            .map(|r| r[j].as_str())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(k, v)| (v, k))
            .collect();
        Some(self.rows.iter().map(|r| ids[r[j].as_str()]).collect())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleEstimator {
    /// Median of absolute consecutive differences.
    #[default]
    MedianAbsDiff,
    /// Median absolute deviation of the absolute consecutive differences.
    MadAbsDiff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizeOptions {
    pub normalize: bool,
    pub estimator: ScaleEstimator,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self {
            normalize: true,
            estimator: ScaleEstimator::MedianAbsDiff,
        }
    }
}

/// Feature matrix with the name of each encoded column.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedTable {
    pub x: TimeSeriesMatrix,
    pub columns: Vec<String>,
    /// Columns left unscaled because their scale was zero.
    pub unscaled: Vec<String>,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_unstable_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Robust scale of a column from its absolute consecutive differences.
pub fn robust_scale(column: &[f64], estimator: ScaleEstimator) -> f64 {
    let mut diffs: Vec<f64> = column.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    if diffs.is_empty() {
        return 0.0;
    }
    let med = median(&mut diffs);
    match estimator {
        ScaleEstimator::MedianAbsDiff => med,
        ScaleEstimator::MadAbsDiff => {
            let mut dev: Vec<f64> = diffs.iter().map(|d| (d - med).abs()).collect();
            median(&mut dev)
        }
    }
}

/// Expands categorical columns to one indicator per category (in sorted
/// category order) and divides each column by its robust scale.
pub fn encode_and_normalize(table: &RawTable, options: NormalizeOptions) -> Result<EncodedTable> {
    let n = table.n_rows();
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for (j, (name, kind)) in table.names.iter().zip(&table.kinds).enumerate() {
        match kind {
            ColumnKind::Label => {}
            ColumnKind::Numeric => columns.push((
                name.clone(),
                table
                    .rows
                    .iter()
                    .map(|r| parse_cell(&r[j]).expect("validated numeric column"))
                    .collect(),
            )),
            ColumnKind::Categorical => {
                let cats: std::collections::BTreeSet<&str> =
                    table.rows.iter().map(|r| r[j].as_str()).collect();
                for cat in cats {
                    columns.push((
                        format!("{name}={cat}"),
                        table
                            .rows
                            .iter()
                            .map(|r| (r[j] == cat) as u8 as f64)
                            .collect(),
                    ));
                }
            }
        }
    }
    if n == 0 || columns.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut unscaled = Vec::new();
    if options.normalize {
        for (name, col) in &mut columns {
            let scale = robust_scale(col, options.estimator);
            if scale > 0.0 {
                col.iter_mut().for_each(|v| *v /= scale);
            } else {
                unscaled.push(name.clone());
            }
        }
    }
    let d = columns.len();
    let mut data = vec![0.0; n * d];
    for (j, (_, col)) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            data[i * d + j] = v;
        }
    }
    Ok(EncodedTable {
        x: TimeSeriesMatrix::new(data, n, d)?,
        columns: columns.into_iter().map(|(name, _)| name).collect(),
        unscaled,
    })
}

/// Encoded features and class labels of a table with a label column.
pub fn to_dataset(table: &RawTable, options: NormalizeOptions) -> Result<LabeledDataset> {
    let labels = table
        .labels()
        .ok_or_else(|| Error::invalid("table has no label column"))?;
    LabeledDataset::new(encode_and_normalize(table, options)?.x, labels)
}
