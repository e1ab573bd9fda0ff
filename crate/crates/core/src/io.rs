//! Reading response and covariate files.
//!
//! Both files are header-bearing delimited text with one person per row.
//! Covariate types are never inferred: every covariate column needs an
//! explicit declaration, either by name (`age=numeric,gender=binary`) or by
//! position (`numeric,binary`).

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Covariate, CovariateKind, CovariateTable, ResponseMatrix};

/// Ingestion failures. Row numbers are 1-based data rows (the header is
/// not counted); columns are 1-based.
#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: no header row")]
    MissingHeader { path: PathBuf },
    #[error("{path}: header has no columns")]
    NoColumns { path: PathBuf },
    #[error("{path}: duplicate column name '{name}'")]
    DuplicateColumn { path: PathBuf, name: String },
    #[error("{path}: no data rows")]
    NoRows { path: PathBuf },
    #[error("{path}: row {row} has {found} fields, header has {expected}")]
    Ragged {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("responses row {row}, column {column}: '{value}' is not an integer category label")]
    InvalidCategory {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("responses row {row}, column {column}: category {value} outside 0..={max}")]
    CategoryOutOfRange {
        row: usize,
        column: usize,
        value: i64,
        max: usize,
    },
    #[error("responses use {found} distinct categories; at least 2 and at most 255 are supported")]
    CategoryCount { found: usize },
    #[error("{responses} response rows but {covariates} covariate rows")]
    RowCountMismatch { responses: usize, covariates: usize },
    #[error("covariate '{name}' has no type declaration")]
    UndeclaredCovariate { name: String },
    #[error("type declared for '{name}', which is not a covariate column")]
    UnknownCovariate { name: String },
    #[error("{declared} positional covariate types declared for {found} covariate columns")]
    DeclarationCount { declared: usize, found: usize },
    #[error("invalid covariate type declaration '{0}'")]
    BadDeclaration(String),
    #[error("covariates row {row}, column '{name}': {reason}")]
    InvalidCovariateValue {
        row: usize,
        name: String,
        reason: String,
    },
    #[error("rows with all responses in one category: {}", format_rows(.rows))]
    ConstantRows { rows: Vec<usize> },
}

fn format_rows(rows: &[usize]) -> String {
    const SHOWN: usize = 20;
    let mut s: Vec<String> = rows.iter().take(SHOWN).map(usize::to_string).collect();
    if rows.len() > SHOWN {
        s.push(format!("... ({} in total)", rows.len()));
    }
    s.join(", ")
}

/// Covariate type declarations.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CovariateTypes {
    /// No covariate columns expected.
    #[default]
    None,
    /// Types by column name.
    Named(Vec<(String, CovariateKind)>),
    /// Types in column order.
    Positional(Vec<CovariateKind>),
}

impl FromStr for CovariateTypes {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, IngestError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
        if parts.is_empty() {
            return Ok(Self::None);
        }
        let kind = |t: &str| {
            t.parse::<CovariateKind>()
                .map_err(|_| IngestError::BadDeclaration(t.to_string()))
        };
        if parts.iter().all(|p| p.contains('=')) {
            let named = parts
                .iter()
                .map(|p| {
                    let (name, t) = p.split_once('=').expect("checked above");
                    if name.trim().is_empty() {
                        return Err(IngestError::BadDeclaration(p.to_string()));
                    }
                    Ok((name.trim().to_string(), kind(t)?))
                })
                .collect::<Result<_, _>>()?;
            Ok(Self::Named(named))
        } else if parts.iter().any(|p| p.contains('=')) {
            Err(IngestError::BadDeclaration(format!(
                "{s} (mixes named and positional types)"
            )))
        } else {
            Ok(Self::Positional(parts.into_iter().map(kind).collect::<Result<_, _>>()?))
        }
    }
}

impl fmt::Display for CovariateTypes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = match self {
            Self::None => Vec::new(),
            Self::Named(v) => v.iter().map(|(n, k)| format!("{n}={k}")).collect(),
            Self::Positional(v) => v.iter().map(ToString::to_string).collect(),
        };
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Field delimiter; by default tab for `.tsv`/`.tab` files and comma
    /// otherwise.
    pub delimiter: Option<u8>,
    /// Declared number of categories `k + 1`. Labels must then be the
    /// integers `0..k`; without it the observed labels are ranked.
    pub n_categories: Option<usize>,
}

/// Ingested data together with the labels needed to report results.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub responses: ResponseMatrix,
    pub covariates: CovariateTable,
    pub item_names: Vec<String>,
    /// Original label of each category `0..=k`.
    pub category_labels: Vec<i64>,
    /// Original labels coded 0 and 1, per binary covariate with text labels.
    pub binary_labels: Vec<(String, [String; 2])>,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn delimiter_for(path: &Path, options: &IngestOptions) -> u8 {
    options.delimiter.unwrap_or_else(|| {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(ext) if ext == "tsv" || ext == "tab" => b'\t',
            _ => b',',
        }
    })
}

fn read_table(path: &Path, options: &IngestOptions) -> Result<Table, IngestError> {
    let read_err = |source| IngestError::Read {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter_for(path, options))
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(read_err)?;
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        None => {
            return Err(IngestError::MissingHeader {
                path: path.to_path_buf(),
            })
        }
        Some(r) => r.map_err(read_err)?.iter().map(str::to_string).collect(),
    };
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(IngestError::NoColumns {
            path: path.to_path_buf(),
        });
    }
    let mut seen = BTreeSet::new();
    for name in &header {
        if !seen.insert(name.as_str()) {
            return Err(IngestError::DuplicateColumn {
                path: path.to_path_buf(),
                name: name.clone(),
            });
        }
    }
    let mut rows = Vec::new();
    for (idx, record) in records.enumerate() {
        let record = record.map_err(read_err)?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(IngestError::Ragged {
                path: path.to_path_buf(),
                row: idx + 1,
                expected: header.len(),
                found: record.len(),
            });
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(IngestError::NoRows {
            path: path.to_path_buf(),
        });
    }
    Ok(Table { header, rows })
}

fn parse_responses(
    table: &Table,
    options: &IngestOptions,
) -> Result<(ResponseMatrix, Vec<i64>), IngestError> {
    let n_items = table.header.len();
    let mut labels = Vec::with_capacity(table.rows.len() * n_items);
    for (r, row) in table.rows.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            let v = cell.parse::<i64>().map_err(|_| IngestError::InvalidCategory {
                row: r + 1,
                column: c + 1,
                value: cell.clone(),
            })?;
            labels.push(v);
        }
    }
    let category_labels: Vec<i64> = match options.n_categories {
        Some(n) => {
            if !(2..=255).contains(&n) {
                return Err(IngestError::CategoryCount { found: n });
            }
            if let Some(pos) = labels.iter().position(|&v| v < 0 || v >= n as i64) {
                return Err(IngestError::CategoryOutOfRange {
                    row: pos / n_items + 1,
                    column: pos % n_items + 1,
                    value: labels[pos],
                    max: n - 1,
                });
            }
            (0..n as i64).collect()
        }
        None => labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect(),
    };
    if !(2..=255).contains(&category_labels.len()) {
        return Err(IngestError::CategoryCount {
            found: category_labels.len(),
        });
    }
    let values = labels
        .iter()
        .map(|v| category_labels.binary_search(v).expect("label collected above") as u8)
        .collect();
    let responses =
        ResponseMatrix::new(table.rows.len(), n_items, category_labels.len() - 1, values)
            .expect("dimensions and categories checked above");
    Ok((responses, category_labels))
}

fn resolve_types(
    names: &[String],
    types: &CovariateTypes,
) -> Result<Vec<CovariateKind>, IngestError> {
    match types {
        CovariateTypes::None => match names.first() {
            Some(name) => Err(IngestError::UndeclaredCovariate { name: name.clone() }),
            None => Ok(Vec::new()),
        },
        CovariateTypes::Positional(kinds) => {
            if kinds.len() != names.len() {
                return Err(IngestError::DeclarationCount {
                    declared: kinds.len(),
                    found: names.len(),
                });
            }
            Ok(kinds.clone())
        }
        CovariateTypes::Named(pairs) => {
            if let Some((name, _)) = pairs.iter().find(|(n, _)| !names.contains(n)) {
                return Err(IngestError::UnknownCovariate { name: name.clone() });
            }
            names
                .iter()
                .map(|name| {
                    pairs
                        .iter()
                        .find(|(n, _)| n == name)
                        .map(|(_, k)| *k)
                        .ok_or_else(|| IngestError::UndeclaredCovariate { name: name.clone() })
                })
                .collect()
        }
    }
}

type BinaryLabels = Option<[String; 2]>;

fn parse_covariate(
    name: &str,
    kind: CovariateKind,
    cells: &[&str],
) -> Result<(Covariate, BinaryLabels), IngestError> {
    let invalid = |row: usize, reason: String| IngestError::InvalidCovariateValue {
        row: row + 1,
        name: name.to_string(),
        reason,
    };
    if let Some(row) = cells.iter().position(|c| c.is_empty()) {
        return Err(invalid(row, "missing value".into()));
    }
    let numeric: Option<Vec<f64>> = cells.iter().map(|c| c.parse::<f64>().ok()).collect();
    match (kind, numeric) {
        (CovariateKind::Binary, Some(values)) => {
            if let Some(row) = values.iter().position(|&v| v != 0.0 && v != 1.0) {
                return Err(invalid(
                    row,
                    format!("binary covariate must be coded 0/1 or use two labels, got '{}'", cells[row]),
                ));
            }
            Ok((Covariate::new(name, kind, values), None))
        }
        (CovariateKind::Binary, None) => {
            let distinct: BTreeSet<&str> = cells.iter().copied().collect();
            if distinct.len() > 2 {
                return Err(invalid(
                    0,
                    format!("binary covariate has {} distinct labels", distinct.len()),
                ));
            }
            let labels: Vec<&str> = distinct.into_iter().collect();
            let values = cells.iter().map(|c| if *c == labels[0] { 0.0 } else { 1.0 }).collect();
            let pair = [
                labels[0].to_string(),
                labels.get(1).map_or_else(String::new, |s| s.to_string()),
            ];
            Ok((Covariate::new(name, kind, values), Some(pair)))
        }
        (_, Some(values)) => {
            if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                return Err(invalid(row, format!("non-finite value '{}'", cells[row])));
            }
            Ok((Covariate::new(name, kind, values), None))
        }
        (_, None) => {
            let row = cells
                .iter()
                .position(|c| c.parse::<f64>().is_err())
                .expect("some cell failed to parse");
            Err(invalid(row, format!("'{}' is not a number", cells[row])))
        }
    }
}

/// Reads a response file and an optional covariate file.
///
/// Category labels are integers; they are ranked and mapped to `0..=k`
/// unless [`IngestOptions::n_categories`] fixes the range. Persons whose
/// responses all fall in one category cannot be fitted and are rejected
/// with their row numbers.
pub fn ingest(
    responses_path: &Path,
    covariates_path: Option<&Path>,
    types: &CovariateTypes,
    options: &IngestOptions,
) -> Result<Dataset, IngestError> {
    let table = read_table(responses_path, options)?;
    let (responses, category_labels) = parse_responses(&table, options)?;
    let n_persons = responses.n_persons();

    let mut binary_labels = Vec::new();
    let covariates = match covariates_path {
        None => {
            resolve_types(&[], types)?;
            CovariateTable::empty(n_persons)
        }
        Some(path) => {
            let cov = read_table(path, options)?;
            if cov.rows.len() != n_persons {
                return Err(IngestError::RowCountMismatch {
                    responses: n_persons,
                    covariates: cov.rows.len(),
                });
            }
            let kinds = resolve_types(&cov.header, types)?;
            let mut columns = Vec::with_capacity(kinds.len());
            for (v, (name, kind)) in cov.header.iter().zip(kinds).enumerate() {
                let cells: Vec<&str> = cov.rows.iter().map(|r| r[v].as_str()).collect();
                let (column, labels) = parse_covariate(name, kind, &cells)?;
                if let Some(l) = labels {
                    binary_labels.push((name.clone(), l));
                }
                columns.push(column);
            }
            CovariateTable::new(columns).expect("columns validated above")
        }
    };

    let constant = responses.constant_rows();
    if !constant.is_empty() {
        return Err(IngestError::ConstantRows {
            rows: constant.iter().map(|r| r + 1).collect(),
        });
    }
    Ok(Dataset {
        responses,
        covariates,
        item_names: table.header,
        category_labels,
        binary_labels,
    })
}

/// Writes responses as comma-separated text with a header of item names
/// (`item1`, `item2`, ... when `names` is `None`).
pub fn write_responses(
    path: &Path,
    responses: &ResponseMatrix,
    names: Option<&[String]>,
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = match names {
        Some(n) => n.to_vec(),
        None => (1..=responses.n_items()).map(|i| format!("item{i}")).collect(),
    };
    w.write_record(&header)?;
    for p in 0..responses.n_persons() {
        w.write_record(responses.row(p).iter().map(u8::to_string))?;
    }
    w.flush()
}

/// Writes covariates as comma-separated text with a header of column names.
pub fn write_covariates(path: &Path, covariates: &CovariateTable) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(covariates.columns().iter().map(|c| c.name.as_str()))?;
    for p in 0..covariates.n_persons() {
        w.write_record(covariates.row(p).iter().map(|v| v.to_string()))?;
    }
    w.flush()
}
