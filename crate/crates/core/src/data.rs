//! Response and covariate tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// P×I table of ordinal responses in `0..=k`, stored row-major (one row per
/// person).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMatrix {
    n_persons: usize,
    n_items: usize,
    n_thresholds: usize,
    values: Vec<u8>,
}

impl ResponseMatrix {
    /// Builds a matrix from row-major values. Only structural checks are made
    /// here; see [`ResponseMatrix::validate_for_fit`] for the fitting rules.
    pub fn new(
        n_persons: usize,
        n_items: usize,
        n_thresholds: usize,
        values: Vec<u8>,
    ) -> Result<Self> {
        if n_persons == 0 || n_items == 0 {
            return Err(Error::InvalidArgument(
                "response matrix needs at least one person and one item".into(),
            ));
        }
        if n_thresholds == 0 || n_thresholds > 254 {
            return Err(Error::InvalidArgument(format!(
                "number of thresholds must be in 1..=254, got {n_thresholds}"
            )));
        }
        if values.len() != n_persons * n_items {
            return Err(Error::DimensionMismatch(format!(
                "expected {} responses for {n_persons}x{n_items}, got {}",
                n_persons * n_items,
                values.len()
            )));
        }
        for (idx, &v) in values.iter().enumerate() {
            if v as usize > n_thresholds {
                return Err(Error::CategoryOutOfRange {
                    row: idx / n_items,
                    column: idx % n_items,
                    value: v as i64,
                    max: n_thresholds,
                });
            }
        }
        Ok(Self {
            n_persons,
            n_items,
            n_thresholds,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<u8>], n_thresholds: usize) -> Result<Self> {
        let n_items = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n_items) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} responses, expected {n_items}",
                rows[bad].len()
            )));
        }
        let values = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), n_items, n_thresholds, values)
    }

    pub fn n_persons(&self) -> usize {
        self.n_persons
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Number of thresholds `k`; categories are `0..=k`.
    pub fn n_thresholds(&self) -> usize {
        self.n_thresholds
    }

    pub fn n_categories(&self) -> usize {
        self.n_thresholds + 1
    }

    #[inline]
    pub fn get(&self, person: usize, item: usize) -> u8 {
        self.values[person * self.n_items + item]
    }

    pub fn row(&self, person: usize) -> &[u8] {
        &self.values[person * self.n_items..(person + 1) * self.n_items]
    }

    /// Rows whose responses all fall into one category.
    pub fn constant_rows(&self) -> Vec<usize> {
        (0..self.n_persons)
            .filter(|&p| {
                let row = self.row(p);
                row.iter().all(|&v| v == row[0])
            })
            .collect()
    }

    /// Rules required by joint maximum likelihood: at least two persons and
    /// no person with a constant response vector.
    pub fn validate_for_fit(&self) -> Result<()> {
        if self.n_persons < 2 {
            return Err(Error::InvalidArgument(
                "at least two persons are required for fitting".into(),
            ));
        }
        let rows = self.constant_rows();
        if !rows.is_empty() {
            return Err(Error::ConstantResponses { rows });
        }
        Ok(())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.n_items);
        for &p in rows {
            values.extend_from_slice(self.row(p));
        }
        Self {
            n_persons: rows.len(),
            n_items: self.n_items,
            n_thresholds: self.n_thresholds,
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateKind {
    Binary,
    Ordered,
    Numeric,
}

impl std::str::FromStr for CovariateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binary" | "bin" => Ok(Self::Binary),
            "ordered" | "ordinal" | "ord" => Ok(Self::Ordered),
            "numeric" | "num" | "continuous" => Ok(Self::Numeric),
            other => Err(Error::InvalidArgument(format!(
                "unknown covariate type '{other}' (expected binary, ordered or numeric)"
            ))),
        }
    }
}

impl std::fmt::Display for CovariateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Binary => "binary",
            Self::Ordered => "ordered",
            Self::Numeric => "numeric",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariate {
    pub name: String,
    pub kind: CovariateKind,
    pub values: Vec<f64>,
}

impl Covariate {
    pub fn new(name: impl Into<String>, kind: CovariateKind, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            kind,
            values,
        }
    }
}

/// P×V table of person covariates, stored by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateTable {
    columns: Vec<Covariate>,
    n_persons: usize,
}

impl CovariateTable {
    pub fn new(columns: Vec<Covariate>) -> Result<Self> {
        let n_persons = columns.first().map_or(0, |c| c.values.len());
        for col in &columns {
            if col.values.len() != n_persons {
                return Err(Error::DimensionMismatch(format!(
                    "covariate '{}' has {} values, expected {n_persons}",
                    col.name,
                    col.values.len()
                )));
            }
            if let Some(p) = col.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "covariate '{}' has a non-finite value at row {p}",
                    col.name
                )));
            }
            if col.kind == CovariateKind::Binary {
                if let Some(p) = col.values.iter().position(|&v| v != 0.0 && v != 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "binary covariate '{}' must be coded 0/1 (row {p} is {})",
                        col.name, col.values[p]
                    )));
                }
            }
        }
        Ok(Self { columns, n_persons })
    }

    /// A table without covariates for `n_persons` persons.
    pub fn empty(n_persons: usize) -> Self {
        Self {
            columns: Vec::new(),
            n_persons,
        }
    }

    pub fn n_persons(&self) -> usize {
        self.n_persons
    }

    pub fn n_variables(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, variable: usize) -> &Covariate {
        &self.columns[variable]
    }

    pub fn columns(&self) -> &[Covariate] {
        &self.columns
    }

    #[inline]
    pub fn value(&self, person: usize, variable: usize) -> f64 {
        self.columns[variable].values[person]
    }

    pub fn row(&self, person: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c.values[person]).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            columns: self
                .columns
                .iter()
                .map(|c| Covariate {
                    name: c.name.clone(),
                    kind: c.kind,
                    values: rows.iter().map(|&p| c.values[p]).collect(),
                })
                .collect(),
            n_persons: rows.len(),
        }
    }

    /// Returns a copy with `variable` replaced by `values`.
    pub fn with_column_values(&self, variable: usize, values: Vec<f64>) -> Result<Self> {
        let mut columns = self.columns.clone();
        columns[variable].values = values;
        Self::new(columns)
    }
}
