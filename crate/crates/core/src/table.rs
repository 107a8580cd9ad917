//! Numeric feature matrix shared by the simulator, dataset loaders and the
//! detection layer.

use std::io::{Read, Write};

use thiserror::Error;

use crate::Label;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("row {row} has {got} values, expected {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: String },
    #[error("{labels} labels for {rows} rows")]
    LabelLength { labels: usize, rows: usize },
    #[error("table has no labels")]
    Unlabelled,
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column index {index} out of range for {width} columns")]
    ColumnOutOfRange { index: usize, width: usize },
    #[error("malformed table csv: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rectangular, finite feature matrix with optional per-row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    column_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Option<Vec<Label>>,
}

impl FeatureTable {
    pub fn new(
        column_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Option<Vec<Label>>,
    ) -> Result<Self, TableError> {
        let width = column_names.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(TableError::Ragged {
                    row: i,
                    got: row.len(),
                    expected: width,
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(TableError::NonFinite {
                    row: i,
                    column: column_names[j].clone(),
                });
            }
        }
        if let Some(l) = &labels {
            if l.len() != rows.len() {
                return Err(TableError::LabelLength {
                    labels: l.len(),
                    rows: rows.len(),
                });
            }
        }
        Ok(Self {
            column_names,
            rows,
            labels,
        })
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self) -> Result<&[Label], TableError> {
        self.labels().ok_or(TableError::Unlabelled)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.column_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Number of rows labelled attack, if labelled.
    pub fn attack_count(&self) -> Option<usize> {
        self.labels()
            .map(|l| l.iter().filter(|x| **x == Label::Attack).count())
    }

    pub fn with_labels(mut self, labels: Option<Vec<Label>>) -> Result<Self, TableError> {
        if let Some(l) = &labels {
            if l.len() != self.rows.len() {
                return Err(TableError::LabelLength {
                    labels: l.len(),
                    rows: self.rows.len(),
                });
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn without_labels(&self) -> Self {
        Self {
            column_names: self.column_names.clone(),
            rows: self.rows.clone(),
            labels: None,
        }
    }

    /// Projects onto the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self, TableError> {
        let width = self.n_features();
        if let Some(&bad) = columns.iter().find(|&&j| j >= width) {
            return Err(TableError::ColumnOutOfRange { index: bad, width });
        }
        Ok(Self {
            column_names: columns
                .iter()
                .map(|&j| self.column_names[j].clone())
                .collect(),
            rows: self
                .rows
                .iter()
                .map(|r| columns.iter().map(|&j| r[j]).collect())
                .collect(),
            labels: self.labels.clone(),
        })
    }

    pub fn select_columns_by_name(&self, names: &[String]) -> Result<Self, TableError> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| TableError::UnknownColumn(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.select_columns(&idx)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            column_names: self.column_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }

    /// Row concatenation; both tables must share columns and labelling.
    pub fn concat(&self, other: &Self) -> Result<Self, TableError> {
        if self.column_names != other.column_names {
            return Err(TableError::Format("column mismatch in concat".into()));
        }
        let labels = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            (None, None) => None,
            _ => return Err(TableError::Format("labelled/unlabelled concat".into())),
        };
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(Self {
            column_names: self.column_names.clone(),
            rows,
            labels,
        })
    }

    /// Writes the canonical CSV form: feature columns in order, then a
    /// trailing `label` column (`benign`/`attack`) when labelled.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), TableError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.column_names.iter().map(String::as_str).collect();
        if self.labels.is_some() {
            header.push("label");
        }
        w.write_record(&header)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            if let Some(l) = &self.labels {
                rec.push(l[i].as_str().to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, TableError> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let labelled = header.last().map(String::as_str) == Some("label");
        let width = if labelled {
            header.len() - 1
        } else {
            header.len()
        };
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let mut row = Vec::with_capacity(width);
            for (j, name) in header.iter().enumerate().take(width) {
                let cell = rec.get(j).unwrap_or("");
                row.push(cell.parse::<f64>().map_err(|_| {
                    TableError::Format(format!("row {i}, column {name}: `{cell}`"))
                })?);
            }
            if labelled {
                let cell = rec.get(width).unwrap_or("");
                labels.push(
                    Label::parse(cell).ok_or_else(|| {
                        TableError::Format(format!("row {i}: bad label `{cell}`"))
                    })?,
                );
            }
            rows.push(row);
        }
        let names = header[..width].to_vec();
        Self::new(names, rows, labelled.then_some(labels))
    }
}
