//! Tabular ingestion: raw CSV loading, the RF-jamming merge, Dataset-2
//! composition, stratified splitting and a simulator-backed stand-in for
//! the public files.

mod compose;
mod mapping;
mod split;
pub mod synthetic;

pub use compose::{
    compose_dataset2, ingest, merge_rf_jamming, Composed, Ingested, ATTACK_ROWS, BENIGN_PER_GROUP,
    SPEED_COLUMN,
};
pub use mapping::{ColumnMap, SchemaMapping, SourceSchema};
pub use split::{split, SplitSpec};

use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::table::{FeatureTable, TableError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{source_name}: file has no header")]
    HeaderMissing { source_name: String },
    #[error("{source_name}: row {row} has {got} fields, header has {expected}")]
    RaggedRow {
        source_name: String,
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("tables share no mapped feature columns")]
    NoCommonColumns,
    #[error("{what}: need {required} rows, got {got}")]
    InsufficientSamples {
        what: String,
        required: usize,
        got: usize,
    },
    #[error("class `{class}` has {got} rows; stratified split needs at least {required}")]
    ClassTooSmall {
        class: &'static str,
        got: usize,
        required: usize,
    },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("schema mapping: {0}")]
    Mapping(String),
    #[error("column `{column}` missing from {source_name}")]
    MissingColumn { source_name: String, column: String },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// CSV contents kept verbatim as text.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub source_name: String,
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Data rows are numbered from 1; the header is row 0.
    pub fn from_reader<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = r.records();
        let header = match records.next() {
            Some(rec) => rec?,
            None => {
                return Err(DatasetError::HeaderMissing {
                    source_name: source_name.to_string(),
                })
            }
        };
        let column_names: Vec<String> = header.iter().map(|c| c.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, rec) in records.enumerate() {
            let rec = rec?;
            if rec.len() != column_names.len() {
                return Err(DatasetError::RaggedRow {
                    source_name: source_name.to_string(),
                    row: i + 1,
                    got: rec.len(),
                    expected: column_names.len(),
                });
            }
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self {
            source_name: source_name.to_string(),
            column_names,
            rows,
        })
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.column_names)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_csv(path: &Path) -> Result<RawTable> {
    let file = std::fs::File::open(path)?;
    RawTable::from_reader(std::io::BufReader::new(file), &path.display().to_string())
}

/// Sidecar describing how a dataset table was produced.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Manifest {
    pub dataset: String,
    pub sources: Vec<String>,
    pub mapping_version: u32,
    pub rows: usize,
    pub attack_rows: usize,
    pub dropped_rows: usize,
    pub dropped_columns: Vec<String>,
    pub seed: Option<u64>,
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest fields are plain values")
    }
}

/// Writes `table` as canonical CSV plus a `<name>.manifest.toml` sidecar.
pub fn write_with_manifest(
    table: &FeatureTable,
    manifest: &Manifest,
    dir: &Path,
    name: &str,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let file = std::fs::File::create(dir.join(format!("{name}.csv")))?;
    table.write_csv(std::io::BufWriter::new(file))?;
    std::fs::write(
        dir.join(format!("{name}.manifest.toml")),
        manifest.to_toml(),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows() {
        let t = RawTable::from_reader("a,b\n1,x\n2,y\n3,z\n".as_bytes(), "t").unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.column_names, ["a", "b"]);
        assert_eq!(t.rows[1], ["2", "y"]);
    }

    #[test]
    fn ragged_row_is_named() {
        let err = RawTable::from_reader("a,b\n1,2\n3\n".as_bytes(), "t").unwrap_err();
        assert!(
            matches!(
                err,
                DatasetError::RaggedRow {
                    row: 2,
                    got: 1,
                    expected: 2,
                    ..
                }
            ),
            "{err}"
        );
        assert!(err.to_string().contains("row 2"));
    }

    #[test]
    fn empty_file_has_no_header() {
        assert!(matches!(
            RawTable::from_reader("".as_bytes(), "t"),
            Err(DatasetError::HeaderMissing { .. })
        ));
    }

    #[test]
    fn load_from_disk_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let t = RawTable::from_reader("a,b\n1,\"q,r\"\n".as_bytes(), "mem").unwrap();
        t.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
        let back = load_csv(&path).unwrap();
        assert_eq!(back.rows, t.rows);
        assert!(matches!(
            load_csv(&dir.path().join("missing.csv")),
            Err(DatasetError::Io(_))
        ));
    }
}
