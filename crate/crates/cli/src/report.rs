//! CSV reports: a `# key: value` metadata block, a header row, then data
//! rows. Floats are written with six decimals.

use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub experiment: String,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn f6(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.6}")
    }
}

impl Report {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, meta: &Meta) -> Result<Vec<u8>, CliError> {
        let mut out = meta_block(meta).into_bytes();
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush()?;
        drop(w);
        Ok(out)
    }

    pub fn write(&self, meta: &Meta, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        std::fs::write(&path, self.render(meta)?)?;
        Ok(path)
    }
}

fn meta_block(meta: &Meta) -> String {
    format!(
        "# experiment: {}\n# version: {}\n# seed: {}\n# config_sha256: {}\n",
        meta.experiment,
        env!("CARGO_PKG_VERSION"),
        meta.seed,
        meta.config_hash
    )
}

/// Prefixes the metadata block onto an already rendered CSV body.
pub fn with_meta(meta: &Meta, body: &[u8]) -> Vec<u8> {
    let mut out = meta_block(meta).into_bytes();
    out.extend_from_slice(body);
    out
}

fn io(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_metadata_then_table() {
        let mut r = Report::new(&["a", "b"]);
        r.push(vec!["1".into(), f6(0.5)]);
        let meta = Meta {
            experiment: "x".into(),
            seed: 3,
            config_hash: "abc".into(),
        };
        let text = String::from_utf8(r.render(&meta).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# experiment: x");
        assert!(lines[1].starts_with("# version: "));
        assert_eq!(lines[2], "# seed: 3");
        assert_eq!(lines[3], "# config_sha256: abc");
        assert_eq!(&lines[4..], ["a,b", "1,0.500000"]);
        assert_eq!(f6(f64::INFINITY), "inf");
    }
}
