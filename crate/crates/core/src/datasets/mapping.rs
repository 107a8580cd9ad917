//! Versioned source-to-canonical column mapping, bundled as TOML.

use serde::Deserialize;

use super::{DatasetError, Result};
use crate::Label;

const BUNDLED: &str = include_str!("../../data/schema_mapping.toml");

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ColumnMap {
    pub canonical: String,
    pub source: String,
}

/// How one family of input files maps onto canonical features.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct SourceSchema {
    pub label_column: String,
    /// Label cells (case-insensitive) that mark an attack row.
    pub attack_values: Vec<String>,
    pub columns: Vec<ColumnMap>,
}

impl SourceSchema {
    pub fn canonical_for(&self, source: &str) -> Option<&str> {
        self.columns
            .iter()
            .find(|c| c.source == source)
            .map(|c| c.canonical.as_str())
    }

    pub fn source_for(&self, canonical: &str) -> Option<&str> {
        self.columns
            .iter()
            .find(|c| c.canonical == canonical)
            .map(|c| c.source.as_str())
    }

    pub fn parse_label(&self, cell: &str) -> Label {
        let cell = cell.trim();
        if self
            .attack_values
            .iter()
            .any(|v| v.eq_ignore_ascii_case(cell))
        {
            Label::Attack
        } else {
            Label::Benign
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct SchemaMapping {
    pub version: u32,
    pub rf_jamming: SourceSchema,
    pub ton_iot: SourceSchema,
}

impl SchemaMapping {
    /// The mapping checked in under `data/schema_mapping.toml`.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled mapping is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| DatasetError::Mapping(e.to_string()))?;
        for (name, s) in [("rf_jamming", &m.rf_jamming), ("ton_iot", &m.ton_iot)] {
            let mut seen = std::collections::HashSet::new();
            for c in &s.columns {
                if !seen.insert(c.canonical.as_str()) {
                    return Err(DatasetError::Mapping(format!(
                        "{name}: canonical column `{}` mapped twice",
                        c.canonical
                    )));
                }
            }
            if s.columns.iter().any(|c| c.source == s.label_column) {
                return Err(DatasetError::Mapping(format!(
                    "{name}: label column mapped as a feature"
                )));
            }
        }
        Ok(m)
    }

    /// Canonical names in the order of the RF entries.
    pub fn canonical_order(&self) -> Vec<&str> {
        self.rf_jamming
            .columns
            .iter()
            .map(|c| c.canonical.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_mapping_parses() {
        let m = SchemaMapping::bundled();
        assert_eq!(m.version, 1);
        assert_eq!(
            m.rf_jamming.canonical_for("n_packets"),
            Some("arrival_count")
        );
        assert_eq!(m.ton_iot.source_for("mean_size"), Some("src_bytes"));
        assert_eq!(m.canonical_order()[0], "arrival_count");
        assert_eq!(m.rf_jamming.parse_label("Jamming"), Label::Attack);
        assert_eq!(m.ton_iot.parse_label("0"), Label::Benign);
    }

    #[test]
    fn duplicate_canonical_rejected() {
        let text = BUNDLED.replace("canonical = \"mean_wait\"", "canonical = \"arrival_count\"");
        assert!(matches!(
            SchemaMapping::parse(&text),
            Err(DatasetError::Mapping(_))
        ));
    }
}
