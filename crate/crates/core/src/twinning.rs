//! Cyber-twin layer.
//!
//! The twin samples the RSU data stream at a twinning rate `gamma`
//! (percentage of packages taken to the twin out of all packages seen at the
//! RSU), keeps the latest mirrored state, and ships each sampled item to the
//! security layer as a [`TransferRecord`].
//!
//! # Transfer encoding
//!
//! A record is a sequence of length-prefixed fields in fixed tag order:
//!
//! ```text
//! field := tag:u8  len:u32le  value[len]
//!   1 schema_version  utf-8
//!   2 rsu_id          utf-8
//!   3 timestamp       f64le
//!   4 payload         source_index:u64le count:u32le
//!                     { name_len:u16le name:utf-8 value:f64le } * count
//!   5 label_hint      u8 (0 benign, 1 attack), omitted when absent
//! ```
//!
//! Tags 1-4 are required, tags must be strictly increasing, and nothing may
//! follow the last field. Identical records always encode to identical bytes.

use std::io::Write;

use rand::Rng;
use thiserror::Error;

use crate::rng::{stream, stream_rng};
use crate::table::{FeatureTable, TableError};
use crate::Label;

pub const SCHEMA_VERSION: &str = "rsu-twin/1";

const TAG_SCHEMA: u8 = 1;
const TAG_RSU: u8 = 2;
const TAG_TIMESTAMP: u8 = 3;
const TAG_PAYLOAD: u8 = 4;
const TAG_LABEL: u8 = 5;

#[derive(Debug, Error)]
pub enum TwinError {
    #[error("invalid twin config: {0}")]
    InvalidConfig(String),
    #[error("twinning rate undefined for an empty data layer")]
    EmptyTotal,
    #[error("taken ({taken}) exceeds total ({total})")]
    TakenExceedsTotal { taken: u64, total: u64 },
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TwinError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Each item independently with probability `gamma / 100`.
    Bernoulli,
    /// Item `k` (1-based) iff `floor(k*gamma/100) > floor((k-1)*gamma/100)`.
    Stride,
}

impl Sampling {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampling::Bernoulli => "bernoulli",
            Sampling::Stride => "stride",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TwinConfig {
    pub gamma: f64,
    pub sampling: Sampling,
    pub seed: u64,
}

impl TwinConfig {
    pub fn stride(gamma: f64) -> Self {
        Self {
            gamma,
            sampling: Sampling::Stride,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 100.0) {
            return Err(TwinError::InvalidConfig(format!(
                "gamma must lie in (0, 100], got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// `100 * taken / total`.
pub fn twinning_rate(taken: u64, total: u64) -> Result<f64> {
    if total == 0 {
        return Err(TwinError::EmptyTotal);
    }
    if taken > total {
        return Err(TwinError::TakenExceedsTotal { taken, total });
    }
    Ok(100.0 * taken as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub value: f64,
}

/// A windowed feature row or packet summary, with its position in the
/// source stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Payload {
    pub source_index: u64,
    pub fields: Vec<Field>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRecord {
    pub schema_version: String,
    pub rsu_id: String,
    pub timestamp: f64,
    pub payload: Payload,
    /// Ground truth for evaluation only; never part of detector input.
    pub label_hint: Option<Label>,
}

impl TransferRecord {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version.is_empty() {
            return Err(TwinError::SchemaViolation("missing schema_version".into()));
        }
        if self.rsu_id.is_empty() {
            return Err(TwinError::SchemaViolation("missing rsu_id".into()));
        }
        if !self.timestamp.is_finite() {
            return Err(TwinError::SchemaViolation("non-finite timestamp".into()));
        }
        for f in &self.payload.fields {
            if f.name.is_empty() || f.name.len() > u16::MAX as usize {
                return Err(TwinError::SchemaViolation(format!(
                    "bad payload field name `{}`",
                    f.name
                )));
            }
        }
        Ok(())
    }
}

fn push_field(out: &mut Vec<u8>, tag: u8, value: &[u8]) {
    out.push(tag);
    out.extend_from_slice(&(value.len() as u32).to_le_bytes());
    out.extend_from_slice(value);
}

pub fn encode_transfer(record: &TransferRecord) -> Result<Vec<u8>> {
    record.validate()?;
    let mut out = Vec::with_capacity(64 + 24 * record.payload.fields.len());
    push_field(&mut out, TAG_SCHEMA, record.schema_version.as_bytes());
    push_field(&mut out, TAG_RSU, record.rsu_id.as_bytes());
    push_field(&mut out, TAG_TIMESTAMP, &record.timestamp.to_le_bytes());

    let mut payload = Vec::new();
    payload.extend_from_slice(&record.payload.source_index.to_le_bytes());
    payload.extend_from_slice(&(record.payload.fields.len() as u32).to_le_bytes());
    for f in &record.payload.fields {
        payload.extend_from_slice(&(f.name.len() as u16).to_le_bytes());
        payload.extend_from_slice(f.name.as_bytes());
        payload.extend_from_slice(&f.value.to_le_bytes());
    }
    push_field(&mut out, TAG_PAYLOAD, &payload);

    if let Some(l) = record.label_hint {
        push_field(&mut out, TAG_LABEL, &[l.index() as u8]);
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| TwinError::SchemaViolation("truncated record".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn utf8(bytes: &[u8], what: &str) -> Result<String> {
    String::from_utf8(bytes.to_vec())
        .map_err(|_| TwinError::SchemaViolation(format!("{what} is not utf-8")))
}

pub fn decode_transfer(bytes: &[u8]) -> Result<TransferRecord> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    let mut last_tag = 0u8;
    let mut schema = None;
    let mut rsu = None;
    let mut timestamp = None;
    let mut payload = None;
    let mut label = None;

    while !cur.done() {
        let [tag] = cur.array::<1>()?;
        if tag <= last_tag {
            return Err(TwinError::SchemaViolation(format!(
                "field tag {tag} out of order"
            )));
        }
        last_tag = tag;
        let len = u32::from_le_bytes(cur.array()?) as usize;
        let value = cur.take(len)?;
        match tag {
            TAG_SCHEMA => schema = Some(utf8(value, "schema_version")?),
            TAG_RSU => rsu = Some(utf8(value, "rsu_id")?),
            TAG_TIMESTAMP => {
                let b: [u8; 8] = value
                    .try_into()
                    .map_err(|_| TwinError::SchemaViolation("timestamp width".into()))?;
                timestamp = Some(f64::from_le_bytes(b));
            }
            TAG_PAYLOAD => {
                let mut p = Cursor { buf: value, pos: 0 };
                let source_index = u64::from_le_bytes(p.array()?);
                let count = u32::from_le_bytes(p.array()?) as usize;
                let mut fields = Vec::with_capacity(count.min(1024));
                for _ in 0..count {
                    let nlen = u16::from_le_bytes(p.array()?) as usize;
                    let name = utf8(p.take(nlen)?, "field name")?;
                    let value = f64::from_le_bytes(p.array()?);
                    fields.push(Field { name, value });
                }
                if !p.done() {
                    return Err(TwinError::SchemaViolation("payload trailing bytes".into()));
                }
                payload = Some(Payload {
                    source_index,
                    fields,
                });
            }
            TAG_LABEL => {
                label = Some(match value {
                    [0] => Label::Benign,
                    [1] => Label::Attack,
                    _ => return Err(TwinError::SchemaViolation("bad label_hint".into())),
                });
            }
            other => {
                return Err(TwinError::SchemaViolation(format!("unknown tag {other}")));
            }
        }
    }

    let missing = |name: &str| TwinError::SchemaViolation(format!("missing {name}"));
    let record = TransferRecord {
        schema_version: schema.ok_or_else(|| missing("schema_version"))?,
        rsu_id: rsu.ok_or_else(|| missing("rsu_id"))?,
        timestamp: timestamp.ok_or_else(|| missing("timestamp"))?,
        payload: payload.ok_or_else(|| missing("payload"))?,
        label_hint: label,
    };
    record.validate()?;
    Ok(record)
}

/// Output of [`mirror`]: what the twin layer received.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinStream {
    /// Packages taken to the twinning layer.
    pub taken: u64,
    /// Packages seen at the RSU data layer.
    pub total: u64,
    pub records: Vec<TransferRecord>,
    pub ram_bytes: u64,
}

impl TwinStream {
    pub fn achieved_rate(&self) -> Result<f64> {
        twinning_rate(self.taken, self.total)
    }
}

fn stride_takes(k: u64, gamma_micro: u128) -> bool {
    const SCALE: u128 = 100_000_000; // 100 percent in micro-percent
    let k = u128::from(k);
    (k * gamma_micro) / SCALE > ((k - 1) * gamma_micro) / SCALE
}

/// Samples `items` at the configured twinning rate, preserving order.
pub fn mirror<I>(items: I, config: &TwinConfig) -> Result<TwinStream>
where
    I: IntoIterator<Item = TransferRecord>,
{
    config.validate()?;
    let gamma_micro = (config.gamma * 1e6).round() as u128;
    let p = config.gamma / 100.0;
    let mut rng = stream_rng(config.seed, stream::TWIN_SAMPLING);
    let mut out = TwinStream {
        taken: 0,
        total: 0,
        records: Vec::new(),
        ram_bytes: 0,
    };
    for record in items {
        out.total += 1;
        let take = match config.sampling {
            Sampling::Stride => stride_takes(out.total, gamma_micro),
            Sampling::Bernoulli => rng.random::<f64>() < p,
        };
        if take {
            out.ram_bytes += encode_transfer(&record)?.len() as u64;
            out.taken += 1;
            out.records.push(record);
        }
    }
    Ok(out)
}

/// Accounted twin-side memory: serialized bytes of the retained records.
pub fn ram_usage(twin: &TwinStream) -> u64 {
    twin.ram_bytes
}

/// Latest mirrored view of one RSU.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinSnapshot {
    pub rsu_id: String,
    pub as_of: f64,
    pub source_index: u64,
    pub fields: Vec<Field>,
    pub updates: u64,
}

impl TwinSnapshot {
    pub fn apply(state: Option<Self>, record: &TransferRecord) -> Self {
        let updates = state.map_or(0, |s| s.updates) + 1;
        Self {
            rsu_id: record.rsu_id.clone(),
            as_of: record.timestamp,
            source_index: record.payload.source_index,
            fields: record.payload.fields.clone(),
            updates,
        }
    }
}

/// For every source position `0..source_len`, the index into
/// `twin.records` of the latest record mirrored at or before it.
pub fn held_state_index(twin: &TwinStream, source_len: usize) -> Vec<Option<usize>> {
    let mut out = vec![None; source_len];
    let mut cursor = 0usize;
    let mut current = None;
    for (pos, slot) in out.iter_mut().enumerate() {
        while cursor < twin.records.len()
            && twin.records[cursor].payload.source_index as usize <= pos
        {
            current = Some(cursor);
            cursor += 1;
        }
        *slot = current;
    }
    out
}

/// One transfer record per table row. Row `i` is stamped `i * window`.
/// Labels travel only as `label_hint`.
pub fn records_from_table(table: &FeatureTable, rsu_id: &str, window: f64) -> Vec<TransferRecord> {
    let labels = table.labels();
    table
        .rows()
        .iter()
        .enumerate()
        .map(|(i, row)| TransferRecord {
            schema_version: SCHEMA_VERSION.to_string(),
            rsu_id: rsu_id.to_string(),
            timestamp: i as f64 * window,
            payload: Payload {
                source_index: i as u64,
                fields: table
                    .column_names()
                    .iter()
                    .zip(row)
                    .map(|(n, v)| Field {
                        name: n.clone(),
                        value: *v,
                    })
                    .collect(),
            },
            label_hint: labels.map(|l| l[i]),
        })
        .collect()
}

/// Rebuilds an unlabelled feature table from payload fields only.
pub fn table_from_records(records: &[TransferRecord]) -> Result<FeatureTable> {
    let Some(first) = records.first() else {
        return Ok(FeatureTable::new(Vec::new(), Vec::new(), None)?);
    };
    let names: Vec<String> = first
        .payload
        .fields
        .iter()
        .map(|f| f.name.clone())
        .collect();
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        if r.payload.fields.len() != names.len()
            || r.payload
                .fields
                .iter()
                .zip(&names)
                .any(|(f, n)| &f.name != n)
        {
            return Err(TwinError::SchemaViolation(format!(
                "record {} has a different field layout",
                r.payload.source_index
            )));
        }
        rows.push(r.payload.fields.iter().map(|f| f.value).collect());
    }
    Ok(FeatureTable::new(names, rows, None)?)
}

/// CSV export: `source_index,timestamp,rsu_id,<fields...>,label_hint`.
pub fn write_twin_csv<W: Write>(twin: &TwinStream, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let field_names: Vec<String> = twin
        .records
        .first()
        .map(|r| r.payload.fields.iter().map(|f| f.name.clone()).collect())
        .unwrap_or_default();
    let mut header = vec![
        "source_index".to_string(),
        "timestamp".into(),
        "rsu_id".into(),
    ];
    header.extend(field_names);
    header.push("label_hint".into());
    w.write_record(&header)?;
    for r in &twin.records {
        let mut rec = vec![
            r.payload.source_index.to_string(),
            r.timestamp.to_string(),
            r.rsu_id.clone(),
        ];
        rec.extend(r.payload.fields.iter().map(|f| f.value.to_string()));
        rec.push(
            r.label_hint
                .map(|l| l.as_str().to_string())
                .unwrap_or_default(),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Metadata sidecar accompanying [`write_twin_csv`], in TOML.
pub fn twin_sidecar(twin: &TwinStream, config: &TwinConfig) -> String {
    format!(
        "schema_version = \"{SCHEMA_VERSION}\"\ngamma = {:?}\nsampling = \"{}\"\nseed = {}\ntaken = {}\ntotal = {}\nram_bytes = {}\n",
        config.gamma,
        config.sampling.as_str(),
        config.seed,
        twin.taken,
        twin.total,
        twin.ram_bytes
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(i: u64) -> TransferRecord {
        TransferRecord {
            schema_version: SCHEMA_VERSION.into(),
            rsu_id: "rsu-0".into(),
            timestamp: i as f64 * 10.0,
            payload: Payload {
                source_index: i,
                fields: vec![
                    Field {
                        name: "arrival_count".into(),
                        value: i as f64,
                    },
                    Field {
                        name: "mean_wait".into(),
                        value: 0.25,
                    },
                ],
            },
            label_hint: Some(if i.is_multiple_of(3) {
                Label::Attack
            } else {
                Label::Benign
            }),
        }
    }

    fn stream_of(n: u64) -> Vec<TransferRecord> {
        (0..n).map(record).collect()
    }

    #[test]
    fn rate_examples() {
        assert_eq!(twinning_rate(760, 1000).unwrap(), 76.0);
        assert_eq!(twinning_rate(0, 500).unwrap(), 0.0);
        assert_eq!(twinning_rate(500, 500).unwrap(), 100.0);
        assert!(matches!(twinning_rate(1, 0), Err(TwinError::EmptyTotal)));
        assert!(matches!(
            twinning_rate(6, 5),
            Err(TwinError::TakenExceedsTotal { .. })
        ));
    }

    #[test]
    fn config_bounds() {
        for g in [0.0, -1.0, 100.5, f64::NAN] {
            assert!(mirror(stream_of(3), &TwinConfig::stride(g)).is_err());
        }
    }

    #[test]
    fn full_rate_is_identity() {
        for sampling in [Sampling::Stride, Sampling::Bernoulli] {
            let cfg = TwinConfig {
                gamma: 100.0,
                sampling,
                seed: 4,
            };
            let t = mirror(stream_of(37), &cfg).unwrap();
            assert_eq!(t.taken, 37);
            assert_eq!(t.records, stream_of(37));
        }
    }

    #[test]
    fn stride_half_alternates() {
        let t = mirror(stream_of(10), &TwinConfig::stride(50.0)).unwrap();
        assert_eq!(t.taken, 5);
        let idx: Vec<u64> = t.records.iter().map(|r| r.payload.source_index).collect();
        assert_eq!(idx, vec![1, 3, 5, 7, 9]);
    }

    #[test]
    fn bernoulli_concentrates() {
        let cfg = TwinConfig {
            gamma: 76.0,
            sampling: Sampling::Bernoulli,
            seed: 2024,
        };
        let t = mirror(stream_of(100_000), &cfg).unwrap();
        let rate = t.achieved_rate().unwrap();
        assert!((74.0..=78.0).contains(&rate), "{rate}");
    }

    #[test]
    fn codec_examples() {
        let r = record(7);
        let bytes = encode_transfer(&r).unwrap();
        assert_eq!(decode_transfer(&bytes).unwrap(), r);
        assert_eq!(encode_transfer(&record(7)).unwrap(), bytes);

        let mut missing = record(1);
        missing.rsu_id.clear();
        assert!(matches!(
            encode_transfer(&missing),
            Err(TwinError::SchemaViolation(_))
        ));

        // Drop the rsu_id field from a valid encoding.
        let good = encode_transfer(&record(1)).unwrap();
        let schema_len = 5 + SCHEMA_VERSION.len();
        let rsu_len = 5 + "rsu-0".len();
        let mut cut = good[..schema_len].to_vec();
        cut.extend_from_slice(&good[schema_len + rsu_len..]);
        assert!(matches!(
            decode_transfer(&cut),
            Err(TwinError::SchemaViolation(m)) if m.contains("rsu_id")
        ));
        assert!(decode_transfer(&good[..good.len() - 1]).is_err());
        let mut trailing = good.clone();
        trailing.push(9);
        assert!(decode_transfer(&trailing).is_err());
    }

    #[test]
    fn ram_accounting() {
        let empty = mirror(Vec::new(), &TwinConfig::stride(50.0)).unwrap();
        assert_eq!(ram_usage(&empty), 0);

        let s = stream_of(1001);
        let max_size = s
            .iter()
            .map(|r| encode_transfer(r).unwrap().len() as u64)
            .max()
            .unwrap();
        let full = mirror(s.clone(), &TwinConfig::stride(100.0)).unwrap();
        let half = mirror(s.clone(), &TwinConfig::stride(50.0)).unwrap();
        assert!(ram_usage(&full) + max_size >= 2 * ram_usage(&half));

        let double: Vec<_> = (0..2002).map(record).collect();
        let half2 = mirror(double, &TwinConfig::stride(50.0)).unwrap();
        let diff = (ram_usage(&half2) as i64 - 2 * ram_usage(&half) as i64).unsigned_abs();
        assert!(diff <= max_size);
    }

    #[test]
    fn held_state_follows_latest_record() {
        let t = mirror(stream_of(10), &TwinConfig::stride(50.0)).unwrap();
        let held = held_state_index(&t, 10);
        assert_eq!(held[0], None);
        assert_eq!(held[1], Some(0));
        assert_eq!(held[2], Some(0));
        assert_eq!(held[9], Some(4));
        let snap = t
            .records
            .iter()
            .fold(None, |s, r| Some(TwinSnapshot::apply(s, r)))
            .unwrap();
        assert_eq!(snap.updates, 5);
        assert_eq!(snap.source_index, 9);
    }

    #[test]
    fn table_records_round_trip_drops_labels() {
        let table = FeatureTable::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            Some(vec![Label::Benign, Label::Attack]),
        )
        .unwrap();
        let recs = records_from_table(&table, "rsu-1", 5.0);
        assert_eq!(recs[1].label_hint, Some(Label::Attack));
        assert_eq!(recs[1].timestamp, 5.0);
        let back = table_from_records(&recs).unwrap();
        assert!(back.labels().is_none());
        assert_eq!(back.rows(), table.rows());
        assert!(!back.column_names().iter().any(|c| c.contains("label")));
    }

    #[test]
    fn csv_and_sidecar() {
        let cfg = TwinConfig::stride(50.0);
        let t = mirror(stream_of(4), &cfg).unwrap();
        let mut buf = Vec::new();
        write_twin_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(
            text.starts_with("source_index,timestamp,rsu_id,arrival_count,mean_wait,label_hint\n")
        );
        assert_eq!(text.lines().count(), 3);
        let meta: toml::Table = twin_sidecar(&t, &cfg).parse().unwrap();
        assert_eq!(meta["taken"].as_integer(), Some(2));
        assert_eq!(meta["total"].as_integer(), Some(4));
        assert_eq!(meta["gamma"].as_float(), Some(50.0));
    }

    proptest! {
        #[test]
        fn codec_round_trip(ts in -1e9f64..1e9, idx in any::<u64>(),
                            vals in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..12),
                            hint in proptest::option::of(any::<bool>())) {
            let r = TransferRecord {
                schema_version: SCHEMA_VERSION.into(),
                rsu_id: "rsu-x".into(),
                timestamp: ts,
                payload: Payload {
                    source_index: idx,
                    fields: vals.iter().enumerate().map(|(i, v)| Field { name: format!("f{i}"), value: *v }).collect(),
                },
                label_hint: hint.map(|b| if b { Label::Attack } else { Label::Benign }),
            };
            let bytes = encode_transfer(&r).unwrap();
            prop_assert_eq!(decode_transfer(&bytes).unwrap(), r);
        }

        #[test]
        fn stride_is_monotone_and_exact(n in 1u64..3000, g1 in 1u32..=100, g2 in 1u32..=100) {
            let (lo, hi) = (g1.min(g2) as f64, g1.max(g2) as f64);
            let s = stream_of(n);
            let a = mirror(s.clone(), &TwinConfig::stride(lo)).unwrap();
            let b = mirror(s, &TwinConfig::stride(hi)).unwrap();
            prop_assert!(a.taken <= b.taken);
            prop_assert!(a.ram_bytes <= b.ram_bytes);
            let rate = a.achieved_rate().unwrap();
            prop_assert!((rate - lo).abs() <= 100.0 / n as f64 + 1e-9);
            prop_assert!(a.records.windows(2).all(|w| w[0].payload.source_index < w[1].payload.source_index));
        }
    }
}
