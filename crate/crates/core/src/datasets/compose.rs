//! Mapping raw sources onto canonical columns, the RF-jamming merge and
//! Dataset-2 composition.

use rand::seq::index;

use super::{ColumnMap, DatasetError, RawTable, Result, SourceSchema};
use crate::rng::{stream, stream_rng};
use crate::table::FeatureTable;
use crate::Label;

/// Column added by [`merge_rf_jamming`].
pub const SPEED_COLUMN: &str = "max_est_rel_speed";
/// No-attack rows drawn from each speed group for Dataset-2.
pub const BENIGN_PER_GROUP: usize = 1000;
const BENIGN_GROUPS: usize = 2;
/// Attack rows drawn for Dataset-2.
pub const ATTACK_ROWS: usize = 400;

/// A numeric table plus what was discarded to get it.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub table: FeatureTable,
    /// Rows with a non-numeric or non-finite cell in a kept column.
    pub dropped_rows: usize,
    /// Input columns that had no mapping entry.
    pub dropped_columns: Vec<String>,
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Converts the given `(source column, canonical name)` pairs of `raw`.
fn numeric_rows(
    raw: &RawTable,
    columns: &[(usize, String)],
    schema: &SourceSchema,
    extra: Option<f64>,
) -> Result<(Vec<Vec<f64>>, Vec<Label>, usize)> {
    let label_idx =
        raw.column_index(&schema.label_column)
            .ok_or_else(|| DatasetError::MissingColumn {
                source_name: raw.source_name.clone(),
                column: schema.label_column.clone(),
            })?;
    let mut rows = Vec::with_capacity(raw.n_rows());
    let mut labels = Vec::with_capacity(raw.n_rows());
    let mut dropped = 0;
    for cells in &raw.rows {
        let parsed: Option<Vec<f64>> = columns
            .iter()
            .map(|(j, _)| parse_cell(&cells[*j]))
            .collect();
        match parsed {
            Some(mut row) => {
                row.extend(extra);
                rows.push(row);
                labels.push(schema.parse_label(&cells[label_idx]));
            }
            None => dropped += 1,
        }
    }
    Ok((rows, labels, dropped))
}

/// Mapped columns of `raw` in mapping order, renamed to canonical names.
pub fn ingest(raw: &RawTable, schema: &SourceSchema) -> Result<Ingested> {
    let columns: Vec<(usize, String)> = schema
        .columns
        .iter()
        .filter_map(|c| {
            raw.column_index(&c.source)
                .map(|j| (j, c.canonical.clone()))
        })
        .collect();
    if columns.is_empty() {
        return Err(DatasetError::NoCommonColumns);
    }
    let (rows, labels, dropped_rows) = numeric_rows(raw, &columns, schema, None)?;
    let dropped_columns = raw
        .column_names
        .iter()
        .filter(|c| **c != schema.label_column && schema.canonical_for(c).is_none())
        .cloned()
        .collect();
    Ok(Ingested {
        table: FeatureTable::new(
            columns.into_iter().map(|(_, n)| n).collect(),
            rows,
            Some(labels),
        )?,
        dropped_rows,
        dropped_columns,
    })
}

/// Concatenates two RF-jamming files over their shared mapped columns and
/// appends [`SPEED_COLUMN`] holding each file's speed.
pub fn merge_rf_jamming(
    a: &RawTable,
    b: &RawTable,
    speed_a: f64,
    speed_b: f64,
    schema: &SourceSchema,
) -> Result<Ingested> {
    let shared: Vec<&ColumnMap> = schema
        .columns
        .iter()
        .filter(|c| a.column_index(&c.source).is_some() && b.column_index(&c.source).is_some())
        .collect();
    if shared.is_empty() {
        return Err(DatasetError::NoCommonColumns);
    }
    let cols_for = |t: &RawTable| -> Vec<(usize, String)> {
        shared
            .iter()
            .map(|c| {
                (
                    t.column_index(&c.source).expect("shared"),
                    c.canonical.clone(),
                )
            })
            .collect()
    };
    let (mut rows, mut labels, dropped_a) = numeric_rows(a, &cols_for(a), schema, Some(speed_a))?;
    let (rows_b, labels_b, dropped_b) = numeric_rows(b, &cols_for(b), schema, Some(speed_b))?;
    rows.extend(rows_b);
    labels.extend(labels_b);

    let kept: Vec<&str> = shared.iter().map(|c| c.source.as_str()).collect();
    let mut dropped_columns: Vec<String> = Vec::new();
    for t in [a, b] {
        for c in &t.column_names {
            if *c != schema.label_column
                && !kept.contains(&c.as_str())
                && !dropped_columns.contains(c)
            {
                dropped_columns.push(c.clone());
            }
        }
    }
    let mut names: Vec<String> = shared.iter().map(|c| c.canonical.clone()).collect();
    names.push(SPEED_COLUMN.to_string());
    Ok(Ingested {
        table: FeatureTable::new(names, rows, Some(labels))?,
        dropped_rows: dropped_a + dropped_b,
        dropped_columns,
    })
}

/// Dataset-2 and its provenance log.
#[derive(Debug, Clone, PartialEq)]
pub struct Composed {
    pub table: FeatureTable,
    /// Columns present in only one input.
    pub dropped_columns: Vec<String>,
}

fn sample_sorted(pool: &[usize], n: usize, seed: u64, salt: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, stream::COMPOSE + salt);
    let mut picked: Vec<usize> = index::sample(&mut rng, pool.len(), n)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Draws [`BENIGN_PER_GROUP`] no-attack rows from each of the two lowest
/// speed groups of `no_attack` (or twice that from the whole table when it
/// has no [`SPEED_COLUMN`]) and [`ATTACK_ROWS`] attack rows from `attack`,
/// uniformly under `seed`. Output labels follow provenance; features are
/// the columns both inputs share, in `no_attack` order.
pub fn compose_dataset2(
    no_attack: &FeatureTable,
    attack: &FeatureTable,
    seed: u64,
) -> Result<Composed> {
    let benign_labels = no_attack.require_labels()?;
    let attack_labels = attack.require_labels()?;
    let shared: Vec<String> = no_attack
        .column_names()
        .iter()
        .filter(|c| attack.column_index(c).is_some() && c.as_str() != SPEED_COLUMN)
        .cloned()
        .collect();
    if shared.is_empty() {
        return Err(DatasetError::NoCommonColumns);
    }
    let mut dropped_columns: Vec<String> = Vec::new();
    for t in [no_attack, attack] {
        for c in t.column_names() {
            if !shared.contains(c) && !dropped_columns.contains(c) {
                dropped_columns.push(c.clone());
            }
        }
    }

    let benign: Vec<usize> = (0..no_attack.n_rows())
        .filter(|&i| !benign_labels[i].is_attack())
        .collect();
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    match no_attack.column_index(SPEED_COLUMN) {
        Some(j) => {
            for &i in &benign {
                let s = no_attack.row(i)[j];
                match groups.iter_mut().find(|(v, _)| *v == s) {
                    Some((_, g)) => g.push(i),
                    None => groups.push((s, vec![i])),
                }
            }
            groups.sort_by(|a, b| a.0.total_cmp(&b.0));
            if groups.len() < BENIGN_GROUPS {
                return Err(DatasetError::InsufficientSamples {
                    what: "no-attack speed groups".into(),
                    required: BENIGN_GROUPS,
                    got: groups.len(),
                });
            }
            groups.truncate(BENIGN_GROUPS);
        }
        None => groups.push((0.0, benign)),
    }
    let per_group = BENIGN_PER_GROUP * BENIGN_GROUPS / groups.len();
    let mut picked_benign = Vec::new();
    for (g, (speed, pool)) in groups.iter().enumerate() {
        if pool.len() < per_group {
            return Err(DatasetError::InsufficientSamples {
                what: format!("no-attack rows at speed {speed}"),
                required: per_group,
                got: pool.len(),
            });
        }
        picked_benign.push(sample_sorted(pool, per_group, seed, g as u64));
    }

    let attack_pool: Vec<usize> = (0..attack.n_rows())
        .filter(|&i| attack_labels[i].is_attack())
        .collect();
    if attack_pool.len() < ATTACK_ROWS {
        return Err(DatasetError::InsufficientSamples {
            what: "attack rows".into(),
            required: ATTACK_ROWS,
            got: attack_pool.len(),
        });
    }
    let picked_attack = sample_sorted(&attack_pool, ATTACK_ROWS, seed, 1 << 8);

    let a = no_attack.select_columns_by_name(&shared)?;
    let b = attack.select_columns_by_name(&shared)?;
    let mut rows = Vec::with_capacity(per_group * groups.len() + ATTACK_ROWS);
    let mut labels = Vec::with_capacity(rows.capacity());
    for group in &picked_benign {
        for &i in group {
            rows.push(a.row(i).to_vec());
            labels.push(Label::Benign);
        }
    }
    for &i in &picked_attack {
        rows.push(b.row(i).to_vec());
        labels.push(Label::Attack);
    }
    Ok(Composed {
        table: FeatureTable::new(shared, rows, Some(labels))?,
        dropped_columns,
    })
}
