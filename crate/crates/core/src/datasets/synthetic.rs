//! Simulator-backed stand-ins for the RF-jamming and ToN-IoT files.
//!
//! Each file is the windowed trace of one simulated RSU with attack bursts
//! planted on whole windows, so every window label is known by
//! construction. Column names follow the bundled schema mapping.

use rand::{Rng, RngCore};

use super::{compose_dataset2, merge_rf_jamming, Manifest, RawTable, Result, SchemaMapping};
use crate::queueing::QueueParams;
use crate::rng::{stream, stream_rng};
use crate::sim::{self, AttackProfile, Scenario};
use crate::table::FeatureTable;

/// RF-jamming file header, in the same order as [`sim::WINDOW_COLUMNS`].
pub const RF_COLUMNS: [&str; 8] = [
    "n_packets",
    "avg_wait",
    "max_wait",
    "lost",
    "avg_size",
    "avg_rssi",
    "avg_rel_speed",
    "busy_ratio",
];

/// ToN-IoT file header for the mapped subset of [`sim::WINDOW_COLUMNS`],
/// as `(window column, file column)`.
pub const TON_COLUMNS: [(&str, &str); 6] = [
    ("arrival_count", "src_pkts"),
    ("mean_wait", "duration"),
    ("max_wait", "max_duration"),
    ("drop_count", "dropped_pkts"),
    ("mean_size", "src_bytes"),
    ("busy_fraction", "conn_busy"),
];

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub params: QueueParams,
    /// Feature window length, seconds.
    pub window: f64,
    pub rf_benign_windows: usize,
    pub rf_attack_windows: usize,
    pub ton_benign_windows: usize,
    pub ton_attack_windows: usize,
    /// Inclusive range of attack burst lengths, in windows.
    pub burst: (usize, usize),
    pub jam_loss: f64,
    pub jam_burstiness: f64,
    pub flood_multiplier: f64,
    /// Maximum relative speeds of the two RF files, m/s.
    pub speeds: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            params: QueueParams {
                lambda_r: 8.0,
                mu: 3.0,
                m: 4,
            },
            window: 5.0,
            rf_benign_windows: 1000,
            rf_attack_windows: 200,
            ton_benign_windows: 1000,
            ton_attack_windows: 500,
            burst: (5, 15),
            jam_loss: 0.5,
            jam_burstiness: 3.0,
            flood_multiplier: 4.0,
            speeds: (15.0, 30.0),
            seed: 0,
        }
    }
}

/// Disjoint, non-adjacent attack bursts as `[start, end)` window ranges
/// covering exactly `attack` of `benign + attack` windows.
pub fn plant_bursts(
    benign: usize,
    attack: usize,
    burst: (usize, usize),
    seed: u64,
) -> Vec<(usize, usize)> {
    let mut rng = stream_rng(seed, stream::SYNTHETIC);
    let (lo, hi) = (burst.0.max(1), burst.1.max(burst.0.max(1)));
    let mut lengths = Vec::new();
    let mut left = attack;
    while left > 0 {
        let len = rng.random_range(lo..=hi).min(left);
        if len < lo && !lengths.is_empty() {
            *lengths.last_mut().expect("nonempty") += len;
        } else {
            lengths.push(len);
        }
        left -= len;
    }
    let bursts = lengths.len();
    if bursts == 0 {
        return Vec::new();
    }
    // Benign gaps: bursts + 1 of them, inner gaps at least one window.
    let inner_min = bursts - 1;
    assert!(
        benign >= inner_min,
        "not enough benign windows to separate bursts"
    );
    let spare = benign - inner_min;
    let mut cuts: Vec<usize> = (0..bursts).map(|_| rng.random_range(0..=spare)).collect();
    cuts.sort_unstable();
    let mut gaps = Vec::with_capacity(bursts + 1);
    let mut prev = 0;
    for &c in &cuts {
        gaps.push(c - prev);
        prev = c;
    }
    gaps.push(spare - prev);
    for g in gaps.iter_mut().take(bursts).skip(1) {
        *g += 1;
    }
    let mut out = Vec::with_capacity(bursts);
    let mut w = 0;
    for (len, gap) in lengths.iter().zip(&gaps) {
        w += gap;
        out.push((w, w + len));
        w += len;
    }
    out
}

fn derived_seed(seed: u64, salt: u64) -> u64 {
    stream_rng(seed, stream::SYNTHETIC + 1 + salt).next_u64()
}

fn base_scenario(cfg: &SyntheticConfig, windows: usize, seed: u64) -> Scenario {
    let mut sc = Scenario::new(cfg.params, windows as f64 * cfg.window, seed);
    sc.feature_window = cfg.window;
    sc
}

fn to_intervals(bursts: &[(usize, usize)], window: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    bursts
        .iter()
        .map(move |&(a, b)| (a as f64 * window, b as f64 * window))
}

/// Jamming scenario for RF file `which` (0 or 1).
pub fn rf_scenario(cfg: &SyntheticConfig, which: u64) -> Scenario {
    let seed = derived_seed(cfg.seed, which);
    let windows = cfg.rf_benign_windows + cfg.rf_attack_windows;
    let mut sc = base_scenario(cfg, windows, seed);
    sc.traffic.max_relative_speed = if which == 0 {
        cfg.speeds.0
    } else {
        cfg.speeds.1
    };
    let bursts = plant_bursts(
        cfg.rf_benign_windows,
        cfg.rf_attack_windows,
        cfg.burst,
        seed,
    );
    sc.attacks = to_intervals(&bursts, cfg.window)
        .map(|(s, e)| AttackProfile::jam(s, e, cfg.jam_loss, cfg.jam_burstiness))
        .collect();
    sc
}

/// Flooding scenario behind the ToN-IoT stand-in. `salt` selects an
/// independent realisation; salt 0 is the bundled file.
pub fn flood_scenario(cfg: &SyntheticConfig, salt: u64) -> Scenario {
    let seed = derived_seed(cfg.seed, 2 + salt);
    let windows = cfg.ton_benign_windows + cfg.ton_attack_windows;
    let mut sc = base_scenario(cfg, windows, seed);
    let bursts = plant_bursts(
        cfg.ton_benign_windows,
        cfg.ton_attack_windows,
        cfg.burst,
        seed,
    );
    sc.attacks = to_intervals(&bursts, cfg.window)
        .map(|(s, e)| AttackProfile::flood(s, e, cfg.flood_multiplier))
        .collect();
    sc
}

/// Runs `scenario` and returns its labelled windows.
pub fn windows_of(scenario: &Scenario) -> Result<FeatureTable> {
    let trace = sim::run(scenario)?;
    Ok(sim::windowize(&trace, scenario.feature_window)?)
}

fn label_cell(attack: bool) -> String {
    if attack { "1" } else { "0" }.to_string()
}

pub fn rf_jamming_raw(cfg: &SyntheticConfig, which: u64) -> Result<RawTable> {
    let w = windows_of(&rf_scenario(cfg, which))?;
    let labels = w.require_labels()?;
    let mut header: Vec<String> = RF_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.push("label".into());
    let rows = w
        .rows()
        .iter()
        .zip(labels)
        .map(|(r, l)| {
            let mut cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            cells.push(label_cell(l.is_attack()));
            cells
        })
        .collect();
    Ok(RawTable {
        source_name: format!("synthetic-rf-jamming-{}", which + 1),
        column_names: header,
        rows,
    })
}

pub fn ton_iot_raw(cfg: &SyntheticConfig) -> Result<RawTable> {
    let w = windows_of(&flood_scenario(cfg, 0))?;
    let labels = w.require_labels()?;
    let idx: Vec<usize> = TON_COLUMNS
        .iter()
        .map(|(c, _)| w.column_index(c).expect("window column"))
        .collect();
    let mut header: Vec<String> = TON_COLUMNS.iter().map(|(_, s)| s.to_string()).collect();
    header.extend(["proto", "type", "label"].map(String::from));
    let rows = w
        .rows()
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (r, l))| {
            let mut cells: Vec<String> = idx.iter().map(|&j| r[j].to_string()).collect();
            cells.push(if i % 3 == 0 { "tcp" } else { "udp" }.into());
            cells.push(if l.is_attack() { "ddos" } else { "normal" }.into());
            cells.push(label_cell(l.is_attack()));
            cells
        })
        .collect();
    Ok(RawTable {
        source_name: "synthetic-ton-iot".into(),
        column_names: header,
        rows,
    })
}

/// The three stand-in files.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBundle {
    pub rf_a: RawTable,
    pub rf_b: RawTable,
    pub ton: RawTable,
}

impl RawBundle {
    pub fn generate(cfg: &SyntheticConfig) -> Result<Self> {
        Ok(Self {
            rf_a: rf_jamming_raw(cfg, 0)?,
            rf_b: rf_jamming_raw(cfg, 1)?,
            ton: ton_iot_raw(cfg)?,
        })
    }
}

/// Dataset-1 and Dataset-2 with their manifests.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub dataset1: FeatureTable,
    pub dataset2: FeatureTable,
    pub manifest1: Manifest,
    pub manifest2: Manifest,
}

/// Builds both datasets from raw files. `speeds` label the two RF files.
pub fn build_benchmark(
    raw: &RawBundle,
    speeds: (f64, f64),
    mapping: &SchemaMapping,
    seed: u64,
) -> Result<Benchmark> {
    let d1 = merge_rf_jamming(
        &raw.rf_a,
        &raw.rf_b,
        speeds.0,
        speeds.1,
        &mapping.rf_jamming,
    )?;
    let ton = super::ingest(&raw.ton, &mapping.ton_iot)?;
    let d2 = compose_dataset2(&d1.table, &ton.table, seed)?;
    let attack_rows = |t: &FeatureTable| t.attack_count().unwrap_or(0);
    let manifest1 = Manifest {
        dataset: "dataset-1".into(),
        sources: vec![raw.rf_a.source_name.clone(), raw.rf_b.source_name.clone()],
        mapping_version: mapping.version,
        rows: d1.table.n_rows(),
        attack_rows: attack_rows(&d1.table),
        dropped_rows: d1.dropped_rows,
        dropped_columns: d1.dropped_columns.clone(),
        seed: None,
    };
    let mut dropped_columns = ton.dropped_columns.clone();
    dropped_columns.extend(d2.dropped_columns.iter().cloned());
    let manifest2 = Manifest {
        dataset: "dataset-2".into(),
        sources: vec![
            raw.rf_a.source_name.clone(),
            raw.rf_b.source_name.clone(),
            raw.ton.source_name.clone(),
        ],
        mapping_version: mapping.version,
        rows: d2.table.n_rows(),
        attack_rows: attack_rows(&d2.table),
        dropped_rows: d1.dropped_rows + ton.dropped_rows,
        dropped_columns,
        seed: Some(seed),
    };
    Ok(Benchmark {
        dataset1: d1.table,
        dataset2: d2.table,
        manifest1,
        manifest2,
    })
}
