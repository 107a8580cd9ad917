//! Experiment configuration, read from TOML. Every key is optional; see
//! the README for the full key list and defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cybertwin::datasets::synthetic::SyntheticConfig;
use cybertwin::detection::LabelSource;
use cybertwin::queueing::QueueParams;
use cybertwin::sim::{AttackProfile, Scenario, TrafficProfile};
use cybertwin::twinning::Sampling;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    QueueValidate,
    Simulate,
    DetectBench,
    DelayDelivery,
    TwinningSweep,
    Resource,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::QueueValidate => "queue-validate",
            Experiment::Simulate => "simulate",
            Experiment::DetectBench => "detect-bench",
            Experiment::DelayDelivery => "delay-delivery",
            Experiment::TwinningSweep => "twinning-sweep",
            Experiment::Resource => "resource",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Used by `cybertwin run`; subcommands ignore it.
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataConfig,
    pub queue_validate: QueueValidateConfig,
    pub simulate: SimulateConfig,
    pub detect_bench: DetectBenchConfig,
    pub delay_delivery: DelayDeliveryConfig,
    pub twinning_sweep: TwinningSweepConfig,
    pub resource: ResourceConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 42,
            out: PathBuf::from("out"),
            data: DataConfig::default(),
            queue_validate: QueueValidateConfig::default(),
            simulate: SimulateConfig::default(),
            detect_bench: DetectBenchConfig::default(),
            delay_delivery: DelayDeliveryConfig::default(),
            twinning_sweep: TwinningSweepConfig::default(),
            resource: ResourceConfig::default(),
        }
    }
}

/// Input tables. With no files configured, the synthetic stand-in is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// The two RF-jamming files, one per speed group.
    pub rf_jamming: Option<[PathBuf; 2]>,
    /// Maximum estimated relative speed of each RF file, m/s.
    pub rf_speeds: [f64; 2],
    pub ton_iot: Option<PathBuf>,
    /// Replacement for the bundled schema mapping.
    pub mapping: Option<PathBuf>,
    /// Stand-in generator; its seed and speeds are replaced by the run seed
    /// and `rf_speeds`.
    pub synthetic: SyntheticConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        let synthetic = SyntheticConfig::default();
        Self {
            rf_jamming: None,
            rf_speeds: [synthetic.speeds.0, synthetic.speeds.1],
            ton_iot: None,
            mapping: None,
            synthetic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub lambda_r: f64,
    pub mu: f64,
    pub m: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueueValidateConfig {
    pub grid: Vec<GridPoint>,
    /// Completed requests targeted per grid point.
    pub min_completions: usize,
}

impl Default for QueueValidateConfig {
    fn default() -> Self {
        let p = |lambda_r, mu, m| GridPoint { lambda_r, mu, m };
        Self {
            grid: vec![
                p(0.5, 1.0, 1),
                p(1.5, 1.0, 2),
                p(2.4, 1.0, 4),
                p(4.5, 1.0, 4),
            ],
            min_completions: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub params: QueueParams,
    pub duration: f64,
    pub attacks: Vec<AttackProfile>,
    pub message_lifetime: Option<f64>,
    pub feature_window: f64,
    pub service_overhead: f64,
    pub traffic: TrafficProfile,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            params: QueueParams {
                lambda_r: 8.0,
                mu: 3.0,
                m: 4,
            },
            duration: 600.0,
            attacks: vec![
                AttackProfile::flood(200.0, 260.0, 4.0),
                AttackProfile::jam(400.0, 450.0, 0.5, 3.0),
            ],
            message_lifetime: None,
            feature_window: 5.0,
            service_overhead: 0.0,
            traffic: TrafficProfile::default(),
        }
    }
}

impl SimulateConfig {
    pub fn scenario(&self, seed: u64) -> Scenario {
        Scenario {
            params: self.params,
            duration: self.duration,
            seed,
            attacks: self.attacks.clone(),
            message_lifetime: self.message_lifetime,
            feature_window: self.feature_window,
            service_overhead: self.service_overhead,
            traffic: self.traffic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train: 0.7,
            validation: 0.15,
            test: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsSection {
    /// Label source behind the main report row; the other source is
    /// reported separately.
    pub label_source: LabelSource,
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden: [usize; 3],
    /// Features kept by AutoFS; default `max(4, ceil(d / 2))`.
    pub k: Option<usize>,
}

impl Default for PsSection {
    fn default() -> Self {
        Self {
            label_source: LabelSource::GroundTruth,
            epochs: 60,
            learning_rate: 0.05,
            hidden: [32, 16, 8],
            k: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSection {
    pub epochs: usize,
    pub lambda_reg: f64,
    pub eta0: f64,
}

impl Default for SvmSection {
    fn default() -> Self {
        let d = cybertwin::detection::SvmConfig::default();
        Self {
            epochs: d.epochs,
            lambda_reg: d.lambda_reg,
            eta0: d.eta0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectBenchConfig {
    pub split: SplitConfig,
    pub knn_k: usize,
    pub svm: SvmSection,
    pub ps: PsSection,
}

impl Default for DetectBenchConfig {
    fn default() -> Self {
        Self {
            split: SplitConfig::default(),
            knn_k: 5,
            svm: SvmSection::default(),
            ps: PsSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelayDeliveryConfig {
    /// Message lifetimes in seconds; `inf` disables expiry.
    pub lifetimes: Vec<f64>,
    pub params: QueueParams,
    pub duration: f64,
    /// Simulated seconds charged per multiply-accumulate of inference.
    pub seconds_per_op: f64,
    /// Stored reference rows a KNN query scans.
    pub reference_rows: usize,
    /// Feature count of the served rows.
    pub features: usize,
}

impl Default for DelayDeliveryConfig {
    fn default() -> Self {
        Self {
            lifetimes: vec![1.0, 2.0, 5.0, 10.0, 20.0, f64::INFINITY],
            params: QueueParams {
                lambda_r: 3.2,
                mu: 1.0,
                m: 4,
            },
            duration: 30_000.0,
            seconds_per_op: 5e-6,
            reference_rows: 2000,
            features: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwinningSweepConfig {
    pub gammas: Vec<f64>,
    pub sampling: Sampling,
    /// Share of the full-rate detection rate a gamma must keep to enter the
    /// recommended range.
    pub keep_fraction: f64,
}

impl Default for TwinningSweepConfig {
    fn default() -> Self {
        Self {
            gammas: vec![
                10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 76.0, 80.0, 90.0, 100.0,
            ],
            sampling: Sampling::Stride,
            keep_fraction: 0.98,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceConfig {
    pub gamma: f64,
    pub sampling: Sampling,
}

impl Default for ResourceConfig {
    fn default() -> Self {
        Self {
            gamma: 80.0,
            sampling: Sampling::Stride,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file; relative data paths resolve against its folder.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(files) = cfg.data.rf_jamming.as_mut() {
            files.iter_mut().for_each(fix);
        }
        cfg.data.ton_iot.as_mut().map(fix);
        cfg.data.mapping.as_mut().map(fix);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.data.rf_jamming.is_some() != self.data.ton_iot.is_some() {
            return bad("data.rf_jamming and data.ton_iot must be given together".into());
        }
        if self.queue_validate.grid.is_empty() {
            return bad("queue_validate.grid is empty".into());
        }
        if self.delay_delivery.lifetimes.is_empty() {
            return bad("delay_delivery.lifetimes is empty".into());
        }
        if self
            .delay_delivery
            .lifetimes
            .iter()
            .any(|l| l.is_nan() || *l <= 0.0)
        {
            return bad("delay_delivery.lifetimes must be positive".into());
        }
        if self.twinning_sweep.gammas.is_empty() {
            return bad("twinning_sweep.gammas is empty".into());
        }
        if !self.twinning_sweep.gammas.contains(&100.0) {
            return bad("twinning_sweep.gammas must include 100".into());
        }
        if self.detect_bench.knn_k.is_multiple_of(2) {
            return bad(format!(
                "detect_bench.knn_k must be odd, got {}",
                self.detect_bench.knn_k
            ));
        }
        Ok(())
    }

    /// SHA-256 of the resolved configuration with the output directory
    /// blanked, in hex.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let text = toml::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn synthetic(&self) -> SyntheticConfig {
        SyntheticConfig {
            seed: self.seed,
            speeds: (self.data.rf_speeds[0], self.data.rf_speeds[1]),
            ..self.data.synthetic
        }
    }
}
