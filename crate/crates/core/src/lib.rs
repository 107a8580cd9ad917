//! Roadside-unit cyber-twin toolkit.
//!
//! * [`queueing`]: closed-form M/M/m analysis of the RSU channel pool.
//! * [`sim`]: discrete-event V2I traffic simulator with flood and jamming
//!   profiles, producing labelled packet traces and windowed features.
//! * [`twinning`]: twin-layer sampling at a twinning rate, canonical transfer
//!   records and byte-level memory accounting.
//! * [`detection`]: feature selection, unsupervised labelling, the online
//!   MLP detector, KNN/SVM baselines and metrics.
//! * [`datasets`]: tabular ingestion, dataset composition and splitting.

pub mod datasets;
pub mod detection;
pub mod queueing;
pub mod rng;
pub mod sim;
pub mod table;
pub mod twinning;

pub use table::{FeatureTable, TableError};

/// Ground-truth or inferred class of a packet or feature row.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign = 0,
    Attack = 1,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Attack => "attack",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Label::Benign
        } else {
            Label::Attack
        }
    }

    /// Accepts `benign`/`attack` and the numeric forms `0`/`1`.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "benign" | "0" => Some(Label::Benign),
            "attack" | "1" => Some(Label::Attack),
            _ => None,
        }
    }

    pub fn is_attack(self) -> bool {
        self == Label::Attack
    }
}
