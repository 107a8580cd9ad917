//! One module per experiment. Each exposes `run(&Config)` returning typed
//! results, plus report builders that turn them into CSV tables.

pub mod common;
pub mod delay_delivery;
pub mod detect_bench;
pub mod queue_validate;
pub mod resource;
pub mod simulate;
pub mod twinning;
