//! Two-tier telemetry pipeline for body-worn sensor networks.
//!
//! * [`filter`] runs on each sensor and drops readings that carry no new
//!   information or look like measurement faults.
//! * [`lpu`] rebuilds the full multi-channel signal at the gateway.
//! * [`iforest`] scores the rebuilt stream with a windowed isolation forest.
//! * [`energy`] prices what the sensors transmitted and computed.
//! * [`evaluation`] and [`sim`] generate ground truth, compute metrics and
//!   drive complete experiments.
//!
//! Numeric code is generic over [`Scalar`]; the aliases below fix it to `f64`.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod evaluation;
pub mod filter;
pub mod iforest;
pub mod lpu;
pub mod model;
pub mod scalar;
pub mod sim;
pub mod synth;

pub use model::{Decision, Reading, SensorTopology, Source, TimeStepVector};
pub use scalar::Scalar;

pub type FilterParams = filter::FilterParams<f64>;
pub type FilterState = filter::FilterState<f64>;
pub type Tier2Params = iforest::Tier2Params<f64>;
pub type IsolationTree = iforest::IsolationTree<f64>;
pub type ForestBuffer = iforest::ForestBuffer<f64>;
pub type ScoredPoint = iforest::ScoredPoint<f64>;
pub type EnergyModel = energy::EnergyModel<f64>;
pub type SavingsReport = energy::SavingsReport<f64>;

pub type FilterState32 = filter::FilterState<f32>;
pub type ForestBuffer32 = iforest::ForestBuffer<f32>;
