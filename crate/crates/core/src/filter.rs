//! Sensor-side assessment of individual readings.
//!
//! Each attribute stream keeps a constant-size [`FilterState`]: a running
//! mean and variance over the readings it has transmitted, the previous
//! standardized value, and a step counter for the periodic statistics reset.
//! Every reading is classified as [`Decision::Transmit`],
//! [`Decision::DiscardUninteresting`] (its standardized change since the
//! previous step is below `epsilon`) or [`Decision::DiscardFaulty`] (its
//! standardized value falls outside `[lower_z, upper_z]`).
//!
//! Discarded readings never enter the running statistics, but the previous
//! standardized value is overwritten on every post-warm-up assessment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Decision;
use crate::scalar::Scalar;

/// Steps per hour at the 1 Hz replay rate.
pub const STEPS_PER_HOUR: u64 = 3600;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("variance {variance} is below the floor {floor}")]
    VarianceDegenerate { variance: f64, floor: f64 },
    #[error("invalid filter parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams<F> {
    /// Minimum standardized change for a reading to be worth sending.
    pub epsilon: F,
    pub lower_z: F,
    pub upper_z: F,
    /// Statistics are discarded and warm-up restarts after this many steps.
    pub reset_period_steps: u64,
    /// Readings always transmitted (and incorporated) after each reset.
    pub warmup_count: u64,
    pub variance_floor: F,
    /// Keepalive interval in steps; one ACK byte is charged per interval.
    pub ack_interval_steps: u64,
}

impl<F: Scalar> Default for FilterParams<F> {
    fn default() -> Self {
        Self {
            epsilon: F::lit(0.2),
            lower_z: F::lit(-4.0),
            upper_z: F::lit(4.0),
            reset_period_steps: 2 * STEPS_PER_HOUR,
            warmup_count: 30,
            variance_floor: F::lit(1e-12),
            ack_interval_steps: 60,
        }
    }
}

impl<F: Scalar> FilterParams<F> {
    pub fn with_epsilon(self, epsilon: F) -> Self {
        Self { epsilon, ..self }
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let bad = |msg: &str| Err(FilterError::InvalidParams(msg.to_string()));
        if !(self.epsilon >= F::zero()) {
            return bad("epsilon must be non-negative");
        }
        if !(self.lower_z < self.upper_z) {
            return bad("lower_z must be below upper_z");
        }
        if self.reset_period_steps < 1 {
            return bad("reset_period_steps must be at least 1");
        }
        if self.warmup_count < 2 {
            return bad("warmup_count must be at least 2");
        }
        if !(self.variance_floor > F::zero()) {
            return bad("variance_floor must be positive");
        }
        if self.ack_interval_steps < 1 {
            return bad("ack_interval_steps must be at least 1");
        }
        Ok(())
    }
}

/// Keepalive interval in steps.
pub fn ack_schedule<F>(params: &FilterParams<F>) -> u64 {
    params.ack_interval_steps
}

/// Per-attribute running state. Its size does not depend on stream length.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterState<F> {
    pub mean: F,
    /// Population variance of the incorporated readings.
    pub variance: F,
    pub count: u64,
    pub z_prev: F,
    pub steps_since_reset: u64,
}

impl<F: Scalar> FilterState<F> {
    pub fn new() -> Self {
        Self {
            mean: F::zero(),
            variance: F::zero(),
            count: 0,
            z_prev: F::zero(),
            steps_since_reset: 0,
        }
    }

    pub fn z_score(&self, x: F, variance_floor: F) -> Result<F, FilterError> {
        if !(self.variance >= variance_floor) {
            return Err(FilterError::VarianceDegenerate {
                variance: self.variance.to_f64_lossy(),
                floor: variance_floor.to_f64_lossy(),
            });
        }
        Ok((x - self.mean) / self.variance.sqrt())
    }

    /// Fold `x` into the running mean and variance.
    ///
    /// The variance step uses the mean from before this update, which is what
    /// makes `(mean, variance)` equal the batch population statistics.
    pub fn update_stats(&mut self, x: F) {
        self.count += 1;
        let n = F::from_count(self.count);
        let prev_mean = self.mean;
        let n_minus_1 = n - F::one();
        self.mean = (n_minus_1 * prev_mean + x) / n;
        let d = prev_mean - x;
        self.variance = n_minus_1 / n * (self.variance + d * d / n);
    }

    pub fn in_warmup(&self, params: &FilterParams<F>) -> bool {
        self.count < params.warmup_count || self.variance < params.variance_floor
    }

    /// Classify `x` and return the successor state. Pure in `(self, params, x)`.
    pub fn assess(&self, params: &FilterParams<F>, x: F) -> (Decision, Self) {
        let mut next = *self;
        let decision = if self.in_warmup(params) {
            next.update_stats(x);
            Decision::Transmit
        } else {
            let z = (x - self.mean) / self.variance.sqrt();
            let decision = if z < params.lower_z || z > params.upper_z {
                Decision::DiscardFaulty
            } else if (z - self.z_prev).abs() >= params.epsilon {
                next.update_stats(x);
                Decision::Transmit
            } else {
                Decision::DiscardUninteresting
            };
            next.z_prev = z;
            decision
        };
        next.steps_since_reset += 1;
        if next.steps_since_reset >= params.reset_period_steps {
            next = Self::new();
        }
        (decision, next)
    }

    /// In-place variant of [`FilterState::assess`].
    pub fn step(&mut self, params: &FilterParams<F>, x: F) -> Decision {
        let (decision, next) = self.assess(params, x);
        *self = next;
        decision
    }
}

/// Decision tallies for one attribute stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionCounts {
    pub total: u64,
    pub transmitted: u64,
    pub discarded_uninteresting: u64,
    pub discarded_faulty: u64,
}

impl DecisionCounts {
    pub fn record(&mut self, decision: Decision) {
        self.total += 1;
        match decision {
            Decision::Transmit => self.transmitted += 1,
            Decision::DiscardUninteresting => self.discarded_uninteresting += 1,
            Decision::DiscardFaulty => self.discarded_faulty += 1,
        }
    }

    /// Percentage of readings not transmitted, for any reason.
    pub fn discard_pct(&self) -> f64 {
        pct(self.total - self.transmitted, self.total)
    }

    pub fn uninteresting_pct(&self) -> f64 {
        pct(self.discarded_uninteresting, self.total)
    }

    pub fn is_partitioned(&self) -> bool {
        self.transmitted + self.discarded_uninteresting + self.discarded_faulty == self.total
    }
}

fn pct(part: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * part as f64 / total as f64
    }
}

/// Run one attribute stream through a fresh filter.
pub fn assess_series<F: Scalar>(params: &FilterParams<F>, values: &[F]) -> Vec<Decision> {
    let mut state = FilterState::new();
    values.iter().map(|&x| state.step(params, x)).collect()
}
