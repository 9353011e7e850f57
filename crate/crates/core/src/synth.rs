//! Synthetic multichannel vitals for runs without a recorded dataset.
//!
//! Each channel is `baseline + slow AR(1) drift + hourly wave + white noise`,
//! optionally rounded to the monitor's display resolution, and shown through
//! a sample-and-hold display that refreshes every `hold_mean` steps on
//! average (geometric gaps). Everything is driven by one seeded ChaCha stream.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::model::MIMIC_ATTRIBUTES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub name: String,
    pub baseline: f64,
    /// Stationary standard deviation of the slow drift.
    pub drift_sd: f64,
    /// Correlation time of the drift, in steps.
    pub drift_tau: f64,
    pub wave_amplitude: f64,
    pub wave_period: f64,
    pub noise_sd: f64,
    /// Mean steps between display refreshes; the shown value holds in between.
    pub hold_mean: f64,
    /// Rounding quantum; 0 disables rounding.
    pub resolution: f64,
}

impl ChannelProfile {
    fn new(name: &str, baseline: f64, drift_sd: f64, wave_amplitude: f64, noise_sd: f64) -> Self {
        Self {
            name: name.to_string(),
            baseline,
            drift_sd,
            drift_tau: 600.0,
            wave_amplitude,
            wave_period: 3600.0,
            noise_sd,
            hold_mean: 1.0,
            resolution: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalsProfile {
    pub channels: Vec<ChannelProfile>,
}

impl VitalsProfile {
    /// Stable adult vitals on a monitor that refreshes every ~4 s, in the
    /// six-channel column order.
    pub fn low_variance() -> Self {
        // (baseline, drift sd, hourly wave amplitude, noise sd)
        let spec = [
            (18.0, 1.0, 0.5, 0.45),
            (120.0, 3.0, 1.5, 1.5),
            (80.0, 2.0, 1.0, 1.05),
            (97.0, 0.4, 0.2, 0.21),
            (75.0, 2.5, 1.25, 1.2),
            (75.0, 2.5, 1.25, 1.2),
        ];
        Self {
            channels: MIMIC_ATTRIBUTES
                .iter()
                .zip(spec)
                .map(|(name, (b, d, w, n))| ChannelProfile {
                    hold_mean: 4.0,
                    ..ChannelProfile::new(name, b, d, w, n)
                })
                .collect(),
        }
    }

    /// Same channels refreshed every step with noise twice the drift.
    pub fn noisy() -> Self {
        let mut p = Self::low_variance();
        for c in &mut p.channels {
            c.noise_sd = 2.0 * c.drift_sd;
            c.hold_mean = 1.0;
        }
        p
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "low-variance" | "low_variance" => Some(Self::low_variance()),
            "noisy" => Some(Self::noisy()),
            _ => None,
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.name.clone()).collect()
    }

    /// `steps` samples per channel, column-major.
    pub fn generate(&self, steps: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        self.channels
            .iter()
            .map(|c| {
                let phi = (-1.0 / c.drift_tau).exp();
                let innovation = c.drift_sd * (1.0 - phi * phi).sqrt();
                let phase = rng.random::<f64>() * TAU;
                let mut drift = c.drift_sd * unit.sample(&mut rng);
                let refresh_p = 1.0 / c.hold_mean.max(1.0);
                let mut shown: Option<f64> = None;
                (0..steps)
                    .map(|t| {
                        drift = phi * drift + innovation * unit.sample(&mut rng);
                        let wave = c.wave_amplitude * (TAU * t as f64 / c.wave_period + phase).sin();
                        let x = c.baseline + drift + wave + c.noise_sd * unit.sample(&mut rng);
                        let x = if c.resolution > 0.0 {
                            (x / c.resolution).round() * c.resolution
                        } else {
                            x
                        };
                        let refresh = rng.random::<f64>() < refresh_p;
                        match shown {
                            Some(held) if !refresh => held,
                            _ => *shown.insert(x),
                        }
                    })
                    .collect()
            })
            .collect()
    }
}
