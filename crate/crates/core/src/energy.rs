//! Energy accounting for sensor nodes.
//!
//! Per-operation costs live in an [`OperationTable`] (time and current per
//! operation); energy is `I * T * V`. The headline comparison prices the
//! readings a sensor would send with no on-node filtering against what it
//! actually sends, plus the instructions spent filtering and the keepalive
//! bytes.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub const TRANSMIT_BYTE: &str = "Transmit 1 byte";
pub const RECEIVE_BYTE: &str = "Receive 1 byte";

/// Mica2 per-operation costs: (name, seconds, milliamperes).
pub const MICA2_OPERATIONS: [(&str, f64, f64); 8] = [
    ("Initialize radio", 350e-6, 6.0),
    ("Turn on radio", 1.5e-3, 1.0),
    ("Switch to RX/TX", 250e-6, 15.0),
    ("Time to sample radio", 350e-6, 15.0),
    ("Evaluate radio sample", 100e-6, 6.0),
    (RECEIVE_BYTE, 416e-6, 15.0),
    (TRANSMIT_BYTE, 416e-6, 20.0),
    ("Sample sensors", 1.1, 20.0),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationCost<F> {
    pub name: String,
    pub time_s: F,
    pub current_ma: F,
}

/// Joules drawn by one execution of `op` at `voltage_v`.
pub fn op_energy<F: Scalar>(op: &OperationCost<F>, voltage_v: F) -> F {
    op.current_ma / F::lit(1000.0) * op.time_s * voltage_v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationTable<F> {
    pub operations: Vec<OperationCost<F>>,
}

impl<F: Scalar> OperationTable<F> {
    pub fn mica2() -> Self {
        Self {
            operations: MICA2_OPERATIONS
                .iter()
                .map(|&(name, t, i)| OperationCost {
                    name: name.to_string(),
                    time_s: F::lit(t),
                    current_ma: F::lit(i),
                })
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&OperationCost<F>> {
        self.operations.iter().find(|op| op.name == name)
    }

    /// Multiply every current by `factor`.
    pub fn scale_currents(&self, factor: F) -> Self {
        Self {
            operations: self
                .operations
                .iter()
                .map(|op| OperationCost { current_ma: op.current_ma * factor, ..op.clone() })
                .collect(),
        }
    }
}

/// Event counts accumulated while simulating one sensor (or several, merged).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub baseline_points: u64,
    pub transmitted_points: u64,
    pub instructions_executed: u64,
    pub ack_bytes: u64,
}

impl EnergyLedger {
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            baseline_points: self.baseline_points + other.baseline_points,
            transmitted_points: self.transmitted_points + other.transmitted_points,
            instructions_executed: self.instructions_executed + other.instructions_executed,
            ack_bytes: self.ack_bytes + other.ack_bytes,
        }
    }
}

/// Prices ledger counts in joules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel<F> {
    pub table: OperationTable<F>,
    pub voltage_v: F,
    pub bytes_per_datapoint: u64,
    pub instruction_energy_j: F,
    /// Instructions charged per filter assessment.
    pub instructions_per_assessment: u64,
}

impl<F: Scalar> Default for EnergyModel<F> {
    fn default() -> Self {
        Self {
            table: OperationTable::mica2(),
            voltage_v: F::lit(3.0),
            bytes_per_datapoint: 4,
            instruction_energy_j: F::lit(2.15e-9),
            instructions_per_assessment: 74,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SavingsReport<F> {
    #[serde(rename = "baseline_J")]
    pub baseline_j: F,
    #[serde(rename = "transmission_J")]
    pub transmission_j: F,
    #[serde(rename = "computation_J")]
    pub computation_j: F,
    #[serde(rename = "ack_J")]
    pub ack_j: F,
    #[serde(rename = "total_J")]
    pub total_j: F,
    pub saving_fraction: F,
    /// Set when filtering cost more than it saved.
    pub negative_saving: bool,
}

impl<F: Scalar> EnergyModel<F> {
    fn op(&self, name: &str) -> F {
        self.table.get(name).map_or(F::zero(), |op| op_energy(op, self.voltage_v))
    }

    pub fn byte_transmit_energy(&self) -> F {
        self.op(TRANSMIT_BYTE)
    }

    pub fn byte_receive_energy(&self) -> F {
        self.op(RECEIVE_BYTE)
    }

    pub fn transmission_energy(&self, n_points: u64) -> F {
        F::from_count(n_points) * F::from_count(self.bytes_per_datapoint) * self.byte_transmit_energy()
    }

    pub fn computation_energy(&self, instructions: u64) -> F {
        F::from_count(instructions) * self.instruction_energy_j
    }

    pub fn ack_energy(&self, ack_bytes: u64) -> F {
        F::from_count(ack_bytes) * self.byte_transmit_energy()
    }

    pub fn instructions_for(&self, assessments: u64) -> u64 {
        assessments * self.instructions_per_assessment
    }

    pub fn savings_report(
        &self,
        baseline_points: u64,
        transmitted_points: u64,
        instructions: u64,
        ack_bytes: u64,
    ) -> SavingsReport<F> {
        let baseline_j = self.transmission_energy(baseline_points);
        let transmission_j = self.transmission_energy(transmitted_points);
        let computation_j = self.computation_energy(instructions);
        let ack_j = self.ack_energy(ack_bytes);
        let total_j = transmission_j + computation_j + ack_j;
        let saving_fraction = if baseline_j > F::zero() {
            F::one() - total_j / baseline_j
        } else {
            F::zero()
        };
        SavingsReport {
            baseline_j,
            transmission_j,
            computation_j,
            ack_j,
            total_j,
            saving_fraction,
            negative_saving: total_j > baseline_j,
        }
    }

    pub fn report_for(&self, ledger: &EnergyLedger) -> SavingsReport<F> {
        self.savings_report(
            ledger.baseline_points,
            ledger.transmitted_points,
            ledger.instructions_executed,
            ledger.ack_bytes,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn per_byte_energies() {
        let m = EnergyModel::<f64>::default();
        assert!(rel(m.byte_transmit_energy(), 24.96e-6) < 1e-12);
        assert!(rel(m.byte_receive_energy(), 18.72e-6) < 1e-12);
        let zero = OperationCost { name: "x".into(), time_s: 1.0, current_ma: 0.0 };
        assert_eq!(op_energy(&zero, 3.0), 0.0);
    }

    #[test]
    fn transmission_examples() {
        let m = EnergyModel::<f64>::default();
        assert!(rel(m.transmission_energy(25_000), 2.496) < 1e-12);
        assert_eq!(m.transmission_energy(0), 0.0);
        assert!(rel(m.transmission_energy(1), 99.84e-6) < 1e-12);
    }

    #[test]
    fn computation_examples() {
        let m = EnergyModel::<f64>::default();
        assert!(rel(m.computation_energy(1_850_081), 3.97767415e-3) < 1e-12);
        assert_eq!(m.computation_energy(0), 0.0);
        assert!(rel(m.computation_energy(1_000_000_000), 2.15) < 1e-12);
    }

    #[test]
    fn savings_boundaries() {
        let m = EnergyModel::<f64>::default();
        let same = m.savings_report(1000, 1000, 0, 0);
        assert_eq!(same.saving_fraction, 0.0);
        assert!(!same.negative_saving);
        let none = m.savings_report(1000, 0, 0, 0);
        assert_eq!(none.saving_fraction, 1.0);
        let worse = m.savings_report(10, 10, 1_000_000, 0);
        assert!(worse.negative_saving);
        assert!(worse.saving_fraction < 0.0);
    }

    #[test]
    fn default_instruction_calibration() {
        let m = EnergyModel::<f64>::default();
        assert_eq!(m.instructions_for(25_000), 1_850_000);
    }

    #[test]
    fn doubling_currents_doubles_energies() {
        let m = EnergyModel::<f64>::default();
        let doubled = EnergyModel { table: m.table.scale_currents(2.0), ..m.clone() };
        for op in &m.table.operations {
            let op2 = doubled.table.get(&op.name).unwrap();
            assert!(rel(op_energy(op2, 3.0), 2.0 * op_energy(op, 3.0)) < 1e-12);
        }
        assert!(rel(doubled.transmission_energy(123), 2.0 * m.transmission_energy(123)) < 1e-12);
    }

    #[test]
    fn ledger_merge_sums() {
        let a = EnergyLedger { baseline_points: 1, transmitted_points: 2, instructions_executed: 3, ack_bytes: 4 };
        let b = EnergyLedger { baseline_points: 10, transmitted_points: 20, instructions_executed: 30, ack_bytes: 40 };
        assert_eq!(
            a.merge(&b),
            EnergyLedger { baseline_points: 11, transmitted_points: 22, instructions_executed: 33, ack_bytes: 44 }
        );
    }

    #[test]
    fn report_json_keys() {
        let m = EnergyModel::<f64>::default();
        let json = serde_json::to_value(m.savings_report(10, 5, 0, 0)).unwrap();
        for key in ["baseline_J", "transmission_J", "computation_J", "ack_J", "total_J", "saving_fraction"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    proptest! {
        #[test]
        fn transmission_is_additive(a in 0u64..10_000_000, b in 0u64..10_000_000) {
            let m = EnergyModel::<f64>::default();
            let lhs = m.transmission_energy(a + b);
            let rhs = m.transmission_energy(a) + m.transmission_energy(b);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-30));
        }

        #[test]
        fn saving_decomposes(b in 1u64..1_000_000, frac in 0.0..1.0f64, instr in 0u64..10_000_000, ack in 0u64..10_000) {
            let t = (b as f64 * frac) as u64;
            let m = EnergyModel::<f64>::default();
            let r = m.savings_report(b, t, instr, ack);
            let byte = 20.0 / 1000.0 * 416e-6 * 3.0;
            let bj = b as f64 * 4.0 * byte;
            let tj = t as f64 * 4.0 * byte;
            let cj = instr as f64 * 2.15e-9;
            let aj = ack as f64 * byte;
            let expected = 1.0 - (tj + cj + aj) / bj;
            prop_assert!(r.saving_fraction <= 1.0);
            prop_assert!((r.saving_fraction - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
    }
}
