//! Gateway-side reconstruction of the full signal from the sparse transmit
//! stream, and per-window normalization ahead of anomaly scoring.

use thiserror::Error;

use crate::model::{Source, TimeStepVector};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpuError {
    #[error("dimension {dim} is out of range for K = {k}")]
    UnknownDimension { dim: usize, k: usize },
    #[error("value for dimension {dim} is not finite")]
    NonFinite { dim: usize },
}

/// Last value seen per dimension; `None` until the first receipt.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionState<F> {
    last_value: Vec<Option<F>>,
}

impl<F: Scalar> ReconstructionState<F> {
    pub fn new(k: usize) -> Self {
        Self { last_value: vec![None; k] }
    }

    pub fn dimension(&self) -> usize {
        self.last_value.len()
    }

    pub fn last_value(&self, dim: usize) -> Option<F> {
        self.last_value.get(dim).copied().flatten()
    }

    pub fn is_initialized(&self) -> bool {
        self.last_value.iter().all(Option::is_some)
    }

    /// Absorb the readings that arrived at step `t`.
    ///
    /// Returns `None` while some dimension has never been received; those
    /// steps are not part of the reconstructed timeline.
    pub fn reconstruct_step(
        &mut self,
        received: &[(usize, F)],
        t: u64,
    ) -> Result<Option<TimeStepVector<F>>, LpuError> {
        let k = self.dimension();
        let mut sources = vec![Source::CarriedForward; k];
        for &(dim, value) in received {
            if dim >= k {
                return Err(LpuError::UnknownDimension { dim, k });
            }
            if !value.is_finite() {
                return Err(LpuError::NonFinite { dim });
            }
            self.last_value[dim] = Some(value);
            sources[dim] = Source::Received;
        }
        let values: Option<Vec<F>> = self.last_value.iter().copied().collect();
        Ok(values.map(|values| TimeStepVector { t, values, sources }))
    }
}

/// Min-max scale each dimension of the window to `[0, 1]` using the window's
/// own range. A dimension that is constant over the window maps to `0`.
pub fn normalize_window<F: Scalar>(window: &[TimeStepVector<F>]) -> Vec<Vec<F>> {
    let rows: Vec<&[F]> = window.iter().map(|v| v.values.as_slice()).collect();
    normalize_rows(&rows)
}

pub(crate) fn normalize_rows<F: Scalar>(rows: &[&[F]]) -> Vec<Vec<F>> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let k = first.len();
    let mut lo = first.to_vec();
    let mut hi = first.to_vec();
    for row in &rows[1..] {
        for d in 0..k {
            lo[d] = lo[d].min(row[d]);
            hi[d] = hi[d].max(row[d]);
        }
    }
    rows.iter()
        .map(|row| {
            (0..k)
                .map(|d| {
                    let range = hi[d] - lo[d];
                    if range > F::zero() {
                        // clamp guards the last-ulp overshoot of the division
                        ((row[d] - lo[d]) / range).min(F::one())
                    } else {
                        F::zero()
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn column(values: &[f64]) -> Vec<TimeStepVector<f64>> {
        values
            .iter()
            .enumerate()
            .map(|(t, &v)| TimeStepVector::received(t as u64, vec![v]))
            .collect()
    }

    #[test]
    fn all_received_is_identity() {
        let mut st = ReconstructionState::new(3);
        let v = st.reconstruct_step(&[(0, 1.5), (1, 2.5), (2, 3.5)], 0).unwrap().unwrap();
        assert_eq!(v.values, vec![1.5, 2.5, 3.5]);
        assert!(v.sources.iter().all(|s| *s == Source::Received));
    }

    #[test]
    fn absent_dimension_carries_forward() {
        let mut st = ReconstructionState::new(2);
        st.reconstruct_step(&[(0, 72.0), (1, 98.0)], 0).unwrap();
        for t in 1..=3 {
            let v = st.reconstruct_step(&[(1, 97.0 + t as f64)], t).unwrap().unwrap();
            assert_eq!(v.values[0], 72.0);
            assert_eq!(v.sources[0], Source::CarriedForward);
            assert_eq!(v.sources[1], Source::Received);
        }
    }

    #[test]
    fn steps_before_initialization_are_dropped() {
        let mut st = ReconstructionState::new(2);
        assert_eq!(st.reconstruct_step(&[(0, 1.0)], 0).unwrap(), None);
        assert_eq!(st.reconstruct_step(&[], 1).unwrap(), None);
        let v = st.reconstruct_step(&[(1, 5.0)], 2).unwrap().unwrap();
        assert_eq!(v.values, vec![1.0, 5.0]);
        assert_eq!(v.sources, vec![Source::CarriedForward, Source::Received]);
    }

    #[test]
    fn rejects_bad_dimension() {
        let mut st = ReconstructionState::<f64>::new(2);
        assert_eq!(
            st.reconstruct_step(&[(2, 1.0)], 0),
            Err(LpuError::UnknownDimension { dim: 2, k: 2 })
        );
    }

    #[test]
    fn normalize_examples() {
        let out = normalize_window(&column(&[50.0, 100.0]));
        assert_eq!(out, vec![vec![0.0], vec![1.0]]);
        let out = normalize_window(&column(&[80.0, 80.0, 80.0]));
        assert_eq!(out, vec![vec![0.0]; 3]);
        let out = normalize_window(&column(&[0.0, 5.0, 10.0]));
        assert_eq!(out, vec![vec![0.0], vec![0.5], vec![1.0]]);
    }

    proptest! {
        #[test]
        fn normalized_in_unit_interval_and_idempotent(
            rows in proptest::collection::vec(proptest::collection::vec(-1e6..1e6f64, 3), 2..64)
        ) {
            let window: Vec<_> = rows.iter().enumerate()
                .map(|(t, r)| TimeStepVector::received(t as u64, r.clone())).collect();
            let once = normalize_window(&window);
            for row in &once {
                for &x in row {
                    prop_assert!((0.0..=1.0).contains(&x));
                }
            }
            // a dimension that spans exactly [0, 1] is left untouched
            let spans_unit = |d: usize| {
                let lo = once.iter().map(|r| r[d]).fold(f64::INFINITY, f64::min);
                let hi = once.iter().map(|r| r[d]).fold(f64::NEG_INFINITY, f64::max);
                lo == 0.0 && hi == 1.0
            };
            let again_window: Vec<_> = once.iter().enumerate()
                .map(|(t, r)| TimeStepVector::received(t as u64, r.clone())).collect();
            let twice = normalize_window(&again_window);
            for d in 0..3 {
                if spans_unit(d) {
                    for (a, b) in once.iter().zip(&twice) {
                        prop_assert_eq!(a[d], b[d]);
                    }
                }
            }
        }

        #[test]
        fn received_positions_are_bit_identical(
            steps in proptest::collection::vec(
                proptest::collection::vec(proptest::option::of(-1e3..1e3f64), 4), 1..50)
        ) {
            let mut st = ReconstructionState::new(4);
            let mut emitted = 0usize;
            let mut seen_init = false;
            for (t, step) in steps.iter().enumerate() {
                let received: Vec<_> = step.iter().enumerate()
                    .filter_map(|(d, v)| v.map(|v| (d, v))).collect();
                let out = st.reconstruct_step(&received, t as u64).unwrap();
                seen_init |= st.is_initialized();
                prop_assert_eq!(out.is_some(), seen_init);
                if let Some(v) = out {
                    emitted += 1;
                    for &(d, x) in &received {
                        prop_assert_eq!(v.values[d].to_bits(), x.to_bits());
                        prop_assert_eq!(v.sources[d], Source::Received);
                    }
                }
            }
            let first = steps.iter().enumerate().scan(vec![false; 4], |acc, (t, s)| {
                for (d, v) in s.iter().enumerate() { acc[d] |= v.is_some(); }
                Some((t, acc.iter().all(|&b| b)))
            }).find(|(_, ok)| *ok).map(|(t, _)| t);
            prop_assert_eq!(emitted, first.map_or(0, |t| steps.len() - t));
        }
    }
}
