//! Ground truth and scoring: synthetic anomaly injection, MAD fault labels,
//! confusion-matrix metrics, ROC/AUC, normalized reconstruction error and the
//! epsilon trade-off sweep.

use std::cmp::Ordering;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::{DecisionCounts, FilterParams, FilterState};
use crate::model::Decision;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("labels contain a single class")]
    SingleClass,
    #[error("series needs at least {needed} points, found {found}")]
    TooShort { needed: usize, found: usize },
    #[error("invalid injection spec: {0}")]
    InvalidInjection(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(flags: &[bool], labels: &[bool]) -> Result<ConfusionCounts, EvalError> {
    if flags.len() != labels.len() {
        return Err(EvalError::LengthMismatch { left: flags.len(), right: labels.len() });
    }
    let mut c = ConfusionCounts::default();
    for (&f, &l) in flags.iter().zip(labels) {
        match (f, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True when any ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

pub fn precision_recall_f1(c: &ConfusionCounts) -> Prf {
    let mut degenerate = false;
    let mut ratio = |num: f64, den: f64| {
        if den > 0.0 {
            num / den
        } else {
            degenerate = true;
            0.0
        }
    };
    let precision = ratio(c.tp as f64, (c.tp + c.fp) as f64);
    let recall = ratio(c.tp as f64, (c.tp + c.fn_) as f64);
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    Prf { precision, recall, f1, degenerate }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC curve over every distinct score threshold, AUC by the trapezoid rule.
/// Tied scores enter the curve together.
pub fn roc_auc<F: Scalar>(scores: &[F], labels: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));

    let (p, n) = (positives as f64, negatives as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (x0, y0) = *points.last().expect("curve starts at origin");
        let (x1, y1) = (fp as f64 / n, tp as f64 / p);
        auc += (x1 - x0) * (y0 + y1) / 2.0;
        points.push((x1, y1));
    }
    Ok(RocCurve { points, auc })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nmse<F> {
    pub value: F,
    /// The original series was constant, so the variance normalizer was 0.
    pub degenerate: bool,
}

/// Mean squared error divided by the variance of `original`, clamped to
/// `[0, 1]`: 0 is a perfect reconstruction, 1 is no better than the mean.
pub fn nmse<F: Scalar>(original: &[F], reconstructed: &[F]) -> Result<Nmse<F>, EvalError> {
    if original.len() != reconstructed.len() {
        return Err(EvalError::LengthMismatch { left: original.len(), right: reconstructed.len() });
    }
    if original.is_empty() {
        return Err(EvalError::TooShort { needed: 1, found: 0 });
    }
    let n = F::from_count(original.len() as u64);
    let mse = original
        .iter()
        .zip(reconstructed)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<F>()
        / n;
    let mean = original.iter().copied().sum::<F>() / n;
    let variance = original.iter().map(|&a| (a - mean) * (a - mean)).sum::<F>() / n;
    if variance > F::zero() {
        Ok(Nmse { value: (mse / variance).max(F::zero()).min(F::one()), degenerate: false })
    } else {
        let value = if mse > F::zero() { F::one() } else { F::zero() };
        Ok(Nmse { value, degenerate: true })
    }
}

pub fn median<F: Scalar>(values: &[F]) -> F {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / F::lit(2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MadLabels {
    pub mask: Vec<bool>,
    /// MAD was zero; any deviation from the median is flagged.
    pub degenerate: bool,
}

/// Flag points further than `k * MAD` from the median.
pub fn label_faults_mad<F: Scalar>(series: &[F], k: F) -> Result<MadLabels, EvalError> {
    if series.len() < 3 {
        return Err(EvalError::TooShort { needed: 3, found: series.len() });
    }
    let med = median(series);
    let deviations: Vec<F> = series.iter().map(|&x| (x - med).abs()).collect();
    let mad = median(&deviations);
    let degenerate = mad <= F::zero();
    let bound = if degenerate { F::zero() } else { k * mad };
    Ok(MadLabels { mask: deviations.iter().map(|&d| d > bound).collect(), degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InjectionSpec {
    /// Fraction of steps to corrupt.
    pub rate: f64,
    /// Offset size in per-dimension standard deviations.
    pub magnitude_sigma: f64,
    pub dims_per_event: usize,
    pub rng_seed: u64,
}

impl Default for InjectionSpec {
    fn default() -> Self {
        Self { rate: 0.05, magnitude_sigma: 6.0, dims_per_event: 2, rng_seed: 0 }
    }
}

impl InjectionSpec {
    pub fn validate(&self, k: usize) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::InvalidInjection(m.to_string()));
        if !(0.0..=1.0).contains(&self.rate) {
            return bad("rate must lie in [0, 1]");
        }
        if !(self.magnitude_sigma > 0.0) {
            return bad("magnitude_sigma must be positive");
        }
        if self.dims_per_event < 1 || self.dims_per_event > k {
            return bad("dims_per_event must lie in [1, K]");
        }
        Ok(())
    }

    /// `floor(rate * steps)`, robust to the last-bit error of the product.
    pub fn event_count(&self, steps: usize) -> usize {
        let raw = self.rate * steps as f64;
        let rounded = raw.round();
        let n = if (raw - rounded).abs() < 1e-9 * raw.max(1.0) { rounded } else { raw.floor() };
        (n as usize).min(steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Injection<F> {
    pub columns: Vec<Vec<Option<F>>>,
    /// One label per step; true where any dimension was corrupted.
    pub labels: Vec<bool>,
    /// `(step, dimension, signed offset)` for every corrupted reading.
    pub offsets: Vec<(usize, usize, F)>,
}

/// Population standard deviation of the present values.
fn present_std<F: Scalar>(column: &[Option<F>]) -> F {
    let values: Vec<F> = column.iter().flatten().copied().collect();
    if values.is_empty() {
        return F::zero();
    }
    let n = F::from_count(values.len() as u64);
    let mean = values.iter().copied().sum::<F>() / n;
    (values.iter().map(|&x| (x - mean) * (x - mean)).sum::<F>() / n).sqrt()
}

/// Corrupt `floor(rate * T)` distinct steps. At each, `dims_per_event`
/// distinct dimensions are shifted by `+/- magnitude_sigma * sigma_d`.
/// Absent readings stay absent.
pub fn inject_anomalies<F: Scalar>(
    columns: &[Vec<Option<F>>],
    spec: &InjectionSpec,
) -> Result<Injection<F>, EvalError> {
    let k = columns.len();
    let steps = columns.first().map_or(0, Vec::len);
    if steps == 0 {
        return Err(EvalError::TooShort { needed: 1, found: 0 });
    }
    if let Some(bad) = columns.iter().find(|c| c.len() != steps) {
        return Err(EvalError::LengthMismatch { left: steps, right: bad.len() });
    }
    spec.validate(k)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let sigmas: Vec<F> = columns.iter().map(|c| present_std(c)).collect();
    let mut out = columns.to_vec();
    let mut labels = vec![false; steps];
    let mut offsets = Vec::new();

    let mut chosen = index::sample(&mut rng, steps, spec.event_count(steps)).into_vec();
    chosen.sort_unstable();
    for step in chosen {
        labels[step] = true;
        let mut dims = index::sample(&mut rng, k, spec.dims_per_event).into_vec();
        dims.sort_unstable();
        for d in dims {
            let sign = if rng.random::<bool>() { F::one() } else { -F::one() };
            let offset = sign * F::lit(spec.magnitude_sigma) * sigmas[d];
            if let Some(v) = out[d][step].as_mut() {
                *v = *v + offset;
                offsets.push((step, d, offset));
            }
        }
    }
    Ok(Injection { columns: out, labels, offsets })
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Filter one attribute stream and rebuild it by carry-forward.
///
/// Returns the decision counts and, for every present reading, the value the
/// gateway would hold at that step.
pub fn filter_and_reconstruct<F: Scalar>(
    params: &FilterParams<F>,
    column: &[Option<F>],
) -> (DecisionCounts, Vec<F>, Vec<F>) {
    let mut state = FilterState::new();
    let mut counts = DecisionCounts::default();
    let mut original = Vec::new();
    let mut rebuilt = Vec::new();
    let mut held: Option<F> = None;
    for &x in column.iter().flatten() {
        let decision = state.step(params, x);
        counts.record(decision);
        if decision == Decision::Transmit {
            held = Some(x);
        }
        original.push(x);
        // before the first transmission the gateway has nothing to show
        rebuilt.push(held.unwrap_or(x));
    }
    (counts, original, rebuilt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    /// Share of readings dropped as uninteresting, in percent.
    pub discard_pct: f64,
    /// Mean of per-attribute NMSE.
    pub nmse: f64,
    pub per_attribute: Vec<AttributeSweep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeSweep {
    pub discard_pct: f64,
    pub nmse: f64,
}

pub fn epsilon_sweep<F: Scalar>(
    columns: &[Vec<Option<F>>],
    base: &FilterParams<F>,
    grid: &[F],
) -> Vec<SweepRow> {
    grid.iter()
        .map(|&epsilon| {
            let params = base.with_epsilon(epsilon);
            let per_attribute: Vec<AttributeSweep> = columns
                .iter()
                .map(|column| {
                    let (counts, original, rebuilt) = filter_and_reconstruct(&params, column);
                    let err = if original.is_empty() {
                        0.0
                    } else {
                        nmse(&original, &rebuilt).map_or(0.0, |r| r.value.to_f64_lossy())
                    };
                    AttributeSweep { discard_pct: counts.uninteresting_pct(), nmse: err }
                })
                .collect();
            let total: u64 = columns.iter().map(|c| c.iter().flatten().count() as u64).sum();
            let dropped: f64 = per_attribute
                .iter()
                .zip(columns)
                .map(|(a, c)| a.discard_pct / 100.0 * c.iter().flatten().count() as f64)
                .sum();
            let m = per_attribute.len().max(1) as f64;
            SweepRow {
                epsilon: epsilon.to_f64_lossy(),
                discard_pct: if total == 0 { 0.0 } else { 100.0 * dropped / total as f64 },
                nmse: per_attribute.iter().map(|a| a.nmse).sum::<f64>() / m,
                per_attribute,
            }
        })
        .collect()
}

/// `0.05, 0.10, ..., 1.00`.
pub fn default_epsilon_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 * 0.05).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn confusion_examples() {
        let labels = [true, false, true, false, false];
        let c = confusion(&labels, &labels).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        let inverted: Vec<bool> = labels.iter().map(|l| !l).collect();
        let c = confusion(&inverted, &labels).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
        assert_eq!(
            confusion(&[true], &[true, false]),
            Err(EvalError::LengthMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn prf_examples() {
        let c = ConfusionCounts { tp: 9, fp: 1, fn_: 1, tn: 89 };
        let m = precision_recall_f1(&c);
        assert!((m.precision - 0.9).abs() < 1e-15);
        assert!((m.recall - 0.9).abs() < 1e-15);
        assert!((m.f1 - 0.9).abs() < 1e-15);
        assert!(!m.degenerate);

        let m = precision_recall_f1(&ConfusionCounts { tp: 0, fp: 0, fn_: 3, tn: 5 });
        assert_eq!(m.precision, 0.0);
        assert!(m.degenerate);

        let m = precision_recall_f1(&ConfusionCounts { tp: 5, fp: 0, fn_: 0, tn: 5 });
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn f1_of_reported_ratios() {
        let (p, r) = (0.72f64, 0.99f64);
        let f1 = 2.0 * p * r / (p + r);
        assert!((f1 - 0.8337).abs() < 5e-5);
    }

    #[test]
    fn table_row_from_counts() {
        // 71 of 98 flags correct, 71 of 72 anomalies caught
        let m = precision_recall_f1(&ConfusionCounts { tp: 71, fp: 27, fn_: 1, tn: 901 });
        let r2 = |x: f64| (x * 100.0).round() / 100.0;
        assert_eq!((r2(m.precision), r2(m.recall), r2(m.f1)), (0.72, 0.99, 0.84));
    }

    #[test]
    fn roc_perfect_and_single_class() {
        let scores = [0.9, 0.8, 0.3, 0.1];
        let labels = [true, true, false, false];
        let roc = roc_auc(&scores, &labels).unwrap();
        assert_eq!(roc.auc, 1.0);
        assert_eq!(roc.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(roc.points.last(), Some(&(1.0, 1.0)));
        assert_eq!(roc_auc(&scores, &[true; 4]), Err(EvalError::SingleClass));
    }

    #[test]
    fn roc_ties_share_threshold() {
        let roc = roc_auc(&[0.5, 0.5], &[true, false]).unwrap();
        assert_eq!(roc.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(roc.auc, 0.5);
    }

    #[test]
    fn roc_random_scores_near_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let scores: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        let labels: Vec<bool> = (0..10_000).map(|_| rng.random()).collect();
        let auc: f64 = roc_auc(&scores, &labels).unwrap().auc;
        assert!((auc - 0.5).abs() < 0.05, "auc {auc}");
    }

    #[test]
    fn nmse_examples() {
        let x = [1.0f64, 4.0, 2.0, 8.0];
        assert_eq!(nmse(&x, &x).unwrap().value, 0.0);
        let mean = [3.75; 4];
        assert!((nmse(&x, &mean).unwrap().value - 1.0).abs() < 1e-12);
        assert_eq!(nmse(&[0.0, 2.0], &[0.0, 0.0]).unwrap().value, 1.0);
        let flat = nmse(&[5.0, 5.0], &[5.0, 5.0]).unwrap();
        assert!(flat.degenerate && flat.value == 0.0);
        assert_eq!(nmse(&[5.0, 5.0], &[5.0, 6.0]).unwrap().value, 1.0);
        assert!(nmse::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn mad_examples() {
        let l = label_faults_mad(&[1.0, 1.0, 1.0, 1.0, 100.0], 3.0).unwrap();
        assert!(l.degenerate);
        assert_eq!(l.mask, vec![false, false, false, false, true]);
        let l = label_faults_mad(&[10.0; 4], 3.0).unwrap();
        assert!(l.mask.iter().all(|m| !m));
        let l = label_faults_mad(&[2.0, 4.0, 6.0, 8.0, 1000.0], 3.0).unwrap();
        assert!(!l.degenerate);
        assert_eq!(l.mask, vec![false, false, false, false, true]);
        assert!(label_faults_mad(&[1.0, 2.0], 3.0).is_err());
    }

    fn ramp(k: usize, steps: usize) -> Vec<Vec<Option<f64>>> {
        (0..k).map(|d| (0..steps).map(|t| Some((t % 17) as f64 + d as f64)).collect()).collect()
    }

    #[test]
    fn injection_zero_rate_is_identity() {
        let cols = ramp(3, 100);
        let spec = InjectionSpec { rate: 0.0, ..Default::default() };
        let inj = inject_anomalies(&cols, &spec).unwrap();
        assert_eq!(inj.columns, cols);
        assert!(inj.labels.iter().all(|l| !l));
    }

    #[test]
    fn injection_count_and_magnitude() {
        let cols = ramp(6, 25_000);
        let spec = InjectionSpec { rate: 0.0646, ..Default::default() };
        let inj = inject_anomalies(&cols, &spec).unwrap();
        assert_eq!(inj.labels.iter().filter(|&&l| l).count(), 1615);
        assert_eq!(inj.offsets.len(), 1615 * 2);
        for &(step, d, off) in &inj.offsets {
            let sigma = present_std(&cols[d]);
            let diff = inj.columns[d][step].unwrap() - cols[d][step].unwrap();
            assert!((diff.abs() - 6.0 * sigma).abs() < 1e-9);
            assert_eq!(diff.signum(), off.signum());
        }
        let again = inject_anomalies(&cols, &spec).unwrap();
        assert_eq!(again, inj);
    }

    #[test]
    fn injection_validation() {
        let cols = ramp(2, 10);
        let spec = InjectionSpec { dims_per_event: 3, ..Default::default() };
        assert!(inject_anomalies(&cols, &spec).is_err());
        let spec = InjectionSpec { rate: 1.5, ..Default::default() };
        assert!(inject_anomalies(&cols, &spec).is_err());
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), 0.0);
    }

    #[test]
    fn sweep_zero_epsilon_discards_nothing() {
        let cols = ramp(2, 500);
        let rows = epsilon_sweep(&cols, &FilterParams::default(), &[0.0]);
        assert_eq!(rows[0].discard_pct, 0.0);
    }

    fn mann_whitney_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(&s, _)| s).collect();
        let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(&s, _)| s).collect();
        let mut u = 0.0;
        for &p in &pos {
            for &n in &neg {
                u += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
            }
        }
        u / (pos.len() * neg.len()) as f64
    }

    proptest! {
        #[test]
        fn auc_matches_mann_whitney(
            pairs in proptest::collection::vec((0u8..20, any::<bool>()), 2..200)
        ) {
            let scores: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 7.0).collect();
            let labels: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let auc: f64 = roc_auc(&scores, &labels).unwrap().auc;
            prop_assert!((auc - mann_whitney_auc(&scores, &labels)).abs() < 1e-9);
        }

        #[test]
        fn auc_invariant_under_monotone_transform(
            pairs in proptest::collection::vec((0.0..1.0f64, any::<bool>()), 2..200)
        ) {
            let scores: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let labels: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
            let a = roc_auc(&scores, &labels).unwrap().auc;
            let b = roc_auc(&warped, &labels).unwrap().auc;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn nmse_bounds(x in proptest::collection::vec(-1e3..1e3f64, 1..100), noise in 0.0..100.0f64) {
            prop_assert_eq!(nmse(&x, &x).unwrap().value, 0.0);
            let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v + noise * (i as f64).sin()).collect();
            let e = nmse(&x, &y).unwrap().value;
            prop_assert!((0.0..=1.0).contains(&e));
        }

        #[test]
        fn injection_label_count(steps in 1usize..3000, rate in 0.0..1.0f64, seed in any::<u64>()) {
            let cols = ramp(3, steps);
            let spec = InjectionSpec { rate, rng_seed: seed, ..Default::default() };
            let inj = inject_anomalies(&cols, &spec).unwrap();
            prop_assert_eq!(inj.labels.iter().filter(|&&l| l).count(), spec.event_count(steps));
            prop_assert!((spec.event_count(steps) as f64 - rate * steps as f64).abs() < 1.0);
        }
    }
}
