mod common;

use proptest::prelude::*;
use wban_core::FilterState;

proptest! {
    #[test]
    fn incremental_matches_two_pass(xs in proptest::collection::vec(-1e3..1e3f64, 1..400)) {
        let mut s = FilterState::new();
        for &x in &xs {
            s.update_stats(x);
        }
        let (m, v) = common::batch_mean_var(&xs);
        prop_assert_eq!(s.count, xs.len() as u64);
        prop_assert!((s.mean - m).abs() <= 1e-9 * m.abs().max(1.0));
        prop_assert!((s.variance - v).abs() <= 1e-9 * v.max(1.0));
    }
}

#[test]
fn offset_data_does_not_lose_precision() {
    let xs: Vec<f64> = (0..10_000).map(|i| 1e6 + (i % 7) as f64).collect();
    let mut s = FilterState::new();
    for &x in &xs {
        s.update_stats(x);
    }
    let (m, v) = common::kahan_mean_var(&xs);
    assert!(common::rel_err(s.mean, m) < 1e-12);
    assert!(common::rel_err(s.variance, v) < 1e-9);
}
