//! Reference implementations used only by tests. None of this calls into the
//! library's arithmetic.

#![allow(dead_code)]

use wban_core::iforest::{IsolationTree, Node};

const GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

/// Two-pass mean and population variance.
pub fn batch_mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Compensated-sum variant of the two-pass statistics, for long streams.
pub fn kahan_mean_var(xs: &[f64]) -> (f64, f64) {
    fn kahan(it: impl Iterator<Item = f64>) -> f64 {
        let (mut sum, mut c) = (0.0f64, 0.0f64);
        for x in it {
            let y = x - c;
            let t = sum + y;
            c = (t - sum) - y;
            sum = t;
        }
        sum
    }
    let n = xs.len() as f64;
    let mean = kahan(xs.iter().copied()) / n;
    let var = kahan(xs.iter().map(|x| (x - mean) * (x - mean))) / n;
    (mean, var)
}

/// Normalizing constant of the path length, written out term by term.
pub fn path_norm(n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 1.0;
    }
    let m = n as f64;
    2.0 * ((m - 1.0).ln() + GAMMA) - 2.0 * (m - 1.0) / m
}

/// Same constant with the harmonic number expanded to high order instead of
/// `ln + gamma`; differs from [`path_norm`] by `O(1/n)`.
pub fn path_norm_exact_harmonic(n: usize) -> f64 {
    let h: f64 = (1..n).rev().map(|i| 1.0 / i as f64).sum();
    2.0 * h - 2.0 * (n as f64 - 1.0) / n as f64
}

fn depth_of(nodes: &[Node<f64>], at: usize, x: &[f64], depth: usize) -> f64 {
    match &nodes[at] {
        Node::External { size } => depth as f64 + path_norm(*size),
        Node::Internal { dim, split, left, right } => {
            let next = if x[*dim] < *split { *left } else { *right };
            depth_of(nodes, next, x, depth + 1)
        }
    }
}

/// Recursive traversal of every tree, arithmetic mean, `2^(-E/c(omega))`.
pub fn brute_force_score<'a>(trees: impl IntoIterator<Item = &'a IsolationTree<f64>>, omega: usize, x: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for tree in trees {
        total += depth_of(tree.nodes(), 0, x, 0);
        count += 1;
    }
    let mean = total / count as f64;
    (-mean / path_norm(omega) * std::f64::consts::LN_2).exp()
}

/// Relative difference with an absolute floor for values near zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Spearman correlation computed by brute-force pairwise rank counting.
pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        v.iter()
            .map(|a| {
                let below = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
    let sy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
    if sx == 0.0 || sy == 0.0 {
        0.0
    } else {
        cov / (sx * sy)
    }
}
