//! Streaming isolation forest over fixed-size windows.
//!
//! Incoming vectors are cut into tumbling windows of `omega` points. The
//! first window seeds a ring of `n_tree` isolation trees. Every window,
//! including the first, is scored against the current ring; each full window
//! after the first then replaces the `k_tree` oldest trees with trees grown
//! from that window. A trailing partial window is scored but never used for
//! growing trees.
//!
//! Scores follow the usual isolation-forest normalization
//! `2^(-E[h(x)] / d(omega))`, where `h(x)` counts edges to the terminal node
//! plus `d(size)` for the points left unresolved there.

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lpu::normalize_window;
use crate::model::TimeStepVector;
use crate::scalar::Scalar;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForestError {
    #[error("cannot grow a tree from an empty sample")]
    DegenerateSample,
    #[error("expected vectors of dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("stream ended after {received} vectors, fewer than one window of {omega}")]
    StreamTooShort { received: usize, omega: usize },
    #[error("invalid forest parameters: {0}")]
    InvalidParams(String),
}

/// Average unsuccessful-search depth of a binary search tree over `n` keys.
///
/// `d(0) = d(1) = 0` and `d(2) = 1`; above that the harmonic number is
/// approximated by `ln(n - 1) + gamma`.
pub fn avg_path_d<F: Scalar>(n: usize) -> F {
    match n {
        0 | 1 => F::zero(),
        2 => F::one(),
        _ => {
            let n_f = F::from_count(n as u64);
            let two = F::lit(2.0);
            let harmonic = (n_f - F::one()).ln() + F::lit(EULER_GAMMA);
            two * harmonic - two * (n_f - F::one()) / n_f
        }
    }
}

/// `ceil(log2(omega))` for `omega >= 1`.
pub fn height_limit_for(omega: usize) -> usize {
    if omega <= 1 {
        0
    } else {
        (usize::BITS - (omega - 1).leading_zeros()) as usize
    }
}

/// `2^(-mean_path / d(omega))`.
pub fn anomaly_score<F: Scalar>(mean_path: F, omega: usize) -> F {
    let d: F = avg_path_d(omega);
    F::lit(2.0).powf(-mean_path / d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tier2Params<F> {
    /// Window size.
    pub omega: usize,
    /// Trees held in the ring.
    pub n_tree: usize,
    /// Trees replaced after each window.
    pub k_tree: usize,
    pub score_threshold: F,
    pub rng_seed: u64,
}

impl<F: Scalar> Default for Tier2Params<F> {
    fn default() -> Self {
        Self { omega: 1024, n_tree: 100, k_tree: 20, score_threshold: F::lit(0.5), rng_seed: 0 }
    }
}

impl<F: Scalar> Tier2Params<F> {
    pub fn height_limit(&self) -> usize {
        height_limit_for(self.omega)
    }

    pub fn validate(&self) -> Result<(), ForestError> {
        let bad = |msg: &str| Err(ForestError::InvalidParams(msg.to_string()));
        if self.omega < 2 {
            return bad("omega must be at least 2");
        }
        if self.n_tree < 1 {
            return bad("n_tree must be at least 1");
        }
        if self.k_tree < 1 || self.k_tree > self.n_tree {
            return bad("k_tree must lie in [1, n_tree]");
        }
        if !self.score_threshold.is_finite() {
            return bad("score_threshold must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node<F> {
    Internal { dim: usize, split: F, left: usize, right: usize },
    External { size: usize },
}

/// One randomized partition tree, stored as an arena with the root at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolationTree<F> {
    nodes: Vec<Node<F>>,
    dimension: usize,
}

impl<F: Scalar> IsolationTree<F> {
    /// Grow a tree over `sample`, never deeper than `height_limit` edges.
    pub fn build<S, R>(sample: &[S], height_limit: usize, rng: &mut R) -> Result<Self, ForestError>
    where
        S: AsRef<[F]>,
        R: Rng + ?Sized,
    {
        let dimension = sample.first().ok_or(ForestError::DegenerateSample)?.as_ref().len();
        if let Some(bad) = sample.iter().find(|s| s.as_ref().len() != dimension) {
            return Err(ForestError::DimensionMismatch {
                expected: dimension,
                found: bad.as_ref().len(),
            });
        }
        let rows: Vec<&[F]> = sample.iter().map(AsRef::as_ref).collect();
        let mut idx: Vec<usize> = (0..rows.len()).collect();
        let mut builder = Builder { rows: &rows, nodes: Vec::new(), height_limit, dimension };
        builder.grow(&mut idx, 0, rng);
        Ok(Self { nodes: builder.nodes, dimension })
    }

    pub fn nodes(&self) -> &[Node<F>] {
        &self.nodes
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Edges from the root to the terminal node of `x`, plus `d(size)` of
    /// that node.
    pub fn path_length(&self, x: &[F]) -> F {
        let mut node = 0;
        let mut edges = 0u64;
        loop {
            match self.nodes[node] {
                Node::Internal { dim, split, left, right } => {
                    node = if x[dim] < split { left } else { right };
                    edges += 1;
                }
                Node::External { size } => {
                    return F::from_count(edges) + avg_path_d(size);
                }
            }
        }
    }

    pub fn max_depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((node, depth)) = stack.pop() {
            max = max.max(depth);
            if let Node::Internal { left, right, .. } = self.nodes[node] {
                stack.push((left, depth + 1));
                stack.push((right, depth + 1));
            }
        }
        max
    }

    pub fn external_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::External { size } => Some(*size),
            Node::Internal { .. } => None,
        })
    }
}

struct Builder<'a, F> {
    rows: &'a [&'a [F]],
    nodes: Vec<Node<F>>,
    height_limit: usize,
    dimension: usize,
}

impl<F: Scalar> Builder<'_, F> {
    fn grow<R: Rng + ?Sized>(&mut self, idx: &mut [usize], depth: usize, rng: &mut R) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::External { size: idx.len() });
        if idx.len() <= 1 || depth >= self.height_limit {
            return id;
        }

        let mut candidates = Vec::with_capacity(self.dimension);
        for d in 0..self.dimension {
            let (lo, hi) = self.range(idx, d);
            if lo < hi {
                candidates.push((d, lo, hi));
            }
        }
        if candidates.is_empty() {
            return id;
        }
        let (dim, lo, hi) = candidates[rng.random_range(0..candidates.len())];
        let u: f64 = Open01.sample(rng);
        let split = split_inside(lo, hi, F::lit(u));

        let mut boundary = 0;
        for i in 0..idx.len() {
            if self.rows[idx[i]][dim] < split {
                idx.swap(i, boundary);
                boundary += 1;
            }
        }
        let (left_idx, right_idx) = idx.split_at_mut(boundary);
        let left = self.grow(left_idx, depth + 1, rng);
        let right = self.grow(right_idx, depth + 1, rng);
        self.nodes[id] = Node::Internal { dim, split, left, right };
        id
    }

    fn range(&self, idx: &[usize], d: usize) -> (F, F) {
        idx.iter().fold((F::infinity(), F::neg_infinity()), |(lo, hi), &i| {
            let x = self.rows[i][d];
            (lo.min(x), hi.max(x))
        })
    }
}

/// A point of `(lo, hi)` at fraction `u`; falls back to the midpoint when
/// rounding lands on an endpoint, and to `hi` when the two are adjacent
/// floats (so the left side still receives `lo`).
fn split_inside<F: Scalar>(lo: F, hi: F, u: F) -> F {
    let s = lo + u * (hi - lo);
    if s > lo && s < hi {
        return s;
    }
    let mid = lo + (hi - lo) / F::lit(2.0);
    if mid > lo && mid < hi {
        mid
    } else {
        hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPoint<F> {
    pub t: u64,
    pub score: F,
    pub is_anomaly: bool,
    pub mean_path: F,
}

#[derive(Debug, Clone, PartialEq)]
struct Slot<F> {
    serial: u64,
    tree: IsolationTree<F>,
}

/// Fixed-capacity ring of trees with a pointer to the oldest entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestBuffer<F> {
    slots: Vec<Slot<F>>,
    start: usize,
    next_serial: u64,
    sample_size: usize,
    height_limit: usize,
}

impl<F: Scalar> ForestBuffer<F> {
    pub fn build<S, R>(
        window: &[S],
        n_tree: usize,
        height_limit: usize,
        rng: &mut R,
    ) -> Result<Self, ForestError>
    where
        S: AsRef<[F]>,
        R: Rng + ?Sized,
    {
        let mut slots = Vec::with_capacity(n_tree);
        for serial in 0..n_tree as u64 {
            slots.push(Slot { serial, tree: IsolationTree::build(window, height_limit, rng)? });
        }
        Ok(Self {
            slots,
            start: 0,
            next_serial: n_tree as u64,
            sample_size: window.len(),
            height_limit,
        })
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Index of the next slot to be replaced.
    pub fn start(&self) -> usize {
        self.start
    }

    /// Points each tree was grown from; the `omega` in `d(omega)`.
    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    /// Build serial of the tree in each slot; a serial never repeats.
    pub fn serials(&self) -> Vec<u64> {
        self.slots.iter().map(|s| s.serial).collect()
    }

    pub fn trees(&self) -> impl Iterator<Item = &IsolationTree<F>> {
        self.slots.iter().map(|s| &s.tree)
    }

    pub fn mean_path(&self, x: &[F]) -> F {
        let total: F = self.slots.iter().map(|s| s.tree.path_length(x)).sum();
        total / F::from_count(self.slots.len() as u64)
    }

    pub fn score(&self, x: &[F]) -> F {
        anomaly_score(self.mean_path(x), self.sample_size)
    }

    /// Score every row of `window`; `times[i]` labels row `i`.
    pub fn score_window<S: AsRef<[F]>>(
        &self,
        window: &[S],
        times: &[u64],
        threshold: F,
    ) -> Vec<ScoredPoint<F>> {
        debug_assert_eq!(window.len(), times.len());
        window
            .iter()
            .zip(times)
            .map(|(x, &t)| {
                let mean_path = self.mean_path(x.as_ref());
                let score = anomaly_score(mean_path, self.sample_size);
                ScoredPoint { t, score, is_anomaly: score > threshold, mean_path }
            })
            .collect()
    }

    /// Replace the `k_tree` oldest trees with trees grown from `window`.
    pub fn refresh<S, R>(&mut self, window: &[S], k_tree: usize, rng: &mut R) -> Result<(), ForestError>
    where
        S: AsRef<[F]>,
        R: Rng + ?Sized,
    {
        let n = self.slots.len();
        for _ in 0..k_tree.min(n) {
            let tree = IsolationTree::build(window, self.height_limit, rng)?;
            self.slots[self.start] = Slot { serial: self.next_serial, tree };
            self.next_serial += 1;
            self.start = (self.start + 1) % n;
        }
        self.sample_size = window.len();
        Ok(())
    }
}

/// Incremental driver: feed vectors one at a time, collect scores as each
/// window completes.
#[derive(Debug)]
pub struct StreamingDetector<F> {
    params: Tier2Params<F>,
    rng: ChaCha8Rng,
    pending: Vec<TimeStepVector<F>>,
    forest: Option<ForestBuffer<F>>,
    received: usize,
    windows: usize,
    refreshes: usize,
}

/// Counters describing a finished stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub vectors: usize,
    pub full_windows: usize,
    pub refreshes: usize,
    pub partial_window: usize,
}

impl<F: Scalar> StreamingDetector<F> {
    pub fn new(params: Tier2Params<F>) -> Result<Self, ForestError> {
        params.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(params.rng_seed),
            pending: Vec::with_capacity(params.omega),
            params,
            forest: None,
            received: 0,
            windows: 0,
            refreshes: 0,
        })
    }

    pub fn forest(&self) -> Option<&ForestBuffer<F>> {
        self.forest.as_ref()
    }

    /// Buffer one vector; returns the window's scores when it fills up.
    pub fn push(&mut self, v: TimeStepVector<F>) -> Result<Vec<ScoredPoint<F>>, ForestError> {
        if let Some(first) = self.pending.first() {
            if first.dimension() != v.dimension() {
                return Err(ForestError::DimensionMismatch {
                    expected: first.dimension(),
                    found: v.dimension(),
                });
            }
        }
        self.received += 1;
        self.pending.push(v);
        if self.pending.len() < self.params.omega {
            return Ok(Vec::new());
        }
        let window = std::mem::take(&mut self.pending);
        let times: Vec<u64> = window.iter().map(|v| v.t).collect();
        let rows = normalize_window(&window);
        self.pending = Vec::with_capacity(self.params.omega);

        let scored = match self.forest.as_mut() {
            None => {
                let forest = ForestBuffer::build(
                    &rows,
                    self.params.n_tree,
                    self.params.height_limit(),
                    &mut self.rng,
                )?;
                let scored = forest.score_window(&rows, &times, self.params.score_threshold);
                self.forest = Some(forest);
                scored
            }
            Some(forest) => {
                let scored = forest.score_window(&rows, &times, self.params.score_threshold);
                forest.refresh(&rows, self.params.k_tree, &mut self.rng)?;
                self.refreshes += 1;
                scored
            }
        };
        self.windows += 1;
        Ok(scored)
    }

    /// Score whatever is left in the buffer and close the stream.
    pub fn finish(mut self) -> Result<(Vec<ScoredPoint<F>>, StreamSummary), ForestError> {
        let Some(forest) = self.forest.as_ref() else {
            return Err(ForestError::StreamTooShort {
                received: self.received,
                omega: self.params.omega,
            });
        };
        let partial = self.pending.len();
        let scored = if partial == 0 {
            Vec::new()
        } else {
            let window = std::mem::take(&mut self.pending);
            let times: Vec<u64> = window.iter().map(|v| v.t).collect();
            forest.score_window(&normalize_window(&window), &times, self.params.score_threshold)
        };
        let summary = StreamSummary {
            vectors: self.received,
            full_windows: self.windows,
            refreshes: self.refreshes,
            partial_window: partial,
        };
        Ok((scored, summary))
    }
}

/// Run a whole stream through a fresh detector.
pub fn process_stream<F, I>(
    vectors: I,
    params: Tier2Params<F>,
) -> Result<(Vec<ScoredPoint<F>>, StreamSummary), ForestError>
where
    F: Scalar,
    I: IntoIterator<Item = TimeStepVector<F>>,
{
    let mut detector = StreamingDetector::new(params)?;
    let mut out = Vec::new();
    for v in vectors {
        out.extend(detector.push(v)?);
    }
    let (tail, summary) = detector.finish()?;
    out.extend(tail);
    Ok((out, summary))
}

/// Maximal runs of consecutive flagged points, as `(t_start, t_end)`.
pub fn alarm_intervals<F>(points: &[ScoredPoint<F>]) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut open: Option<(u64, u64)> = None;
    for p in points {
        match (p.is_anomaly, open.as_mut()) {
            (true, Some(run)) => run.1 = p.t,
            (true, None) => open = Some((p.t, p.t)),
            (false, Some(_)) => out.extend(open.take()),
            (false, None) => {}
        }
    }
    out.extend(open);
    out
}
