//! Shared problem abstractions and the batch-to-online driver.
//!
//! At step `t` the driver hands the solver the prefix `x_1..x_{t-1}` (empty at
//! `t = 1`), records the returned parameter's loss on `x_t`, and only then
//! appends `x_t` to the prefix.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// Ordered collection of points in R^d.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index });
            }
        }
        Ok(Dataset { dim, points })
    }

    /// Infers the dimension from the first point.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or(Error::EmptyStream)?;
        Dataset::new(dim, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec<f64>> {
        self.points
    }

    /// The deletion view `X^(i)`.
    pub fn without(&self, i: usize) -> Dataset {
        let mut points = self.points.clone();
        points.remove(i);
        Dataset {
            dim: self.dim,
            points,
        }
    }
}

/// Per-point loss `l(theta, x)`.
pub trait LossModel<P: ?Sized, X: ?Sized> {
    fn evaluate(&self, theta: &P, x: &X) -> f64;

    fn aggregate<'a, I>(&self, theta: &P, xs: I) -> f64
    where
        I: IntoIterator<Item = &'a X>,
        X: 'a,
    {
        xs.into_iter().map(|x| self.evaluate(theta, x)).sum()
    }
}

impl<P: ?Sized, X: ?Sized, F: Fn(&P, &X) -> f64> LossModel<P, X> for F {
    fn evaluate(&self, theta: &P, x: &X) -> f64 {
        self(theta, x)
    }
}

/// Clips an inner loss to `[0, 1]` and counts how often clipping fired.
#[derive(Debug, Default)]
pub struct Clipped<L> {
    pub inner: L,
    events: AtomicU64,
}

impl<L> Clipped<L> {
    pub fn new(inner: L) -> Self {
        Clipped {
            inner,
            events: AtomicU64::new(0),
        }
    }

    pub fn clip_events(&self) -> u64 {
        self.events.load(Ordering::Relaxed)
    }
}

impl<P: ?Sized, X: ?Sized, L: LossModel<P, X>> LossModel<P, X> for Clipped<L> {
    fn evaluate(&self, theta: &P, x: &X) -> f64 {
        let v = self.inner.evaluate(theta, x);
        if v > 1.0 {
            self.events.fetch_add(1, Ordering::Relaxed);
            1.0
        } else if v < 0.0 {
            self.events.fetch_add(1, Ordering::Relaxed);
            0.0
        } else {
            v
        }
    }
}

/// A dataset together with the order in which it is revealed.
#[derive(Clone, Debug)]
pub struct Stream<X> {
    order: Vec<usize>,
    source: Vec<X>,
}

impl<X> Stream<X> {
    pub fn from_order(source: Vec<X>, order: Vec<usize>) -> Result<Self> {
        if source.is_empty() {
            return Err(Error::EmptyStream);
        }
        let mut seen = vec![false; source.len()];
        if order.len() != source.len() {
            return Err(Error::param("order", "length differs from source"));
        }
        for &i in &order {
            if i >= source.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::param("order", "not a permutation"));
            }
        }
        Ok(Stream { order, source })
    }

    pub fn as_given(source: Vec<X>) -> Result<Self> {
        let order = (0..source.len()).collect();
        Stream::from_order(source, order)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn source(&self) -> &[X] {
        &self.source
    }

    /// Points in stream order.
    pub fn iter(&self) -> impl Iterator<Item = &X> + '_ {
        self.order.iter().map(move |&i| &self.source[i])
    }
}

/// Uniformly random permutation of `source` (Fisher-Yates on the seeded generator).
pub fn random_order<X>(source: Vec<X>, seed: u64) -> Result<Stream<X>> {
    if source.is_empty() {
        return Err(Error::EmptyStream);
    }
    let mut order: Vec<usize> = (0..source.len()).collect();
    order.shuffle(&mut SeedStream::new(seed).child("order", 0).rng());
    Stream::from_order(source, order)
}

/// Parameters whose changes are counted for inconsistency.
pub trait Parameter: Clone {
    fn coordinates(&self) -> Vec<f64>;
}

impl Parameter for Vec<f64> {
    fn coordinates(&self) -> Vec<f64> {
        self.clone()
    }
}

impl Parameter for f64 {
    fn coordinates(&self) -> Vec<f64> {
        vec![*self]
    }
}

/// Equality used to decide whether `theta_t != theta_{t+1}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum SolutionEquality {
    #[default]
    Bitwise,
    /// Infinity-norm distance at most the given tolerance.
    Tolerance(f64),
}

impl SolutionEquality {
    pub fn same<P: Parameter>(&self, a: &P, b: &P) -> bool {
        let (a, b) = (a.coordinates(), b.coordinates());
        if a.len() != b.len() {
            return false;
        }
        match *self {
            SolutionEquality::Bitwise => a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()),
            SolutionEquality::Tolerance(tol) => a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol),
        }
    }
}

/// Per-step record of an online run.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretLedger {
    pub step_losses: Vec<f64>,
    pub prefix_opt: Vec<Option<f64>>,
    /// `changed[t]` compares the parameters of steps `t` and `t + 1` (0-based).
    pub changed: Vec<bool>,
    pub epsilon: f64,
    pub seed: u64,
    pub wall_ms: Vec<f64>,
}

impl RegretLedger {
    pub fn len(&self) -> usize {
        self.step_losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.step_losses.is_empty()
    }

    pub fn cumulative(&self) -> Vec<f64> {
        self.step_losses
            .iter()
            .scan(0.0, |acc, l| {
                *acc += l;
                Some(*acc)
            })
            .collect()
    }

    pub fn total_loss(&self) -> f64 {
        self.step_losses.iter().sum()
    }
}

/// `sum of step losses - (1 + epsilon) * opt_n`.
pub fn epsilon_regret(ledger: &RegretLedger, opt_n: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::param("epsilon", "must be nonnegative"));
    }
    if !(opt_n >= 0.0) {
        return Err(Error::param("opt_n", "must be nonnegative"));
    }
    Ok(ledger.total_loss() - (1.0 + epsilon) * opt_n)
}

/// Number of steps at which the output parameter changed.
pub fn inconsistency(ledger: &RegretLedger) -> usize {
    ledger.changed.iter().filter(|&&c| c).count()
}

/// Candidate minimizing the aggregate loss; ties go to the lowest index.
pub fn brute_force_opt<P, X, L>(loss: &L, data: &[X], candidates: &[P]) -> Result<(usize, f64)>
where
    L: LossModel<P, X>,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let v = loss.aggregate(c, data);
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.ok_or(Error::NoCandidates)
}

/// What a solver sees at step `t` besides the prefix.
#[derive(Clone, Copy, Debug)]
pub struct StepContext {
    /// 1-based step index.
    pub t: usize,
    pub horizon: usize,
    pub root: SeedStream,
}

impl StepContext {
    /// Fresh randomness for this step only.
    pub fn step_stream(&self) -> SeedStream {
        self.root.child("step", self.t as u64)
    }

    /// Randomness shared by every step, for coupled (lazy) solvers.
    pub fn shared_stream(&self) -> SeedStream {
        self.root.child("shared", 0)
    }
}

/// An offline procedure run on each prefix.
pub trait OnlineSolver<X> {
    type Param: Parameter;

    fn solve(&mut self, prefix: &[X], ctx: &StepContext) -> Result<Self::Param>;
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub seed: u64,
    pub epsilon: f64,
    pub equality: SolutionEquality,
}

impl RunOptions {
    pub fn new(seed: u64, epsilon: f64) -> Self {
        RunOptions {
            seed,
            epsilon,
            equality: SolutionEquality::Bitwise,
        }
    }
}

/// How per-step samples relate across steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum UpdateMode {
    /// Independent randomness at every step.
    #[default]
    Fresh,
    /// Samples coupled across steps; the solution is recomputed only when the
    /// drawn index multiset changes.
    Lazy,
}

/// Ledger plus counters gathered by a problem-specific online pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct OnlineReport {
    pub ledger: RegretLedger,
    pub clip_events: u64,
    /// Steps where a coreset weight had to be repaired (clustering only).
    pub clamp_events: u64,
    /// Number of times the offline solver actually ran.
    pub resolves: usize,
}

/// Run the batch-to-online conversion over `stream`.
pub fn run_online<X, S, L>(
    solver: &mut S,
    stream: &Stream<X>,
    loss: &L,
    options: RunOptions,
) -> Result<RegretLedger>
where
    X: Clone,
    S: OnlineSolver<X>,
    L: LossModel<S::Param, X>,
{
    let n = stream.len();
    let root = SeedStream::new(options.seed).child("run", 0);
    let mut prefix: Vec<X> = Vec::with_capacity(n);
    let mut step_losses = Vec::with_capacity(n);
    let mut changed = Vec::with_capacity(n.saturating_sub(1));
    let mut wall_ms = Vec::with_capacity(n);
    let mut previous: Option<S::Param> = None;

    for (i, x) in stream.iter().enumerate() {
        let ctx = StepContext {
            t: i + 1,
            horizon: n,
            root,
        };
        let start = Instant::now();
        let theta = solver.solve(&prefix, &ctx).map_err(|e| Error::Solver {
            step: ctx.t,
            source: Box::new(e),
        })?;
        step_losses.push(loss.evaluate(&theta, x));
        wall_ms.push(start.elapsed().as_secs_f64() * 1e3);
        if let Some(prev) = &previous {
            changed.push(!options.equality.same(prev, &theta));
        }
        previous = Some(theta);
        prefix.push(x.clone());
    }

    Ok(RegretLedger {
        step_losses,
        prefix_opt: vec![None; n],
        changed,
        epsilon: options.epsilon,
        seed: options.seed,
        wall_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Mean;
    impl OnlineSolver<f64> for Mean {
        type Param = f64;
        fn solve(&mut self, prefix: &[f64], _: &StepContext) -> Result<f64> {
            if prefix.is_empty() {
                return Ok(0.0);
            }
            Ok(prefix.iter().sum::<f64>() / prefix.len() as f64)
        }
    }

    fn abs_loss(theta: &f64, x: &f64) -> f64 {
        (theta - x).abs()
    }

    #[test]
    fn single_point_order() {
        assert_eq!(random_order(vec![7.0], 3).unwrap().order(), &[0]);
    }

    #[test]
    fn empty_stream_is_rejected() {
        assert_eq!(
            random_order(Vec::<f64>::new(), 1).unwrap_err(),
            Error::EmptyStream
        );
    }

    #[test]
    fn order_is_deterministic() {
        let a = random_order(vec![1, 2, 3], 11).unwrap();
        let b = random_order(vec![1, 2, 3], 11).unwrap();
        assert_eq!(a.order(), b.order());
    }

    #[test]
    fn permutation_frequencies_are_uniform() {
        // all 120 permutations of 5 elements, 10_000 seeds
        use std::collections::HashMap;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        let trials = 10_000;
        for seed in 0..trials {
            let s = random_order(vec![0u8; 5], seed).unwrap();
            *counts.entry(s.order().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 120);
        let expected = trials as f64 / 120.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 119 dof, 0.999 quantile is about 173
        assert!(chi2 < 173.0, "chi2 = {chi2}");
        for &c in counts.values() {
            assert!((c as f64 / trials as f64 - 1.0 / 120.0).abs() < 0.01);
        }
    }

    #[test]
    fn constant_stream_has_zero_loss_after_first_step() {
        let stream = Stream::as_given(vec![0.5; 6]).unwrap();
        let ledger = run_online(&mut Mean, &stream, &abs_loss, RunOptions::new(0, 0.0)).unwrap();
        assert_eq!(ledger.step_losses[0], 0.5);
        assert!(ledger.step_losses[1..].iter().all(|&l| l == 0.0));
        assert_eq!(ledger.changed.len(), 5);
        assert_eq!(inconsistency(&ledger), 1);
        assert!(ledger.changed[1..].iter().all(|c| !c));
    }

    #[test]
    fn single_step_uses_default() {
        let stream = Stream::as_given(vec![0.3]).unwrap();
        let ledger = run_online(&mut Mean, &stream, &abs_loss, RunOptions::new(0, 0.0)).unwrap();
        assert_eq!(ledger.step_losses, vec![0.3]);
        assert!(ledger.changed.is_empty());
    }

    #[test]
    fn solver_error_carries_step() {
        struct FailAt3;
        impl OnlineSolver<f64> for FailAt3 {
            type Param = f64;
            fn solve(&mut self, prefix: &[f64], _: &StepContext) -> Result<f64> {
                if prefix.len() == 2 {
                    Err(Error::NoCandidates)
                } else {
                    Ok(0.0)
                }
            }
        }
        let stream = Stream::as_given(vec![1.0; 5]).unwrap();
        match run_online(&mut FailAt3, &stream, &abs_loss, RunOptions::new(0, 0.0)) {
            Err(Error::Solver { step: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn regret_arithmetic() {
        let mut l = RegretLedger {
            step_losses: vec![0.5, 0.5],
            prefix_opt: vec![None; 2],
            changed: vec![false],
            epsilon: 0.0,
            seed: 0,
            wall_ms: vec![0.0; 2],
        };
        assert_eq!(epsilon_regret(&l, 1.0, 0.0).unwrap(), 0.0);
        assert!((epsilon_regret(&l, 1.0, 0.1).unwrap() + 0.1).abs() < 1e-15);
        assert!(epsilon_regret(&l, 1.0, -0.1).is_err());
        l.step_losses = vec![1.0; 7];
        assert_eq!(epsilon_regret(&l, 0.0, 3.0).unwrap(), 7.0);
    }

    #[test]
    fn inconsistency_counts_flags() {
        let mut l = RegretLedger {
            step_losses: vec![0.0; 4],
            prefix_opt: vec![None; 4],
            changed: vec![false; 3],
            epsilon: 0.0,
            seed: 0,
            wall_ms: vec![],
        };
        assert_eq!(inconsistency(&l), 0);
        l.changed = vec![true, false, true];
        assert_eq!(inconsistency(&l), 2);
    }

    #[test]
    fn brute_force_single_and_ties() {
        let data = [1.0, 2.0];
        assert_eq!(brute_force_opt(&abs_loss, &data, &[5.0]).unwrap(), (0, 7.0));
        // 1.0 and 2.0 both give aggregate 1.0
        assert_eq!(brute_force_opt(&abs_loss, &data, &[2.0, 1.0]).unwrap().0, 0);
        assert_eq!(
            brute_force_opt(&abs_loss, &data, &[] as &[f64]).unwrap_err(),
            Error::NoCandidates
        );
    }

    #[test]
    fn clipping_counts_events() {
        let clipped = Clipped::new(abs_loss);
        assert_eq!(clipped.evaluate(&0.0, &3.0), 1.0);
        assert_eq!(clipped.evaluate(&0.0, &0.5), 0.5);
        assert_eq!(clipped.clip_events(), 1);
    }

    #[test]
    fn tolerance_equality() {
        let eq = SolutionEquality::Tolerance(1e-12);
        assert!(eq.same(&vec![1.0, 2.0], &vec![1.0 + 1e-13, 2.0]));
        assert!(!SolutionEquality::Bitwise.same(&vec![1.0, 2.0], &vec![1.0 + 1e-13, 2.0]));
    }

    #[test]
    fn deletion_view() {
        let d = Dataset::from_points(vec![vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(d.without(1).points(), &[vec![1.0], vec![3.0]]);
        assert!(Dataset::new(2, vec![vec![1.0]]).is_err());
        assert!(Dataset::new(1, vec![vec![f64::NAN]]).is_err());
    }
}
