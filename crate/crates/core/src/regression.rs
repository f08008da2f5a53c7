//! Leverage-score row sampling and online least absolute residual regression.
//!
//! The learner commits to `x_t` before seeing `(a_t, b_t)` and pays
//! `|a_t . x_t - b_t|`. Each step sketches the prefix rows and solves the
//! sketched least-squares problem.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    dot, gram, pinv_values, rank_one_update, spectral_quadratic, sym_eigen_desc, PINV_CUTOFF,
};
use crate::lowrank::LeverageScores;
use crate::online::{
    run_online, Clipped, LossModel, OnlineReport, OnlineSolver, RunOptions, StepContext, Stream,
    UpdateMode,
};
use crate::sampling::{draw_indices, DrawScheme};

/// One stream element: a design row and its target.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub a: Vec<f64>,
    pub b: f64,
}

/// Stacked rows `a_i^T` with targets `b_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowMatrix {
    d: usize,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl RowMatrix {
    pub fn new(d: usize, rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("d", "must be positive"));
        }
        if rows.len() != targets.len() {
            return Err(Error::param("targets", "length differs from rows"));
        }
        for (index, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) || !targets[index].is_finite() {
                return Err(Error::NonFinite { index });
            }
        }
        Ok(RowMatrix { d, rows, targets })
    }

    /// Design only; targets set to zero.
    pub fn design(d: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        RowMatrix::new(d, rows, vec![0.0; n])
    }

    pub fn from_observations(d: usize, obs: &[Observation]) -> Result<Self> {
        RowMatrix::new(
            d,
            obs.iter().map(|o| o.a.clone()).collect(),
            obs.iter().map(|o| o.b).collect(),
        )
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn design_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), self.d, |r, c| self.rows[r][c])
    }
}

/// `tau_i = ||U_i||^2` for the thin left factor `U` of `A`.
pub fn leverage_scores(a: &RowMatrix) -> Result<LeverageScores> {
    if a.is_empty() {
        return Err(Error::EmptyStream);
    }
    Ok(scores_from_gram(&gram(a.rows(), a.d()), a.rows()))
}

fn scores_from_gram(g: &DMatrix<f64>, rows: &[Vec<f64>]) -> LeverageScores {
    let (values, basis) = sym_eigen_desc(g);
    if !(values.first().copied().unwrap_or(0.0) > 0.0) {
        return LeverageScores {
            scores: vec![0.0; rows.len()],
            degenerate: true,
        };
    }
    let inv = pinv_values(&values);
    LeverageScores {
        scores: rows
            .iter()
            .map(|r| spectral_quadratic(&basis, &inv, r).clamp(0.0, 1.0))
            .collect(),
        degenerate: false,
    }
}

/// Sparse sketch: slot `j` is row `selected[j].0` scaled by `selected[j].1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowSketch {
    pub selected: Vec<(usize, f64)>,
}

impl RowSketch {
    /// Every row once with unit weight.
    pub fn identity(n: usize) -> Self {
        RowSketch {
            selected: (0..n).map(|i| (i, 1.0)).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.selected.len()
    }

    pub fn index_multiset(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.selected.iter().map(|s| s.0).collect();
        v.sort_unstable();
        v
    }

    /// `(S A, S b)`.
    pub fn apply(&self, a: &RowMatrix) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let mut sa = DMatrix::zeros(self.m(), a.d());
        let mut sb = DVector::zeros(self.m());
        for (slot, &(i, w)) in self.selected.iter().enumerate() {
            let row = a.rows().get(i).ok_or(Error::DanglingIndex {
                index: i,
                len: a.len(),
            })?;
            for (c, v) in row.iter().enumerate() {
                sa[(slot, c)] = w * v;
            }
            sb[slot] = w * a.targets()[i];
        }
        Ok((sa, sb))
    }
}

pub fn sketch_rows(
    a: &RowMatrix,
    m: usize,
    epsilon: f64,
    scheme: &DrawScheme,
) -> Result<RowSketch> {
    let scores = leverage_scores(a)?;
    sketch_from_scores(&scores.scores, m, epsilon, scheme)
}

fn sketch_from_scores(
    scores: &[f64],
    m: usize,
    epsilon: f64,
    scheme: &DrawScheme,
) -> Result<RowSketch> {
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", "must lie in (0, 1)"));
    }
    let total: f64 = scores.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroLeverageMass);
    }
    let draws = draw_indices(scores, m, scheme)?;
    let selected = draws
        .iter()
        .map(|d| {
            let p = scores[d.index] / total;
            (d.index, (1.0 + epsilon * d.jitter) / (m as f64 * p).sqrt())
        })
        .collect();
    Ok(RowSketch { selected })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SketchedSolution {
    pub x: Vec<f64>,
    pub rank: usize,
    pub rank_deficient: bool,
}

/// Minimum-norm least squares for `min ||S A x - S b||` via QR then SVD of `R`.
pub fn sketched_solve(s: &RowSketch, a: &RowMatrix) -> Result<SketchedSolution> {
    let (sa, sb) = s.apply(a)?;
    if sa.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroLeverageMass);
    }
    Ok(min_norm_lstsq(sa, sb))
}

pub(crate) fn min_norm_lstsq(sa: DMatrix<f64>, sb: DVector<f64>) -> SketchedSolution {
    let d = sa.ncols();
    // reduce tall systems to d x d first
    let (core, rhs) = if sa.nrows() > d {
        let qr = sa.qr();
        let rhs = qr.q().transpose() * &sb;
        (qr.r(), rhs)
    } else {
        (sa, sb)
    };
    let svd = core.svd(true, true);
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&v| top > 0.0 && v > PINV_CUTOFF * top)
        .count();
    let x = if rank == 0 {
        DVector::zeros(d)
    } else {
        svd.solve(&rhs, PINV_CUTOFF * top)
            .unwrap_or_else(|_| DVector::zeros(d))
    };
    SketchedSolution {
        x: x.iter().copied().collect(),
        rank,
        rank_deficient: rank < d,
    }
}

/// `|a . x - b|`.
pub fn regression_loss(x: &[f64], a: &[f64], b: f64) -> Result<f64> {
    if x.len() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: a.len(),
        });
    }
    Ok((dot(a, x) - b).abs())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AbsoluteResidual;

impl LossModel<Vec<f64>, Observation> for AbsoluteResidual {
    fn evaluate(&self, theta: &Vec<f64>, x: &Observation) -> f64 {
        (dot(&x.a, theta) - x.b).abs()
    }
}

/// Exact least squares on the full data (normal-equation free).
pub fn exact_least_squares(a: &RowMatrix) -> Vec<f64> {
    let b = DVector::from_column_slice(a.targets());
    min_norm_lstsq(a.design_matrix(), b).x
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionConfig {
    pub d: usize,
    pub epsilon: f64,
    pub mode: UpdateMode,
    pub const_m: f64,
    pub clip: bool,
}

impl RegressionConfig {
    pub fn new(d: usize, epsilon: f64) -> Self {
        RegressionConfig {
            d,
            epsilon,
            mode: UpdateMode::Fresh,
            const_m: 1.0,
            clip: false,
        }
    }

    /// `ceil(c * eps^-2 * d * ln(d / delta))`.
    pub fn sample_size_with_delta(&self, delta: f64) -> usize {
        let d = self.d as f64;
        (self.const_m * d * (d / delta).ln() / (self.epsilon * self.epsilon))
            .ceil()
            .max(1.0) as usize
    }

    /// Sample size with `delta = eps / (10 n)`.
    pub fn sample_size(&self, horizon: usize) -> usize {
        self.sample_size_with_delta(self.epsilon / (10.0 * horizon as f64))
    }
}

pub struct RegressionSolver {
    config: RegressionConfig,
    gram: DMatrix<f64>,
    absorbed: usize,
    last: Option<(Vec<usize>, Vec<f64>)>,
    pub resolves: usize,
    pub rank_deficient_steps: usize,
}

impl RegressionSolver {
    pub fn new(config: RegressionConfig) -> Result<Self> {
        if config.d == 0 {
            return Err(Error::param("d", "must be positive"));
        }
        if !(config.epsilon > 0.0 && config.epsilon < 1.0) {
            return Err(Error::param("epsilon", "must lie in (0, 1)"));
        }
        Ok(RegressionSolver {
            gram: DMatrix::zeros(config.d, config.d),
            config,
            absorbed: 0,
            last: None,
            resolves: 0,
            rank_deficient_steps: 0,
        })
    }
}

impl OnlineSolver<Observation> for RegressionSolver {
    type Param = Vec<f64>;

    fn solve(&mut self, prefix: &[Observation], ctx: &StepContext) -> Result<Vec<f64>> {
        let d = self.config.d;
        for o in &prefix[self.absorbed..] {
            if o.a.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: o.a.len(),
                });
            }
            rank_one_update(&mut self.gram, &o.a, 1.0);
        }
        self.absorbed = prefix.len();
        if prefix.is_empty() {
            return Ok(vec![0.0; d]);
        }
        let rows: Vec<Vec<f64>> = prefix.iter().map(|o| o.a.clone()).collect();
        let scores = scores_from_gram(&self.gram, &rows);
        if scores.degenerate {
            return Ok(vec![0.0; d]);
        }
        let m = self.config.sample_size(ctx.horizon).min(prefix.len());
        let scheme = match self.config.mode {
            UpdateMode::Fresh => DrawScheme::Independent(ctx.step_stream()),
            UpdateMode::Lazy => DrawScheme::Coupled {
                stream: ctx.shared_stream(),
                universe: ctx.horizon,
            },
        };
        let sketch = sketch_from_scores(&scores.scores, m, self.config.epsilon, &scheme)?;
        let selection = sketch.index_multiset();
        if self.config.mode == UpdateMode::Lazy {
            if let Some((prev, x)) = &self.last {
                if *prev == selection {
                    return Ok(x.clone());
                }
            }
        }
        let a = RowMatrix::new(d, rows, prefix.iter().map(|o| o.b).collect())?;
        let sol = sketched_solve(&sketch, &a)?;
        if sol.rank_deficient {
            self.rank_deficient_steps += 1;
        }
        self.resolves += 1;
        self.last = Some((selection, sol.x.clone()));
        Ok(sol.x)
    }
}

pub fn online_regression(
    stream: &Stream<Observation>,
    config: &RegressionConfig,
    seed: u64,
) -> Result<OnlineReport> {
    let mut solver = RegressionSolver::new(config.clone())?;
    let options = RunOptions::new(seed, config.epsilon);
    let (ledger, clip_events) = if config.clip {
        let loss = Clipped::new(AbsoluteResidual);
        let ledger = run_online(&mut solver, stream, &loss, options)?;
        (ledger, loss.clip_events())
    } else {
        (
            run_online(&mut solver, stream, &AbsoluteResidual, options)?,
            0,
        )
    };
    Ok(OnlineReport {
        ledger,
        clip_events,
        clamp_events: 0,
        resolves: solver.resolves,
    })
}
