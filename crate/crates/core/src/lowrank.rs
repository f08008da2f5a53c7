//! Ridge leverage scores, projection-cost preserving column sampling and the
//! online rank-k approximation learner.
//!
//! The learner receives one column `a_t` per step and must commit to a
//! rank-k orthonormal basis `Z_t` beforehand; it pays `||a_t - Z_t Z_t^T a_t||`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    fix_sign, gram, pinv_values, rank_one_update, spectral_quadratic, sym_eigen_desc, PINV_CUTOFF,
};
use crate::online::{
    run_online, Clipped, LossModel, OnlineReport, OnlineSolver, Parameter, RunOptions, StepContext,
    Stream, UpdateMode,
};
use crate::sampling::{draw_indices, DrawScheme};

/// Columns `a_1, ..., a_t` in R^d.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnMatrix {
    d: usize,
    columns: Vec<Vec<f64>>,
}

impl ColumnMatrix {
    pub fn new(d: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("d", "must be positive"));
        }
        for (index, c) in columns.iter().enumerate() {
            if c.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index });
            }
        }
        Ok(ColumnMatrix { d, columns })
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let columns = m
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect();
        ColumnMatrix::new(m.nrows(), columns)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn t(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.columns.len(), |r, c| self.columns[c][r])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeverageScores {
    pub scores: Vec<f64>,
    /// Set when the matrix is identically zero.
    pub degenerate: bool,
}

impl LeverageScores {
    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }
}

/// `tau_i = a_i^T (A A^T + (||A - A_k||_F^2 / k) I)^+ a_i`.
pub fn ridge_leverage_scores(a: &ColumnMatrix, k: usize) -> Result<LeverageScores> {
    if k == 0 || k > a.d().min(a.t()) {
        return Err(Error::param(
            "k",
            format!("must lie in 1..={}", a.d().min(a.t())),
        ));
    }
    Ok(ridge_scores_from_gram(
        &gram(a.columns(), a.d()),
        a.columns(),
        k,
    ))
}

fn ridge_scores_from_gram(g: &DMatrix<f64>, columns: &[Vec<f64>], k: usize) -> LeverageScores {
    let (values, basis) = sym_eigen_desc(g);
    let top = values.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return LeverageScores {
            scores: vec![0.0; columns.len()],
            degenerate: true,
        };
    }
    // eigenvalues of A A^T are squared singular values; the tail is ||A - A_k||_F^2
    let residual: f64 = values.iter().skip(k).map(|v| v.max(0.0)).sum();
    let ridge = residual / k as f64;
    let shifted: Vec<f64> = values.iter().map(|v| v.max(0.0) + ridge).collect();
    let inv = pinv_values(&shifted);
    let scores = columns
        .iter()
        .map(|c| spectral_quadratic(&basis, &inv, c).clamp(0.0, 1.0))
        .collect();
    LeverageScores {
        scores,
        degenerate: false,
    }
}

/// Rescaled column subset: column `j` equals `weights[j] * a_{source_indices[j]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnSketch {
    pub matrix: DMatrix<f64>,
    pub source_indices: Vec<usize>,
    pub weights: Vec<f64>,
}

/// Column weight scale for sketching.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SketchScaling {
    /// `1 / sqrt(m p_i)`.
    #[default]
    BySampleSize,
    /// `1 / sqrt(t p_i)` with `t` the step index (columns seen + 1), as printed.
    ByStepIndex,
}

pub fn pcp_sample(
    a: &ColumnMatrix,
    k: usize,
    m: usize,
    epsilon: f64,
    scheme: &DrawScheme,
    scaling: SketchScaling,
) -> Result<ColumnSketch> {
    let scores = ridge_leverage_scores(a, k)?;
    sketch_from_scores(
        a.columns(),
        a.d(),
        &scores.scores,
        m,
        epsilon,
        scheme,
        scaling,
    )
}

fn sketch_from_scores(
    columns: &[Vec<f64>],
    d: usize,
    scores: &[f64],
    m: usize,
    epsilon: f64,
    scheme: &DrawScheme,
    scaling: SketchScaling,
) -> Result<ColumnSketch> {
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
    let scale = match scaling {
        SketchScaling::BySampleSize => m as f64,
        SketchScaling::ByStepIndex => (columns.len() + 1) as f64,
    };
    let mut matrix = DMatrix::zeros(d, m);
    let mut source_indices = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    // each draw overwrites its own slot; repeated draws occupy separate slots
    for (slot, draw) in draws.iter().enumerate() {
        let p = scores[draw.index] / total;
        let w = (1.0 + epsilon * draw.jitter) / (scale * p).sqrt();
        for r in 0..d {
            matrix[(r, slot)] = w * columns[draw.index][r];
        }
        source_indices.push(draw.index);
        weights.push(w);
    }
    Ok(ColumnSketch {
        matrix,
        source_indices,
        weights,
    })
}

/// Orthonormal `d x k` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    pub basis: DMatrix<f64>,
}

impl Projector {
    /// The first `k` coordinate directions; used before any data arrives.
    pub fn coordinate(d: usize, k: usize) -> Result<Self> {
        if k == 0 || k > d {
            return Err(Error::param("k", format!("must lie in 1..={d}")));
        }
        Ok(Projector {
            basis: DMatrix::from_fn(d, k, |r, c| if r == c { 1.0 } else { 0.0 }),
        })
    }

    pub fn d(&self) -> usize {
        self.basis.nrows()
    }

    pub fn k(&self) -> usize {
        self.basis.ncols()
    }

    /// `Z Z^T`.
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }
}

impl Parameter for Projector {
    fn coordinates(&self) -> Vec<f64> {
        self.basis.as_slice().to_vec()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopK {
    pub projector: Projector,
    /// Set when `k` exceeded the numerical rank and the basis was completed
    /// with directions from the null space.
    pub padded: bool,
}

pub fn top_k_left_singular(m: &DMatrix<f64>, k: usize) -> Result<TopK> {
    let d = m.nrows();
    if k == 0 || k > d {
        return Err(Error::param("k", format!("must lie in 1..={d}")));
    }
    let (values, vectors) = sym_eigen_desc(&(m * m.transpose()));
    let top = values.first().copied().unwrap_or(0.0);
    let padded = !(top > 0.0) || values[k - 1] <= PINV_CUTOFF * top;
    let mut basis = DMatrix::zeros(d, k);
    for c in 0..k {
        let mut col = vectors.column(c).into_owned();
        fix_sign(&mut col);
        basis.set_column(c, &col);
    }
    Ok(TopK {
        projector: Projector { basis },
        padded,
    })
}

/// `||a - Z Z^T a||`.
pub fn projection_loss(z: &Projector, a: &[f64]) -> Result<f64> {
    if a.len() != z.d() {
        return Err(Error::DimensionMismatch {
            expected: z.d(),
            got: a.len(),
        });
    }
    Ok(residual_norm(z, a))
}

fn residual_norm(z: &Projector, a: &[f64]) -> f64 {
    let v = DVector::from_column_slice(a);
    let coeff = z.basis.transpose() * &v;
    let proj = &z.basis * coeff;
    (v - proj).norm()
}

/// `projection_loss` as a [`LossModel`]; dimensions are trusted.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProjectionLoss;

impl LossModel<Projector, Vec<f64>> for ProjectionLoss {
    fn evaluate(&self, theta: &Projector, x: &Vec<f64>) -> f64 {
        residual_norm(theta, x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowRankConfig {
    pub d: usize,
    pub k: usize,
    pub epsilon: f64,
    pub mode: UpdateMode,
    /// Multiplier on the sample-size expression (hidden constant).
    pub const_m: f64,
    pub scaling: SketchScaling,
    pub clip: bool,
}

impl LowRankConfig {
    pub fn new(d: usize, k: usize, epsilon: f64) -> Self {
        LowRankConfig {
            d,
            k,
            epsilon,
            mode: UpdateMode::Fresh,
            const_m: 1.0,
            scaling: SketchScaling::BySampleSize,
            clip: false,
        }
    }

    /// `ceil(c * eps^-2 * k * ln(k / delta))` with `delta = eps / (10 n)`.
    pub fn sample_size(&self, horizon: usize) -> usize {
        let delta = self.epsilon / (10.0 * horizon as f64);
        let k = self.k as f64;
        (self.const_m * k * (k / delta).ln() / (self.epsilon * self.epsilon))
            .ceil()
            .max(1.0) as usize
    }
}

/// Per-step solver: sketch the prefix, keep its top-k left singular subspace.
pub struct LowRankSolver {
    config: LowRankConfig,
    gram: DMatrix<f64>,
    absorbed: usize,
    last: Option<(Vec<usize>, Projector)>,
    pub resolves: usize,
}

impl LowRankSolver {
    pub fn new(config: LowRankConfig) -> Result<Self> {
        if config.k == 0 || config.k > config.d {
            return Err(Error::param("k", format!("must lie in 1..={}", config.d)));
        }
        if !(config.epsilon > 0.0 && config.epsilon < 1.0) {
            return Err(Error::param("epsilon", "must lie in (0, 1)"));
        }
        Ok(LowRankSolver {
            gram: DMatrix::zeros(config.d, config.d),
            config,
            absorbed: 0,
            last: None,
            resolves: 0,
        })
    }
}

impl OnlineSolver<Vec<f64>> for LowRankSolver {
    type Param = Projector;

    fn solve(&mut self, prefix: &[Vec<f64>], ctx: &StepContext) -> Result<Projector> {
        let (d, k) = (self.config.d, self.config.k);
        for c in &prefix[self.absorbed..] {
            if c.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: c.len(),
                });
            }
            rank_one_update(&mut self.gram, c, 1.0);
        }
        self.absorbed = prefix.len();
        if prefix.is_empty() {
            return Projector::coordinate(d, k);
        }
        if prefix.len() <= k {
            // too few columns to sketch: the exact subspace is already cheap
            let a = ColumnMatrix::new(d, prefix.to_vec())?.to_matrix();
            return Ok(top_k_left_singular(&a, k)?.projector);
        }
        let scores = ridge_scores_from_gram(&self.gram, prefix, k);
        if scores.degenerate {
            return Projector::coordinate(d, k);
        }
        let m = self.config.sample_size(ctx.horizon).min(prefix.len());
        let scheme = match self.config.mode {
            UpdateMode::Fresh => DrawScheme::Independent(ctx.step_stream()),
            UpdateMode::Lazy => DrawScheme::Coupled {
                stream: ctx.shared_stream(),
                universe: ctx.horizon,
            },
        };
        let sketch = sketch_from_scores(
            prefix,
            d,
            &scores.scores,
            m,
            self.config.epsilon,
            &scheme,
            self.config.scaling,
        )?;
        let selection = {
            let mut s = sketch.source_indices.clone();
            s.sort_unstable();
            s
        };
        if self.config.mode == UpdateMode::Lazy {
            if let Some((prev, z)) = &self.last {
                if *prev == selection {
                    return Ok(z.clone());
                }
            }
        }
        let z = top_k_left_singular(&sketch.matrix, k)?.projector;
        self.resolves += 1;
        self.last = Some((selection, z.clone()));
        Ok(z)
    }
}

/// Online low-rank approximation over a column stream.
pub fn online_lowrank(
    stream: &Stream<Vec<f64>>,
    config: &LowRankConfig,
    seed: u64,
) -> Result<OnlineReport> {
    let mut solver = LowRankSolver::new(config.clone())?;
    let options = RunOptions::new(seed, config.epsilon);
    let (ledger, clip_events) = if config.clip {
        let loss = Clipped::new(ProjectionLoss);
        let ledger = run_online(&mut solver, stream, &loss, options)?;
        (ledger, loss.clip_events())
    } else {
        (
            run_online(&mut solver, stream, &ProjectionLoss, options)?,
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

/// Exact optimum: top-k left singular subspace of the full matrix.
pub fn exact_projector(a: &ColumnMatrix, k: usize) -> Result<Projector> {
    Ok(top_k_left_singular(&a.to_matrix(), k)?.projector)
}
