//! (k, z)-clustering: losses, D^z seeding, the two-stage coreset, a weighted
//! offline solver and the online clustering learner.
//!
//! Coreset construction, given bicriteria centers `C*` from D^z seeding:
//!
//! 1. stage-1 sensitivities `sigma1(x) ~ l(x)/sum(l) + 1/|X_c(x)|`, sampled
//!    `N1` times with perturbed weights `u`;
//! 2. stage-2 sensitivities `sigma2(x) = u(x) l(x) / sum(u l)` over the stage-1
//!    sample, sampled `N2` times with perturbed weights `w`;
//! 3. each center `c` gets weight `(1 + 10 eps) U_c - W_c`, where `U_c` and
//!    `W_c` are the stage-1 and stage-2 masses of its cluster.

use crate::error::{Error, Result};
use crate::linalg::dist_sq;
use crate::online::{
    run_online, Clipped, LossModel, OnlineReport, OnlineSolver, Parameter, RunOptions, StepContext,
    Stream, UpdateMode,
};
use crate::sampling::{draw_indices, DrawScheme};

/// `k` centers in R^d with the distance exponent `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterSet {
    centers: Vec<Vec<f64>>,
    z: f64,
}

impl CenterSet {
    pub fn new(centers: Vec<Vec<f64>>, z: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::param("k", "must be positive"));
        }
        if !(z >= 1.0) || !z.is_finite() {
            return Err(Error::param("z", "must be at least 1"));
        }
        let d = centers[0].len();
        for (index, c) in centers.iter().enumerate() {
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
        Ok(CenterSet { centers, z })
    }

    /// `k` copies of the origin; the parameter used before any data arrives.
    pub fn origin(k: usize, d: usize, z: f64) -> Result<Self> {
        CenterSet::new(vec![vec![0.0; d]; k], z)
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn d(&self) -> usize {
        self.centers[0].len()
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    /// Nearest center (lowest index on ties) and `dist^z` to it.
    pub fn assign(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, c) in self.centers.iter().enumerate() {
            let d2 = dist_sq(c, x);
            if d2 < best.1 {
                best = (j, d2);
            }
        }
        (best.0, power(best.1, self.z))
    }

    /// Unweighted cost over a point set.
    pub fn cost(&self, points: &[Vec<f64>]) -> f64 {
        points.iter().map(|p| self.assign(p).1).sum()
    }

    /// `sum_i w_i * l(x_i)`.
    pub fn weighted_cost(&self, points: &[(Vec<f64>, f64)]) -> f64 {
        points.iter().map(|(p, w)| w * self.assign(p).1).sum()
    }
}

impl Parameter for CenterSet {
    fn coordinates(&self) -> Vec<f64> {
        self.centers.iter().flatten().copied().collect()
    }
}

/// `||x||^z` from the squared distance.
fn power(d2: f64, z: f64) -> f64 {
    if z == 2.0 {
        d2
    } else if z == 1.0 {
        d2.sqrt()
    } else {
        d2.sqrt().powf(z)
    }
}

/// `min_j ||x - z_j||^z`.
pub fn kz_loss(centers: &CenterSet, x: &[f64]) -> Result<f64> {
    if x.len() != centers.d() {
        return Err(Error::DimensionMismatch {
            expected: centers.d(),
            got: x.len(),
        });
    }
    Ok(centers.assign(x).1)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct KzLoss;

impl LossModel<CenterSet, Vec<f64>> for KzLoss {
    fn evaluate(&self, theta: &CenterSet, x: &Vec<f64>) -> f64 {
        theta.assign(x).1
    }
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptyStream)?;
    let d = first.len();
    for (index, p) in points.iter().enumerate() {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
    }
    Ok(d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Seeding {
    pub indices: Vec<usize>,
    pub centers: CenterSet,
}

/// D^z seeding: first center uniform, then proportional to `dist^z` to the
/// centers chosen so far. Falls back to uniform once every distance is zero.
pub fn dz_sampling(points: &[Vec<f64>], k: usize, z: f64, scheme: &DrawScheme) -> Result<Seeding> {
    let weights = vec![1.0; points.len()];
    weighted_dz(points, &weights, k, z, scheme)
}

fn weighted_dz(
    points: &[Vec<f64>],
    weights: &[f64],
    k: usize,
    z: f64,
    scheme: &DrawScheme,
) -> Result<Seeding> {
    check_points(points)?;
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::param("k", format!("must lie in 1..={n}")));
    }
    let mut indices = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; n];
    let uniform: Vec<f64> = weights
        .iter()
        .map(|&w| if w > 0.0 { 1.0 } else { 0.0 })
        .collect();
    let fallback = if uniform.iter().any(|&u| u > 0.0) {
        uniform
    } else {
        vec![1.0; n]
    };
    for j in 0..k {
        let probs: Vec<f64> = if j == 0 {
            weights.to_vec()
        } else {
            nearest
                .iter()
                .zip(weights)
                .map(|(d2, w)| w * power(*d2, z))
                .collect()
        };
        let probs = if probs.iter().any(|&p| p > 0.0) {
            probs
        } else {
            fallback.clone()
        };
        let pick = draw_indices(&probs, 1, &scheme.child("seed", j as u64))?[0].index;
        indices.push(pick);
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(dist_sq(p, &points[pick]));
        }
    }
    let centers = CenterSet::new(indices.iter().map(|&i| points[i].clone()).collect(), z)?;
    Ok(Seeding { indices, centers })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Stage2Sample,
    BicriteriaCenter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoresetPoint {
    pub point: Vec<f64>,
    pub weight: f64,
    pub provenance: Provenance,
    /// Index into the input point set.
    pub source: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringCoreset {
    pub points: Vec<CoresetPoint>,
    /// Clusters whose center weight came out negative.
    pub clamped: usize,
    /// Sorted stage-2 draws followed by the bicriteria center indices.
    pub selection: Vec<usize>,
    pub n1: usize,
    pub n2: usize,
    /// Total perturbed stage-1 weight.
    pub stage1_total: f64,
}

impl ClusteringCoreset {
    pub fn weighted_points(&self) -> Vec<(Vec<f64>, f64)> {
        self.points
            .iter()
            .map(|p| (p.point.clone(), p.weight))
            .collect()
    }

    pub fn loss(&self, centers: &CenterSet) -> f64 {
        self.points
            .iter()
            .map(|p| p.weight * centers.assign(&p.point).1)
            .sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}

/// Knobs for the coreset construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoresetConstants {
    /// Hidden constant in the stage-1 size.
    pub n1: f64,
    /// Hidden constant in the stage-2 size.
    pub n2: f64,
    /// The construction runs with `eps / eps_rescale`.
    pub eps_rescale: f64,
    /// Stage-2 weights as printed (without the stage-1 mass) and plain
    /// clamping of negative center weights.
    pub verbatim_weights: bool,
}

impl Default for CoresetConstants {
    fn default() -> Self {
        CoresetConstants {
            n1: 1.0,
            n2: 1.0,
            eps_rescale: 40.0,
            verbatim_weights: false,
        }
    }
}

/// `c (168 z)^{10 z} eps^{-5z-15} k^5 ln(k / delta)`, capped at `n`.
pub fn stage1_size(n: usize, k: usize, z: f64, epsilon: f64, delta: f64, constant: f64) -> usize {
    let k = k as f64;
    let raw = constant
        * (168.0 * z).powf(10.0 * z)
        * epsilon.powf(-5.0 * z - 15.0)
        * k.powi(5)
        * (k / delta).ln();
    cap(raw, n)
}

/// `c eps^{-2z-2} k ln(k) ln(k / (eps delta))`, capped at `n`.
pub fn stage2_size(n: usize, k: usize, z: f64, epsilon: f64, delta: f64, constant: f64) -> usize {
    let k = k as f64;
    let raw = constant * epsilon.powf(-2.0 * z - 2.0) * k * k.ln() * (k / (epsilon * delta)).ln();
    cap(raw, n)
}

fn cap(raw: f64, n: usize) -> usize {
    if !(raw < n as f64) {
        n
    } else {
        (raw.ceil() as usize).max(1)
    }
}

pub fn two_stage_coreset(
    points: &[Vec<f64>],
    k: usize,
    z: f64,
    epsilon: f64,
    delta: f64,
    scheme: &DrawScheme,
    constants: &CoresetConstants,
) -> Result<ClusteringCoreset> {
    let n = points.len();
    check_points(points)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", "must lie in (0, 1)"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", "must lie in (0, 1)"));
    }
    if !(constants.eps_rescale >= 1.0) {
        return Err(Error::param("eps_rescale", "must be at least 1"));
    }
    if k == 0 || k > n {
        return Err(Error::param("k", format!("must lie in 1..={n}")));
    }
    let eps = epsilon / constants.eps_rescale;
    let seeding = dz_sampling(points, k, z, &scheme.child("bicriteria", 0))?;
    let assigned: Vec<(usize, f64)> = points.iter().map(|p| seeding.centers.assign(p)).collect();
    let mut sizes = vec![0usize; k];
    for &(c, _) in &assigned {
        sizes[c] += 1;
    }
    let cost: f64 = assigned.iter().map(|a| a.1).sum();
    let lead = 2f64.powf(2.0 * z + 2.0) * eps * eps;
    let sigma1: Vec<f64> = assigned
        .iter()
        .map(|&(c, l)| {
            let ratio = if cost > 0.0 { l / cost } else { 0.0 };
            lead * (ratio + 1.0 / sizes[c] as f64)
        })
        .collect();
    let total1: f64 = sigma1.iter().sum();

    let n1 = stage1_size(n, k, z, eps, delta, constants.n1);
    let mut u = vec![0.0; n];
    for d in draw_indices(&sigma1, n1, &scheme.child("stage1", 0))? {
        let q = total1 / (n1 as f64 * sigma1[d.index]);
        u[d.index] += q * (1.0 + eps * d.jitter);
    }
    let support: Vec<usize> = (0..n).filter(|&i| u[i] > 0.0).collect();
    let mut stage1_mass = vec![0.0; k];
    for &i in &support {
        stage1_mass[assigned[i].0] += u[i];
    }

    let n2 = stage2_size(n, k, z, eps, delta, constants.n2);
    let mut w = vec![0.0; n];
    let mut drawn = Vec::new();
    let mass: Vec<f64> = support.iter().map(|&i| u[i] * assigned[i].1).collect();
    let total2: f64 = mass.iter().sum();
    if total2 > 0.0 {
        for d in draw_indices(&mass, n2, &scheme.child("stage2", 0))? {
            let i = support[d.index];
            let sigma2 = mass[d.index] / total2;
            let base = if constants.verbatim_weights {
                1.0 / (n2 as f64 * sigma2)
            } else {
                u[i] / (n2 as f64 * sigma2)
            };
            w[i] += base * (1.0 + eps * d.jitter);
            drawn.push(i);
        }
    }

    let mut stage2_mass = vec![0.0; k];
    for i in 0..n {
        if w[i] > 0.0 {
            stage2_mass[assigned[i].0] += w[i];
        }
    }
    let slack = 1.0 + 10.0 * eps;
    let mut clamped = 0;
    let mut center_weights = vec![0.0; k];
    for c in 0..k {
        let cw = slack * stage1_mass[c] - stage2_mass[c];
        if cw < 0.0 {
            clamped += 1;
            if !constants.verbatim_weights {
                // shrink the cluster's samples to the budget instead of
                // letting them overshoot the stage-1 mass
                let scale = slack * stage1_mass[c] / stage2_mass[c];
                for i in 0..n {
                    if w[i] > 0.0 && assigned[i].0 == c {
                        w[i] *= scale;
                    }
                }
            }
        } else {
            center_weights[c] = cw;
        }
    }

    let mut out: Vec<CoresetPoint> = (0..n)
        .filter(|&i| w[i] > 0.0)
        .map(|i| CoresetPoint {
            point: points[i].clone(),
            weight: w[i],
            provenance: Provenance::Stage2Sample,
            source: i,
        })
        .collect();
    for (c, &i) in seeding.indices.iter().enumerate() {
        out.push(CoresetPoint {
            point: points[i].clone(),
            weight: center_weights[c],
            provenance: Provenance::BicriteriaCenter,
            source: i,
        });
    }
    drawn.sort_unstable();
    drawn.extend(&seeding.indices);
    Ok(ClusteringCoreset {
        points: out,
        clamped,
        selection: drawn,
        n1,
        n2,
        stage1_total: u.iter().sum(),
    })
}

/// Best of `restarts` weighted runs: D^z seeding, then Lloyd (z = 2) or
/// single-swap local search over the input points (z != 2).
pub fn weighted_kz_solve(
    points: &[(Vec<f64>, f64)],
    k: usize,
    z: f64,
    restarts: usize,
    scheme: &DrawScheme,
) -> Result<CenterSet> {
    if points.is_empty() {
        return Err(Error::EmptyStream);
    }
    if k == 0 {
        return Err(Error::param("k", "must be positive"));
    }
    if !(z >= 1.0) {
        return Err(Error::param("z", "must be at least 1"));
    }
    if points.iter().any(|(_, w)| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::param("weights", "must be finite and nonnegative"));
    }
    let coords: Vec<Vec<f64>> = points.iter().map(|(p, _)| p.clone()).collect();
    check_points(&coords)?;
    let weights: Vec<f64> = points.iter().map(|(_, w)| *w).collect();

    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for (p, w) in points {
        if *w > 0.0 && !distinct.contains(&p) {
            distinct.push(p);
        }
    }
    if distinct.is_empty() {
        distinct.push(&points[0].0);
    }
    if k >= distinct.len() {
        if k > distinct.len() {
            log::warn!(
                "k = {k} exceeds {} distinct weighted points; padding with duplicates",
                distinct.len()
            );
        }
        let mut centers: Vec<Vec<f64>> = distinct.iter().map(|p| (*p).clone()).collect();
        while centers.len() < k {
            centers.push(centers[0].clone());
        }
        return CenterSet::new(centers, z);
    }

    let mut best: Option<(f64, CenterSet)> = None;
    for r in 0..restarts.max(1) {
        let seeded =
            weighted_dz(&coords, &weights, k, z, &scheme.child("restart", r as u64))?.centers;
        let refined = if z == 2.0 {
            lloyd(points, seeded)
        } else {
            local_search(points, seeded)
        };
        let cost = refined.weighted_cost(points);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, refined));
        }
    }
    Ok(best.map(|b| b.1).expect("at least one restart"))
}

const LLOYD_ITERS: usize = 100;
const SWAP_PASSES: usize = 20;

fn lloyd(points: &[(Vec<f64>, f64)], mut centers: CenterSet) -> CenterSet {
    let (k, d) = (centers.k(), centers.d());
    let mut labels: Vec<usize> = vec![usize::MAX; points.len()];
    for _ in 0..LLOYD_ITERS {
        let mut moved = false;
        for (l, (p, _)) in labels.iter_mut().zip(points) {
            let c = centers.assign(p).0;
            if *l != c {
                *l = c;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut mass = vec![0.0; k];
        for (&l, (p, w)) in labels.iter().zip(points) {
            mass[l] += w;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += w * v;
            }
        }
        for j in 0..k {
            // empty clusters keep their previous center
            if mass[j] > 0.0 {
                centers.centers[j] = sums[j].iter().map(|s| s / mass[j]).collect();
            }
        }
    }
    centers
}

fn local_search(points: &[(Vec<f64>, f64)], mut centers: CenterSet) -> CenterSet {
    let mut cost = centers.weighted_cost(points);
    for _ in 0..SWAP_PASSES {
        let mut improved = false;
        for j in 0..centers.k() {
            for (p, w) in points {
                if *w <= 0.0 {
                    continue;
                }
                let old = std::mem::replace(&mut centers.centers[j], p.clone());
                let c = centers.weighted_cost(points);
                if c < cost * (1.0 - 1e-12) {
                    cost = c;
                    improved = true;
                } else {
                    centers.centers[j] = old;
                }
            }
        }
        if !improved {
            break;
        }
    }
    centers
}

/// Multi-restart estimate of the optimal unweighted cost (an upper bound).
pub fn kz_opt(
    points: &[Vec<f64>],
    k: usize,
    z: f64,
    restarts: usize,
    scheme: &DrawScheme,
) -> Result<(CenterSet, f64)> {
    let weighted: Vec<(Vec<f64>, f64)> = points.iter().map(|p| (p.clone(), 1.0)).collect();
    let centers = weighted_kz_solve(&weighted, k, z, restarts, scheme)?;
    let cost = centers.cost(points);
    Ok((centers, cost))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringConfig {
    pub d: usize,
    pub k: usize,
    pub z: f64,
    pub epsilon: f64,
    pub mode: UpdateMode,
    pub constants: CoresetConstants,
    pub restarts: usize,
    pub clip: bool,
}

impl ClusteringConfig {
    pub fn new(d: usize, k: usize, z: f64, epsilon: f64) -> Self {
        ClusteringConfig {
            d,
            k,
            z,
            epsilon,
            mode: UpdateMode::Fresh,
            constants: CoresetConstants::default(),
            restarts: 3,
            clip: false,
        }
    }
}

pub struct ClusteringSolver {
    config: ClusteringConfig,
    last: Option<(Vec<usize>, CenterSet)>,
    pub resolves: usize,
    pub clamp_events: u64,
}

impl ClusteringSolver {
    pub fn new(config: ClusteringConfig) -> Result<Self> {
        if config.k == 0 || config.d == 0 {
            return Err(Error::param("k", "k and d must be positive"));
        }
        if !(config.epsilon > 0.0 && config.epsilon < 1.0) {
            return Err(Error::param("epsilon", "must lie in (0, 1)"));
        }
        if !(config.z >= 1.0) {
            return Err(Error::param("z", "must be at least 1"));
        }
        Ok(ClusteringSolver {
            config,
            last: None,
            resolves: 0,
            clamp_events: 0,
        })
    }
}

impl OnlineSolver<Vec<f64>> for ClusteringSolver {
    type Param = CenterSet;

    fn solve(&mut self, prefix: &[Vec<f64>], ctx: &StepContext) -> Result<CenterSet> {
        let ClusteringConfig {
            d, k, z, epsilon, ..
        } = self.config;
        if prefix.is_empty() {
            return CenterSet::origin(k, d, z);
        }
        if check_points(prefix)? != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: prefix[0].len(),
            });
        }
        if prefix.len() <= k {
            let mut centers = prefix.to_vec();
            while centers.len() < k {
                centers.push(prefix[0].clone());
            }
            return CenterSet::new(centers, z);
        }
        let inner = epsilon / 3.0;
        let delta = epsilon / (10.0 * ctx.horizon as f64);
        let scheme = match self.config.mode {
            UpdateMode::Fresh => DrawScheme::Independent(ctx.step_stream()),
            UpdateMode::Lazy => DrawScheme::Coupled {
                stream: ctx.shared_stream(),
                universe: ctx.horizon,
            },
        };
        let coreset =
            two_stage_coreset(prefix, k, z, inner, delta, &scheme, &self.config.constants)?;
        self.clamp_events += coreset.clamped as u64;
        if self.config.mode == UpdateMode::Lazy {
            if let Some((prev, c)) = &self.last {
                if *prev == coreset.selection {
                    return Ok(c.clone());
                }
            }
        }
        let solve_scheme = DrawScheme::Independent(ctx.step_stream().child("solve", 0));
        let centers = weighted_kz_solve(
            &coreset.weighted_points(),
            k,
            z,
            self.config.restarts,
            &solve_scheme,
        )?;
        self.resolves += 1;
        self.last = Some((coreset.selection, centers.clone()));
        Ok(centers)
    }
}

pub fn online_clustering(
    stream: &Stream<Vec<f64>>,
    config: &ClusteringConfig,
    seed: u64,
) -> Result<OnlineReport> {
    let mut solver = ClusteringSolver::new(config.clone())?;
    let options = RunOptions::new(seed, config.epsilon);
    let (ledger, clip_events) = if config.clip {
        let loss = Clipped::new(KzLoss);
        let ledger = run_online(&mut solver, stream, &loss, options)?;
        (ledger, loss.clip_events())
    } else {
        (run_online(&mut solver, stream, &KzLoss, options)?, 0)
    };
    Ok(OnlineReport {
        ledger,
        clip_events,
        clamp_events: solver.clamp_events,
        resolves: solver.resolves,
    })
}
