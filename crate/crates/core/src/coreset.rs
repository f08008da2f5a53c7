//! Generic sensitivity sampling.
//!
//! A point is drawn with probability `p(x) = sigma(x) / sum(sigma)`; each draw
//! adds `1 / (m * p~)` to the point's weight, where `p~` is uniform on
//! `[p(x), (1 + eps/2) p(x)]`. The perturbation is what keeps the output
//! distribution stable when a single point is deleted.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::online::LossModel;
use crate::sampling::{draw_indices, DrawScheme};

/// Per-point sensitivities and the sampling law they induce.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityProfile {
    sigma: Vec<f64>,
    total: f64,
    probs: Vec<f64>,
}

impl SensitivityProfile {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::param("sigma", "must be finite and nonnegative"));
        }
        let total: f64 = sigma.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateSensitivities);
        }
        let probs = sigma.iter().map(|s| s / total).collect();
        Ok(SensitivityProfile {
            sigma,
            total,
            probs,
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        SensitivityProfile::new(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// How each draw contributes to the weight of the drawn point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WeightNormalization {
    /// `1 / (m p~)`: the weighted loss estimates the full loss.
    #[default]
    PerDraw,
    /// `1 / p~` exactly as printed; the weighted loss estimates `m` times the full loss.
    Verbatim,
}

/// Indices into a dataset with strictly positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedCoreset {
    pub entries: BTreeMap<usize, f64>,
    pub m: usize,
    pub epsilon: f64,
}

impl WeightedCoreset {
    /// Unit weight on every index in `0..n`.
    pub fn identity(n: usize) -> Self {
        WeightedCoreset {
            entries: (0..n).map(|i| (i, 1.0)).collect(),
            m: n,
            epsilon: 0.0,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::param("epsilon", "must lie in (0, 1)"))
    }
}

pub fn sensitivity_sample(
    profile: &SensitivityProfile,
    m: usize,
    epsilon: f64,
    scheme: &DrawScheme,
    normalization: WeightNormalization,
) -> Result<WeightedCoreset> {
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    check_epsilon(epsilon)?;
    let draws = draw_indices(profile.sigma(), m, scheme)?;
    let scale = match normalization {
        WeightNormalization::PerDraw => m as f64,
        WeightNormalization::Verbatim => 1.0,
    };
    let mut entries = BTreeMap::new();
    for d in draws {
        let p = profile.probs()[d.index];
        let perturbed = p * (1.0 + 0.5 * epsilon * d.jitter);
        *entries.entry(d.index).or_insert(0.0) += 1.0 / (scale * perturbed);
    }
    Ok(WeightedCoreset {
        entries,
        m,
        epsilon,
    })
}

/// `sum_{y in coreset} w(y) * l(theta, y)`.
pub fn coreset_loss<P, X, L>(
    coreset: &WeightedCoreset,
    data: &[X],
    theta: &P,
    loss: &L,
) -> Result<f64>
where
    L: LossModel<P, X>,
{
    let mut total = 0.0;
    for (&i, &w) in &coreset.entries {
        let x = data.get(i).ok_or(Error::DanglingIndex {
            index: i,
            len: data.len(),
        })?;
        total += w * loss.evaluate(theta, x);
    }
    Ok(total)
}

/// `sup_theta l(theta, x) / l(theta, X)` with the sup taken over a finite
/// candidate set. Candidates with zero aggregate loss are skipped.
pub fn grid_sensitivities<P, X, L>(loss: &L, data: &[X], candidates: &[P]) -> Vec<f64>
where
    L: LossModel<P, X>,
{
    let mut sigma = vec![0.0f64; data.len()];
    for theta in candidates {
        let per: Vec<f64> = data.iter().map(|x| loss.evaluate(theta, x)).collect();
        let total: f64 = per.iter().sum();
        if total <= 0.0 {
            continue;
        }
        for (s, v) in sigma.iter_mut().zip(&per) {
            *s = s.max(v / total);
        }
    }
    sigma
}

/// How sensitivities react to single-point deletions.
#[derive(Clone, Debug, PartialEq)]
pub struct DeletionStability {
    /// Pairs `(i, x)` with `sigma_{X^(i)}(x) < sigma_X(x)` beyond rounding.
    pub monotonicity_violations: usize,
    /// `sum_i |total(X) - total(X^(i))|`.
    pub total_change: f64,
    pub total: f64,
    /// `sum_i sum_{x in X^(i)} |p_X(x) - p_{X^(i)}(x)|`.
    pub probability_change: f64,
}

pub fn deletion_stability<P, X, L>(
    loss: &L,
    data: &[X],
    candidates: &[P],
) -> Result<DeletionStability>
where
    X: Clone,
    L: LossModel<P, X>,
{
    let full = grid_sensitivities(loss, data, candidates);
    let total: f64 = full.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSensitivities);
    }
    let mut violations = 0;
    let mut total_change = 0.0;
    let mut probability_change = 0.0;
    for i in 0..data.len() {
        let mut reduced = data.to_vec();
        reduced.remove(i);
        let sub = grid_sensitivities(loss, &reduced, candidates);
        let sub_total: f64 = sub.iter().sum();
        total_change += (total - sub_total).abs();
        for (j, s) in sub.iter().enumerate() {
            let orig = if j < i { j } else { j + 1 };
            if *s < full[orig] - 1e-12 * full[orig].max(1.0) {
                violations += 1;
            }
            let q = if sub_total > 0.0 { s / sub_total } else { 0.0 };
            probability_change += (full[orig] / total - q).abs();
        }
    }
    Ok(DeletionStability {
        monotonicity_violations: violations,
        total_change,
        total,
        probability_change,
    })
}
