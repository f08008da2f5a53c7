//! Total-variation distances and average-sensitivity estimation.
//!
//! The average sensitivity of a randomized algorithm `A` on `X` is
//! `(1/n) sum_i TV(A(X), A(X^(i)))`. Outcomes are compared by value, so
//! algorithms that report point identities must report the *original* index
//! of a point, not its position inside the deletion view.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;

use crate::coreset::SensitivityProfile;
use crate::error::{Error, Result};
use crate::rng::{SeedStream, StreamRng};
use crate::sampling::{draw_indices, DrawScheme};

/// Finite distribution over ordered outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution<K: Ord> {
    mass: BTreeMap<K, f64>,
}

impl<K: Ord + Clone> DiscreteDistribution<K> {
    /// Builds from `(outcome, mass)` pairs; repeated outcomes are merged.
    pub fn new(pairs: impl IntoIterator<Item = (K, f64)>) -> Result<Self> {
        let mut mass = BTreeMap::new();
        for (k, p) in pairs {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::param("mass", "must be finite and nonnegative"));
            }
            *mass.entry(k).or_insert(0.0) += p;
        }
        let total: f64 = mass.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param("mass", format!("sums to {total}, not 1")));
        }
        Ok(DiscreteDistribution { mass })
    }

    pub fn point(k: K) -> Self {
        DiscreteDistribution {
            mass: BTreeMap::from([(k, 1.0)]),
        }
    }

    /// Empirical distribution of a sample.
    pub fn empirical<'a>(samples: impl IntoIterator<Item = &'a K>) -> Result<Self>
    where
        K: 'a,
    {
        let mut counts: BTreeMap<K, f64> = BTreeMap::new();
        let mut n = 0.0;
        for s in samples {
            *counts.entry(s.clone()).or_insert(0.0) += 1.0;
            n += 1.0;
        }
        if n == 0.0 {
            return Err(Error::param("samples", "empty"));
        }
        counts.values_mut().for_each(|c| *c /= n);
        Ok(DiscreteDistribution { mass: counts })
    }

    pub fn support(&self) -> impl Iterator<Item = &K> {
        self.mass.keys()
    }

    pub fn mass(&self, k: &K) -> f64 {
        self.mass.get(k).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, f64)> {
        self.mass.iter().map(|(k, p)| (k, *p))
    }
}

/// `(1/2) sum |p - q|` over the union of supports.
pub fn tv_distance<K: Ord + Clone>(
    p: &DiscreteDistribution<K>,
    q: &DiscreteDistribution<K>,
) -> f64 {
    let keys: BTreeSet<&K> = p.support().chain(q.support()).collect();
    let s: f64 = keys
        .into_iter()
        .map(|k| (p.mass(k) - q.mass(k)).abs())
        .sum();
    (0.5 * s).clamp(0.0, 1.0)
}

/// Exact TV between `Uniform[b, (1+eps) b]` and `Uniform[b2, (1+eps) b2]`.
pub fn uniform_interval_tv(b: f64, b2: f64, epsilon: f64) -> Result<f64> {
    if !(b > 0.0 && b2 > 0.0) {
        return Err(Error::param("b", "interval bases must be positive"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    let (lo, hi) = if b <= b2 { (b, b2) } else { (b2, b) };
    // the wider interval starts at `hi` and has the smaller density
    let overlap = ((1.0 + epsilon) * lo - hi).max(0.0) / (epsilon * hi);
    Ok((1.0 - overlap).clamp(0.0, 1.0))
}

/// Mixture of point masses and uniform densities, keyed by a discrete label.
///
/// An atom with `interval: Some((lo, hi))` spreads its mass uniformly over
/// `[lo, hi]`; atoms with `None` are point masses at the label.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseDistribution<K: Ord> {
    atoms: Vec<Atom<K>>,
}

/// `(label, mass, interval)`.
pub type Atom<K> = (K, f64, Option<(f64, f64)>);

impl<K: Ord + Clone> PiecewiseDistribution<K> {
    pub fn new(atoms: Vec<Atom<K>>) -> Result<Self> {
        for (_, m, iv) in &atoms {
            if !(*m >= 0.0) {
                return Err(Error::param("mass", "negative"));
            }
            if let Some((lo, hi)) = iv {
                if !(hi > lo) {
                    return Err(Error::param("interval", "empty"));
                }
            }
        }
        Ok(PiecewiseDistribution { atoms })
    }
}

pub fn tv_piecewise<K: Ord + Clone>(
    p: &PiecewiseDistribution<K>,
    q: &PiecewiseDistribution<K>,
) -> f64 {
    // per label: discrete part and list of (lo, hi, density) for each side
    type Parts = (f64, Vec<(f64, f64, f64)>);
    let mut by_key: BTreeMap<K, [Parts; 2]> = BTreeMap::new();
    for (side, dist) in [p, q].into_iter().enumerate() {
        for (k, m, iv) in &dist.atoms {
            let entry = by_key.entry(k.clone()).or_default();
            match iv {
                None => entry[side].0 += m,
                Some((lo, hi)) => entry[side].1.push((*lo, *hi, m / (hi - lo))),
            }
        }
    }
    let mut total = 0.0;
    for parts in by_key.values() {
        total += (parts[0].0 - parts[1].0).abs();
        let mut cuts: Vec<f64> = parts
            .iter()
            .flat_map(|p| p.1.iter().flat_map(|&(lo, hi, _)| [lo, hi]))
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let dens = |side: &Parts| -> f64 {
                side.1
                    .iter()
                    .filter(|(lo, hi, _)| *lo <= mid && mid < *hi)
                    .map(|(_, _, d)| d)
                    .sum()
            };
            total += (dens(&parts[0]) - dens(&parts[1])).abs() * (w[1] - w[0]);
        }
    }
    (0.5 * total).clamp(0.0, 1.0)
}

/// A randomized procedure whose output can be compared across inputs.
///
/// `data` is the (possibly reduced) input and `ids[j]` the original index of
/// `data[j]`.
pub trait RandomizedAlgorithm<X> {
    type Outcome: Ord + Clone + Hash;

    /// Exact outcome law, for algorithms small enough to enumerate.
    fn distribution(
        &self,
        _data: &[X],
        _ids: &[usize],
    ) -> Result<DiscreteDistribution<Self::Outcome>> {
        Err(Error::NotEnumerable("no closed-form outcome law".into()))
    }

    fn sample(&self, data: &[X], ids: &[usize], rng: &mut StreamRng) -> Result<Self::Outcome>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimationMode {
    Exhaustive,
    MonteCarlo { trials: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityEstimate {
    pub value: f64,
    /// Additive error scale; zero for exhaustive estimates.
    pub error_bar: f64,
}

pub const MAX_EXHAUSTIVE_N: usize = 8;
pub const MIN_TRIALS: usize = 100;

pub fn estimate_average_sensitivity<X, A>(
    algorithm: &A,
    data: &[X],
    mode: EstimationMode,
    seed: u64,
) -> Result<SensitivityEstimate>
where
    X: Clone,
    A: RandomizedAlgorithm<X>,
{
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyStream);
    }
    let ids: Vec<usize> = (0..n).collect();
    let views = (0..n).map(|i| {
        let mut d = data.to_vec();
        d.remove(i);
        let mut v = ids.clone();
        v.remove(i);
        (d, v)
    });
    match mode {
        EstimationMode::Exhaustive => {
            if n > MAX_EXHAUSTIVE_N {
                return Err(Error::NotEnumerable(format!(
                    "n = {n} exceeds {MAX_EXHAUSTIVE_N}"
                )));
            }
            let full = algorithm.distribution(data, &ids)?;
            let mut acc = 0.0;
            for (d, v) in views {
                acc += tv_distance(&full, &algorithm.distribution(&d, &v)?);
            }
            Ok(SensitivityEstimate {
                value: acc / n as f64,
                error_bar: 0.0,
            })
        }
        EstimationMode::MonteCarlo { trials } => {
            if trials < MIN_TRIALS {
                return Err(Error::InsufficientTrials {
                    trials,
                    min: MIN_TRIALS,
                });
            }
            let root = SeedStream::new(seed).child("avg-sensitivity", 0);
            let run =
                |d: &[X], v: &[usize], slot: u64| -> Result<DiscreteDistribution<A::Outcome>> {
                    let stream = root.child("view", slot);
                    let outs = (0..trials)
                        .map(|t| algorithm.sample(d, v, &mut stream.child("trial", t as u64).rng()))
                        .collect::<Result<Vec<_>>>()?;
                    DiscreteDistribution::empirical(outs.iter())
                };
            let full = run(data, &ids, 0)?;
            let (mut acc, mut bar) = (0.0, 0.0);
            for (i, (d, v)) in views.enumerate() {
                let sub = run(&d, &v, i as u64 + 1)?;
                let support: BTreeSet<&A::Outcome> = full.support().chain(sub.support()).collect();
                bar += (support.len() as f64 / trials as f64).sqrt();
                acc += tv_distance(&full, &sub);
            }
            Ok(SensitivityEstimate {
                value: acc / n as f64,
                error_bar: bar / n as f64,
            })
        }
    }
}

/// Always returns the same outcome.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstantAlgorithm;

impl<X> RandomizedAlgorithm<X> for ConstantAlgorithm {
    type Outcome = u8;

    fn distribution(&self, _: &[X], _: &[usize]) -> Result<DiscreteDistribution<u8>> {
        Ok(DiscreteDistribution::point(0))
    }

    fn sample(&self, _: &[X], _: &[usize], _: &mut StreamRng) -> Result<u8> {
        Ok(0)
    }
}

/// Importance-sampling index selection: `m` draws from `sigma / sum(sigma)`,
/// summarized by the sorted multiset of original indices drawn.
pub struct SelectionSampler<F> {
    pub m: usize,
    pub sensitivities: F,
}

impl<F> SelectionSampler<F> {
    pub fn new(m: usize, sensitivities: F) -> Self {
        SelectionSampler { m, sensitivities }
    }
}

/// Uniform sensitivities; with `m = 1` this picks one point uniformly.
pub fn uniform_sensitivities<X>(data: &[X]) -> Vec<f64> {
    vec![1.0; data.len()]
}

impl<X, F> RandomizedAlgorithm<X> for SelectionSampler<F>
where
    F: Fn(&[X]) -> Vec<f64>,
{
    type Outcome = Vec<usize>;

    fn distribution(&self, data: &[X], ids: &[usize]) -> Result<DiscreteDistribution<Vec<usize>>> {
        let profile = SensitivityProfile::new((self.sensitivities)(data))?;
        DiscreteDistribution::new(multinomial_multisets(profile.probs(), self.m, ids))
    }

    fn sample(&self, data: &[X], ids: &[usize], rng: &mut StreamRng) -> Result<Vec<usize>> {
        use rand::Rng;
        let profile = SensitivityProfile::new((self.sensitivities)(data))?;
        let scheme = DrawScheme::Independent(SeedStream::new(rng.random()));
        let mut out: Vec<usize> = draw_indices(profile.probs(), self.m, &scheme)?
            .into_iter()
            .map(|d| ids[d.index])
            .collect();
        out.sort_unstable();
        Ok(out)
    }
}

/// All multisets of size `m` over `probs`, with multinomial probabilities.
fn multinomial_multisets(probs: &[f64], m: usize, ids: &[usize]) -> Vec<(Vec<usize>, f64)> {
    fn rec(
        probs: &[f64],
        ids: &[usize],
        start: usize,
        left: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, f64)>,
        log_fact: &[f64],
    ) {
        if left == 0 {
            let mut counts: HashMap<usize, usize> = HashMap::new();
            for &j in cur.iter() {
                *counts.entry(j).or_default() += 1;
            }
            let mut logp = log_fact[cur.len()];
            for (&j, &c) in &counts {
                logp += c as f64 * probs[j].ln() - log_fact[c];
            }
            out.push((cur.iter().map(|&j| ids[j]).collect(), logp.exp()));
            return;
        }
        for j in start..probs.len() {
            if probs[j] == 0.0 {
                continue;
            }
            cur.push(j);
            rec(probs, ids, j, left - 1, cur, out, log_fact);
            cur.pop();
        }
    }
    let log_fact: Vec<f64> = (0..=m)
        .scan(0.0, |acc, k| {
            if k > 0 {
                *acc += (k as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let mut out = Vec::new();
    rec(
        probs,
        ids,
        0,
        m,
        &mut Vec::with_capacity(m),
        &mut out,
        &log_fact,
    );
    // renormalize away rounding from the log-space products
    let s: f64 = out.iter().map(|(_, p)| p).sum();
    out.iter_mut().for_each(|(_, p)| *p /= s);
    out
}

/// Exact average sensitivity of single-draw sensitivity sampling when the
/// output includes the perturbed probability `p~ ~ Uniform[p, (1+eps/2) p]`.
///
/// The reported weight `1/p~` is a bijection of `p~`, so the TV is computed
/// on `p~` directly.
pub fn single_draw_weighted_sensitivity<X, F>(
    data: &[X],
    sensitivities: F,
    epsilon: f64,
) -> Result<f64>
where
    X: Clone,
    F: Fn(&[X]) -> Vec<f64>,
{
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyStream);
    }
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::NotEnumerable(format!(
            "n = {n} exceeds {MAX_EXHAUSTIVE_N}"
        )));
    }
    let law = |d: &[X], ids: &[usize]| -> Result<PiecewiseDistribution<usize>> {
        let profile = SensitivityProfile::new(sensitivities(d))?;
        PiecewiseDistribution::new(
            profile
                .probs()
                .iter()
                .zip(ids)
                .filter(|(p, _)| **p > 0.0)
                .map(|(&p, &id)| (id, p, Some((p, (1.0 + 0.5 * epsilon) * p))))
                .collect(),
        )
    };
    let ids: Vec<usize> = (0..n).collect();
    let full = law(data, &ids)?;
    let mut acc = 0.0;
    for i in 0..n {
        let mut d = data.to_vec();
        d.remove(i);
        let mut v = ids.clone();
        v.remove(i);
        acc += tv_piecewise(&full, &law(&d, &v)?);
    }
    Ok(acc / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tv_basics() {
        let p = DiscreteDistribution::new([(0, 0.5), (1, 0.5)]).unwrap();
        let q = DiscreteDistribution::new([(0, 1.0)]).unwrap();
        assert_eq!(tv_distance(&p, &p), 0.0);
        assert!((tv_distance(&p, &q) - 0.5).abs() < 1e-15);
        let r = DiscreteDistribution::new([(5, 1.0)]).unwrap();
        assert_eq!(tv_distance(&q, &r), 1.0);
        assert!(DiscreteDistribution::new([(0, 0.4)]).is_err());
    }

    #[test]
    fn uniform_interval_examples() {
        assert_eq!(uniform_interval_tv(1.0, 1.0, 0.3).unwrap(), 0.0);
        assert_eq!(uniform_interval_tv(1.0, 2.0, 0.5).unwrap(), 1.0);
        let v = uniform_interval_tv(1.0, 1.1, 0.5).unwrap();
        assert!((v - 0.2727).abs() < 1e-4, "{v}");
        assert!(v <= 1.5 / 0.5 * 0.1);
        assert!(uniform_interval_tv(0.0, 1.0, 0.5).is_err());
        assert!(uniform_interval_tv(1.0, -1.0, 0.5).is_err());
    }

    #[test]
    fn piecewise_matches_uniform_interval() {
        let a = PiecewiseDistribution::new(vec![(0, 1.0, Some((1.0, 1.5)))]).unwrap();
        let b = PiecewiseDistribution::new(vec![(0, 1.0, Some((1.1, 1.65)))]).unwrap();
        let exact = uniform_interval_tv(1.0, 1.1, 0.5).unwrap();
        assert!((tv_piecewise(&a, &b) - exact).abs() < 1e-12);
    }

    #[test]
    fn constant_algorithm_is_insensitive() {
        let data = [1.0, 2.0, 3.0];
        let ex =
            estimate_average_sensitivity(&ConstantAlgorithm, &data, EstimationMode::Exhaustive, 0)
                .unwrap();
        assert_eq!(ex.value, 0.0);
        let mc = estimate_average_sensitivity(
            &ConstantAlgorithm,
            &data,
            EstimationMode::MonteCarlo { trials: 100 },
            0,
        )
        .unwrap();
        assert_eq!(mc.value, 0.0);
    }

    #[test]
    fn too_few_trials() {
        let err = estimate_average_sensitivity(
            &ConstantAlgorithm,
            &[1.0],
            EstimationMode::MonteCarlo { trials: 99 },
            0,
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::InsufficientTrials {
                trials: 99,
                min: 100
            }
        );
    }

    #[test]
    fn exhaustive_rejects_large_inputs() {
        let data = vec![0.0; 9];
        assert!(matches!(
            estimate_average_sensitivity(&ConstantAlgorithm, &data, EstimationMode::Exhaustive, 0),
            Err(Error::NotEnumerable(_))
        ));
    }

    #[test]
    fn multisets_cover_the_multinomial() {
        let out = multinomial_multisets(&[0.2, 0.3, 0.5], 3, &[0, 1, 2]);
        // C(3 + 3 - 1, 3)
        assert_eq!(out.len(), 10);
        let p_all_two = out.iter().find(|(k, _)| k == &vec![2, 2, 2]).unwrap().1;
        assert!((p_all_two - 0.125).abs() < 1e-12);
        let p_mixed = out.iter().find(|(k, _)| k == &vec![0, 1, 2]).unwrap().1;
        assert!((p_mixed - 6.0 * 0.2 * 0.3 * 0.5).abs() < 1e-12);
    }
}
