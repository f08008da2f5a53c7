//! Index draws with replacement, plus one auxiliary uniform per draw.
//!
//! Two schemes produce identically distributed draws:
//!
//! * [`DrawScheme::Independent`]: a single generator, alias-free weighted
//!   index sampling. Fast, no relation between calls.
//! * [`DrawScheme::Coupled`]: each draw `j` runs a rejection race on its own
//!   counter-keyed substream: propose `i` uniform over a fixed index universe
//!   and `v` uniform, accept when `v * bound < p_i`. Two calls that share the
//!   stream but see slightly different probability vectors make the same
//!   choice for most draws, which is what lazy re-solving relies on.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SeedStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Draw {
    pub index: usize,
    /// Uniform on `[0, 1)`, used to perturb the weight of this draw.
    pub jitter: f64,
}

#[derive(Clone, Copy, Debug)]
pub enum DrawScheme {
    Independent(SeedStream),
    Coupled { stream: SeedStream, universe: usize },
}

impl DrawScheme {
    /// Child scheme for a sub-task, preserving the coupling mode.
    pub fn child(&self, label: &str, index: u64) -> DrawScheme {
        match *self {
            DrawScheme::Independent(s) => DrawScheme::Independent(s.child(label, index)),
            DrawScheme::Coupled { stream, universe } => DrawScheme::Coupled {
                stream: stream.child(label, index),
                universe,
            },
        }
    }

    pub fn stream(&self) -> SeedStream {
        match *self {
            DrawScheme::Independent(s) => s,
            DrawScheme::Coupled { stream, .. } => stream,
        }
    }
}

/// Normalize nonnegative weights into probabilities.
pub fn normalize(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::param("weights", "must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSensitivities);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Draw `m` indices with probability proportional to `weights`.
pub fn draw_indices(weights: &[f64], m: usize, scheme: &DrawScheme) -> Result<Vec<Draw>> {
    let probs = normalize(weights)?;
    match *scheme {
        DrawScheme::Independent(stream) => {
            let dist =
                WeightedIndex::new(&probs).map_err(|e| Error::param("weights", e.to_string()))?;
            let mut rng = stream.rng();
            Ok((0..m)
                .map(|_| {
                    let index = dist.sample(&mut rng);
                    Draw {
                        index,
                        jitter: rng.random::<f64>(),
                    }
                })
                .collect())
        }
        DrawScheme::Coupled { stream, universe } => {
            if universe < probs.len() {
                return Err(Error::param(
                    "universe",
                    format!("{universe} smaller than support size {}", probs.len()),
                ));
            }
            let pmax = probs.iter().cloned().fold(0.0, f64::max);
            // power-of-two envelope so the acceptance test only moves when
            // the largest probability crosses a binade
            let bound = 2f64.powi(pmax.log2().ceil() as i32);
            Ok((0..m)
                .map(|j| race(&probs, bound, universe, stream.child("draw", j as u64)))
                .collect())
        }
    }
}

fn race(probs: &[f64], bound: f64, universe: usize, stream: SeedStream) -> Draw {
    let mut rng = stream.rng();
    loop {
        let i = rng.random_range(0..universe);
        let v: f64 = rng.random();
        if i < probs.len() && v * bound < probs[i] {
            return Draw {
                index: i,
                jitter: rng.random::<f64>(),
            };
        }
    }
}

/// Sorted multiset of drawn indices.
pub fn index_multiset(draws: &[Draw]) -> Vec<usize> {
    let mut v: Vec<usize> = draws.iter().map(|d| d.index).collect();
    v.sort_unstable();
    v
}
