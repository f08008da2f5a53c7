#![allow(dead_code)]

use nalgebra::DMatrix;
use online_coreset::rng::StreamRng;
use online_coreset::{Projector, SeedStream};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> StreamRng {
    SeedStream::new(seed).child("test", 0).rng()
}

pub fn gaussian(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut StreamRng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-ish random orthonormal `d x k` basis.
pub fn random_projector(d: usize, k: usize, rng: &mut StreamRng) -> Projector {
    let q = gaussian_matrix(d, k, rng).qr().q();
    Projector {
        basis: q.columns(0, k).into_owned(),
    }
}

/// Well-separated Gaussian blobs.
pub fn blobs(n: usize, centers: &[Vec<f64>], spread: f64, rng: &mut StreamRng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let c = &centers[i % centers.len()];
            c.iter().map(|v| v + spread * gaussian(rng)).collect()
        })
        .collect()
}

pub fn uniform_point(d: usize, lo: f64, hi: f64, rng: &mut StreamRng) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
