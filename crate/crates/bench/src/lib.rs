//! Deterministic inputs for the kernel benchmarks.

use online_coreset::{ColumnMatrix, Observation, RowMatrix, SeedStream};
use rand::Rng;

fn uniform_rows(rows: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SeedStream::new(seed).child("bench", 0).rng();
    (0..rows)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

pub fn points(n: usize, d: usize) -> Vec<Vec<f64>> {
    uniform_rows(n, d, 1)
}

pub fn columns(d: usize, t: usize) -> ColumnMatrix {
    ColumnMatrix::new(d, uniform_rows(t, d, 2)).expect("finite columns")
}

pub fn observations(n: usize, d: usize) -> Vec<Observation> {
    uniform_rows(n, d + 1, 3)
        .into_iter()
        .map(|mut r| {
            let b = r.pop().unwrap_or_default();
            Observation { a: r, b }
        })
        .collect()
}

pub fn design(n: usize, d: usize) -> RowMatrix {
    RowMatrix::from_observations(d, &observations(n, d)).expect("finite rows")
}
