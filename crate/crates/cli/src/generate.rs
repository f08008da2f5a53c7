//! Synthetic workloads and CSV input.

use std::path::Path;

use online_coreset::{Observation, SeedStream};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::HarnessError;

fn normal_vec(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gaussian mixture with `k` unit-width components, rescaled so the largest
/// point has norm 1. Point `i` belongs to component `i % k`.
pub fn cluster_points(
    n: usize,
    d: usize,
    k: usize,
    separation: f64,
    seed: SeedStream,
) -> Vec<Vec<f64>> {
    let mut rng = seed.rng();
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            normal_vec(d, &mut rng)
                .into_iter()
                .map(|v| v * separation)
                .collect()
        })
        .collect();
    let mut points: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let c = &centers[i % k];
            normal_vec(d, &mut rng)
                .iter()
                .zip(c)
                .map(|(e, c)| c + e)
                .collect()
        })
        .collect();
    let scale = points.iter().map(|p| norm(p)).fold(0.0, f64::max);
    if scale > 0.0 {
        points
            .iter_mut()
            .for_each(|p| p.iter_mut().for_each(|v| *v /= scale));
    }
    points
}

/// `t` unit-norm columns of a rank-`rank` product plus Gaussian noise.
pub fn lowrank_columns(
    d: usize,
    t: usize,
    rank: usize,
    noise: f64,
    seed: SeedStream,
) -> Vec<Vec<f64>> {
    let mut rng = seed.rng();
    let left: Vec<Vec<f64>> = (0..rank).map(|_| normal_vec(d, &mut rng)).collect();
    (0..t)
        .map(|_| {
            let coeff = normal_vec(rank, &mut rng);
            let mut col = vec![0.0; d];
            for (u, c) in left.iter().zip(&coeff) {
                col.iter_mut().zip(u).for_each(|(x, u)| *x += c * u);
            }
            let e = normal_vec(d, &mut rng);
            col.iter_mut().zip(&e).for_each(|(x, e)| *x += noise * e);
            let s = norm(&col);
            if s > 0.0 {
                col.iter_mut().for_each(|x| *x /= s);
            }
            col
        })
        .collect()
}

/// Planted unit-norm model on a Gaussian design rescaled into the unit ball,
/// with noise uniform on `[-noise, noise]`. Returns the rows and the model.
pub fn regression_rows(
    n: usize,
    d: usize,
    noise: f64,
    seed: SeedStream,
) -> (Vec<Observation>, Vec<f64>) {
    let mut rng = seed.rng();
    let mut truth = normal_vec(d, &mut rng);
    let s = norm(&truth);
    truth.iter_mut().for_each(|v| *v /= s);
    let mut design: Vec<Vec<f64>> = (0..n).map(|_| normal_vec(d, &mut rng)).collect();
    let scale = design.iter().map(|a| norm(a)).fold(0.0, f64::max);
    if scale > 0.0 {
        design
            .iter_mut()
            .for_each(|a| a.iter_mut().for_each(|v| *v /= scale));
    }
    let rows = design
        .into_iter()
        .map(|a| {
            let clean: f64 = a.iter().zip(&truth).map(|(a, x)| a * x).sum();
            let e = if noise > 0.0 {
                rng.random_range(-noise..=noise)
            } else {
                0.0
            };
            Observation { a, b: clean + e }
        })
        .collect();
    (rows, truth)
}

/// One point per line, comma separated, no header.
pub fn read_points(path: &Path) -> Result<Vec<Vec<f64>>, HarnessError> {
    let field = "data";
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| HarnessError::config(field, format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| HarnessError::config(field, e.to_string()))?;
        let p = record
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| HarnessError::config(field, format!("line {}: {e}", line + 1)))?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(HarnessError::config(
                field,
                format!("line {}: non-finite value", line + 1),
            ));
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(HarnessError::config(field, "no rows"));
    }
    Ok(points)
}

/// Last column is the target.
pub fn observations_from_points(points: Vec<Vec<f64>>) -> Result<Vec<Observation>, HarnessError> {
    points
        .into_iter()
        .map(|mut p| match p.pop() {
            Some(b) if !p.is_empty() => Ok(Observation { a: p, b }),
            _ => Err(HarnessError::config(
                "data",
                "regression rows need a target column and at least one feature",
            )),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use online_coreset::regression::exact_least_squares;
    use online_coreset::RowMatrix;

    #[test]
    fn cluster_points_lie_in_unit_ball() {
        let p = cluster_points(100, 4, 3, 4.0, SeedStream::new(1));
        assert_eq!(p.len(), 100);
        assert!(p.iter().all(|x| x.len() == 4));
        let max = p.iter().map(|x| norm(x)).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_lowrank_has_planted_rank() {
        for seed in 0..5 {
            let cols = lowrank_columns(10, 40, 3, 0.0, SeedStream::new(seed));
            let m = DMatrix::from_fn(10, 40, |i, j| cols[j][i]);
            assert_eq!(m.rank(1e-9), 3);
            assert!(cols.iter().all(|c| (norm(c) - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn noiseless_regression_recovers_model() {
        let (rows, truth) = regression_rows(60, 5, 0.0, SeedStream::new(3));
        let x = exact_least_squares(&RowMatrix::from_observations(5, &rows).unwrap());
        for (a, b) in x.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(rows
            .iter()
            .all(|o| norm(&o.a) <= 1.0 + 1e-12 && o.b.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn generators_are_seeded() {
        let a = regression_rows(10, 3, 0.1, SeedStream::new(9));
        let b = regression_rows(10, 3, 0.1, SeedStream::new(9));
        assert_eq!(a, b);
        assert_ne!(a.1, regression_rows(10, 3, 0.1, SeedStream::new(10)).1);
    }
}
