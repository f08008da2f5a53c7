//! Hindsight optima for the ledgers.
//!
//! Online losses may be clipped at 1, and the optimum is scored with the same
//! clipping. For the non-squared losses used here the reference parameter
//! (k-means restarts, top-k subspace, least squares) is not the exact
//! minimizer of the summed loss, so every value below is an upper bound on OPT.

use online_coreset::clustering::kz_opt;
use online_coreset::lowrank::exact_projector;
use online_coreset::regression::exact_least_squares;
use online_coreset::{
    kz_loss, projection_loss, regression_loss, ColumnMatrix, DrawScheme, Observation, Result,
    RowMatrix, SeedStream,
};

fn clipped(v: f64, clip: bool) -> f64 {
    if clip {
        v.min(1.0)
    } else {
        v
    }
}

/// Best of `restarts` offline solver runs on the full data.
pub fn cluster_opt(
    points: &[Vec<f64>],
    k: usize,
    z: f64,
    restarts: usize,
    seed: SeedStream,
    clip: bool,
) -> Result<f64> {
    let (centers, _) = kz_opt(points, k, z, restarts, &DrawScheme::Independent(seed))?;
    points
        .iter()
        .map(|p| Ok(clipped(kz_loss(&centers, p)?, clip)))
        .sum()
}

pub fn lowrank_opt(columns: &[Vec<f64>], k: usize, clip: bool) -> Result<f64> {
    let d = columns[0].len();
    let z = exact_projector(&ColumnMatrix::new(d, columns.to_vec())?, k)?;
    columns
        .iter()
        .map(|c| Ok(clipped(projection_loss(&z, c)?, clip)))
        .sum()
}

pub fn regression_opt(rows: &[Observation], clip: bool) -> Result<f64> {
    let d = rows[0].a.len();
    let x = exact_least_squares(&RowMatrix::from_observations(d, rows)?);
    rows.iter()
        .map(|o| Ok(clipped(regression_loss(&x, &o.a, o.b)?, clip)))
        .sum()
}

/// `out[t]` is the oracle value on the first `t + 1` items.
pub fn prefix_opts<X>(items: &[X], oracle: impl Fn(&[X]) -> Result<f64>) -> Result<Vec<f64>> {
    (1..=items.len()).map(|t| oracle(&items[..t])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_opt_is_zero_on_consistent_data() {
        let rows: Vec<Observation> = (0..6)
            .map(|i| {
                let a = vec![1.0, i as f64 / 6.0];
                Observation {
                    b: 0.2 * a[0] - 0.5 * a[1],
                    a,
                }
            })
            .collect();
        assert!(regression_opt(&rows, true).unwrap() < 1e-12);
    }

    #[test]
    fn lowrank_opt_is_zero_within_rank() {
        let cols = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.6, 0.8, 0.0],
        ];
        assert!(lowrank_opt(&cols, 2, false).unwrap() < 1e-12);
        assert!(lowrank_opt(&cols, 1, false).unwrap() > 0.1);
    }

    #[test]
    fn cluster_opt_clips_each_point() {
        let pts = vec![vec![0.0], vec![0.1], vec![5.0], vec![-5.0]];
        let raw = cluster_opt(&pts, 1, 2.0, 5, SeedStream::new(0), false).unwrap();
        let cut = cluster_opt(&pts, 1, 2.0, 5, SeedStream::new(0), true).unwrap();
        assert!(cut <= 4.0 && cut < raw);
    }

    #[test]
    fn prefix_values_follow_the_prefix() {
        let v = prefix_opts(&[1.0, 2.0, 3.0], |p: &[f64]| Ok(p.iter().sum())).unwrap();
        assert_eq!(v, vec![1.0, 3.0, 6.0]);
    }
}
