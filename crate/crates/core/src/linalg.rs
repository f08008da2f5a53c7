use nalgebra::{DMatrix, DVector};

/// Relative cutoff below which eigenvalues of a PSD matrix count as zero.
pub const PINV_CUTOFF: f64 = 1e-12;

/// Eigen-decomposition of a symmetric matrix, eigenvalues in decreasing order.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Flip the column so its largest-magnitude entry is positive (first on ties).
pub fn fix_sign(col: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..col.len() {
        if col[i].abs() > col[best].abs() {
            best = i;
        }
    }
    if !col.is_empty() && col[best] < 0.0 {
        col.neg_mut();
    }
}

/// Gram matrix `sum_i v_i v_i^T` of a list of equal-length vectors.
pub fn gram(vectors: &[Vec<f64>], dim: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(dim, dim);
    for v in vectors {
        rank_one_update(&mut g, v, 1.0);
    }
    g
}

pub fn rank_one_update(g: &mut DMatrix<f64>, v: &[f64], scale: f64) {
    let d = v.len();
    for c in 0..d {
        let vc = scale * v[c];
        if vc == 0.0 {
            continue;
        }
        for r in 0..d {
            g[(r, c)] += v[r] * vc;
        }
    }
}

/// `sum_j (u_j . a)^2 / mu_j` over the retained spectrum.
pub fn spectral_quadratic(basis: &DMatrix<f64>, inv_values: &[f64], a: &[f64]) -> f64 {
    let mut s = 0.0;
    for (j, &inv) in inv_values.iter().enumerate() {
        if inv == 0.0 {
            continue;
        }
        let col = basis.column(j);
        let dot: f64 = col.iter().zip(a).map(|(u, x)| u * x).sum();
        s += dot * dot * inv;
    }
    s
}

/// Reciprocals of eigenvalues above the relative cutoff, zero otherwise.
pub fn pinv_values(values: &[f64]) -> Vec<f64> {
    let top = values.iter().cloned().fold(0.0, f64::max);
    values
        .iter()
        .map(|&v| {
            if top > 0.0 && v > PINV_CUTOFF * top {
                1.0 / v
            } else {
                0.0
            }
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
