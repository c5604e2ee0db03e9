//! Small dense linear-algebra helpers on top of `nalgebra`'s SVD.

use nalgebra::DMatrix;

/// Row-major construction of a dense matrix.
pub fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Singular values in decreasing order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Number of singular values at least `rel_tol` times the largest one.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    rank_of(&sv, rel_tol)
}

pub fn rank_of(sv: &[f64], rel_tol: f64) -> usize {
    match sv.first() {
        Some(&s0) if s0 > 0.0 => sv.iter().filter(|&&s| s >= rel_tol * s0).count(),
        _ => 0,
    }
}

/// Orthonormal basis of the numerical kernel of `a`, returned together with
/// the numerical rank. Singular values below `rel_tol * max(sigma_max, abs_floor)`
/// count as zero.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64, abs_floor: f64) -> (usize, Vec<Vec<f64>>) {
    let ncols = a.ncols();
    if ncols == 0 {
        return (0, Vec::new());
    }
    // Pad to a square matrix so that the SVD returns a full right basis.
    let size = a.nrows().max(ncols);
    let mut padded = DMatrix::<f64>::zeros(size, ncols);
    padded.view_mut((0, 0), (a.nrows(), ncols)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    let cutoff = rel_tol * smax.max(abs_floor);
    let mut rank = 0;
    let mut kernel = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > cutoff {
            rank += 1;
        } else {
            kernel.push(v_t.row(k).iter().copied().collect());
        }
    }
    (rank, kernel)
}

/// Orthonormal basis of the right singular vectors of `a` whose singular
/// values do not exceed the absolute `cutoff`.
pub fn kernel_below(a: &DMatrix<f64>, cutoff: f64) -> Vec<Vec<f64>> {
    let ncols = a.ncols();
    if ncols == 0 {
        return Vec::new();
    }
    let size = a.nrows().max(ncols);
    let mut padded = DMatrix::<f64>::zeros(size, ncols);
    padded.view_mut((0, 0), (a.nrows(), ncols)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= cutoff)
        .map(|(k, _)| v_t.row(k).iter().copied().collect())
        .collect()
}

/// Minimum-norm solution of `a x = b` via the pseudo-inverse.
pub fn least_squares(a: &DMatrix<f64>, b: &[f64], rel_tol: f64) -> Vec<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    let rhs = nalgebra::DVector::from_column_slice(b);
    match svd.solve(&rhs, rel_tol * smax) {
        Ok(x) => x.iter().copied().collect(),
        Err(_) => vec![0.0; a.ncols()],
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
