//! Dense linear-algebra helpers on small (d <= 4) matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Orthonormal basis of the column span of `m` (thin Q of a Householder QR),
/// together with the diagonal of R.
pub fn orthonormalize(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let qr = m.clone().qr();
    let r = qr.r();
    let q = qr.q();
    let k = m.ncols();
    let q = q.columns(0, k).into_owned();
    let diag = DVector::from_iterator(k, (0..k).map(|i| r[(i, i)]));
    (q, diag)
}

pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    m.clone().svd(false, false).singular_values
}

pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).max()
}

pub fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).min()
}

/// Cosines of the principal angles between the spans of two orthonormal
/// bases, in decreasing order, with the matching principal vectors of `a`.
pub fn principal_cosines(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let m = a.transpose() * b;
    let svd = m.svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let cosines = order
        .iter()
        .map(|&i| svd.singular_values[i].min(1.0))
        .collect();
    let vecs = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| a * u.column(i))
            .collect::<Vec<DVector<f64>>>(),
    );
    (cosines, vecs)
}

/// Largest principal angle (radians) between two equal-dimensional subspaces
/// given by orthonormal bases.
pub fn subspace_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // sin of the largest angle = || (I - B B^T) A ||
    let resid = a - b * (b.transpose() * a);
    operator_norm(&resid).clamp(0.0, 1.0).asin()
}

/// Angle between a vector and the span of an orthonormal basis.
pub fn angle_to_span(v: &DVector<f64>, basis: &DMatrix<f64>) -> f64 {
    let n = v.norm();
    if n == 0.0 {
        return 0.0;
    }
    let u = v / n;
    let resid = &u - basis * (basis.transpose() * &u);
    resid.norm().clamp(0.0, 1.0).asin()
}

/// Exact determinant of a small integer matrix (Laplace expansion).
pub fn integer_det(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    match n {
        0 => 1,
        1 => m[0][0] as i128,
        2 => m[0][0] as i128 * m[1][1] as i128 - m[0][1] as i128 * m[1][0] as i128,
        _ => (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * m[0][j] as i128 * integer_det(&minor(m, 0, j))
            })
            .sum(),
    }
}

fn minor(m: &[Vec<i64>], row: usize, col: usize) -> Vec<Vec<i64>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, v)| *v)
                .collect()
        })
        .collect()
}

/// Inverse of a unimodular integer matrix, exact (adjugate / det).
pub fn unimodular_inverse(m: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    let n = m.len();
    let det = integer_det(m);
    if det.abs() != 1 {
        return Err(Error::InvalidSpec(format!("|det| = {} != 1", det.abs())));
    }
    let mut inv = vec![vec![0i64; n]; n];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            let cof = if n == 1 {
                1
            } else {
                integer_det(&minor(m, j, i))
            };
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            *entry = (sign * cof * det) as i64;
        }
    }
    Ok(inv)
}

pub fn integer_matrix(m: &[Vec<i64>]) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j] as f64)
}

pub fn integer_product(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// Solves `m x = b`, failing when `m` is singular.
pub fn solve(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    m.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::NumericalFailure("singular linear system".into()))
}

pub fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("singular matrix".into()))
}
