//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Gram-Schmidt thin QR that drops numerically dependent columns.
///
/// Each column is orthogonalized twice against the accepted basis (CGS2). A
/// column whose residual norm falls below `rel_tol * ||a||_F` is discarded.
/// Returns the orthonormal basis and the indices of the kept columns.
pub fn thin_qr_dropping(a: &CMatrix, rel_tol: f64) -> (CMatrix, Vec<usize>) {
    let scale = a.norm();
    let mut cols: Vec<CVector> = Vec::with_capacity(a.ncols());
    let mut kept = Vec::new();
    if scale == 0.0 {
        return (CMatrix::zeros(a.nrows(), 0), kept);
    }
    for j in 0..a.ncols() {
        let mut v: CVector = a.column(j).into_owned();
        for _ in 0..2 {
            for q in &cols {
                let c = q.dotc(&v);
                v.axpy(-c, q, ONE);
            }
        }
        let n = v.norm();
        if n < rel_tol * scale {
            continue;
        }
        v.unscale_mut(n);
        cols.push(v);
        kept.push(j);
    }
    let basis = if cols.is_empty() {
        CMatrix::zeros(a.nrows(), 0)
    } else {
        CMatrix::from_columns(&cols)
    };
    (basis, kept)
}

/// Solves `min ||a z - b||^2 + sum_i reg[i] |z_i|^2` through a Householder QR
/// of the stacked system `[a; diag(sqrt(reg))]`.
///
/// Mathematically this equals `(a^H a + diag(reg))^{-1} a^H b`; the stacked
/// form avoids squaring the condition number.
pub fn regularized_lstsq(a: &CMatrix, b: &CVector, reg: &[f64]) -> Result<CVector> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::dims("regularized_lstsq rhs", m, b.len()));
    }
    if reg.len() != n {
        return Err(Error::dims("regularized_lstsq penalty", n, reg.len()));
    }
    if n == 0 {
        return Ok(CVector::zeros(0));
    }
    if reg.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
        return Err(Error::InvalidArgument(
            "regularization weights must be finite and non-negative".into(),
        ));
    }
    let mut stacked = CMatrix::zeros(m + n, n);
    stacked.view_mut((0, 0), (m, n)).copy_from(a);
    for (i, &r) in reg.iter().enumerate() {
        stacked[(m + i, i)] = Complex64::new(r.sqrt(), 0.0);
    }
    let mut rhs = CVector::zeros(m + n);
    rhs.rows_mut(0, m).copy_from(b);

    if stacked.nrows() < n {
        return Err(Error::Singular {
            condition: f64::INFINITY,
        });
    }
    let qr = stacked.qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..n).map(|i| r[(i, i)].norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if dmax == 0.0 || dmin <= 1e-13 * dmax {
        let condition = if dmin == 0.0 { f64::INFINITY } else { dmax / dmin };
        return Err(Error::Singular { condition });
    }
    let qhb = qr.q().adjoint() * rhs;
    r.solve_upper_triangular(&qhb)
        .ok_or(Error::Singular {
            condition: f64::INFINITY,
        })
}

/// Plain least squares `min ||a z - b||`.
pub fn lstsq(a: &CMatrix, b: &CVector) -> Result<CVector> {
    regularized_lstsq(a, b, &vec![0.0; a.ncols()])
}

/// Economy SVD with singular values sorted in non-increasing order.
pub fn economy_svd(a: &CMatrix) -> (CMatrix, Vec<f64>) {
    let k = a.nrows().min(a.ncols());
    if k == 0 {
        return (CMatrix::zeros(a.nrows(), 0), Vec::new());
    }
    let svd = SVD::new(a.clone(), true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]).then(i.cmp(&j)));
    let cols: Vec<CVector> = order.iter().map(|&i| u.column(i).into_owned()).collect();
    let values = order.iter().map(|&i| sv[i]).collect();
    (CMatrix::from_columns(&cols), values)
}

/// Horizontally concatenates two matrices with the same row count.
pub fn hcat(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows(), "hcat row mismatch");
    let mut out = CMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

/// `max |a_ij - a_ji| / max |a_ij|`, zero for the zero matrix.
pub fn relative_asymmetry(a: &CMatrix) -> f64 {
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).norm());
        }
    }
    worst / scale
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(a: &CMatrix, rel_tol: f64) -> usize {
    let (_, sv) = economy_svd(a);
    match sv.first() {
        Some(&smax) if smax > 0.0 => sv.iter().filter(|&&s| s > rel_tol * smax).count(),
        _ => 0,
    }
}

/// Largest deviation of `q^H q` from the identity.
pub fn orthonormality_error(q: &CMatrix) -> f64 {
    let g = q.adjoint() * q;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}
