//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::{c64, Error, Result, C64};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Singular values in non-increasing order. Empty matrices have none.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Numerical rank: singular values above `rel_tol * sigma_max` (and above `abs_floor`).
pub fn rank(m: &CMat, rel_tol: f64, abs_floor: f64) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    let cut = (rel_tol * top).max(abs_floor);
    s.iter().filter(|&&x| x > cut).count()
}

/// 2-norm condition number; infinite for singular or empty input.
pub fn condition_number(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&a), Some(&b)) if b > 0.0 && s.len() == m.nrows().min(m.ncols()) => a / b,
        _ => f64::INFINITY,
    }
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormal basis (columns) of the right null space of `m`.
pub fn null_space(m: &CMat, tol: f64) -> CMat {
    let n = m.ncols();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    // pad to at least n rows so the thin SVD exposes the full right basis
    let rows = m.nrows().max(n);
    let mut a = CMat::zeros(rows, n);
    a.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let cols: Vec<CVec> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(i, _)| vt.row(i).adjoint())
        .collect();
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn hermitian_min_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let h = (m + m.adjoint()).scale(0.5);
    h.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Solve a square system, failing on singular input.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::Shape(format!(
            "solve: {}x{} system with {} right-hand rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Domain("singular linear system".into()))
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    solve(a, &CMat::identity(a.nrows(), a.ncols()))
}

pub fn conj(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-stacking vectorisation.
pub fn vec_cols(m: &CMat) -> CVec {
    CVec::from_iterator(m.len(), m.iter().copied())
}

pub fn unvec_cols(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_iterator(rows, cols, v.iter().copied())
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Random unitary from the QR factorisation of a random matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    loop {
        let a = random_matrix(rng, n, n);
        if condition_number(&a) < 1e6 {
            return a.qr().q();
        }
    }
}

/// Gram-metric orthonormalisation of the columns of `e`: returns `e L^{-H}`
/// where `L L^H = e^H g e`.
pub fn gram_orthonormalize(e: &CMat, g: &CMat) -> Result<CMat> {
    if e.ncols() == 0 {
        return Ok(e.clone());
    }
    let m = e.adjoint() * g * e;
    let m = (&m + m.adjoint()).scale(0.5);
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Domain("harmonic basis is degenerate in the Gram metric".into()))?;
    let l = chol.l();
    // solve X L^H = e  <=>  L X^H = e^H
    let xh = l
        .solve_lower_triangular(&e.adjoint())
        .ok_or_else(|| Error::Domain("singular Cholesky factor".into()))?;
    Ok(xh.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn null_space_of_wide_matrix() {
        let m = CMat::from_row_slice(1, 3, &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let k = null_space(&m, 1e-12);
        assert_eq!(k.ncols(), 2);
        assert!(max_abs(&(&m * &k)) < 1e-14);
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(&mut rng, 5);
        let e = u.adjoint() * &u - CMat::identity(5, 5);
        assert!(max_abs(&e) < 1e-13);
    }

    #[test]
    fn gram_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 4, 4);
        let g = a.adjoint() * &a + CMat::identity(4, 4);
        let e = random_matrix(&mut rng, 4, 2);
        let q = gram_orthonormalize(&e, &g).unwrap();
        let r = q.adjoint() * &g * &q - CMat::identity(2, 2);
        assert!(max_abs(&r) < 1e-12);
    }

    #[test]
    fn kron_vec_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 2, 3);
        let x = random_matrix(&mut rng, 3, 2);
        let b = random_matrix(&mut rng, 2, 2);
        // vec(A X B) = (B^T kron A) vec(X)
        let lhs = vec_cols(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec_cols(&x);
        assert!((lhs - rhs).norm() < 1e-13);
    }
}
