//! Kähler-cone machinery: the supremum operator norm, the deformed metric
//! `G' = g + S(G')` with `S(G) = conj(φ)^T G^T φ`, flat extension of Kähler
//! classes on tori, and grid-certified stability radii.

use serde::Serialize;

use crate::grid::GridSpec;
use crate::hodgemap::{self, HodgeClassVector};
use crate::kuranishi::BeltramiSeries;
use crate::linalg::{self, CMat};
use crate::model::{AdaptedBasis, FormModel};
use crate::par;
use crate::period::{self, PeriodMatrix, PeriodMatrixSeries};
use crate::torus::TorusModel;
use crate::{c64, Error, Result, C64};

/// Largest singular value over all charts.
pub fn sup_operator_norm(charts: &[CMat]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for m in charts {
        if m.nrows() != m.ncols() {
            return Err(Error::Shape(format!("chart matrix is {}x{}, not square", m.nrows(), m.ncols())));
        }
        worst = worst.max(linalg::spectral_norm(m));
    }
    Ok(worst)
}

/// `S(G) = conj(φ)^T G^T φ`.
pub fn s_operator(phi: &CMat, g: &CMat) -> CMat {
    phi.adjoint() * g.transpose() * phi
}

/// Slack below 1 for the `|φ| < 1` precondition.
pub const NORM_MARGIN: f64 = 1e-12;

fn check_metric_inputs(g: &CMat, phi: &CMat) -> Result<f64> {
    let d = g.nrows();
    if g.shape() != (d, d) || phi.shape() != (d, d) {
        return Err(Error::Shape("metric and Beltrami matrix must be square of equal size".into()));
    }
    let norm = sup_operator_norm(std::slice::from_ref(phi))?;
    // within rounding of 1 the S-operator is not a contraction either
    if norm >= 1.0 - NORM_MARGIN {
        return Err(Error::Domain(format!("|φ| = {norm:.6} is not below 1")));
    }
    Ok(norm)
}

/// Solve `G' = g + S(G')` by a direct `d² x d²` linear solve.
pub fn deformed_metric(g: &CMat, phi: &CMat) -> Result<CMat> {
    check_metric_inputs(g, phi)?;
    let d = g.nrows();
    // vec(φ^H X φ) = (φ^T ⊗ φ^H) vec(X), and vec(G^T) is a permutation of vec(G)
    let k = linalg::kron(&phi.transpose(), &phi.adjoint());
    let mut perm = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            perm[(j + i * d, i + j * d)] = c64(1.0, 0.0);
        }
    }
    let op = CMat::identity(d * d, d * d) - k * perm;
    let x = linalg::solve(&op, &CMat::from_column_slice(d * d, 1, linalg::vec_cols(g).as_slice()))?;
    let out = linalg::unvec_cols(&x.column(0).into_owned(), d, d);
    Ok((&out + out.adjoint()) * c64(0.5, 0.0))
}

/// The same fixed point by summing `sum_k S^k(g)` until terms drop below `tol`.
pub fn deformed_metric_neumann(g: &CMat, phi: &CMat, tol: f64) -> Result<CMat> {
    check_metric_inputs(g, phi)?;
    let mut term = g.clone();
    let mut sum = g.clone();
    for _ in 0..100_000 {
        term = s_operator(phi, &term);
        sum += &term;
        if linalg::max_abs(&term) <= tol {
            break;
        }
    }
    Ok(sum)
}

#[derive(Clone, Debug)]
pub struct KahlerExtension {
    pub class: HodgeClassVector,
    /// `(1,1)` coefficient matrix `G` in `√-1 sum G[a][b] θ^a ∧ conj(θ)^b`.
    pub matrix: CMat,
    /// Largest coefficient of the representative off type `(1,1)` on `X_t`.
    pub type_defect: f64,
    /// Smallest eigenvalue of `G`.
    pub certificate: f64,
}

/// Flat extension of the class `[ω_g]` to the torus fibre with Beltrami
/// matrix `phi`, read off in the deformed coframe.
pub fn extend_kahler_class(tm: &TorusModel, pm: &PeriodMatrix, g: &CMat, phi: &CMat) -> Result<KahlerExtension> {
    let fm = tm.fm();
    if fm.weight() != 2 {
        return Err(Error::Precondition("Kähler extension needs a weight-2 model".into()));
    }
    let herm = linalg::max_abs(&(g - g.adjoint()));
    if herm > 1e-12 || linalg::hermitian_min_eigenvalue(g) <= 0.0 {
        return Err(Error::Input("metric must be Hermitian positive definite".into()));
    }
    let purity = period::check_purity(pm, tm.ab())?;
    if !purity.pure {
        return Err(Error::Precondition("period matrix is not pure at this point".into()));
    }
    let sigma = HodgeClassVector::from_form_vector(fm, &tm.kahler_form(g)?)?;
    let class = hodgemap::hodge_map_weight2(pm, tm.ab(), &sigma.components[1])?;
    let (matrix, type_defect) = coframe_11_matrix(tm, &class, phi)?;
    let certificate = linalg::hermitian_min_eigenvalue(&matrix);
    Ok(KahlerExtension { class, matrix, type_defect, certificate })
}

/// Expand a weight-2 class in the deformed coframe; returns the `(1,1)`
/// matrix (divided by `√-1`) and the largest `(2,0)`/`(0,2)` coefficient.
pub fn coframe_11_matrix(tm: &TorusModel, class: &HodgeClassVector, phi: &CMat) -> Result<(CMat, f64)> {
    let d = tm.d();
    let frame = tm.deformed_frame(phi)?;
    let v = class.to_form_vector(tm.fm());
    let c = linalg::solve(&frame, &CMat::from_column_slice(v.len(), 1, v.as_slice()))?;
    let mut m = CMat::zeros(d, d);
    let mut defect: f64 = 0.0;
    for (pos, mask) in tm.all_monomials().into_iter().enumerate() {
        let dz = (mask & ((1 << d) - 1)).count_ones();
        if dz == 1 {
            let a = (mask & ((1 << d) - 1)).trailing_zeros() as usize;
            let b = (mask >> d).trailing_zeros() as usize;
            m[(a, b)] = c[(pos, 0)] / c64(0.0, 1.0);
        } else {
            defect = defect.max(c[(pos, 0)].norm());
        }
    }
    Ok((m, defect))
}

/// How `|φ(t)|` is measured in a scan.
#[derive(Clone, Copy, Debug)]
pub enum PhiNorm {
    /// Constant torus matrix of size `d`: largest singular value.
    TorusMatrix(usize),
    /// Euclidean norm of the `A^1` coefficient vector.
    Euclidean,
}

impl PhiNorm {
    pub fn measure(&self, coeffs: &[C64]) -> f64 {
        match *self {
            PhiNorm::TorusMatrix(d) => linalg::spectral_norm(&crate::torus::phi_matrix(d, coeffs)),
            PhiNorm::Euclidean => coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRecord {
    pub t: Vec<[f64; 2]>,
    pub phi_norm: f64,
    pub pure: bool,
    pub determinant: Option<[f64; 2]>,
    pub a_norm: f64,
    /// `1 - |φ|²`: the S-operator Neumann margin.
    pub margin: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub scan_radius: f64,
    pub points: usize,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Radii are lower bounds certified on the sampled grid only.
    pub grid_certified: bool,
    pub c1_capped: bool,
    pub c2_capped: bool,
    pub records: Vec<ScanRecord>,
}

/// Per-point evaluation: `(|φ(t)|, Φ(t))`.
pub fn stability_radii_with<F>(ab: &AdaptedBasis, points: &[Vec<C64>], cap: f64, eval: F) -> Result<StabilityReport>
where
    F: Fn(&[C64]) -> Result<(f64, PeriodMatrix)> + Sync + Send,
{
    if points.is_empty() {
        return Err(Error::Input("stability scan over an empty grid".into()));
    }
    let records = par::map(points, |t| {
        let tt: Vec<[f64; 2]> = t.iter().map(|z| [z.re, z.im]).collect();
        let out = eval(t).and_then(|(nrm, pm)| {
            let rep = period::check_purity(&pm, ab)?;
            let a = pm.a_matrix()?;
            Ok((nrm, rep, linalg::spectral_norm(&a)))
        });
        match out {
            Ok((nrm, rep, a_norm)) => ScanRecord {
                t: tt,
                phi_norm: nrm,
                pure: rep.pure,
                determinant: rep.determinant,
                a_norm,
                margin: 1.0 - nrm * nrm,
                error: None,
            },
            Err(e) => ScanRecord {
                t: tt,
                phi_norm: f64::NAN,
                pure: false,
                determinant: None,
                a_norm: f64::NAN,
                margin: f64::NAN,
                error: Some(e.code().to_string()),
            },
        }
    });
    let mut c1 = cap;
    let mut c2 = cap;
    let mut c1_capped = true;
    let mut c2_capped = true;
    for r in &records {
        let nrm = if r.phi_norm.is_finite() { r.phi_norm } else { 0.0 };
        if !r.pure && nrm <= c1 {
            c1 = nrm;
            c1_capped = false;
        }
        if !(r.a_norm < 1.0) && nrm <= c2 {
            c2 = nrm;
            c2_capped = false;
        }
    }
    Ok(StabilityReport {
        scan_radius: cap,
        points: records.len(),
        c0: c1.min(c2),
        c1,
        c2,
        grid_certified: true,
        c1_capped,
        c2_capped,
        records,
    })
}

/// Stability radii of a weight-2 family over a grid; the cap is the grid radius.
pub fn stability_radii(
    fm: &FormModel,
    ab: &AdaptedBasis,
    phi: &BeltramiSeries,
    grid: &GridSpec,
    norm: PhiNorm,
) -> Result<StabilityReport> {
    if fm.weight() != 2 {
        return Err(Error::Precondition("stability radii need a weight-2 model".into()));
    }
    let pms: PeriodMatrixSeries = period::period_blocks(fm, ab, phi)?;
    let points = grid.points(phi.num_params())?;
    stability_radii_with(ab, &points, grid.radius, |t| {
        let coeffs = phi.evaluate(t)?;
        Ok((norm.measure(&coeffs), pms.evaluate(t)?))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diag_closed_form() {
        let g = CMat::identity(2, 2);
        let mut phi = CMat::zeros(2, 2);
        phi[(0, 0)] = c64(0.5, 0.0);
        let out = deformed_metric(&g, &phi).unwrap();
        assert!((out[(0, 0)] - c64(4.0 / 3.0, 0.0)).norm() < 1e-12);
        assert!((out[(1, 1)] - c64(1.0, 0.0)).norm() < 1e-12);
        let nm = deformed_metric_neumann(&g, &phi, 1e-16).unwrap();
        assert!(linalg::max_abs(&(out - nm)) < 1e-12);
    }

    #[test]
    fn norm_at_least_one_rejected() {
        let g = CMat::identity(2, 2);
        let phi = CMat::identity(2, 2);
        assert!(matches!(deformed_metric(&g, &phi), Err(Error::Domain(_))));
    }
}
