//! Hodge loci: generators `H(i_φ (I + T i_φ)^{-1} σ̃)`, membership, tangent
//! spaces, and the variational Hodge criterion for coordinate subtori.

use serde::Serialize;

use crate::hodgemap::HodgeClassVector;
use crate::kuranishi::{BeltramiSeries, ObstructionSeries};
use crate::linalg::{self, CMat, CVec};
use crate::model::{AdaptedBasis, FormModel};
use crate::par;
use crate::period::{contraction_series, neumann_apply};
use crate::series::{TruncatedSeries, MAGNITUDE_FLOOR};
use crate::torus::{poincare_dual, SubtorusModel, TorusFamily, TorusModel};
use crate::{Error, Result, C64};

#[derive(Clone, Debug)]
pub struct LocusIdeal {
    /// Coordinates along `η_(p+1)` of the harmonic projection.
    pub generators: Vec<TruncatedSeries>,
    /// Obstruction components, so the zero set lies in the base.
    pub obstruction: Vec<TruncatedSeries>,
    pub num_params: usize,
}

pub fn locus_generators(
    fm: &FormModel,
    ab: &AdaptedBasis,
    phi: &BeltramiSeries,
    sigma: &HodgeClassVector,
    obstruction: Option<&ObstructionSeries>,
) -> Result<LocusIdeal> {
    let n = fm.weight();
    if !n.is_multiple_of(2) || sigma.weight != n {
        return Err(Error::Precondition("locus generators need an even-weight class matching the model".into()));
    }
    if sigma.off_middle() > 1e-12 {
        return Err(Error::Precondition("σ is not of pure type (p,p) at the centre".into()));
    }
    if sigma.reality_residual(ab) > 1e-10 {
        return Err(Error::Precondition("σ is not real".into()));
    }
    let p = n / 2;
    let iphi = contraction_series(fm, phi)?;
    let s = sigma.to_form_vector(fm);
    let x = neumann_apply(fm, &iphi, &CMat::from_column_slice(s.len(), 1, s.as_slice()))?;
    let y = iphi.checked_mul(&x)?;
    let coords = y.left_mul(&(fm.harmonic(p + 1).adjoint() * fm.gram()))?;
    let generators = (0..coords.shape().0).map(|r| coords.entry(r, 0)).collect();
    let obstruction = obstruction.map(|o| o.components.clone()).unwrap_or_default();
    Ok(LocusIdeal { generators, obstruction, num_params: phi.num_params() })
}

impl LocusIdeal {
    /// Largest generator modulus at `t`.
    pub fn residual(&self, t: &[C64]) -> Result<f64> {
        let mut r: f64 = 0.0;
        for g in self.generators.iter().chain(&self.obstruction) {
            r = r.max(g.evaluate(t)?.norm());
        }
        Ok(r)
    }

    /// Degree-one coefficients of the Hodge generators (`gens x N`).
    pub fn linear_part(&self) -> CMat {
        let n = self.num_params;
        CMat::from_fn(self.generators.len(), n, |g, i| {
            let mut e = vec![0u32; n];
            e[i] = 1;
            self.generators[g].coeff(&e)
        })
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.iter().chain(&self.obstruction).all(|g| g.is_zero(MAGNITUDE_FLOOR))
    }
}

pub fn locus_membership(ideal: &LocusIdeal, t: &[C64], tol: f64) -> Result<(bool, f64)> {
    let r = ideal.residual(t)?;
    Ok((r < tol, r))
}

/// Kernel of the linear part, as orthonormal columns in `C^N`.
pub fn locus_tangent_space(ideal: &LocusIdeal) -> CMat {
    let l = ideal.linear_part();
    if l.nrows() == 0 {
        return CMat::identity(ideal.num_params, ideal.num_params);
    }
    let scale = linalg::spectral_norm(&l).max(1.0);
    linalg::null_space(&l, 1e-10 * scale)
}

#[derive(Clone, Debug, Serialize)]
pub struct VhcRecord {
    pub t: Vec<[f64; 2]>,
    pub lhs: f64,
    pub rhs: f64,
    pub violation: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VhcReport {
    pub coords: Vec<usize>,
    pub tol_lhs: f64,
    pub tol_rhs: f64,
    pub violations: usize,
    pub holds: bool,
    pub records: Vec<VhcRecord>,
}

pub const TOL_LHS: f64 = 1e-8;
pub const TOL_RHS: f64 = 1e-10;

/// Normal component of a constant Beltrami matrix restricted to the
/// coordinate subtorus: rows in `S`, columns outside `S`.
pub fn normal_component_norm(phi: &CMat, coords: &[usize]) -> f64 {
    let mut s = 0.0;
    for &a in coords {
        for b in 0..phi.ncols() {
            if !coords.contains(&b) {
                s += phi[(a, b)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// `| H(i_φ (I + T i_φ)^{-1} σ̃) |` at a numeric Beltrami coefficient vector.
pub fn harmonic_contraction_norm(fm: &FormModel, sigma: &CVec, coeffs: &[C64]) -> Result<f64> {
    let iphi = fm.contraction_at(coeffs)?;
    let op = CMat::identity(fm.dim(), fm.dim()) + fm.tform() * &iphi;
    let x = linalg::solve(&op, &CMat::from_column_slice(sigma.len(), 1, sigma.as_slice()))?;
    let y = fm.projector() * (&iphi * x);
    let yv = y.column(0).into_owned();
    Ok(fm.inner(&yv, &yv).re.max(0.0).sqrt())
}

/// Scan of the implication `normal component ≠ 0 ⇒ H(i_φ σ̃_Z) ≠ 0`.
/// `phi_at` gives the constant `d x d` Beltrami matrix at each point.
pub fn vhc_scan<F>(
    fm: &FormModel,
    sigma: &CVec,
    coords: &[usize],
    points: &[Vec<C64>],
    phi_at: F,
    tol_lhs: f64,
    tol_rhs: f64,
) -> Result<VhcReport>
where
    F: Fn(&[C64]) -> Result<CMat> + Sync + Send,
{
    let records = par::map(points, |t| {
        let tt: Vec<[f64; 2]> = t.iter().map(|z| [z.re, z.im]).collect();
        let out = phi_at(t).and_then(|phi| {
            let lhs = normal_component_norm(&phi, coords);
            let rhs = harmonic_contraction_norm(fm, sigma, &crate::torus::phi_coeffs(&phi))?;
            Ok((lhs, rhs))
        });
        match out {
            Ok((lhs, rhs)) => VhcRecord { t: tt, lhs, rhs, violation: lhs > tol_lhs && rhs < tol_rhs, error: None },
            Err(e) => VhcRecord { t: tt, lhs: f64::NAN, rhs: f64::NAN, violation: false, error: Some(e.code().into()) },
        }
    });
    let violations = records.iter().filter(|r| r.violation).count();
    Ok(VhcReport { coords: coords.to_vec(), tol_lhs, tol_rhs, violations, holds: violations == 0, records })
}

/// Variational Hodge criterion on a torus for a coordinate subtorus.
pub fn vhc_check(
    tm: &TorusModel,
    z: &SubtorusModel,
    family: &TorusFamily,
    points: &[Vec<C64>],
    tol_lhs: f64,
    tol_rhs: f64,
) -> Result<VhcReport> {
    let sigma = poincare_dual(tm, z)?.to_form_vector(tm.fm());
    if family.d != tm.d() {
        return Err(Error::Shape("family dimension does not match the torus".into()));
    }
    vhc_scan(tm.fm(), &sigma, &z.coords, points, |t| family.at(t), tol_lhs, tol_rhs)
}
