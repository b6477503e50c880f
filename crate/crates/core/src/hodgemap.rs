//! Extension of real `(p,p)`-classes to nearby fibres.
//!
//! A class is `σ = sum_i α_(i) η_(i)` with row vectors `α_(i)`. On `X_t` the
//! coefficients `β` against the deformed sections satisfy
//! `β_(k) = α_(k) - sum_{i<k} β_(i) Φ^(i,k)(t)`, and `σ` has type `(p,p)`
//! on `X_t` exactly when `β_(p+j) = 0` for `j = 1..p`. For fixed `t` this is
//! an affine real-linear system in the lower components, solved directly.

use nalgebra::{DMatrix, RowDVector};
use serde::Serialize;

use crate::linalg::{self, CMat, CVec};
use crate::model::{AdaptedBasis, FormModel};
use crate::period::PeriodMatrix;
use crate::{c64, Error, Result, C64};

pub type Row = RowDVector<C64>;

/// Solves whose real system has a larger condition number are refused.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct HodgeClassVector {
    pub weight: usize,
    pub components: Vec<Row>,
}

impl HodgeClassVector {
    pub fn zero(dims: &[usize]) -> Self {
        HodgeClassVector { weight: dims.len() - 1, components: dims.iter().map(|&h| Row::zeros(h)).collect() }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.len()).collect()
    }

    /// Class with a single nonzero component.
    pub fn pure(dims: &[usize], i: usize, alpha: Row) -> Result<Self> {
        let mut s = Self::zero(dims);
        if alpha.len() != dims[i] {
            return Err(Error::Shape(format!("component {i} has length {}, expected {}", alpha.len(), dims[i])));
        }
        s.components[i] = alpha;
        Ok(s)
    }

    /// Coordinates of a form-space vector along the harmonic bases.
    pub fn from_form_vector(fm: &FormModel, v: &CVec) -> Result<Self> {
        if v.len() != fm.dim() {
            return Err(Error::Shape("form vector of wrong length".into()));
        }
        let components = (0..=fm.weight()).map(|q| fm.harmonic_coords(q, v).transpose()).collect();
        Ok(HodgeClassVector { weight: fm.weight(), components })
    }

    /// Harmonic representative `sum_i α_(i) η̃_(i)`.
    pub fn to_form_vector(&self, fm: &FormModel) -> CVec {
        let mut v = CVec::zeros(fm.dim());
        for (q, a) in self.components.iter().enumerate() {
            v += fm.harmonic(q) * a.transpose();
        }
        v
    }

    /// `max_i |α_(n-i) - conj(α_(i)) K_(i)|`.
    pub fn reality_residual(&self, ab: &AdaptedBasis) -> f64 {
        let n = self.weight;
        (0..=n)
            .map(|i| {
                let d = &self.components[n - i] - self.components[i].map(|z| z.conj()) * &ab.pairing[i];
                d.iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest entry outside the middle component.
    pub fn off_middle(&self) -> f64 {
        let p = self.weight / 2;
        self.components
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != p || self.weight % 2 == 1)
            .flat_map(|(_, c)| c.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> Self {
        HodgeClassVector {
            weight: self.weight,
            components: self.components.iter().map(|r| r * c64(c, 0.0)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::Shape("classes of different shape".into()));
        }
        Ok(HodgeClassVector {
            weight: self.weight,
            components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .flat_map(|(a, b)| (a - b).iter().map(|z| z.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }

    /// Components as `[re, im]` pairs for serialisation.
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        self.components.iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
    }
}

/// `β_(k) = α_(k) - sum_{i<k} β_(i) Φ^(i,k)`.
pub fn beta_coefficients(pm: &PeriodMatrix, alpha: &HodgeClassVector) -> Result<Vec<Row>> {
    if alpha.dims() != pm.dims {
        return Err(Error::Shape(format!("class dims {:?} vs period dims {:?}", alpha.dims(), pm.dims)));
    }
    let mut beta: Vec<Row> = Vec::with_capacity(pm.weight + 1);
    for k in 0..=pm.weight {
        let mut b = alpha.components[k].clone();
        for (i, bi) in beta.iter().enumerate() {
            b -= bi * pm.block(i, k);
        }
        beta.push(b);
    }
    Ok(beta)
}

/// Solve the real-affine system `F(z) = 0` for `z ∈ C^m`, where `F` is
/// real-affine. Returns the solution and the condition number.
fn solve_real_affine(m: usize, f: impl Fn(&[C64]) -> Vec<C64>) -> Result<(Vec<C64>, f64)> {
    let zero = vec![C64::new(0.0, 0.0); m];
    let f0 = f(&zero);
    if m == 0 {
        return Ok((zero, 1.0));
    }
    let rows = 2 * f0.len();
    let mut a = DMatrix::<f64>::zeros(rows, 2 * m);
    for k in 0..2 * m {
        let mut z = zero.clone();
        z[k % m] = if k < m { c64(1.0, 0.0) } else { c64(0.0, 1.0) };
        let fk = f(&z);
        for (r, (x, y)) in fk.iter().zip(&f0).enumerate() {
            let d = x - y;
            a[(r, k)] = d.re;
            a[(f0.len() + r, k)] = d.im;
        }
    }
    let b = nalgebra::DVector::from_iterator(rows, f0.iter().map(|z| -z.re).chain(f0.iter().map(|z| -z.im)));
    let s = a.clone().svd(false, false).singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
    let cond = if rows != 2 * m || smin == 0.0 { f64::INFINITY } else { smax / smin };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::OutsideNeighborhood(format!("real system has condition number {cond:.3e}")));
    }
    let x = a.lu().solve(&b).ok_or_else(|| Error::OutsideNeighborhood("singular real system".into()))?;
    Ok(((0..m).map(|k| c64(x[k], x[m + k])).collect(), cond))
}

#[derive(Clone, Debug)]
pub struct HodgeMapSolution {
    pub class: HodgeClassVector,
    /// `max_j |F_j|` at the solution.
    pub residual: f64,
    /// `max_j |β_(p+j)|` of the output class.
    pub beta_residual: f64,
    pub condition: f64,
}

fn assemble(dims: &[usize], ab: &AdaptedBasis, lower: &[C64], alpha_p: &Row) -> HodgeClassVector {
    let n = dims.len() - 1;
    let p = n / 2;
    let mut cls = HodgeClassVector::zero(dims);
    let mut off = 0;
    for i in 0..p {
        let a = Row::from_iterator(dims[i], lower[off..off + dims[i]].iter().copied());
        off += dims[i];
        cls.components[n - i] = a.map(|z| z.conj()) * &ab.pairing[i];
        cls.components[i] = a;
    }
    cls.components[p] = alpha_p.clone();
    cls
}

/// `F_j = conj(α_(p-j)) K_(p-j) - sum_{i<=p} β_(i) Φ^(i,p+j)` for `j = 1..p`.
fn f_system(pm: &PeriodMatrix, cls: &HodgeClassVector) -> Result<Vec<C64>> {
    let n = pm.weight;
    let p = n / 2;
    let beta = beta_coefficients(pm, cls)?;
    let mut out = Vec::new();
    for j in 1..=p {
        let mut f = cls.components[p + j].clone();
        for (i, bi) in beta.iter().enumerate().take(p + 1) {
            f -= bi * pm.block(i, p + j);
        }
        out.extend(f.iter().copied());
    }
    Ok(out)
}

/// `H(σ, t)` for the real `(p,p)` component `α_(p)` at the numeric period matrix `pm`.
pub fn solve_hodge_map(pm: &PeriodMatrix, ab: &AdaptedBasis, alpha_p: &Row) -> Result<HodgeMapSolution> {
    let n = pm.weight;
    if !n.is_multiple_of(2) {
        return Err(Error::Precondition(format!("weight {n} is odd; no (p,p) classes")));
    }
    let p = n / 2;
    let dims = pm.dims.clone();
    if alpha_p.len() != dims[p] {
        return Err(Error::Shape(format!("α_(p) has length {}, expected {}", alpha_p.len(), dims[p])));
    }
    let m: usize = dims[..p].iter().sum();
    let (lower, condition) = solve_real_affine(m, |z| {
        f_system(pm, &assemble(&dims, ab, z, alpha_p)).expect("shapes checked above")
    })?;
    let class = assemble(&dims, ab, &lower, alpha_p);
    let residual = f_system(pm, &class)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let beta = beta_coefficients(pm, &class)?;
    let beta_residual = beta[p + 1..].iter().flat_map(|b| b.iter()).map(|z| z.norm()).fold(0.0, f64::max);
    Ok(HodgeMapSolution { class, residual, beta_residual, condition })
}

/// Same as [`solve_hodge_map`] starting from a full class that must be real
/// and of type `(p,p)` at the centre.
pub fn solve_hodge_map_for_class(pm: &PeriodMatrix, ab: &AdaptedBasis, sigma: &HodgeClassVector) -> Result<HodgeMapSolution> {
    if !sigma.weight.is_multiple_of(2) || sigma.off_middle() > 1e-12 {
        return Err(Error::Precondition("class is not of pure type (p,p)".into()));
    }
    if sigma.reality_residual(ab) > 1e-10 {
        return Err(Error::Precondition("class is not real".into()));
    }
    solve_hodge_map(pm, ab, &sigma.components[sigma.weight / 2])
}

/// Weight 2: solve `conj(α_(0)) K_(0) = α_(1) Φ^(1,2) + α_(0) A` with
/// `A = Φ^(0,2) - Φ^(0,1) Φ^(1,2)`, which needs `|A| < 1`.
pub fn alpha0_weight2(pm: &PeriodMatrix, ab: &AdaptedBasis, alpha1: &Row) -> Result<Row> {
    let a = pm.a_matrix()?;
    let norm = linalg::spectral_norm(&a);
    if norm >= 1.0 {
        return Err(Error::Domain(format!("|A(t)| = {norm:.6} is not below 1")));
    }
    let h0 = pm.dims[0];
    if h0 == 0 {
        return Ok(Row::zeros(0));
    }
    let kinv = linalg::inverse(&ab.pairing[0])?;
    let c = alpha1 * pm.block(1, 2);
    let rate = norm * linalg::spectral_norm(&kinv);
    if rate < 1.0 {
        let mut x = Row::zeros(h0);
        for _ in 0..10_000 {
            let next = ((&c + &x * &a) * &kinv).map(|z| z.conj());
            let step = (&next - &x).iter().map(|z| z.norm()).fold(0.0, f64::max);
            x = next;
            if step <= 1e-16 * (1.0 + x.iter().map(|z| z.norm()).fold(0.0, f64::max)) {
                return Ok(x);
            }
        }
        return Ok(x);
    }
    // non-isometric conjugation pairing: solve the real 2h0 system instead
    let (z, _) = solve_real_affine(h0, |z| {
        let x = Row::from_iterator(h0, z.iter().copied());
        let lhs = x.map(|w| w.conj()) * &ab.pairing[0];
        let rhs = &c + &x * &a;
        (lhs - rhs).iter().copied().collect()
    })?;
    Ok(Row::from_iterator(h0, z))
}

/// Weight-2 Hodge map assembled from [`alpha0_weight2`].
pub fn hodge_map_weight2(pm: &PeriodMatrix, ab: &AdaptedBasis, alpha1: &Row) -> Result<HodgeClassVector> {
    let a0 = alpha0_weight2(pm, ab, alpha1)?;
    Ok(assemble(&pm.dims, ab, a0.as_slice(), alpha1))
}

/// Serializable record of one Hodge-map evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct HodgeMapRecord {
    pub components: Vec<Vec<[f64; 2]>>,
    pub residual: f64,
    pub beta_residual: f64,
    pub condition: f64,
}

impl From<&HodgeMapSolution> for HodgeMapRecord {
    fn from(s: &HodgeMapSolution) -> Self {
        HodgeMapRecord {
            components: s.class.to_pairs(),
            residual: s.residual,
            beta_residual: s.beta_residual,
            condition: s.condition,
        }
    }
}

/// Matrix with a single row, for callers holding `α` as a matrix.
pub fn row_from_matrix(m: &CMat) -> Row {
    Row::from_iterator(m.len(), m.iter().copied())
}
