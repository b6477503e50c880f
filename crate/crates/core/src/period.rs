//! Period-matrix blocks `Φ^(i,j)(t)` from a Beltrami series, and checks of
//! their structure (degree bounds, transversality, purity).
//!
//! Block `Φ^(i,i+k)` is read off from
//! `H(i_φ^k (I + T i_φ)^{-1} η_(i)) / k! = Φ^(i,i+k) η_(i+k)`,
//! with the inverse expanded as a Neumann series in `t`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::kuranishi::BeltramiSeries;
use crate::linalg::{self, CMat};
use crate::model::{AdaptedBasis, FormModel};
use crate::series::{MatrixSeries, MonomialBasis, PowerTable, MAGNITUDE_FLOOR};
use crate::{c64, Error, Result, C64};

/// `i_{φ(t)} = sum_m φ_m(t) C_m` as an operator series on `W`.
pub fn contraction_series(fm: &FormModel, phi: &BeltramiSeries) -> Result<MatrixSeries> {
    if phi.dim() != fm.contractions().len() {
        return Err(Error::Shape(format!(
            "φ has {} components but the form model has {} contraction tensors",
            phi.dim(),
            fm.contractions().len()
        )));
    }
    let parts: Vec<_> = phi.components().iter().zip(fm.contractions()).collect();
    MatrixSeries::from_scalar_combination(phi.basis().clone(), fm.dim(), fm.dim(), &parts)
}

fn is_zero_matrix(m: &CMat) -> bool {
    m.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

/// `(I + T i_φ)^{-1} e` for constant columns `e`, by `x <- e - T i_φ x`
/// iterated to the cutoff.
pub fn neumann_apply(fm: &FormModel, iphi: &MatrixSeries, e: &CMat) -> Result<MatrixSeries> {
    let basis = iphi.basis().clone();
    let e_series = MatrixSeries::constant(basis.clone(), e.clone());
    if is_zero_matrix(fm.tform()) {
        return Ok(e_series);
    }
    let u = iphi.left_mul(fm.tform())?;
    let mut x = e_series.clone();
    for _ in 0..basis.cutoff() {
        x = e_series.checked_sub(&u.checked_mul(&x)?)?;
    }
    Ok(x)
}

/// Largest coefficient of `(I + T i_φ) x - η_(i)` over every block `i`.
pub fn neumann_residual(fm: &FormModel, phi: &BeltramiSeries) -> Result<f64> {
    let iphi = contraction_series(fm, phi)?;
    let u = iphi.left_mul(fm.tform())?;
    let mut worst: f64 = 0.0;
    for i in 0..=fm.weight() {
        let e = fm.harmonic(i);
        let x = neumann_apply(fm, &iphi, e)?;
        let back = x.checked_add(&u.checked_mul(&x)?)?;
        let r = back.checked_sub(&MatrixSeries::constant(iphi.basis().clone(), e.clone()))?;
        worst = worst.max(r.max_abs_up_to(iphi.basis().cutoff()));
    }
    Ok(worst)
}

/// Unipotent block matrix of series; only the blocks above the diagonal are stored.
#[derive(Clone, Debug)]
pub struct PeriodMatrixSeries {
    weight: usize,
    dims: Vec<usize>,
    basis: Arc<MonomialBasis>,
    blocks: BTreeMap<(usize, usize), MatrixSeries>,
    pub warnings: Vec<String>,
}

impl PeriodMatrixSeries {
    /// The identity period matrix (`φ = 0`).
    pub fn identity(dims: Vec<usize>, basis: Arc<MonomialBasis>) -> Self {
        let n = dims.len() - 1;
        let mut blocks = BTreeMap::new();
        for i in 0..=n {
            for j in i + 1..=n {
                blocks.insert((i, j), MatrixSeries::zeros(basis.clone(), dims[i], dims[j]));
            }
        }
        PeriodMatrixSeries { weight: n, dims, basis, blocks, warnings: Vec::new() }
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    /// Block `Φ^(i,j)`: identity on the diagonal, zero below it.
    pub fn block(&self, i: usize, j: usize) -> MatrixSeries {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.blocks[&(i, j)].clone(),
            std::cmp::Ordering::Equal => {
                MatrixSeries::constant(self.basis.clone(), CMat::identity(self.dims[i], self.dims[i]))
            }
            std::cmp::Ordering::Greater => MatrixSeries::zeros(self.basis.clone(), self.dims[i], self.dims[j]),
        }
    }

    pub fn upper(&self, i: usize, j: usize) -> &MatrixSeries {
        &self.blocks[&(i, j)]
    }

    pub fn set_upper(&mut self, i: usize, j: usize, m: MatrixSeries) -> Result<()> {
        if i >= j || j > self.weight || m.shape() != (self.dims[i], self.dims[j]) {
            return Err(Error::Shape(format!("block ({i},{j}) has the wrong position or shape")));
        }
        self.blocks.insert((i, j), m);
        Ok(())
    }

    pub fn evaluate(&self, t: &[C64]) -> Result<PeriodMatrix> {
        let pw = PowerTable::new(&self.basis, t)?;
        Ok(self.evaluate_with(&pw))
    }

    pub fn evaluate_with(&self, pw: &PowerTable) -> PeriodMatrix {
        let n = self.weight;
        let mut blocks = vec![vec![CMat::zeros(0, 0); n + 1]; n + 1];
        for i in 0..=n {
            for j in 0..=n {
                blocks[i][j] = match i.cmp(&j) {
                    std::cmp::Ordering::Less => self.blocks[&(i, j)].evaluate_with(pw),
                    std::cmp::Ordering::Equal => CMat::identity(self.dims[i], self.dims[i]),
                    std::cmp::Ordering::Greater => CMat::zeros(self.dims[i], self.dims[j]),
                };
            }
        }
        PeriodMatrix { weight: n, dims: self.dims.clone(), blocks }
    }

    /// Blocks whose lowest degree is below `j - i`: `(i, j, degree)`.
    pub fn lowest_degree_violations(&self) -> Vec<(usize, usize, usize)> {
        self.blocks
            .iter()
            .filter_map(|(&(i, j), m)| match m.min_degree(MAGNITUDE_FLOOR) {
                Some(k) if k < j - i => Some((i, j, k)),
                _ => None,
            })
            .collect()
    }

    /// Violations of `deg Φ^(p,p+i) >= 1 + deg Φ^(p+1,p+i)` for `i >= 2`, with
    /// the zero series of infinite degree.
    pub fn strengthened_bound_violations(&self) -> Vec<(usize, usize)> {
        let n = self.weight;
        let mut out = Vec::new();
        for p in 0..n {
            for i in 2..=n - p {
                let top = self.blocks[&(p, p + i)].min_degree(MAGNITUDE_FLOOR);
                let below = self.blocks[&(p + 1, p + i)].min_degree(MAGNITUDE_FLOOR);
                let ok = match (top, below) {
                    (None, _) => true,
                    (Some(_), None) => false,
                    (Some(a), Some(b)) => a > b,
                };
                if !ok {
                    out.push((p, p + i));
                }
            }
        }
        out
    }
}

/// Period blocks of the family `φ` (the cutoff of `φ` is used).
pub fn period_blocks(fm: &FormModel, ab: &AdaptedBasis, phi: &BeltramiSeries) -> Result<PeriodMatrixSeries> {
    let n = fm.weight();
    let dims = fm.hodge_numbers();
    if ab.pairing.len() != n + 1 || (0..=n).any(|i| ab.pairing[i].nrows() != dims[i]) {
        return Err(Error::Shape("adapted basis does not match the form model".into()));
    }
    let iphi = contraction_series(fm, phi)?;
    let basis = iphi.basis().clone();
    let mut out = PeriodMatrixSeries::identity(dims.clone(), basis.clone());
    if basis.cutoff() < n {
        out.warnings.push(format!(
            "cutoff {} is below the weight {n}; blocks Φ^(i,j) with j - i > {} vanish identically",
            basis.cutoff(),
            basis.cutoff()
        ));
    }
    for i in 0..n {
        let x = neumann_apply(fm, &iphi, fm.harmonic(i))?;
        let mut y = x;
        for k in 1..=n - i {
            y = iphi.checked_mul(&y)?.scale(c64(1.0 / k as f64, 0.0));
            let proj = fm.harmonic(i + k).adjoint() * fm.gram();
            let coords = y.left_mul(&proj)?;
            out.set_upper(i, i + k, coords.transpose())?;
        }
    }
    Ok(out)
}

/// Numeric block matrix at a point.
#[derive(Clone, Debug)]
pub struct PeriodMatrix {
    pub weight: usize,
    pub dims: Vec<usize>,
    pub blocks: Vec<Vec<CMat>>,
}

impl PeriodMatrix {
    pub fn block(&self, i: usize, j: usize) -> &CMat {
        &self.blocks[i][j]
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    fn offset(&self, j: usize) -> usize {
        self.dims[..j].iter().sum()
    }

    /// Row block `Ω_(i)`: coordinates of the sections in the adapted basis.
    pub fn omega_row(&self, i: usize) -> CMat {
        let mut out = CMat::zeros(self.dims[i], self.total_dim());
        for j in i..=self.weight {
            out.view_mut((0, self.offset(j)), (self.dims[i], self.dims[j])).copy_from(&self.blocks[i][j]);
        }
        out
    }

    /// Coordinates of `conj(Ω_(i))`, using `conj(η_(j)) = K_(j) η_(n-j)`.
    pub fn conj_omega_row(&self, i: usize, ab: &AdaptedBasis) -> CMat {
        let n = self.weight;
        let mut out = CMat::zeros(self.dims[i], self.total_dim());
        for j in i..=n {
            let c = linalg::conj(&self.blocks[i][j]) * &ab.pairing[j];
            let mut v = out.view_mut((0, self.offset(n - j)), (self.dims[i], self.dims[n - j]));
            v += c;
        }
        out
    }

    /// `A = Φ^(0,2) - Φ^(0,1) Φ^(1,2)` (weight 2).
    pub fn a_matrix(&self) -> Result<CMat> {
        if self.weight != 2 {
            return Err(Error::Precondition("A(t) is defined for weight 2".into()));
        }
        Ok(&self.blocks[0][2] - &self.blocks[0][1] * &self.blocks[1][2])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PurityReport {
    pub pure: bool,
    /// Smallest `sigma_min / sigma_max` over the filtration levels.
    pub min_ratio: f64,
    /// Weight 2: determinant of the stacked rows `Ω_(0)`, `Ω_(1)`,
    /// `K_(0)^{-1} conj(Ω_(0))` (equal to 1 at `t = 0`).
    pub determinant: Option<[f64; 2]>,
}

pub const PURITY_RATIO: f64 = 1e-8;

pub fn check_purity(pm: &PeriodMatrix, ab: &AdaptedBasis) -> Result<PurityReport> {
    let n = pm.weight;
    let total = pm.total_dim();
    let mut min_ratio = f64::INFINITY;
    for p in 1..=n {
        let mut rows: Vec<CMat> = (0..=n - p).map(|i| pm.omega_row(i)).collect();
        rows.extend((0..p).map(|i| pm.conj_omega_row(i, ab)));
        let m = stack(&rows, total);
        let s = linalg::singular_values(&m);
        let ratio = match (s.first(), s.last()) {
            _ if total == 0 => 1.0,
            (Some(&a), Some(&b)) if a > 0.0 && s.len() == total => b / a,
            _ => 0.0,
        };
        min_ratio = min_ratio.min(ratio);
    }
    if n == 0 {
        min_ratio = 1.0;
    }
    let determinant = if n == 2 {
        let k0 = &ab.pairing[0];
        let conj0 = if k0.nrows() == 0 { CMat::zeros(0, total) } else { linalg::inverse(k0)? * pm.conj_omega_row(0, ab) };
        let m = stack(&[pm.omega_row(0), pm.omega_row(1), conj0], total);
        let det = if m.nrows() == m.ncols() { m.determinant() } else { c64(0.0, 0.0) };
        Some([det.re, det.im])
    } else {
        None
    };
    Ok(PurityReport { pure: min_ratio > PURITY_RATIO, min_ratio, determinant })
}

fn stack(rows: &[CMat], cols: usize) -> CMat {
    let total: usize = rows.iter().map(|r| r.nrows()).sum();
    let mut m = CMat::zeros(total, cols);
    let mut r0 = 0;
    for r in rows {
        m.view_mut((r0, 0), (r.nrows(), cols)).copy_from(r);
        r0 += r.nrows();
    }
    m
}

pub fn evaluate_and_check_purity(
    phi_blocks: &PeriodMatrixSeries,
    ab: &AdaptedBasis,
    t: &[C64],
) -> Result<(PeriodMatrix, PurityReport)> {
    let pm = phi_blocks.evaluate(t)?;
    let rep = check_purity(&pm, ab)?;
    Ok((pm, rep))
}

/// Coefficientwise defect of `∂_μ Φ^(p,p+i) = ∂_μ Φ^(p,p+1) Φ^(p+1,p+i)`,
/// maximised over `p` and `i >= 2`, to degree `D - 1`.
pub fn transversality_residual(pms: &PeriodMatrixSeries, mu: usize) -> Result<f64> {
    let n = pms.weight;
    let cut = pms.basis.cutoff().saturating_sub(1);
    let mut worst: f64 = 0.0;
    for p in 0..n {
        let d1 = pms.blocks[&(p, p + 1)].partial_derivative(mu)?;
        for i in 2..=n - p {
            let lhs = pms.blocks[&(p, p + i)].partial_derivative(mu)?;
            let rhs = d1.checked_mul(&pms.blocks[&(p + 1, p + i)])?;
            worst = worst.max(lhs.checked_sub(&rhs)?.max_abs_up_to(cut));
        }
    }
    Ok(worst)
}

/// Maximum of [`transversality_residual`] over all parameters.
pub fn transversality_residual_all(pms: &PeriodMatrixSeries) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for mu in 0..pms.basis.num_vars() {
        worst = worst.max(transversality_residual(pms, mu)?);
    }
    Ok(worst)
}

/// The same identity evaluated at a point (used on obstructed bases).
pub fn transversality_residual_at(pms: &PeriodMatrixSeries, mu: usize, t: &[C64]) -> Result<f64> {
    let n = pms.weight;
    let pw = PowerTable::new(&pms.basis, t)?;
    let mut worst: f64 = 0.0;
    for p in 0..n {
        let d1 = pms.blocks[&(p, p + 1)].partial_derivative(mu)?.evaluate_with(&pw);
        for i in 2..=n - p {
            let lhs = pms.blocks[&(p, p + i)].partial_derivative(mu)?.evaluate_with(&pw);
            let rhs = &d1 * pms.blocks[&(p + 1, p + i)].evaluate_with(&pw);
            worst = worst.max(linalg::max_abs(&(lhs - rhs)));
        }
    }
    Ok(worst)
}
