//! Kuranishi recursion `φ = sum θ_i t_i + ½ dbar* G [φ, φ]`, the obstruction
//! `H[φ, φ]`, sampling of its zero set and Maurer-Cartan residuals.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, CMat, CVec};
use crate::model::DeformationComplex;
use crate::par;
use crate::series::{MonomialBasis, PowerTable, TruncatedSeries};
use crate::{c64, Error, Result, C64};

/// `φ(t)` as one series per basis element of `A^1`.
#[derive(Clone, Debug)]
pub struct BeltramiSeries {
    basis: Arc<MonomialBasis>,
    components: Vec<TruncatedSeries>,
}

impl BeltramiSeries {
    pub fn new(components: Vec<TruncatedSeries>) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::Input("Beltrami series needs components".into()))?;
        let basis = first.basis().clone();
        if components.iter().any(|c| c.num_vars() != basis.num_vars() || c.cutoff() != basis.cutoff()) {
            return Err(Error::Shape("Beltrami components over different bases".into()));
        }
        Ok(BeltramiSeries { basis, components })
    }

    pub fn zero(dim: usize, num_params: usize, cutoff: usize) -> Self {
        let basis = MonomialBasis::shared(num_params, cutoff);
        BeltramiSeries { components: vec![TruncatedSeries::zero_on(basis.clone()); dim], basis }
    }

    /// `φ(t) = sum_i θ_i t_i`.
    pub fn linear(theta: &CMat, cutoff: usize) -> Self {
        let mut s = Self::zero(theta.nrows(), theta.ncols(), cutoff);
        if cutoff >= 1 {
            for i in 0..theta.ncols() {
                let mut e = vec![0u32; theta.ncols()];
                e[i] = 1;
                let k = s.basis.index_of(&e).expect("degree one");
                for m in 0..theta.nrows() {
                    s.components[m].coeffs_mut()[k] = theta[(m, i)];
                }
            }
        }
        s
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn components(&self) -> &[TruncatedSeries] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn num_params(&self) -> usize {
        self.basis.num_vars()
    }

    pub fn cutoff(&self) -> usize {
        self.basis.cutoff()
    }

    pub fn evaluate(&self, t: &[C64]) -> Result<Vec<C64>> {
        let pw = PowerTable::new(&self.basis, t)?;
        Ok(self.evaluate_with(&pw))
    }

    pub fn evaluate_with(&self, pw: &PowerTable) -> Vec<C64> {
        self.components
            .iter()
            .map(|s| s.coeffs().iter().enumerate().map(|(i, c)| c * pw.monomial(i)).sum())
            .collect()
    }

    /// Degree-one coefficients as a `dim A^1 x N` matrix.
    pub fn linear_part(&self) -> CMat {
        let n = self.num_params();
        CMat::from_fn(self.dim(), n, |m, i| {
            let mut e = vec![0u32; n];
            e[i] = 1;
            self.components[m].coeff(&e)
        })
    }

    /// Substitute `t_j = 0` for `j` outside `keep`.
    pub fn restrict(&self, keep: &[bool]) -> Self {
        BeltramiSeries {
            basis: self.basis.clone(),
            components: self.components.iter().map(|c| c.restrict(keep)).collect(),
        }
    }
}

/// Components of `H[φ, φ]` along an orthonormal basis of harmonic `A^2`.
#[derive(Clone, Debug)]
pub struct ObstructionSeries {
    pub components: Vec<TruncatedSeries>,
    pub num_params: usize,
}

impl ObstructionSeries {
    pub fn evaluate(&self, t: &[C64]) -> Result<Vec<C64>> {
        self.components.iter().map(|c| c.evaluate(t)).collect()
    }

    pub fn max_abs_at(&self, t: &[C64]) -> Result<f64> {
        Ok(self.evaluate(t)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    pub fn is_zero(&self, floor: f64) -> bool {
        self.components.iter().all(|c| c.is_zero(floor))
    }

    pub fn min_degree(&self, floor: f64) -> Option<usize> {
        self.components.iter().filter_map(|c| c.min_degree(floor)).min()
    }
}

fn bracket_is_zero(dc: &DeformationComplex) -> bool {
    dc.bracket.iter().all(|b| b.iter().all(|z| z.re == 0.0 && z.im == 0.0))
}

/// `[φ, φ]` as `A^2`-valued series.
pub fn bracket_series(dc: &DeformationComplex, phi: &BeltramiSeries) -> Result<Vec<TruncatedSeries>> {
    if phi.dim() != dc.dims[1] {
        return Err(Error::Shape(format!("φ has {} components, A^1 has dim {}", phi.dim(), dc.dims[1])));
    }
    let mut out = vec![TruncatedSeries::zero_on(phi.basis.clone()); dc.dims[2]];
    if bracket_is_zero(dc) {
        return Ok(out);
    }
    let n1 = dc.dims[1];
    for a in 0..n1 {
        if phi.components[a].is_zero(0.0) {
            continue;
        }
        for b in a..n1 {
            let weights: Vec<C64> = dc
                .bracket
                .iter()
                .map(|m| if a == b { m[(a, a)] } else { m[(a, b)] + m[(b, a)] })
                .collect();
            if weights.iter().all(|w| w.norm() == 0.0) || phi.components[b].is_zero(0.0) {
                continue;
            }
            let prod = phi.components[a].checked_mul(&phi.components[b])?;
            for (k, w) in weights.iter().enumerate() {
                if w.norm() != 0.0 {
                    out[k] = out[k].checked_add(&prod.scale(*w))?;
                }
            }
        }
    }
    Ok(out)
}

/// Solve the Kuranishi recursion to total degree `cutoff`.
pub fn solve_phi(dc: &DeformationComplex, theta: &CMat, cutoff: usize) -> Result<BeltramiSeries> {
    if theta.nrows() != dc.dims[1] {
        return Err(Error::Shape("θ must be given as columns in A^1".into()));
    }
    if cutoff == 0 {
        return Err(Error::Input("cutoff must be at least 1".into()));
    }
    let defect = linalg::max_abs(&(&dc.harmonic[1] * theta - theta));
    if defect > 1e-10 {
        return Err(Error::Input(format!("θ is not harmonic (|Hθ - θ| = {defect:.3e})")));
    }
    let mut phi = BeltramiSeries::linear(theta, cutoff);
    if bracket_is_zero(dc) {
        return Ok(phi);
    }
    let lift = &dc.dbar_star[1] * &dc.green[2] * c64(0.5, 0.0);
    for mu in 2..=cutoff {
        let br = bracket_series(dc, &phi.truncated(mu - 1))?;
        let range = phi.basis.degree_range(mu);
        for k in range {
            let v = CVec::from_iterator(dc.dims[2], br.iter().map(|s| s.coeffs()[k]));
            let w = &lift * v;
            for m in 0..dc.dims[1] {
                phi.components[m].coeffs_mut()[k] = w[m];
            }
        }
    }
    Ok(phi)
}

impl BeltramiSeries {
    fn truncated(&self, k: usize) -> Self {
        BeltramiSeries { basis: self.basis.clone(), components: self.components.iter().map(|c| c.truncated(k)).collect() }
    }
}

/// Largest coefficient of `φ - sum θ t - ½ dbar* G [φ, φ]` (fixed-point defect).
pub fn recursion_defect(dc: &DeformationComplex, theta: &CMat, phi: &BeltramiSeries) -> Result<f64> {
    let lin = BeltramiSeries::linear(theta, phi.cutoff());
    let br = bracket_series(dc, phi)?;
    let lift = &dc.dbar_star[1] * &dc.green[2] * c64(0.5, 0.0);
    let mut worst: f64 = 0.0;
    for k in 0..phi.basis.len() {
        let v = CVec::from_iterator(dc.dims[2], br.iter().map(|s| s.coeffs()[k]));
        let w = &lift * v;
        for m in 0..phi.dim() {
            let r = phi.components[m].coeffs()[k] - lin.components[m].coeffs()[k] - w[m];
            worst = worst.max(r.norm());
        }
    }
    Ok(worst)
}

pub fn obstruction(dc: &DeformationComplex, phi: &BeltramiSeries) -> Result<ObstructionSeries> {
    let br = bracket_series(dc, phi)?;
    let u = dc.harmonic_basis(2);
    let mut components = Vec::with_capacity(u.ncols());
    for j in 0..u.ncols() {
        let mut s = TruncatedSeries::zero_on(phi.basis.clone());
        for (k, b) in br.iter().enumerate() {
            let w = u[(k, j)].conj();
            if w.norm() != 0.0 {
                s = s.checked_add(&b.scale(w))?;
            }
        }
        components.push(s);
    }
    Ok(ObstructionSeries { components, num_params: phi.num_params() })
}

/// `| dbar φ(t) - ½ [φ(t), φ(t)] |`.
pub fn maurer_cartan_residual(dc: &DeformationComplex, phi: &BeltramiSeries, t: &[C64]) -> Result<f64> {
    let v = CVec::from_vec(phi.evaluate(t)?);
    if v.len() != dc.dims[1] {
        return Err(Error::Shape("φ does not live in A^1".into()));
    }
    let r = &dc.dbar[1] * &v - dc.bracket_apply(&v, &v) * c64(0.5, 0.0);
    Ok(r.norm())
}

/// `max_k (max |coeff at degree k|)^{1/k}` over `k >= 1`.
pub fn growth_estimate(series: &[TruncatedSeries]) -> f64 {
    let mut g: f64 = 0.0;
    for s in series {
        for k in 1..=s.cutoff() {
            let m = s.degree_max_abs(k);
            if m > 0.0 {
                g = g.max(m.powf(1.0 / k as f64));
            }
        }
    }
    g
}

/// Heuristic trust radius `0.5 / growth`; infinite for the zero series.
pub fn trust_radius(phi: &BeltramiSeries) -> f64 {
    let g = growth_estimate(phi.components());
    if g == 0.0 {
        f64::INFINITY
    } else {
        0.5 / g
    }
}

#[derive(Clone, Debug)]
pub struct BaseSample {
    pub points: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
    pub candidates: usize,
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131,
];

/// Rotated Halton points in the polydisk of radius `r`.
pub fn polydisk_points(num_params: usize, radius: f64, count: usize, seed: u64) -> Result<Vec<Vec<C64>>> {
    if 2 * num_params > PRIMES.len() {
        return Err(Error::Input(format!("at most {} parameters supported for sampling", PRIMES.len() / 2)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..2 * num_params).map(|_| rng.gen::<f64>()).collect();
    Ok((0..count)
        .map(|i| {
            (0..num_params)
                .map(|j| {
                    let u = (halton(i as u64 + 1, PRIMES[2 * j]) + shift[2 * j]).fract();
                    let v = (halton(i as u64 + 1, PRIMES[2 * j + 1]) + shift[2 * j + 1]).fract();
                    C64::from_polar(radius * u.sqrt(), 2.0 * PI * v)
                })
                .collect()
        })
        .collect())
}

/// Sample points of `B = {obstruction = 0}` in the polydisk of radius `r`.
pub fn sample_base(obs: &ObstructionSeries, radius: f64, count: usize, tol: f64, seed: u64) -> Result<BaseSample> {
    let n = obs.num_params;
    let starts = polydisk_points(n, radius, count, seed)?;
    let jac: Vec<Vec<TruncatedSeries>> = obs
        .components
        .iter()
        .map(|c| (0..n).map(|j| c.partial_derivative(j)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let polished = par::map(&starts, |t0| polish(obs, &jac, t0, radius));
    let mut points = Vec::new();
    let mut residuals = Vec::new();
    for res in polished {
        let (t, r) = res?;
        if r < tol || r == 0.0 {
            points.push(t);
            residuals.push(r);
        }
    }
    Ok(BaseSample { points, residuals, candidates: count })
}

fn polish(obs: &ObstructionSeries, jac: &[Vec<TruncatedSeries>], t0: &[C64], radius: f64) -> Result<(Vec<C64>, f64)> {
    let mut t = t0.to_vec();
    let mut r = obs.max_abs_at(&t)?;
    if obs.components.is_empty() {
        return Ok((t, 0.0));
    }
    for _ in 0..30 {
        if r == 0.0 || r < 1e-15 {
            break;
        }
        let f = CVec::from_vec(obs.evaluate(&t)?);
        let pw = PowerTable::new(obs.components[0].basis(), &t)?;
        let j = CMat::from_fn(jac.len(), t.len(), |a, b| {
            jac[a][b].coeffs().iter().enumerate().map(|(i, c)| c * pw.monomial(i)).sum()
        });
        let Ok(pinv) = j.pseudo_inverse(1e-12) else { break };
        let step = pinv * f;
        let cand: Vec<C64> = t.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
        if cand.iter().any(|z| z.norm() > radius) {
            break;
        }
        let rc = obs.max_abs_at(&cand)?;
        if !(rc < r) {
            break;
        }
        t = cand;
        r = rc;
    }
    Ok((t, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::synthetic::obstructed_complex;

    fn theta2() -> CMat {
        let mut th = CMat::zeros(4, 2);
        th[(0, 0)] = c64(1.0, 0.0);
        th[(1, 1)] = c64(1.0, 0.0);
        th
    }

    #[test]
    fn obstructed_closed_form() {
        let dc = obstructed_complex();
        let phi = solve_phi(&dc, &theta2(), 4).unwrap();
        assert_eq!(phi.components()[3].coeff(&[2, 0]), c64(0.5, 0.0));
        assert!(phi.components()[3].truncated(1).is_zero(0.0));
        assert_eq!(recursion_defect(&dc, &theta2(), &phi).unwrap(), 0.0);
        let obs = obstruction(&dc, &phi).unwrap();
        assert_eq!(obs.components.len(), 1);
        assert!((obs.components[0].coeff(&[1, 1]).norm() - 2.0).abs() < 1e-14);
        assert_eq!(obs.min_degree(0.0), Some(2));
    }

    #[test]
    fn non_harmonic_theta_rejected() {
        let dc = obstructed_complex();
        let mut th = CMat::zeros(4, 1);
        th[(3, 0)] = c64(1.0, 0.0);
        assert!(matches!(solve_phi(&dc, &th, 2), Err(Error::Input(_))));
    }

    #[test]
    fn halton_is_in_unit_interval() {
        for i in 1..100 {
            let h = halton(i, 3);
            assert!((0.0..1.0).contains(&h));
        }
    }
}
