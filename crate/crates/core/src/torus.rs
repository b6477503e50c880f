//! Complex tori `C^d / (Z^d + τ Z^d)`: harmonic forms are the constant forms,
//! `T = 0`, the bracket vanishes and every operator has a closed form.
//!
//! Exterior monomials are bitmasks over `2d` generators: bit `a` is `dz_a`,
//! bit `d + b` is `dz̄_b`, and the canonical order puts every `dz` before
//! every `dz̄`. Block `q` of the weight-`n` form space is spanned by
//! `dz_I ∧ dz̄_J` with `|I| = n - q`, `|J| = q`, ordered by `I` then `J`
//! (subsets in lexicographic order).
//!
//! `A^1` has basis `∂_a ⊗ dz̄_b` with index `m = a d + b`, so a constant
//! Beltrami differential is the matrix `φ[a][b]`.

use std::collections::HashMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::hodgemap::HodgeClassVector;
use crate::kuranishi::BeltramiSeries;
use crate::linalg::{self, CMat, CVec};
use crate::model::{AdaptedBasis, DeformationComplex, FormModel, JsonMatrix, Model};
use crate::series::{MonomialBasis, TruncatedSeries};
use crate::{c64, Error, Result, C64};

/// Sign of `a ∧ b` reordered canonically, or `None` if they share a generator.
pub fn wedge_sign(a: u64, b: u64) -> Option<f64> {
    if a & b != 0 {
        return None;
    }
    let mut inv = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        inv += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    Some(if inv.is_multiple_of(2) { 1.0 } else { -1.0 })
}

/// Sort a word of generators into canonical order: `(sign, mask)`, or `None`
/// if a generator repeats.
pub fn canonical(word: &[usize]) -> Option<(f64, u64)> {
    let mut mask = 0u64;
    let mut sign = 1.0;
    for &g in word {
        let s = wedge_sign(mask, 1u64 << g)?;
        sign *= s;
        mask |= 1u64 << g;
    }
    Some((sign, mask))
}

/// Increasing `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Dense element of the exterior algebra on `2d` generators.
#[derive(Clone, Debug)]
pub struct ExtForm {
    d: usize,
    coeffs: Vec<C64>,
}

impl ExtForm {
    pub fn zero(d: usize) -> Self {
        ExtForm { d, coeffs: vec![C64::new(0.0, 0.0); 1 << (2 * d)] }
    }

    pub fn one(d: usize) -> Self {
        let mut f = Self::zero(d);
        f.coeffs[0] = C64::new(1.0, 0.0);
        f
    }

    /// One-form `sum_a u[a] dz_a + sum_b w[b] dz̄_b`.
    pub fn one_form(d: usize, dz: &[C64], dzbar: &[C64]) -> Self {
        let mut f = Self::zero(d);
        for a in 0..d {
            f.coeffs[1 << a] = dz[a];
            f.coeffs[1 << (d + a)] = dzbar[a];
        }
        f
    }

    pub fn coeff(&self, mask: u64) -> C64 {
        self.coeffs[mask as usize]
    }

    pub fn wedge(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.d);
        for (a, x) in self.coeffs.iter().enumerate() {
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for (b, y) in other.coeffs.iter().enumerate() {
                if y.re == 0.0 && y.im == 0.0 {
                    continue;
                }
                if let Some(s) = wedge_sign(a as u64, b as u64) {
                    out.coeffs[a | b] += x * y * s;
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TorusSpec {
    pub d: usize,
    /// Period matrix `τ`; only used for the rational structure.
    pub tau: JsonMatrix,
    pub weight: usize,
}

impl TorusSpec {
    /// Square torus `τ = i I`.
    pub fn square(d: usize, weight: usize) -> Self {
        let tau = CMat::identity(d, d) * c64(0.0, 1.0);
        TorusSpec { d, tau: JsonMatrix::from_matrix(&tau), weight }
    }

    pub fn tau_matrix(&self) -> Result<CMat> {
        let t = self.tau.to_matrix()?;
        if t.shape() != (self.d, self.d) {
            return Err(Error::Shape(format!("tau must be {0}x{0}", self.d)));
        }
        Ok(t)
    }
}

/// Coordinate subtorus `{z_i = 0, i ∈ S}` (0-based indices).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubtorusModel {
    pub coords: Vec<usize>,
}

impl SubtorusModel {
    pub fn codim(&self) -> usize {
        self.coords.len()
    }
}

/// The built torus model with its monomial bookkeeping.
#[derive(Clone, Debug)]
pub struct TorusModel {
    pub spec: TorusSpec,
    pub model: Model,
    /// Monomial masks of each block, in basis order.
    pub monomials: Vec<Vec<u64>>,
    index: HashMap<u64, usize>,
}

pub fn build_torus_model(spec: &TorusSpec) -> Result<TorusModel> {
    let d = spec.d;
    let n = spec.weight;
    if d == 0 || d > 16 {
        return Err(Error::Input(format!("torus dimension d={d} out of range")));
    }
    if n > 2 * d {
        return Err(Error::Input(format!("weight {n} exceeds 2d = {}", 2 * d)));
    }
    let mut monomials = Vec::with_capacity(n + 1);
    let mut labels = Vec::with_capacity(n + 1);
    for q in 0..=n {
        let p = n - q;
        let mut block = Vec::new();
        let mut lab = Vec::new();
        for i in subsets(d, p) {
            for j in subsets(d, q) {
                let mask = i.iter().map(|&a| 1u64 << a).sum::<u64>() + j.iter().map(|&b| 1u64 << (d + b)).sum::<u64>();
                block.push(mask);
                lab.push(monomial_label(d, mask));
            }
        }
        monomials.push(block);
        labels.push(lab);
    }
    let mut index = HashMap::new();
    let mut pos = 0;
    for block in &monomials {
        for &m in block {
            index.insert(m, pos);
            pos += 1;
        }
    }
    let dim = pos;
    let all: Vec<u64> = monomials.iter().flatten().copied().collect();

    let mut contractions = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let mut c = CMat::zeros(dim, dim);
            for (col, &m) in all.iter().enumerate() {
                if let Some((s, img)) = contract_monomial(d, m, a, b) {
                    c[(index[&img], col)] += c64(s, 0.0);
                }
            }
            contractions.push(c);
        }
    }
    let mut conj = CMat::zeros(dim, dim);
    for (col, &m) in all.iter().enumerate() {
        let (s, img) = conjugate_monomial(d, m);
        conj[(index[&img], col)] = c64(s, 0.0);
    }
    let block_dims: Vec<usize> = monomials.iter().map(Vec::len).collect();
    let harmonic = block_dims.iter().map(|&k| CMat::identity(k, k)).collect();
    let fm = FormModel::new(
        n,
        block_dims,
        CMat::identity(dim, dim),
        CMat::zeros(dim, dim),
        contractions,
        conj,
        harmonic,
    )?;
    let ab = AdaptedBasis::from_model(&fm, Some(labels))?;
    let dc = DeformationComplex::flat([d, d * d, d * binomial(d, 2)]);
    let theta = CMat::identity(d * d, d * d);
    let model = Model::new(dc, fm, ab, Some(theta))?;
    // validate the lattice data up front
    rational_structure(spec)?;
    Ok(TorusModel { spec: spec.clone(), model, monomials, index })
}

fn monomial_label(d: usize, mask: u64) -> String {
    let mut parts = Vec::new();
    for g in 0..2 * d {
        if mask & (1 << g) != 0 {
            parts.push(if g < d { format!("dz{}", g + 1) } else { format!("dzb{}", g - d + 1) });
        }
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("^")
    }
}

fn generators(mask: u64) -> Vec<usize> {
    (0..64).filter(|g| mask & (1 << g) != 0).collect()
}

/// `C_ab` (derivation with `dz_a -> dz̄_b`) on a canonical monomial.
fn contract_monomial(d: usize, mask: u64, a: usize, b: usize) -> Option<(f64, u64)> {
    if mask & (1 << a) == 0 {
        return None;
    }
    let word: Vec<usize> = generators(mask).into_iter().map(|g| if g == a { d + b } else { g }).collect();
    canonical(&word)
}

/// Conjugate of a canonical monomial: `dz <-> dz̄` generator-wise.
fn conjugate_monomial(d: usize, mask: u64) -> (f64, u64) {
    let word: Vec<usize> = generators(mask).into_iter().map(|g| if g < d { g + d } else { g - d }).collect();
    canonical(&word).expect("conjugation is a bijection on generators")
}

impl TorusModel {
    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn fm(&self) -> &FormModel {
        &self.model.fm
    }

    pub fn ab(&self) -> &AdaptedBasis {
        &self.model.ab
    }

    /// Position of a monomial in the full form space.
    pub fn position(&self, mask: u64) -> Option<usize> {
        self.index.get(&mask).copied()
    }

    pub fn all_monomials(&self) -> Vec<u64> {
        self.monomials.iter().flatten().copied().collect()
    }

    /// Form-space vector of an exterior form (components off the weight are dropped).
    pub fn vector_of(&self, f: &ExtForm) -> CVec {
        CVec::from_iterator(self.fm().dim(), self.all_monomials().into_iter().map(|m| f.coeff(m)))
    }

    /// Columns: `θ^I ∧ conj(θ)^J` for each basis monomial, expanded in the
    /// undeformed basis, with `θ^a = dz_a + sum_b φ[a][b] dz̄_b` and
    /// `conj(θ)^b = dz̄_b + sum_k conj(φ[b][k]) dz_k`.
    pub fn deformed_frame(&self, phi: &CMat) -> Result<CMat> {
        let d = self.d();
        if phi.shape() != (d, d) {
            return Err(Error::Shape(format!("Beltrami matrix must be {d}x{d}")));
        }
        let zero = vec![C64::new(0.0, 0.0); d];
        let theta: Vec<ExtForm> = (0..d)
            .map(|a| {
                let mut dz = zero.clone();
                dz[a] = c64(1.0, 0.0);
                let dzb: Vec<C64> = (0..d).map(|b| phi[(a, b)]).collect();
                ExtForm::one_form(d, &dz, &dzb)
            })
            .collect();
        let theta_bar: Vec<ExtForm> = (0..d)
            .map(|b| {
                let mut dzb = zero.clone();
                dzb[b] = c64(1.0, 0.0);
                let dz: Vec<C64> = (0..d).map(|k| phi[(b, k)].conj()).collect();
                ExtForm::one_form(d, &dz, &dzb)
            })
            .collect();
        let cols: Vec<CVec> = self
            .all_monomials()
            .into_iter()
            .map(|m| {
                let mut f = ExtForm::one(d);
                for g in generators(m) {
                    f = f.wedge(if g < d { &theta[g] } else { &theta_bar[g - d] });
                }
                self.vector_of(&f)
            })
            .collect();
        Ok(CMat::from_columns(&cols))
    }

    /// Form vector of `ω_g = √-1 sum g[a][b] dz_a ∧ dz̄_b` (weight 2 only).
    pub fn kahler_form(&self, g: &CMat) -> Result<CVec> {
        let d = self.d();
        if self.spec.weight != 2 || g.shape() != (d, d) {
            return Err(Error::Precondition("Kähler form needs a weight-2 model and a dxd metric".into()));
        }
        let mut v = CVec::zeros(self.fm().dim());
        for a in 0..d {
            for b in 0..d {
                let mask = (1u64 << a) | (1u64 << (d + b));
                v[self.index[&mask]] += g[(a, b)] * c64(0.0, 1.0);
            }
        }
        Ok(v)
    }
}

/// `σ_Z = ∧_{i∈S} (√-1 dz_i ∧ dz̄_i)` as a class of weight `2|S|`.
pub fn poincare_dual(tm: &TorusModel, z: &SubtorusModel) -> Result<HodgeClassVector> {
    let d = tm.d();
    let p = z.codim();
    if p == 0 {
        return Err(Error::Input("subtorus index set must be nonempty".into()));
    }
    let mut s = z.coords.clone();
    s.sort_unstable();
    s.dedup();
    if s.len() != p || s.iter().any(|&i| i >= d) {
        return Err(Error::Input(format!("invalid coordinate subset {:?} for d={d}", z.coords)));
    }
    if tm.spec.weight != 2 * p {
        return Err(Error::Precondition(format!("σ_Z has weight {}, model has weight {}", 2 * p, tm.spec.weight)));
    }
    let mut f = ExtForm::one(d);
    for &i in &s {
        let mut dz = vec![C64::new(0.0, 0.0); d];
        dz[i] = c64(1.0, 0.0);
        let mut dzb = vec![C64::new(0.0, 0.0); d];
        dzb[i] = c64(1.0, 0.0);
        let a = ExtForm::one_form(d, &dz, &vec![C64::new(0.0, 0.0); d]);
        let b = ExtForm::one_form(d, &vec![C64::new(0.0, 0.0); d], &dzb);
        f = f.wedge(&a).wedge(&b);
        for c in &mut f.coeffs {
            *c *= c64(0.0, 1.0);
        }
    }
    HodgeClassVector::from_form_vector(tm.fm(), &tm.vector_of(&f))
}

/// Change of basis between the complex monomials and the rational `dx` basis.
#[derive(Clone, Debug)]
pub struct RationalStructure {
    /// Rows: `dz_j`, then `dz̄_j`, in the `dx` basis.
    pub one_forms: CMat,
    /// `minors[c][r]`: coefficient of `dx_R` in complex monomial `c`.
    pub minors: CMat,
    minors_t_inv: CMat,
}

pub fn rational_structure(spec: &TorusSpec) -> Result<RationalStructure> {
    let d = spec.d;
    let tau = spec.tau_matrix()?;
    let im = tau.map(|z| c64(z.im, 0.0));
    let s = linalg::singular_values(&im);
    if s.last().is_none_or(|&x| x <= 1e-12 * s[0].max(1.0)) {
        return Err(Error::Domain("Im(tau) is singular; no rational structure".into()));
    }
    let mut p = CMat::zeros(2 * d, 2 * d);
    for j in 0..d {
        p[(j, j)] = c64(1.0, 0.0);
        p[(d + j, j)] = c64(1.0, 0.0);
        for k in 0..d {
            p[(j, d + k)] = tau[(j, k)];
            p[(d + j, d + k)] = tau[(j, k)].conj();
        }
    }
    let n = spec.weight;
    // complex monomials in form-space order
    let mut complex = Vec::new();
    for q in 0..=n {
        for i in subsets(d, n - q) {
            for j in subsets(d, q) {
                let mut w = i.clone();
                w.extend(j.iter().map(|b| d + b));
                complex.push(w);
            }
        }
    }
    let rational = subsets(2 * d, n);
    let minors = CMat::from_fn(complex.len(), rational.len(), |c, r| {
        let sub = CMat::from_fn(n, n, |x, y| p[(complex[c][x], rational[r][y])]);
        if n == 0 {
            c64(1.0, 0.0)
        } else {
            sub.determinant()
        }
    });
    let minors_t_inv = linalg::inverse(&minors.transpose())?;
    Ok(RationalStructure { one_forms: p, minors, minors_t_inv })
}

impl RationalStructure {
    /// Rational coordinates of a form-space vector.
    pub fn to_rational(&self, v: &CVec) -> CVec {
        self.minors.transpose() * v
    }

    pub fn from_rational(&self, r: &CVec) -> CVec {
        &self.minors_t_inv * r
    }
}

/// Constant-coefficient family `φ(t) = sum_k t^{e_k} M_k` of torus Beltrami
/// differentials.
#[derive(Clone, Debug)]
pub struct TorusFamily {
    pub d: usize,
    pub num_params: usize,
    pub terms: Vec<(Vec<u32>, CMat)>,
}

impl TorusFamily {
    /// `φ(t) = sum_i t_i M_i`.
    pub fn linear(d: usize, mats: Vec<CMat>) -> Result<Self> {
        let n = mats.len();
        let terms = mats
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                if m.shape() != (d, d) {
                    return Err(Error::Shape(format!("family matrix must be {d}x{d}")));
                }
                let mut e = vec![0; n];
                e[i] = 1;
                Ok((e, m))
            })
            .collect::<Result<_>>()?;
        Ok(TorusFamily { d, num_params: n, terms })
    }

    /// All `d²` directions: `t_{ab}` multiplies `E_ab`, parameter index `a d + b`.
    pub fn full(d: usize) -> Self {
        let mats = (0..d * d)
            .map(|m| {
                let mut e = CMat::zeros(d, d);
                e[(m / d, m % d)] = c64(1.0, 0.0);
                e
            })
            .collect();
        Self::linear(d, mats).expect("square unit matrices")
    }

    pub fn at(&self, t: &[C64]) -> Result<CMat> {
        if t.len() != self.num_params {
            return Err(Error::Shape(format!("point of length {} for {} parameters", t.len(), self.num_params)));
        }
        let mut out = CMat::zeros(self.d, self.d);
        for (e, m) in &self.terms {
            let mut c = c64(1.0, 0.0);
            for (x, &k) in t.iter().zip(e) {
                c *= x.powu(k);
            }
            out += m * c;
        }
        Ok(out)
    }

    pub fn to_beltrami(&self, cutoff: usize) -> Result<BeltramiSeries> {
        let basis = MonomialBasis::shared(self.num_params, cutoff);
        let mut comps = vec![TruncatedSeries::zero_on(basis.clone()); self.d * self.d];
        for (e, m) in &self.terms {
            if e.len() != self.num_params {
                return Err(Error::Shape("family exponent of wrong length".into()));
            }
            if e.iter().sum::<u32>() == 0 {
                return Err(Error::Input("Beltrami family must vanish at t = 0".into()));
            }
            let Some(k) = basis.index_of(e) else { continue };
            for a in 0..self.d {
                for b in 0..self.d {
                    comps[a * self.d + b].coeffs_mut()[k] += m[(a, b)];
                }
            }
        }
        BeltramiSeries::new(comps)
    }
}

/// Constant Beltrami matrix as an `A^1` coefficient vector.
pub fn phi_coeffs(phi: &CMat) -> Vec<C64> {
    let d = phi.nrows();
    (0..d * d).map(|m| phi[(m / d, m % d)]).collect()
}

pub fn phi_matrix(d: usize, coeffs: &[C64]) -> CMat {
    CMat::from_fn(d, d, |a, b| coeffs[a * d + b])
}

/// Column vector of the standard basis of the form space.
pub fn unit(dim: usize, i: usize) -> CVec {
    let mut v = DVector::zeros(dim);
    v[i] = c64(1.0, 0.0);
    v
}
