//! Truncated multivariate power series in `N` complex parameters.
//!
//! All series with the same `(N, D)` share one [`MonomialBasis`], which fixes
//! a graded ordering of the monomials of total degree at most `D` together
//! with a product table. Coefficients are stored densely in that order.
//!
//! Multi-indices are `Vec<u32>` of length `N`; variable indices in this API
//! are 0-based.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::{Error, Result, C64};

/// Coefficients smaller than this are treated as zero when comparing series
/// or reading off lowest degrees.
pub const MAGNITUDE_FLOOR: f64 = 1e-13;

/// Graded enumeration of the monomials in `N` variables of degree `<= D`.
#[derive(Debug)]
pub struct MonomialBasis {
    num_vars: usize,
    cutoff: usize,
    exponents: Vec<Vec<u32>>,
    degrees: Vec<usize>,
    /// `degree_end[k]` = number of monomials of degree `<= k`.
    degree_end: Vec<usize>,
    lookup: HashMap<Vec<u32>, usize>,
    products: OnceLock<Vec<Vec<u32>>>,
}

fn compositions(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

impl MonomialBasis {
    fn build(num_vars: usize, cutoff: usize) -> Self {
        let mut exponents = Vec::new();
        let mut degrees = Vec::new();
        let mut degree_end = Vec::with_capacity(cutoff + 1);
        for k in 0..=cutoff {
            if num_vars == 0 {
                if k == 0 {
                    exponents.push(Vec::new());
                    degrees.push(0);
                }
            } else {
                let mut block = Vec::new();
                compositions(k as u32, num_vars, &mut Vec::new(), &mut block);
                degrees.extend(std::iter::repeat_n(k, block.len()));
                exponents.extend(block);
            }
            degree_end.push(exponents.len());
        }
        let lookup = exponents.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        MonomialBasis {
            num_vars,
            cutoff,
            exponents,
            degrees,
            degree_end,
            lookup,
            products: OnceLock::new(),
        }
    }

    /// Shared basis for `(num_vars, cutoff)`.
    pub fn shared(num_vars: usize, cutoff: usize) -> Arc<MonomialBasis> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<MonomialBasis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((num_vars, cutoff))
            .or_insert_with(|| Arc::new(MonomialBasis::build(num_vars, cutoff)))
            .clone()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponent(&self, i: usize) -> &[u32] {
        &self.exponents[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn index_of(&self, exps: &[u32]) -> Option<usize> {
        self.lookup.get(exps).copied()
    }

    /// Index range of the monomials of exact degree `k`.
    pub fn degree_range(&self, k: usize) -> std::ops::Range<usize> {
        if k > self.cutoff {
            return self.len()..self.len();
        }
        let start = if k == 0 { 0 } else { self.degree_end[k - 1] };
        start..self.degree_end[k]
    }

    /// Number of monomials of degree at most `k`.
    pub fn prefix_len(&self, k: usize) -> usize {
        self.degree_end[k.min(self.cutoff)]
    }

    /// `table[i][j]` is the index of `m_i * m_j` for every `j` with
    /// `deg m_i + deg m_j <= D` (a prefix of the ordering).
    fn product_table(&self) -> &Vec<Vec<u32>> {
        self.products.get_or_init(|| {
            (0..self.len())
                .map(|i| {
                    let room = self.cutoff - self.degrees[i];
                    (0..self.prefix_len(room))
                        .map(|j| {
                            let e: Vec<u32> = self.exponents[i]
                                .iter()
                                .zip(&self.exponents[j])
                                .map(|(a, b)| a + b)
                                .collect();
                            self.lookup[&e] as u32
                        })
                        .collect()
                })
                .collect()
        })
    }

    /// Index of the product monomial, or `None` if it exceeds the cutoff.
    pub fn product_index(&self, i: usize, j: usize) -> Option<usize> {
        self.product_table()[i].get(j).map(|&k| k as usize)
    }

    /// Products of `m_i` with every admissible `m_j`, indexed by `j`.
    pub fn products_of(&self, i: usize) -> &[u32] {
        &self.product_table()[i]
    }

    /// Index of `m_i / t_var` together with the exponent of `t_var` in `m_i`.
    fn lower(&self, i: usize, var: usize) -> Option<(usize, u32)> {
        let e = &self.exponents[i];
        if e[var] == 0 {
            return None;
        }
        let mut f = e.clone();
        f[var] -= 1;
        Some((self.lookup[&f], e[var]))
    }
}

fn check_same(a: &MonomialBasis, b: &MonomialBasis) -> Result<()> {
    if a.num_vars != b.num_vars || a.cutoff != b.cutoff {
        return Err(Error::Shape(format!(
            "series over (N={}, D={}) and (N={}, D={})",
            a.num_vars, a.cutoff, b.num_vars, b.cutoff
        )));
    }
    Ok(())
}

/// Scalar truncated power series.
#[derive(Clone, Debug)]
pub struct TruncatedSeries {
    basis: Arc<MonomialBasis>,
    coeffs: Vec<C64>,
}

impl TruncatedSeries {
    pub fn zero(num_vars: usize, cutoff: usize) -> Self {
        Self::zero_on(MonomialBasis::shared(num_vars, cutoff))
    }

    pub fn zero_on(basis: Arc<MonomialBasis>) -> Self {
        let n = basis.len();
        TruncatedSeries { basis, coeffs: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn constant(num_vars: usize, cutoff: usize, c: C64) -> Self {
        let mut s = Self::zero(num_vars, cutoff);
        s.coeffs[0] = c;
        s
    }

    pub fn one(num_vars: usize, cutoff: usize) -> Self {
        Self::constant(num_vars, cutoff, C64::new(1.0, 0.0))
    }

    /// The coordinate function `t_var`.
    pub fn variable(num_vars: usize, cutoff: usize, var: usize) -> Result<Self> {
        if var >= num_vars {
            return Err(Error::Input(format!("variable {var} out of range for N={num_vars}")));
        }
        let mut s = Self::zero(num_vars, cutoff);
        if cutoff >= 1 {
            let mut e = vec![0; num_vars];
            e[var] = 1;
            let i = s.basis.index_of(&e).expect("degree-one monomial");
            s.coeffs[i] = C64::new(1.0, 0.0);
        }
        Ok(s)
    }

    /// Build from `(multi-index, coefficient)` pairs; repeated indices add up
    /// and terms above the cutoff are truncated away.
    pub fn from_terms<I>(num_vars: usize, cutoff: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, C64)>,
    {
        let mut s = Self::zero(num_vars, cutoff);
        for (e, c) in terms {
            if e.len() != num_vars {
                return Err(Error::Shape(format!("multi-index of length {} for N={num_vars}", e.len())));
            }
            if let Some(i) = s.basis.index_of(&e) {
                s.coeffs[i] += c;
            }
        }
        Ok(s)
    }

    pub fn from_coeffs(basis: Arc<MonomialBasis>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::Shape(format!("{} coefficients for {} monomials", coeffs.len(), basis.len())));
        }
        Ok(TruncatedSeries { basis, coeffs })
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn num_vars(&self) -> usize {
        self.basis.num_vars
    }

    pub fn cutoff(&self) -> usize {
        self.basis.cutoff
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// Coefficient of `t^exps`; zero for monomials above the cutoff.
    pub fn coeff(&self, exps: &[u32]) -> C64 {
        self.basis.index_of(exps).map_or(C64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn set_coeff(&mut self, exps: &[u32], c: C64) -> Result<()> {
        let i = self
            .basis
            .index_of(exps)
            .ok_or_else(|| Error::Input(format!("multi-index {exps:?} not in basis")))?;
        self.coeffs[i] = c;
        Ok(())
    }

    pub fn constant_term(&self) -> C64 {
        self.coeffs[0]
    }

    /// Non-negligible terms as `(multi-index, coefficient)`.
    pub fn terms(&self) -> Vec<(Vec<u32>, C64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > MAGNITUDE_FLOOR)
            .map(|(i, c)| (self.basis.exponent(i).to_vec(), *c))
            .collect()
    }

    /// Lowest total degree carrying a coefficient above `floor`; `None` for
    /// the zero series.
    pub fn min_degree(&self, floor: f64) -> Option<usize> {
        self.coeffs.iter().position(|c| c.norm() > floor).map(|i| self.basis.degree(i))
    }

    pub fn is_zero(&self, floor: f64) -> bool {
        self.min_degree(floor).is_none()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient modulus in degree `k`.
    pub fn degree_max_abs(&self, k: usize) -> f64 {
        self.coeffs[self.basis.degree_range(k)].iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Degree-`k` homogeneous part.
    pub fn homogeneous_part(&self, k: usize) -> Self {
        let mut s = Self::zero_on(self.basis.clone());
        let r = self.basis.degree_range(k);
        s.coeffs[r.clone()].copy_from_slice(&self.coeffs[r]);
        s
    }

    /// Drop every term of degree above `k`.
    pub fn truncated(&self, k: usize) -> Self {
        let mut s = self.clone();
        let keep = self.basis.prefix_len(k);
        for c in &mut s.coeffs[keep..] {
            *c = C64::new(0.0, 0.0);
        }
        s
    }

    pub fn scale(&self, c: C64) -> Self {
        TruncatedSeries { basis: self.basis.clone(), coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn conj_coeffs(&self) -> Self {
        TruncatedSeries { basis: self.basis.clone(), coeffs: self.coeffs.iter().map(|x| x.conj()).collect() }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        check_same(&self.basis, &other.basis)?;
        Ok(TruncatedSeries {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        check_same(&self.basis, &other.basis)?;
        Ok(TruncatedSeries {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    /// Truncated product. Every output coefficient is accumulated over
    /// unordered index pairs, so `a*b` and `b*a` agree bit for bit.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        check_same(&self.basis, &other.basis)?;
        let b = &self.basis;
        let (x, y) = (&self.coeffs, &other.coeffs);
        let mut out = vec![C64::new(0.0, 0.0); b.len()];
        for i in 0..b.len() {
            let prods = b.products_of(i);
            if let Some(&k) = prods.get(i) {
                out[k as usize] += x[i] * y[i];
            }
            for j in (i + 1)..prods.len() {
                let k = prods[j] as usize;
                out[k] += x[i] * y[j] + x[j] * y[i];
            }
        }
        Ok(TruncatedSeries { basis: b.clone(), coeffs: out })
    }

    /// `(1 + u)^{-1} = sum_k (-u)^k` for `u` with zero constant term, summed
    /// Horner-style as `r <- 1 - u r` repeated `D` times.
    pub fn neumann_inverse(u: &Self) -> Result<Self> {
        if u.constant_term().norm() > 0.0 {
            return Err(Error::Domain("Neumann inverse needs a series with zero constant term".into()));
        }
        let one = Self::one(u.num_vars(), u.cutoff());
        let mut r = one.clone();
        for _ in 0..u.cutoff() {
            r = one.checked_sub(&u.checked_mul(&r)?)?;
        }
        Ok(r)
    }

    /// Partial derivative in the 0-based variable `var`. The result keeps the
    /// same cutoff; its degree-`D` part is zero.
    pub fn partial_derivative(&self, var: usize) -> Result<Self> {
        if var >= self.num_vars() {
            return Err(Error::Input(format!("variable {var} out of range for N={}", self.num_vars())));
        }
        let mut out = Self::zero_on(self.basis.clone());
        for i in 0..self.basis.len() {
            if let Some((j, e)) = self.basis.lower(i, var) {
                out.coeffs[j] = self.coeffs[i] * e as f64;
            }
        }
        Ok(out)
    }

    /// Value at `t`.
    pub fn evaluate(&self, t: &[C64]) -> Result<C64> {
        let pw = PowerTable::new(&self.basis, t)?;
        Ok(self.coeffs.iter().enumerate().map(|(i, c)| c * pw.monomial(i)).sum())
    }

    /// Substitute `t_j = 0` for every `j` outside `keep`.
    pub fn restrict(&self, keep: &[bool]) -> Self {
        let mut s = self.clone();
        for i in 0..self.basis.len() {
            let e = self.basis.exponent(i);
            if e.iter().zip(keep).any(|(&x, &k)| x > 0 && !k) {
                s.coeffs[i] = C64::new(0.0, 0.0);
            }
        }
        s
    }

    /// Coefficientwise comparison with `|a - b| <= floor`.
    pub fn approx_eq(&self, other: &Self, floor: f64) -> bool {
        check_same(&self.basis, &other.basis).is_ok()
            && self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| (a - b).norm() <= floor)
    }
}

impl PartialEq for TruncatedSeries {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other, MAGNITUDE_FLOOR)
    }
}

macro_rules! series_op {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl $tr<&TruncatedSeries> for &TruncatedSeries {
            type Output = TruncatedSeries;
            fn $m(self, rhs: &TruncatedSeries) -> TruncatedSeries {
                self.$checked(rhs).expect("series operands over different bases")
            }
        }
        impl $tr<TruncatedSeries> for TruncatedSeries {
            type Output = TruncatedSeries;
            fn $m(self, rhs: TruncatedSeries) -> TruncatedSeries {
                (&self).$m(&rhs)
            }
        }
    };
}
series_op!(Add, add, checked_add);
series_op!(Sub, sub, checked_sub);
series_op!(Mul, mul, checked_mul);

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// Values of every basis monomial at a point.
pub struct PowerTable {
    values: Vec<C64>,
}

impl PowerTable {
    pub fn new(basis: &MonomialBasis, t: &[C64]) -> Result<Self> {
        if t.len() != basis.num_vars() {
            return Err(Error::Shape(format!("point of length {} for N={}", t.len(), basis.num_vars())));
        }
        let mut values = vec![C64::new(0.0, 0.0); basis.len()];
        values[0] = C64::new(1.0, 0.0);
        for i in 1..basis.len() {
            let e = basis.exponent(i);
            let var = e.iter().position(|&x| x > 0).expect("non-constant monomial");
            let (j, _) = basis.lower(i, var).expect("divisible");
            values[i] = values[j] * t[var];
        }
        Ok(PowerTable { values })
    }

    #[inline]
    pub fn monomial(&self, i: usize) -> C64 {
        self.values[i]
    }
}

/// Power series with matrix coefficients of a fixed shape.
#[derive(Clone, Debug)]
pub struct MatrixSeries {
    basis: Arc<MonomialBasis>,
    rows: usize,
    cols: usize,
    coeffs: Vec<DMatrix<C64>>,
}

fn mat_is_zero(m: &DMatrix<C64>) -> bool {
    m.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

impl MatrixSeries {
    pub fn zeros(basis: Arc<MonomialBasis>, rows: usize, cols: usize) -> Self {
        let coeffs = vec![DMatrix::zeros(rows, cols); basis.len()];
        MatrixSeries { basis, rows, cols, coeffs }
    }

    pub fn constant(basis: Arc<MonomialBasis>, m: DMatrix<C64>) -> Self {
        let mut s = Self::zeros(basis, m.nrows(), m.ncols());
        s.coeffs[0] = m;
        s
    }

    pub fn from_coeffs(basis: Arc<MonomialBasis>, coeffs: Vec<DMatrix<C64>>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::Shape(format!("{} coefficients for {} monomials", coeffs.len(), basis.len())));
        }
        let (rows, cols) = coeffs.first().map_or((0, 0), |m| m.shape());
        if coeffs.iter().any(|m| m.shape() != (rows, cols)) {
            return Err(Error::Shape("matrix coefficients of differing shapes".into()));
        }
        Ok(MatrixSeries { basis, rows, cols, coeffs })
    }

    /// `sum_m s_m * M_m` for scalar series `s_m` and constant matrices `M_m`.
    pub fn from_scalar_combination(
        basis: Arc<MonomialBasis>,
        rows: usize,
        cols: usize,
        parts: &[(&TruncatedSeries, &DMatrix<C64>)],
    ) -> Result<Self> {
        let mut out = Self::zeros(basis.clone(), rows, cols);
        for (s, m) in parts {
            check_same(&basis, s.basis())?;
            if m.shape() != (rows, cols) {
                return Err(Error::Shape(format!("expected {rows}x{cols}, got {:?}", m.shape())));
            }
            if mat_is_zero(m) {
                continue;
            }
            for (k, c) in s.coeffs().iter().enumerate() {
                if c.re != 0.0 || c.im != 0.0 {
                    out.coeffs[k] += *m * *c;
                }
            }
        }
        Ok(out)
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn coeffs(&self) -> &[DMatrix<C64>] {
        &self.coeffs
    }

    pub fn coeff(&self, exps: &[u32]) -> Option<&DMatrix<C64>> {
        self.basis.index_of(exps).map(|i| &self.coeffs[i])
    }

    pub fn coeff_mut(&mut self, i: usize) -> &mut DMatrix<C64> {
        &mut self.coeffs[i]
    }

    fn nonzero_indices(&self) -> Vec<usize> {
        (0..self.coeffs.len()).filter(|&i| !mat_is_zero(&self.coeffs[i])).collect()
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        check_same(&self.basis, &other.basis)?;
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "{}x{} times {}x{} series",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.basis.clone(), self.rows, other.cols);
        let right = other.nonzero_indices();
        for i in self.nonzero_indices() {
            let prods = self.basis.products_of(i);
            for &j in &right {
                if let Some(&k) = prods.get(j) {
                    out.coeffs[k as usize] += &self.coeffs[i] * &other.coeffs[j];
                }
            }
        }
        Ok(out)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        check_same(&self.basis, &other.basis)?;
        if self.shape() != other.shape() {
            return Err(Error::Shape("matrix series of differing shapes".into()));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(MatrixSeries { basis: self.basis.clone(), rows: self.rows, cols: self.cols, coeffs })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        MatrixSeries {
            basis: self.basis.clone(),
            rows: self.rows,
            cols: self.cols,
            coeffs: self.coeffs.iter().map(|m| m * c).collect(),
        }
    }

    /// `m * self` for a constant matrix `m`.
    pub fn left_mul(&self, m: &DMatrix<C64>) -> Result<Self> {
        if m.ncols() != self.rows {
            return Err(Error::Shape(format!("{}x{} times {}-row series", m.nrows(), m.ncols(), self.rows)));
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| if mat_is_zero(c) { DMatrix::zeros(m.nrows(), self.cols) } else { m * c })
            .collect();
        Ok(MatrixSeries { basis: self.basis.clone(), rows: m.nrows(), cols: self.cols, coeffs })
    }

    /// `self * m` for a constant matrix `m`.
    pub fn right_mul(&self, m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != self.cols {
            return Err(Error::Shape(format!("{}-col series times {}x{}", self.cols, m.nrows(), m.ncols())));
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| if mat_is_zero(c) { DMatrix::zeros(self.rows, m.ncols()) } else { c * m })
            .collect();
        Ok(MatrixSeries { basis: self.basis.clone(), rows: self.rows, cols: m.ncols(), coeffs })
    }

    /// Coefficientwise transpose.
    pub fn transpose(&self) -> Self {
        MatrixSeries {
            basis: self.basis.clone(),
            rows: self.cols,
            cols: self.rows,
            coeffs: self.coeffs.iter().map(|m| m.transpose()).collect(),
        }
    }

    pub fn entry(&self, r: usize, c: usize) -> TruncatedSeries {
        let coeffs = self.coeffs.iter().map(|m| m[(r, c)]).collect();
        TruncatedSeries { basis: self.basis.clone(), coeffs }
    }

    pub fn set_entry(&mut self, r: usize, c: usize, s: &TruncatedSeries) {
        for (m, v) in self.coeffs.iter_mut().zip(s.coeffs()) {
            m[(r, c)] = *v;
        }
    }

    pub fn partial_derivative(&self, var: usize) -> Result<Self> {
        if var >= self.basis.num_vars() {
            return Err(Error::Input(format!("variable {var} out of range")));
        }
        let mut out = Self::zeros(self.basis.clone(), self.rows, self.cols);
        for i in 0..self.basis.len() {
            if let Some((j, e)) = self.basis.lower(i, var) {
                out.coeffs[j] = &self.coeffs[i] * C64::new(e as f64, 0.0);
            }
        }
        Ok(out)
    }

    pub fn evaluate(&self, t: &[C64]) -> Result<DMatrix<C64>> {
        let pw = PowerTable::new(&self.basis, t)?;
        Ok(self.evaluate_with(&pw))
    }

    pub fn evaluate_with(&self, pw: &PowerTable) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (i, m) in self.coeffs.iter().enumerate() {
            if !mat_is_zero(m) {
                out += m * pw.monomial(i);
            }
        }
        out
    }

    pub fn truncated(&self, k: usize) -> Self {
        let mut s = self.clone();
        let keep = self.basis.prefix_len(k);
        for m in &mut s.coeffs[keep..] {
            m.fill(C64::new(0.0, 0.0));
        }
        s
    }

    /// Lowest degree with a coefficient entry above `floor`.
    pub fn min_degree(&self, floor: f64) -> Option<usize> {
        self.coeffs
            .iter()
            .position(|m| m.iter().any(|z| z.norm() > floor))
            .map(|i| self.basis.degree(i))
    }

    /// Largest entry modulus among coefficients of degree `<= k`.
    pub fn max_abs_up_to(&self, k: usize) -> f64 {
        self.coeffs[..self.basis.prefix_len(k)]
            .iter()
            .flat_map(|m| m.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn degree_max_abs(&self, k: usize) -> f64 {
        self.coeffs[self.basis.degree_range(k)]
            .iter()
            .flat_map(|m| m.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}
