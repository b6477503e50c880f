//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's exterior-algebra, period or series code.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use hodge_vhs::linalg::CMat;
use hodge_vhs::torus::TorusModel;
use hodge_vhs::C64;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Exterior form on `2d` generators: `0..d` are `dz`, `d..2d` are `dz̄`.
/// Keys are strictly increasing generator lists.
#[derive(Clone, Debug, Default)]
pub struct Form {
    pub terms: BTreeMap<Vec<usize>, C64>,
}

/// Sort a word by bubble sort, tracking the sign; `None` on repeats.
fn sort_word(word: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut w = word.to_vec();
    let mut sign = 1.0;
    for i in 0..w.len() {
        for j in 0..w.len() - 1 - i {
            if w[j] == w[j + 1] {
                return None;
            }
            if w[j] > w[j + 1] {
                w.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    if w.windows(2).any(|p| p[0] == p[1]) {
        return None;
    }
    Some((w, sign))
}

impl Form {
    pub fn scalar(z: C64) -> Self {
        let mut f = Form::default();
        f.terms.insert(Vec::new(), z);
        f
    }

    pub fn monomial(word: &[usize], z: C64) -> Self {
        let mut f = Form::default();
        if let Some((w, s)) = sort_word(word) {
            f.terms.insert(w, z * s);
        }
        f
    }

    pub fn add(&self, other: &Form) -> Form {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            *out.terms.entry(k.clone()).or_insert(c(0.0, 0.0)) += v;
        }
        out
    }

    pub fn scale(&self, z: C64) -> Form {
        Form { terms: self.terms.iter().map(|(k, v)| (k.clone(), v * z)).collect() }
    }

    pub fn wedge(&self, other: &Form) -> Form {
        let mut out = Form::default();
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                let word: Vec<usize> = a.iter().chain(b).copied().collect();
                if let Some((w, s)) = sort_word(&word) {
                    *out.terms.entry(w).or_insert(c(0.0, 0.0)) += x * y * s;
                }
            }
        }
        out
    }

    pub fn coeff(&self, word: &[usize]) -> C64 {
        self.terms.get(word).copied().unwrap_or(c(0.0, 0.0))
    }

    /// Complex conjugate: conjugate coefficients and swap `dz_a <-> dz̄_a`.
    pub fn conj(&self, d: usize) -> Form {
        let mut out = Form::default();
        for (k, v) in &self.terms {
            let word: Vec<usize> = k.iter().map(|&g| if g < d { g + d } else { g - d }).collect();
            let (w, s) = sort_word(&word).unwrap();
            *out.terms.entry(w).or_insert(c(0.0, 0.0)) += v.conj() * s;
        }
        out
    }

    /// Derivation substituting `dz_a -> dz̄_b` (a contraction with `∂_a ⊗ dz̄_b`).
    pub fn contract(&self, d: usize, a: usize, b: usize) -> Form {
        let mut out = Form::default();
        for (k, v) in &self.terms {
            if let Some(pos) = k.iter().position(|&g| g == a) {
                let mut word = k.clone();
                word[pos] = d + b;
                if let Some((w, s)) = sort_word(&word) {
                    *out.terms.entry(w).or_insert(c(0.0, 0.0)) += v * s;
                }
            }
        }
        out
    }
}

pub fn one_form(d: usize, dz: &[C64], dzb: &[C64]) -> Form {
    let mut f = Form::default();
    for a in 0..d {
        if dz[a] != c(0.0, 0.0) {
            f.terms.insert(vec![a], dz[a]);
        }
        if dzb[a] != c(0.0, 0.0) {
            f.terms.insert(vec![d + a], dzb[a]);
        }
    }
    f
}

/// `√-1 sum g[a][b] dz_a ∧ dz̄_b`.
pub fn kahler(d: usize, g: &CMat) -> Form {
    let mut f = Form::default();
    for a in 0..d {
        for b in 0..d {
            f = f.add(&Form::monomial(&[a, d + b], g[(a, b)] * I));
        }
    }
    f
}

/// All increasing index lists of length `k` from `0..n`.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for first in 0..=n - k {
        for rest in combinations(n - first - 1, k - 1) {
            let mut v = vec![first];
            v.extend(rest.into_iter().map(|x| x + first + 1));
            out.push(v);
        }
    }
    out
}

/// Basis words of weight `n`: `dz_I ∧ dz̄_J`, `|I| + |J| = n`, with `|J|`.
pub fn weight_words(d: usize, n: usize) -> Vec<(Vec<usize>, usize)> {
    let mut out = Vec::new();
    for q in 0..=n.min(d) {
        if n - q > d {
            continue;
        }
        for i in combinations(d, n - q) {
            for j in combinations(d, q) {
                let mut w = i.clone();
                w.extend(j.iter().map(|b| b + d));
                out.push((w, q));
            }
        }
    }
    out
}

/// Coefficients of `form` in the deformed coframe `θ^I ∧ conj(θ)^J` with
/// `θ^a = dz_a + sum_b φ[a][b] dz̄_b`. Keys are the undeformed words.
pub fn coframe_expansion(d: usize, n: usize, phi: &CMat, form: &Form) -> Vec<(Vec<usize>, usize, C64)> {
    let words = weight_words(d, n);
    let theta: Vec<Form> = (0..d)
        .map(|a| {
            let mut dz = vec![c(0.0, 0.0); d];
            dz[a] = c(1.0, 0.0);
            let dzb: Vec<C64> = (0..d).map(|b| phi[(a, b)]).collect();
            one_form(d, &dz, &dzb)
        })
        .collect();
    let theta_bar: Vec<Form> = theta.iter().map(|t| t.conj(d)).collect();
    let index: HashMap<Vec<usize>, usize> = words.iter().enumerate().map(|(k, (w, _))| (w.clone(), k)).collect();
    let m = words.len();
    let mut frame = DMatrix::<C64>::zeros(m, m);
    for (col, (w, _)) in words.iter().enumerate() {
        let mut f = Form::scalar(c(1.0, 0.0));
        for &g in w {
            f = f.wedge(if g < d { &theta[g] } else { &theta_bar[g - d] });
        }
        for (k, v) in &f.terms {
            frame[(index[k], col)] += v;
        }
    }
    let mut rhs = DVector::<C64>::zeros(m);
    for (k, v) in &form.terms {
        if let Some(&r) = index.get(k) {
            rhs[r] += v;
        }
    }
    let sol = frame.lu().solve(&rhs).expect("deformed coframe is a basis for |φ| < 1");
    words.into_iter().enumerate().map(|(k, (w, q))| (w, q, sol[k])).collect()
}

/// Brute-force test that a real class `form` of weight `2p` is of type
/// `(p,p)` on `X_φ`: largest coframe coefficient off type `(p,p)`.
pub fn off_type_pp(d: usize, p: usize, phi: &CMat, form: &Form) -> f64 {
    coframe_expansion(d, 2 * p, phi, form)
        .into_iter()
        .filter(|(_, q, _)| *q != p)
        .map(|(_, _, z)| z.norm())
        .fold(0.0, f64::max)
}

/// Hodge-map oracle on a torus: the unique real class `σ + x + conj(x)`
/// with `x` supported on `|J| < p` whose coframe components with `|J| < p`
/// vanish. Solved as a real linear system.
pub fn hodge_map_oracle(d: usize, p: usize, phi: &CMat, sigma: &Form) -> Form {
    let n = 2 * p;
    let unknowns: Vec<Vec<usize>> = weight_words(d, n).into_iter().filter(|(_, q)| *q < p).map(|(w, _)| w).collect();
    let m = unknowns.len();
    let build = |x: &[C64]| -> Form {
        let mut f = sigma.clone();
        for (w, z) in unknowns.iter().zip(x) {
            let part = Form::monomial(w, *z);
            f = f.add(&part).add(&part.conj(d));
        }
        f
    };
    let residual = |x: &[C64]| -> Vec<C64> {
        coframe_expansion(d, n, phi, &build(x)).into_iter().filter(|(_, q, _)| *q < p).map(|(_, _, z)| z).collect()
    };
    let zero = vec![c(0.0, 0.0); m];
    let f0 = residual(&zero);
    let rows = f0.len();
    let mut a = DMatrix::<f64>::zeros(2 * rows, 2 * m);
    let mut b = DVector::<f64>::zeros(2 * rows);
    for r in 0..rows {
        b[r] = -f0[r].re;
        b[rows + r] = -f0[r].im;
    }
    for k in 0..2 * m {
        let mut x = zero.clone();
        x[k % m] = if k < m { c(1.0, 0.0) } else { I };
        let fk = residual(&x);
        for r in 0..rows {
            let diff = fk[r] - f0[r];
            a[(r, k)] = diff.re;
            a[(rows + r, k)] = diff.im;
        }
    }
    let sol = a.svd(true, true).solve(&b, 1e-14).unwrap();
    let x: Vec<C64> = (0..m).map(|k| c(sol[k], sol[m + k])).collect();
    build(&x)
}

/// Library form-space vector of an oracle form.
pub fn to_library_vector(tm: &TorusModel, f: &Form) -> DVector<C64> {
    let d = tm.d();
    let mut v = DVector::zeros(tm.fm().dim());
    for (k, z) in &f.terms {
        let mask: u64 = k.iter().map(|&g| 1u64 << g).sum();
        if let Some(pos) = tm.position(mask) {
            v[pos] += z;
        } else {
            assert!(z.norm() == 0.0 || k.len() != tm.spec.weight, "word {k:?} missing for d={d}");
        }
    }
    v
}

pub fn from_library_vector(tm: &TorusModel, v: &DVector<C64>) -> Form {
    let d = tm.d();
    let mut f = Form::default();
    for (pos, mask) in tm.all_monomials().into_iter().enumerate() {
        let word: Vec<usize> = (0..2 * d).filter(|g| mask & (1 << g) != 0).collect();
        f = f.add(&Form::monomial(&word, v[pos]));
    }
    f
}

pub fn max_diff(a: &Form, b: &Form) -> f64 {
    a.add(&b.scale(c(-1.0, 0.0))).terms.values().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn random_hermitian_pd<R: Rng>(rng: &mut R, d: usize) -> CMat {
    let a = CMat::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    a.adjoint() * &a + CMat::identity(d, d) * c(0.2, 0.0)
}

pub fn random_cmat<R: Rng>(rng: &mut R, r: usize, cc: usize, scale: f64) -> CMat {
    CMat::from_fn(r, cc, |_, _| c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
}

/// Largest singular value via the Hermitian eigenvalues of `m^H m`.
pub fn op_norm(m: &CMat) -> f64 {
    let h = m.adjoint() * m;
    h.symmetric_eigenvalues().iter().fold(0.0_f64, |a, &x| a.max(x)).sqrt()
}

/// Naive product of sparse multivariate series truncated at total degree `cut`.
pub fn naive_product(a: &[(Vec<u32>, C64)], b: &[(Vec<u32>, C64)], cut: u32) -> BTreeMap<Vec<u32>, C64> {
    let mut out = BTreeMap::new();
    for (ea, x) in a {
        for (eb, y) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(p, q)| p + q).collect();
            if e.iter().sum::<u32>() <= cut {
                *out.entry(e).or_insert(c(0.0, 0.0)) += x * y;
            }
        }
    }
    out
}
