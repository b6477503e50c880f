//! Finite-dimensional models of the deformation complex and of the harmonic
//! theory of forms.
//!
//! Block `q` of the form space `W` holds forms of type `(n-q, q)`, so the
//! harmonic block `q` is `η_(q)`. `T` lowers `q` by one and every contraction
//! `C_m` raises it by one. Conjugation is antilinear: `J(v) = conj_matrix * conj(v)`.
//! The Hermitian product is `(v, w) = w^H G v`.

mod file;
pub mod synthetic;

pub use file::{JsonMatrix, ModelFile};

use nalgebra::DVector;
use serde::Serialize;

use crate::linalg::{self, CMat, CVec};
use crate::{Error, Result, C64};

/// Default residual tolerance for model validation.
pub const VALIDATION_TOL: f64 = 1e-10;

/// Deformation complex `A^0 -> A^1 -> A^2` with its Hodge decomposition and
/// graded bracket.
#[derive(Clone, Debug)]
pub struct DeformationComplex {
    pub dims: [usize; 3],
    /// `dbar[0]: A^0 -> A^1`, `dbar[1]: A^1 -> A^2`.
    pub dbar: [CMat; 2],
    /// `dbar_star[0]: A^1 -> A^0`, `dbar_star[1]: A^2 -> A^1`.
    pub dbar_star: [CMat; 2],
    pub green: [CMat; 3],
    pub harmonic: [CMat; 3],
    /// `[a, b]_k = a^T bracket[k] b` for `k` indexing the basis of `A^2`.
    pub bracket: Vec<CMat>,
}

fn expect_shape(name: &str, m: &CMat, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Shape(format!("{name}: expected {rows}x{cols}, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

impl DeformationComplex {
    pub fn new(
        dims: [usize; 3],
        dbar: [CMat; 2],
        dbar_star: [CMat; 2],
        green: [CMat; 3],
        harmonic: [CMat; 3],
        bracket: Vec<CMat>,
    ) -> Result<Self> {
        expect_shape("dbar0", &dbar[0], dims[1], dims[0])?;
        expect_shape("dbar1", &dbar[1], dims[2], dims[1])?;
        expect_shape("dbar_star0", &dbar_star[0], dims[0], dims[1])?;
        expect_shape("dbar_star1", &dbar_star[1], dims[1], dims[2])?;
        for q in 0..3 {
            expect_shape(&format!("green{q}"), &green[q], dims[q], dims[q])?;
            expect_shape(&format!("harmonic{q}"), &harmonic[q], dims[q], dims[q])?;
        }
        if bracket.len() != dims[2] {
            return Err(Error::Shape(format!("bracket has {} components, A^2 has dim {}", bracket.len(), dims[2])));
        }
        for (k, b) in bracket.iter().enumerate() {
            expect_shape(&format!("bracket{k}"), b, dims[1], dims[1])?;
        }
        Ok(DeformationComplex { dims, dbar, dbar_star, green, harmonic, bracket })
    }

    /// The complex with all operators zero and `H = I` (no differentials).
    pub fn flat(dims: [usize; 3]) -> Self {
        let z = |r, c| CMat::zeros(r, c);
        DeformationComplex {
            dims,
            dbar: [z(dims[1], dims[0]), z(dims[2], dims[1])],
            dbar_star: [z(dims[0], dims[1]), z(dims[1], dims[2])],
            green: [z(dims[0], dims[0]), z(dims[1], dims[1]), z(dims[2], dims[2])],
            harmonic: [
                CMat::identity(dims[0], dims[0]),
                CMat::identity(dims[1], dims[1]),
                CMat::identity(dims[2], dims[2]),
            ],
            bracket: vec![z(dims[1], dims[1]); dims[2]],
        }
    }

    /// `[a, b]` for `a, b` in `A^1`.
    pub fn bracket_apply(&self, a: &CVec, b: &CVec) -> CVec {
        CVec::from_iterator(self.dims[2], self.bracket.iter().map(|m| (a.transpose() * m * b)[(0, 0)]))
    }

    /// Laplacian on `A^q`.
    pub fn laplacian(&self, q: usize) -> CMat {
        match q {
            0 => &self.dbar_star[0] * &self.dbar[0],
            1 => &self.dbar[0] * &self.dbar_star[0] + &self.dbar_star[1] * &self.dbar[1],
            _ => &self.dbar[1] * &self.dbar_star[1],
        }
    }

    /// Orthonormal basis (columns) of the harmonic space in `A^q`.
    pub fn harmonic_basis(&self, q: usize) -> CMat {
        let h = &self.harmonic[q];
        if h.nrows() == 0 {
            return CMat::zeros(0, 0);
        }
        let herm = (h + h.adjoint()).scale(0.5);
        let eig = herm.symmetric_eigen();
        let cols: Vec<CVec> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.5)
            .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
            .collect();
        if cols.is_empty() {
            CMat::zeros(h.nrows(), 0)
        } else {
            CMat::from_columns(&cols)
        }
    }
}

/// Finite model of the forms of weight `n`.
#[derive(Clone, Debug)]
pub struct FormModel {
    weight: usize,
    block_dims: Vec<usize>,
    offsets: Vec<usize>,
    gram: CMat,
    tform: CMat,
    contractions: Vec<CMat>,
    conjugation: CMat,
    harmonic: Vec<CMat>,
    projector: CMat,
}

impl FormModel {
    /// `harmonic_local[q]` spans the harmonic forms in block `q`, in block-local
    /// coordinates; it is orthonormalised in the Gram metric here.
    pub fn new(
        weight: usize,
        block_dims: Vec<usize>,
        gram: CMat,
        tform: CMat,
        contractions: Vec<CMat>,
        conjugation: CMat,
        harmonic_local: Vec<CMat>,
    ) -> Result<Self> {
        if block_dims.len() != weight + 1 || harmonic_local.len() != weight + 1 {
            return Err(Error::Shape(format!("weight {weight} needs {} blocks", weight + 1)));
        }
        let mut offsets = Vec::with_capacity(weight + 2);
        offsets.push(0);
        for d in &block_dims {
            offsets.push(offsets.last().unwrap() + d);
        }
        let dim = offsets[weight + 1];
        expect_shape("gram", &gram, dim, dim)?;
        expect_shape("tform", &tform, dim, dim)?;
        expect_shape("conjugation", &conjugation, dim, dim)?;
        for (m, c) in contractions.iter().enumerate() {
            expect_shape(&format!("contraction{m}"), c, dim, dim)?;
        }
        let mut harmonic = Vec::with_capacity(weight + 1);
        for (q, e) in harmonic_local.iter().enumerate() {
            if e.nrows() != block_dims[q] {
                return Err(Error::Shape(format!("harmonic block {q}: {} rows for block of dim {}", e.nrows(), block_dims[q])));
            }
            let mut full = CMat::zeros(dim, e.ncols());
            full.view_mut((offsets[q], 0), (block_dims[q], e.ncols())).copy_from(e);
            harmonic.push(linalg::gram_orthonormalize(&full, &gram)?);
        }
        let all = CMat::from_columns(&harmonic.iter().flat_map(|e| e.column_iter().map(|c| c.into_owned())).collect::<Vec<_>>());
        let projector = if all.ncols() == 0 { CMat::zeros(dim, dim) } else { &all * all.adjoint() * &gram };
        Ok(FormModel { weight, block_dims, offsets, gram, tform, contractions, conjugation, harmonic, projector })
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn dim(&self) -> usize {
        self.offsets[self.weight + 1]
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn block_range(&self, q: usize) -> std::ops::Range<usize> {
        self.offsets[q]..self.offsets[q + 1]
    }

    /// `h_q = dim η_(q)`.
    pub fn hodge_numbers(&self) -> Vec<usize> {
        self.harmonic.iter().map(|e| e.ncols()).collect()
    }

    /// Gram-orthonormal harmonic basis of block `q` as full-length columns.
    pub fn harmonic(&self, q: usize) -> &CMat {
        &self.harmonic[q]
    }

    pub fn gram(&self) -> &CMat {
        &self.gram
    }

    pub fn tform(&self) -> &CMat {
        &self.tform
    }

    pub fn contractions(&self) -> &[CMat] {
        &self.contractions
    }

    pub fn conjugation(&self) -> &CMat {
        &self.conjugation
    }

    /// Harmonic projector `P = E E^H G`.
    pub fn projector(&self) -> &CMat {
        &self.projector
    }

    pub fn inner(&self, v: &CVec, w: &CVec) -> C64 {
        (w.adjoint() * &self.gram * v)[(0, 0)]
    }

    pub fn conj_apply(&self, v: &CVec) -> CVec {
        &self.conjugation * v.map(|z| z.conj())
    }

    pub fn harmonic_project(&self, v: &CVec) -> CVec {
        &self.projector * v
    }

    /// Coordinates of `v` along `η_(q)`.
    pub fn harmonic_coords(&self, q: usize, v: &CVec) -> CVec {
        self.harmonic[q].adjoint() * &self.gram * v
    }

    /// `i_b = sum_m b_m C_m`.
    pub fn contraction_at(&self, coeffs: &[C64]) -> Result<CMat> {
        if coeffs.len() != self.contractions.len() {
            return Err(Error::Shape(format!("{} coefficients for {} contractions", coeffs.len(), self.contractions.len())));
        }
        let mut out = CMat::zeros(self.dim(), self.dim());
        for (c, m) in coeffs.iter().zip(&self.contractions) {
            if c.norm() != 0.0 {
                out += m * *c;
            }
        }
        Ok(out)
    }

    /// Copy with the contraction tensors replaced.
    pub fn with_contractions(&self, contractions: Vec<CMat>) -> Result<Self> {
        for c in &contractions {
            expect_shape("contraction", c, self.dim(), self.dim())?;
        }
        Ok(FormModel { contractions, ..self.clone() })
    }

    /// Largest entry of `m` outside the blocks `(target(q), q)`.
    fn off_type(&self, m: &CMat, target: impl Fn(usize) -> isize) -> f64 {
        let mut worst: f64 = 0.0;
        for q in 0..=self.weight {
            for r in 0..=self.weight {
                if r as isize == target(q) {
                    continue;
                }
                for i in self.block_range(r) {
                    for j in self.block_range(q) {
                        worst = worst.max(m[(i, j)].norm());
                    }
                }
            }
        }
        worst
    }
}

/// Harmonic bases labels and conjugation pairings `K_(i)` with
/// `conj(η_(i),a) = sum_b K_(i)[a][b] η_(n-i),b`.
#[derive(Clone, Debug)]
pub struct AdaptedBasis {
    pub labels: Vec<Vec<String>>,
    pub pairing: Vec<CMat>,
}

impl AdaptedBasis {
    pub fn from_model(fm: &FormModel, labels: Option<Vec<Vec<String>>>) -> Result<Self> {
        let n = fm.weight();
        let h = fm.hodge_numbers();
        let labels = match labels {
            Some(l) => {
                if l.len() != n + 1 || l.iter().zip(&h).any(|(a, &b)| a.len() != b) {
                    return Err(Error::Shape("labels do not match the harmonic dimensions".into()));
                }
                l
            }
            None => h.iter().enumerate().map(|(q, &k)| (0..k).map(|a| format!("eta{q}_{a}")).collect()).collect(),
        };
        let pairing = (0..=n)
            .map(|i| {
                let e = fm.harmonic(i);
                let je = fm.conjugation() * linalg::conj(e);
                (fm.harmonic(n - i).adjoint() * fm.gram() * je).transpose()
            })
            .collect();
        Ok(AdaptedBasis { labels, pairing })
    }

    pub fn k(&self, i: usize) -> &CMat {
        &self.pairing[i]
    }
}

/// A complete model: complex, forms, adapted basis and the harmonic
/// parameter directions `theta` (columns in `A^1`).
#[derive(Clone, Debug)]
pub struct Model {
    pub dc: DeformationComplex,
    pub fm: FormModel,
    pub ab: AdaptedBasis,
    pub theta: CMat,
}

impl Model {
    pub fn new(dc: DeformationComplex, fm: FormModel, ab: AdaptedBasis, theta: Option<CMat>) -> Result<Self> {
        if fm.contractions().len() != dc.dims[1] {
            return Err(Error::Shape(format!(
                "{} contraction tensors for A^1 of dim {}",
                fm.contractions().len(),
                dc.dims[1]
            )));
        }
        let theta = theta.unwrap_or_else(|| dc.harmonic_basis(1));
        if theta.nrows() != dc.dims[1] {
            return Err(Error::Shape("theta columns must live in A^1".into()));
        }
        Ok(Model { dc, fm, ab, theta })
    }

    pub fn num_params(&self) -> usize {
        self.theta.ncols()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub entries: Vec<CheckEntry>,
    pub passed: bool,
}

impl ValidationReport {
    fn push(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        let passed = residual.is_finite() && residual <= tolerance;
        self.entries.push(CheckEntry { name: name.into(), residual, tolerance, passed });
    }

    fn finish(mut self) -> Self {
        self.passed = self.entries.iter().all(|e| e.passed);
        self
    }

    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> Vec<&CheckEntry> {
        self.entries.iter().filter(|e| !e.passed).collect()
    }
}

fn id(n: usize) -> CMat {
    CMat::identity(n, n)
}

fn max_abs(m: &CMat) -> f64 {
    linalg::max_abs(m)
}

pub fn validate_complex(dc: &DeformationComplex, tol: f64, report: &mut ValidationReport) {
    for q in 0..3 {
        let h = &dc.harmonic[q];
        let lap = dc.laplacian(q);
        report.push(format!("identity_decomposition_A{q}"), max_abs(&(id(dc.dims[q]) - h - &dc.green[q] * &lap)), tol);
        report.push(format!("harmonic_idempotent_A{q}"), max_abs(&(h * h - h)), tol);
        report.push(format!("harmonic_selfadjoint_A{q}"), max_abs(&(h - h.adjoint())), tol);
        report.push(format!("green_kills_harmonic_A{q}"), max_abs(&(&dc.green[q] * h)), tol);
    }
    for q in 0..2 {
        report.push(
            format!("dbar_star_adjoint_{q}"),
            max_abs(&(&dc.dbar_star[q] - dc.dbar[q].adjoint())),
            tol,
        );
        report.push(format!("harmonic_closed_A{q}"), max_abs(&(&dc.dbar[q] * &dc.harmonic[q])), tol);
        report.push(format!("harmonic_coclosed_A{}", q + 1), max_abs(&(&dc.dbar_star[q] * &dc.harmonic[q + 1])), tol);
    }
    report.push("dbar_squared", max_abs(&(&dc.dbar[1] * &dc.dbar[0])), tol);
    let sym = dc.bracket.iter().map(|b| max_abs(&(b - b.transpose()))).fold(0.0, f64::max);
    report.push("bracket_graded_symmetry", sym, tol);
}

pub fn validate_forms(fm: &FormModel, tol: f64, report: &mut ValidationReport) {
    let g = fm.gram();
    report.push("gram_hermitian", max_abs(&(g - g.adjoint())), tol);
    let min_eig = linalg::hermitian_min_eigenvalue(g);
    report.push("gram_positive", if min_eig > 0.0 { 0.0 } else { -min_eig + f64::MIN_POSITIVE }, 0.0);
    report.push("gram_type_orthogonal", fm.off_type(g, |q| q as isize), tol);
    report.push("tform_type", fm.off_type(fm.tform(), |q| q as isize - 1), tol);
    let ctype = fm.contractions().iter().map(|c| fm.off_type(c, |q| q as isize + 1)).fold(0.0, f64::max);
    report.push("contraction_type", ctype, tol);
    let j = fm.conjugation();
    report.push("conjugation_involution", max_abs(&(j * linalg::conj(j) - id(fm.dim()))), tol);
    report.push("conjugation_type", fm.off_type(j, |q| (fm.weight() - q) as isize), tol);
    let p = fm.projector();
    report.push("projector_idempotent", max_abs(&(p * p - p)), tol);
    let mut orth: f64 = 0.0;
    let mut jharm: f64 = 0.0;
    for q in 0..=fm.weight() {
        let e = fm.harmonic(q);
        orth = orth.max(max_abs(&(e.adjoint() * g * e - id(e.ncols()))));
        let je = j * linalg::conj(e);
        jharm = jharm.max(max_abs(&(&je - p * &je)));
    }
    report.push("harmonic_orthonormal", orth, tol);
    report.push("conjugation_preserves_harmonic", jharm, tol);
}

pub fn validate_adapted(fm: &FormModel, ab: &AdaptedBasis, tol: f64, report: &mut ValidationReport) {
    let n = fm.weight();
    let h = fm.hodge_numbers();
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        let k = &ab.pairing[i];
        if k.shape() != (h[i], h[n - i]) {
            report.push(format!("pairing_shape_{i}"), f64::INFINITY, tol);
            continue;
        }
        let kk = &ab.pairing[n - i] * linalg::conj(k);
        worst = worst.max(max_abs(&(kk - id(h[n - i]))));
    }
    report.push("pairing_involution", worst, tol);
    let hsym = (0..=n).map(|i| h[i].abs_diff(h[n - i])).max().unwrap_or(0);
    report.push("hodge_symmetry", hsym as f64, 0.0);
}

/// Run every structural check on a model.
pub fn validate(dc: &DeformationComplex, fm: &FormModel, ab: &AdaptedBasis) -> ValidationReport {
    validate_with_tol(dc, fm, ab, VALIDATION_TOL)
}

pub fn validate_with_tol(dc: &DeformationComplex, fm: &FormModel, ab: &AdaptedBasis, tol: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    validate_complex(dc, tol, &mut report);
    validate_forms(fm, tol, &mut report);
    validate_adapted(fm, ab, tol, &mut report);
    report.push(
        "contraction_count",
        fm.contractions().len().abs_diff(dc.dims[1]) as f64,
        0.0,
    );
    report.finish()
}

/// Vector of `A^1` as a column.
pub fn a1_vector(coeffs: &[C64]) -> CVec {
    DVector::from_column_slice(coeffs)
}
