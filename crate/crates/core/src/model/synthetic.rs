//! Synthetic models built from an explicit orthogonal decomposition, so the
//! Hodge identities hold by construction.

use rand::Rng;

use super::{AdaptedBasis, DeformationComplex, FormModel, Model};
use crate::linalg::{self, CMat};
use crate::{c64, Error, Result, C64};

/// Apply unitary changes of basis `u[q]` on `A^q` to every operator.
pub fn rotate_complex(dc: &DeformationComplex, u: &[CMat; 3]) -> DeformationComplex {
    let conj = |q: usize, m: &CMat| &u[q] * m * u[q].adjoint();
    let dbar = [&u[1] * &dc.dbar[0] * u[0].adjoint(), &u[2] * &dc.dbar[1] * u[1].adjoint()];
    let dbar_star = [dbar[0].adjoint(), dbar[1].adjoint()];
    let u1c = linalg::conj(&u[1]);
    let bracket = (0..dc.dims[2])
        .map(|l| {
            let mut acc = CMat::zeros(dc.dims[1], dc.dims[1]);
            for (k, b) in dc.bracket.iter().enumerate() {
                acc += b * u[2][(l, k)];
            }
            &u1c * acc * u[1].adjoint()
        })
        .collect();
    DeformationComplex {
        dims: dc.dims,
        dbar,
        dbar_star,
        green: [conj(0, &dc.green[0]), conj(1, &dc.green[1]), conj(2, &dc.green[2])],
        harmonic: [conj(0, &dc.harmonic[0]), conj(1, &dc.harmonic[1]), conj(2, &dc.harmonic[2])],
        bracket,
    }
}

/// Random deformation complex with harmonic dimensions `harm` and coexact
/// dimensions `coexact = [c0, c1]` (so `dbar` has rank `c0` then `c1`).
/// The bracket is a random symmetric tensor scaled by `bracket_scale`.
pub fn random_complex<R: Rng>(rng: &mut R, harm: [usize; 3], coexact: [usize; 2], bracket_scale: f64) -> DeformationComplex {
    let exact = [0, coexact[0], coexact[1]];
    let co = [coexact[0], coexact[1], 0];
    let dims = [0, 1, 2].map(|q| harm[q] + exact[q] + co[q]);
    // layout of A^q: [harmonic | exact | coexact]
    let mut dbar = [CMat::zeros(dims[1], dims[0]), CMat::zeros(dims[2], dims[1])];
    let mut green = [0, 1, 2].map(|q| CMat::zeros(dims[q], dims[q]));
    let mut harmonic = [0, 1, 2].map(|q| CMat::zeros(dims[q], dims[q]));
    for q in 0..3 {
        for i in 0..harm[q] {
            harmonic[q][(i, i)] = c64(1.0, 0.0);
        }
    }
    for q in 0..2 {
        for i in 0..co[q] {
            let s: f64 = rng.gen_range(0.5..2.0);
            let src = harm[q] + exact[q] + i;
            let dst = harm[q + 1] + i;
            dbar[q][(dst, src)] = c64(s, 0.0);
            green[q][(src, src)] = c64(1.0 / (s * s), 0.0);
            green[q + 1][(dst, dst)] = c64(1.0 / (s * s), 0.0);
        }
    }
    let bracket = (0..dims[2])
        .map(|_| {
            let a = linalg::random_matrix(rng, dims[1], dims[1]);
            (&a + a.transpose()) * c64(0.5 * bracket_scale, 0.0)
        })
        .collect();
    let dc = DeformationComplex {
        dims,
        dbar_star: [dbar[0].adjoint(), dbar[1].adjoint()],
        dbar,
        green,
        harmonic,
        bracket,
    };
    let u = [0, 1, 2].map(|q| linalg::random_unitary(rng, dims[q]));
    rotate_complex(&dc, &u)
}

/// A small obstructed complex: `A^1 = <θ1, θ2, f, c>`, `A^2 = <h, g>` with
/// `dbar e = f`, `dbar c = g`, `[θ1, θ2] = h` and `[θ1, θ1] = g`.
///
/// Its Kuranishi solution is `φ = θ1 t1 + θ2 t2 + t1²/2 c`, the obstruction is
/// `2 t1 t2 h`, and the base is the union of the coordinate axes.
pub fn obstructed_complex() -> DeformationComplex {
    let one = c64(1.0, 0.0);
    let mut dbar0 = CMat::zeros(4, 1);
    dbar0[(2, 0)] = one;
    let mut dbar1 = CMat::zeros(2, 4);
    dbar1[(1, 3)] = one;
    let diag = |v: &[f64]| CMat::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| c64(x, 0.0))));
    let mut bh = CMat::zeros(4, 4);
    bh[(0, 1)] = one;
    bh[(1, 0)] = one;
    let mut bg = CMat::zeros(4, 4);
    bg[(0, 0)] = one;
    DeformationComplex {
        dims: [1, 4, 2],
        dbar_star: [dbar0.adjoint(), dbar1.adjoint()],
        dbar: [dbar0, dbar1],
        green: [diag(&[1.0]), diag(&[0.0, 0.0, 1.0, 1.0]), diag(&[0.0, 1.0])],
        harmonic: [diag(&[0.0]), diag(&[1.0, 1.0, 0.0, 0.0]), diag(&[1.0, 0.0])],
        bracket: vec![bh, bg],
    }
}

/// Random well-conditioned invertible matrix.
fn random_invertible<R: Rng>(rng: &mut R, n: usize) -> CMat {
    loop {
        let a = linalg::random_matrix(rng, n, n) + CMat::identity(n, n) * c64(1.5, 0.0);
        if linalg::condition_number(&a) < 50.0 {
            return a;
        }
    }
}

/// Random form model of weight `n`. Block and harmonic dimensions must be
/// symmetric under `q -> n - q`. `t_scale = 0` gives `T = 0`.
pub fn random_form_model<R: Rng>(
    rng: &mut R,
    block_dims: &[usize],
    hodge: &[usize],
    num_contractions: usize,
    t_scale: f64,
) -> Result<FormModel> {
    let n = block_dims.len().checked_sub(1).ok_or_else(|| Error::Input("no blocks".into()))?;
    if hodge.len() != n + 1 || (0..=n).any(|q| block_dims[q] != block_dims[n - q] || hodge[q] != hodge[n - q]) {
        return Err(Error::Input("block and harmonic dimensions must be conjugation symmetric".into()));
    }
    if (0..=n).any(|q| hodge[q] > block_dims[q]) {
        return Err(Error::Input("harmonic dimension exceeds block dimension".into()));
    }
    let mut off = vec![0];
    for d in block_dims {
        off.push(off.last().unwrap() + d);
    }
    let dim = off[n + 1];
    let mut gram = CMat::zeros(dim, dim);
    for q in 0..=n {
        let a = linalg::random_matrix(rng, block_dims[q], block_dims[q]);
        let g = a.adjoint() * &a * c64(0.3, 0.0) + CMat::identity(block_dims[q], block_dims[q]);
        gram.view_mut((off[q], off[q]), (block_dims[q], block_dims[q])).copy_from(&g);
    }
    let mut conj = CMat::zeros(dim, dim);
    let mut harmonic: Vec<CMat> = vec![CMat::zeros(0, 0); n + 1];
    for q in 0..=n {
        let p = n - q;
        let k = block_dims[q];
        if q < p {
            let a = random_invertible(rng, k);
            let b = linalg::inverse(&linalg::conj(&a))?;
            conj.view_mut((off[p], off[q]), (k, k)).copy_from(&a);
            conj.view_mut((off[q], off[p]), (k, k)).copy_from(&b);
            let e = linalg::random_matrix(rng, k, hodge[q]);
            harmonic[p] = &a * linalg::conj(&e);
            harmonic[q] = e;
        } else if q == p {
            let b = random_invertible(rng, k);
            let m = &b * linalg::inverse(&linalg::conj(&b))?;
            let v = linalg::random_matrix(rng, k, hodge[q]);
            harmonic[q] = &v + &m * linalg::conj(&v);
            conj.view_mut((off[q], off[q]), (k, k)).copy_from(&m);
        }
    }
    let mut tform = CMat::zeros(dim, dim);
    if t_scale != 0.0 {
        for q in 1..=n {
            let t = linalg::random_matrix(rng, block_dims[q - 1], block_dims[q]) * c64(t_scale, 0.0);
            tform.view_mut((off[q - 1], off[q]), (block_dims[q - 1], block_dims[q])).copy_from(&t);
        }
    }
    let contractions = (0..num_contractions)
        .map(|_| {
            let mut c = CMat::zeros(dim, dim);
            for q in 0..n {
                let m = linalg::random_matrix(rng, block_dims[q + 1], block_dims[q]);
                c.view_mut((off[q + 1], off[q]), (block_dims[q + 1], block_dims[q])).copy_from(&m);
            }
            c
        })
        .collect();
    FormModel::new(n, block_dims.to_vec(), gram, tform, contractions, conj, harmonic)
}

/// Obstructed complex paired with a random weight-2 form model.
pub fn obstructed_model<R: Rng>(rng: &mut R) -> Result<Model> {
    let dc = obstructed_complex();
    let fm = random_form_model(rng, &[2, 3, 2], &[1, 2, 1], 4, 0.0)?;
    let ab = AdaptedBasis::from_model(&fm, None)?;
    let mut theta = CMat::zeros(4, 2);
    theta[(0, 0)] = C64::new(1.0, 0.0);
    theta[(1, 1)] = C64::new(1.0, 0.0);
    Model::new(dc, fm, ab, Some(theta))
}
