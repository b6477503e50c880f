//! Variations of Hodge structure driven by Beltrami differentials, computed on
//! finite-dimensional models of the harmonic theory of a compact Kähler
//! manifold.
//!
//! The crate is organised bottom-up:
//!
//! * [`series`] truncated multivariate power series in the deformation
//!   parameters, scalar and matrix valued;
//! * [`model`] the finite model of the deformation complex and of the forms
//!   (harmonic bases, `T`, contraction tensors, conjugation, Gram data);
//! * [`torus`] the exactly solvable complex-torus model;
//! * [`kuranishi`] the Kuranishi recursion, obstruction series and sampling of
//!   the analytic base;
//! * [`period`] period-matrix blocks, transversality and purity checks;
//! * [`hodgemap`] the extension of real `(p,p)`-classes to nearby fibres;
//! * [`cone`] positivity certificates and stability radii;
//! * [`locus`] Hodge-locus generators and the variational Hodge criterion;
//! * [`approx`] Green-type rank criteria and a rationality scan;
//! * [`cli`] the scenario-driven batch front end.

pub mod approx;
pub mod cli;
pub mod cone;
pub mod error;
pub mod grid;
pub mod hodgemap;
pub mod kuranishi;
pub mod linalg;
pub mod locus;
pub mod model;
pub mod par;
pub mod period;
pub mod series;
pub mod torus;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;

/// Shorthand for building a complex number.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
