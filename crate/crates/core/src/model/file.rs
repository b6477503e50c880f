//! JSON model-definition format.
//!
//! Matrices are `{"rows": r, "cols": c, "data": [[re, im], ...]}` in row-major
//! order. `f64` values round-trip exactly through serde_json.

use serde::{Deserialize, Serialize};

use super::{AdaptedBasis, DeformationComplex, FormModel, Model};
use crate::linalg::CMat;
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl JsonMatrix {
    pub fn from_matrix(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        JsonMatrix { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Shape(format!(
                "matrix declares {}x{} but has {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        if self.data.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Input("non-finite matrix entry".into()));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            C64::new(re, im)
        }))
    }
}

fn mats(v: &[JsonMatrix]) -> Result<Vec<CMat>> {
    v.iter().map(JsonMatrix::to_matrix).collect()
}

fn pair<const K: usize>(name: &str, v: &[JsonMatrix]) -> Result<[CMat; K]> {
    let m = mats(v)?;
    m.try_into().map_err(|m: Vec<CMat>| Error::Shape(format!("{name}: expected {K} matrices, got {}", m.len())))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexFile {
    pub dims: [usize; 3],
    pub dbar: Vec<JsonMatrix>,
    pub dbar_star: Vec<JsonMatrix>,
    pub green: Vec<JsonMatrix>,
    pub harmonic: Vec<JsonMatrix>,
    pub bracket: Vec<JsonMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormsFile {
    pub weight: usize,
    pub block_dims: Vec<usize>,
    pub gram: JsonMatrix,
    pub tform: JsonMatrix,
    pub contractions: Vec<JsonMatrix>,
    pub conjugation: JsonMatrix,
    /// Harmonic spanning sets per block, in block-local coordinates.
    pub harmonic: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub complex: ComplexFile,
    pub forms: FormsFile,
    /// Parameter directions in `A^1`, as a `dim A^1 x N` matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<JsonMatrix>,
}

impl ModelFile {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<Model> {
        let c = &self.complex;
        let dc = DeformationComplex::new(
            c.dims,
            pair("dbar", &c.dbar)?,
            pair("dbar_star", &c.dbar_star)?,
            pair("green", &c.green)?,
            pair("harmonic", &c.harmonic)?,
            mats(&c.bracket)?,
        )?;
        let f = &self.forms;
        let fm = FormModel::new(
            f.weight,
            f.block_dims.clone(),
            f.gram.to_matrix()?,
            f.tform.to_matrix()?,
            mats(&f.contractions)?,
            f.conjugation.to_matrix()?,
            mats(&f.harmonic)?,
        )?;
        let ab = AdaptedBasis::from_model(&fm, f.labels.clone())?;
        let theta = self.theta.as_ref().map(JsonMatrix::to_matrix).transpose()?;
        Model::new(dc, fm, ab, theta)
    }

    /// Serialise a model. Harmonic blocks are written as the (already
    /// orthonormal) bases restricted to their blocks.
    pub fn from_model(m: &Model) -> Self {
        let j = JsonMatrix::from_matrix;
        let dc = &m.dc;
        let fm = &m.fm;
        let harmonic = (0..=fm.weight())
            .map(|q| {
                let r = fm.block_range(q);
                let e = fm.harmonic(q);
                j(&e.rows(r.start, r.len()).into_owned())
            })
            .collect();
        ModelFile {
            complex: ComplexFile {
                dims: dc.dims,
                dbar: dc.dbar.iter().map(j).collect(),
                dbar_star: dc.dbar_star.iter().map(j).collect(),
                green: dc.green.iter().map(j).collect(),
                harmonic: dc.harmonic.iter().map(j).collect(),
                bracket: dc.bracket.iter().map(j).collect(),
            },
            forms: FormsFile {
                weight: fm.weight(),
                block_dims: fm.block_dims().to_vec(),
                gram: j(fm.gram()),
                tform: j(fm.tform()),
                contractions: fm.contractions().iter().map(j).collect(),
                conjugation: j(fm.conjugation()),
                harmonic,
                labels: Some(m.ab.labels.clone()),
            },
            theta: Some(j(&m.theta)),
        }
    }
}
