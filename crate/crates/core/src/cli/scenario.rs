//! Scenario files: one JSON document describing the model, the Beltrami
//! family, the grid and the command-specific inputs of a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::grid::GridSpec;
use crate::hodgemap::{HodgeClassVector, Row};
use crate::kuranishi::{self, BeltramiSeries, ObstructionSeries};
use crate::model::{JsonMatrix, Model, ModelFile};
use crate::torus::{self, SubtorusModel, TorusFamily, TorusModel, TorusSpec};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    Torus(TorusSpec),
    /// Path to a model-definition file, relative to the scenario file.
    File(PathBuf),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyTerm {
    pub exponent: Vec<u32>,
    pub matrix: JsonMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// All `d²` torus directions `t_ab E_ab`.
    TorusFull,
    /// Torus matrices with monomial coefficients.
    TorusTerms { num_params: usize, terms: Vec<FamilyTerm> },
    /// Kuranishi solution; `theta` defaults to the model's parameter directions.
    Kuranishi {
        #[serde(default)]
        theta: Option<JsonMatrix>,
    },
    /// `φ = 0` in `num_params` parameters.
    Zero { num_params: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaSpec {
    /// Torus Kähler class `[√-1 sum g_ab dz_a ∧ dz̄_b]`.
    Kahler(JsonMatrix),
    /// Dual class of the coordinate subtorus `{z_i = 0, i ∈ S}` (0-based).
    Subtorus(Vec<usize>),
    /// Explicit components `α_(i)` as `[re, im]` pairs.
    Components(Vec<Vec<[f64; 2]>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "defaults::locus")]
    pub locus: f64,
    #[serde(default = "defaults::lhs")]
    pub vhc_lhs: f64,
    #[serde(default = "defaults::rhs")]
    pub vhc_rhs: f64,
    #[serde(default = "defaults::base")]
    pub base: f64,
    #[serde(default = "defaults::rational")]
    pub rational: f64,
}

mod defaults {
    pub fn locus() -> f64 {
        1e-9
    }
    pub fn lhs() -> f64 {
        crate::locus::TOL_LHS
    }
    pub fn rhs() -> f64 {
        crate::locus::TOL_RHS
    }
    pub fn base() -> f64 {
        1e-10
    }
    pub fn rational() -> f64 {
        1e-3
    }
    pub fn samples() -> usize {
        16
    }
    pub fn sample_radius() -> f64 {
        0.1
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            locus: defaults::locus(),
            vhc_lhs: defaults::lhs(),
            vhc_rhs: defaults::rhs(),
            base: defaults::base(),
            rational: defaults::rational(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Samples {
    #[serde(default = "defaults::samples")]
    pub count: usize,
    #[serde(default = "defaults::sample_radius")]
    pub radius: f64,
}

impl Default for Samples {
    fn default() -> Self {
        Samples { count: defaults::samples(), radius: defaults::sample_radius() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelSource,
    pub truncation: usize,
    pub family: FamilySpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sigma: Option<SigmaSpec>,
    #[serde(default)]
    pub sigmas: Vec<SigmaSpec>,
    /// Hermitian metric `g` for Kähler extensions.
    #[serde(default)]
    pub metric: Option<JsonMatrix>,
    #[serde(default)]
    pub subtorus: Option<Vec<usize>>,
    #[serde(default)]
    pub denominator_bound: u64,
    #[serde(default)]
    pub samples: Samples,
}

fn at(path: &str, e: Error) -> Error {
    match e {
        Error::Scenario { .. } => e,
        other => Error::Scenario { path: path.into(), message: other.to_string() },
    }
}

/// Everything a command needs, built from a scenario.
pub struct Context {
    pub scenario: Scenario,
    pub model: Model,
    pub torus: Option<TorusModel>,
    pub family: Option<TorusFamily>,
    pub phi: BeltramiSeries,
    pub obstruction: ObstructionSeries,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Scenario {
            path: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    /// Build the model and family and check every cross-reference.
    pub fn build(self, base_dir: &Path) -> Result<Context> {
        let (model, tm) = match &self.model {
            ModelSource::Torus(spec) => {
                if spec.weight > 2 * spec.d {
                    return Err(Error::Scenario {
                        path: "model.torus.weight".into(),
                        message: format!("weight {} exceeds 2d = {}", spec.weight, 2 * spec.d),
                    });
                }
                spec.tau_matrix().map_err(|e| at("model.torus.tau", e))?;
                torus::rational_structure(spec).map_err(|e| at("model.torus.tau", e))?;
                let tm = torus::build_torus_model(spec).map_err(|e| at("model.torus", e))?;
                (tm.model.clone(), Some(tm))
            }
            ModelSource::File(p) => {
                let full = base_dir.join(p);
                let mf = ModelFile::load(&full).map_err(|e| at("model.file", e))?;
                (mf.build().map_err(|e| at("model.file", e))?, None)
            }
        };
        if self.truncation == 0 {
            return Err(Error::Scenario { path: "truncation".into(), message: "must be at least 1".into() });
        }
        let d_cut = self.truncation;
        let (phi, family) = match &self.family {
            FamilySpec::TorusFull => {
                let tm = tm.as_ref().ok_or_else(|| Error::Scenario {
                    path: "family.kind".into(),
                    message: "torus_full needs a torus model".into(),
                })?;
                let fam = TorusFamily::full(tm.d());
                (fam.to_beltrami(d_cut).map_err(|e| at("family", e))?, Some(fam))
            }
            FamilySpec::TorusTerms { num_params, terms } => {
                let tm = tm.as_ref().ok_or_else(|| Error::Scenario {
                    path: "family.kind".into(),
                    message: "torus_terms needs a torus model".into(),
                })?;
                let mut out = Vec::new();
                for (k, t) in terms.iter().enumerate() {
                    let m = t.matrix.to_matrix().map_err(|e| at(&format!("family.terms[{k}].matrix"), e))?;
                    if m.shape() != (tm.d(), tm.d()) {
                        return Err(Error::Scenario {
                            path: format!("family.terms[{k}].matrix"),
                            message: format!("must be {0}x{0}", tm.d()),
                        });
                    }
                    if t.exponent.len() != *num_params {
                        return Err(Error::Scenario {
                            path: format!("family.terms[{k}].exponent"),
                            message: format!("must have length num_params = {num_params}"),
                        });
                    }
                    out.push((t.exponent.clone(), m));
                }
                let fam = TorusFamily { d: tm.d(), num_params: *num_params, terms: out };
                (fam.to_beltrami(d_cut).map_err(|e| at("family.terms", e))?, Some(fam))
            }
            FamilySpec::Kuranishi { theta } => {
                let th = match theta {
                    Some(t) => t.to_matrix().map_err(|e| at("family.theta", e))?,
                    None => model.theta.clone(),
                };
                (kuranishi::solve_phi(&model.dc, &th, d_cut).map_err(|e| at("family.theta", e))?, None)
            }
            FamilySpec::Zero { num_params } => (BeltramiSeries::zero(model.dc.dims[1], *num_params, d_cut), None),
        };
        let obstruction = kuranishi::obstruction(&model.dc, &phi).map_err(|e| at("family", e))?;
        self.grid.validate(phi.num_params()).map_err(|e| at("grid", e))?;
        if let Some(m) = &self.metric {
            let g = m.to_matrix().map_err(|e| at("metric", e))?;
            let d = tm.as_ref().map(|t| t.d()).ok_or_else(|| Error::Scenario {
                path: "metric".into(),
                message: "a metric needs a torus model".into(),
            })?;
            if g.shape() != (d, d) {
                return Err(Error::Scenario { path: "metric".into(), message: format!("must be {d}x{d}") });
            }
        }
        if let Some(s) = &self.subtorus {
            let tm = tm.as_ref().ok_or_else(|| Error::Scenario {
                path: "subtorus".into(),
                message: "subtori need a torus model".into(),
            })?;
            if s.is_empty() || s.iter().any(|&i| i >= tm.d()) {
                return Err(Error::Scenario { path: "subtorus".into(), message: format!("indices must lie in 0..{}", tm.d()) });
            }
        }
        let ctx = Context { scenario: self, model, torus: tm, family, phi, obstruction };
        for (k, s) in ctx.sigma_specs().iter().enumerate() {
            ctx.resolve_sigma(s).map_err(|e| at(&format!("sigmas[{k}]"), e))?;
        }
        Ok(ctx)
    }
}

impl Context {
    pub fn sigma_specs(&self) -> Vec<SigmaSpec> {
        if !self.scenario.sigmas.is_empty() {
            self.scenario.sigmas.clone()
        } else {
            self.scenario.sigma.iter().cloned().collect()
        }
    }

    pub fn resolve_sigma(&self, s: &SigmaSpec) -> Result<HodgeClassVector> {
        let fm = &self.model.fm;
        match s {
            SigmaSpec::Kahler(g) => {
                let tm = self.torus.as_ref().ok_or_else(|| Error::Input("Kähler classes need a torus model".into()))?;
                HodgeClassVector::from_form_vector(fm, &tm.kahler_form(&g.to_matrix()?)?)
            }
            SigmaSpec::Subtorus(coords) => {
                let tm = self.torus.as_ref().ok_or_else(|| Error::Input("subtori need a torus model".into()))?;
                torus::poincare_dual(tm, &SubtorusModel { coords: coords.clone() })
            }
            SigmaSpec::Components(c) => {
                let dims = fm.hodge_numbers();
                if c.len() != dims.len() || c.iter().zip(&dims).any(|(a, &h)| a.len() != h) {
                    return Err(Error::Shape(format!("components must have lengths {dims:?}")));
                }
                Ok(HodgeClassVector {
                    weight: fm.weight(),
                    components: c.iter().map(|v| Row::from_iterator(v.len(), v.iter().map(|[a, b]| C64::new(*a, *b)))).collect(),
                })
            }
        }
    }

    pub fn sigmas(&self) -> Result<Vec<HodgeClassVector>> {
        let specs = self.sigma_specs();
        if specs.is_empty() {
            return Err(Error::Scenario { path: "sigma".into(), message: "this command needs a class".into() });
        }
        specs.iter().map(|s| self.resolve_sigma(s)).collect()
    }

    pub fn points(&self) -> Result<Vec<Vec<C64>>> {
        self.scenario.grid.points(self.phi.num_params())
    }

    pub fn phi_norm(&self) -> crate::cone::PhiNorm {
        match &self.torus {
            Some(tm) => crate::cone::PhiNorm::TorusMatrix(tm.d()),
            None => crate::cone::PhiNorm::Euclidean,
        }
    }

    pub fn is_obstructed(&self) -> bool {
        !self.obstruction.is_zero(crate::series::MAGNITUDE_FLOOR)
    }
}

/// Parse and build a scenario without running anything.
pub fn validate_scenario(path: &Path) -> Result<Context> {
    let sc = Scenario::load(path)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    sc.build(&dir)
}
