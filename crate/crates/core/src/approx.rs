//! Rank criteria for approximation by projective fibres and by Hodge
//! classes, the `h^{2,0} = 1` nontriviality test, and a rationality scan.
//!
//! Openness of a holomorphic map cannot be decided from samples, so the
//! reports use layered verdicts (see [`Verdict`]).

use serde::Serialize;

use crate::hodgemap::{self, HodgeClassVector};
use crate::kuranishi::{polydisk_points, BeltramiSeries, ObstructionSeries};
use crate::linalg::{self, CMat, CVec};
use crate::model::{AdaptedBasis, FormModel, Model};
use crate::par;
use crate::period::{contraction_series, neumann_apply, PeriodMatrixSeries};
use crate::series::{MatrixSeries, PowerTable, MAGNITUDE_FLOOR};
use crate::torus::RationalStructure;
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The linear map has full rank and the obstruction vanishes on a
    /// rank-achieving coordinate subspace.
    PassesFirstOrder,
    /// Some sampled Jacobian of the higher-order map has full rank.
    PassesSampledOpenness,
    Inconclusive,
    /// The first-order map cannot reach its target: it is identically zero
    /// or has fewer parameters than the target dimension.
    FailsFirstOrderNecessarily,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub criterion: String,
    pub linear_rank: usize,
    pub linear_target: usize,
    pub sampled_ranks: Vec<usize>,
    pub sampled_target: usize,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

const RANK_REL: f64 = 1e-10;
const RANK_ABS: f64 = 1e-12;

/// Matrix of `θ_i ↦ coordinates of H(i_θ σ̃)` along `η_(q)`.
pub fn first_order_matrix(fm: &FormModel, theta: &CMat, sigma: &CVec, q: usize) -> Result<CMat> {
    let proj = fm.harmonic(q).adjoint() * fm.gram();
    let mut cols = Vec::with_capacity(theta.ncols());
    for i in 0..theta.ncols() {
        let coeffs: Vec<C64> = theta.column(i).iter().copied().collect();
        cols.push(&proj * (fm.contraction_at(&coeffs)? * sigma));
    }
    if cols.is_empty() {
        return Ok(CMat::zeros(fm.harmonic(q).ncols(), 0));
    }
    Ok(CMat::from_columns(&cols))
}

/// Greedy choice of parameter columns reaching the rank of `l`.
fn greedy_columns(l: &CMat) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut rank = 0;
    for j in 0..l.ncols() {
        let mut idx = chosen.clone();
        idx.push(j);
        let sub = l.select_columns(&idx);
        let r = linalg::rank(&sub, RANK_REL, RANK_ABS);
        if r > rank {
            rank = r;
            chosen.push(j);
        }
    }
    chosen
}

fn restricted_obstruction_vanishes(obs: Option<&ObstructionSeries>, keep_cols: &[usize], n: usize) -> bool {
    let Some(obs) = obs else { return true };
    let keep: Vec<bool> = (0..n).map(|i| keep_cols.contains(&i)).collect();
    obs.components.iter().all(|c| c.restrict(&keep).is_zero(MAGNITUDE_FLOOR))
}

fn check_real_pp(ab: &AdaptedBasis, sigma: &HodgeClassVector) -> Result<()> {
    if !sigma.weight.is_multiple_of(2) || sigma.off_middle() > 1e-12 {
        return Err(Error::Precondition("class is not of pure type (p,p)".into()));
    }
    if sigma.reality_residual(ab) > 1e-10 {
        return Err(Error::Precondition("class is not real".into()));
    }
    Ok(())
}

/// First-order Green-type criterion on a weight-2 model.
pub fn green_rank_weight2(model: &Model, zeta0: &HodgeClassVector, obs: Option<&ObstructionSeries>) -> Result<CriterionReport> {
    let fm = &model.fm;
    if fm.weight() != 2 {
        return Err(Error::Precondition("Green criterion needs a weight-2 model".into()));
    }
    check_real_pp(&model.ab, zeta0)?;
    let sigma = zeta0.to_form_vector(fm);
    let l = first_order_matrix(fm, &model.theta, &sigma, 2)?;
    let target = fm.hodge_numbers()[2];
    let rank = linalg::rank(&l, RANK_REL, RANK_ABS);
    let mut notes = Vec::new();
    let verdict = first_order_verdict(&l, rank, target, model.num_params(), obs, &mut notes);
    Ok(CriterionReport {
        criterion: "green-weight2".into(),
        linear_rank: rank,
        linear_target: target,
        sampled_ranks: Vec::new(),
        sampled_target: target,
        verdict,
        notes,
    })
}

fn first_order_verdict(
    l: &CMat,
    rank: usize,
    target: usize,
    n: usize,
    obs: Option<&ObstructionSeries>,
    notes: &mut Vec<String>,
) -> Verdict {
    if rank == target {
        let cols = greedy_columns(l);
        if restricted_obstruction_vanishes(obs, &cols, n) {
            notes.push(format!("full linear rank {rank}; obstruction vanishes on parameters {cols:?}"));
            return Verdict::PassesFirstOrder;
        }
        notes.push("full linear rank but the obstruction does not vanish on the rank-achieving subspace".into());
        return Verdict::Inconclusive;
    }
    if n < target {
        notes.push(format!("only {n} parameters for target dimension {target}"));
        return Verdict::FailsFirstOrderNecessarily;
    }
    if linalg::max_abs(l) <= RANK_ABS {
        notes.push("first-order map is identically zero".into());
        return Verdict::FailsFirstOrderNecessarily;
    }
    notes.push(format!("linear rank {rank} below target {target}"));
    Verdict::Inconclusive
}

#[derive(Clone, Debug)]
pub struct SampleSpec {
    pub count: usize,
    pub radius: f64,
    pub seed: u64,
}

/// Series of the higher-order map `t ↦ (H(i_φ^k (I + T i_φ)^{-1} σ̃)/k!)_{k=1..p}`
/// stacked along `η_(p+1), ..., η_(2p)`.
fn higher_order_map(fm: &FormModel, phi: &BeltramiSeries, sigma: &CVec) -> Result<MatrixSeries> {
    let p = fm.weight() / 2;
    let iphi = contraction_series(fm, phi)?;
    let mut y = neumann_apply(fm, &iphi, &CMat::from_column_slice(sigma.len(), 1, sigma.as_slice()))?;
    let rows: usize = (1..=p).map(|k| fm.harmonic(p + k).ncols()).sum();
    let mut r0 = 0;
    let mut pieces = Vec::new();
    for k in 1..=p {
        y = iphi.checked_mul(&y)?.scale(C64::new(1.0 / k as f64, 0.0));
        let pk = fm.harmonic(p + k).adjoint() * fm.gram();
        pieces.push((r0, y.left_mul(&pk)?));
        r0 += pk.nrows();
    }
    let mut out = MatrixSeries::zeros(phi.basis().clone(), rows, 1);
    for (r0, s) in pieces {
        for r in 0..s.shape().0 {
            out.set_entry(r0 + r, 0, &s.entry(r, 0));
        }
    }
    Ok(out)
}

/// Criterion for approximating a real `(p,p)` class by Hodge classes.
pub fn pp_criterion(
    model: &Model,
    phi: &BeltramiSeries,
    sigma0: &HodgeClassVector,
    samples: &SampleSpec,
    obs: Option<&ObstructionSeries>,
) -> Result<CriterionReport> {
    let fm = &model.fm;
    let n = fm.weight();
    if !n.is_multiple_of(2) || n == 0 {
        return Err(Error::Precondition("(p,p) criterion needs a positive even weight".into()));
    }
    check_real_pp(&model.ab, sigma0)?;
    let p = n / 2;
    let h = fm.hodge_numbers();
    let sigma = sigma0.to_form_vector(fm);
    let l = first_order_matrix(fm, &model.theta, &sigma, p + 1)?;
    let target = h[p + 1];
    let rank = linalg::rank(&l, RANK_REL, RANK_ABS);
    let sampled_target: usize = (1..=p).map(|k| h[p + k]).sum();

    let map = higher_order_map(fm, phi, &sigma)?;
    let nparams = phi.num_params();
    let derivs: Vec<MatrixSeries> = (0..nparams).map(|j| map.partial_derivative(j)).collect::<Result<_>>()?;
    let points = polydisk_points(nparams, samples.radius, samples.count, samples.seed)?;
    let ranks = par::map(&points, |t| {
        let pw = PowerTable::new(phi.basis(), t).expect("point length matches");
        let cols: Vec<CVec> = derivs.iter().map(|d| d.evaluate_with(&pw).column(0).into_owned()).collect();
        if cols.is_empty() {
            return 0;
        }
        linalg::rank(&CMat::from_columns(&cols), 1e-8, RANK_ABS)
    });

    let mut notes = Vec::new();
    let mut verdict = first_order_verdict(&l, rank, target, model.num_params(), obs, &mut notes);
    if verdict != Verdict::PassesFirstOrder && ranks.contains(&sampled_target) {
        notes.push("a sampled Jacobian of the higher-order map has full rank".into());
        verdict = Verdict::PassesSampledOpenness;
    }
    Ok(CriterionReport {
        criterion: format!("pp-weight{n}"),
        linear_rank: rank,
        linear_target: target,
        sampled_ranks: ranks,
        sampled_target,
        verdict,
        notes,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NontrivialityReport {
    /// `H(i_φ η̃_(0))` is the zero series.
    pub contraction_zero: bool,
    pub phi01_zero: bool,
    pub phi12_zero: bool,
    pub identity: bool,
    pub nontrivial: bool,
    /// All four tests agree.
    pub consistent: bool,
}

pub fn nontriviality_h20_one(fm: &FormModel, pms: &PeriodMatrixSeries, phi: &BeltramiSeries) -> Result<NontrivialityReport> {
    if fm.weight() != 2 {
        return Err(Error::Precondition("nontriviality test needs weight 2".into()));
    }
    let h = fm.hodge_numbers();
    if h[0] != 1 {
        return Err(Error::Precondition(format!("h^(2,0) = {} is not 1", h[0])));
    }
    let iphi = contraction_series(fm, phi)?;
    let y = iphi.checked_mul(&MatrixSeries::constant(phi.basis().clone(), fm.harmonic(0).clone()))?;
    let c = y.left_mul(fm.projector())?;
    let zero = |m: &MatrixSeries| m.min_degree(MAGNITUDE_FLOOR).is_none();
    let contraction_zero = zero(&c);
    let phi01_zero = zero(pms.upper(0, 1));
    let phi12_zero = zero(pms.upper(1, 2));
    let identity = phi01_zero && phi12_zero && zero(pms.upper(0, 2));
    let consistent = contraction_zero == phi01_zero && phi01_zero == phi12_zero && phi12_zero == identity;
    Ok(NontrivialityReport { contraction_zero, phi01_zero, phi12_zero, identity, nontrivial: !contraction_zero, consistent })
}

#[derive(Clone, Debug, Serialize)]
pub struct RationalCandidate {
    pub sigma_id: usize,
    pub t: Vec<[f64; 2]>,
    pub denominator: u64,
    pub distance: f64,
}

/// Distance from `r` to the nearest vector with common denominator `<= q_max`
/// (`q_max = 0` admits integers only). Imaginary parts count in full.
pub fn rational_distance(r: &[C64], q_max: u64) -> (u64, f64) {
    let mut best = (1, f64::INFINITY);
    for q in 1..=q_max.max(1) {
        let qf = q as f64;
        let d = r
            .iter()
            .map(|z| {
                let x = z.re * qf;
                ((x - x.round()).abs() / qf).max(z.im.abs())
            })
            .fold(0.0, f64::max);
        if d < best.1 {
            best = (q, d);
        }
    }
    best
}

/// Scan `H(σ, t)` for near-rational classes; a heuristic demonstration only.
#[allow(clippy::too_many_arguments)]
pub fn rationality_scan(
    fm: &FormModel,
    ab: &AdaptedBasis,
    rs: &RationalStructure,
    pms: &PeriodMatrixSeries,
    sigmas: &[HodgeClassVector],
    points: &[Vec<C64>],
    q_max: u64,
    tol: f64,
) -> Result<Vec<RationalCandidate>> {
    if fm.weight() != 2 {
        return Err(Error::Precondition("rationality scan needs weight 2".into()));
    }
    let mut jobs = Vec::new();
    for s in 0..sigmas.len() {
        for k in 0..points.len() {
            jobs.push((s, k));
        }
    }
    let found = par::map(&jobs, |&(s, k)| -> Option<RationalCandidate> {
        let pm = pms.evaluate(&points[k]).ok()?;
        let cls = hodgemap::solve_hodge_map_for_class(&pm, ab, &sigmas[s]).ok()?.class;
        let r = rs.to_rational(&cls.to_form_vector(fm));
        let (denominator, distance) = rational_distance(r.as_slice(), q_max);
        (distance < tol).then(|| RationalCandidate {
            sigma_id: s,
            t: points[k].iter().map(|z| [z.re, z.im]).collect(),
            denominator,
            distance,
        })
    });
    let mut out: Vec<RationalCandidate> = found.into_iter().flatten().collect();
    out.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    Ok(out)
}
