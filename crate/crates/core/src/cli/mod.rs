//! Command-line front end: `vhs <command> --scenario <file> --out <dir> [--threads N]`.

pub mod output;
pub mod plot;
pub mod scenario;
pub mod selftest;

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::approx::{self, SampleSpec};
use crate::cone;
use crate::hodgemap::{self, HodgeMapRecord};
use crate::kuranishi;
use crate::locus;
use crate::model;
use crate::par;
use crate::period;
use crate::torus::{self, SubtorusModel};
use crate::{Error, Result, C64};

use output::{pair_cells, t_cells, t_header, CsvRow, ErrorReport, Outputs};
use plot::{emit_plot_data, GridResults, LocusPoint, ResidualPoint};
use scenario::{Context, Scenario, SigmaSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    PeriodMap,
    HodgeMap,
    ExtendKahler,
    StabilityRadius,
    GreenCheck,
    PpCheck,
    HodgeLocus,
    VhcCheck,
    RationalityScan,
    Validate,
    Selftest,
}

impl Command {
    pub fn name(&self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

#[derive(Debug, Parser)]
#[command(name = "vhs", version, about = "Variations of Hodge structure driven by Beltrami differentials")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Scenario JSON file (optional for `selftest`).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Process entry point; returns the exit code.
pub fn main_entry() -> i32 {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = par::set_threads(n) {
            return report_error(&args.out, &e);
        }
    }
    match run(args.command, args.scenario.as_deref(), &args.out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => report_error(&args.out, &e),
    }
}

fn report_error(out: &Path, e: &Error) -> i32 {
    let rep = ErrorReport::from(e);
    let text = serde_json::to_string_pretty(&rep).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", e.code()));
    eprintln!("{text}");
    if std::fs::create_dir_all(out).is_ok() {
        let _ = std::fs::write(out.join("error.json"), format!("{text}\n"));
    }
    2
}

/// Run one command. `Ok(false)` means the run completed but a check failed
/// (only `selftest` reports this).
pub fn run(command: Command, scenario: Option<&Path>, out: &Path) -> Result<bool> {
    let mut outputs = Outputs::new(out)?;
    if command == Command::Selftest {
        let (ctx, bytes) = match scenario {
            Some(p) => (Some(scenario::validate_scenario(p)?), std::fs::read(p)?),
            None => (None, b"builtin".to_vec()),
        };
        let seed = ctx.as_ref().map_or(0, |c| c.scenario.seed);
        let report = selftest::run_selftest(ctx.as_ref(), seed)?;
        outputs.json("selftest.json", &report)?;
        outputs.manifest(&command.name(), seed, &bytes)?;
        return Ok(report.passed);
    }
    let path = scenario.ok_or_else(|| Error::Input(format!("`{}` needs --scenario", command.name())))?;
    let bytes = std::fs::read(path)?;
    let sc = Scenario::load(path)?;
    let ctx = sc.build(path.parent().unwrap_or(Path::new("")))?;
    match command {
        Command::PeriodMap => period_map(&ctx, &mut outputs)?,
        Command::HodgeMap => hodge_map(&ctx, &mut outputs)?,
        Command::ExtendKahler => extend_kahler(&ctx, &mut outputs)?,
        Command::StabilityRadius => stability_radius(&ctx, &mut outputs)?,
        Command::GreenCheck => green_check(&ctx, &mut outputs)?,
        Command::PpCheck => pp_check(&ctx, &mut outputs)?,
        Command::HodgeLocus => hodge_locus(&ctx, &mut outputs)?,
        Command::VhcCheck => vhc_check(&ctx, &mut outputs)?,
        Command::RationalityScan => rationality_scan(&ctx, &mut outputs)?,
        Command::Validate => validate(&ctx, &mut outputs)?,
        Command::Selftest => unreachable!(),
    }
    outputs.manifest(&command.name(), ctx.scenario.seed, &bytes)?;
    Ok(true)
}

fn pairs(t: &[C64]) -> Vec<[f64; 2]> {
    t.iter().map(|z| [z.re, z.im]).collect()
}

fn with_status(row: CsvRow, err: &Option<String>) -> CsvRow {
    match err {
        Some(e) => row.error(e),
        None => row,
    }
}

#[derive(Serialize)]
struct TransversalityReport {
    mode: &'static str,
    per_param: Vec<f64>,
    max: f64,
    sample_points: usize,
}

#[derive(Serialize)]
struct PeriodMapReport {
    weight: usize,
    dims: Vec<usize>,
    cutoff: usize,
    num_params: usize,
    obstructed: bool,
    lowest_degree_violations: Vec<(usize, usize, usize)>,
    strengthened_bound_violations: Vec<(usize, usize)>,
    warnings: Vec<String>,
    transversality: TransversalityReport,
    grid_points: usize,
    failed_points: usize,
}

fn period_map(ctx: &Context, out: &mut Outputs) -> Result<()> {
    let m = &ctx.model;
    let pms = period::period_blocks(&m.fm, &m.ab, &ctx.phi)?;
    let points = ctx.points()?;
    let n = pms.weight();
    let nparams = ctx.phi.num_params();
    let evals = par::map(&points, |t| pms.evaluate(t));
    let mut header = t_header(nparams);
    header.extend(["block_i", "block_j", "row", "col", "re", "im"].map(String::from));
    let mut rows = Vec::new();
    let mut failed = 0;
    for (t, pm) in points.iter().zip(&evals) {
        match pm {
            Ok(pm) => {
                for i in 0..=n {
                    for j in i..=n {
                        let b = pm.block(i, j);
                        for r in 0..b.nrows() {
                            for c in 0..b.ncols() {
                                rows.push(t_cells(CsvRow::new(), t).int(i).int(j).int(r).int(c).complex(b[(r, c)]));
                            }
                        }
                    }
                }
            }
            Err(e) => {
                failed += 1;
                rows.push(t_cells(CsvRow::new(), t).blank(6).error(e.code()));
            }
        }
    }
    out.csv("periods.csv", &header, rows)?;

    let obstructed = ctx.is_obstructed();
    let transversality = if obstructed {
        let radius = ctx.scenario.grid.radius.min(kuranishi::trust_radius(&ctx.phi));
        let sample = kuranishi::sample_base(
            &ctx.obstruction,
            radius,
            ctx.scenario.samples.count,
            ctx.scenario.tolerances.base,
            ctx.scenario.seed,
        )?;
        let per_param = (0..nparams)
            .map(|mu| {
                sample
                    .points
                    .iter()
                    .map(|t| period::transversality_residual_at(&pms, mu, t))
                    .try_fold(0.0_f64, |a, r| r.map(|r| a.max(r)))
            })
            .collect::<Result<Vec<f64>>>()?;
        let max = per_param.iter().copied().fold(0.0, f64::max);
        TransversalityReport { mode: "pointwise-on-base", per_param, max, sample_points: sample.points.len() }
    } else {
        let per_param = (0..nparams).map(|mu| period::transversality_residual(&pms, mu)).collect::<Result<Vec<f64>>>()?;
        let max = per_param.iter().copied().fold(0.0, f64::max);
        TransversalityReport { mode: "series", per_param, max, sample_points: 0 }
    };
    let rep = PeriodMapReport {
        weight: n,
        dims: pms.dims().to_vec(),
        cutoff: ctx.phi.cutoff(),
        num_params: nparams,
        obstructed,
        lowest_degree_violations: pms.lowest_degree_violations(),
        strengthened_bound_violations: pms.strengthened_bound_violations(),
        warnings: pms.warnings.clone(),
        transversality,
        grid_points: points.len(),
        failed_points: failed,
    };
    out.json("period_map.json", &rep)
}

#[derive(Serialize)]
struct HodgeMapSummary {
    sigmas: usize,
    points: usize,
    solved: usize,
    failed: usize,
    max_residual: f64,
    max_beta_residual: f64,
    max_reality_residual: f64,
}

fn hodge_map(ctx: &Context, out: &mut Outputs) -> Result<()> {
    let m = &ctx.model;
    let sigmas = ctx.sigmas()?;
    let pms = period::period_blocks(&m.fm, &m.ab, &ctx.phi)?;
    let points = ctx.points()?;
    let jobs: Vec<(usize, usize)> = (0..sigmas.len()).flat_map(|s| (0..points.len()).map(move |k| (s, k))).collect();
    let results = par::map(&jobs, |&(s, k)| {
        let pm = pms.evaluate(&points[k])?;
        let sol = hodgemap::solve_hodge_map_for_class(&pm, &m.ab, &sigmas[s])?;
        let reality = sol.class.reality_residual(&m.ab);
        Ok::<_, Error>((HodgeMapRecord::from(&sol), reality))
    });
    let dims = m.fm.hodge_numbers();
    let ncomp: usize = dims.iter().sum();
    let mut header = vec!["sigma_id".to_string()];
    header.extend(t_header(ctx.phi.num_params()));
    for (i, &h) in dims.iter().enumerate() {
        for k in 0..h {
            header.push(format!("a{i}_{k}_re"));
            header.push(format!("a{i}_{k}_im"));
        }
    }
    header.extend(["residual", "beta_residual", "reality_residual", "condition"].map(String::from));
    let mut rows = Vec::new();
    let mut plot = Vec::new();
    let mut summary = HodgeMapSummary {
        sigmas: sigmas.len(),
        points: points.len(),
        solved: 0,
        failed: 0,
        max_residual: 0.0,
        max_beta_residual: 0.0,
        max_reality_residual: 0.0,
    };
    for (&(s, k), res) in jobs.iter().zip(&results) {
        let row = t_cells(CsvRow::new().int(s), &points[k]);
        match res {
            Ok((rec, reality)) => {
                summary.solved += 1;
                summary.max_residual = summary.max_residual.max(rec.residual);
                summary.max_beta_residual = summary.max_beta_residual.max(rec.beta_residual);
                summary.max_reality_residual = summary.max_reality_residual.max(*reality);
                let comps: Vec<[f64; 2]> = rec.components.iter().flatten().copied().collect();
                rows.push(pair_cells(row, &comps).num(rec.residual).num(rec.beta_residual).num(*reality).num(rec.condition));
                plot.push(ResidualPoint { id: s, t: points[k].clone(), residual: rec.residual, error: None });
            }
            Err(e) => {
                summary.failed += 1;
                rows.push(row.blank(2 * ncomp + 4).error(e.code()));
                plot.push(ResidualPoint { id: s, t: points[k].clone(), residual: f64::NAN, error: Some(e.code().into()) });
            }
        }
    }
    out.csv("hodge_map.csv", &header, rows)?;
    out.json("hodge_map.json", &summary)?;
    emit_plot_data(&GridResults::Residuals(&plot), "residual-heatmap", out.dir())?;
    out.record("plot_residual-heatmap.csv");
    Ok(())
}

fn torus_ctx(ctx: &Context) -> Result<(&torus::TorusModel, &torus::TorusFamily)> {
    let tm = ctx.torus.as_ref().ok_or_else(|| Error::Scenario {
        path: "model".into(),
        message: "this command needs a torus model".into(),
    })?;
    let fam = ctx.family.as_ref().ok_or_else(|| Error::Scenario {
        path: "family".into(),
        message: "this command needs a torus family".into(),
    })?;
    Ok((tm, fam))
}

fn metric(ctx: &Context) -> Result<crate::linalg::CMat> {
    match (&ctx.scenario.metric, ctx.sigma_specs().first()) {
        (Some(g), _) => g.to_matrix(),
        (None, Some(SigmaSpec::Kahler(g))) => g.to_matrix(),
        _ => Err(Error::Scenario { path: "metric".into(), message: "this command needs a metric".into() }),
    }
}

#[derive(Serialize)]
struct ExtendSummary {
    points: usize,
    failed: usize,
    min_certificate: Option<f64>,
    max_type_defect: f64,
    all_positive: bool,
}

fn extend_kahler(ctx: &Context, out: &mut Outputs) -> Result<()> {
    let (tm, fam) = torus_ctx(ctx)?;
    let g = metric(ctx)?;
    let pms = period::period_blocks(tm.fm(), tm.ab(), &ctx.phi)?;
    let points = ctx.points()?;
    let d = tm.d();
    let results = par::map(&points, |t| {
        let phi = fam.at(t)?;
        let pm = pms.evaluate(t)?;
        let ext = cone::extend_kahler_class(tm, &pm, &g, &phi)?;
        Ok::<_, Error>((crate::linalg::spectral_norm(&phi), ext))
    });
    let mut header = t_header(ctx.phi.num_params());
    header.extend(["phi_norm", "certificate", "type_defect"].map(String::from));
    for a in 0..d {
        for b in 0..d {
            header.push(format!("g{a}{b}_re"));
            header.push(format!("g{a}{b}_im"));
        }
    }
    let mut rows = Vec::new();
    let mut s = ExtendSummary { points: points.len(), failed: 0, min_certificate: None, max_type_defect: 0.0, all_positive: true };
    for (t, r) in points.iter().zip(&results) {
        let row = t_cells(CsvRow::new(), t);
        match r {
            Ok((nrm, ext)) => {
                s.min_certificate = Some(s.min_certificate.map_or(ext.certificate, |c: f64| c.min(ext.certificate)));
                s.max_type_defect = s.max_type_defect.max(ext.type_defect);
                s.all_positive &= ext.certificate > 0.0;
                let mut row = row.num(*nrm).num(ext.certificate).num(ext.type_defect);
                for a in 0..d {
                    for b in 0..d {
                        row = row.complex(ext.matrix[(a, b)]);
                    }
                }
                rows.push(row);
            }
            Err(e) => {
                s.failed += 1;
                s.all_positive = false;
                rows.push(row.blank(3 + 2 * d * d).error(e.code()));
            }
        }
    }
    out.csv("extend_kahler.csv", &header, rows)?;
    out.json("extend_kahler.json", &s)
}

fn stability_radius(ctx: &Context, out: &mut Outputs) -> Result<()> {
    let m = &ctx.model;
    let rep = cone::stability_radii(&m.fm, &m.ab, &ctx.phi, &ctx.scenario.grid, ctx.phi_norm())?;
    let mut header = t_header(ctx.phi.num_params());
    header.extend(["phi_norm", "det_re", "det_im", "a_norm", "margin", "pure"].map(String::from));
    let rows = rep
        .records
        .iter()
        .map(|r| {
            let row = pair_cells(CsvRow::new(), &r.t).num(r.phi_norm);
            let row = match r.determinant {
                Some([a, b]) => row.num(a).num(b),
                None => row.blank(2),
            };
            with_status(row.num(r.a_norm).num(r.margin).int(r.pure), &r.error)
        })
        .collect();
    out.csv("stability.csv", &header, rows)?;
    out.json("stability.json", &rep)?;
    emit_plot_data(&GridResults::Stability(&rep), "margins", out.dir())?;
    out.record("plot_margins.csv");
    Ok(())
}

fn criterion_csv(out: &mut Outputs, rep: &approx::CriterionReport) -> Result<()> {
    let header: Vec<String> =
        ["criterion", "linear_rank", "linear_target", "max_sampled_rank", "sampled_target", "verdict"].map(String::from).into();
    let verdict = serde_json::to_value(rep.verdict)?.as_str().unwrap_or_default().to_string();
    let row = CsvRow::new()
        .text(rep.criterion.clone())
        .int(rep.linear_rank)
        .int(rep.linear_target)
        .int(rep.sampled_ranks.iter().copied().max().unwrap_or(0))
        .int(rep.sampled_target)
        .text(verdict);
    out.csv("criterion.csv", &header, vec![row])
}

fn first_sigma(ctx: &Context) -> Result<hodgemap::HodgeClassVector> {
    if ctx.sigma_specs().is_empty() {
        if let Some(g) = &ctx.scenario.metric {
            return ctx.resolve_sigma(&SigmaSpec::Kahler(g.clone()));
        }
    }
    Ok(ctx.sigmas()?.remove(0))
}

fn green_check(ctx: &Context, out: &mut Outputs) -> Result<()> {
    let zeta0 = first_sigma(ctx)?;
    let rep = approx::green_rank_weight2(&ctx.model, &zeta0, Some(&ctx.obstruction))?;
    criterion_csv(out, &rep)?;
    out.json("green.json", &rep)
}

fn pp_check(ctx: &Context, out: &mut Outputs) -> Result<()> {
    let sigma = first_sigma(ctx)?;
    let s = &ctx.scenario.samples;
    let spec = SampleSpec { count: s.count, radius: s.radius, seed: ctx.scenario.seed };
    let rep = approx::pp_criterion(&ctx.model, &ctx.phi, &sigma, &spec, Some(&ctx.obstruction))?;
    criterion_csv(out, &rep)?;
    out.json("pp.json", &rep)
}

#[derive(Serialize)]
struct Term {
    exponent: Vec<u32>,
    coeff: [f64; 2],
}

#[derive(Serialize)]
struct LocusReport {
    num_params: usize,
    tolerance: f64,
    trivial: bool,
    generators: Vec<Vec<Term>>,
    obstruction: Vec<Vec<Term>>,
    tangent_dim: usize,
    tangent_basis: Vec<Vec<[f64; 2]>>,
    points: usize,
    members: usize,
    failed: usize,
}

fn terms(s: &crate::series::TruncatedSeries) -> Vec<Term> {
    s.terms()
        .into_iter()
        .filter(|(_, c)| c.norm() > crate::series::MAGNITUDE_FLOOR)
        .map(|(e, c)| Term { exponent: e, coeff: [c.re, c.im] })
        .collect()
}

fn hodge_locus(ctx: &Context, out: &mut Outputs) -> Result<()> {
    let m = &ctx.model;
    let sigma = first_sigma(ctx)?;
    let obs = ctx.is_obstructed().then_some(&ctx.obstruction);
    let ideal = locus::locus_generators(&m.fm, &m.ab, &ctx.phi, &sigma, obs)?;
    let tol = ctx.scenario.tolerances.locus;
    let points = ctx.points()?;
    let values = par::map(&points, |t| {
        let vals = ideal.generators.iter().map(|g| g.evaluate(t)).collect::<Result<Vec<C64>>>()?;
        let (member, residual) = locus::locus_membership(&ideal, t, tol)?;
        Ok::<_, Error>((vals, member, residual))
    });
    let ng = ideal.generators.len();
    let mut header = t_header(ideal.num_params);
    for k in 0..ng {
        header.push(format!("g{k}_re"));
        header.push(format!("g{k}_im"));
    }
    header.extend(["residual", "member"].map(String::from));
    let mut rows = Vec::new();
    let mut slice = Vec::new();
    let (mut members, mut failed) = (0, 0);
    for (t, v) in points.iter().zip(&values) {
        let row = t_cells(CsvRow::new(), t);
        match v {
            Ok((vals, member, residual)) => {
                members += usize::from(*member);
                rows.push(vals.iter().fold(row, |r, z| r.complex(*z)).num(*residual).int(*member));
                slice.push(LocusPoint { t: t.clone(), residual: *residual, member: *member, error: None });
            }
            Err(e) => {
                failed += 1;
                rows.push(row.blank(2 * ng + 2).error(e.code()));
                slice.push(LocusPoint { t: t.clone(), residual: f64::NAN, member: false, error: Some(e.code().into()) });
            }
        }
    }
    out.csv("locus.csv", &header, rows)?;
    let tangent = locus::locus_tangent_space(&ideal);
    let rep = LocusReport {
        num_params: ideal.num_params,
        tolerance: tol,
        trivial: ideal.is_trivial(),
        generators: ideal.generators.iter().map(terms).collect(),
        obstruction: ideal.obstruction.iter().map(terms).collect(),
        tangent_dim: tangent.ncols(),
        tangent_basis: tangent.column_iter().map(|c| pairs(c.as_slice())).collect(),
        points: points.len(),
        members,
        failed,
    };
    out.json("locus.json", &rep)?;
    let active = ctx.scenario.grid.active_params(ideal.num_params);
    emit_plot_data(&GridResults::Locus { points: &slice, active: &active }, "locus-slice", out.dir())?;
    out.record("plot_locus-slice.csv");
    Ok(())
}

fn vhc_check(ctx: &Context, out: &mut Outputs) -> Result<()> {
    let (tm, fam) = torus_ctx(ctx)?;
    let coords = match (&ctx.scenario.subtorus, ctx.sigma_specs().first()) {
        (Some(s), _) => s.clone(),
        (None, Some(SigmaSpec::Subtorus(s))) => s.clone(),
        _ => return Err(Error::Scenario { path: "subtorus".into(), message: "vhc-check needs a subtorus".into() }),
    };
    let z = SubtorusModel { coords };
    let tols = &ctx.scenario.tolerances;
    let points = ctx.points()?;
    let rep = locus::vhc_check(tm, &z, fam, &points, tols.vhc_lhs, tols.vhc_rhs)?;
    let sigma = torus::poincare_dual(tm, &z)?;
    let ideal = locus::locus_generators(tm.fm(), tm.ab(), &ctx.phi, &sigma, None)?;
    let residuals = par::map(&points, |t| ideal.residual(t));
    let mut header = t_header(ctx.phi.num_params());
    header.extend(["generator_residual", "lhs", "rhs", "verdict"].map(String::from));
    let rows = rep
        .records
        .iter()
        .zip(&residuals)
        .map(|(r, g)| {
            let row = pair_cells(CsvRow::new(), &r.t);
            let row = match g {
                Ok(v) => row.num(*v),
                Err(e) => row.blank(1).error(e.code()),
            };
            let verdict = if r.violation { "violation" } else { "consistent" };
            with_status(row.num(r.lhs).num(r.rhs).text(verdict), &r.error)
        })
        .collect();
    out.csv("vhc.csv", &header, rows)?;
    out.json("vhc.json", &rep)
}

#[derive(Serialize)]
struct RationalReport {
    denominator_bound: u64,
    tolerance: f64,
    candidates: Vec<approx::RationalCandidate>,
}

fn rationality_scan(ctx: &Context, out: &mut Outputs) -> Result<()> {
    let (tm, _) = torus_ctx(ctx)?;
    let rs = torus::rational_structure(&tm.spec)?;
    let sigmas = ctx.sigmas()?;
    let pms = period::period_blocks(tm.fm(), tm.ab(), &ctx.phi)?;
    let points = ctx.points()?;
    let q = ctx.scenario.denominator_bound;
    let tol = ctx.scenario.tolerances.rational;
    let cands = approx::rationality_scan(tm.fm(), tm.ab(), &rs, &pms, &sigmas, &points, q, tol)?;
    let mut header = vec!["sigma_id".to_string()];
    header.extend(t_header(ctx.phi.num_params()));
    header.extend(["denominator", "distance"].map(String::from));
    let rows = cands.iter().map(|c| pair_cells(CsvRow::new().int(c.sigma_id), &c.t).int(c.denominator).num(c.distance)).collect();
    out.csv("rational.csv", &header, rows)?;
    out.json("rational.json", &RationalReport { denominator_bound: q, tolerance: tol, candidates: cands })
}

#[derive(Serialize)]
struct ValidateReport {
    valid: bool,
    weight: usize,
    hodge_numbers: Vec<usize>,
    num_params: usize,
    cutoff: usize,
    grid_points: usize,
    obstructed: bool,
    sigmas: usize,
    model: model::ValidationReport,
}

fn validate(ctx: &Context, out: &mut Outputs) -> Result<()> {
    let m = &ctx.model;
    let report = model::validate(&m.dc, &m.fm, &m.ab);
    let rep = ValidateReport {
        valid: report.passed,
        weight: m.fm.weight(),
        hodge_numbers: m.fm.hodge_numbers(),
        num_params: ctx.phi.num_params(),
        cutoff: ctx.phi.cutoff(),
        grid_points: ctx.points()?.len(),
        obstructed: ctx.is_obstructed(),
        sigmas: ctx.sigma_specs().len(),
        model: report,
    };
    out.json("validation.json", &rep)
}
