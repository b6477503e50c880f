mod common;

use common::*;
use hodge_vhs::approx::{self, SampleSpec, Verdict};
use hodge_vhs::cone;
use hodge_vhs::grid::GridSpec;
use hodge_vhs::hodgemap::{self, HodgeClassVector};
use hodge_vhs::kuranishi::{self, BeltramiSeries};
use hodge_vhs::linalg::{self, CMat};
use hodge_vhs::locus;
use hodge_vhs::model::{self, synthetic, ModelFile};
use hodge_vhs::period;
use hodge_vhs::torus::{self, SubtorusModel, TorusFamily, TorusSpec};
use hodge_vhs::{Error, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cmat_strategy(d: usize, scale: f64) -> impl Strategy<Value = CMat> {
    prop::collection::vec((-scale..scale, -scale..scale), d * d)
        .prop_map(move |v| CMat::from_iterator(d, d, v.into_iter().map(|(a, b)| c(a, b))))
}

fn contraction(phi: &CMat) -> CMat {
    // rescale into the open unit ball
    let n = op_norm(phi);
    if n >= 0.9 {
        phi * c(0.9 / n, 0.0)
    } else {
        phi.clone()
    }
}

fn hpd_strategy(d: usize) -> impl Strategy<Value = CMat> {
    cmat_strategy(d, 1.0).prop_map(move |a| a.adjoint() * &a + CMat::identity(d, d) * c(0.1, 0.0))
}

proptest! {
    #[test]
    fn operator_norm_is_a_norm(a in cmat_strategy(3, 1.0), b in cmat_strategy(3, 1.0), s in 0.0f64..4.0) {
        let n = |m: &CMat| cone::sup_operator_norm(std::slice::from_ref(m)).unwrap();
        prop_assert!((n(&a) - op_norm(&a)).abs() <= 1e-12);
        prop_assert!((n(&(&a * c(s, 0.0))) - s * n(&a)).abs() <= 1e-12);
        prop_assert!(n(&(&a + &b)) <= n(&a) + n(&b) + 1e-12);
        prop_assert!(n(&a) + 1e-12 >= a.iter().map(|z| z.norm()).fold(0.0, f64::max));
        prop_assert!((cone::sup_operator_norm(&[a.clone(), b.clone()]).unwrap() - n(&a).max(n(&b))).abs() <= 0.0);
    }

    #[test]
    fn deformed_metric_dominates_and_is_hermitian(g in hpd_strategy(3), p in cmat_strategy(3, 1.0)) {
        let phi = contraction(&p);
        let m = cone::deformed_metric(&g, &phi).unwrap();
        prop_assert!(linalg::max_abs(&(&m - m.adjoint())) <= 1e-12);
        prop_assert!(linalg::hermitian_min_eigenvalue(&(&m - &g)) >= -1e-10);
        let fixed = &g + cone::s_operator(&phi, &m);
        prop_assert!(linalg::max_abs(&(fixed - &m)) <= 1e-10 * linalg::max_abs(&m).max(1.0));
    }

    #[test]
    fn deformed_cone_is_convex(g1 in hpd_strategy(2), g2 in hpd_strategy(2), p in cmat_strategy(2, 1.0), s in 0.0f64..1.0) {
        let phi = contraction(&p);
        let mix = &g1 * c(s, 0.0) + &g2 * c(1.0 - s, 0.0);
        let lhs = cone::deformed_metric(&mix, &phi).unwrap();
        let rhs = cone::deformed_metric(&g1, &phi).unwrap() * c(s, 0.0) + cone::deformed_metric(&g2, &phi).unwrap() * c(1.0 - s, 0.0);
        prop_assert!(linalg::max_abs(&(&lhs - rhs)) <= 1e-9 * linalg::max_abs(&lhs).max(1.0));
        prop_assert!(linalg::hermitian_min_eigenvalue(&lhs) > 0.0);
    }

    #[test]
    fn direct_and_series_metrics_agree(g in hpd_strategy(2), p in cmat_strategy(2, 0.6)) {
        let phi = contraction(&p);
        let a = cone::deformed_metric(&g, &phi).unwrap();
        let b = cone::deformed_metric_neumann(&g, &phi, 1e-15).unwrap();
        prop_assert!(linalg::max_abs(&(&a - b)) <= 1e-9 * linalg::max_abs(&a).max(1.0));
    }

    #[test]
    fn rational_distance_is_monotone_in_the_bound(x in prop::collection::vec(-2.0f64..2.0, 1..4), q in 1u64..30) {
        let r: Vec<C64> = x.iter().map(|&v| c(v, 0.0)).collect();
        let (_, d1) = approx::rational_distance(&r, q);
        let (_, d2) = approx::rational_distance(&r, q + 1);
        prop_assert!(d2 <= d1);
        prop_assert!(d1 <= 0.5);
    }
}

#[test]
fn unit_norm_beltrami_is_rejected() {
    let g = CMat::identity(2, 2);
    let mut phi = CMat::zeros(2, 2);
    phi[(1, 0)] = c(1.0, 0.0);
    assert!(matches!(cone::deformed_metric(&g, &phi), Err(Error::Domain(_))));
    assert!(matches!(cone::deformed_metric_neumann(&g, &phi, 1e-12), Err(Error::Domain(_))));
}

#[test]
fn rational_distance_finds_exact_denominators() {
    let r = [c(1.0 / 3.0, 0.0), c(-2.0 / 5.0, 0.0)];
    let (q, d) = approx::rational_distance(&r, 20);
    assert_eq!(q, 15);
    assert!(d <= 1e-15);
    assert_eq!(approx::rational_distance(&[c(0.5, 0.0)], 0), (1, 0.5));
    assert_eq!(approx::rational_distance(&[c(1.0, 0.25)], 4).1, 0.25);
}

#[test]
fn model_operations_are_linear_and_antilinear() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let fm = synthetic::random_form_model(&mut rng, &[2, 4, 2], &[1, 2, 1], 3, 0.2).unwrap();
    let a: Vec<C64> = (0..3).map(|k| c(0.1 * k as f64, 0.3)).collect();
    let b: Vec<C64> = (0..3).map(|k| c(-0.2, 0.05 * k as f64)).collect();
    let z = c(0.7, -1.1);
    let sum: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x * z + y).collect();
    let lhs = fm.contraction_at(&sum).unwrap();
    let rhs = fm.contraction_at(&a).unwrap() * z + fm.contraction_at(&b).unwrap();
    assert!(linalg::max_abs(&(lhs - rhs)) <= 1e-14);
    assert!(fm.contraction_at(&a[..2]).is_err());

    let v = random_cmat(&mut rng, fm.dim(), 1, 1.0).column(0).into_owned();
    let w = random_cmat(&mut rng, fm.dim(), 1, 1.0).column(0).into_owned();
    let lhs = fm.conj_apply(&(&v * z + &w));
    let rhs = fm.conj_apply(&v) * z.conj() + fm.conj_apply(&w);
    assert!((lhs - rhs).camax() <= 1e-13);
    assert!((fm.conj_apply(&fm.conj_apply(&v)) - &v).camax() <= 1e-12);
}

#[test]
fn model_files_round_trip_and_validate() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let m = synthetic::obstructed_model(&mut rng).unwrap();
    let json = ModelFile::from_model(&m).to_json().unwrap();
    let back = ModelFile::from_json(&json).unwrap().build().unwrap();
    let rep = model::validate(&back.dc, &back.fm, &back.ab);
    assert!(rep.passed, "{:?}", rep.failures());
    assert!(linalg::max_abs(&(back.fm.gram() - m.fm.gram())) <= 1e-12);
    assert_eq!(back.num_params(), 2);
}

#[test]
fn obstructed_base_satisfies_maurer_cartan() {
    let dc = synthetic::obstructed_complex();
    let mut th = CMat::zeros(4, 2);
    th[(0, 0)] = c(1.0, 0.0);
    th[(1, 1)] = c(1.0, 0.0);
    let phi = kuranishi::solve_phi(&dc, &th, 6).unwrap();
    assert!(kuranishi::recursion_defect(&dc, &th, &phi).unwrap() <= 1e-14);
    let obs = kuranishi::obstruction(&dc, &phi).unwrap();
    assert!(!obs.is_zero(1e-13));
    let base = kuranishi::sample_base(&obs, 0.1, 24, 1e-10, 3).unwrap();
    assert!(!base.points.is_empty());
    for t in &base.points {
        assert!(obs.max_abs_at(t).unwrap() < 1e-10);
        assert!(kuranishi::maurer_cartan_residual(&dc, &phi, t).unwrap() <= 1e-6);
    }
    assert!(kuranishi::trust_radius(&phi) > 0.0);
}

#[test]
fn unobstructed_linear_family_has_no_obstruction() {
    let dc = model::DeformationComplex::flat([1, 4, 6]);
    let th = CMat::identity(4, 4);
    let phi = kuranishi::solve_phi(&dc, &th, 4).unwrap();
    let lin = BeltramiSeries::linear(&th, 4);
    assert!(kuranishi::obstruction(&dc, &phi).unwrap().is_zero(1e-14));
    assert_eq!(phi.linear_part(), lin.linear_part());
}

#[test]
fn hodge_map_is_linear_and_fixes_the_centre() {
    let tm = torus::build_torus_model(&TorusSpec::square(2, 2)).unwrap();
    let phi = TorusFamily::full(2).to_beltrami(4).unwrap();
    let pms = period::period_blocks(tm.fm(), tm.ab(), &phi).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let s1 = HodgeClassVector::from_form_vector(tm.fm(), &tm.kahler_form(&random_hermitian_pd(&mut rng, 2)).unwrap()).unwrap();
    let s2 = torus::poincare_dual(&tm, &SubtorusModel { coords: vec![1] }).unwrap();
    let at0 = pms.evaluate(&[c(0.0, 0.0); 4]).unwrap();
    let h0 = hodgemap::solve_hodge_map_for_class(&at0, tm.ab(), &s1).unwrap();
    assert!(h0.class.max_abs_diff(&s1) <= 1e-14);
    let t = [c(0.05, 0.01), c(-0.02, 0.0), c(0.0, 0.03), c(0.04, -0.01)];
    let pm = pms.evaluate(&t).unwrap();
    let h = |s: &HodgeClassVector| hodgemap::solve_hodge_map_for_class(&pm, tm.ab(), s).unwrap().class;
    let combo = s1.scale(2.0).add(&s2.scale(-0.5)).unwrap();
    let want = h(&s1).scale(2.0).add(&h(&s2).scale(-0.5)).unwrap();
    assert!(h(&combo).max_abs_diff(&want) <= 1e-12);
    assert!(h(&s1).reality_residual(tm.ab()) <= 1e-12);
}

#[test]
fn hodge_map_rejects_non_real_classes() {
    let tm = torus::build_torus_model(&TorusSpec::square(2, 2)).unwrap();
    let pms = period::period_blocks(tm.fm(), tm.ab(), &TorusFamily::full(2).to_beltrami(2).unwrap()).unwrap();
    let pm = pms.evaluate(&[c(0.0, 0.0); 4]).unwrap();
    let mut s = torus::poincare_dual(&tm, &SubtorusModel { coords: vec![0] }).unwrap();
    s.components[1][0] += c(1.0, 1.0);
    assert!(matches!(hodgemap::solve_hodge_map_for_class(&pm, tm.ab(), &s), Err(Error::Precondition(_))));
}

#[test]
fn coordinate_subtorus_locus_matches_its_tangent_space() {
    let d = 2;
    let tm = torus::build_torus_model(&TorusSpec::square(d, 2)).unwrap();
    let phi = TorusFamily::full(d).to_beltrami(4).unwrap();
    let sigma = torus::poincare_dual(&tm, &SubtorusModel { coords: vec![0] }).unwrap();
    let ideal = locus::locus_generators(tm.fm(), tm.ab(), &phi, &sigma, None).unwrap();
    assert!(!ideal.is_trivial());
    let tangent = locus::locus_tangent_space(&ideal);
    assert_eq!(tangent.ncols(), d * d - (d - 1));
    // points along the tangent space stay in the locus for a linear family
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..10 {
        let w = random_cmat(&mut rng, tangent.ncols(), 1, 0.1);
        let t: Vec<C64> = (&tangent * w).iter().copied().collect();
        let (member, r) = locus::locus_membership(&ideal, &t, 1e-9).unwrap();
        assert!(member, "residual {r:e}");
    }
    assert_eq!(locus::locus_membership(&ideal, &[c(0.0, 0.0); 4], 1e-9).unwrap(), (true, 0.0));
    let lin = ideal.linear_part();
    let off = lin.adjoint().column(0).map(|z| z * c(0.05, 0.0));
    let t: Vec<C64> = off.iter().copied().collect();
    assert!(!locus::locus_membership(&ideal, &t, 1e-9).unwrap().0);
}

#[test]
fn coordinate_subtorus_satisfies_the_criterion() {
    let tm = torus::build_torus_model(&TorusSpec::square(2, 2)).unwrap();
    let pts = GridSpec::real(0.2, 5, vec![]).points(4).unwrap();
    let rep = locus::vhc_check(&tm, &SubtorusModel { coords: vec![1] }, &TorusFamily::full(2), &pts, locus::TOL_LHS, locus::TOL_RHS)
        .unwrap();
    assert!(rep.holds);
    assert_eq!(rep.records.len(), pts.len());
}

#[test]
fn criterion_ranks_never_exceed_their_bounds() {
    for d in [2, 3] {
        let tm = torus::build_torus_model(&TorusSpec::square(d, 2)).unwrap();
        let phi = TorusFamily::full(d).to_beltrami(3).unwrap();
        let sigma = HodgeClassVector::from_form_vector(tm.fm(), &tm.kahler_form(&CMat::identity(d, d)).unwrap()).unwrap();
        let samples = SampleSpec { count: 4, radius: 0.1, seed: 5 };
        let rep = approx::pp_criterion(&tm.model, &phi, &sigma, &samples, None).unwrap();
        let n = phi.num_params();
        assert!(rep.linear_rank <= n.min(rep.linear_target));
        assert!(rep.sampled_ranks.iter().all(|&r| r <= n.min(rep.sampled_target)));
        let green = approx::green_rank_weight2(&tm.model, &sigma, None).unwrap();
        assert_eq!(green.verdict, Verdict::PassesFirstOrder);
    }
}
