mod common;

use common::*;
use hodge_vhs::torus::{self, ExtForm, SubtorusModel, TorusFamily, TorusSpec};
use hodge_vhs::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cvec(v: &[(f64, f64)]) -> Vec<C64> {
    v.iter().map(|&(a, b)| c(a, b)).collect()
}

fn one_forms(d: usize) -> impl Strategy<Value = (Vec<C64>, Vec<C64>)> {
    let part = move || prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d).prop_map(|v| cvec(&v));
    (part(), part())
}

proptest! {
    #[test]
    fn wedge_of_one_forms_matches_oracle((x1, y1) in one_forms(3), (x2, y2) in one_forms(3), (x3, y3) in one_forms(3)) {
        let d = 3;
        let lib = ExtForm::one_form(d, &x1, &y1)
            .wedge(&ExtForm::one_form(d, &x2, &y2))
            .wedge(&ExtForm::one_form(d, &x3, &y3));
        let ora = one_form(d, &x1, &y1).wedge(&one_form(d, &x2, &y2)).wedge(&one_form(d, &x3, &y3));
        for word in combinations(2 * d, 3) {
            let mask: u64 = word.iter().map(|&g| 1u64 << g).sum();
            prop_assert!((lib.coeff(mask) - ora.coeff(&word)).norm() <= 1e-14);
        }
    }

    #[test]
    fn wedge_anticommutes_on_one_forms((x1, y1) in one_forms(2), (x2, y2) in one_forms(2)) {
        let a = ExtForm::one_form(2, &x1, &y1);
        let b = ExtForm::one_form(2, &x2, &y2);
        let (ab, ba) = (a.wedge(&b), b.wedge(&a));
        for mask in 0..16u64 {
            prop_assert!((ab.coeff(mask) + ba.coeff(mask)).norm() <= 1e-14);
        }
    }
}

#[test]
fn wedge_sign_counts_transpositions() {
    // dz̄_0 ∧ dz_0 = -dz_0 ∧ dz̄_0 on d = 1
    assert_eq!(torus::wedge_sign(0b10, 0b01), Some(-1.0));
    assert_eq!(torus::wedge_sign(0b01, 0b10), Some(1.0));
    assert_eq!(torus::wedge_sign(0b01, 0b01), None);
    assert_eq!(torus::canonical(&[2, 0, 1]), Some((1.0, 0b111)));
    assert_eq!(torus::canonical(&[1, 0]), Some((-1.0, 0b11)));
}

#[test]
fn contractions_match_oracle_substitution() {
    for (d, n) in [(2, 2), (3, 2), (3, 3)] {
        let tm = torus::build_torus_model(&TorusSpec::square(d, n)).unwrap();
        for m in 0..d * d {
            let (a, b) = (m / d, m % d);
            let cm = &tm.fm().contractions()[m];
            for (k, mask) in tm.all_monomials().into_iter().enumerate() {
                let word: Vec<usize> = (0..2 * d).filter(|g| mask & (1 << g) != 0).collect();
                let want = to_library_vector(&tm, &Form::monomial(&word, c(1.0, 0.0)).contract(d, a, b));
                let got = cm.column(k).into_owned();
                assert!((got - want).camax() <= 1e-14, "d={d} n={n} m={m} word={word:?}");
            }
        }
    }
}

#[test]
fn conjugation_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (d, n) in [(2, 2), (3, 3)] {
        let tm = torus::build_torus_model(&TorusSpec::square(d, n)).unwrap();
        let v = random_cmat(&mut rng, tm.fm().dim(), 1, 1.0).column(0).into_owned();
        let want = to_library_vector(&tm, &from_library_vector(&tm, &v).conj(d));
        assert!((tm.fm().conj_apply(&v) - want).camax() <= 1e-14);
    }
}

#[test]
fn kahler_form_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for d in 1..=3 {
        let tm = torus::build_torus_model(&TorusSpec::square(d, 2)).unwrap();
        let g = random_hermitian_pd(&mut rng, d);
        let want = to_library_vector(&tm, &kahler(d, &g));
        assert!((tm.kahler_form(&g).unwrap() - want).camax() <= 1e-14);
    }
}

#[test]
fn deformed_frame_spans_the_oracle_coframe_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = 2;
    let tm = torus::build_torus_model(&TorusSpec::square(d, 2)).unwrap();
    let phi = random_cmat(&mut rng, d, d, 0.3);
    let frame = tm.deformed_frame(&phi).unwrap();
    // every (1,1) coframe product is a combination of the frame columns
    let theta = |a: usize| {
        let mut dzb = vec![c(0.0, 0.0); d];
        for b in 0..d {
            dzb[b] = phi[(a, b)];
        }
        let mut dz = vec![c(0.0, 0.0); d];
        dz[a] = c(1.0, 0.0);
        one_form(d, &dz, &dzb)
    };
    let theta_bar = |b: usize| theta(b).conj(d);
    for a in 0..d {
        for b in 0..d {
            let v = to_library_vector(&tm, &theta(a).wedge(&theta_bar(b)));
            let coeffs = frame.clone().svd(true, true).solve(&v, 1e-14).unwrap();
            assert!((&frame * coeffs - v).camax() <= 1e-12);
        }
    }
}

#[test]
fn poincare_dual_is_real_and_pure() {
    let tm = torus::build_torus_model(&TorusSpec::square(3, 2)).unwrap();
    let class = torus::poincare_dual(&tm, &SubtorusModel { coords: vec![1] }).unwrap();
    assert!(class.reality_residual(tm.ab()) <= 1e-14);
    assert!(class.off_middle() <= 1e-14);
}

#[test]
fn full_family_is_the_coordinate_matrix() {
    let fam = TorusFamily::full(2);
    let t = cvec(&[(0.1, 0.0), (0.0, 0.2), (0.3, 0.0), (0.0, -0.4)]);
    let m = fam.at(&t).unwrap();
    assert_eq!(torus::phi_coeffs(&m), t);
    assert_eq!(torus::phi_matrix(2, &t), m);
}

#[test]
fn rational_structure_round_trips() {
    let spec = TorusSpec::square(2, 2);
    let tm = torus::build_torus_model(&spec).unwrap();
    let rs = torus::rational_structure(&spec).unwrap();
    let v = tm.kahler_form(&hodge_vhs::linalg::CMat::identity(2, 2)).unwrap();
    assert!((rs.from_rational(&rs.to_rational(&v)) - v).camax() <= 1e-12);
}
