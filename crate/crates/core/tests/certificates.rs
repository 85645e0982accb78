mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use randcert::bell::{local_bound, Behavior, BellExpression, BinaryCorrelators, Scenario};
use randcert::certificates::{
    certified_bound, extract_certificate, offset_certificate, rescale_to_named_form,
    verify_certificate, Certificate, Relaxation, VERIFY_TOL,
};
use randcert::digp::{solve, GuessingProblem, Target};
use randcert::npa::Level;
use randcert::quantum::{chsh_noise_behavior, partial_entangled_behavior};
use randcert::Error;

const TOL: f64 = 1e-6;
const GLOBAL_11: Target = Target::Global { x: 0, y: 0 };

fn solved_certificate(p: &Behavior, target: Target, level: Level) -> (f64, Certificate) {
    let gp = GuessingProblem::full(p.clone(), target, level);
    let sol = solve(&gp).unwrap();
    (sol.value, extract_certificate(&sol, &gp).unwrap())
}

fn eight_term() -> BellExpression {
    let mut w = BinaryCorrelators::zeros(2, 2);
    w.corr = vec![vec![2.74, 2.60], vec![2.35, -3.86]];
    w.mean_a = vec![1.36, 1.51];
    w.mean_b = vec![-0.390, 2.05];
    BellExpression::from_correlators(0.0, &w).unwrap()
}

#[test]
fn trivial_certificate_bounds_everything_by_one() {
    let mut c = Certificate::trivial(Scenario::chsh(), GLOBAL_11, Relaxation::Npa(Level::Npa(2)));
    assert_eq!(c.bound, 1.0);
    c.verify().unwrap();
    assert!(c.verified);
    assert!(c.margins.iter().all(|&m| m <= TOL), "{:?}", c.margins);
    let q = chsh_noise_behavior(0.9).unwrap();
    assert!((certified_bound(&c, &q).unwrap() - 1.0).abs() < 1e-12);
    assert!((certified_bound(&c, &Behavior::uniform(Scenario::chsh())).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn deterministic_behavior_is_matched_by_the_trivial_bound() {
    let p = Behavior::from_fn(Scenario::chsh(), |a, b, _, _| if a == 0 && b == 1 { 1.0 } else { 0.0 });
    let (g, _) = solved_certificate(&p, Target::Local { x: 0 }, Level::Npa(2));
    let mut c = Certificate::trivial(Scenario::chsh(), Target::Local { x: 0 }, Relaxation::Npa(Level::Npa(2)));
    c.verify().unwrap();
    assert!(c.verified);
    assert!((certified_bound(&c, &p).unwrap() - g).abs() < 2.0 * TOL);
}

#[test]
fn extracted_certificates_are_tight_and_valid() {
    let mut rng = common::rng(3);
    let mut cases: Vec<(Behavior, Target)> = vec![
        (chsh_noise_behavior(0.8).unwrap(), GLOBAL_11),
        (chsh_noise_behavior(0.9).unwrap(), Target::Local { x: 1 }),
    ];
    for _ in 0..2 {
        cases.push((common::random_qubit_behavior(&mut rng), Target::Global { x: 1, y: 0 }));
    }
    for (p, target) in cases {
        let (g, mut c) = solved_certificate(&p, target, Level::Npa(2));
        assert!((c.bound - g).abs() <= 2.0 * TOL, "bound {} vs primal {g}", c.bound);
        c.verify().unwrap();
        for &m in &c.margins {
            assert!((-1e-5..=VERIFY_TOL).contains(&m), "margin {m}");
        }
        assert!(c.verified);
        assert!((certified_bound(&c, &p).unwrap() - g).abs() <= 2.0 * TOL);
        assert_eq!(c.source_hash.len(), 64);
    }
}

#[test]
fn unverified_certificates_are_refused() {
    let p = chsh_noise_behavior(0.9).unwrap();
    let (_, c) = solved_certificate(&p, GLOBAL_11, Level::Npa(1));
    assert!(!c.verified);
    assert!(matches!(certified_bound(&c, &p), Err(Error::Unverified(_))));
}

#[test]
fn certificates_bound_other_behaviors() {
    // a certificate designed at one point stays valid, but loose, elsewhere
    let design = chsh_noise_behavior(1.0).unwrap();
    let (_, raw) = solved_certificate(&design, GLOBAL_11, Level::Npa(2));
    let c = raw.tightened().unwrap();
    assert!(c.verified);
    let mut others = vec![chsh_noise_behavior(0.95).unwrap(), chsh_noise_behavior(0.85).unwrap()];
    let mut rng = common::rng(21);
    others.push(common::random_qubit_behavior(&mut rng));
    for q in others {
        let g = solve(&GuessingProblem::full(q.clone(), GLOBAL_11, Level::Npa(2))).unwrap().value;
        let bound = certified_bound(&c, &q).unwrap();
        assert!(bound >= g - 2.0 * TOL, "{bound} < {g}");
    }
}

#[test]
fn offset_certificate_along_chsh_approaches_the_tsirelson_value() {
    let p = chsh_noise_behavior(1.0).unwrap();
    let g = solve(&GuessingProblem::full(p.clone(), GLOBAL_11, Level::Npa(2))).unwrap().value;
    let mut last = f64::INFINITY;
    for alpha in [-5.0, -50.0] {
        let c = offset_certificate(
            &BellExpression::chsh().scaled(alpha),
            GLOBAL_11,
            Relaxation::Npa(Level::Npa(2)),
            &p,
        )
        .unwrap();
        let bound = certified_bound(&c, &p).unwrap();
        assert!(bound >= g - 1e-5 && bound < last, "{bound}");
        last = bound;
    }
    assert!(last - g < 5e-3);
}

#[test]
fn shifting_moves_values_and_margins_together() {
    let p = chsh_noise_behavior(0.9).unwrap();
    let (_, mut c) = solved_certificate(&p, Target::Local { x: 0 }, Level::Npa(1));
    c.verify().unwrap();
    let w = 0.125;
    let mut s = c.shifted(w).unwrap();
    assert_eq!(s.bound, c.bound + w);
    let q = common::qubit_behavior(0.5, [0.1, 1.2, 0.4, 2.0], 0.9);
    let (a, b) = (s.expression.value(&q).unwrap(), c.expression.value(&q).unwrap());
    assert!((a - (b + w)).abs() < 1e-14);
    let listed = s.margins.clone();
    s.verify().unwrap();
    for ((m, m0), l) in s.margins.iter().zip(&c.margins).zip(&listed) {
        assert!((m - (m0 - w)).abs() < 1e-6 && (m - l).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn shift_is_exact_on_normalized_behaviors(w in -3.0f64..3.0, seed in 0u64..1000) {
        let mut rng = common::rng(seed);
        let q = common::random_qubit_behavior(&mut rng);
        let c = Certificate::trivial(Scenario::chsh(), GLOBAL_11, Relaxation::NoSignaling);
        let f = c.expression.add_scaled(0.7, &BellExpression::chsh()).unwrap();
        let c = Certificate { expression: f, ..c };
        let s = c.shifted(w).unwrap();
        let d = s.expression.value(&q).unwrap() - c.expression.value(&q).unwrap();
        prop_assert!((d - w).abs() < 1e-12);
    }
}

#[test]
fn perfect_visibility_certificate_is_chsh_shaped() {
    let (_, c) = solved_certificate(&chsh_noise_behavior(1.0).unwrap(), GLOBAL_11, Level::Npa(2));
    let form = rescale_to_named_form(&c).unwrap();
    assert!((form.f11 - 1.0).abs() < 0.02 && (form.f22 - 1.0).abs() < 0.02, "{form:?}");
    // the dual optimum is not attained here; the marginal weights are noise
    // along the diverging direction, still well inside the family
    assert!(form.residual < 0.3, "{}", form.residual);
}

#[test]
fn noisy_certificate_leaves_the_chsh_point() {
    let (_, c) = solved_certificate(&chsh_noise_behavior(0.9).unwrap(), GLOBAL_11, Level::Npa(2));
    let form = rescale_to_named_form(&c).unwrap();
    assert!(
        (form.f11 - 1.0).abs() > 0.02 || (form.f22 - 1.0).abs() > 0.02,
        "{form:?}"
    );
    // the optimum stays inside the two-parameter family
    assert!(form.residual < 0.02, "{}", form.residual);
}

#[test]
fn partially_entangled_certificate_needs_all_terms() {
    let theta = 27.0 * PI / 200.0;
    let p = partial_entangled_behavior(theta, 0.99).unwrap();
    let (g, c) = solved_certificate(&p, Target::Global { x: 1, y: 0 }, Level::Npa(3));
    assert!((c.bound - g).abs() <= 2.0 * TOL);
    assert!((g - 0.609).abs() < 0.005, "{g}");
    let form = rescale_to_named_form(&c).unwrap();
    assert!(form.residual > 0.3, "{form:?}");
    assert!(rescale_to_named_form(&Certificate { expression: eight_term(), ..c })
        .unwrap()
        .residual
        > 0.3);
}

#[test]
fn eight_term_expression_local_bound() {
    let lb = local_bound(&eight_term()).unwrap();
    assert_eq!(lb.strategies_enumerated, 16);
    // independent enumeration over ±1 assignments
    let mut best = f64::NEG_INFINITY;
    for bits in 0..16u32 {
        let v = |i: u32| if bits >> i & 1 == 0 { 1.0 } else { -1.0 };
        let (a1, a2, b1, b2) = (v(0), v(1), v(2), v(3));
        let val = 2.74 * a1 * b1 + 2.60 * a1 * b2 + 2.35 * a2 * b1 - 3.86 * a2 * b2
            + 1.36 * a1
            + 1.51 * a2
            - 0.390 * b1
            + 2.05 * b2;
        best = best.max(val);
    }
    assert!((lb.value - best).abs() < 1e-12);
    assert!((lb.value - 8.36).abs() < 0.01, "{}", lb.value);
}

#[test]
fn verification_reports_one_margin_per_guess() {
    let c = Certificate::trivial(Scenario::chsh(), GLOBAL_11, Relaxation::Npa(Level::Npa(1)));
    let margins = verify_certificate(&c).unwrap();
    assert_eq!(margins.len(), 4);
    // f·p' = 1 and p'(guess) ≤ 1, reached by the deterministic point
    assert!(margins.iter().all(|m| m.abs() < 1e-6), "{margins:?}");
}

#[test]
fn json_round_trips() {
    let (_, mut c) = solved_certificate(&chsh_noise_behavior(0.9).unwrap(), GLOBAL_11, Level::Npa(1));
    c.verify().unwrap();
    assert_eq!(Certificate::from_json(&c.to_json().unwrap()).unwrap(), c);
}
