mod common;

use std::f64::consts::SQRT_2;

use randcert::bell::{Behavior, BellExpression, Scenario};
use randcert::certificates::{verify_certificate, Relaxation};
use randcert::digp::{solve, GuessingProblem, Target};
use randcert::npa::{membership_test, Level};
use randcert::ns::{ns_certificate, ns_maximize, ns_solve};
use common::{ns_vertices, oracle_bell_local, oracle_full_local};
use randcert::Error;

const TOL: f64 = 1e-6;

#[test]
fn vertices_are_no_signaling_and_distinct() {
    let v = ns_vertices();
    assert_eq!(v.len(), 24);
    for (i, p) in v.iter().enumerate() {
        assert!(p.validate_normalized(1e-12).no_signaling_ok());
        for q in &v[i + 1..] {
            assert!(p.max_abs_diff(q).unwrap() > 0.1);
        }
    }
}

#[test]
fn uniform_behavior_gives_no_randomness() {
    let gp = GuessingProblem::full(Behavior::uniform(Scenario::chsh()), Target::Local { x: 0 }, Level::Npa(1));
    assert!((ns_solve(&gp).unwrap().value - 1.0).abs() < 1e-8);
}

#[test]
fn pr_box_gives_one_bit() {
    let p = Behavior::pr_box();
    let gp = GuessingProblem::full(p.clone(), Target::Local { x: 0 }, Level::Npa(1));
    let sol = ns_solve(&gp).unwrap();
    assert!((sol.value - 0.5).abs() < 1e-8, "{}", sol.value);
    assert!((oracle_full_local(&p, 0) - 0.5).abs() < 1e-9);
}

#[test]
fn chsh_at_tsirelson_value() {
    let i = 2.0 * SQRT_2;
    let gp = GuessingProblem::bell_values(
        vec![(BellExpression::chsh(), i)],
        Target::Local { x: 0 },
        Level::Npa(1),
    );
    let g = ns_solve(&gp).unwrap().value;
    let oracle = oracle_bell_local(&BellExpression::chsh(), i, 0);
    assert!((oracle - (1.5 - i / 4.0)).abs() < 1e-12);
    assert!((g - oracle).abs() < 1e-5, "{g} vs {oracle}");
}

#[test]
fn agrees_with_the_vertex_oracle_on_random_behaviors() {
    let mut rng = common::rng(8);
    for _ in 0..5 {
        let p = common::random_qubit_behavior(&mut rng);
        for x in 0..2 {
            let g = ns_solve(&GuessingProblem::full(p.clone(), Target::Local { x }, Level::Npa(1)))
                .unwrap()
                .value;
            let oracle = oracle_full_local(&p, x);
            assert!((g - oracle).abs() < 1e-6, "{g} vs {oracle}");
        }
    }
}

#[test]
fn chsh_curve_matches_the_oracle() {
    for i in [2.0, 2.3, 2.6, 3.0, 3.5, 4.0] {
        let gp = GuessingProblem::bell_values(
            vec![(BellExpression::chsh(), i)],
            Target::Local { x: 1 },
            Level::Npa(1),
        );
        let g = ns_solve(&gp).unwrap().value;
        let oracle = oracle_bell_local(&BellExpression::chsh(), i, 1);
        assert!((g - oracle).abs() < 1e-5, "I={i}: {g} vs {oracle}");
    }
}

#[test]
fn pr_box_certificate_is_tight() {
    let gp = GuessingProblem::full(Behavior::pr_box(), Target::Local { x: 0 }, Level::Npa(1));
    let sol = ns_solve(&gp).unwrap();
    let mut c = ns_certificate(&sol, &gp).unwrap();
    assert_eq!(c.relaxation, Relaxation::NoSignaling);
    assert!((c.bound - 0.5).abs() < 2.0 * TOL);
    c.verify().unwrap();
    assert!(c.verified);
    assert!(c.margins.iter().all(|&m| m <= TOL), "{:?}", c.margins);
}

#[test]
fn ns_certificates_match_the_primal() {
    let mut rng = common::rng(2);
    for target in [Target::Local { x: 1 }, Target::Global { x: 0, y: 1 }] {
        let p = common::random_qubit_behavior(&mut rng);
        let gp = GuessingProblem::full(p, target, Level::Npa(1));
        let sol = ns_solve(&gp).unwrap();
        let c = ns_certificate(&sol, &gp).unwrap();
        assert!((c.bound - sol.value).abs() <= 2.0 * TOL);
        let margins = verify_certificate(&c).unwrap();
        assert!(margins.iter().all(|&m| m <= TOL), "{margins:?}");
    }
}

#[test]
fn maximize_matches_vertex_enumeration() {
    let f = BellExpression::from_fn(Scenario::chsh(), 0.25, |a, b, x, y| {
        ((a + 2 * b + 3 * x + 5 * y) % 7) as f64 - 3.0
    });
    let best = ns_vertices()
        .iter()
        .map(|v| f.value(v).unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((ns_maximize(&f).unwrap() - best).abs() < 1e-6);
}

#[test]
fn signaling_behavior_is_infeasible() {
    let mut p = Behavior::uniform(Scenario::chsh());
    p.set(0, 0, 0, 0, 0.5);
    p.set(0, 1, 0, 0, 0.0);
    p.set(1, 0, 0, 0, 0.5);
    p.set(1, 1, 0, 0, 0.0);
    assert!(!p.validate_normalized(1e-9).no_signaling_ok());
    let err = ns_solve(&GuessingProblem::full(p, Target::Local { x: 0 }, Level::Npa(1))).unwrap_err();
    assert!(matches!(err, Error::Infeasible(_)), "{err}");
}

#[test]
fn relaxations_are_nested() {
    let mut rng = common::rng(13);
    for _ in 0..3 {
        let p = common::random_qubit_behavior(&mut rng);
        let target = Target::Global { x: 1, y: 1 };
        let g = |level| solve(&GuessingProblem::full(p.clone(), target, level)).unwrap().value;
        let gns = ns_solve(&GuessingProblem::full(p.clone(), target, Level::Npa(1))).unwrap().value;
        let (g1, g2) = (g(Level::Npa(1)), g(Level::Npa(2)));
        assert!(gns >= g2 - 2.0 * TOL && g1 >= g2 - 2.0 * TOL, "{gns} {g1} {g2}");
    }
}

#[test]
fn level_one_admits_negative_probabilities() {
    // marginals 0.3 everywhere, p(00|00) = −0.1: the level-1 moment matrix
    // only bounds |p(00|xy) − 0.09| by 0.21, so this point is in Q₁ but not
    // in the no-signaling polytope, and G_NS ≥ G₁ is not guaranteed
    let p = Behavior::from_fn(Scenario::chsh(), |a, b, x, y| {
        let g = if (x, y) == (0, 0) { -0.1 } else { 0.09 };
        match (a, b) {
            (0, 0) => g,
            (0, 1) | (1, 0) => 0.3 - g,
            _ => 0.4 + g,
        }
    });
    assert!(p.validate_normalized(1e-12).no_signaling_ok());
    assert!(!p.validate_normalized(1e-12).positivity_ok());
    assert!(membership_test(&p, &Level::Npa(1), 1e-9).unwrap().is_feasible());
    assert!(!membership_test(&p, &Level::Npa(2), 1e-9).unwrap().is_feasible());
}
