#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_4, PI};

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use randcert::bell::{Behavior, BellExpression, Scenario};
use randcert::quantum::{behavior_from_model, ProjectiveMeasurement, StateVector};

/// Noisy two-qubit model: cos θ|00⟩ + sin θ|11⟩, qubit observables at the
/// given angles, mixed with white noise at visibility v.
pub fn qubit_behavior(theta: f64, angles: [f64; 4], v: f64) -> Behavior {
    let state = StateVector::schmidt(&[theta.cos(), theta.sin()]).unwrap();
    let ma = ProjectiveMeasurement::qubit_angles(&angles[..2]).unwrap();
    let mb = ProjectiveMeasurement::qubit_angles(&angles[2..]).unwrap();
    behavior_from_model(&state, &ma, &mb)
        .unwrap()
        .mix_with_noise(v)
        .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_qubit_behavior(rng: &mut impl Rng) -> Behavior {
    let theta = rng.gen_range(0.1..FRAC_PI_4);
    let angles = [0.0; 4].map(|_| rng.gen_range(0.0..2.0 * PI));
    let v = rng.gen_range(0.7..1.0);
    qubit_behavior(theta, angles, v)
}

/// The 24 vertices of the (2,2,2,2) no-signaling polytope: 16 deterministic
/// points and 8 PR-type boxes a ⊕ b = xy ⊕ αx ⊕ βy ⊕ γ.
pub fn ns_vertices() -> Vec<Behavior> {
    let s = Scenario::chsh();
    let mut out = Vec::new();
    for bits in 0..16usize {
        let (a0, a1, b0, b1) = (bits & 1, bits >> 1 & 1, bits >> 2 & 1, bits >> 3 & 1);
        out.push(Behavior::from_fn(s, |a, b, x, y| {
            let ok = a == [a0, a1][x] && b == [b0, b1][y];
            if ok { 1.0 } else { 0.0 }
        }));
    }
    for bits in 0..8usize {
        let (al, be, ga) = (bits & 1, bits >> 1 & 1, bits >> 2 & 1);
        out.push(Behavior::from_fn(s, |a, b, x, y| {
            if a ^ b == (x & y) ^ (al & x) ^ (be & y) ^ ga {
                0.5
            } else {
                0.0
            }
        }));
    }
    out
}

fn guess_local(v: &Behavior, a: usize, x: usize) -> f64 {
    v.marginal_a(a, x)
}

/// max Σ_a λ_{a,v} v(a|x) over λ ≥ 0 with Σ λ_{a,v} v = p, as a vertex-cone
/// LP solved by a separate simplex implementation.
pub fn oracle_full_local(p: &Behavior, x: usize) -> f64 {
    let verts = ns_vertices();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let mut vars = Vec::new();
    for a in 0..2 {
        for v in &verts {
            vars.push((lp.add_var(guess_local(v, a, x), (0.0, f64::INFINITY)), v));
        }
    }
    for i in 0..p.scenario().dim() {
        let row: Vec<_> = vars.iter().map(|(var, v)| (*var, v.as_slice()[i])).collect();
        lp.add_constraint(&row, ComparisonOp::Eq, p.as_slice()[i]);
    }
    lp.solve().unwrap().objective()
}

/// Same program with only the Bell value and the normalization fixed. Two
/// equality rows mean some optimal basic solution has at most two nonzero
/// weights, so every pair of columns is tried.
pub fn oracle_bell_local(f: &BellExpression, value: f64, x: usize) -> f64 {
    let cols: Vec<(f64, f64, f64)> = ns_vertices()
        .iter()
        .flat_map(|v| {
            let fv = f.value(v).unwrap();
            (0..2).map(move |a| (fv, 1.0, guess_local(v, a, x)))
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    for (i, ci) in cols.iter().enumerate() {
        if (ci.0 - value).abs() < 1e-12 {
            best = best.max(ci.2);
        }
        for cj in &cols[i + 1..] {
            let det = ci.0 - cj.0;
            if det.abs() < 1e-12 {
                continue;
            }
            let li = (value - cj.0) / det;
            let lj = 1.0 - li;
            if li >= 0.0 && lj >= 0.0 {
                best = best.max(li * ci.2 + lj * cj.2);
            }
        }
    }
    best
}
