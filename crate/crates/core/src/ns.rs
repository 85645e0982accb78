//! No-signaling analogue of the guessing programs: blocks are unnormalized
//! no-signaling behaviors, so every program is a linear program.

use crate::bell::{Behavior, BellExpression, NsBasis, NsCoord, Scenario, EXTERNAL_TOL};
use crate::certificates::{extract, Certificate, Relaxation};
use crate::digp::{check_report, spread_residual, ConstraintMode, DataRows, GuessingProblem, Solution};
use crate::error::{Error, Result};
use crate::solver::{
    solve as solve_conic, BlockKind, ConicProgram, Entry, ProgramBuilder, Sense, SolverSettings,
};

/// Marginal-equality rows (Σ_b p(ab|xy) independent of y and Σ_a p(ab|xy)
/// independent of x), thinned to a linearly independent set.
fn signaling_rows(s: Scenario) -> Vec<Vec<(usize, f64)>> {
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    let dim = s.dim();
    for x in 0..s.inputs_a() {
        for a in 0..s.outputs_a() {
            for y in 1..s.inputs_b() {
                let mut r = vec![0.0; dim];
                for b in 0..s.outputs_b() {
                    r[s.index(a, b, x, y)] += 1.0;
                    r[s.index(a, b, x, 0)] -= 1.0;
                }
                candidates.push(r);
            }
        }
    }
    for y in 0..s.inputs_b() {
        for b in 0..s.outputs_b() {
            for x in 1..s.inputs_a() {
                let mut r = vec![0.0; dim];
                for a in 0..s.outputs_a() {
                    r[s.index(a, b, x, y)] += 1.0;
                    r[s.index(a, b, 0, y)] -= 1.0;
                }
                candidates.push(r);
            }
        }
    }
    // modified Gram-Schmidt keeps the rows whose residual survives
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for r in candidates {
        let mut v = r.clone();
        for q in &basis {
            let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-9 {
            basis.push(v.iter().map(|a| a / norm).collect());
            kept.push(
                r.iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(i, w)| (i, *w))
                    .collect(),
            );
        }
    }
    kept
}

fn add_block(b: &mut ProgramBuilder, s: Scenario) -> usize {
    let blk = b.add_block(BlockKind::Nonneg(s.dim()));
    for row in signaling_rows(s) {
        b.add_constraint(
            row.into_iter()
                .map(|(i, w)| Entry::new(blk, i, i, w))
                .collect(),
            0.0,
        );
    }
    blk
}

fn linear_entries(blk: usize, f: &BellExpression) -> Vec<Entry> {
    f.coeffs()
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != 0.0)
        .map(|(i, w)| Entry::new(blk, i, i, *w))
        .collect()
}

/// The linear program: one nonnegative, no-signaling table per guess.
pub fn assemble_ns(gp: &GuessingProblem) -> Result<(ConicProgram, DataRows)> {
    if let ConstraintMode::FullBehavior(p) = &gp.mode {
        if !p.validate_normalized(EXTERNAL_TOL).no_signaling_ok() {
            return Err(Error::Infeasible(
                "the behavior signals, so no no-signaling decomposition exists".into(),
            ));
        }
    }
    let s = gp.check()?;
    let ns = NsBasis::new(s);
    let mut b = ProgramBuilder::new(Sense::Maximize);
    let blocks: Vec<usize> = (0..gp.target.num_guesses(s))
        .map(|_| add_block(&mut b, s))
        .collect();
    for (g, &blk) in blocks.iter().enumerate() {
        b.add_objective(linear_entries(blk, &gp.target.guess_functional(s, g)));
    }
    let mut rows = DataRows::default();
    let sum_rows = |b: &mut ProgramBuilder, f: &BellExpression, rhs: f64| {
        let entries = blocks
            .iter()
            .flat_map(|&blk| linear_entries(blk, f))
            .collect();
        b.add_constraint(entries, rhs)
    };
    match &gp.mode {
        ConstraintMode::FullBehavior(p) => {
            let coords = ns.coordinates(p)?;
            for (k, c) in coords.iter().enumerate() {
                rows.link
                    .push(sum_rows(&mut b, &ns.coordinate_functional(k), *c));
            }
        }
        ConstraintMode::BellValues {
            constraints,
            at_least,
        } => {
            let slack = at_least.then(|| b.add_block(BlockKind::Nonneg(constraints.len())));
            for (j, c) in constraints.iter().enumerate() {
                let mut entries: Vec<Entry> = blocks
                    .iter()
                    .flat_map(|&blk| linear_entries(blk, &c.expression))
                    .collect();
                if let Some(sl) = slack {
                    entries.push(Entry::new(sl, j, j, -1.0));
                }
                rows.bell
                    .push(b.add_constraint(entries, c.value - c.expression.constant()));
            }
            let trace =
                ns.coordinate_functional(ns.position(NsCoord::Trace).expect("trace coordinate"));
            rows.normalization = Some(sum_rows(&mut b, &trace, 1.0));
        }
    }
    Ok((b.build()?, rows))
}

/// G_NS: the guessing probability against no-signaling adversaries.
pub fn ns_solve(gp: &GuessingProblem) -> Result<Solution> {
    ns_solve_with(gp, &SolverSettings::default())
}

pub fn ns_solve_with(gp: &GuessingProblem, settings: &SolverSettings) -> Result<Solution> {
    let s = gp.scenario()?;
    let (program, rows) = assemble_ns(gp)?;
    let report = solve_conic(&program, settings)?;
    check_report(&report, "no-signaling guessing probability")?;
    let mut blocks = Vec::new();
    for x in report.x.iter().take(gp.target.num_guesses(s)) {
        blocks.push(Behavior::new(s, x.data.clone())?);
    }
    let link_residual = match &gp.mode {
        ConstraintMode::FullBehavior(p) => spread_residual(&mut blocks, p)?,
        ConstraintMode::BellValues { .. } => 0.0,
    };
    Ok(Solution {
        value: report.primal_value,
        eve_marginals: blocks.iter().map(|b| b.trace()).collect(),
        blocks,
        duals: rows.read(&report.multipliers),
        link_residual,
        report,
    })
}

/// Certificate valid on the whole no-signaling polytope, read off the LP
/// multipliers. Returned unverified.
pub fn ns_certificate(sol: &Solution, gp: &GuessingProblem) -> Result<Certificate> {
    extract(sol, gp, Relaxation::NoSignaling)
}

/// max f·p' over normalized no-signaling behaviors p' (constant included).
pub fn ns_maximize(f: &BellExpression) -> Result<f64> {
    ns_maximize_with(f, &SolverSettings::default())
}

pub fn ns_maximize_with(f: &BellExpression, settings: &SolverSettings) -> Result<f64> {
    let s = f.scenario();
    let ns = NsBasis::new(s);
    let mut b = ProgramBuilder::new(Sense::Maximize);
    let blk = add_block(&mut b, s);
    let trace = ns.coordinate_functional(ns.position(NsCoord::Trace).expect("trace coordinate"));
    b.add_constraint(linear_entries(blk, &trace), 1.0);
    b.add_objective(linear_entries(blk, f));
    let report = solve_conic(&b.build()?, settings)?;
    check_report(&report, "no-signaling maximization")?;
    Ok(report.primal_value + f.constant())
}
