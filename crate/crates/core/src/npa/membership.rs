use super::{Level, MomentStructure};
use crate::bell::Behavior;
use crate::error::{Error, Result};
use crate::solver::{solve, BlockKind, Entry, ProgramBuilder, Sense, SolverSettings};

/// Outcome of a membership test. The margin is the largest t with
/// Γ − t·𝕀 ⪰ 0 over all moment matrices matching the behavior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Membership {
    Feasible(f64),
    Infeasible(f64),
}

impl Membership {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Membership::Feasible(_))
    }

    pub fn margin(&self) -> f64 {
        match *self {
            Membership::Feasible(t) | Membership::Infeasible(t) => t,
        }
    }
}

/// Decide whether a (possibly unnormalized) behavior lies in Q̃_k, with
/// `tol` slack on the margin.
pub fn membership_test(p: &Behavior, level: &Level, tol: f64) -> Result<Membership> {
    membership_test_with(p, level, tol, &SolverSettings::default())
}

pub fn membership_test_with(
    p: &Behavior,
    level: &Level,
    tol: f64,
    settings: &SolverSettings,
) -> Result<Membership> {
    let m = MomentStructure::build(p.scenario(), level, false)?;
    let coords = m.ns_basis().coordinates(p)?;
    let n = m.size();
    // Γ = X + (s − shift)·𝕀 with X ⪰ 0, s ≥ 0; maximize s.
    let shift = n as f64 * (1.0 + coords.iter().fold(0.0f64, |a, c| a.max(c.abs())));
    let mut b = ProgramBuilder::new(Sense::Maximize);
    let x = b.add_block(BlockKind::Psd(n));
    let s = b.add_block(BlockKind::Nonneg(1));
    let mut add = |entries: Vec<Entry>, rhs: f64| {
        let diag: f64 = entries
            .iter()
            .filter(|e| e.row == e.col)
            .map(|e| e.value)
            .sum();
        let mut entries = entries;
        if diag != 0.0 {
            entries.push(Entry::new(s, 0, 0, diag));
        }
        b.add_constraint(entries, rhs + diag * shift);
    };
    for (entries, rhs) in m.constraint_rows(x) {
        add(entries, rhs);
    }
    for (k, &id) in m.links().iter().enumerate() {
        add(vec![m.class_entry(x, id, 1.0)], coords[k]);
    }
    b.add_objective([Entry::new(s, 0, 0, 1.0)]);
    let report = solve(&b.build()?, settings)?;
    if !report.status.is_optimal() {
        return Err(Error::Solver(format!(
            "membership test ended with {:?}",
            report.status
        )));
    }
    let t = report.primal_value - shift;
    Ok(if t >= -tol {
        Membership::Feasible(t)
    } else {
        Membership::Infeasible(t)
    })
}
