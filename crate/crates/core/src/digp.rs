//! Guessing-probability relaxations: decompose p into unnormalized blocks
//! p̃ᵃ (or p̃^{ab}), each in Q̃_k, maximizing the adversary's success.

use serde::{Deserialize, Serialize};

use crate::bell::{Behavior, BellExpression, NsCoord, Scenario, EXTERNAL_TOL};
use crate::error::{Error, Result};
use crate::npa::{Level, MomentStructure};
use crate::solver::{
    solve as solve_conic, BlockKind, ConicProgram, Entry, ProgramBuilder, Sense, SolverReport,
    SolverSettings, SolverStatus,
};

/// Blocks with smaller trace are reported as exact zeros.
pub const DEGENERATE_TRACE: f64 = 1e-10;

/// Whose output the adversary guesses. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Local { x: usize },
    Global { x: usize, y: usize },
}

impl Target {
    pub fn check(&self, s: Scenario) -> Result<()> {
        let ok = match *self {
            Target::Local { x } => x < s.inputs_a(),
            Target::Global { x, y } => x < s.inputs_a() && y < s.inputs_b(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "target {self:?} does not fit {s}"
            )))
        }
    }

    /// One block per guess: d for Local, d_A·d_B for Global.
    pub fn num_guesses(&self, s: Scenario) -> usize {
        match self {
            Target::Local { .. } => s.outputs_a(),
            Target::Global { .. } => s.outputs_a() * s.outputs_b(),
        }
    }

    /// The functional read on block `g`: p(a|x*) or p(ab|x*y*). Global
    /// guesses are numbered g = a·d_B + b.
    pub fn guess_functional(&self, s: Scenario, g: usize) -> BellExpression {
        match *self {
            Target::Local { x } => BellExpression::from_fn(s, 0.0, |a, _, xx, _| {
                if a == g && xx == x {
                    1.0 / s.inputs_b() as f64
                } else {
                    0.0
                }
            }),
            Target::Global { x, y } => {
                let (ga, gb) = (g / s.outputs_b(), g % s.outputs_b());
                BellExpression::from_fn(s, 0.0, |a, b, xx, yy| {
                    if (a, b, xx, yy) == (ga, gb, x, y) {
                        1.0
                    } else {
                        0.0
                    }
                })
            }
        }
    }

    /// The objective evaluated on a single behavior: max over guesses of the
    /// guessed-outcome probability.
    pub fn best_single_guess(&self, p: &Behavior) -> f64 {
        let s = p.scenario();
        (0..self.num_guesses(s))
            .map(|g| self.guess_functional(s, g).linear_value(p))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellConstraint {
    pub expression: BellExpression,
    pub value: f64,
}

/// What the adversary's decomposition must reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConstraintMode {
    /// Σ blocks = p.
    FullBehavior(Behavior),
    /// Σ blocks reproduces each Bell value (f·p + constant = value), and the
    /// blocks' traces sum to one. With `at_least`, values are lower bounds.
    BellValues {
        constraints: Vec<BellConstraint>,
        #[serde(default)]
        at_least: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessingProblem {
    pub target: Target,
    pub mode: ConstraintMode,
    #[serde(default)]
    pub level: Level,
}

impl GuessingProblem {
    pub fn full(p: Behavior, target: Target, level: Level) -> Self {
        GuessingProblem {
            target,
            mode: ConstraintMode::FullBehavior(p),
            level,
        }
    }

    pub fn bell_values(
        constraints: Vec<(BellExpression, f64)>,
        target: Target,
        level: Level,
    ) -> Self {
        GuessingProblem {
            target,
            mode: ConstraintMode::BellValues {
                constraints: constraints
                    .into_iter()
                    .map(|(expression, value)| BellConstraint { expression, value })
                    .collect(),
                at_least: false,
            },
            level,
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        match &self.mode {
            ConstraintMode::FullBehavior(p) => Ok(p.scenario()),
            ConstraintMode::BellValues { constraints, .. } => {
                let first = constraints
                    .first()
                    .ok_or_else(|| Error::InvalidArgument("no Bell constraints given".into()))?;
                let s = first.expression.scenario();
                for c in constraints {
                    s.ensure_same(&c.expression.scenario())?;
                }
                Ok(s)
            }
        }
    }

    /// Validate the problem data; returns the scenario.
    pub fn check(&self) -> Result<Scenario> {
        let s = self.scenario()?;
        self.target.check(s)?;
        if let ConstraintMode::FullBehavior(p) = &self.mode {
            let report = p.validate_normalized(EXTERNAL_TOL);
            if !report.passes {
                return Err(Error::InvalidArgument(format!(
                    "behavior fails validation: {report}"
                )));
            }
        }
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Rows of the assembled program that carry the data, so that dual
/// multipliers can be read back.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataRows {
    /// One row per no-signaling coordinate (full-behavior mode).
    pub link: Vec<usize>,
    /// One row per Bell constraint.
    pub bell: Vec<usize>,
    /// Σ traces = 1 (Bell-values mode).
    pub normalization: Option<usize>,
}

/// Dual multipliers of the data rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataDuals {
    pub link: Vec<f64>,
    pub bell: Vec<f64>,
    pub normalization: Option<f64>,
}

impl DataRows {
    pub(crate) fn read(&self, multipliers: &[f64]) -> DataDuals {
        DataDuals {
            link: self.link.iter().map(|&r| multipliers[r]).collect(),
            bell: self.bell.iter().map(|&r| multipliers[r]).collect(),
            normalization: self.normalization.map(|r| multipliers[r]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Assembly {
    pub program: ConicProgram,
    pub structure: MomentStructure,
    pub rows: DataRows,
}

/// The primal program: one unnormalized moment block per guess, tied to the
/// data through the no-signaling coordinates (or the Bell values).
pub fn assemble(gp: &GuessingProblem) -> Result<Assembly> {
    let s = gp.check()?;
    let structure = MomentStructure::build(s, &gp.level, false)?;
    let ns = structure.ns_basis();
    let guesses = gp.target.num_guesses(s);
    let mut b = ProgramBuilder::new(Sense::Maximize);
    let n = structure.size();
    let blocks: Vec<usize> = (0..guesses)
        .map(|_| b.add_block(BlockKind::Psd(n)))
        .collect();
    for &blk in &blocks {
        for (entries, rhs) in structure.constraint_rows(blk) {
            b.add_constraint(entries, rhs);
        }
        let g = ns.pull_back(&gp.target.guess_functional(s, blk))?;
        b.add_objective(structure.functional_entries(blk, &g));
    }
    let mut rows = DataRows::default();
    match &gp.mode {
        ConstraintMode::FullBehavior(p) => {
            let coords = ns.coordinates(p)?;
            for (k, &id) in structure.links().iter().enumerate() {
                let entries = blocks
                    .iter()
                    .map(|&blk| structure.class_entry(blk, id, 1.0))
                    .collect();
                rows.link.push(b.add_constraint(entries, coords[k]));
            }
        }
        ConstraintMode::BellValues {
            constraints,
            at_least,
        } => {
            let slack = if *at_least {
                Some(b.add_block(BlockKind::Nonneg(constraints.len())))
            } else {
                None
            };
            for (j, c) in constraints.iter().enumerate() {
                let g = ns.pull_back(&c.expression)?;
                let mut entries: Vec<Entry> = blocks
                    .iter()
                    .flat_map(|&blk| structure.functional_entries(blk, &g))
                    .collect();
                if let Some(sl) = slack {
                    entries.push(Entry::new(sl, j, j, -1.0));
                }
                rows.bell
                    .push(b.add_constraint(entries, c.value - c.expression.constant()));
            }
            let trace = structure.links()[ns.position(NsCoord::Trace).expect("trace coordinate")];
            let entries = blocks
                .iter()
                .map(|&blk| structure.class_entry(blk, trace, 1.0))
                .collect();
            rows.normalization = Some(b.add_constraint(entries, 1.0));
        }
    }
    Ok(Assembly {
        program: b.build()?,
        structure,
        rows,
    })
}

pub fn assemble_primal(gp: &GuessingProblem) -> Result<ConicProgram> {
    Ok(assemble(gp)?.program)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// G_k.
    pub value: f64,
    /// Unnormalized behaviors p̃ᵃ (Global: p̃^{ab}, index a·d_B + b).
    pub blocks: Vec<Behavior>,
    /// Traces of the blocks: how often each guess is made.
    pub eve_marginals: Vec<f64>,
    pub duals: DataDuals,
    /// Largest deviation of Σ blocks from p before the residual was spread
    /// over the blocks (full-behavior mode; zero otherwise).
    #[serde(default)]
    pub link_residual: f64,
    pub report: SolverReport,
}

impl Solution {
    pub fn min_entropy(&self) -> Result<f64> {
        crate::bell::min_entropy(self.value)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Map a solver report onto the toolkit's error contract.
pub(crate) fn check_report(report: &SolverReport, what: &str) -> Result<()> {
    match report.status {
        SolverStatus::Optimal | SolverStatus::NearOptimal => Ok(()),
        SolverStatus::Infeasible => Err(Error::Infeasible(format!(
            "{what}: no decomposition of the data exists in the relaxed set"
        ))),
        status => Err(Error::Solver(format!(
            "{what}: solver stopped with {status:?} after {} iterations (gap {:.2e}, pinf {:.2e}, dinf {:.2e})",
            report.iterations, report.relative_gap, report.primal_infeasibility, report.dual_infeasibility
        ))),
    }
}

pub fn solve(gp: &GuessingProblem) -> Result<Solution> {
    solve_with(gp, &SolverSettings::default())
}

pub fn solve_with(gp: &GuessingProblem, settings: &SolverSettings) -> Result<Solution> {
    let asm = assemble(gp)?;
    let report = solve_conic(&asm.program, settings)?;
    check_report(&report, "guessing probability")?;
    let mut blocks = Vec::with_capacity(report.x.len());
    for x in &report.x {
        if let BlockKind::Psd(_) = x.kind {
            let b = asm.structure.behavior(&x.matrix())?;
            blocks.push(if b.trace().abs() < DEGENERATE_TRACE {
                Behavior::zeros(b.scenario())
            } else {
                b
            });
        }
    }
    let link_residual = match &gp.mode {
        ConstraintMode::FullBehavior(p) => spread_residual(&mut blocks, p)?,
        ConstraintMode::BellValues { .. } => 0.0,
    };
    Ok(Solution {
        value: report.primal_value,
        eve_marginals: blocks.iter().map(Behavior::trace).collect(),
        blocks,
        duals: asm.rows.read(&report.multipliers),
        link_residual,
        report,
    })
}

/// Make Σ blocks = p exactly by handing each block a share of the residual
/// proportional to its trace. Returns the residual's largest entry.
pub(crate) fn spread_residual(blocks: &mut [Behavior], p: &Behavior) -> Result<f64> {
    let s = p.scenario();
    let mut r = p.as_slice().to_vec();
    for b in blocks.iter() {
        r.iter_mut().zip(b.as_slice()).for_each(|(ri, bi)| *ri -= bi);
    }
    let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let total: f64 = blocks.iter().map(Behavior::trace).sum();
    if total <= 0.0 {
        return Ok(worst);
    }
    for b in blocks.iter_mut() {
        let w = b.trace() / total;
        if w == 0.0 {
            continue;
        }
        let mut v = b.as_slice().to_vec();
        v.iter_mut().zip(&r).for_each(|(vi, ri)| *vi += w * ri);
        *b = Behavior::new(s, v)?;
    }
    Ok(worst)
}

/// Objective recomputed from the returned blocks, independent of the solver.
pub fn strategy_check(sol: &Solution, gp: &GuessingProblem) -> Result<f64> {
    let s = gp.scenario()?;
    if sol.blocks.len() != gp.target.num_guesses(s) {
        return Err(Error::Dimension(format!(
            "{} blocks for {} guesses",
            sol.blocks.len(),
            gp.target.num_guesses(s)
        )));
    }
    Ok(sol
        .blocks
        .iter()
        .enumerate()
        .map(|(g, b)| gp.target.guess_functional(s, g).linear_value(b))
        .sum())
}
