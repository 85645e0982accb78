//! Parameter sweeps over the named model families.

use std::f64::consts::FRAC_1_SQRT_2;

use anyhow::{bail, Result};
use rayon::prelude::*;
use randcert::bell::{Behavior, BellExpression};
use randcert::certificates::extract_certificate;
use randcert::digp::{solve_with, Target};
use randcert::npa::Level;
use randcert::ns::ns_solve_with;
use randcert::quantum::{
    cglmp_behavior, cglmp_expression, cglmp_threshold_alpha, chsh_noise_behavior,
    i1beta_expression, i1beta_for_theta, partial_entangled_behavior,
};
use randcert::solver::SolverSettings;

use crate::input::format_target;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    ChshNoise,
    PartialEntangled,
    Cglmp,
}

impl Experiment {
    pub fn parameter_name(self) -> &'static str {
        match self {
            Experiment::ChshNoise => "v",
            Experiment::PartialEntangled => "theta",
            Experiment::Cglmp => "alpha",
        }
    }

    /// (from, to, step) used when no range is given.
    pub fn default_range(self) -> (f64, f64, f64) {
        match self {
            Experiment::ChshNoise => (0.75, 1.0, 0.01),
            Experiment::PartialEntangled => (0.1, std::f64::consts::FRAC_PI_4, 0.05),
            Experiment::Cglmp => (cglmp_threshold_alpha(), FRAC_1_SQRT_2, 0.01),
        }
    }

    pub fn default_target(self) -> Target {
        match self {
            Experiment::ChshNoise => Target::Global { x: 0, y: 0 },
            Experiment::PartialEntangled => Target::Global { x: 1, y: 0 },
            Experiment::Cglmp => Target::Local { x: 0 },
        }
    }

    pub fn default_level(self) -> Level {
        match self {
            Experiment::PartialEntangled => Level::Npa(3),
            _ => Level::Npa(2),
        }
    }

    pub fn default_modes(self) -> Vec<String> {
        let m: &[&str] = match self {
            Experiment::ChshNoise => &["full", "chsh-only"],
            Experiment::PartialEntangled => &["i1beta-only", "chsh-only", "both", "full"],
            Experiment::Cglmp => &["full", "cglmp-only"],
        };
        m.iter().map(|s| s.to_string()).collect()
    }

    pub fn behavior(self, t: f64, v: f64) -> Result<Behavior> {
        Ok(match self {
            Experiment::ChshNoise => chsh_noise_behavior(t)?,
            Experiment::PartialEntangled => partial_entangled_behavior(t, v)?,
            Experiment::Cglmp => cglmp_behavior(t)?,
        })
    }

    /// Bell expressions a named mode constrains, or None for the full
    /// behavior.
    fn mode_expressions(self, mode: &str, t: f64) -> Result<Option<Vec<BellExpression>>> {
        let i1beta = || i1beta_expression(i1beta_for_theta(t));
        Ok(match (self, mode) {
            (_, "full" | "ns") => None,
            (Experiment::ChshNoise | Experiment::PartialEntangled, "chsh-only") => {
                Some(vec![BellExpression::chsh()])
            }
            (Experiment::PartialEntangled, "i1beta-only") => Some(vec![i1beta()?]),
            (Experiment::PartialEntangled, "both") => Some(vec![BellExpression::chsh(), i1beta()?]),
            (Experiment::Cglmp, "cglmp-only") => Some(vec![cglmp_expression()]),
            _ => bail!("mode {mode:?} is not available for this experiment"),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub experiment: Experiment,
    pub grid: Vec<f64>,
    /// Visibility for the partially entangled family.
    pub v: f64,
    pub level: Level,
    pub target: Target,
    pub modes: Vec<String>,
}

/// from, from + step, … up to `to` inclusive (within step/1000).
pub fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(to >= from) {
        bail!("need step > 0 and to ≥ from, got {from}..{to} step {step}");
    }
    let n = ((to - from) / step + 1e-3).floor() as usize + 1;
    // rounded so that 0.75 + 6·0.01 prints as 0.81
    let round = |x: f64| (x * 1e12).round() / 1e12;
    Ok((0..n).map(|i| round(from + i as f64 * step).min(to)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub parameter: f64,
    pub mode: String,
    pub status: String,
    pub value: Option<f64>,
    pub bound: Option<f64>,
}

impl Row {
    pub fn gap(&self) -> Option<f64> {
        Some(self.bound? - self.value?)
    }
}

fn run_point(spec: &SweepSpec, t: f64, mode: &str, settings: &SolverSettings) -> Row {
    let row = |status: String, value, bound| Row {
        parameter: t,
        mode: mode.to_string(),
        status,
        value,
        bound,
    };
    let attempt = || -> Result<(String, f64, f64)> {
        let p = spec.experiment.behavior(t, spec.v)?;
        let gp = match spec.experiment.mode_expressions(mode, t)? {
            None => randcert::digp::GuessingProblem::full(p, spec.target, spec.level.clone()),
            Some(exprs) => {
                let constraints = exprs
                    .into_iter()
                    .map(|f| {
                        let v = f.value(&p)?;
                        Ok((f, v))
                    })
                    .collect::<randcert::Result<Vec<_>>>()?;
                randcert::digp::GuessingProblem::bell_values(
                    constraints,
                    spec.target,
                    spec.level.clone(),
                )
            }
        };
        let sol = if mode == "ns" {
            ns_solve_with(&gp, settings)?
        } else {
            solve_with(&gp, settings)?
        };
        let bound = if mode == "ns" {
            randcert::ns::ns_certificate(&sol, &gp)?.bound
        } else {
            extract_certificate(&sol, &gp)?.bound
        };
        Ok((format!("{:?}", sol.report.status).to_lowercase(), sol.value, bound))
    };
    match attempt() {
        Ok((status, g, b)) => row(status, Some(g), Some(b)),
        Err(e) => row(format!("error: {e}"), None, None),
    }
}

/// Every (grid point, mode) pair, solved on the rayon pool and returned in
/// grid order.
pub fn run(spec: &SweepSpec, settings: &SolverSettings) -> Result<Vec<Row>> {
    if spec.grid.is_empty() {
        bail!("empty grid");
    }
    for m in &spec.modes {
        spec.experiment.mode_expressions(m, spec.grid[0])?;
    }
    let jobs: Vec<(f64, &str)> = spec
        .grid
        .iter()
        .flat_map(|&t| spec.modes.iter().map(move |m| (t, m.as_str())))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(t, m)| run_point(spec, t, m, settings))
        .collect())
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn to_csv(spec: &SweepSpec, rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        spec.experiment.parameter_name(),
        "mode",
        "status",
        "G",
        "certificate_bound",
        "gap",
    ])?;
    for r in rows {
        w.write_record([
            r.parameter.to_string(),
            r.mode.clone(),
            r.status.clone(),
            fmt(r.value),
            fmt(r.bound),
            fmt(r.gap()),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn describe(spec: &SweepSpec) -> String {
    format!(
        "{:?} over {} points, {}, level {}, modes {}",
        spec.experiment,
        spec.grid.len(),
        format_target(&spec.target),
        spec.level,
        spec.modes.join(",")
    )
}
