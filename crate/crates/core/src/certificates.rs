//! Dual certificates: Bell expressions f with p'(guess) ≤ f·p' on the whole
//! relaxed set, so that f·q bounds the guessing probability of any q.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bell::{Behavior, BellExpression, BinaryCorrelators, NsBasis, NsCoord, Scenario};
use crate::digp::{check_report, ConstraintMode, GuessingProblem, Solution, Target};
use crate::error::{Error, Result};
use crate::npa::{Level, MomentStructure};
use crate::ns::ns_maximize_with;
use crate::solver::{
    solve as solve_conic, BlockKind, ProgramBuilder, Sense, SolverSettings, SolverStatus,
};

/// Largest margin accepted by verification.
pub const VERIFY_TOL: f64 = 1e-6;

/// Strong duality is checked to this accuracy when fixing the sign.
const SIGN_TOL: f64 = 1e-3;

/// The set a certificate is valid on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relaxation {
    Npa(Level),
    NoSignaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// f, with f·p' read on normalized behaviors (constant included).
    pub expression: BellExpression,
    /// f·p on the source data.
    pub bound: f64,
    pub relaxation: Relaxation,
    pub target: Target,
    /// max over the relaxed set of p'(guess) − f·p', one per guess.
    pub margins: Vec<f64>,
    pub verified: bool,
    /// SHA-256 of the source data (behavior or Bell values) as JSON.
    pub source_hash: String,
}

impl Certificate {
    /// f = 1/(n_x·n_y) on every entry: f·p' = 1 on normalized behaviors.
    pub fn trivial(s: Scenario, target: Target, relaxation: Relaxation) -> Self {
        let ns = NsBasis::new(s);
        let expression =
            ns.coordinate_functional(ns.position(NsCoord::Trace).expect("trace coordinate"));
        Certificate {
            expression,
            bound: 1.0,
            relaxation,
            target,
            margins: Vec::new(),
            verified: false,
            source_hash: String::new(),
        }
    }

    /// Solve the verification programs and record the outcome.
    pub fn verify(&mut self) -> Result<()> {
        self.verify_with(&SolverSettings::default())
    }

    pub fn verify_with(&mut self, settings: &SolverSettings) -> Result<()> {
        self.margins = verify_certificate_with(self, settings)?;
        self.verified = self.margins.iter().all(|&m| m <= VERIFY_TOL);
        Ok(())
    }

    /// Verify, then shift f by the largest positive margin so that the
    /// certificate holds; the bound grows by the same amount.
    pub fn tightened(&self) -> Result<Self> {
        let mut c = self.clone();
        c.verify()?;
        let worst = c.margins.iter().copied().fold(0.0, f64::max);
        if worst > 0.0 {
            c = c.shifted(worst)?;
            c.verified = true;
        }
        Ok(c)
    }

    /// Add w·(normalization) to f: every value and margin moves by w.
    pub fn shifted(&self, w: f64) -> Result<Self> {
        let s = self.expression.scenario();
        let unit = Certificate::trivial(s, self.target, self.relaxation.clone()).expression;
        Ok(Certificate {
            expression: self.expression.add_scaled(w, &unit)?,
            bound: self.bound + w,
            margins: self.margins.iter().map(|m| m - w).collect(),
            ..self.clone()
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn source_hash(mode: &ConstraintMode) -> Result<String> {
    let text = match mode {
        ConstraintMode::FullBehavior(p) => serde_json::to_string(p)?,
        ConstraintMode::BellValues { constraints, .. } => serde_json::to_string(constraints)?,
    };
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

/// Read f off the multipliers of the data rows of a solved program. The
/// certificate is returned unverified.
pub fn extract_certificate(sol: &Solution, gp: &GuessingProblem) -> Result<Certificate> {
    extract(sol, gp, Relaxation::Npa(gp.level.clone()))
}

pub(crate) fn extract(
    sol: &Solution,
    gp: &GuessingProblem,
    relaxation: Relaxation,
) -> Result<Certificate> {
    let s = gp.check()?;
    let ns = NsBasis::new(s);
    let (expression, bound) = match &gp.mode {
        ConstraintMode::FullBehavior(p) => {
            if sol.duals.link.len() != ns.len() {
                return Err(Error::MissingDual(format!(
                    "expected {} link multipliers, found {}",
                    ns.len(),
                    sol.duals.link.len()
                )));
            }
            let f = ns.push_forward(&sol.duals.link, 0.0)?;
            let bound = f.value(p)?;
            (f, bound)
        }
        ConstraintMode::BellValues { constraints, .. } => {
            let norm = sol
                .duals
                .normalization
                .ok_or_else(|| Error::MissingDual("normalization multiplier".into()))?;
            if sol.duals.bell.len() != constraints.len() {
                return Err(Error::MissingDual(format!(
                    "expected {} Bell multipliers, found {}",
                    constraints.len(),
                    sol.duals.bell.len()
                )));
            }
            let unit =
                ns.coordinate_functional(ns.position(NsCoord::Trace).expect("trace coordinate"));
            let mut f = unit.scaled(norm);
            let mut bound = norm;
            for (c, &l) in constraints.iter().zip(&sol.duals.bell) {
                let linear = BellExpression::new(s, c.expression.coeffs().to_vec(), 0.0)?;
                f = f.add_scaled(l, &linear)?;
                bound += l * (c.value - c.expression.constant());
            }
            (f, bound)
        }
    };
    // the multiplier convention is fixed by strong duality
    let (expression, bound) = if (bound - sol.value).abs() <= SIGN_TOL * (1.0 + sol.value.abs()) {
        (expression, bound)
    } else if (bound + sol.value).abs() <= SIGN_TOL * (1.0 + sol.value.abs()) {
        (expression.scaled(-1.0), -bound)
    } else {
        return Err(Error::MissingDual(format!(
            "multipliers give bound {bound}, primal value is {}",
            sol.value
        )));
    };
    Ok(Certificate {
        expression,
        bound,
        relaxation,
        target: gp.target,
        margins: Vec::new(),
        verified: false,
        source_hash: source_hash(&gp.mode)?,
    })
}

/// For each guess, max over normalized p' in the relaxed set of
/// p'(guess) − f·p'.
pub fn verify_certificate(c: &Certificate) -> Result<Vec<f64>> {
    verify_certificate_with(c, &SolverSettings::default())
}

pub fn verify_certificate_with(c: &Certificate, settings: &SolverSettings) -> Result<Vec<f64>> {
    let s = c.expression.scenario();
    c.target.check(s)?;
    let guesses = c.target.num_guesses(s);
    match &c.relaxation {
        Relaxation::NoSignaling => (0..guesses)
            .map(|g| {
                let h = c
                    .target
                    .guess_functional(s, g)
                    .add_scaled(-1.0, &c.expression)?;
                ns_maximize_with(&h, settings)
            })
            .collect(),
        Relaxation::Npa(level) => {
            let m = MomentStructure::build(s, level, true)?;
            (0..guesses)
                .map(|g| {
                    let h = c
                        .target
                        .guess_functional(s, g)
                        .add_scaled(-1.0, &c.expression)?;
                    let w = m.ns_basis().pull_back(&h)?;
                    let mut b = ProgramBuilder::new(Sense::Maximize);
                    let blk = b.add_block(BlockKind::Psd(m.size()));
                    for (entries, rhs) in m.constraint_rows(blk) {
                        b.add_constraint(entries, rhs);
                    }
                    b.add_objective(m.functional_entries(blk, &w));
                    let report = solve_conic(&b.build()?, settings)?;
                    // a stalled solve with small residuals still brackets the
                    // maximum; the larger end is kept
                    let usable = report.status == SolverStatus::NumericalFailure
                        && report.primal_infeasibility <= settings.reduced_tol
                        && report.dual_infeasibility <= settings.reduced_tol;
                    if !usable {
                        check_report(&report, "certificate verification")?;
                    }
                    Ok(report.primal_value.max(report.dual_value) + h.constant())
                })
                .collect()
        }
    }
}

/// The tightest valid certificate along a fixed direction g: f = g + β with
/// β the largest margin of g, so that every margin of f is at most zero.
/// The bound is read on `source`.
pub fn offset_certificate(
    direction: &BellExpression,
    target: Target,
    relaxation: Relaxation,
    source: &Behavior,
) -> Result<Certificate> {
    let mut c = Certificate {
        bound: direction.value(source)?,
        expression: direction.clone(),
        relaxation,
        target,
        margins: Vec::new(),
        verified: false,
        source_hash: source_hash(&ConstraintMode::FullBehavior(source.clone()))?,
    };
    c.verify()?;
    let beta = c.margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut c = c.shifted(beta)?;
    c.verified = true;
    Ok(c)
}

/// f·q, an upper bound on the guessing probability of any q in the
/// certificate's relaxed set. Refuses unverified certificates.
pub fn certified_bound(c: &Certificate, q: &Behavior) -> Result<f64> {
    if !c.verified {
        return Err(Error::Unverified(
            "run verification before using the certificate as a bound".into(),
        ));
    }
    c.expression.value(q)
}

/// Fit of f onto α·(f₁₁⟨A₁B₁⟩ + ⟨A₁B₂⟩ + ⟨A₂B₁⟩ − f₂₂⟨A₂B₂⟩) + β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedForm {
    /// The fitted expression, α and β removed.
    pub expression: BellExpression,
    pub alpha: f64,
    pub beta: f64,
    pub f11: f64,
    pub f22: f64,
    /// Norm of the correlator-space weights left out of the template
    /// (marginals, ⟨A₁B₂⟩ ≠ ⟨A₂B₁⟩), relative to |α|.
    pub residual: f64,
}

pub fn rescale_to_named_form(c: &Certificate) -> Result<NamedForm> {
    let s = c.expression.scenario();
    if s.inputs_a() != 2 || s.inputs_b() != 2 {
        return Err(Error::UnsupportedScenario(
            s,
            "the template needs two inputs per party",
        ));
    }
    let (beta, w) = c.expression.correlator_weights()?;
    let alpha = 0.5 * (w.corr[0][1] + w.corr[1][0]);
    if alpha.abs() < 1e-12 {
        return Err(Error::InvalidArgument(
            "certificate has no cross-correlator weight".into(),
        ));
    }
    let (f11, f22) = (w.corr[0][0] / alpha, -w.corr[1][1] / alpha);
    let off = 0.5 * (w.corr[0][1] - w.corr[1][0]);
    let marginal: f64 = w.mean_a.iter().chain(&w.mean_b).map(|v| v * v).sum();
    let residual = (2.0 * off * off + marginal).sqrt() / alpha.abs();
    let mut t = BinaryCorrelators::zeros(2, 2);
    t.corr = vec![vec![f11, 1.0], vec![1.0, -f22]];
    Ok(NamedForm {
        expression: BellExpression::from_correlators(0.0, &t)?,
        alpha,
        beta,
        f11,
        f22,
        residual,
    })
}
