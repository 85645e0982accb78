use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::error::{Error, Result};

/// Default validation tolerance for behaviors read from external files.
pub const EXTERNAL_TOL: f64 = 1e-9;
/// Default validation tolerance for behaviors generated in-process.
pub const INTERNAL_TOL: f64 = 1e-12;

/// Table of joint conditional probabilities p(ab|xy), possibly unnormalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BehaviorJson", into = "BehaviorJson")]
pub struct Behavior {
    scenario: Scenario,
    p: Vec<f64>,
}

/// On-disk layout: `p[a][b][x][y]`.
#[derive(Serialize, Deserialize)]
struct BehaviorJson {
    scenario: Scenario,
    p: Vec<Vec<Vec<Vec<f64>>>>,
    normalized: bool,
}

impl TryFrom<BehaviorJson> for Behavior {
    type Error = Error;

    fn try_from(raw: BehaviorJson) -> Result<Self> {
        let s = raw.scenario;
        let shape_err = || {
            Error::Dimension(format!(
                "behavior table does not have shape [da][db][nx][ny] for {s}"
            ))
        };
        if raw.p.len() != s.outputs_a() {
            return Err(shape_err());
        }
        let mut p = vec![0.0; s.dim()];
        for (a, rows) in raw.p.iter().enumerate() {
            if rows.len() != s.outputs_b() {
                return Err(shape_err());
            }
            for (b, xs) in rows.iter().enumerate() {
                if xs.len() != s.inputs_a() {
                    return Err(shape_err());
                }
                for (x, ys) in xs.iter().enumerate() {
                    if ys.len() != s.inputs_b() {
                        return Err(shape_err());
                    }
                    for (y, &v) in ys.iter().enumerate() {
                        p[s.index(a, b, x, y)] = v;
                    }
                }
            }
        }
        let behavior = Behavior { scenario: s, p };
        if raw.normalized {
            let report = behavior.validate_normalized(EXTERNAL_TOL);
            if !report.passes {
                return Err(Error::InvalidArgument(format!(
                    "behavior marked normalized fails validation: {report}"
                )));
            }
        }
        Ok(behavior)
    }
}

impl From<Behavior> for BehaviorJson {
    fn from(b: Behavior) -> Self {
        let s = b.scenario;
        let normalized = (b.trace() - 1.0).abs() <= EXTERNAL_TOL;
        let p = (0..s.outputs_a())
            .map(|a| {
                (0..s.outputs_b())
                    .map(|bb| {
                        (0..s.inputs_a())
                            .map(|x| (0..s.inputs_b()).map(|y| b.get(a, bb, x, y)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        BehaviorJson {
            scenario: s,
            p,
            normalized,
        }
    }
}

/// Outcome of [`Behavior::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Trace of each setting pair minus the reference trace, indexed `x * ny + y`.
    pub normalization: Vec<f64>,
    /// Reference trace (1 for normalized validation, p(··|11) otherwise).
    pub reference_trace: f64,
    /// Largest change of an Alice marginal p(a|x) across Bob's inputs.
    pub signaling_a: f64,
    /// Largest change of a Bob marginal p(b|y) across Alice's inputs.
    pub signaling_b: f64,
    pub min_entry: f64,
    pub tol: f64,
    pub passes: bool,
}

impl ValidationReport {
    pub fn max_normalization_residual(&self) -> f64 {
        self.normalization.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn normalization_ok(&self) -> bool {
        self.max_normalization_residual() <= self.tol
    }

    pub fn no_signaling_ok(&self) -> bool {
        self.signaling_a <= self.tol && self.signaling_b <= self.tol
    }

    pub fn positivity_ok(&self) -> bool {
        self.min_entry >= -self.tol
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "normalization residual {:.3e}, signaling A {:.3e}, signaling B {:.3e}, min entry {:.3e} (tol {:.1e}): {}",
            self.max_normalization_residual(),
            self.signaling_a,
            self.signaling_b,
            self.min_entry,
            self.tol,
            if self.passes { "ok" } else { "FAILED" }
        )
    }
}

impl Behavior {
    pub fn new(scenario: Scenario, p: Vec<f64>) -> Result<Self> {
        if p.len() != scenario.dim() {
            return Err(Error::Dimension(format!(
                "behavior has {} entries, scenario {scenario} needs {}",
                p.len(),
                scenario.dim()
            )));
        }
        Ok(Behavior { scenario, p })
    }

    /// Build a behavior by evaluating `f(a, b, x, y)` on every entry.
    pub fn from_fn(
        scenario: Scenario,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let mut p = vec![0.0; scenario.dim()];
        for (a, b, x, y) in scenario.entries() {
            p[scenario.index(a, b, x, y)] = f(a, b, x, y);
        }
        Behavior { scenario, p }
    }

    pub fn zeros(scenario: Scenario) -> Self {
        Behavior {
            scenario,
            p: vec![0.0; scenario.dim()],
        }
    }

    /// White noise: p(ab|xy) = 1/(da·db).
    pub fn uniform(scenario: Scenario) -> Self {
        let w = 1.0 / (scenario.outputs_a() * scenario.outputs_b()) as f64;
        Behavior {
            scenario,
            p: vec![w; scenario.dim()],
        }
    }

    /// The PR box of the two-input two-output scenario:
    /// p(ab|xy) = 1/2 iff a ⊕ b = x·y (0-based labels).
    pub fn pr_box() -> Self {
        Behavior::from_fn(
            Scenario::chsh(),
            |a, b, x, y| {
                if (a ^ b) == (x & y) {
                    0.5
                } else {
                    0.0
                }
            },
        )
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.p[self.scenario.index(a, b, x, y)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, x: usize, y: usize, v: f64) {
        let i = self.scenario.index(a, b, x, y);
        self.p[i] = v;
    }

    /// Σ_ab p(ab|xy) for one setting pair.
    pub fn setting_trace(&self, x: usize, y: usize) -> f64 {
        let s = self.scenario;
        let start = s.index(0, 0, x, y);
        self.p[start..start + s.outputs_a() * s.outputs_b()]
            .iter()
            .sum()
    }

    /// Trace averaged over setting pairs; equal to every setting trace for
    /// a valid behavior.
    pub fn trace(&self) -> f64 {
        let s = self.scenario;
        let n = (s.inputs_a() * s.inputs_b()) as f64;
        self.p.iter().sum::<f64>() / n
    }

    /// Alice marginal p(a|x), averaged over Bob's inputs.
    pub fn marginal_a(&self, a: usize, x: usize) -> f64 {
        let s = self.scenario;
        let total: f64 = (0..s.inputs_b())
            .map(|y| {
                (0..s.outputs_b())
                    .map(|b| self.get(a, b, x, y))
                    .sum::<f64>()
            })
            .sum();
        total / s.inputs_b() as f64
    }

    /// Bob marginal p(b|y), averaged over Alice's inputs.
    pub fn marginal_b(&self, b: usize, y: usize) -> f64 {
        let s = self.scenario;
        let total: f64 = (0..s.inputs_a())
            .map(|x| {
                (0..s.outputs_a())
                    .map(|a| self.get(a, b, x, y))
                    .sum::<f64>()
            })
            .sum();
        total / s.inputs_a() as f64
    }

    /// Check setting-independence of the trace, no-signaling and positivity.
    pub fn validate(&self, tol: f64) -> ValidationReport {
        self.validate_against(self.setting_trace(0, 0), tol)
    }

    /// As [`validate`](Self::validate), additionally requiring unit trace.
    pub fn validate_normalized(&self, tol: f64) -> ValidationReport {
        self.validate_against(1.0, tol)
    }

    fn validate_against(&self, reference: f64, tol: f64) -> ValidationReport {
        let s = self.scenario;
        let mut normalization = Vec::with_capacity(s.inputs_a() * s.inputs_b());
        for x in 0..s.inputs_a() {
            for y in 0..s.inputs_b() {
                normalization.push(self.setting_trace(x, y) - reference);
            }
        }
        let mut signaling_a: f64 = 0.0;
        for x in 0..s.inputs_a() {
            for a in 0..s.outputs_a() {
                let first: f64 = (0..s.outputs_b()).map(|b| self.get(a, b, x, 0)).sum();
                for y in 1..s.inputs_b() {
                    let m: f64 = (0..s.outputs_b()).map(|b| self.get(a, b, x, y)).sum();
                    signaling_a = signaling_a.max((m - first).abs());
                }
            }
        }
        let mut signaling_b: f64 = 0.0;
        for y in 0..s.inputs_b() {
            for b in 0..s.outputs_b() {
                let first: f64 = (0..s.outputs_a()).map(|a| self.get(a, b, 0, y)).sum();
                for x in 1..s.inputs_a() {
                    let m: f64 = (0..s.outputs_a()).map(|a| self.get(a, b, x, y)).sum();
                    signaling_b = signaling_b.max((m - first).abs());
                }
            }
        }
        let min_entry = self.p.iter().copied().fold(f64::INFINITY, f64::min);
        let mut report = ValidationReport {
            normalization,
            reference_trace: reference,
            signaling_a,
            signaling_b,
            min_entry,
            tol,
            passes: false,
        };
        report.passes =
            report.normalization_ok() && report.no_signaling_ok() && report.positivity_ok();
        report
    }

    /// v·p + (1−v)·uniform.
    pub fn mix_with_noise(&self, v: f64) -> Result<Behavior> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "visibility {v} outside [0, 1]"
            )));
        }
        let noise = Behavior::uniform(self.scenario);
        Ok(self.affine(v, &noise, 1.0 - v))
    }

    /// `wa·self + wb·other`, same scenario assumed.
    pub(crate) fn affine(&self, wa: f64, other: &Behavior, wb: f64) -> Behavior {
        debug_assert_eq!(self.scenario, other.scenario);
        let p = self
            .p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| wa * a + wb * b)
            .collect();
        Behavior {
            scenario: self.scenario,
            p,
        }
    }

    /// Convex (or arbitrary affine) combination `w·self + (1−w)·other`.
    pub fn mix(&self, w: f64, other: &Behavior) -> Result<Behavior> {
        self.scenario.ensure_same(&other.scenario)?;
        Ok(self.affine(w, other, 1.0 - w))
    }

    pub fn scaled(&self, w: f64) -> Behavior {
        Behavior {
            scenario: self.scenario,
            p: self.p.iter().map(|v| v * w).collect(),
        }
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Behavior) -> Result<f64> {
        self.scenario.ensure_same(&other.scenario)?;
        Ok(self
            .p
            .iter()
            .zip(&other.p)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Min-entropy in bits of a guessing probability, −log₂ g.
pub fn min_entropy(guess: f64) -> Result<f64> {
    if !(guess > 0.0 && guess <= 1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "guessing probability {guess} outside (0, 1]"
        )));
    }
    Ok(-guess.min(1.0).log2())
}
