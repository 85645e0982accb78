use serde::{Deserialize, Serialize};

use super::{Behavior, Scenario};
use crate::error::{Error, Result};

/// Tolerance below zero tolerated in probabilities rebuilt from correlators.
const NEGATIVITY_TOL: f64 = 1e-12;

/// ±1-valued expectation values of a scenario with two outcomes per party.
/// Outcome index 0 carries the value +1, index 1 the value −1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryCorrelators {
    /// ⟨A_x⟩
    pub mean_a: Vec<f64>,
    /// ⟨B_y⟩
    pub mean_b: Vec<f64>,
    /// ⟨A_x B_y⟩, indexed `[x][y]`
    pub corr: Vec<Vec<f64>>,
}

#[inline]
pub(crate) fn sign(outcome: usize) -> f64 {
    if outcome == 0 {
        1.0
    } else {
        -1.0
    }
}

impl BinaryCorrelators {
    pub fn zeros(inputs_a: usize, inputs_b: usize) -> Self {
        BinaryCorrelators {
            mean_a: vec![0.0; inputs_a],
            mean_b: vec![0.0; inputs_b],
            corr: vec![vec![0.0; inputs_b]; inputs_a],
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let nx = self.mean_a.len();
        let ny = self.mean_b.len();
        if self.corr.len() != nx || self.corr.iter().any(|row| row.len() != ny) {
            return Err(Error::Dimension(format!(
                "correlator table is not {nx}×{ny}"
            )));
        }
        Scenario::new(nx, ny, 2, 2)
    }

    pub fn from_behavior(p: &Behavior) -> Result<Self> {
        let s = p.scenario();
        if s.outputs_a() != 2 || s.outputs_b() != 2 {
            return Err(Error::UnsupportedScenario(
                s,
                "correlators need two outcomes per party",
            ));
        }
        let mut c = BinaryCorrelators::zeros(s.inputs_a(), s.inputs_b());
        for x in 0..s.inputs_a() {
            c.mean_a[x] = (0..2).map(|a| sign(a) * p.marginal_a(a, x)).sum();
        }
        for y in 0..s.inputs_b() {
            c.mean_b[y] = (0..2).map(|b| sign(b) * p.marginal_b(b, y)).sum();
        }
        for x in 0..s.inputs_a() {
            for y in 0..s.inputs_b() {
                let mut e = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        e += sign(a) * sign(b) * p.get(a, b, x, y);
                    }
                }
                c.corr[x][y] = e;
            }
        }
        Ok(c)
    }

    /// p(ab|xy) = (1 + a⟨A_x⟩ + b⟨B_y⟩ + ab⟨A_xB_y⟩)/4.
    pub fn to_behavior(&self) -> Result<Behavior> {
        let s = self.scenario()?;
        let in_range = |v: &f64| (-1.0 - NEGATIVITY_TOL..=1.0 + NEGATIVITY_TOL).contains(v);
        if !(self.mean_a.iter().all(in_range)
            && self.mean_b.iter().all(in_range)
            && self.corr.iter().flatten().all(in_range))
        {
            return Err(Error::InvalidCorrelators(
                "entries must lie in [-1, 1]".into(),
            ));
        }
        let p = Behavior::from_fn(s, |a, b, x, y| {
            (1.0 + sign(a) * self.mean_a[x]
                + sign(b) * self.mean_b[y]
                + sign(a) * sign(b) * self.corr[x][y])
                / 4.0
        });
        let min = p.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
        if min < -NEGATIVITY_TOL {
            return Err(Error::InvalidCorrelators(format!(
                "implied probability {min:.3e} is negative"
            )));
        }
        Ok(p)
    }

    /// Scale every correlator by `v`; equivalent to mixing with white noise.
    pub fn scaled(&self, v: f64) -> Self {
        BinaryCorrelators {
            mean_a: self.mean_a.iter().map(|c| c * v).collect(),
            mean_b: self.mean_b.iter().map(|c| c * v).collect(),
            corr: self
                .corr
                .iter()
                .map(|row| row.iter().map(|c| c * v).collect())
                .collect(),
        }
    }
}
