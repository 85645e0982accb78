use serde::{Deserialize, Serialize};

use super::correlators::sign;
use super::{Behavior, BinaryCorrelators, Scenario};
use crate::error::{Error, Result};

/// Linear functional on behaviors: value(p) = Σ f_{abxy} p(ab|xy) + constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExpressionJson", into = "ExpressionJson")]
pub struct BellExpression {
    scenario: Scenario,
    coeffs: Vec<f64>,
    constant: f64,
}

/// On-disk layout mirrors behaviors: `coeffs[a][b][x][y]`.
#[derive(Serialize, Deserialize)]
struct ExpressionJson {
    scenario: Scenario,
    coeffs: Vec<Vec<Vec<Vec<f64>>>>,
    constant: f64,
}

impl TryFrom<ExpressionJson> for BellExpression {
    type Error = Error;

    fn try_from(raw: ExpressionJson) -> Result<Self> {
        let s = raw.scenario;
        let ok = raw.coeffs.len() == s.outputs_a()
            && raw.coeffs.iter().all(|r| {
                r.len() == s.outputs_b()
                    && r.iter().all(|xs| {
                        xs.len() == s.inputs_a() && xs.iter().all(|ys| ys.len() == s.inputs_b())
                    })
            });
        if !ok {
            return Err(Error::Dimension(format!(
                "coefficient table does not have shape [da][db][nx][ny] for {s}"
            )));
        }
        Ok(BellExpression::from_fn(s, raw.constant, |a, b, x, y| {
            raw.coeffs[a][b][x][y]
        }))
    }
}

impl From<BellExpression> for ExpressionJson {
    fn from(f: BellExpression) -> Self {
        let s = f.scenario;
        let coeffs = (0..s.outputs_a())
            .map(|a| {
                (0..s.outputs_b())
                    .map(|b| {
                        (0..s.inputs_a())
                            .map(|x| (0..s.inputs_b()).map(|y| f.coeff(a, b, x, y)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ExpressionJson {
            scenario: s,
            coeffs,
            constant: f.constant,
        }
    }
}

impl BellExpression {
    pub fn new(scenario: Scenario, coeffs: Vec<f64>, constant: f64) -> Result<Self> {
        if coeffs.len() != scenario.dim() {
            return Err(Error::Dimension(format!(
                "expression has {} coefficients, scenario {scenario} needs {}",
                coeffs.len(),
                scenario.dim()
            )));
        }
        Ok(BellExpression {
            scenario,
            coeffs,
            constant,
        })
    }

    pub fn from_fn(
        scenario: Scenario,
        constant: f64,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let mut coeffs = vec![0.0; scenario.dim()];
        for (a, b, x, y) in scenario.entries() {
            coeffs[scenario.index(a, b, x, y)] = f(a, b, x, y);
        }
        BellExpression {
            scenario,
            coeffs,
            constant,
        }
    }

    pub fn zeros(scenario: Scenario) -> Self {
        BellExpression {
            scenario,
            coeffs: vec![0.0; scenario.dim()],
            constant: 0.0,
        }
    }

    /// Expression written in terms of ±1 correlators:
    /// c₀ + Σ α_x⟨A_x⟩ + Σ β_y⟨B_y⟩ + Σ γ_xy⟨A_xB_y⟩.
    ///
    /// Marginal terms are spread evenly over the other party's inputs, so the
    /// value agrees with the correlator form on every no-signaling behavior.
    pub fn from_correlators(constant: f64, weights: &BinaryCorrelators) -> Result<Self> {
        let s = weights.scenario()?;
        let (nx, ny) = (s.inputs_a() as f64, s.inputs_b() as f64);
        Ok(BellExpression::from_fn(s, constant, |a, b, x, y| {
            weights.mean_a[x] * sign(a) / ny
                + weights.mean_b[y] * sign(b) / nx
                + weights.corr[x][y] * sign(a) * sign(b)
        }))
    }

    /// ⟨A₁B₁⟩ + ⟨A₁B₂⟩ + ⟨A₂B₁⟩ − ⟨A₂B₂⟩.
    pub fn chsh() -> Self {
        let mut w = BinaryCorrelators::zeros(2, 2);
        w.corr = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        Self::from_correlators(0.0, &w).expect("2x2 correlator table")
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    #[inline]
    pub fn coeff(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.coeffs[self.scenario.index(a, b, x, y)]
    }

    /// f·p + constant.
    pub fn value(&self, p: &Behavior) -> Result<f64> {
        self.scenario.ensure_same(&p.scenario())?;
        Ok(self.linear_value(p) + self.constant)
    }

    /// f·p without the constant offset.
    pub fn linear_value(&self, p: &Behavior) -> f64 {
        self.coeffs
            .iter()
            .zip(p.as_slice())
            .map(|(f, q)| f * q)
            .sum()
    }

    /// `self + w·other`.
    pub fn add_scaled(&self, w: f64, other: &BellExpression) -> Result<Self> {
        self.scenario.ensure_same(&other.scenario)?;
        Ok(BellExpression {
            scenario: self.scenario,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + w * b)
                .collect(),
            constant: self.constant + w * other.constant,
        })
    }

    pub fn scaled(&self, w: f64) -> Self {
        BellExpression {
            scenario: self.scenario,
            coeffs: self.coeffs.iter().map(|c| c * w).collect(),
            constant: self.constant * w,
        }
    }

    /// Correlator-form weights (c₀, α, β, γ) of a two-outcome expression,
    /// valid on normalized no-signaling behaviors. The constant offset is
    /// folded into c₀.
    pub fn correlator_weights(&self) -> Result<(f64, BinaryCorrelators)> {
        let s = self.scenario;
        if s.outputs_a() != 2 || s.outputs_b() != 2 {
            return Err(Error::UnsupportedScenario(
                s,
                "correlator form needs two outcomes per party",
            ));
        }
        let mut w = BinaryCorrelators::zeros(s.inputs_a(), s.inputs_b());
        let mut c0 = self.constant;
        for (a, b, x, y) in s.entries() {
            let f = self.coeff(a, b, x, y) / 4.0;
            c0 += f;
            w.mean_a[x] += sign(a) * f;
            w.mean_b[y] += sign(b) * f;
            w.corr[x][y] += sign(a) * sign(b) * f;
        }
        Ok((c0, w))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
