use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bipartite Bell scenario: number of measurement settings and outcomes per
/// party.
///
/// Outcomes and inputs are addressed by 0-based indices throughout the
/// library; index 0 corresponds to the conventional label 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawScenario", into = "RawScenario")]
pub struct Scenario {
    inputs_a: usize,
    inputs_b: usize,
    outputs_a: usize,
    outputs_b: usize,
}

#[derive(Serialize, Deserialize)]
struct RawScenario {
    nx: usize,
    ny: usize,
    da: usize,
    db: usize,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;

    fn try_from(raw: RawScenario) -> Result<Self> {
        Scenario::new(raw.nx, raw.ny, raw.da, raw.db)
    }
}

impl From<Scenario> for RawScenario {
    fn from(s: Scenario) -> Self {
        RawScenario {
            nx: s.inputs_a,
            ny: s.inputs_b,
            da: s.outputs_a,
            db: s.outputs_b,
        }
    }
}

impl Scenario {
    pub fn new(
        inputs_a: usize,
        inputs_b: usize,
        outputs_a: usize,
        outputs_b: usize,
    ) -> Result<Self> {
        if inputs_a == 0 || inputs_b == 0 || outputs_a == 0 || outputs_b == 0 {
            return Err(Error::InvalidArgument(format!(
                "scenario counts must be positive (nx={inputs_a}, ny={inputs_b}, da={outputs_a}, db={outputs_b})"
            )));
        }
        Ok(Scenario {
            inputs_a,
            inputs_b,
            outputs_a,
            outputs_b,
        })
    }

    /// Symmetric scenario with `n` inputs and `d` outputs on both sides.
    pub fn symmetric(n: usize, d: usize) -> Result<Self> {
        Self::new(n, n, d, d)
    }

    /// The two-input two-output scenario.
    pub fn chsh() -> Self {
        Scenario {
            inputs_a: 2,
            inputs_b: 2,
            outputs_a: 2,
            outputs_b: 2,
        }
    }

    pub fn inputs_a(&self) -> usize {
        self.inputs_a
    }

    pub fn inputs_b(&self) -> usize {
        self.inputs_b
    }

    pub fn outputs_a(&self) -> usize {
        self.outputs_a
    }

    pub fn outputs_b(&self) -> usize {
        self.outputs_b
    }

    /// Number of joint probabilities p(ab|xy).
    pub fn dim(&self) -> usize {
        self.outputs_a * self.outputs_b * self.inputs_a * self.inputs_b
    }

    /// Dense storage index of p(ab|xy). Layout is setting-major:
    /// all outcomes of (x, y) are contiguous.
    #[inline]
    pub fn index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        debug_assert!(a < self.outputs_a && b < self.outputs_b);
        debug_assert!(x < self.inputs_a && y < self.inputs_b);
        ((x * self.inputs_b + y) * self.outputs_a + a) * self.outputs_b + b
    }

    /// Iterate over all (a, b, x, y) in storage order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        let s = *self;
        (0..s.inputs_a).flat_map(move |x| {
            (0..s.inputs_b).flat_map(move |y| {
                (0..s.outputs_a).flat_map(move |a| (0..s.outputs_b).map(move |b| (a, b, x, y)))
            })
        })
    }

    pub(crate) fn ensure_same(&self, other: &Scenario) -> Result<()> {
        if self != other {
            return Err(Error::ScenarioMismatch {
                expected: *self,
                found: *other,
            });
        }
        Ok(())
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(nx={}, ny={}, da={}, db={})",
            self.inputs_a, self.inputs_b, self.outputs_a, self.outputs_b
        )
    }
}
