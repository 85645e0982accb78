use serde::{Deserialize, Serialize};

use super::{Behavior, BellExpression, Scenario};
use crate::error::{Error, Result};

/// Default cap on the number of deterministic strategies enumerated.
pub const DEFAULT_STRATEGY_CAP: u128 = 10_000_000;

/// Local deterministic strategy: each input is mapped to a fixed outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub assign_a: Vec<usize>,
    pub assign_b: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn new(assign_a: Vec<usize>, assign_b: Vec<usize>) -> Self {
        DeterministicStrategy { assign_a, assign_b }
    }

    /// Induced 0/1 behavior.
    pub fn behavior(&self, scenario: Scenario) -> Result<Behavior> {
        if self.assign_a.len() != scenario.inputs_a()
            || self.assign_b.len() != scenario.inputs_b()
            || self.assign_a.iter().any(|&a| a >= scenario.outputs_a())
            || self.assign_b.iter().any(|&b| b >= scenario.outputs_b())
        {
            return Err(Error::Dimension(format!(
                "strategy {self:?} does not fit scenario {scenario}"
            )));
        }
        Ok(Behavior::from_fn(scenario, |a, b, x, y| {
            if self.assign_a[x] == a && self.assign_b[y] == b {
                1.0
            } else {
                0.0
            }
        }))
    }
}

/// Maximum of a Bell expression over local deterministic strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBound {
    pub value: f64,
    pub strategy: DeterministicStrategy,
    pub strategies_enumerated: u128,
}

/// Advance a mixed-radix counter; returns false after the last value.
fn advance(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

/// Exact local bound by enumerating all da^nx · db^ny deterministic strategies.
pub fn local_bound(f: &BellExpression) -> Result<LocalBound> {
    local_bound_with_cap(f, DEFAULT_STRATEGY_CAP)
}

pub fn local_bound_with_cap(f: &BellExpression, cap: u128) -> Result<LocalBound> {
    let s = f.scenario();
    let count = (s.outputs_a() as u128)
        .checked_pow(s.inputs_a() as u32)
        .and_then(|na| {
            (s.outputs_b() as u128)
                .checked_pow(s.inputs_b() as u32)
                .and_then(|nb| na.checked_mul(nb))
        });
    let count = match count {
        Some(c) if c <= cap => c,
        _ => {
            return Err(Error::ResourceLimit(format!(
                "local bound of {s} needs more than {cap} deterministic strategies"
            )))
        }
    };

    let mut best = f64::NEG_INFINITY;
    let mut best_strategy =
        DeterministicStrategy::new(vec![0; s.inputs_a()], vec![0; s.inputs_b()]);
    let mut alice = vec![0usize; s.inputs_a()];
    loop {
        let mut bob = vec![0usize; s.inputs_b()];
        loop {
            let mut value = 0.0;
            for (x, &a) in alice.iter().enumerate() {
                for (y, &b) in bob.iter().enumerate() {
                    value += f.coeff(a, b, x, y);
                }
            }
            // strict comparison keeps the first maximizer in enumeration order
            if value > best {
                best = value;
                best_strategy = DeterministicStrategy::new(alice.clone(), bob.clone());
            }
            if !advance(&mut bob, s.outputs_b()) {
                break;
            }
        }
        if !advance(&mut alice, s.outputs_a()) {
            break;
        }
    }
    Ok(LocalBound {
        value: best + f.constant(),
        strategy: best_strategy,
        strategies_enumerated: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::BinaryCorrelators;
    use proptest::prelude::*;

    #[test]
    fn chsh_local_bound_is_two() {
        let lb = local_bound(&BellExpression::chsh()).unwrap();
        assert!((lb.value - 2.0).abs() < 1e-12);
        assert_eq!(lb.strategies_enumerated, 16);
        let p = lb.strategy.behavior(Scenario::chsh()).unwrap();
        assert!((BellExpression::chsh().value(&p).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_behaviors_are_zero_one() {
        let st = DeterministicStrategy::new(vec![1, 0, 2], vec![0, 1]);
        let s = Scenario::new(3, 2, 3, 2).unwrap();
        let p = st.behavior(s).unwrap();
        assert!(p.as_slice().iter().all(|&v| v == 0.0 || v == 1.0));
        assert!(p.validate_normalized(1e-12).passes);
        assert!(DeterministicStrategy::new(vec![3, 0, 0], vec![0, 0])
            .behavior(s)
            .is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let s = Scenario::symmetric(12, 4).unwrap();
        assert!(matches!(
            local_bound(&BellExpression::zeros(s)),
            Err(Error::ResourceLimit(_))
        ));
        assert!(local_bound_with_cap(&BellExpression::chsh(), 15).is_err());
    }

    #[test]
    fn constant_is_added() {
        let f = BellExpression::new(
            Scenario::chsh(),
            BellExpression::chsh().coeffs().to_vec(),
            -1.5,
        )
        .unwrap();
        assert!((local_bound(&f).unwrap().value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn marginal_term_raises_bound() {
        let mut w = BinaryCorrelators::zeros(2, 2);
        w.corr = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        w.mean_a[0] = 1.0;
        let f = BellExpression::from_correlators(0.0, &w).unwrap();
        assert!((local_bound(&f).unwrap().value - 3.0).abs() < 1e-12);
    }

    proptest! {
        // Relabeling inputs and outputs of both f and the strategies leaves
        // the maximum unchanged.
        #[test]
        fn invariant_under_relabeling(coeffs in prop::collection::vec(-2.0f64..2.0, 36),
                                      swap_x in any::<bool>(), rot_a in 0usize..3, rot_b in 0usize..3) {
            let s = Scenario::new(2, 2, 3, 3).unwrap();
            let f = BellExpression::new(s, coeffs, 0.0).unwrap();
            let g = BellExpression::from_fn(s, 0.0, |a, b, x, y| {
                let x2 = if swap_x { 1 - x } else { x };
                f.coeff((a + rot_a) % 3, (b + rot_b) % 3, x2, y)
            });
            let lf = local_bound(&f).unwrap().value;
            let lg = local_bound(&g).unwrap().value;
            prop_assert!((lf - lg).abs() < 1e-12);
        }
    }
}
