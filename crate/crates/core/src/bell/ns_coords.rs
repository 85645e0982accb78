//! Minimal coordinates of the no-signaling subspace.
//!
//! A no-signaling (possibly unnormalized) behavior is fixed by its trace,
//! the marginals p(a|x), p(b|y) for all but the last outcome, and the joint
//! terms p(ab|xy) for all but the last outcome of each party. These are the
//! quantities read off an NPA moment matrix, and they are the rows through
//! which the guessing programs tie Eve's decomposition to the observed data.

use nalgebra::{DMatrix, DVector};

use super::{Behavior, BellExpression, Scenario};
use crate::error::{Error, Result};

/// What a coordinate measures. Outcome indices never include the last one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NsCoord {
    Trace,
    MarginalA {
        a: usize,
        x: usize,
    },
    MarginalB {
        b: usize,
        y: usize,
    },
    Joint {
        a: usize,
        b: usize,
        x: usize,
        y: usize,
    },
}

/// Index map between [`NsCoord`]s and a dense coordinate vector, plus the
/// linear map back to full probability tables.
#[derive(Debug, Clone)]
pub struct NsBasis {
    scenario: Scenario,
    coords: Vec<NsCoord>,
    /// Full table = `lift` · coordinates (dim × len).
    lift: DMatrix<f64>,
}

impl NsBasis {
    pub fn new(scenario: Scenario) -> Self {
        let (ka, kb) = (scenario.outputs_a() - 1, scenario.outputs_b() - 1);
        let mut coords = vec![NsCoord::Trace];
        for x in 0..scenario.inputs_a() {
            for a in 0..ka {
                coords.push(NsCoord::MarginalA { a, x });
            }
        }
        for y in 0..scenario.inputs_b() {
            for b in 0..kb {
                coords.push(NsCoord::MarginalB { b, y });
            }
        }
        for x in 0..scenario.inputs_a() {
            for y in 0..scenario.inputs_b() {
                for a in 0..ka {
                    for b in 0..kb {
                        coords.push(NsCoord::Joint { a, b, x, y });
                    }
                }
            }
        }
        let mut basis = NsBasis {
            scenario,
            coords,
            lift: DMatrix::zeros(0, 0),
        };
        let n = basis.len();
        let mut lift = DMatrix::zeros(scenario.dim(), n);
        let mut unit = vec![0.0; n];
        for j in 0..n {
            unit[j] = 1.0;
            let col = basis.lift_raw(&unit);
            lift.set_column(j, &DVector::from_vec(col));
            unit[j] = 0.0;
        }
        basis.lift = lift;
        basis
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[NsCoord] {
        &self.coords
    }

    pub fn position(&self, c: NsCoord) -> Option<usize> {
        self.coords.iter().position(|&k| k == c)
    }

    /// Coordinates of a behavior. Marginals are averaged over the other
    /// party's inputs and the trace over all settings, which is exact on
    /// no-signaling data.
    pub fn coordinates(&self, p: &Behavior) -> Result<Vec<f64>> {
        self.scenario.ensure_same(&p.scenario())?;
        Ok(self
            .coords
            .iter()
            .map(|c| match *c {
                NsCoord::Trace => p.trace(),
                NsCoord::MarginalA { a, x } => p.marginal_a(a, x),
                NsCoord::MarginalB { b, y } => p.marginal_b(b, y),
                NsCoord::Joint { a, b, x, y } => p.get(a, b, x, y),
            })
            .collect())
    }

    fn lift_raw(&self, c: &[f64]) -> Vec<f64> {
        let s = self.scenario;
        let (la, lb) = (s.outputs_a() - 1, s.outputs_b() - 1);
        let mut marg_a = vec![vec![0.0; s.outputs_a()]; s.inputs_a()];
        let mut marg_b = vec![vec![0.0; s.outputs_b()]; s.inputs_b()];
        let mut joint = vec![0.0; s.dim()];
        let mut trace = 0.0;
        for (k, coord) in self.coords.iter().enumerate() {
            match *coord {
                NsCoord::Trace => trace = c[k],
                NsCoord::MarginalA { a, x } => marg_a[x][a] = c[k],
                NsCoord::MarginalB { b, y } => marg_b[y][b] = c[k],
                NsCoord::Joint { a, b, x, y } => joint[s.index(a, b, x, y)] = c[k],
            }
        }
        for x in 0..s.inputs_a() {
            marg_a[x][la] = trace - marg_a[x][..la].iter().sum::<f64>();
        }
        for y in 0..s.inputs_b() {
            marg_b[y][lb] = trace - marg_b[y][..lb].iter().sum::<f64>();
        }
        let mut out = vec![0.0; s.dim()];
        for x in 0..s.inputs_a() {
            for y in 0..s.inputs_b() {
                for a in 0..s.outputs_a() {
                    for b in 0..s.outputs_b() {
                        let v = match (a == la, b == lb) {
                            (false, false) => joint[s.index(a, b, x, y)],
                            (false, true) => {
                                marg_a[x][a]
                                    - (0..lb).map(|b2| joint[s.index(a, b2, x, y)]).sum::<f64>()
                            }
                            (true, false) => {
                                marg_b[y][b]
                                    - (0..la).map(|a2| joint[s.index(a2, b, x, y)]).sum::<f64>()
                            }
                            (true, true) => {
                                let mut v = trace;
                                v -= (0..la).map(|a2| marg_a[x][a2]).sum::<f64>();
                                v -= (0..lb).map(|b2| marg_b[y][b2]).sum::<f64>();
                                for a2 in 0..la {
                                    for b2 in 0..lb {
                                        v += joint[s.index(a2, b2, x, y)];
                                    }
                                }
                                v
                            }
                        };
                        out[s.index(a, b, x, y)] = v;
                    }
                }
            }
        }
        out
    }

    /// Full probability table of the no-signaling behavior with the given
    /// coordinates.
    pub fn behavior(&self, c: &[f64]) -> Result<Behavior> {
        if c.len() != self.len() {
            return Err(Error::Dimension(format!(
                "expected {} no-signaling coordinates, got {}",
                self.len(),
                c.len()
            )));
        }
        Behavior::new(self.scenario, self.lift_raw(c))
    }

    /// Full-table coefficients (as a linear map) of a coordinate `c`, i.e.
    /// the column of the lift for `c` read as a functional: f·p = coordinate.
    /// Uses the same averaging as [`coordinates`](Self::coordinates).
    pub fn coordinate_functional(&self, k: usize) -> BellExpression {
        let s = self.scenario;
        let (nx, ny) = (s.inputs_a() as f64, s.inputs_b() as f64);
        match self.coords[k] {
            NsCoord::Trace => BellExpression::from_fn(s, 0.0, |_, _, _, _| 1.0 / (nx * ny)),
            NsCoord::MarginalA { a, x } => {
                BellExpression::from_fn(
                    s,
                    0.0,
                    |a2, _, x2, _| if a2 == a && x2 == x { 1.0 / ny } else { 0.0 },
                )
            }
            NsCoord::MarginalB { b, y } => {
                BellExpression::from_fn(
                    s,
                    0.0,
                    |_, b2, _, y2| if b2 == b && y2 == y { 1.0 / nx } else { 0.0 },
                )
            }
            NsCoord::Joint { a, b, x, y } => BellExpression::from_fn(s, 0.0, |a2, b2, x2, y2| {
                if (a2, b2, x2, y2) == (a, b, x, y) {
                    1.0
                } else {
                    0.0
                }
            }),
        }
    }

    /// Coordinate-space weights g with f·p = g·coordinates(p) for every
    /// no-signaling p (the constant is not included).
    pub fn pull_back(&self, f: &BellExpression) -> Result<Vec<f64>> {
        self.scenario.ensure_same(&f.scenario())?;
        let fv = DVector::from_column_slice(f.coeffs());
        Ok((self.lift.transpose() * fv).as_slice().to_vec())
    }

    /// Minimum-norm full-table expression f with f·p = g·coordinates(p) on
    /// no-signaling behaviors.
    pub fn push_forward(&self, g: &[f64], constant: f64) -> Result<BellExpression> {
        if g.len() != self.len() {
            return Err(Error::Dimension(format!(
                "expected {} coordinate weights, got {}",
                self.len(),
                g.len()
            )));
        }
        let gram = self.lift.transpose() * &self.lift;
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Solver("no-signaling lift is rank deficient".into()))?;
        let w = chol.solve(&DVector::from_column_slice(g));
        let f = &self.lift * w;
        BellExpression::new(self.scenario, f.as_slice().to_vec(), constant)
    }

    /// Full-table coefficients of the linear map "guess probability"
    /// p(a|x) of Alice's outcome `a` (any outcome, including the last).
    pub fn marginal_a_functional(&self, a: usize, x: usize) -> BellExpression {
        let s = self.scenario;
        let ny = s.inputs_b() as f64;
        BellExpression::from_fn(
            s,
            0.0,
            |a2, _, x2, _| if a2 == a && x2 == x { 1.0 / ny } else { 0.0 },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::BinaryCorrelators;

    #[test]
    fn coordinate_counts() {
        assert_eq!(NsBasis::new(Scenario::chsh()).len(), 9);
        assert_eq!(NsBasis::new(Scenario::symmetric(2, 3).unwrap()).len(), 25);
        assert_eq!(
            NsBasis::new(Scenario::new(3, 2, 2, 4).unwrap()).len(),
            1 + 3 + 6 + 18
        );
    }

    #[test]
    fn lift_round_trips_no_signaling_behaviors() {
        let s = Scenario::new(2, 3, 3, 2).unwrap();
        let p = crate::bell::DeterministicStrategy::new(vec![2, 1], vec![0, 1, 1])
            .behavior(s)
            .unwrap()
            .mix(0.3, &Behavior::uniform(s))
            .unwrap();
        let basis = NsBasis::new(s);
        let c = basis.coordinates(&p).unwrap();
        let back = basis.behavior(&c).unwrap();
        assert!(back.max_abs_diff(&p).unwrap() < 1e-15);
    }

    #[test]
    fn pull_back_and_push_forward_agree_on_values() {
        let s = Scenario::chsh();
        let basis = NsBasis::new(s);
        let f = BellExpression::chsh();
        let g = basis.pull_back(&f).unwrap();
        let f2 = basis.push_forward(&g, 0.0).unwrap();
        let mut corr = BinaryCorrelators::zeros(2, 2);
        corr.mean_a = vec![0.3, -0.1];
        corr.mean_b = vec![0.2, 0.0];
        corr.corr = vec![vec![0.5, 0.1], vec![-0.2, 0.4]];
        let p = corr.to_behavior().unwrap();
        let c = basis.coordinates(&p).unwrap();
        let via_g: f64 = g.iter().zip(&c).map(|(a, b)| a * b).sum();
        assert!((via_g - f.value(&p).unwrap()).abs() < 1e-12);
        assert!((f2.value(&p).unwrap() - f.value(&p).unwrap()).abs() < 1e-12);
        // CHSH is orthogonal to the signaling directions, so the minimum-norm
        // representative is CHSH itself.
        for (u, v) in f2.coeffs().iter().zip(f.coeffs()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn coordinate_functionals_read_coordinates() {
        let s = Scenario::symmetric(2, 3).unwrap();
        let basis = NsBasis::new(s);
        let p = crate::bell::DeterministicStrategy::new(vec![0, 1], vec![2, 0])
            .behavior(s)
            .unwrap()
            .mix(0.6, &Behavior::uniform(s))
            .unwrap();
        let c = basis.coordinates(&p).unwrap();
        for k in 0..basis.len() {
            let v = basis.coordinate_functional(k).value(&p).unwrap();
            assert!((v - c[k]).abs() < 1e-14);
        }
    }
}
