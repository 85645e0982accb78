//! Explicit quantum models (pure bipartite states and projective
//! measurements) for the example behaviors, and the named Bell expressions
//! evaluated on them.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bell::{Behavior, BellExpression, BinaryCorrelators, Scenario};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;
/// Tolerance for projector identities (idempotence, orthogonality, completeness).
pub const PROJECTOR_TOL: f64 = 1e-10;

type CMatrix = DMatrix<Complex64>;

/// Pure state of a bipartite system, amplitudes indexed `i·d_B + j` for |i⟩|j⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dim_a: usize,
    dim_b: usize,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    pub fn new(dim_a: usize, dim_b: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != dim_a * dim_b {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a {dim_a}×{dim_b} system",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "state has squared norm {norm}"
            )));
        }
        Ok(StateVector {
            dim_a,
            dim_b,
            amplitudes: DVector::from_vec(amplitudes),
        })
    }

    /// Σ_j c_j |jj⟩ with real coefficients.
    pub fn schmidt(coeffs: &[f64]) -> Result<Self> {
        let d = coeffs.len();
        let mut amp = vec![Complex64::new(0.0, 0.0); d * d];
        for (j, &c) in coeffs.iter().enumerate() {
            amp[j * d + j] = Complex64::new(c, 0.0);
        }
        Self::new(d, d, amp)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// Amplitudes reshaped as a d_A × d_B matrix Ψ with |ψ⟩ = Σ Ψ_ij |i⟩|j⟩.
    fn as_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.dim_a, self.dim_b, |i, j| {
            self.amplitudes[i * self.dim_b + j]
        })
    }
}

/// Per-input complete sets of orthogonal projectors on one party's space.
#[derive(Debug, Clone)]
pub struct ProjectiveMeasurement {
    dim: usize,
    projectors: Vec<Vec<CMatrix>>,
}

impl ProjectiveMeasurement {
    pub fn new(projectors: Vec<Vec<CMatrix>>) -> Result<Self> {
        let dim = projectors
            .first()
            .and_then(|ps| ps.first())
            .map(|p| p.nrows())
            .ok_or_else(|| Error::InvalidArgument("measurement without projectors".into()))?;
        let outputs = projectors[0].len();
        let identity = CMatrix::identity(dim, dim);
        let max_abs = |m: &CMatrix| m.iter().fold(0.0f64, |acc, c| acc.max(c.norm()));
        for (x, set) in projectors.iter().enumerate() {
            if set.len() != outputs {
                return Err(Error::Dimension(format!(
                    "input {x} has {} outcomes, expected {outputs}",
                    set.len()
                )));
            }
            let mut sum = CMatrix::zeros(dim, dim);
            for (a, p) in set.iter().enumerate() {
                if p.nrows() != dim || p.ncols() != dim {
                    return Err(Error::Dimension(format!(
                        "projector ({a}|{x}) is not {dim}×{dim}"
                    )));
                }
                if max_abs(&(p * p - p)) > PROJECTOR_TOL
                    || max_abs(&(p - p.adjoint())) > PROJECTOR_TOL
                {
                    return Err(Error::InvalidArgument(format!(
                        "({a}|{x}) is not a projector"
                    )));
                }
                for (a2, q) in set.iter().enumerate().skip(a + 1) {
                    if max_abs(&(p * q)) > PROJECTOR_TOL {
                        return Err(Error::InvalidArgument(format!(
                            "projectors ({a}|{x}) and ({a2}|{x}) are not orthogonal"
                        )));
                    }
                }
                sum += p;
            }
            if max_abs(&(sum - &identity)) > PROJECTOR_TOL {
                return Err(Error::InvalidArgument(format!(
                    "projectors of input {x} do not sum to identity"
                )));
            }
        }
        Ok(ProjectiveMeasurement { dim, projectors })
    }

    /// Projectors onto the vectors of orthonormal bases, one basis per input.
    pub fn from_bases(bases: &[Vec<DVector<Complex64>>]) -> Result<Self> {
        Self::new(
            bases
                .iter()
                .map(|basis| basis.iter().map(|v| v * v.adjoint()).collect())
                .collect(),
        )
    }

    /// Qubit observables cos φ·Z + sin φ·X, one angle per input; outcome 0 is
    /// the +1 eigenspace.
    pub fn qubit_angles(angles: &[f64]) -> Result<Self> {
        let c = |v: f64| Complex64::new(v, 0.0);
        Self::new(
            angles
                .iter()
                .map(|&phi| {
                    let obs = CMatrix::from_row_slice(
                        2,
                        2,
                        &[c(phi.cos()), c(phi.sin()), c(phi.sin()), c(-phi.cos())],
                    );
                    let id = CMatrix::identity(2, 2);
                    vec![(&id + &obs).scale(0.5), (&id - &obs).scale(0.5)]
                })
                .collect(),
        )
    }

    /// Projectors onto the computational basis for every input.
    pub fn computational(dim: usize, inputs: usize) -> Result<Self> {
        let basis: Vec<DVector<Complex64>> = (0..dim)
            .map(|k| {
                let mut v = DVector::zeros(dim);
                v[k] = Complex64::new(1.0, 0.0);
                v
            })
            .collect();
        Self::from_bases(&vec![basis; inputs])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inputs(&self) -> usize {
        self.projectors.len()
    }

    pub fn outputs(&self) -> usize {
        self.projectors[0].len()
    }

    pub fn projector(&self, outcome: usize, input: usize) -> &CMatrix {
        &self.projectors[input][outcome]
    }
}

/// p(ab|xy) = ⟨ψ| M_{a|x} ⊗ M_{b|y} |ψ⟩.
pub fn behavior_from_model(
    state: &StateVector,
    meas_a: &ProjectiveMeasurement,
    meas_b: &ProjectiveMeasurement,
) -> Result<Behavior> {
    if meas_a.dim() != state.dim_a() || meas_b.dim() != state.dim_b() {
        return Err(Error::Dimension(format!(
            "state is {}×{}, measurements act on {} and {}",
            state.dim_a(),
            state.dim_b(),
            meas_a.dim(),
            meas_b.dim()
        )));
    }
    let s = Scenario::new(
        meas_a.inputs(),
        meas_b.inputs(),
        meas_a.outputs(),
        meas_b.outputs(),
    )?;
    let psi = state.as_matrix();
    // (P ⊗ Q)|ψ⟩ corresponds to P Ψ Qᵀ
    let left: Vec<Vec<CMatrix>> = (0..s.inputs_a())
        .map(|x| {
            (0..s.outputs_a())
                .map(|a| meas_a.projector(a, x) * &psi)
                .collect()
        })
        .collect();
    Ok(Behavior::from_fn(s, |a, b, x, y| {
        let m = &left[x][a] * meas_b.projector(b, y).transpose();
        psi.iter()
            .zip(m.iter())
            .map(|(u, w)| (u.conj() * w).re)
            .sum()
    }))
}

/// μ with tan μ = sin 2θ, taken in (0, π/2].
fn mu(theta: f64) -> f64 {
    (2.0 * theta).sin().atan()
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= PI / 4.0 + 1e-15) {
        return Err(Error::InvalidArgument(format!(
            "θ = {theta} outside (0, π/4]"
        )));
    }
    Ok(())
}

/// Correlators of the partially entangled family mixed with white noise
/// (visibility `v`): the measurements maximizing I₁^β on
/// cos θ|00⟩ + sin θ|11⟩.
pub fn partial_entangled_correlators(theta: f64, v: f64) -> Result<BinaryCorrelators> {
    check_theta(theta)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!(
            "visibility {v} outside [0, 1]"
        )));
    }
    let mu = mu(theta);
    let (s2, c2) = ((2.0 * theta).sin(), (2.0 * theta).cos());
    Ok(BinaryCorrelators {
        mean_a: vec![v * c2, 0.0],
        mean_b: vec![v * c2 * mu.cos(); 2],
        corr: vec![
            vec![v * mu.cos(), v * mu.cos()],
            vec![v * s2 * mu.sin(), -v * s2 * mu.sin()],
        ],
    })
}

/// Behavior of [`partial_entangled_correlators`].
pub fn partial_entangled_behavior(theta: f64, v: f64) -> Result<Behavior> {
    partial_entangled_correlators(theta, v)?.to_behavior()
}

/// Explicit qubit model realizing [`partial_entangled_correlators`] at v = 1:
/// A₁ = Z, A₂ = X, B_{1,2} = cos μ Z ± sin μ X.
pub fn partial_entangled_model(
    theta: f64,
) -> Result<(StateVector, ProjectiveMeasurement, ProjectiveMeasurement)> {
    check_theta(theta)?;
    let mu = mu(theta);
    let state = StateVector::schmidt(&[theta.cos(), theta.sin()])?;
    let meas_a = ProjectiveMeasurement::qubit_angles(&[0.0, PI / 2.0])?;
    let meas_b = ProjectiveMeasurement::qubit_angles(&[mu, -mu])?;
    Ok((state, meas_a, meas_b))
}

/// Maximally CHSH-violating correlations mixed with white noise.
pub fn chsh_noise_behavior(v: f64) -> Result<Behavior> {
    partial_entangled_behavior(PI / 4.0, v)
}

/// β for which the partially entangled model maximally violates I₁^β.
pub fn i1beta_for_theta(theta: f64) -> f64 {
    let s2 = (2.0 * theta).sin();
    2.0 * (2.0 * theta).cos() / (1.0 + s2 * s2).sqrt()
}

/// I₁^β = CHSH + β⟨A₁⟩ with local bound 2 + β.
pub fn i1beta_expression(beta: f64) -> Result<BellExpression> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "β = {beta} must be non-negative"
        )));
    }
    let mut w = BinaryCorrelators::zeros(2, 2);
    w.corr = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
    w.mean_a[0] = beta;
    BellExpression::from_correlators(0.0, &w)
}

/// Threshold α below which the CGLMP measurements show no violation.
pub fn cglmp_threshold_alpha() -> f64 {
    (3.0f64 / 22.0).sqrt()
}

/// The qutrit family α|00⟩ + √(1−2α²)|11⟩ + α|22⟩ with the CGLMP measurements.
///
/// Alice's basis for input x is |k⟩ ∝ Σ_j exp(2πi·j(k + φ_x)/3)|j⟩ with
/// φ = (0, 1/2); Bob's is |l⟩ ∝ Σ_j exp(2πi·j(−l + χ_y)/3)|j⟩ with
/// χ = (1/4, −1/4).
pub fn cglmp_model(
    alpha: f64,
) -> Result<(StateVector, ProjectiveMeasurement, ProjectiveMeasurement)> {
    if !(0.0..=std::f64::consts::FRAC_1_SQRT_2 + 1e-15).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "α = {alpha} outside [0, 1/√2]"
        )));
    }
    let middle = (1.0 - 2.0 * alpha * alpha).max(0.0).sqrt();
    let state = StateVector::schmidt(&[alpha, middle, alpha])?;
    let d = 3usize;
    let basis = |sign: f64, shift: f64| -> Vec<DVector<Complex64>> {
        (0..d)
            .map(|k| {
                DVector::from_fn(d, |j, _| {
                    let phase = 2.0 * PI * j as f64 * (sign * k as f64 + shift) / d as f64;
                    Complex64::from_polar(1.0 / (d as f64).sqrt(), phase)
                })
            })
            .collect()
    };
    let meas_a = ProjectiveMeasurement::from_bases(&[basis(1.0, 0.0), basis(1.0, 0.5)])?;
    let meas_b = ProjectiveMeasurement::from_bases(&[basis(-1.0, 0.25), basis(-1.0, -0.25)])?;
    Ok((state, meas_a, meas_b))
}

pub fn cglmp_behavior(alpha: f64) -> Result<Behavior> {
    let (state, ma, mb) = cglmp_model(alpha)?;
    behavior_from_model(&state, &ma, &mb)
}

/// The d = 3 CGLMP expression in joint-probability form (local bound 2):
///
/// P(A₁=B₁) + P(B₁=A₂+1) + P(A₂=B₂) + P(B₂=A₁)
/// − P(A₁=B₁−1) − P(B₁=A₂) − P(A₂=B₂−1) − P(B₂=A₁−1), all mod 3.
pub fn cglmp_expression() -> BellExpression {
    let s = Scenario::symmetric(2, 3).expect("valid scenario");
    let m = |v: i64| v.rem_euclid(3);
    BellExpression::from_fn(s, 0.0, |a, b, x, y| {
        let (a, b) = (a as i64, b as i64);
        let (plus, minus) = match (x, y) {
            (0, 0) => (m(a - b) == 0, m(a - (b - 1)) == 0),
            (1, 0) => (m(b - (a + 1)) == 0, m(b - a) == 0),
            (1, 1) => (m(a - b) == 0, m(a - (b - 1)) == 0),
            (0, 1) => (m(b - a) == 0, m(b - (a - 1)) == 0),
            _ => unreachable!(),
        };
        f64::from(u8::from(plus)) - f64::from(u8::from(minus))
    })
}
