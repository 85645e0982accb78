//! Primal-dual interior-point method on the homogeneous self-dual embedding,
//! with the HKM search direction and Mehrotra predictor-corrector steps.
//! The embedding copes with programs whose feasible set has empty interior
//! (extremal behaviors), where the optimum is only approached.
//!
//! Internally every program is brought to
//!
//! ```text
//!   min ⟨C, X⟩  s.t.  A(X) = b,  X ⪰ 0
//!   max bᵀy     s.t.  A*(y) + Z = C,  Z ⪰ 0
//! ```
//!
//! The Schur complement M_ij = tr(A_i Z⁻¹ A_j X) is block-arrow shaped when
//! most constraints touch a single block; those rows are eliminated block by
//! block before the (small) coupling system is factored.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::program::{BlockKind, ConicProgram, Sense};
use super::settings::SolverSettings;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverStatus {
    /// Gap and residuals within the requested tolerance.
    Optimal,
    /// Progress stalled, but gap and residuals are within `reduced_tol`.
    NearOptimal,
    /// The constraints admit no point in the cone.
    Infeasible,
    /// Feasible with unbounded objective.
    Unbounded,
    NumericalFailure,
}

impl SolverStatus {
    pub fn is_optimal(self) -> bool {
        matches!(self, SolverStatus::Optimal | SolverStatus::NearOptimal)
    }
}

/// Value of one variable block: a column-major n×n matrix for PSD blocks, the
/// vector itself for nonnegative blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockValue {
    pub kind: BlockKind,
    pub data: Vec<f64>,
}

impl BlockValue {
    /// Element (row, col) (diagonal index for nonnegative blocks).
    pub fn get(&self, row: usize, col: usize) -> f64 {
        match self.kind {
            BlockKind::Psd(n) => self.data[col * n + row],
            BlockKind::Nonneg(_) => {
                if row == col {
                    self.data[row]
                } else {
                    0.0
                }
            }
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        match self.kind {
            BlockKind::Psd(n) => DMatrix::from_column_slice(n, n, &self.data),
            BlockKind::Nonneg(n) => {
                DMatrix::from_diagonal(&DVector::from_column_slice(&self.data[..n]))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub status: SolverStatus,
    /// Objective of the returned primal point, in the program's own sense.
    pub primal_value: f64,
    /// Dual objective Σ b_i λ_i.
    pub dual_value: f64,
    pub x: Vec<BlockValue>,
    /// Equality multipliers λ, signed so that Σ b_i λ_i is the dual bound
    /// on the program's objective (upper bound when maximizing).
    pub multipliers: Vec<f64>,
    /// ‖b − A(X)‖ / (1 + ‖b‖)
    pub primal_infeasibility: f64,
    /// ‖C − A*(y) − Z‖ / (1 + ‖C‖)
    pub dual_infeasibility: f64,
    /// max(|pobj − dobj|, ⟨X, Z⟩) / (1 + |pobj| + |dobj|)
    pub relative_gap: f64,
    pub iterations: usize,
}

impl SolverReport {
    pub fn primal_dual_gap(&self) -> f64 {
        (self.primal_value - self.dual_value).abs()
    }
}

#[derive(Debug, Clone)]
enum Mat {
    Dense(DMatrix<f64>),
    Diag(DVector<f64>),
}

impl Mat {
    fn zeros(kind: BlockKind) -> Mat {
        match kind {
            BlockKind::Psd(n) => Mat::Dense(DMatrix::zeros(n, n)),
            BlockKind::Nonneg(n) => Mat::Diag(DVector::zeros(n)),
        }
    }

    fn scaled_identity(kind: BlockKind, s: f64) -> Mat {
        match kind {
            BlockKind::Psd(n) => Mat::Dense(DMatrix::identity(n, n) * s),
            BlockKind::Nonneg(n) => Mat::Diag(DVector::from_element(n, s)),
        }
    }

    fn dot(&self, other: &Mat) -> f64 {
        match (self, other) {
            (Mat::Dense(a), Mat::Dense(b)) => a.dot(b),
            (Mat::Diag(a), Mat::Diag(b)) => a.dot(b),
            _ => unreachable!("block kinds always match"),
        }
    }

    fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    fn axpy(&mut self, alpha: f64, other: &Mat) {
        match (self, other) {
            (Mat::Dense(a), Mat::Dense(b)) => *a += b * alpha,
            (Mat::Diag(a), Mat::Diag(b)) => a.axpy(alpha, b, 1.0),
            _ => unreachable!("block kinds always match"),
        }
    }

    fn sub(&self, other: &Mat) -> Mat {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }
}

/// One constraint's coefficients inside one block, expanded to both
/// triangles: A = Σ u·e_p e_qᵀ over `full`.
#[derive(Debug, Clone)]
struct Part {
    block: usize,
    full: Vec<(usize, usize, f64)>,
}

struct Problem {
    blocks: Vec<BlockKind>,
    rows: Vec<Vec<Part>>,
    b: DVector<f64>,
    c: Vec<Mat>,
    /// Rows touching exactly one block, grouped by that block.
    local: Vec<Vec<usize>>,
    coupling: Vec<usize>,
    /// Rows that touch any block, in the order used for the Schur matrix
    /// (locals grouped by block, then coupling rows).
    order: Vec<usize>,
    position: Vec<usize>,
    nu: f64,
}

fn expand(entries: &[super::program::Entry], blocks: &[BlockKind], scale: f64) -> Vec<Part> {
    let mut parts: Vec<Part> = Vec::new();
    for e in entries {
        if parts.last().map(|p| p.block) != Some(e.block) {
            parts.push(Part {
                block: e.block,
                full: Vec::new(),
            });
        }
        let part = parts.last_mut().expect("just pushed");
        let v = e.value * scale;
        part.full.push((e.row, e.col, v));
        if e.row != e.col && matches!(blocks[e.block], BlockKind::Psd(_)) {
            part.full.push((e.col, e.row, v));
        }
    }
    parts
}

impl Problem {
    fn new(program: &ConicProgram) -> Result<Problem> {
        let blocks = program.blocks().to_vec();
        let mut rows = Vec::with_capacity(program.num_constraints());
        let mut b = DVector::zeros(program.num_constraints());
        for (i, con) in program.constraints().iter().enumerate() {
            if con.coeffs.is_empty() && con.rhs != 0.0 {
                return Err(Error::Infeasible(format!(
                    "constraint {i} reads 0 = {}",
                    con.rhs
                )));
            }
            rows.push(expand(con.coeffs.entries(), &blocks, 1.0));
            b[i] = con.rhs;
        }
        let sign = match program.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut c: Vec<Mat> = blocks.iter().map(|&k| Mat::zeros(k)).collect();
        for part in expand(program.objective().entries(), &blocks, sign) {
            add_part(&mut c[part.block], &part, 1.0);
        }
        let mut local = vec![Vec::new(); blocks.len()];
        let mut coupling = Vec::new();
        for (i, parts) in rows.iter().enumerate() {
            match parts.len() {
                0 => {}
                1 => local[parts[0].block].push(i),
                _ => coupling.push(i),
            }
        }
        let order: Vec<usize> = local.iter().flatten().chain(&coupling).copied().collect();
        let mut position = vec![usize::MAX; rows.len()];
        for (k, &i) in order.iter().enumerate() {
            position[i] = k;
        }
        let nu = blocks.iter().map(|k| k.size() as f64).sum();
        Ok(Problem {
            blocks,
            rows,
            b,
            c,
            local,
            coupling,
            order,
            position,
            nu,
        })
    }

    /// A(Y)_i = Σ_full u·Y[p, q].
    fn apply(&self, y: &[Mat]) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|parts| {
                parts
                    .iter()
                    .map(|part| match &y[part.block] {
                        Mat::Dense(m) => part
                            .full
                            .iter()
                            .map(|&(p, q, u)| u * m[(p, q)])
                            .sum::<f64>(),
                        Mat::Diag(d) => part.full.iter().map(|&(p, _, u)| u * d[p]).sum::<f64>(),
                    })
                    .sum()
            }),
        )
    }

    /// Solve with a factor stored in Schur (permuted) order.
    fn solve_permuted(&self, factor: &SchurFactor, r: &DVector<f64>) -> DVector<f64> {
        let mut permuted = DVector::zeros(self.order.len());
        for (k, &i) in self.order.iter().enumerate() {
            permuted[k] = r[i];
        }
        let sol = factor.solve(&permuted);
        let mut out = DVector::zeros(self.rows.len());
        for (k, &i) in self.order.iter().enumerate() {
            out[i] = sol[k];
        }
        out
    }

    /// A*(y) = Σ y_i A_i.
    fn adjoint(&self, y: &DVector<f64>) -> Vec<Mat> {
        let mut out: Vec<Mat> = self.blocks.iter().map(|&k| Mat::zeros(k)).collect();
        for (i, parts) in self.rows.iter().enumerate() {
            if y[i] == 0.0 {
                continue;
            }
            for part in parts {
                add_part(&mut out[part.block], part, y[i]);
            }
        }
        out
    }
}

fn add_part(m: &mut Mat, part: &Part, w: f64) {
    match m {
        Mat::Dense(m) => {
            for &(p, q, u) in &part.full {
                m[(p, q)] += w * u;
            }
        }
        Mat::Diag(d) => {
            for &(p, _, u) in &part.full {
                d[p] += w * u;
            }
        }
    }
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Largest α ≤ cap keeping X + α·dX in the cone (X interior).
fn max_step(x: &Mat, dx: &Mat, cap: f64) -> Option<f64> {
    match (x, dx) {
        (Mat::Dense(x), Mat::Dense(dx)) => {
            let chol = Cholesky::new(x.clone())?;
            let l = chol.l();
            // L⁻¹ dX L⁻ᵀ
            let t = l.solve_lower_triangular(dx)?;
            let t = l.solve_lower_triangular(&t.transpose())?;
            let eig = SymmetricEigen::new(sym(t)).eigenvalues;
            let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
            Some(if min < 0.0 { cap.min(-1.0 / min) } else { cap })
        }
        (Mat::Diag(x), Mat::Diag(dx)) => {
            let mut alpha = cap;
            for (xi, di) in x.iter().zip(dx.iter()) {
                if *di < 0.0 {
                    alpha = alpha.min(-xi / di);
                }
            }
            Some(alpha)
        }
        _ => unreachable!("block kinds always match"),
    }
}

fn max_step_all(x: &[Mat], dx: &[Mat]) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    for (xb, db) in x.iter().zip(dx) {
        alpha = alpha.min(max_step(xb, db, f64::INFINITY)?);
    }
    Some(alpha)
}

/// Per-iteration factorization of the Schur complement.
struct SchurFactor {
    local: Vec<Option<(Cholesky<f64, Dyn>, DMatrix<f64>)>>,
    coupling: Option<Cholesky<f64, Dyn>>,
    /// Permuted-order offsets of each local group, and the coupling start.
    offsets: Vec<usize>,
    coupling_start: usize,
    /// M_bC for each local group (needed for back substitution).
    border: Vec<DMatrix<f64>>,
}

fn cholesky_regularized(mut m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let scale = m
        .diagonal()
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(1e-300);
    let mut shift = 0.0;
    for attempt in 0..8 {
        if let Some(ch) = Cholesky::new(m.clone()) {
            return Some(ch);
        }
        let next = scale * 1e-14 * 100f64.powi(attempt);
        for i in 0..m.nrows() {
            m[(i, i)] += next - shift;
        }
        shift = next;
    }
    None
}

struct Iterate {
    x: Vec<Mat>,
    y: DVector<f64>,
    z: Vec<Mat>,
}

struct Workspace<'a> {
    prob: &'a Problem,
    zinv: Vec<Mat>,
}

impl<'a> Workspace<'a> {
    fn new(prob: &'a Problem, it: &Iterate) -> Option<Self> {
        let mut zinv = Vec::with_capacity(it.z.len());
        for z in &it.z {
            zinv.push(match z {
                Mat::Dense(z) => Mat::Dense(Cholesky::new(z.clone())?.inverse()),
                Mat::Diag(z) => {
                    if z.iter().any(|&v| v <= 0.0) {
                        return None;
                    }
                    Mat::Diag(z.map(|v| 1.0 / v))
                }
            });
        }
        Some(Workspace { prob, zinv })
    }

    /// tr(A_i Z⁻¹ A_j X) restricted to one block.
    fn pair(&self, pi: &Part, pj: &Part, x: &Mat) -> f64 {
        match (&self.zinv[pi.block], x) {
            (Mat::Dense(zi), Mat::Dense(x)) => {
                let mut s = 0.0;
                for &(p, q, u) in &pi.full {
                    for &(r, t, w) in &pj.full {
                        s += u * w * zi[(q, r)] * x[(t, p)];
                    }
                }
                s
            }
            (Mat::Diag(zi), Mat::Diag(x)) => {
                // both lists are sorted by index
                let (mut a, mut b, mut s) = (0, 0, 0.0);
                while a < pi.full.len() && b < pj.full.len() {
                    let (ka, kb) = (pi.full[a].0, pj.full[b].0);
                    if ka == kb {
                        s += pi.full[a].2 * pj.full[b].2 * x[ka] * zi[ka];
                        a += 1;
                        b += 1;
                    } else if ka < kb {
                        a += 1;
                    } else {
                        b += 1;
                    }
                }
                s
            }
            _ => unreachable!("block kinds always match"),
        }
    }

    fn schur(&self, x: &[Mat]) -> Option<SchurFactor> {
        let prob = self.prob;
        let m = prob.order.len();
        let mut mat = DMatrix::<f64>::zeros(m, m);
        // rows touching each block
        let mut touching: Vec<Vec<(usize, usize)>> = vec![Vec::new(); prob.blocks.len()];
        for &i in &prob.order {
            for (k, part) in prob.rows[i].iter().enumerate() {
                touching[part.block].push((i, k));
            }
        }
        for rows in &touching {
            for (u, &(i, ki)) in rows.iter().enumerate() {
                let pi = &prob.rows[i][ki];
                let xi = &x[pi.block];
                for &(j, kj) in &rows[u..] {
                    let v = self.pair(pi, &prob.rows[j][kj], xi);
                    let (a, b) = (prob.position[i], prob.position[j]);
                    mat[(a, b)] += v;
                    if a != b {
                        mat[(b, a)] += v;
                    }
                }
            }
        }

        let mut offsets = Vec::with_capacity(prob.blocks.len());
        let mut start = 0;
        for group in &prob.local {
            offsets.push(start);
            start += group.len();
        }
        let coupling_start = start;
        let nc = prob.coupling.len();
        let mut schur_cc = mat
            .view((coupling_start, coupling_start), (nc, nc))
            .clone_owned();
        let mut local = Vec::with_capacity(prob.blocks.len());
        let mut border = Vec::with_capacity(prob.blocks.len());
        for (g, group) in prob.local.iter().enumerate() {
            let n = group.len();
            if n == 0 {
                local.push(None);
                border.push(DMatrix::zeros(0, nc));
                continue;
            }
            let mbb = mat.view((offsets[g], offsets[g]), (n, n)).clone_owned();
            let mbc = mat
                .view((offsets[g], coupling_start), (n, nc))
                .clone_owned();
            let chol = cholesky_regularized(mbb)?;
            let w = chol.solve(&mbc);
            if nc > 0 {
                schur_cc -= mbc.transpose() * &w;
            }
            local.push(Some((chol, w)));
            border.push(mbc);
        }
        let coupling = if nc > 0 {
            Some(cholesky_regularized(sym(schur_cc))?)
        } else {
            None
        };
        Some(SchurFactor {
            local,
            coupling,
            offsets,
            coupling_start,
            border,
        })
    }
}

impl SchurFactor {
    /// Solve M·d = r, both in permuted order.
    fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        let nc = r.len() - self.coupling_start;
        let mut rc = r.rows(self.coupling_start, nc).clone_owned();
        for (g, entry) in self.local.iter().enumerate() {
            if let Some((chol, w)) = entry {
                let n = chol.l_dirty().nrows();
                rc -= w.transpose() * r.rows(self.offsets[g], n);
            }
        }
        let dc = match &self.coupling {
            Some(ch) => ch.solve(&rc),
            None => DVector::zeros(0),
        };
        let mut out = DVector::zeros(r.len());
        out.rows_mut(self.coupling_start, nc).copy_from(&dc);
        for (g, entry) in self.local.iter().enumerate() {
            if let Some((chol, _)) = entry {
                let n = chol.l_dirty().nrows();
                let mut rb = r.rows(self.offsets[g], n).clone_owned();
                if nc > 0 {
                    rb -= &self.border[g] * &dc;
                }
                out.rows_mut(self.offsets[g], n).copy_from(&chol.solve(&rb));
            }
        }
        out
    }
}

struct Direction {
    dx: Vec<Mat>,
    dy: DVector<f64>,
    dz: Vec<Mat>,
    dtau: f64,
    dkappa: f64,
}

/// X W Z⁻¹, symmetrized.
fn lift_one(x: &Mat, w: &Mat, zi: &Mat) -> Mat {
    match (x, w, zi) {
        (Mat::Dense(x), Mat::Dense(a), Mat::Dense(zi)) => Mat::Dense(sym(x * a * zi)),
        (Mat::Diag(x), Mat::Diag(a), Mat::Diag(zi)) => {
            Mat::Diag(x.component_mul(a).component_mul(zi))
        }
        _ => unreachable!("block kinds always match"),
    }
}

/// Quantities shared by the predictor and corrector of one iteration of the
/// homogeneous embedding.
struct Newton<'a> {
    prob: &'a Problem,
    ws: &'a Workspace<'a>,
    factor: SchurFactor,
    it: &'a Iterate,
    tau: f64,
    kappa: f64,
    /// X C Z⁻¹
    xcz: Vec<Mat>,
    /// A(X C Z⁻¹)
    w: DVector<f64>,
    /// M⁻¹(b + A(X C Z⁻¹))
    v: DVector<f64>,
    denom: f64,
}

impl<'a> Newton<'a> {
    fn new(
        prob: &'a Problem,
        ws: &'a Workspace<'a>,
        it: &'a Iterate,
        tau: f64,
        kappa: f64,
    ) -> Option<Self> {
        let factor = ws.schur(&it.x)?;
        let xcz: Vec<Mat> = (0..prob.blocks.len())
            .map(|k| lift_one(&it.x[k], &prob.c[k], &ws.zinv[k]))
            .collect();
        let w = prob.apply(&xcz);
        let mut n = Newton {
            prob,
            ws,
            factor,
            it,
            tau,
            kappa,
            xcz,
            w,
            v: DVector::zeros(0),
            denom: 0.0,
        };
        // bᵀM⁻¹b + ⟨C', X C' Z⁻¹⟩ + κ/τ with C' = C − A*(M⁻¹w); both terms
        // are nonnegative, unlike the expanded form
        let qb = n.msolve(&prob.b);
        let qw = n.msolve(&n.w);
        let aq = prob.adjoint(&qw);
        let resid: f64 = (0..prob.blocks.len())
            .map(|k| {
                let cp = prob.c[k].sub(&aq[k]);
                cp.dot(&lift_one(&it.x[k], &cp, &ws.zinv[k]))
            })
            .sum();
        n.denom = prob.b.dot(&qb) + resid.max(0.0) + kappa / tau;
        n.v = qb + qw;
        (n.denom.is_finite() && n.denom > 0.0).then_some(n)
    }

    fn lift(&self, d: &DVector<f64>) -> Vec<Mat> {
        let ad = self.prob.adjoint(d);
        (0..ad.len())
            .map(|k| lift_one(&self.it.x[k], &ad[k], &self.ws.zinv[k]))
            .collect()
    }

    /// M d = r with M = A(X A*(·) Z⁻¹), refined against the operator.
    fn msolve(&self, r: &DVector<f64>) -> DVector<f64> {
        let mut d = self.prob.solve_permuted(&self.factor, r);
        let mut res = r - self.prob.apply(&self.lift(&d));
        for _ in 0..REFINE_STEPS {
            if res.norm() <= 1e-14 * (1.0 + r.norm()) {
                break;
            }
            let delta = self.prob.solve_permuted(&self.factor, &res);
            let cand = &d + &delta;
            let next = r - self.prob.apply(&self.lift(&cand));
            if next.norm() >= res.norm() {
                break;
            }
            d = cand;
            res = next;
        }
        d
    }

    /// Direction for complementarity targets `gc` (R_c Z⁻¹ per block) and
    /// `rtk` (for τκ), reducing the residuals by the factor `eta`.
    fn direction(&self, res: &Residuals, gc: Vec<Mat>, rtk: f64, eta: f64) -> Direction {
        let prob = self.prob;
        let g: Vec<Mat> = gc
            .into_iter()
            .enumerate()
            .map(|(k, mut g)| {
                g.axpy(-eta, &lift_one(&self.it.x[k], &res.rd[k], &self.ws.zinv[k]));
                match g {
                    Mat::Dense(m) => Mat::Dense(sym(m)),
                    d => d,
                }
            })
            .collect();
        let u = self.msolve(&(&res.rp * eta - prob.apply(&g)));
        let cg: f64 = prob.c.iter().zip(&g).map(|(c, m)| c.dot(m)).sum();
        let num = eta * res.rg - prob.b.dot(&u) + self.w.dot(&u) + cg + rtk / self.tau;
        let dtau = num / self.denom;
        let dy = &u + &self.v * dtau;
        let mut dx = g;
        for (k, l) in self.lift(&dy).iter().enumerate() {
            dx[k].axpy(1.0, l);
            dx[k].axpy(-dtau, &self.xcz[k]);
        }
        let aty = prob.adjoint(&dy);
        let dz: Vec<Mat> = (0..prob.blocks.len())
            .map(|k| {
                let mut d = res.rd[k].clone();
                match &mut d {
                    Mat::Dense(m) => *m *= eta,
                    Mat::Diag(v) => *v *= eta,
                }
                d.axpy(-1.0, &aty[k]);
                d.axpy(dtau, &prob.c[k]);
                d
            })
            .collect();
        let dkappa = (rtk - self.kappa * dtau) / self.tau;
        Direction {
            dx,
            dy,
            dz,
            dtau,
            dkappa,
        }
    }

    fn step(&self, d: &Direction) -> Option<f64> {
        let mut a = max_step_all(&self.it.x, &d.dx)?.min(max_step_all(&self.it.z, &d.dz)?);
        if d.dtau < 0.0 {
            a = a.min(-self.tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            a = a.min(-self.kappa / d.dkappa);
        }
        Some(a)
    }
}

/// Residuals of the homogeneous embedding.
struct Residuals {
    /// bτ − A(X)
    rp: DVector<f64>,
    /// Cτ − A*(y) − Z
    rd: Vec<Mat>,
    /// κ − bᵀy + ⟨C, X⟩
    rg: f64,
}

const REFINE_STEPS: usize = 3;

fn frob(m: &[Mat]) -> f64 {
    m.iter().map(Mat::norm_sq).sum::<f64>().sqrt()
}

/// Solve a conic program. Deterministic for identical inputs and settings.
pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> Result<SolverReport> {
    let prob = Problem::new(program)?;
    let sense_sign = match program.sense() {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let nblocks = prob.blocks.len();
    let b_norm = prob.b.norm();
    let c_norm = frob(&prob.c);
    let mut it = Iterate {
        x: prob
            .blocks
            .iter()
            .map(|&k| Mat::scaled_identity(k, 1.0))
            .collect(),
        y: DVector::zeros(prob.rows.len()),
        z: prob
            .blocks
            .iter()
            .map(|&k| Mat::scaled_identity(k, 1.0))
            .collect(),
    };
    let (mut tau, mut kappa) = (1.0f64, 1.0f64);

    let mut status = SolverStatus::NumericalFailure;
    let mut iterations = 0;
    let mut stalls = 0;
    let (mut pinf, mut dinf, mut relgap);
    let (mut pobj, mut dobj);
    // best iterate by the worst of the three measures, for a graceful stop
    let mut best: Option<(f64, Iterate, f64, [f64; 5])> = None;
    loop {
        let ax = prob.apply(&it.x);
        let aty = prob.adjoint(&it.y);
        let res = Residuals {
            rp: &prob.b * tau - &ax,
            rd: (0..nblocks)
                .map(|k| {
                    let mut r = prob.c[k].clone();
                    match &mut r {
                        Mat::Dense(m) => *m *= tau,
                        Mat::Diag(v) => *v *= tau,
                    }
                    r.sub(&it.z[k]).sub(&aty[k])
                })
                .collect(),
            rg: kappa - prob.b.dot(&it.y)
                + prob.c.iter().zip(&it.x).map(|(c, x)| c.dot(x)).sum::<f64>(),
        };
        let cx: f64 = prob.c.iter().zip(&it.x).map(|(c, x)| c.dot(x)).sum();
        let by = prob.b.dot(&it.y);
        let xz: f64 = it.x.iter().zip(&it.z).map(|(x, z)| x.dot(z)).sum();
        pobj = cx / tau;
        dobj = by / tau;
        pinf = res.rp.norm() / tau / (1.0 + b_norm);
        dinf = frob(&res.rd) / tau / (1.0 + c_norm);
        relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let score = relgap
            .max(pinf)
            .max(dinf)
            .max(xz / (tau * tau) / (1.0 + pobj.abs() + dobj.abs()));
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((
                score,
                Iterate {
                    x: it.x.clone(),
                    y: it.y.clone(),
                    z: Vec::new(),
                },
                tau,
                [pobj, dobj, pinf, dinf, relgap],
            ));
        }

        if relgap <= settings.tol && pinf <= settings.tol && dinf <= settings.tol {
            status = SolverStatus::Optimal;
            break;
        }
        // Farkas certificates from the embedding once τ has collapsed
        if tau < kappa {
            if by > 0.0 {
                let ray: Vec<Mat> = aty
                    .iter()
                    .zip(&it.z)
                    .map(|(a, z)| {
                        let mut s = a.clone();
                        s.axpy(1.0, z);
                        s
                    })
                    .collect();
                if frob(&ray) / by < settings.infeasibility_tol {
                    status = SolverStatus::Infeasible;
                    break;
                }
            }
            if cx < 0.0 && ax.norm() / (-cx) < settings.infeasibility_tol {
                status = SolverStatus::Unbounded;
                break;
            }
        }
        if iterations >= settings.max_iter || stalls >= 3 {
            break;
        }
        iterations += 1;

        let mu = (xz + tau * kappa) / (prob.nu + 1.0);
        let Some(ws) = Workspace::new(&prob, &it) else {
            break;
        };
        let Some(newton) = Newton::new(&prob, &ws, &it, tau, kappa) else {
            break;
        };

        // predictor: R_c = −XZ, so R_c Z⁻¹ = −X
        let g_pred: Vec<Mat> =
            it.x.iter()
                .map(|x| {
                    let mut g = x.clone();
                    match &mut g {
                        Mat::Dense(m) => m.neg_mut(),
                        Mat::Diag(d) => d.neg_mut(),
                    }
                    g
                })
                .collect();
        let pred = newton.direction(&res, g_pred, -tau * kappa, 1.0);
        let Some(a) = newton.step(&pred) else { break };
        let a = a.min(1.0);
        let mut mu_aff = (tau + a * pred.dtau) * (kappa + a * pred.dkappa);
        for k in 0..nblocks {
            let mut xa = it.x[k].clone();
            xa.axpy(a, &pred.dx[k]);
            let mut za = it.z[k].clone();
            za.axpy(a, &pred.dz[k]);
            mu_aff += xa.dot(&za);
        }
        mu_aff /= prob.nu + 1.0;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector: R_c = σμI − XZ − dXp dZp
        let g_corr: Vec<Mat> = (0..nblocks)
            .map(
                |k| match (&it.x[k], &ws.zinv[k], &pred.dx[k], &pred.dz[k]) {
                    (Mat::Dense(x), Mat::Dense(zi), Mat::Dense(dxp), Mat::Dense(dzp)) => {
                        Mat::Dense(zi * (sigma * mu) - x - dxp * dzp * zi)
                    }
                    (Mat::Diag(x), Mat::Diag(zi), Mat::Diag(dxp), Mat::Diag(dzp)) => {
                        Mat::Diag(zi * (sigma * mu) - x - dxp.component_mul(dzp).component_mul(zi))
                    }
                    _ => unreachable!("block kinds always match"),
                },
            )
            .collect();
        let rtk = sigma * mu - tau * kappa - pred.dtau * pred.dkappa;
        let corr = newton.direction(&res, g_corr, rtk, 1.0 - sigma);
        let Some(a) = newton.step(&corr) else { break };
        let a = (0.99 * a).min(1.0);
        if a < 1e-10 {
            stalls += 1;
        }
        for k in 0..nblocks {
            it.x[k].axpy(a, &corr.dx[k]);
            it.z[k].axpy(a, &corr.dz[k]);
        }
        it.y.axpy(a, &corr.dy, 1.0);
        tau += a * corr.dtau;
        kappa += a * corr.dkappa;
    }

    if status == SolverStatus::NumericalFailure {
        if let Some((_, b_it, b_tau, m)) = best {
            it.x = b_it.x;
            it.y = b_it.y;
            tau = b_tau;
            [pobj, dobj, pinf, dinf, relgap] = m;
        }
        if relgap <= settings.reduced_tol
            && pinf <= settings.reduced_tol
            && dinf <= settings.reduced_tol
        {
            status = SolverStatus::NearOptimal;
        }
    }
    if matches!(status, SolverStatus::Infeasible | SolverStatus::Unbounded) {
        tau = 1.0;
    }
    for m in &mut it.x {
        match m {
            Mat::Dense(d) => *d /= tau,
            Mat::Diag(d) => *d /= tau,
        }
    }
    it.y /= tau;

    let x =
        it.x.iter()
            .zip(&prob.blocks)
            .map(|(m, &kind)| BlockValue {
                kind,
                data: match m {
                    Mat::Dense(d) => d.as_slice().to_vec(),
                    Mat::Diag(d) => d.as_slice().to_vec(),
                },
            })
            .collect();
    Ok(SolverReport {
        status,
        primal_value: sense_sign * pobj,
        dual_value: sense_sign * dobj,
        x,
        multipliers: it.y.iter().map(|v| sense_sign * v).collect(),
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
        relative_gap: relgap,
        iterations,
    })
}
