//! Penalized least-squares solvers.
//!
//! The central routine minimizes
//!
//! ```text
//! F(x) = 0.5 ||y - H x||^2 + sum_n lambda_n phi(x_n; a_n)
//! ```
//!
//! by majorization-minimization: each sparsity penalty is replaced by its
//! quadratic majorizer tangent at the current iterate, which turns every
//! step into a ridge-style linear solve. When the instance is convex (each
//! lambda_n * a_n below a certified diagonal bound of H^T H), the iterates
//! descend to the global minimizer; the same loop runs on non-convex
//! instances when the caller explicitly asks for it, converging to a
//! stationary point that depends on the starting point.
//!
//! A coordinate polish pass follows the quadratic loop. The majorizer
//! weight for a coordinate sitting at zero is effectively infinite, so the
//! plain MM loop can never revive a coordinate it has locked at zero even
//! when that is suboptimal. The polish sweeps coordinates with the exact
//! scalar threshold rule, which both revives wrongly locked coordinates and
//! lands surviving ones on exact stationary values (zeros become exact
//! zeros). Polish steps are skipped for any coordinate whose effective pair
//! (lambda_n / ||h_n||^2, a_n) falls outside the convexity parameter set,
//! since the scalar rule is only the true minimizer inside it.
//!
//! Also here: the optimality certificate for convex instances, the noise
//! driven lambda selection rule, least-squares debiasing on a fixed
//! support, and iteratively reweighted l1/l2 solvers for the non-convex
//! lp comparator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::banded::{toeplitz_adjoint_matvec, toeplitz_matvec, SymBanded};
use crate::bound::{certify, MARGIN_TOL_REL};
use crate::error::{MscError, Result};
use crate::operators::{GramMatrix, LinearOperator};
use crate::penalty::{PenaltyKind, PenaltySpec};

/// Magnitudes above this count as support in reported results.
pub const SUPPORT_EPS: f64 = 1e-3;

/// Floor for |x_n| in the majorizer weight lambda * phi'(|x_n|) / |x_n|.
const WEIGHT_FLOOR: f64 = 1e-10;

/// Weights beyond this pin the coordinate at zero for the current step.
const WEIGHT_LOCK: f64 = 1e10;

/// Multiplier for a default lambda from the noise level: lambda_n =
/// 3 sigma ||h_n||, the three-sigma point of each coordinate of H^T w for
/// white noise w.
pub const LAMBDA_NOISE_FACTOR: f64 = 3.0;

/// A penalized least-squares instance.
///
/// Carries the observation, the operator, per-coordinate weights lambda_n
/// and penalty parameters a_n, and optionally the diagonal bound r that
/// certifies convexity (lambda_n * a_n <= r_n with H^T H - diag(r) positive
/// semidefinite). Instances built by the iterative reweighting driver carry
/// that provenance; hand-built instances can be checked on demand.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    op: LinearOperator,
    y: DVector<f64>,
    lambda: Vec<f64>,
    penalties: Vec<PenaltySpec>,
    certified_r: Option<Vec<f64>>,
}

impl ProblemSpec {
    /// Penalty kind restricted to the differentiable sparse penalties; the
    /// hard and lp kinds have dedicated solvers.
    pub fn new(
        op: LinearOperator,
        y: DVector<f64>,
        lambda: Vec<f64>,
        kind: PenaltyKind,
        a: Vec<f64>,
    ) -> Result<Self> {
        if !matches!(kind, PenaltyKind::Abs | PenaltyKind::Log | PenaltyKind::Atan) {
            return Err(MscError::Unsupported(format!(
                "penalized least-squares solver handles abs/log/atan, got {}",
                kind.as_str()
            )));
        }
        let n = op.ncols();
        if y.len() != op.nrows() {
            return Err(MscError::DimensionMismatch(format!(
                "observation length {} vs operator rows {}",
                y.len(),
                op.nrows()
            )));
        }
        if lambda.len() != n || a.len() != n {
            return Err(MscError::DimensionMismatch(format!(
                "lambda ({}) and a ({}) must both have the column count {}",
                lambda.len(),
                a.len(),
                n
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(MscError::InvalidInput("observation must be finite".into()));
        }
        if lambda.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(MscError::ParameterDomain(
                "penalty weights lambda must be positive and finite".into(),
            ));
        }
        let penalties: Result<Vec<PenaltySpec>> = a
            .iter()
            .map(|&an| PenaltySpec::with_kind(kind, an, 0.0))
            .collect();
        Ok(ProblemSpec { op, y, lambda, penalties: penalties?, certified_r: None })
    }

    /// Same penalty parameters on every coordinate.
    pub fn uniform(
        op: LinearOperator,
        y: DVector<f64>,
        lambda: f64,
        kind: PenaltyKind,
        a: f64,
    ) -> Result<Self> {
        let n = op.ncols();
        Self::new(op, y, vec![lambda; n], kind, vec![a; n])
    }

    /// Attach the diagonal bound r that certifies convexity. Each pair must
    /// satisfy lambda_n * a_n <= r_n (tiny slack for roundoff).
    pub fn with_certificate(mut self, r: Vec<f64>) -> Result<Self> {
        if r.len() != self.lambda.len() {
            return Err(MscError::DimensionMismatch(format!(
                "certificate length {} vs problem size {}",
                r.len(),
                self.lambda.len()
            )));
        }
        for (n, rn) in r.iter().enumerate() {
            if !rn.is_finite() {
                return Err(MscError::InvalidInput("certificate must be finite".into()));
            }
            let need = self.lambda[n] * self.penalties[n].a;
            if need > rn * (1.0 + 1e-9) + 1e-12 {
                return Err(MscError::ConvexityViolation(format!(
                    "lambda*a = {need:.6e} exceeds certified bound {rn:.6e} at coordinate {n}"
                )));
            }
        }
        self.certified_r = Some(r);
        Ok(self)
    }

    pub fn op(&self) -> &LinearOperator {
        &self.op
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn penalties(&self) -> &[PenaltySpec] {
        &self.penalties
    }

    pub fn size(&self) -> usize {
        self.lambda.len()
    }

    /// Total cost F(x).
    pub fn objective(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.size() {
            return Err(MscError::DimensionMismatch(format!(
                "x length {} vs problem size {}",
                x.len(),
                self.size()
            )));
        }
        let resid = &self.y - self.op.matvec(x)?;
        let mut f = 0.5 * resid.norm_squared();
        for n in 0..self.size() {
            f += self.lambda[n] * self.penalties[n].value(x[n]);
        }
        Ok(f)
    }

    /// Smallest eigenvalue of H^T H - diag(lambda_n a_n). Nonnegative (up
    /// to tolerance) means the total cost is convex. Requires forming the
    /// Gram matrix, so this is the expensive path; instances that carry a
    /// certificate skip it.
    pub fn convexity_margin(&self) -> Result<f64> {
        let gram = GramMatrix::from_operator(&self.op)?;
        let r: Vec<f64> = (0..self.size())
            .map(|n| self.lambda[n] * self.penalties[n].a)
            .collect();
        let (_, margin) = certify(&gram, &r, 0.0)?;
        Ok(margin)
    }

    fn is_l1(&self) -> bool {
        self.penalties.iter().all(|p| p.kind == PenaltyKind::Abs || p.a == 0.0)
    }
}

/// Knobs for the iterative solver.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Cap on majorization steps.
    pub max_iter: usize,
    /// Stop when ||x_{k+1} - x_k|| / max(||x_k||, tiny) falls below this.
    pub rel_tol: f64,
    /// Starting point; defaults to H^T y. Starting from zero stays at zero
    /// whenever zero is a stationary point.
    pub start: Option<DVector<f64>>,
    /// Skip the convexity certificate. Required to run instances that are
    /// deliberately outside the convex region.
    pub assume_convex: bool,
    /// Run exact coordinate threshold sweeps after the quadratic loop.
    pub polish: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iter: 2000,
            rel_tol: 1e-9,
            start: None,
            assume_convex: false,
            polish: true,
        }
    }
}

/// Solver output. `objective` is recomputed from `x` at the end, not
/// accumulated across iterations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest deviation from the stationarity conditions; see
    /// [`check_optimality`].
    pub optimality_max_violation: f64,
    /// Indices with |x_n| > 1e-3.
    pub support: Vec<usize>,
}

/// Indices where |x_n| exceeds eps.
pub fn support(x: &DVector<f64>, eps: f64) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > eps)
        .map(|(n, _)| n)
        .collect()
}

/// lambda_n = 3 sigma ||h_n||. A zero column gets lambda_n = 0 (nothing to
/// regularize against) with a warning, and such coordinates are rejected by
/// the solver unless removed.
pub fn select_lambda(op: &LinearOperator, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(MscError::ParameterDomain(format!(
            "noise level sigma must be positive and finite, got {sigma}"
        )));
    }
    let mut out = Vec::with_capacity(op.ncols());
    for (n, norm) in op.column_norms().iter().enumerate() {
        if *norm == 0.0 {
            log::warn!("column {n} has zero norm; lambda_{n} = 0 leaves it unregularized");
            out.push(0.0);
        } else {
            out.push(LAMBDA_NOISE_FACTOR * sigma * norm);
        }
    }
    Ok(out)
}

/// Quadratic-solve backend chosen once per solve.
enum QuadPath {
    /// Banded Woodbury path for recursive-filter operators H = A^{-1} B:
    /// (H^T H + D)^{-1} u = D^{-1} (u - B^T z) with
    /// z = (A A^T + B D^{-1} B^T)^{-1} B D^{-1} u, a narrow-band SPD solve.
    Arma { a: Vec<f64>, b: Vec<f64>, bw: usize },
    /// Cached Gram matrix; each step solves reduced normal equations on the
    /// unlocked coordinates.
    Dense { gram: DMatrix<f64> },
}

impl QuadPath {
    fn new(op: &LinearOperator) -> Result<Self> {
        match op {
            LinearOperator::Arma(sys) => {
                let a = sys.a().to_vec();
                let b = sys.b().to_vec();
                let bw = a.len().max(b.len()) - 1;
                Ok(QuadPath::Arma { a, b, bw })
            }
            LinearOperator::Dense(_) => {
                let gram = GramMatrix::from_operator(op)?.matrix().clone();
                Ok(QuadPath::Dense { gram })
            }
        }
    }

    /// Solve (H^T H + diag(1/dinv)) x = u, where dinv_n = 0 encodes an
    /// infinite weight that pins x_n at zero.
    fn solve(&self, u: &DVector<f64>, dinv: &[f64]) -> Result<DVector<f64>> {
        let n = u.len();
        match self {
            QuadPath::Arma { a, b, bw } => {
                let mut g1 = SymBanded::zeros(n, *bw);
                g1.add_weighted_toeplitz_outer(a, None);
                g1.add_weighted_toeplitz_outer(b, Some(dinv));
                let du: Vec<f64> = (0..n).map(|i| dinv[i] * u[i]).collect();
                let mut rhs = vec![0.0; n];
                toeplitz_matvec(b, &du, &mut rhs, 1.0);
                let z = g1.cholesky()?.solve(&rhs);
                let mut btz = vec![0.0; n];
                toeplitz_adjoint_matvec(b, &z, &mut btz, 1.0);
                Ok(DVector::from_fn(n, |i, _| dinv[i] * (u[i] - btz[i])))
            }
            QuadPath::Dense { gram } => {
                let unlocked: Vec<usize> =
                    (0..n).filter(|&i| dinv[i] > 0.0).collect();
                let mut x = DVector::zeros(n);
                let k = unlocked.len();
                if k == 0 {
                    return Ok(x);
                }
                let mut m = DMatrix::zeros(k, k);
                let mut rhs = DVector::zeros(k);
                for (p, &i) in unlocked.iter().enumerate() {
                    for (q, &j) in unlocked.iter().enumerate() {
                        m[(p, q)] = gram[(i, j)];
                    }
                    m[(p, p)] += 1.0 / dinv[i];
                    rhs[p] = u[i];
                }
                let chol = m.cholesky().ok_or_else(|| MscError::ConvergenceFailure {
                    message: "reduced normal equations lost positive definiteness".into(),
                    best: Vec::new(),
                })?;
                let xr = chol.solve(&rhs);
                for (p, &i) in unlocked.iter().enumerate() {
                    x[i] = xr[p];
                }
                Ok(x)
            }
        }
    }
}

/// Majorizer weights at the current iterate: w_n = lambda_n phi'(|x_n|) /
/// max(|x_n|, floor). Returns 1/w_n with locked coordinates encoded as 0.
fn majorizer_dinv(p: &ProblemSpec, x: &DVector<f64>) -> Result<Vec<f64>> {
    let mut dinv = Vec::with_capacity(p.size());
    for n in 0..p.size() {
        let t = x[n].abs();
        let slope = p.penalties[n].deriv(t, 1)?;
        let w = p.lambda[n] * slope / t.max(WEIGHT_FLOOR);
        dinv.push(if w > WEIGHT_LOCK { 0.0 } else { 1.0 / w });
    }
    Ok(dinv)
}

/// Exact scalar threshold sweeps on top of the quadratic loop. Maintains
/// the residual incrementally; returns true when a sweep changed nothing
/// beyond roundoff (a coordinatewise fixed point).
fn coordinate_polish(p: &ProblemSpec, x: &mut DVector<f64>) -> Result<bool> {
    let nn = p.size();
    let norms = p.op.column_norms();
    let mut resid = &p.y - p.op.matvec(x)?;
    for _ in 0..20 {
        let mut max_delta = 0.0_f64;
        for n in 0..nn {
            let cn = norms[n] * norms[n];
            if cn == 0.0 {
                continue;
            }
            let lam_eff = p.lambda[n] / cn;
            if !p.penalties[n].in_parameter_set(lam_eff) {
                // Outside the parameter set the scalar threshold rule is not
                // the coordinatewise minimizer; leave such coordinates to
                // the quadratic loop.
                continue;
            }
            let col = p.op.column(n)?;
            let z = x[n] + col.dot(&resid) / cn;
            let xn = p.penalties[n].prox(z, lam_eff)?;
            let delta = xn - x[n];
            if delta != 0.0 {
                resid.axpy(-delta, &col, 1.0);
                x[n] = xn;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta <= 1e-13 * (1.0 + x.amax()) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Stationarity check. With g = H^T (y - H x) / lambda (coordinatewise),
/// a minimizer of a convex instance satisfies g_n = phi'(x_n; a_n) on the
/// support and |g_n| <= phi'(0+) = 1 off it. Returns the largest violation
/// and the scatter pairs (a_n x_n, g_n); with u = a x the support points of
/// an exact solution fall on the a = 1 curve of the penalty derivative.
pub fn check_optimality(p: &ProblemSpec, x: &DVector<f64>) -> Result<(f64, Vec<(f64, f64)>)> {
    if x.len() != p.size() {
        return Err(MscError::DimensionMismatch(format!(
            "x length {} vs problem size {}",
            x.len(),
            p.size()
        )));
    }
    let resid = &p.y - p.op.matvec(x)?;
    let grad = p.op.adjoint_matvec(&resid)?;
    let zero_tol = 1e-8 * x.amax().max(1.0);
    let mut worst = 0.0_f64;
    let mut scatter = Vec::with_capacity(p.size());
    for n in 0..p.size() {
        let gn = grad[n] / p.lambda[n];
        let viol = if x[n].abs() > zero_tol {
            (gn - p.penalties[n].deriv(x[n], 1)?).abs()
        } else {
            (gn.abs() - 1.0).max(0.0)
        };
        worst = worst.max(viol);
        scatter.push((p.penalties[n].a * x[n], gn));
    }
    Ok((worst, scatter))
}

/// Minimize F by majorization-minimization plus coordinate polish.
///
/// Unless `assume_convex` is set or the instance carries a certificate,
/// non-l1 instances are certified up front and rejected when the convexity
/// margin is negative beyond tolerance. The objective trace of the returned
/// pair is one entry per quadratic step, nonincreasing by the majorizer
/// property.
pub fn solve_penalized_ls_traced(
    p: &ProblemSpec,
    opts: &SolveOptions,
) -> Result<(SolveReport, Vec<f64>)> {
    if opts.max_iter == 0 {
        return Err(MscError::ParameterDomain("max_iter must be >= 1".into()));
    }
    if !(opts.rel_tol > 0.0 && opts.rel_tol.is_finite()) {
        return Err(MscError::ParameterDomain(format!(
            "rel_tol must be positive and finite, got {}",
            opts.rel_tol
        )));
    }
    if !opts.assume_convex && p.certified_r.is_none() && !p.is_l1() {
        let margin = p.convexity_margin()?;
        let scale = GramMatrix::from_operator(&p.op)?.spectral_norm().max(1.0);
        if margin < -MARGIN_TOL_REL * scale {
            return Err(MscError::ConvexityViolation(format!(
                "instance is not convex: margin {margin:.3e}; pass a certificate \
                 or set assume_convex to run anyway"
            )));
        }
    }

    let u = p.op.adjoint_matvec(&p.y)?;
    let mut x = match &opts.start {
        Some(x0) => {
            if x0.len() != p.size() {
                return Err(MscError::DimensionMismatch(format!(
                    "start length {} vs problem size {}",
                    x0.len(),
                    p.size()
                )));
            }
            x0.clone()
        }
        None => u.clone(),
    };
    let path = QuadPath::new(&p.op)?;
    let zero_scale = 1e-13 * (1.0 + u.amax());

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut prev_f = f64::INFINITY;
    let mut rises = 0;
    for _ in 0..opts.max_iter {
        let dinv = majorizer_dinv(p, &x)?;
        let xn = path.solve(&u, &dinv)?;
        iterations += 1;
        let f = p.objective(&xn)?;
        trace.push(f);
        // The majorizer guarantees descent; persistent rises mean the
        // quadratic model no longer matches the objective (a sign the
        // claimed convexity certificate or input data is inconsistent).
        if f > prev_f + 1e-9 * (1.0 + prev_f.abs()) {
            rises += 1;
            if rises >= 3 {
                return Err(MscError::ConvergenceFailure {
                    message: format!(
                        "objective rose at step {iterations} ({prev_f:.6e} -> {f:.6e})"
                    ),
                    best: x.iter().copied().collect(),
                });
            }
        } else {
            rises = 0;
        }
        prev_f = f;
        let rel = (&xn - &x).norm() / x.norm().max(1e-12);
        x = xn;
        if rel < opts.rel_tol {
            converged = true;
            break;
        }
        if x.amax() < zero_scale {
            // Everything is collapsing toward zero; the relative-change
            // rule never fires on a geometric decay to the origin.
            converged = true;
            break;
        }
    }

    if opts.polish {
        let fixed_point = coordinate_polish(p, &mut x)?;
        converged = converged || fixed_point;
    }

    let (viol, _) = check_optimality(p, &x)?;
    let objective = p.objective(&x)?;
    let report = SolveReport {
        support: support(&x, SUPPORT_EPS),
        x: x.iter().copied().collect(),
        objective,
        iterations,
        converged,
        optimality_max_violation: viol,
    };
    Ok((report, trace))
}

/// See [`solve_penalized_ls_traced`]; this drops the objective trace.
pub fn solve_penalized_ls(p: &ProblemSpec, opts: &SolveOptions) -> Result<SolveReport> {
    solve_penalized_ls_traced(p, opts).map(|(r, _)| r)
}

/// Weighted l1: minimize 0.5 ||y - H x||^2 + sum_n w_n |x_n|. Weights must
/// be strictly positive.
pub fn solve_weighted_l1(
    op: &LinearOperator,
    y: &DVector<f64>,
    weights: &[f64],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(MscError::ParameterDomain(
            "l1 weights must be positive and finite".into(),
        ));
    }
    let p = ProblemSpec::new(
        op.clone(),
        y.clone(),
        weights.to_vec(),
        PenaltyKind::Abs,
        vec![0.0; op.ncols()],
    )?;
    solve_penalized_ls(&p, opts)
}

/// Unpenalized least-squares refit on a fixed support; zeros elsewhere.
/// Rank-deficient subproblems fall back to the minimum-norm solution with a
/// warning rather than failing.
pub fn debias(op: &LinearOperator, y: &DVector<f64>, supp: &[usize]) -> Result<DVector<f64>> {
    let n = op.ncols();
    let m = op.nrows();
    if y.len() != m {
        return Err(MscError::DimensionMismatch(format!(
            "observation length {} vs operator rows {m}",
            y.len()
        )));
    }
    if supp.is_empty() {
        return Ok(DVector::zeros(n));
    }
    if supp.len() > m {
        return Err(MscError::InvalidInput(format!(
            "support size {} exceeds row count {m}; refit is underdetermined",
            supp.len()
        )));
    }
    let sub = op.subcolumns(supp)?.to_dense()?;
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12;
    let rank = svd.singular_values.iter().filter(|s| **s > eps).count();
    if rank < supp.len() {
        log::warn!(
            "debias: support columns are rank deficient ({rank}/{}); using the \
             minimum-norm refit",
            supp.len()
        );
    }
    let xs = svd
        .solve(y, eps)
        .map_err(|e| MscError::InvalidInput(format!("least-squares refit failed: {e}")))?;
    let mut x = DVector::zeros(n);
    for (k, &j) in supp.iter().enumerate() {
        x[j] = xs[k];
    }
    Ok(x)
}

/// Smoothing offset inside the reweighting rules, (|x| + eps)^(p-1).
const IRL_EPS: f64 = 1e-8;
const IRL_MAX_OUTER: usize = 50;
const IRL_REL_TOL: f64 = 1e-8;

/// Shared scaffolding for the two lp comparators: ridge start, outer
/// reweighting loop, and a report evaluated on the true lp objective.
fn irl_common<S>(
    op: &LinearOperator,
    y: &DVector<f64>,
    lambda: f64,
    pexp: f64,
    mut step: S,
) -> Result<SolveReport>
where
    S: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(MscError::ParameterDomain(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if y.len() != op.nrows() {
        return Err(MscError::DimensionMismatch(format!(
            "observation length {} vs operator rows {}",
            y.len(),
            op.nrows()
        )));
    }
    let lp = PenaltySpec::lp(pexp)?;

    // Ridge start: a zero coordinate has an infinite reweighted penalty, so
    // the loops below can never grow it. Starting from the lightly
    // regularized least-squares solution leaves every coordinate alive.
    let u = op.adjoint_matvec(y)?;
    let cmax = op
        .column_norms()
        .iter()
        .fold(0.0_f64, |acc, c| acc.max(c * c));
    let delta = 1e-6 * cmax.max(1e-12);
    let path = QuadPath::new(op)?;
    let mut x = path.solve(&u, &vec![1.0 / delta; op.ncols()])?;

    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..IRL_MAX_OUTER {
        let xn = step(&x)?;
        iterations += 1;
        let rel = (&xn - &x).norm() / x.norm().max(1e-12);
        x = xn;
        if rel < IRL_REL_TOL {
            converged = true;
            break;
        }
    }

    // Stationarity of the smoothed surrogate: on the support the scaled
    // gradient must match p (|x|+eps)^(p-1); off it the lp slope is
    // unbounded, so zero coordinates are always stationary.
    let resid = y - op.matvec(&x)?;
    let grad = op.adjoint_matvec(&resid)?;
    let zero_tol = 1e-8 * x.amax().max(1.0);
    let mut viol = 0.0_f64;
    for n in 0..x.len() {
        if x[n].abs() > zero_tol {
            let want = pexp * x[n].signum() * (x[n].abs() + IRL_EPS).powf(pexp - 1.0);
            viol = viol.max((grad[n] / lambda - want).abs());
        }
    }

    let mut objective = 0.5 * resid.norm_squared();
    for v in x.iter() {
        objective += lambda * lp.value(*v);
    }
    Ok(SolveReport {
        support: support(&x, SUPPORT_EPS),
        x: x.iter().copied().collect(),
        objective,
        iterations,
        converged,
        optimality_max_violation: viol,
    })
}

/// lp comparator via iterative reweighting with an l1 inner problem:
/// the concave penalty (|x|+eps)^p is linearized at the current iterate,
/// giving inner weights w_n = lambda p (|x_n|+eps)^(p-1). The factor p
/// makes each inner cost a true tangent majorizer of the smoothed lp cost,
/// so the outer loop descends. Inner solves reuse [`solve_weighted_l1`]
/// warm-started from the previous iterate.
pub fn solve_lp_irl1(
    op: &LinearOperator,
    y: &DVector<f64>,
    lambda: f64,
    pexp: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let _ = PenaltySpec::lp(pexp)?;
    irl_common(op, y, lambda, pexp, |x| {
        let weights: Vec<f64> = x
            .iter()
            .map(|v| lambda * pexp * (v.abs() + IRL_EPS).powf(pexp - 1.0))
            .collect();
        let inner = SolveOptions {
            start: Some(x.clone()),
            assume_convex: false,
            ..opts.clone()
        };
        let rep = solve_weighted_l1(op, y, &weights, &inner)?;
        Ok(DVector::from_vec(rep.x))
    })
}

/// lp comparator via iterative reweighting with a quadratic inner problem:
/// the smoothed penalty is majorized at the current iterate by the
/// quadratic with weight d_n = lambda p (|x_n|+eps)^(p-1) / |x_n|, so each
/// outer step is one linear solve (the classic focal-underdetermined style
/// recursion). Coordinates whose weight overflows are pinned at zero.
pub fn solve_lp_irl2(
    op: &LinearOperator,
    y: &DVector<f64>,
    lambda: f64,
    pexp: f64,
    _opts: &SolveOptions,
) -> Result<SolveReport> {
    let _ = PenaltySpec::lp(pexp)?;
    let path = QuadPath::new(op)?;
    let u = op.adjoint_matvec(y)?;
    irl_common(op, y, lambda, pexp, |x| {
        let dinv: Vec<f64> = x
            .iter()
            .map(|v| {
                let w = lambda * pexp * (v.abs() + IRL_EPS).powf(pexp - 1.0)
                    / v.abs().max(WEIGHT_FLOOR);
                if w > WEIGHT_LOCK {
                    0.0
                } else {
                    1.0 / w
                }
            })
            .collect();
        path.solve(&u, &dinv)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn rng(seed: u64) -> rand_chacha::ChaCha20Rng {
        rand_chacha::ChaCha20Rng::seed_from_u64(seed)
    }

    fn random_dense(rng: &mut impl Rng, m: usize, n: usize) -> LinearOperator {
        LinearOperator::dense(DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn identity_solve_matches_scalar_threshold() {
        let mut rng = rng(0x501e_0001);
        let n = 24;
        let op = LinearOperator::identity(n);
        for (kind, a) in [
            (PenaltyKind::Abs, 0.0),
            (PenaltyKind::Log, 0.3),
            (PenaltyKind::Atan, 0.55),
        ] {
            let y = DVector::from_fn(n, |_, _| rng.gen_range(-6.0..6.0));
            let lambda = 1.2;
            let p = ProblemSpec::uniform(op.clone(), y.clone(), lambda, kind, a).unwrap();
            let rep = solve_penalized_ls(&p, &SolveOptions::default()).unwrap();
            let spec = PenaltySpec::with_kind(kind, a, 0.0).unwrap();
            for i in 0..n {
                let want = spec.prox(y[i], lambda).unwrap();
                assert!(
                    (rep.x[i] - want).abs() < 1e-6,
                    "{kind:?} coord {i}: got {} want {want}",
                    rep.x[i]
                );
            }
            assert!(rep.converged);
            assert!(rep.optimality_max_violation < 1e-6);
        }
    }

    #[test]
    fn boundary_instance_collapses_to_zero_from_any_start() {
        // Two decoupled coordinates at the parameter-set boundary
        // a = 1/lambda: the cost is convex (not strictly) and the dead zone
        // covers the data, so the unique minimizer is the origin.
        let op = LinearOperator::identity(2);
        let y = DVector::from_vec(vec![9.5, 9.5]);
        let p =
            ProblemSpec::uniform(op, y.clone(), 10.0, PenaltyKind::Log, 0.1).unwrap();
        for start in [None, Some(DVector::zeros(2))] {
            let opts = SolveOptions { start, ..Default::default() };
            let rep = solve_penalized_ls(&p, &opts).unwrap();
            assert_eq!(rep.x, vec![0.0, 0.0]);
            assert!(rep.converged);
            assert!(rep.support.is_empty());
            assert_abs_diff_eq!(rep.objective, 0.5 * y.norm_squared(), epsilon = 1e-12);
        }
    }

    #[test]
    fn nonconvex_instance_has_start_dependent_stationary_points() {
        // Same data with a = 0.2 sits outside the convex region
        // (lambda a = 2 > 1). Zero and the interior stationary point
        // x = (4.5 + sqrt(10.25)) / 2 per coordinate both satisfy the
        // stationarity conditions, and the solver must land on one or the
        // other depending on the start.
        let op = LinearOperator::identity(2);
        let y = DVector::from_vec(vec![9.5, 9.5]);
        let p = ProblemSpec::uniform(op, y, 10.0, PenaltyKind::Log, 0.2).unwrap();
        let base = SolveOptions { assume_convex: true, ..Default::default() };

        let from_zero = solve_penalized_ls(
            &p,
            &SolveOptions { start: Some(DVector::zeros(2)), ..base.clone() },
        )
        .unwrap();
        assert_eq!(from_zero.x, vec![0.0, 0.0]);
        assert!(from_zero.optimality_max_violation < 1e-9);

        let from_data = solve_penalized_ls(&p, &base).unwrap();
        let root = (4.5 + 10.25_f64.sqrt()) / 2.0;
        for v in &from_data.x {
            assert_abs_diff_eq!(*v, root, epsilon = 1e-6);
        }
        assert!(from_data.optimality_max_violation < 1e-6);
        assert!(
            (from_zero.objective - from_data.objective).abs() > 1e-3,
            "distinct stationary points must have distinct objectives"
        );
    }

    #[test]
    fn rejects_uncertified_nonconvex_instance() {
        let op = LinearOperator::identity(2);
        let y = DVector::from_vec(vec![9.5, 9.5]);
        let p = ProblemSpec::uniform(op, y, 10.0, PenaltyKind::Log, 0.2).unwrap();
        let err = solve_penalized_ls(&p, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, MscError::ConvexityViolation(_)), "{err}");
    }

    #[test]
    fn certificate_is_validated_against_lambda_a() {
        let op = LinearOperator::identity(3);
        let y = DVector::zeros(3);
        let p = ProblemSpec::uniform(op, y, 2.0, PenaltyKind::Atan, 0.5).unwrap();
        assert!(p.clone().with_certificate(vec![1.0, 1.0, 1.0]).is_ok());
        let err = p.with_certificate(vec![1.0, 0.5, 1.0]).unwrap_err();
        assert!(matches!(err, MscError::ConvexityViolation(_)), "{err}");
    }

    #[test]
    fn descent_is_monotone_on_a_random_convex_instance() {
        let mut rng = rng(0x501e_0002);
        let op = random_dense(&mut rng, 40, 25);
        let y = DVector::from_fn(40, |_, _| rng.gen_range(-2.0..2.0));
        // a_n = 0.9 r_n / lambda_n keeps the instance strictly convex.
        let gram = GramMatrix::from_operator(&op).unwrap();
        let r = crate::bound::diagonal_bound_simple(&gram).unwrap().r;
        let lambda = vec![1.5; 25];
        let a: Vec<f64> = r.iter().map(|rn| 0.9 * rn / 1.5).collect();
        let p = ProblemSpec::new(op, y, lambda, PenaltyKind::Atan, a)
            .unwrap()
            .with_certificate(r)
            .unwrap();
        let (rep, trace) = solve_penalized_ls_traced(&p, &SolveOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.optimality_max_violation < 1e-7);
        for w in trace.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()),
                "objective rose: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn zero_observation_gives_zero_solution() {
        let mut rng = rng(0x501e_0003);
        let op = random_dense(&mut rng, 12, 8);
        let y = DVector::zeros(12);
        let p = ProblemSpec::uniform(op, y, 0.7, PenaltyKind::Log, 0.1).unwrap();
        let rep = solve_penalized_ls(&p, &SolveOptions::default()).unwrap();
        assert!(rep.x.iter().all(|v| *v == 0.0));
        assert!(rep.converged);
        assert_eq!(rep.objective, 0.0);
    }

    #[test]
    fn weighted_l1_rejects_nonpositive_weights() {
        let op = LinearOperator::identity(3);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        for bad in [0.0, -1.0, f64::NAN] {
            let w = vec![1.0, bad, 1.0];
            assert!(solve_weighted_l1(&op, &y, &w, &SolveOptions::default()).is_err());
        }
    }

    #[test]
    fn select_lambda_follows_column_norms() {
        let m = DMatrix::from_column_slice(3, 3, &[
            2.0, 0.0, 0.0, // column 0, norm 2
            0.0, 0.0, 0.0, // column 1, zero
            0.0, 3.0, 4.0, // column 2, norm 5
        ]);
        let op = LinearOperator::dense(m);
        let lam = select_lambda(&op, 0.5).unwrap();
        assert_abs_diff_eq!(lam[0], 3.0, epsilon = 1e-12);
        assert_eq!(lam[1], 0.0);
        assert_abs_diff_eq!(lam[2], 7.5, epsilon = 1e-12);
        assert!(select_lambda(&op, 0.0).is_err());
        assert!(select_lambda(&op, f64::NAN).is_err());
    }

    #[test]
    fn debias_recovers_exact_coefficients_on_clean_data() {
        let mut rng = rng(0x501e_0004);
        let op = random_dense(&mut rng, 20, 10);
        let mut x_true = DVector::zeros(10);
        x_true[2] = 1.5;
        x_true[7] = -0.75;
        let y = op.matvec(&x_true).unwrap();
        let x = debias(&op, &y, &[2, 7]).unwrap();
        for i in 0..10 {
            assert_abs_diff_eq!(x[i], x_true[i], epsilon = 1e-10);
        }
        assert!(debias(&op, &y, &[]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn debias_handles_duplicate_columns_via_minimum_norm() {
        let mut h = DMatrix::zeros(4, 3);
        for i in 0..4 {
            h[(i, 0)] = 1.0;
            h[(i, 1)] = 1.0; // duplicate of column 0
            h[(i, 2)] = i as f64;
        }
        let op = LinearOperator::dense(h);
        let y = DVector::from_vec(vec![2.0, 3.0, 4.0, 5.0]);
        let x = debias(&op, &y, &[0, 1, 2]).unwrap();
        // Minimum-norm splits the shared coefficient evenly.
        assert_abs_diff_eq!(x[0], x[1], epsilon = 1e-10);
        assert_abs_diff_eq!(x[0] + x[1], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(x[2], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn irl_solvers_keep_large_coordinates_and_kill_small_ones() {
        let op = LinearOperator::identity(6);
        let y = DVector::from_vec(vec![5.0, -4.0, 0.05, -0.02, 3.0, 0.01]);
        for solve in [solve_lp_irl1, solve_lp_irl2] {
            let rep = solve(&op, &y, 1.0, 0.7, &SolveOptions::default()).unwrap();
            assert!(rep.converged);
            assert_eq!(rep.support, vec![0, 1, 4], "support {:?}", rep.support);
            // Large coordinates shrink toward the data but only slightly.
            assert!((rep.x[0] - 5.0).abs() < 0.5);
            assert!((rep.x[1] + 4.0).abs() < 0.5);
            // The refit beats both trivial candidates on the lp objective.
            let zero_obj = 0.5 * y.norm_squared();
            let lp = PenaltySpec::lp(0.7).unwrap();
            let data_obj: f64 = y.iter().map(|v| lp.value(*v)).sum();
            assert!(rep.objective < zero_obj);
            assert!(rep.objective < data_obj);
        }
    }

    #[test]
    fn irl_rejects_bad_exponent_and_lambda() {
        let op = LinearOperator::identity(2);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        let opts = SolveOptions::default();
        assert!(solve_lp_irl1(&op, &y, 1.0, 0.0, &opts).is_err());
        assert!(solve_lp_irl1(&op, &y, 1.0, 1.0, &opts).is_err());
        assert!(solve_lp_irl2(&op, &y, -1.0, 0.5, &opts).is_err());
    }

    #[test]
    fn support_thresholds_on_magnitude() {
        let x = DVector::from_vec(vec![0.0, 2e-3, -5.0, 1e-4, -2e-3]);
        assert_eq!(support(&x, 1e-3), vec![1, 2, 4]);
        assert_eq!(support(&x, 10.0), Vec::<usize>::new());
    }
}
