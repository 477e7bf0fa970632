//! Iterative maximally-sparse-convex driver.
//!
//! Each round solves a convex penalized least-squares problem whose
//! penalties are as non-convex as the operator allows. Starting from the
//! plain l1 solution, the loop restricts the problem to the current
//! support, computes a diagonal bound r on the restricted Gram matrix,
//! assigns the penalty parameters a_n = beta * r_n / lambda_n (the largest
//! values keeping the restricted cost convex, scaled by beta), and solves
//! the restricted problem. Removing columns can only loosen the bound, so
//! the penalties become more aggressive as the support shrinks; the loop
//! stops as soon as the support stops shrinking.
//!
//! Every inner problem carries its diagonal bound as a convexity
//! certificate, so each solve is a convex program regardless of how
//! non-convex the penalties would be on the full operator.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bound::{diagonal_bound, BoundMethod};
use crate::error::{MscError, Result};
use crate::operators::{GramMatrix, LinearOperator};
use crate::penalty::PenaltyKind;
use crate::solvers::{solve_penalized_ls, ProblemSpec, SolveOptions};

pub use crate::solvers::support;

/// Largest stationarity violation tolerated from an inner solve before the
/// driver aborts; violations are in the scaled units of
/// [`crate::solvers::check_optimality`].
pub const INNER_VIOLATION_TOL: f64 = 1e-5;

/// Outer-loop configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ImscConfig {
    /// Fraction of the maximal non-convexity to use, in [0, 1]. Zero keeps
    /// every round a plain l1 problem; one is the recommended default.
    pub beta: f64,
    /// Sparse penalty family, log or atan.
    pub penalty: PenaltyKind,
    /// How the per-round diagonal bound is computed.
    pub bound_method: BoundMethod,
    /// Relative duality-gap tolerance passed to the bound optimizer.
    pub bound_tol: f64,
    /// Cap on outer rounds, counting the l1 round.
    pub max_outer: usize,
    /// Magnitudes above this count as support between rounds.
    pub support_eps: f64,
}

impl Default for ImscConfig {
    fn default() -> Self {
        ImscConfig {
            beta: 1.0,
            penalty: PenaltyKind::Atan,
            bound_method: BoundMethod::Sdp,
            bound_tol: 1e-6,
            max_outer: 10,
            support_eps: 1e-3,
        }
    }
}

impl ImscConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) || !self.beta.is_finite() {
            return Err(MscError::ParameterDomain(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if !matches!(self.penalty, PenaltyKind::Log | PenaltyKind::Atan) {
            return Err(MscError::Unsupported(format!(
                "iterative driver uses the log or atan penalty, got {}",
                self.penalty.as_str()
            )));
        }
        if !(self.bound_tol > 0.0 && self.bound_tol < 1.0) {
            return Err(MscError::ParameterDomain(format!(
                "bound_tol must lie in (0, 1), got {}",
                self.bound_tol
            )));
        }
        if self.max_outer == 0 {
            return Err(MscError::ParameterDomain("max_outer must be >= 1".into()));
        }
        if !(self.support_eps >= 0.0 && self.support_eps.is_finite()) {
            return Err(MscError::ParameterDomain(format!(
                "support_eps must be nonnegative, got {}",
                self.support_eps
            )));
        }
        Ok(())
    }
}

/// One outer round. The first round is the l1 stage: `active` covers every
/// coordinate and `r`/`a` are empty with a zero margin, since no bound is
/// computed there.
#[derive(Debug, Clone, Serialize)]
pub struct ImscIteration {
    /// Coordinates handed to the solver this round (original numbering).
    pub active: Vec<usize>,
    /// Diagonal bound on the restricted Gram matrix, aligned with `active`.
    pub r: Vec<f64>,
    /// Penalty parameters used, aligned with `active`.
    pub a: Vec<f64>,
    /// Certified smallest eigenvalue of G_active - diag(r).
    pub bound_margin: f64,
    /// Spectral norm of the restricted Gram matrix; the margin is
    /// acceptable down to -1e-7 times this.
    pub gram_norm: f64,
    /// Support of the round's solution (original numbering).
    pub support: Vec<usize>,
    pub k: usize,
    pub objective: f64,
    pub solver_iterations: usize,
    pub optimality_max_violation: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ImscTrace {
    pub iterations: Vec<ImscIteration>,
}

impl ImscTrace {
    /// Support sizes per round, in order.
    pub fn support_sizes(&self) -> Vec<usize> {
        self.iterations.iter().map(|it| it.k).collect()
    }
}

fn record_round(
    trace: &mut ImscTrace,
    active: Vec<usize>,
    r: Vec<f64>,
    a: Vec<f64>,
    bound_margin: f64,
    gram_norm: f64,
    eps: f64,
    x: &DVector<f64>,
    objective: f64,
    solver_iterations: usize,
    violation: f64,
) -> Result<()> {
    if violation > INNER_VIOLATION_TOL {
        return Err(MscError::ConvergenceFailure {
            message: format!(
                "inner solve missed stationarity: violation {violation:.3e} after \
                 {solver_iterations} iterations"
            ),
            best: x.iter().copied().collect(),
        });
    }
    let supp = support(x, eps);
    trace.iterations.push(ImscIteration {
        active,
        r,
        a,
        bound_margin,
        gram_norm,
        k: supp.len(),
        support: supp,
        objective,
        solver_iterations,
        optimality_max_violation: violation,
    });
    Ok(())
}

/// Run the outer loop. Returns the final iterate and the per-round trace.
///
/// Rounds after the first operate on the previous round's support, so
/// supports are nested and sizes nonincreasing by construction; the loop
/// terminates when the size stops strictly decreasing, when the support
/// empties, or at `max_outer`.
pub fn run_imsc(
    op: &LinearOperator,
    y: &DVector<f64>,
    lambda: &[f64],
    cfg: &ImscConfig,
) -> Result<(DVector<f64>, ImscTrace)> {
    cfg.validate()?;
    let n = op.ncols();
    if y.len() != op.nrows() {
        return Err(MscError::DimensionMismatch(format!(
            "observation length {} vs operator rows {}",
            y.len(),
            op.nrows()
        )));
    }
    if lambda.len() != n {
        return Err(MscError::DimensionMismatch(format!(
            "lambda length {} vs operator columns {n}",
            lambda.len()
        )));
    }

    let mut trace = ImscTrace::default();

    // Round 1: the l1 problem on the full operator.
    let p1 = ProblemSpec::new(
        op.clone(),
        y.clone(),
        lambda.to_vec(),
        PenaltyKind::Abs,
        vec![0.0; n],
    )?;
    // Same enlarged budget as the bounded rounds: every round's solution
    // must pass the stationarity gate below, and small penalty weights
    // make the l1 round slow to converge.
    let opts1 = SolveOptions { max_iter: 30_000, ..Default::default() };
    let rep = solve_penalized_ls(&p1, &opts1)?;
    let mut x = DVector::from_vec(rep.x);
    record_round(
        &mut trace,
        (0..n).collect(),
        Vec::new(),
        Vec::new(),
        0.0,
        0.0,
        cfg.support_eps,
        &x,
        rep.objective,
        rep.iterations,
        rep.optimality_max_violation,
    )?;

    for _ in 1..cfg.max_outer {
        let prev = trace.iterations.last().expect("round 1 recorded");
        let prev_k = prev.k;
        let active = prev.support.clone();
        if prev_k == 0 {
            break;
        }

        let sub_op = op.subcolumns(&active)?;
        let gram = GramMatrix::from_operator(&sub_op)?;
        let bound = diagonal_bound(&gram, cfg.bound_method, cfg.bound_tol)?;
        let lam: Vec<f64> = active.iter().map(|&j| lambda[j]).collect();
        let a: Vec<f64> = bound
            .r
            .iter()
            .zip(&lam)
            .map(|(rn, ln)| cfg.beta * rn.max(0.0) / ln)
            .collect();

        let warm = DVector::from_fn(active.len(), |i, _| x[active[i]]);
        let p = ProblemSpec::new(sub_op, y.clone(), lam, cfg.penalty, a.clone())?
            .with_certificate(bound.r.clone())?;
        // Restricted problems are small but can sit near the convexity
        // boundary, where the majorization rate degrades; iterations are
        // cheap here, so spend more of them than the full-size default.
        let opts = SolveOptions {
            max_iter: 30_000,
            start: Some(warm),
            ..Default::default()
        };
        let rep = solve_penalized_ls(&p, &opts)?;

        let mut x_full = DVector::zeros(n);
        for (i, &j) in active.iter().enumerate() {
            x_full[j] = rep.x[i];
        }
        x = x_full;
        record_round(
            &mut trace,
            active,
            bound.r,
            a,
            bound.margin,
            gram.spectral_norm(),
            cfg.support_eps,
            &x,
            rep.objective,
            rep.iterations,
            rep.optimality_max_violation,
        )?;

        let k = trace.iterations.last().expect("just recorded").k;
        if k >= prev_k {
            break;
        }
    }

    Ok((x, trace))
}
