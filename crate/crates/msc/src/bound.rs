//! Diagonal convexity bounds.
//!
//! The scalar penalties in this crate satisfy phi''(x; a) >= -a, so the
//! penalized least-squares cost 0.5||y - Hx||^2 + sum_n lambda_n phi(x_n; a_n)
//! stays convex whenever G - diag(r) is positive semidefinite, where G = H^T H
//! and r_n = lambda_n a_n. This module computes admissible weight vectors r:
//!
//! * [`diagonal_bound_simple`] takes r_n = alpha_min, the smallest eigenvalue
//!   of G. Always feasible, but blind to coordinate structure.
//! * [`diagonal_bound_sdp`] maximizes sum(r) subject to r_n >= alpha_min and
//!   G - diag(r) >= 0, a semidefinite program solved here with a log-barrier
//!   interior-point method. Its total never falls below K * alpha_min.
//!
//! The lower bound r_n >= alpha_min keeps every coordinate at least as
//! non-convex as the uniform choice, so the maximization cannot zero out one
//! coordinate to inflate another.
//!
//! The feasible set has no strict interior: if r_n > alpha_min for every n,
//! then v^T (G - diag(r)) v < 0 for a unit eigenvector v of alpha_min. (When
//! that eigenvector has no zero entries the set even collapses to the single
//! point alpha_min * 1; slack only exists on coordinates every minimal
//! eigenvector vanishes on.) The barrier therefore runs with the lower bounds
//! relaxed by eps0 = 1e-10 ||G|| and the result is clipped back to
//! r_n >= alpha_min afterwards. Clipping can push the smallest eigenvalue of
//! G - diag(r) slightly negative, by no more than eps0; the reported margin
//! stays far above -1e-7 ||G||, the tolerance callers in this crate treat as
//! certified convex. eps0 trades off two errors: it must dominate eigensolver
//! roundoff (~1e-15 ||G||) so the relaxed interior is reachable, and every
//! extra order of magnitude inflates the objective on nearly-degenerate
//! instances, where the feasible set is a needle of width ~eps0 / v_i^2.

use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{MscError, Result};
use crate::operators::{min_eig_sym, GramMatrix};

/// Hard cap on the SDP size; one Newton step costs O(K^3) dense flops.
pub const SDP_SIZE_LIMIT: usize = 2000;

/// Margin tolerance relative to ||G||: bounds whose certified margin falls
/// below -MARGIN_TOL_REL * ||G|| are rejected.
pub const MARGIN_TOL_REL: f64 = 1e-7;

/// Which procedure produced a [`DiagonalBound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    Simple,
    Sdp,
}

impl BoundMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundMethod::Simple => "simple",
            BoundMethod::Sdp => "sdp",
        }
    }
}

impl std::fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundMethod {
    type Err = MscError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(BoundMethod::Simple),
            "sdp" => Ok(BoundMethod::Sdp),
            other => Err(MscError::Parse(format!(
                "unknown bound method {other:?}, expected \"simple\" or \"sdp\""
            ))),
        }
    }
}

/// Diagonal weights r with G - diag(r) positive semidefinite up to the
/// certified margin.
#[derive(Debug, Clone, Serialize)]
pub struct DiagonalBound {
    /// Per-coordinate weights, each at least `alpha_min`.
    pub r: Vec<f64>,
    /// Smallest eigenvalue of G.
    pub alpha_min: f64,
    /// Smallest eigenvalue of G - diag(r); at least -1e-7 ||G|| on success.
    pub margin: f64,
    pub method: BoundMethod,
    /// Newton steps spent (0 for the simple bound and for diagonal G).
    pub iterations: usize,
}

impl DiagonalBound {
    /// Total non-convexity budget 1^T r.
    pub fn sum(&self) -> f64 {
        self.r.iter().sum()
    }
}

/// Feasibility check for a candidate bound: margin is the smallest eigenvalue
/// of G - diag(r), and the bound is feasible when margin >= -tol.
pub fn certify(gram: &GramMatrix, r: &[f64], tol: f64) -> Result<(bool, f64)> {
    if !(tol >= 0.0) {
        return Err(MscError::ParameterDomain(format!(
            "certify tolerance must be nonnegative, got {tol}"
        )));
    }
    let margin = margin_of(gram, r)?;
    Ok((margin >= -tol, margin))
}

/// Smallest eigenvalue of G - diag(r).
fn margin_of(gram: &GramMatrix, r: &[f64]) -> Result<f64> {
    let k = gram.size();
    if r.len() != k {
        return Err(MscError::DimensionMismatch(format!(
            "bound has {} entries for a {k}x{k} Gram matrix",
            r.len()
        )));
    }
    if !r.iter().all(|v| v.is_finite()) {
        return Err(MscError::InvalidInput(
            "bound entries must be finite".into(),
        ));
    }
    let mut s = gram.matrix().clone();
    for i in 0..k {
        s[(i, i)] -= r[i];
    }
    min_eig_sym(&s)
}

/// Uniform bound r_n = alpha_min. Its margin is zero up to eigensolver
/// roundoff.
pub fn diagonal_bound_simple(gram: &GramMatrix) -> Result<DiagonalBound> {
    let alpha = gram.min_eigenvalue()?;
    let r = vec![alpha; gram.size()];
    let margin = margin_of(gram, &r)?;
    Ok(DiagonalBound {
        r,
        alpha_min: alpha,
        margin,
        method: BoundMethod::Simple,
        iterations: 0,
    })
}

/// Dispatch on [`BoundMethod`]. `tol` only affects the SDP path.
pub fn diagonal_bound(gram: &GramMatrix, method: BoundMethod, tol: f64) -> Result<DiagonalBound> {
    match method {
        BoundMethod::Simple => diagonal_bound_simple(gram),
        BoundMethod::Sdp => diagonal_bound_sdp(gram, tol),
    }
}

/// Maximize 1^T r subject to r_n >= alpha_min and G - diag(r) >= 0.
///
/// `tol` in (0, 1) controls the final barrier weight; the objective gap to
/// the true maximum is O(tol * ||G||). 1e-8 is a good default.
pub fn diagonal_bound_sdp(gram: &GramMatrix, tol: f64) -> Result<DiagonalBound> {
    if !tol.is_finite() || tol <= 0.0 || tol >= 1.0 {
        return Err(MscError::ParameterDomain(format!(
            "sdp tolerance must lie in (0, 1), got {tol}"
        )));
    }
    let k = gram.size();
    if k > SDP_SIZE_LIMIT {
        return Err(MscError::SizeLimit(format!(
            "SDP size {k} exceeds the supported limit {SDP_SIZE_LIMIT}"
        )));
    }
    let g = gram.matrix();
    let alpha = gram.min_eigenvalue()?;
    let norm = gram.spectral_norm().max(1e-300);
    if alpha < -MARGIN_TOL_REL * norm {
        return Err(MscError::InvalidInput(format!(
            "Gram matrix is not positive semidefinite: smallest eigenvalue {alpha:.3e}"
        )));
    }

    // Exactly diagonal G: the constraint decouples into r_n <= G_nn and the
    // maximum is the diagonal itself, with G - diag(r) exactly zero.
    if is_diagonal(g) {
        let r: Vec<f64> = (0..k).map(|i| g[(i, i)]).collect();
        return Ok(DiagonalBound {
            r,
            alpha_min: alpha,
            margin: 0.0,
            method: BoundMethod::Sdp,
            iterations: 0,
        });
    }

    let eps0 = 1e-10 * norm;
    let lo = alpha - eps0;
    // Strictly feasible for the relaxed problem: r - lo = eps0/2 and
    // G - diag(r) has smallest eigenvalue eps0/2, far above eigensolver
    // roundoff (~1e-15 ||G||).
    let mut r = DVector::from_element(k, alpha - 0.5 * eps0);
    let mut iterations = 0;

    let mu_final = tol * norm / k as f64;
    let mut mu = norm / k as f64;
    loop {
        iterations += newton_center(g, &mut r, lo, mu);
        if mu <= mu_final * (1.0 + 1e-12) {
            break;
        }
        mu = (mu / 10.0).max(mu_final);
    }

    // Uniform shift to the PSD boundary (the shift is O(tol * ||G||)), then
    // restore the exact lower bound coordinate-wise.
    let margin0 = margin_of(gram, r.as_slice())?;
    let mut rvec: Vec<f64> = r.iter().map(|v| v + margin0).collect();
    for v in rvec.iter_mut() {
        if *v < alpha {
            *v = alpha;
        }
    }
    let margin = margin_of(gram, &rvec)?;
    if margin < -MARGIN_TOL_REL * norm {
        return Err(MscError::ConvergenceFailure {
            message: format!(
                "sdp margin {margin:.3e} fell below -{MARGIN_TOL_REL:.1e} * {norm:.3e}"
            ),
            best: rvec,
        });
    }
    Ok(DiagonalBound {
        r: rvec,
        alpha_min: alpha,
        margin,
        method: BoundMethod::Sdp,
        iterations,
    })
}

fn is_diagonal(g: &DMatrix<f64>) -> bool {
    let k = g.nrows();
    for i in 0..k {
        for j in 0..k {
            if i != j && g[(i, j)] != 0.0 {
                return false;
            }
        }
    }
    true
}

fn sub_diag(g: &DMatrix<f64>, r: &DVector<f64>) -> DMatrix<f64> {
    let mut s = g.clone();
    for i in 0..r.len() {
        s[(i, i)] -= r[i];
    }
    s
}

/// B(r) = 1^T r + mu (log det S + sum log(r_n - lo)) evaluated from the
/// Cholesky factor of S. Log-det via the factor diagonal; an explicit
/// determinant would underflow once S approaches the PSD boundary.
fn barrier_value(chol: &Cholesky<f64, Dyn>, r: &DVector<f64>, lo: f64, mu: f64) -> f64 {
    let l = chol.l_dirty();
    let mut logdet = 0.0;
    for i in 0..r.len() {
        logdet += l[(i, i)].ln();
    }
    logdet *= 2.0;
    let mut sum = 0.0;
    let mut logbar = 0.0;
    for &ri in r.iter() {
        sum += ri;
        logbar += (ri - lo).ln();
    }
    sum + mu * (logdet + logbar)
}

/// Damped Newton ascent on the barrier objective for one value of mu,
/// starting from (and updating) a strictly feasible r. Returns steps taken.
/// Stops when the Newton decrement certifies centering, or when roundoff
/// leaves no acceptable step; either way r stays strictly feasible.
fn newton_center(g: &DMatrix<f64>, r: &mut DVector<f64>, lo: f64, mu: f64) -> usize {
    let k = r.len();
    let mut steps = 0;
    for _ in 0..60 {
        let Some(chol) = Cholesky::new(sub_diag(g, r)) else {
            break;
        };
        let w = chol.inverse();
        let mut grad = DVector::from_element(k, 1.0);
        for i in 0..k {
            grad[i] += mu * (1.0 / (r[i] - lo) - w[(i, i)]);
        }
        // Negated Hessian M = mu (W.W + diag((r - lo)^-2)) is positive
        // definite: W.W is a Schur product of positive definite matrices.
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = mu * w[(i, j)] * w[(i, j)];
            }
        }
        for i in 0..k {
            let d = r[i] - lo;
            m[(i, i)] += mu / (d * d);
        }
        let Some(mchol) = Cholesky::new(m) else {
            break;
        };
        let d = mchol.solve(&grad);
        // grad^T d = mu * (self-concordant Newton decrement)^2; also catches
        // NaN from a blown-up inverse.
        let dec2 = grad.dot(&d);
        if !(dec2 > 1e-10 * mu) {
            break;
        }
        steps += 1;
        let b0 = barrier_value(&chol, r, lo, mu);
        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-14 {
            let rt = &*r + t * &d;
            if rt.iter().all(|&v| v > lo) {
                if let Some(ct) = Cholesky::new(sub_diag(g, &rt)) {
                    if barrier_value(&ct, &rt, lo, mu) >= b0 + 0.25 * t * dec2 {
                        *r = rt;
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    steps
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT5: f64 = 2.236_067_977_499_79;

    fn gram(entries: &[f64], k: usize) -> GramMatrix {
        GramMatrix::from_matrix(DMatrix::from_row_slice(k, k, entries)).unwrap()
    }

    #[test]
    fn two_by_two_example_lands_on_the_uniform_corner() {
        // For [[2,1],[1,3]] the maximum sits at r = alpha_min * 1: along the
        // boundary (2-r1)(3-r2) = 1 the total r1 + r2 decreases in r1 there,
        // so both lower bounds bind.
        let g = gram(&[2.0, 1.0, 1.0, 3.0], 2);
        let alpha = (5.0 - SQRT5) / 2.0;
        let sdp = diagonal_bound_sdp(&g, 1e-8).unwrap();
        assert!((sdp.alpha_min - alpha).abs() < 1e-12);
        assert!(
            (sdp.sum() - (5.0 - SQRT5)).abs() < 1e-6,
            "sum {} vs {}",
            sdp.sum(),
            5.0 - SQRT5
        );
        for &ri in &sdp.r {
            assert!((ri - alpha).abs() < 1e-5);
            assert!(ri >= sdp.alpha_min);
        }
        assert!(sdp.margin >= -MARGIN_TOL_REL * g.spectral_norm());
        assert!(sdp.iterations > 0);

        let simple = diagonal_bound_simple(&g).unwrap();
        assert!(simple.margin.abs() <= 1e-8 * g.spectral_norm());
        assert!(sdp.sum() >= simple.sum());
    }

    #[test]
    fn diagonal_gram_is_returned_exactly() {
        let g = gram(&[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0], 3);
        let sdp = diagonal_bound_sdp(&g, 1e-8).unwrap();
        assert_eq!(sdp.r, vec![3.0, 1.0, 2.0]);
        assert_eq!(sdp.margin, 0.0);
        assert_eq!(sdp.iterations, 0);
        assert!((sdp.alpha_min - 1.0).abs() < 1e-12);

        let one = gram(&[4.0], 1);
        let sdp = diagonal_bound_sdp(&one, 1e-8).unwrap();
        assert_eq!(sdp.r, vec![4.0]);
    }

    #[test]
    fn certify_flags_overshoot() {
        let g = gram(&[2.0, 1.0, 1.0, 3.0], 2);
        let (feasible, margin) = certify(&g, &[2.0, 3.0], 1e-9).unwrap();
        assert!(!feasible);
        assert!(margin < -0.5, "margin {margin}");
        let (feasible, margin) = certify(&g, &[1.0, 1.0], 0.0).unwrap();
        assert!(feasible);
        assert!(margin > 0.0);
        assert!(matches!(
            certify(&g, &[1.0], 1e-9),
            Err(MscError::DimensionMismatch(_))
        ));
        assert!(matches!(
            certify(&g, &[f64::NAN, 0.0], 1e-9),
            Err(MscError::InvalidInput(_))
        ));
        assert!(matches!(
            certify(&g, &[1.0, 1.0], -1.0),
            Err(MscError::ParameterDomain(_))
        ));
    }

    #[test]
    fn rejects_indefinite_gram() {
        // Eigenvalues 3 and -1.
        let g = gram(&[1.0, 2.0, 2.0, 1.0], 2);
        assert!(matches!(
            diagonal_bound_sdp(&g, 1e-8),
            Err(MscError::InvalidInput(_))
        ));
    }

    #[test]
    fn decoupled_block_gets_extra_slack() {
        // blockdiag([[2,1],[1,3]], [5]): the minimal eigenvector lives on the
        // first block, so the third coordinate can rise to its own diagonal.
        let g = gram(&[2.0, 1.0, 0.0, 1.0, 3.0, 0.0, 0.0, 0.0, 5.0], 3);
        let alpha = (5.0 - SQRT5) / 2.0;
        let sdp = diagonal_bound_sdp(&g, 1e-8).unwrap();
        let expect = 2.0 * alpha + 5.0;
        assert!(
            (sdp.sum() - expect).abs() < 1e-5,
            "sum {} vs {}",
            sdp.sum(),
            expect
        );
        assert!((sdp.r[2] - 5.0).abs() < 1e-5);
        assert!((sdp.r[0] - alpha).abs() < 1e-5);
        let simple = diagonal_bound_simple(&g).unwrap();
        assert!(sdp.sum() > simple.sum() + 3.0);
    }

    #[test]
    fn rejects_out_of_range_tolerance() {
        let g = gram(&[2.0, 1.0, 1.0, 3.0], 2);
        for bad in [0.0, -1.0, 1.0, f64::NAN] {
            assert!(matches!(
                diagonal_bound_sdp(&g, bad),
                Err(MscError::ParameterDomain(_))
            ));
        }
    }

    #[test]
    fn bound_method_round_trips() {
        for m in [BoundMethod::Simple, BoundMethod::Sdp] {
            assert_eq!(m.as_str().parse::<BoundMethod>().unwrap(), m);
        }
        assert!("newton".parse::<BoundMethod>().is_err());
    }
}
