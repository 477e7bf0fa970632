//! Scalar sparsity penalties and their threshold (prox) rules.
//!
//! The log and atan penalties are parametrized by a >= 0. For a fixed
//! multiplier lambda, the scalar cost 0.5*(y - x)^2 + lambda*phi(x; a) stays
//! convex exactly when a <= 1/lambda; that region is what
//! [`in_parameter_set`] tests, and every threshold rule here assumes it.

use crate::error::{MscError, Result};
use serde::{Deserialize, Serialize};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    Abs,
    Log,
    Atan,
    Hard,
    Lp,
}

impl PenaltyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PenaltyKind::Abs => "abs",
            PenaltyKind::Atan => "atan",
            PenaltyKind::Hard => "hard",
            PenaltyKind::Log => "log",
            PenaltyKind::Lp => "lp",
        }
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = MscError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs" => Ok(PenaltyKind::Abs),
            "log" => Ok(PenaltyKind::Log),
            "atan" => Ok(PenaltyKind::Atan),
            "hard" => Ok(PenaltyKind::Hard),
            "lp" => Ok(PenaltyKind::Lp),
            other => Err(MscError::ParameterDomain(format!(
                "unknown penalty kind {other:?}"
            ))),
        }
    }
}

/// A concrete scalar penalty phi(x). `a` is meaningful for log/atan,
/// `p` for lp; both are zero otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub a: f64,
    pub p: f64,
}

/// Threshold function properties at the dead-zone edge T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdProps {
    pub threshold: f64,
    /// Right derivative of the threshold function at T. 1 for soft
    /// thresholding, +inf at the boundary a = 1/lambda.
    pub slope: f64,
    /// Right second derivative at T. Zero for atan by construction.
    pub curvature: f64,
}

impl PenaltySpec {
    pub fn abs() -> Self {
        PenaltySpec { kind: PenaltyKind::Abs, a: 0.0, p: 0.0 }
    }

    pub fn log(a: f64) -> Result<Self> {
        check_a(a)?;
        Ok(PenaltySpec { kind: PenaltyKind::Log, a, p: 0.0 })
    }

    pub fn atan(a: f64) -> Result<Self> {
        check_a(a)?;
        Ok(PenaltySpec { kind: PenaltyKind::Atan, a, p: 0.0 })
    }

    pub fn hard() -> Self {
        PenaltySpec { kind: PenaltyKind::Hard, a: 0.0, p: 0.0 }
    }

    pub fn lp(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(MscError::ParameterDomain(format!(
                "lp exponent must lie in (0,1), got {p}"
            )));
        }
        Ok(PenaltySpec { kind: PenaltyKind::Lp, a: 0.0, p })
    }

    pub fn with_kind(kind: PenaltyKind, a: f64, p: f64) -> Result<Self> {
        match kind {
            PenaltyKind::Abs => Ok(Self::abs()),
            PenaltyKind::Log => Self::log(a),
            PenaltyKind::Atan => Self::atan(a),
            PenaltyKind::Hard => Ok(Self::hard()),
            PenaltyKind::Lp => Self::lp(p),
        }
    }

    /// phi(x). Symmetric, phi(0) = 0, nondecreasing in |x|.
    pub fn value(&self, x: f64) -> f64 {
        let t = x.abs();
        match self.kind {
            PenaltyKind::Abs => t,
            PenaltyKind::Log => {
                if self.a == 0.0 {
                    t
                } else {
                    (self.a * t).ln_1p() / self.a
                }
            }
            PenaltyKind::Atan => {
                if self.a == 0.0 {
                    t
                } else {
                    let a = self.a;
                    2.0 / (a * SQRT3)
                        * (((1.0 + 2.0 * a * t) / SQRT3).atan() - std::f64::consts::PI / 6.0)
                }
            }
            PenaltyKind::Hard => {
                if t == 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            PenaltyKind::Lp => t.powf(self.p),
        }
    }

    /// k-th derivative of phi at x, k in 1..=3. At x = 0 the right-sided
    /// derivative is returned. Not defined for the hard penalty.
    pub fn deriv(&self, x: f64, order: u8) -> Result<f64> {
        if !(1..=3).contains(&order) {
            return Err(MscError::ParameterDomain(format!(
                "derivative order must be 1, 2 or 3, got {order}"
            )));
        }
        if self.kind == PenaltyKind::Hard {
            return Err(MscError::Unsupported(
                "hard penalty has no differentiable form".into(),
            ));
        }
        let s = if x < 0.0 { -1.0 } else { 1.0 };
        let t = x.abs();
        let a = self.a;
        Ok(match (self.kind, order) {
            (PenaltyKind::Abs, 1) => s,
            (PenaltyKind::Abs, _) => 0.0,
            (PenaltyKind::Log, 1) => s / (1.0 + a * t),
            (PenaltyKind::Log, 2) => {
                let d = 1.0 + a * t;
                -a / (d * d)
            }
            (PenaltyKind::Log, 3) => {
                let d = 1.0 + a * t;
                s * 2.0 * a * a / (d * d * d)
            }
            (PenaltyKind::Atan, 1) => s / atan_q(a, t),
            (PenaltyKind::Atan, 2) => {
                let q = atan_q(a, t);
                -(2.0 * a * a * t + a) / (q * q)
            }
            (PenaltyKind::Atan, 3) => {
                // Simplifies to 6a^3 t (a t + 1)/q^3; zero at t = 0 by the
                // b = a^2 design.
                let q = atan_q(a, t);
                s * 6.0 * a * a * a * t * (a * t + 1.0) / (q * q * q)
            }
            (PenaltyKind::Lp, 1) => {
                if t == 0.0 {
                    f64::INFINITY
                } else {
                    s * self.p * t.powf(self.p - 1.0)
                }
            }
            (PenaltyKind::Lp, 2) => {
                if t == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    self.p * (self.p - 1.0) * t.powf(self.p - 2.0)
                }
            }
            (PenaltyKind::Lp, 3) => {
                if t == 0.0 {
                    f64::INFINITY
                } else {
                    s * self.p * (self.p - 1.0) * (self.p - 2.0) * t.powf(self.p - 3.0)
                }
            }
            _ => unreachable!("order validated above, hard rejected above"),
        })
    }

    /// True when 0.5*x^2 + lambda*phi(x; a) is convex, so the threshold rule
    /// below returns the unique minimizer.
    pub fn in_parameter_set(&self, lambda: f64) -> bool {
        match self.kind {
            PenaltyKind::Abs => lambda > 0.0,
            PenaltyKind::Log | PenaltyKind::Atan => in_parameter_set(lambda, self.a),
            PenaltyKind::Hard | PenaltyKind::Lp => false,
        }
    }

    /// Threshold function: argmin_x 0.5*(y - x)^2 + lambda*phi(x).
    /// Dead zone |y| <= T = lambda maps to exactly 0; ties go to 0.
    pub fn prox(&self, y: f64, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(MscError::ParameterDomain(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        match self.kind {
            PenaltyKind::Abs => Ok(soft(y, lambda)),
            PenaltyKind::Hard => {
                if y.abs() <= lambda {
                    Ok(0.0)
                } else {
                    Ok(y)
                }
            }
            PenaltyKind::Lp => Err(MscError::Unsupported(
                "no threshold rule for the lp penalty: the total cost is never convex".into(),
            )),
            PenaltyKind::Log | PenaltyKind::Atan => {
                if !in_parameter_set(lambda, self.a) {
                    return Err(MscError::ConvexityViolation(format!(
                        "(lambda, a) = ({lambda}, {}) outside the region a <= 1/lambda",
                        self.a
                    )));
                }
                if self.a == 0.0 {
                    return Ok(soft(y, lambda));
                }
                let t = y.abs();
                if t <= lambda {
                    return Ok(0.0);
                }
                let mag = match self.kind {
                    PenaltyKind::Log => log_prox_mag(t, self.a, lambda),
                    PenaltyKind::Atan => atan_prox_mag(t, self.a, lambda),
                    _ => unreachable!(),
                };
                Ok(mag.copysign(y))
            }
        }
    }

    /// Dead-zone edge T = lambda together with the right slope and curvature
    /// of the threshold function there. Log and atan kinds only.
    pub fn threshold_props(&self, lambda: f64) -> Result<ThresholdProps> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(MscError::ParameterDomain(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        if !matches!(self.kind, PenaltyKind::Log | PenaltyKind::Atan) {
            return Err(MscError::Unsupported(format!(
                "threshold properties are defined for log and atan kinds, not {}",
                self.kind.as_str()
            )));
        }
        if !in_parameter_set(lambda, self.a) {
            return Err(MscError::ConvexityViolation(format!(
                "(lambda, a) = ({lambda}, {}) outside the region a <= 1/lambda",
                self.a
            )));
        }
        let al = self.a * lambda;
        // slope = 1/(1 + lambda*phi''(0+)) with phi''(0+) = -a.
        let slope = if al == 1.0 { f64::INFINITY } else { 1.0 / (1.0 - al) };
        // curvature = -lambda*phi'''(0+) * slope^3.
        let curvature = match self.kind {
            PenaltyKind::Log => {
                if al == 1.0 {
                    f64::NEG_INFINITY
                } else {
                    let d = 1.0 - al;
                    -2.0 * self.a * self.a * lambda / (d * d * d)
                }
            }
            PenaltyKind::Atan => 0.0,
            _ => unreachable!(),
        };
        Ok(ThresholdProps { threshold: lambda, slope, curvature })
    }
}

/// The shared admissible region for the log and atan families:
/// lambda > 0 and 0 <= a <= 1/lambda.
pub fn in_parameter_set(lambda: f64, a: f64) -> bool {
    lambda > 0.0 && lambda.is_finite() && a >= 0.0 && a * lambda <= 1.0
}

/// Invert the slope relation: the a for which the threshold function has the
/// requested right slope at T. slope = 1 gives a = 0 (soft threshold),
/// slope = +inf gives the boundary a = 1/lambda.
pub fn a_from_slope(lambda: f64, slope: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(MscError::ParameterDomain(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if slope.is_nan() || slope < 1.0 {
        return Err(MscError::ParameterDomain(format!(
            "threshold slope must be >= 1, got {slope}"
        )));
    }
    if slope.is_infinite() {
        return Ok(1.0 / lambda);
    }
    Ok((1.0 - 1.0 / slope) / lambda)
}

pub(crate) fn soft(y: f64, lambda: f64) -> f64 {
    let t = y.abs() - lambda;
    if t <= 0.0 {
        0.0
    } else {
        t.copysign(y)
    }
}

fn check_a(a: f64) -> Result<()> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(MscError::ParameterDomain(format!(
            "penalty parameter a must be finite and >= 0, got {a}"
        )));
    }
    Ok(())
}

fn atan_q(a: f64, t: f64) -> f64 {
    a * a * t * t + a * t + 1.0
}

/// Closed-form threshold magnitude for the log penalty, |y| > lambda.
fn log_prox_mag(y: f64, a: f64, lambda: f64) -> f64 {
    let half = y / 2.0 - 1.0 / (2.0 * a);
    let disc = (y / 2.0 + 1.0 / (2.0 * a)).powi(2) - lambda / a;
    half + disc.max(0.0).sqrt()
}

/// Threshold magnitude for the atan penalty, |y| > lambda: the unique root in
/// (0, |y|) of the cubic
///   a^2 t^3 + a (1 - a y) t^2 + (1 - a y) t + (lambda - y) = 0,
/// found by Newton steps safeguarded with bisection. The residual tolerance
/// is 1e-12 relative to the cubic's coefficient scale at t = y.
fn atan_prox_mag(y: f64, a: f64, lambda: f64) -> f64 {
    let c3 = a * a;
    let c2 = a * (1.0 - a * y);
    let c1 = 1.0 - a * y;
    let c0 = lambda - y;
    let g = |t: f64| ((c3 * t + c2) * t + c1) * t + c0;
    let dg = |t: f64| (3.0 * c3 * t + 2.0 * c2) * t + c1;

    let scale = (c3 * y * y * y).abs() + (c2 * y * y).abs() + (c1 * y).abs() + c0.abs();
    let tol = 1e-12 * scale.max(1.0);

    let (mut lo, mut hi) = (0.0_f64, y);
    // One fixed-point step from y lands inside the bracket.
    let mut t = y - lambda / atan_q(a, y);
    if !(t > lo && t < hi) {
        t = 0.5 * y;
    }
    for _ in 0..200 {
        let gt = g(t);
        if gt.abs() <= tol {
            return t;
        }
        if gt > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let d = dg(t);
        let newton = t - gt / d;
        t = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * (1.0 + y) {
            return t;
        }
    }
    t
}
