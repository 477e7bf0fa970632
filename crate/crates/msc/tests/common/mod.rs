//! Oracle helpers shared by the integration and acceptance suites. These are
//! deliberately independent of the library's solution paths: they work from
//! function values, finite differences, or exhaustive search only.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Golden-section search for the minimizer of a unimodal function on
/// [lo, hi]. Converges to a bracket of width ~1e-13*(1+|hi|).
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-13 * (1.0 + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Composite Simpson rule on [a, b] with n (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Fourth-order central difference for the first derivative.
pub fn central_d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Central difference for the second derivative.
pub fn central_d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Central difference for the third derivative.
pub fn central_d3(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h)
}

/// Draw a random prox test tuple: kind in {abs, log, atan},
/// lambda in [0.1, 10], a in [0, 1/lambda], y in [-20, 20].
pub fn random_prox_tuple(rng: &mut ChaCha20Rng) -> (msc::PenaltySpec, f64, f64) {
    let lambda = rng.gen_range(0.1..=10.0);
    let a = rng.gen_range(0.0..=1.0) / lambda;
    let y = rng.gen_range(-20.0..=20.0);
    let spec = match rng.gen_range(0u8..3) {
        0 => msc::PenaltySpec::abs(),
        1 => msc::PenaltySpec::log(a).unwrap(),
        _ => msc::PenaltySpec::atan(a).unwrap(),
    };
    (spec, lambda, y)
}

/// Scalar prox oracle: minimize 0.5*(y-x)^2 + lambda*phi(x) over [0, |y|]
/// by golden section, using penalty values only.
pub fn prox_oracle(spec: &msc::PenaltySpec, y: f64, lambda: f64) -> f64 {
    let t = y.abs();
    let cost = |x: f64| 0.5 * (t - x) * (t - x) + lambda * spec.value(x);
    let m = golden_min(cost, 0.0, t);
    // Snap to the dead zone when 0 is at least as good.
    let m = if cost(0.0) <= cost(m) { 0.0 } else { m };
    m.copysign(y)
}

/// Smallest eigenvalue of a symmetric 1x1, 2x2, or 3x3 matrix in closed form
/// (trigonometric solution of the characteristic cubic for 3x3), sharing no
/// code with the library's eigensolver.
pub fn min_eig_closed(s: &DMatrix<f64>) -> f64 {
    match s.nrows() {
        1 => s[(0, 0)],
        2 => {
            let (a, b, c) = (s[(0, 0)], s[(0, 1)], s[(1, 1)]);
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            mid - rad
        }
        3 => {
            let (a11, a22, a33) = (s[(0, 0)], s[(1, 1)], s[(2, 2)]);
            let (a12, a13, a23) = (s[(0, 1)], s[(0, 2)], s[(1, 2)]);
            let p1 = a12 * a12 + a13 * a13 + a23 * a23;
            let q = (a11 + a22 + a33) / 3.0;
            let p2 =
                (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * p1;
            if p2 <= 0.0 {
                return q; // multiple of the identity
            }
            let p = (p2 / 6.0).sqrt();
            let b11 = (a11 - q) / p;
            let b22 = (a22 - q) / p;
            let b33 = (a33 - q) / p;
            let (b12, b13, b23) = (a12 / p, a13 / p, a23 / p);
            let detb = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13)
                + b13 * (b12 * b23 - b22 * b13);
            let phi = (detb / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
            q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
        }
        _ => panic!("closed-form eigenvalues implemented only for K <= 3"),
    }
}

fn bound_feasible(g: &DMatrix<f64>, r: &[f64], alpha: f64, ftol: f64) -> bool {
    if r.iter().any(|&v| v < alpha - ftol) {
        return false;
    }
    let mut s = g.clone();
    for i in 0..r.len() {
        s[(i, i)] -= r[i];
    }
    min_eig_closed(&s) >= -ftol
}

/// Brute-force maximization of 1^T r over {r >= alpha*1, G - diag(r) PSD}:
/// a full grid, refined coarse-to-fine around the incumbent (window of +-2
/// cells). Sound because the feasible set is convex and shrinking toward a
/// feasible incumbent keeps a feasible point on every refined grid (rounding
/// the incumbent down coordinate-wise stays feasible). Feasibility uses the
/// closed-form eigenvalues above. K in {2, 3}.
pub fn bound_oracle_grid(g: &DMatrix<f64>) -> f64 {
    let k = g.nrows();
    assert!(k == 2 || k == 3);
    let alpha = min_eig_closed(g);
    let scale = g.iter().fold(0.0_f64, |s, v| s.max(v.abs())).max(1e-12);
    let ftol = 1e-10 * scale;
    let (pts, stages) = if k == 2 { (41, 6) } else { (21, 7) };
    let mut lo = vec![alpha; k];
    let mut hi: Vec<f64> = (0..k).map(|i| g[(i, i)].max(alpha)).collect();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..stages {
        let step: Vec<f64> = (0..k)
            .map(|i| (hi[i] - lo[i]) / (pts as f64 - 1.0))
            .collect();
        let mut idx = vec![0usize; k];
        let mut stage_best: Option<Vec<f64>> = None;
        let mut stage_sum = f64::NEG_INFINITY;
        'odometer: loop {
            let r: Vec<f64> = (0..k).map(|i| lo[i] + step[i] * idx[i] as f64).collect();
            let sum: f64 = r.iter().sum();
            if sum > stage_sum && bound_feasible(g, &r, alpha, ftol) {
                stage_sum = sum;
                stage_best = Some(r);
            }
            let mut dim = 0;
            while dim < k {
                idx[dim] += 1;
                if idx[dim] < pts {
                    continue 'odometer;
                }
                idx[dim] = 0;
                dim += 1;
            }
            break;
        }
        let center = stage_best.expect("the corner alpha * 1 is always feasible");
        best = best.max(stage_sum);
        for i in 0..k {
            let w = 2.0 * step[i];
            lo[i] = (center[i] - w).max(alpha);
            hi[i] = (center[i] + w).min(g[(i, i)].max(alpha));
        }
    }
    best
}

/// Random K x K PSD matrix B^T B whose minimal eigenvector has no
/// near-vanishing coordinate (|v_i| >= 3e-3; nearly-vanishing coordinates
/// turn the diagonal-bound feasible set into a needle of width ~eps/v_i^2,
/// where value comparisons at fixed tolerance stop being meaningful for any
/// solver). Rejected draws are simply redrawn.
pub fn random_psd_full_support(rng: &mut ChaCha20Rng, k: usize) -> DMatrix<f64> {
    loop {
        let b = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
        let m = b.transpose() * &b;
        let g: DMatrix<f64> = 0.5 * (&m + m.transpose());
        let eig = g.clone().symmetric_eigen();
        let mut idx = 0;
        for j in 1..k {
            if eig.eigenvalues[j] < eig.eigenvalues[idx] {
                idx = j;
            }
        }
        if eig.eigenvectors.column(idx).iter().all(|x| x.abs() >= 3e-3) {
            return g;
        }
    }
}
