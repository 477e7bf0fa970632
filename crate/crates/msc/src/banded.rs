//! Symmetric banded matrices with Cholesky factorization. Used by the
//! solver's structured path, where the normal equations reduce to a
//! narrow-band positive definite system.

use crate::error::{MscError, Result};

/// Lower-band storage: `bands[l][i]` holds entry (i + l, i), l = 0..=bw.
#[derive(Debug, Clone)]
pub(crate) struct SymBanded {
    pub n: usize,
    pub bw: usize,
    bands: Vec<Vec<f64>>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bands = (0..=bw).map(|l| vec![0.0; n - l.min(n)]).collect();
        SymBanded { n, bw, bands }
    }

    #[cfg(test)]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let l = hi - lo;
        if l > self.bw {
            0.0
        } else {
            self.bands[l][lo]
        }
    }

    /// Accumulate T diag(w) T^T where T is lower triangular Toeplitz with
    /// the given taps (T[i][j] = taps[i - j]). With w = None the weights
    /// are all one. Requires taps.len() - 1 <= bw.
    pub fn add_weighted_toeplitz_outer(&mut self, taps: &[f64], w: Option<&[f64]>) {
        let nt = taps.len();
        debug_assert!(nt >= 1 && nt - 1 <= self.bw);
        for k in 0..self.n {
            let wk = w.map_or(1.0, |w| w[k]);
            if wk == 0.0 {
                continue;
            }
            for li in 0..nt {
                let i = k + li;
                if i >= self.n {
                    break;
                }
                let ti = taps[li] * wk;
                for lj in 0..=li {
                    let j = k + lj;
                    self.bands[i - j][j] += ti * taps[lj];
                }
            }
        }
    }

    /// Banded Cholesky, failing on non positive definite input.
    pub fn cholesky(&self) -> Result<BandedChol> {
        let n = self.n;
        let bw = self.bw;
        let mut l = self.bands.clone();
        for j in 0..n {
            let start = j.saturating_sub(bw);
            let mut d = l[0][j];
            for k in start..j {
                let v = l[j - k][k];
                d -= v * v;
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(MscError::ConvergenceFailure {
                    message: format!("banded Cholesky pivot {d:.3e} at column {j}"),
                    best: Vec::new(),
                });
            }
            let dj = d.sqrt();
            l[0][j] = dj;
            for i in (j + 1)..(j + bw + 1).min(n) {
                let mut s = l[i - j][j];
                let st = i.saturating_sub(bw).max(start);
                for k in st..j {
                    s -= l[i - k][k] * l[j - k][k];
                }
                l[i - j][j] = s / dj;
            }
        }
        Ok(BandedChol { n, bw, bands: l })
    }
}

/// Lower Cholesky factor in the same band layout.
#[derive(Debug, Clone)]
pub(crate) struct BandedChol {
    n: usize,
    bw: usize,
    bands: Vec<Vec<f64>>,
}

impl BandedChol {
    /// Solve L L^T x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let bw = self.bw;
        let mut x = b.to_vec();
        for i in 0..n {
            let start = i.saturating_sub(bw);
            let mut s = x[i];
            for k in start..i {
                s -= self.bands[i - k][k] * x[k];
            }
            x[i] = s / self.bands[0][i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for l in 1..=bw.min(n - 1 - i) {
                s -= self.bands[l][i] * x[i + l];
            }
            x[i] = s / self.bands[0][i];
        }
        x
    }
}

/// y += alpha * T x for lower triangular Toeplitz taps.
pub(crate) fn toeplitz_matvec(taps: &[f64], x: &[f64], y: &mut [f64], alpha: f64) {
    let n = x.len();
    for i in 0..n {
        let mut acc = 0.0;
        for (k, t) in taps.iter().enumerate() {
            if k > i {
                break;
            }
            acc += t * x[i - k];
        }
        y[i] += alpha * acc;
    }
}

/// y += alpha * T^T x for lower triangular Toeplitz taps.
pub(crate) fn toeplitz_adjoint_matvec(taps: &[f64], x: &[f64], y: &mut [f64], alpha: f64) {
    let n = x.len();
    for i in 0..n {
        let mut acc = 0.0;
        for (k, t) in taps.iter().enumerate() {
            if i + k >= n {
                break;
            }
            acc += t * x[i + k];
        }
        y[i] += alpha * acc;
    }
}
