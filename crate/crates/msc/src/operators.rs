//! Observation operators and their Gram matrices.
//!
//! Two representations: an explicit dense matrix, and a causal recursive
//! difference system H = A^{-1} B applied by filtering (never materialized).
//! The recursive form is square (n x n), uses zero initial conditions, and
//! its adjoint is time-reversed filtering.

use crate::error::{MscError, Result};
use nalgebra::{Cholesky, DMatrix, DVector};

/// Columns above this count are refused by dense materialization paths.
pub const DENSE_LIMIT: usize = 2000;

/// Causal rational filter y = A^{-1} B x on signals of length n.
/// Coefficients are normalized so a[0] = 1; poles must lie strictly inside
/// the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaSystem {
    b: Vec<f64>,
    a: Vec<f64>,
    n: usize,
    impulse: Vec<f64>,
}

impl ArmaSystem {
    pub fn new(b: Vec<f64>, a: Vec<f64>, n: usize) -> Result<Self> {
        if b.is_empty() || a.is_empty() {
            return Err(MscError::InvalidInput(
                "filter coefficient arrays must be nonempty".into(),
            ));
        }
        if n == 0 {
            return Err(MscError::InvalidInput("signal length must be >= 1".into()));
        }
        if b.iter().chain(a.iter()).any(|c| !c.is_finite()) {
            return Err(MscError::InvalidInput("filter coefficients must be finite".into()));
        }
        let a0 = a[0];
        if a0 == 0.0 {
            return Err(MscError::InvalidInput(
                "denominator leading coefficient must be nonzero".into(),
            ));
        }
        let b: Vec<f64> = b.iter().map(|c| c / a0).collect();
        let a: Vec<f64> = a.iter().map(|c| c / a0).collect();

        // Poles are the eigenvalues of the companion matrix of a(z).
        let deg = a.len() - 1;
        if deg > 0 {
            let mut comp = DMatrix::<f64>::zeros(deg, deg);
            for k in 0..deg {
                comp[(0, k)] = -a[k + 1];
            }
            for k in 1..deg {
                comp[(k, k - 1)] = 1.0;
            }
            let max_mod = comp
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0_f64, f64::max);
            if max_mod >= 1.0 {
                return Err(MscError::Unstable(format!(
                    "pole modulus {max_mod:.6} >= 1"
                )));
            }
        }

        let mut sys = ArmaSystem { b, a, n, impulse: Vec::new() };
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        sys.impulse = sys.filter(&e0);
        Ok(sys)
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Truncated impulse response, length n. Column j of the operator is
    /// this response delayed by j samples.
    pub fn impulse(&self) -> &[f64] {
        &self.impulse
    }

    /// Causal filtering with zero initial conditions: H x.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for (k, bk) in self.b.iter().enumerate() {
                if k > i {
                    break;
                }
                acc += bk * x[i - k];
            }
            for (k, ak) in self.a.iter().enumerate().skip(1) {
                if k > i {
                    break;
                }
                acc -= ak * y[i - k];
            }
            y[i] = acc;
        }
        y
    }

    /// Adjoint H^T y: solve A^T w = y by the backward recursion, then apply
    /// B^T as an anticausal tap sum.
    pub fn adjoint_filter(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut w = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            for (k, ak) in self.a.iter().enumerate().skip(1) {
                if i + k >= n {
                    break;
                }
                acc -= ak * w[i + k];
            }
            w[i] = acc;
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for (k, bk) in self.b.iter().enumerate() {
                if i + k >= n {
                    break;
                }
                acc += bk * w[i + k];
            }
            out[i] = acc;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum LinearOperator {
    Dense(DMatrix<f64>),
    Arma(ArmaSystem),
}

impl LinearOperator {
    pub fn dense(m: DMatrix<f64>) -> Self {
        LinearOperator::Dense(m)
    }

    pub fn arma(b: Vec<f64>, a: Vec<f64>, n: usize) -> Result<Self> {
        Ok(LinearOperator::Arma(ArmaSystem::new(b, a, n)?))
    }

    pub fn identity(n: usize) -> Self {
        LinearOperator::Dense(DMatrix::identity(n, n))
    }

    pub fn nrows(&self) -> usize {
        match self {
            LinearOperator::Dense(m) => m.nrows(),
            LinearOperator::Arma(s) => s.n,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            LinearOperator::Dense(m) => m.ncols(),
            LinearOperator::Arma(s) => s.n,
        }
    }

    pub fn matvec(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.ncols() {
            return Err(MscError::DimensionMismatch(format!(
                "matvec: operator has {} columns, vector has {}",
                self.ncols(),
                x.len()
            )));
        }
        Ok(match self {
            LinearOperator::Dense(m) => m * x,
            LinearOperator::Arma(s) => DVector::from_vec(s.filter(x.as_slice())),
        })
    }

    pub fn adjoint_matvec(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.nrows() {
            return Err(MscError::DimensionMismatch(format!(
                "adjoint_matvec: operator has {} rows, vector has {}",
                self.nrows(),
                y.len()
            )));
        }
        Ok(match self {
            LinearOperator::Dense(m) => m.transpose() * y,
            LinearOperator::Arma(s) => DVector::from_vec(s.adjoint_filter(y.as_slice())),
        })
    }

    /// Euclidean norms of all columns. For the recursive form these come
    /// from prefix sums of the squared impulse response, so edge columns
    /// (truncated responses) are exact.
    pub fn column_norms(&self) -> Vec<f64> {
        match self {
            LinearOperator::Dense(m) => (0..m.ncols()).map(|j| m.column(j).norm()).collect(),
            LinearOperator::Arma(s) => {
                let mut prefix = vec![0.0; s.n + 1];
                for (k, h) in s.impulse.iter().enumerate() {
                    prefix[k + 1] = prefix[k] + h * h;
                }
                (0..s.n).map(|j| prefix[s.n - j].sqrt()).collect()
            }
        }
    }

    /// Column j as a dense vector.
    pub fn column(&self, j: usize) -> Result<DVector<f64>> {
        if j >= self.ncols() {
            return Err(MscError::DimensionMismatch(format!(
                "column {j} out of range for {} columns",
                self.ncols()
            )));
        }
        Ok(match self {
            LinearOperator::Dense(m) => m.column(j).into_owned(),
            LinearOperator::Arma(s) => {
                let mut col = DVector::zeros(s.n);
                for i in j..s.n {
                    col[i] = s.impulse[i - j];
                }
                col
            }
        })
    }

    /// Restriction to the listed columns as a dense operator. Indices must
    /// be strictly increasing and in range.
    pub fn subcolumns(&self, indices: &[usize]) -> Result<LinearOperator> {
        if indices.is_empty() {
            return Err(MscError::InvalidInput("empty column index set".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MscError::InvalidInput(
                "column indices must be strictly increasing".into(),
            ));
        }
        if *indices.last().unwrap() >= self.ncols() {
            return Err(MscError::DimensionMismatch(format!(
                "column index {} out of range for {} columns",
                indices.last().unwrap(),
                self.ncols()
            )));
        }
        let m = self.nrows();
        let mut out = DMatrix::zeros(m, indices.len());
        for (k, &j) in indices.iter().enumerate() {
            out.set_column(k, &self.column(j)?);
        }
        Ok(LinearOperator::Dense(out))
    }

    /// Materialize the full matrix. Refused above [`DENSE_LIMIT`] columns.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.ncols() > DENSE_LIMIT {
            return Err(MscError::SizeLimit(format!(
                "dense materialization limited to {DENSE_LIMIT} columns, got {}",
                self.ncols()
            )));
        }
        Ok(match self {
            LinearOperator::Dense(m) => m.clone(),
            LinearOperator::Arma(s) => {
                let mut out = DMatrix::zeros(s.n, s.n);
                for j in 0..s.n {
                    for i in j..s.n {
                        out[(i, j)] = s.impulse[i - j];
                    }
                }
                out
            }
        })
    }
}

/// Symmetric positive semidefinite Gram matrix H^T H, stored dense.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    m: DMatrix<f64>,
}

impl GramMatrix {
    /// Wrap an explicitly given Gram matrix. The input must be square and
    /// symmetric to 1e-10 relative; it is exactly symmetrized on ingest.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(MscError::DimensionMismatch(format!(
                "Gram matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().fold(0.0_f64, |s, v| s.max(v.abs())).max(1e-300);
        let mut worst = 0.0_f64;
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if worst > 1e-10 * scale {
            return Err(MscError::InvalidInput(format!(
                "matrix asymmetry {worst:.3e} exceeds 1e-10 * {scale:.3e}"
            )));
        }
        let sym = 0.5 * (&m + m.transpose());
        Ok(GramMatrix { m: sym })
    }

    /// H^T H for the given operator, through dense materialization.
    pub fn from_operator(op: &LinearOperator) -> Result<Self> {
        let h = op.to_dense()?;
        let g = h.transpose() * &h;
        // Products of this form are symmetric to roundoff; make it exact.
        let sym = 0.5 * (&g + g.transpose());
        Ok(GramMatrix { m: sym })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn size(&self) -> usize {
        self.m.nrows()
    }

    pub(crate) fn sym_eigen(&self) -> (DVector<f64>, DMatrix<f64>) {
        let eig = self.m.clone().symmetric_eigen();
        (eig.eigenvalues, eig.eigenvectors)
    }

    /// Largest |eigenvalue|.
    pub fn spectral_norm(&self) -> f64 {
        let (vals, _) = self.sym_eigen();
        vals.iter().fold(0.0_f64, |s, v| s.max(v.abs()))
    }

    /// Smallest eigenvalue, with the residual certificate
    /// ||G v - alpha v|| <= 1e-8 ||G|| enforced.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_eig_sym(&self.m)
    }
}

/// Smallest eigenvalue of a symmetric matrix, with the eigenpair residual
/// certificate ||S v - alpha v|| <= 1e-8 max(||S||, tiny) enforced.
///
/// The QR eigensolver occasionally returns a pair with residual somewhat
/// above that gate on clustered spectra; those pairs are refined by shifted
/// inverse iteration (the shift sits strictly below the smallest eigenvalue,
/// so the shifted matrix is positive definite and Cholesky-solvable).
pub(crate) fn min_eig_sym(s: &DMatrix<f64>) -> Result<f64> {
    let eig = s.clone().symmetric_eigen();
    let vals = &eig.eigenvalues;
    let mut idx = 0;
    for k in 1..vals.len() {
        if vals[k] < vals[idx] {
            idx = k;
        }
    }
    let mut alpha = vals[idx];
    let mut v: DVector<f64> = eig.eigenvectors.column(idx).into();
    let norm = vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let tiny = norm.max(1e-300);
    let mut residual = (s * &v - alpha * &v).norm();

    // The eigenvalue error is at most the residual, so a shift one
    // residual (plus rounding slack) below alpha is below the true
    // smallest eigenvalue; back the shift off further if Cholesky
    // disagrees.
    let mut gap = (2.0 * residual).max(1e-12 * tiny);
    for _ in 0..8 {
        if residual <= 1e-10 * tiny {
            break;
        }
        let mut shifted = s.clone();
        let shift = alpha - gap;
        for i in 0..shifted.nrows() {
            shifted[(i, i)] -= shift;
        }
        match Cholesky::new(shifted) {
            Some(chol) => {
                let mut w = v.clone();
                chol.solve_mut(&mut w);
                let n = w.norm();
                if !(n.is_finite() && n > 0.0) {
                    break;
                }
                v = w / n;
                alpha = (v.transpose() * s * &v)[(0, 0)];
                residual = (s * &v - alpha * &v).norm();
            }
            None => gap *= 4.0,
        }
    }

    if residual > 1e-8 * tiny {
        return Err(MscError::ConvergenceFailure {
            message: format!("eigenvalue residual {residual:.3e} exceeds 1e-8 * {norm:.3e}"),
            best: vec![alpha],
        });
    }
    Ok(alpha)
}
