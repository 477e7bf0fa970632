//! Sparse-deconvolution benchmark harness.
//!
//! Generates seeded random spike trains, observes them through a recursive
//! filter plus Gaussian noise, runs a configurable set of estimators, and
//! reports amplitude and support error metrics per trial and averaged.
//! Everything is a pure function of the configuration and master seed:
//! trial data comes from per-trial substreams, so results are independent
//! of execution order and of how many trials run.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bound::BoundMethod;
use crate::error::{MscError, Result};
use crate::imsc::{run_imsc, ImscConfig};
use crate::operators::LinearOperator;
use crate::penalty::{PenaltyKind, PenaltySpec};
use crate::rng::{substream, GaussianStream, STREAM_NOISE, STREAM_SIGNAL};
use crate::solvers::{
    debias, select_lambda, solve_lp_irl1, solve_lp_irl2, solve_penalized_ls, support,
    ProblemSpec, SolveOptions,
};

/// Estimators the benchmark can run. The `+debias` variants refit the
/// base estimator's support by unpenalized least squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgorithmId {
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "l1+debias")]
    L1Debias,
    #[serde(rename = "irl2_lp")]
    Irl2Lp,
    #[serde(rename = "irl2_lp+debias")]
    Irl2LpDebias,
    #[serde(rename = "irl1_lp")]
    Irl1Lp,
    #[serde(rename = "irl1_lp+debias")]
    Irl1LpDebias,
    #[serde(rename = "imsc_log")]
    ImscLog,
    #[serde(rename = "imsc_log+debias")]
    ImscLogDebias,
    #[serde(rename = "imsc_atan")]
    ImscAtan,
    #[serde(rename = "imsc_atan+debias")]
    ImscAtanDebias,
    #[serde(rename = "imsc_s_atan")]
    ImscSAtan,
    #[serde(rename = "imsc_s_atan+debias")]
    ImscSAtanDebias,
}

/// Base estimators shared by the plain and `+debias` variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseAlgorithm {
    L1,
    Irl2Lp,
    Irl1Lp,
    ImscLog,
    ImscAtan,
    /// The atan driver with the scaled-identity bound instead of the
    /// optimized one.
    ImscSAtan,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 12] = [
        AlgorithmId::L1,
        AlgorithmId::L1Debias,
        AlgorithmId::Irl2Lp,
        AlgorithmId::Irl2LpDebias,
        AlgorithmId::Irl1Lp,
        AlgorithmId::Irl1LpDebias,
        AlgorithmId::ImscLog,
        AlgorithmId::ImscLogDebias,
        AlgorithmId::ImscAtan,
        AlgorithmId::ImscAtanDebias,
        AlgorithmId::ImscSAtan,
        AlgorithmId::ImscSAtanDebias,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmId::L1 => "l1",
            AlgorithmId::L1Debias => "l1+debias",
            AlgorithmId::Irl2Lp => "irl2_lp",
            AlgorithmId::Irl2LpDebias => "irl2_lp+debias",
            AlgorithmId::Irl1Lp => "irl1_lp",
            AlgorithmId::Irl1LpDebias => "irl1_lp+debias",
            AlgorithmId::ImscLog => "imsc_log",
            AlgorithmId::ImscLogDebias => "imsc_log+debias",
            AlgorithmId::ImscAtan => "imsc_atan",
            AlgorithmId::ImscAtanDebias => "imsc_atan+debias",
            AlgorithmId::ImscSAtan => "imsc_s_atan",
            AlgorithmId::ImscSAtanDebias => "imsc_s_atan+debias",
        }
    }

    pub fn base(&self) -> BaseAlgorithm {
        match self {
            AlgorithmId::L1 | AlgorithmId::L1Debias => BaseAlgorithm::L1,
            AlgorithmId::Irl2Lp | AlgorithmId::Irl2LpDebias => BaseAlgorithm::Irl2Lp,
            AlgorithmId::Irl1Lp | AlgorithmId::Irl1LpDebias => BaseAlgorithm::Irl1Lp,
            AlgorithmId::ImscLog | AlgorithmId::ImscLogDebias => BaseAlgorithm::ImscLog,
            AlgorithmId::ImscAtan | AlgorithmId::ImscAtanDebias => BaseAlgorithm::ImscAtan,
            AlgorithmId::ImscSAtan | AlgorithmId::ImscSAtanDebias => {
                BaseAlgorithm::ImscSAtan
            }
        }
    }

    pub fn debiased(&self) -> bool {
        matches!(
            self,
            AlgorithmId::L1Debias
                | AlgorithmId::Irl2LpDebias
                | AlgorithmId::Irl1LpDebias
                | AlgorithmId::ImscLogDebias
                | AlgorithmId::ImscAtanDebias
                | AlgorithmId::ImscSAtanDebias
        )
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = MscError;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .iter()
            .find(|a| a.as_str() == s)
            .copied()
            .ok_or_else(|| MscError::Parse(format!("unknown algorithm id '{s}'")))
    }
}

/// Benchmark configuration. Defaults reproduce the reference experiment:
/// length-1000 spike trains with gaps uniform on {5..35} and amplitudes
/// uniform on [-1, 1], observed through b = [1, 0.8], a = [1, -1.047,
/// 0.81] with noise level 0.2.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n: usize,
    pub gap_min: usize,
    pub gap_max: usize,
    pub amp_min: f64,
    pub amp_max: f64,
    pub b_coeffs: Vec<f64>,
    pub a_coeffs: Vec<f64>,
    pub sigma: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub algorithms: Vec<AlgorithmId>,
    pub metric_eps: f64,
    /// Uniform penalty weight for the lp comparators.
    pub lp_lambda: f64,
    /// lp exponent in (0, 1).
    pub lp_exponent: f64,
    /// When set, overrides the noise-derived lambda with a uniform value
    /// for the penalized estimators, and replaces `lp_lambda` too. Used by
    /// the lambda sweep.
    pub lambda_override: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 1000,
            gap_min: 5,
            gap_max: 35,
            amp_min: -1.0,
            amp_max: 1.0,
            b_coeffs: vec![1.0, 0.8],
            a_coeffs: vec![1.0, -1.047, 0.81],
            sigma: 0.2,
            trials: 20,
            master_seed: 0x5eed_0001,
            algorithms: AlgorithmId::ALL.to_vec(),
            metric_eps: 1e-3,
            lp_lambda: 1.0,
            lp_exponent: 0.7,
            lambda_override: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(MscError::ParameterDomain("n must be >= 1".into()));
        }
        if self.gap_min < 1 || self.gap_max < self.gap_min {
            return Err(MscError::ParameterDomain(format!(
                "gap bounds must satisfy 1 <= gap_min <= gap_max, got [{}, {}]",
                self.gap_min, self.gap_max
            )));
        }
        if !(self.amp_min.is_finite() && self.amp_max.is_finite())
            || self.amp_min > self.amp_max
        {
            return Err(MscError::ParameterDomain(format!(
                "amplitude bounds [{}, {}] are invalid",
                self.amp_min, self.amp_max
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(MscError::ParameterDomain(format!(
                "sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if self.trials == 0 {
            return Err(MscError::ParameterDomain("trials must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(MscError::InvalidInput("algorithm list is empty".into()));
        }
        if !(self.metric_eps >= 0.0 && self.metric_eps.is_finite()) {
            return Err(MscError::ParameterDomain(format!(
                "metric_eps must be nonnegative, got {}",
                self.metric_eps
            )));
        }
        if !(self.lp_exponent > 0.0 && self.lp_exponent < 1.0) {
            return Err(MscError::ParameterDomain(format!(
                "lp_exponent must lie in (0, 1), got {}",
                self.lp_exponent
            )));
        }
        if !(self.lp_lambda > 0.0 && self.lp_lambda.is_finite()) {
            return Err(MscError::ParameterDomain(format!(
                "lp_lambda must be positive and finite, got {}",
                self.lp_lambda
            )));
        }
        if let Some(l) = self.lambda_override {
            if !(l > 0.0 && l.is_finite()) {
                return Err(MscError::ParameterDomain(format!(
                    "lambda_override must be positive and finite, got {l}"
                )));
            }
        }
        // Stability of a_coeffs is enforced at operator construction.
        Ok(())
    }

    pub fn operator(&self) -> Result<LinearOperator> {
        LinearOperator::arma(self.b_coeffs.clone(), self.a_coeffs.clone(), self.n)
    }
}

/// Per-trial error metrics. The runtime is informational and excluded
/// from serialized outputs so reports stay byte-identical across runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub l2e: f64,
    pub l1e: f64,
    /// Support errors: se = false_zeros + false_nonzeros.
    pub se: usize,
    pub false_zeros: usize,
    pub false_nonzeros: usize,
    #[serde(skip)]
    pub runtime: f64,
}

/// Amplitude and support error between truth and estimate; support is
/// judged at |x| > eps on both sides.
pub fn compute_metrics(
    x_true: &DVector<f64>,
    x_est: &DVector<f64>,
    eps: f64,
) -> Result<TrialMetrics> {
    if x_true.len() != x_est.len() {
        return Err(MscError::DimensionMismatch(format!(
            "metric inputs have lengths {} and {}",
            x_true.len(),
            x_est.len()
        )));
    }
    let diff = x_true - x_est;
    let mut false_zeros = 0;
    let mut false_nonzeros = 0;
    for i in 0..x_true.len() {
        let t = x_true[i].abs() > eps;
        let e = x_est[i].abs() > eps;
        match (t, e) {
            (true, false) => false_zeros += 1,
            (false, true) => false_nonzeros += 1,
            _ => {}
        }
    }
    Ok(TrialMetrics {
        l2e: diff.norm(),
        l1e: diff.abs().sum(),
        se: false_zeros + false_nonzeros,
        false_zeros,
        false_nonzeros,
        runtime: 0.0,
    })
}

/// Seeded spike train: position gaps uniform on {gap_min..gap_max}
/// (the first position measured from index 0), amplitudes uniform on
/// [amp_min, amp_max]. Pure function of (master_seed, trial).
pub fn gen_sparse_spikes(cfg: &ExperimentConfig, trial: u64) -> DVector<f64> {
    let mut rng = substream(cfg.master_seed, trial, STREAM_SIGNAL);
    let mut x = DVector::zeros(cfg.n);
    let mut pos = rng.gen_range(cfg.gap_min..=cfg.gap_max);
    while pos < cfg.n {
        x[pos] = rng.gen_range(cfg.amp_min..=cfg.amp_max);
        pos += rng.gen_range(cfg.gap_min..=cfg.gap_max);
    }
    x
}

/// Observation y = H x + sigma * w with w standard normal from the
/// trial's noise substream.
pub fn gen_observation(
    x: &DVector<f64>,
    cfg: &ExperimentConfig,
    trial: u64,
) -> Result<DVector<f64>> {
    let op = cfg.operator()?;
    if x.len() != op.ncols() {
        return Err(MscError::DimensionMismatch(format!(
            "signal length {} vs operator columns {}",
            x.len(),
            op.ncols()
        )));
    }
    let clean = op.matvec(x)?;
    let mut noise = GaussianStream::new(cfg.master_seed, trial, STREAM_NOISE);
    Ok(DVector::from_fn(cfg.n, |i, _| clean[i] + cfg.sigma * noise.next()))
}

/// One algorithm's result on one trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub algorithm: AlgorithmId,
    pub metrics: TrialMetrics,
    /// Outer rounds and support sizes, present for the iterative driver.
    pub imsc_rounds: Option<usize>,
    pub imsc_support_sizes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureRecord {
    pub trial: usize,
    pub algorithm: AlgorithmId,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: AlgorithmId,
    pub trials_ok: usize,
    pub failures: usize,
    pub mean_l2e: f64,
    pub mean_l1e: f64,
    pub mean_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkResults {
    pub schema: String,
    pub config: ExperimentConfig,
    /// Penalty weight of a fully developed (interior) column.
    pub lambda_interior: f64,
    pub trials: Vec<TrialRecord>,
    pub failures: Vec<FailureRecord>,
    pub summary: Vec<AlgorithmSummary>,
}

struct BaseSolution {
    x: DVector<f64>,
    imsc_rounds: Option<usize>,
    imsc_support_sizes: Option<Vec<usize>>,
}

fn run_base(
    alg: BaseAlgorithm,
    op: &LinearOperator,
    y: &DVector<f64>,
    lambda: &[f64],
    cfg: &ExperimentConfig,
) -> Result<BaseSolution> {
    let lp_lambda = cfg.lambda_override.unwrap_or(cfg.lp_lambda);
    let plain = |x: Vec<f64>| BaseSolution {
        x: DVector::from_vec(x),
        imsc_rounds: None,
        imsc_support_sizes: None,
    };
    match alg {
        BaseAlgorithm::L1 => {
            let p = ProblemSpec::new(
                op.clone(),
                y.clone(),
                lambda.to_vec(),
                PenaltyKind::Abs,
                vec![0.0; op.ncols()],
            )?;
            // Small lambda values (sweep territory) converge slowly;
            // iterations are cheap on the recursive-filter path.
            let opts = SolveOptions { max_iter: 30_000, ..Default::default() };
            Ok(plain(solve_penalized_ls(&p, &opts)?.x))
        }
        BaseAlgorithm::Irl2Lp => Ok(plain(
            solve_lp_irl2(op, y, lp_lambda, cfg.lp_exponent, &SolveOptions::default())?.x,
        )),
        BaseAlgorithm::Irl1Lp => Ok(plain(
            solve_lp_irl1(op, y, lp_lambda, cfg.lp_exponent, &SolveOptions::default())?.x,
        )),
        BaseAlgorithm::ImscLog | BaseAlgorithm::ImscAtan | BaseAlgorithm::ImscSAtan => {
            let icfg = ImscConfig {
                penalty: if alg == BaseAlgorithm::ImscLog {
                    PenaltyKind::Log
                } else {
                    PenaltyKind::Atan
                },
                bound_method: if alg == BaseAlgorithm::ImscSAtan {
                    BoundMethod::Simple
                } else {
                    BoundMethod::Sdp
                },
                support_eps: cfg.metric_eps,
                ..Default::default()
            };
            let (x, trace) = run_imsc(op, y, lambda, &icfg)?;
            Ok(BaseSolution {
                x,
                imsc_rounds: Some(trace.iterations.len()),
                imsc_support_sizes: Some(trace.support_sizes()),
            })
        }
    }
}

/// Run every configured algorithm on every trial. Individual failures are
/// recorded and excluded from the means rather than aborting the run.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<BenchmarkResults> {
    cfg.validate()?;
    let op = cfg.operator()?;
    let lambda = match cfg.lambda_override {
        Some(l) => vec![l; cfg.n],
        None => select_lambda(&op, cfg.sigma)?,
    };
    let lambda_interior = lambda[cfg.n / 2];

    let mut trials = Vec::new();
    let mut failures = Vec::new();
    let mut acc: HashMap<AlgorithmId, (usize, f64, f64, f64)> = HashMap::new();

    for t in 0..cfg.trials {
        let x_true = gen_sparse_spikes(cfg, t as u64);
        let y = gen_observation(&x_true, cfg, t as u64)?;
        let mut cache: HashMap<BaseAlgorithm, BaseSolution> = HashMap::new();

        for alg in &cfg.algorithms {
            let started = Instant::now();
            let outcome = (|| -> Result<(DVector<f64>, Option<usize>, Option<Vec<usize>>)> {
                if !cache.contains_key(&alg.base()) {
                    let sol = run_base(alg.base(), &op, &y, &lambda, cfg)?;
                    cache.insert(alg.base(), sol);
                }
                let base = &cache[&alg.base()];
                let x = if alg.debiased() {
                    debias(&op, &y, &support(&base.x, cfg.metric_eps))?
                } else {
                    base.x.clone()
                };
                Ok((x, base.imsc_rounds, base.imsc_support_sizes.clone()))
            })();
            let runtime = started.elapsed().as_secs_f64();
            match outcome {
                Ok((x_est, rounds, sizes)) => {
                    let mut metrics = compute_metrics(&x_true, &x_est, cfg.metric_eps)?;
                    metrics.runtime = runtime;
                    log::info!("trial {t} {alg}: l2e {:.4} ({runtime:.3}s)", metrics.l2e);
                    let e = acc.entry(*alg).or_insert((0, 0.0, 0.0, 0.0));
                    e.0 += 1;
                    e.1 += metrics.l2e;
                    e.2 += metrics.l1e;
                    e.3 += metrics.se as f64;
                    trials.push(TrialRecord {
                        trial: t,
                        algorithm: *alg,
                        metrics,
                        imsc_rounds: rounds,
                        imsc_support_sizes: sizes,
                    });
                }
                Err(err) => {
                    log::warn!("trial {t} {alg} failed: {err}");
                    failures.push(FailureRecord {
                        trial: t,
                        algorithm: *alg,
                        message: err.to_string(),
                    });
                }
            }
        }
    }

    let summary = cfg
        .algorithms
        .iter()
        .map(|alg| {
            let (ok, l2, l1, se) = acc.get(alg).copied().unwrap_or((0, 0.0, 0.0, 0.0));
            let d = ok.max(1) as f64;
            AlgorithmSummary {
                algorithm: *alg,
                trials_ok: ok,
                failures: failures.iter().filter(|f| f.algorithm == *alg).count(),
                mean_l2e: l2 / d,
                mean_l1e: l1 / d,
                mean_se: se / d,
            }
        })
        .collect();

    Ok(BenchmarkResults {
        schema: "msc-bench/1".into(),
        config: cfg.clone(),
        lambda_interior,
        trials,
        failures,
        summary,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub algorithm: AlgorithmId,
    pub trials_ok: usize,
    pub failures: usize,
    pub mean_l2e: f64,
    pub mean_l1e: f64,
    pub mean_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResults {
    pub schema: String,
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
}

/// Repeat the benchmark once per grid value with that uniform lambda
/// applied to every estimator.
pub fn lambda_sweep(cfg: &ExperimentConfig, grid: &[f64]) -> Result<SweepResults> {
    if grid.is_empty() {
        return Err(MscError::InvalidInput("lambda grid is empty".into()));
    }
    let mut rows = Vec::new();
    for &l in grid {
        let sub = ExperimentConfig { lambda_override: Some(l), ..cfg.clone() };
        let res = run_benchmark(&sub)?;
        for s in res.summary {
            rows.push(SweepRow {
                lambda: l,
                algorithm: s.algorithm,
                trials_ok: s.trials_ok,
                failures: s.failures,
                mean_l2e: s.mean_l2e,
                mean_l1e: s.mean_l1e,
                mean_se: s.mean_se,
            });
        }
    }
    Ok(SweepResults { schema: "msc-sweep/1".into(), config: cfg.clone(), rows })
}

/// Identity-operator denoising: add seeded noise to a clean signal and
/// apply one threshold function elementwise with threshold T (penalty
/// weight lambda = T; log/atan use their maximal non-convexity a = 1/T).
#[derive(Debug, Clone, Serialize)]
pub struct DenoiseReport {
    pub kind: PenaltyKind,
    pub threshold: f64,
    pub sigma: f64,
    pub noisy: Vec<f64>,
    pub denoised: Vec<f64>,
    pub rmse_noisy: f64,
    pub rmse_denoised: f64,
}

pub fn denoise_demo(
    clean: &DVector<f64>,
    sigma: f64,
    kind: PenaltyKind,
    threshold: f64,
    seed: u64,
) -> Result<DenoiseReport> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(MscError::ParameterDomain(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(MscError::ParameterDomain(format!(
            "threshold must be nonnegative, got {threshold}"
        )));
    }
    if clean.is_empty() {
        return Err(MscError::InvalidInput("signal is empty".into()));
    }
    let mut noise = GaussianStream::new(seed, 0, STREAM_NOISE);
    let noisy = DVector::from_fn(clean.len(), |i, _| clean[i] + sigma * noise.next());
    let denoised = if threshold == 0.0 {
        noisy.clone()
    } else {
        let pen = match kind {
            PenaltyKind::Abs => PenaltySpec::abs(),
            PenaltyKind::Hard => PenaltySpec::hard(),
            PenaltyKind::Log => PenaltySpec::log(1.0 / threshold)?,
            PenaltyKind::Atan => PenaltySpec::atan(1.0 / threshold)?,
            PenaltyKind::Lp => {
                return Err(MscError::Unsupported(
                    "lp has no closed threshold rule; use abs, hard, log or atan".into(),
                ))
            }
        };
        let mut out = DVector::zeros(clean.len());
        for i in 0..clean.len() {
            out[i] = pen.prox(noisy[i], threshold)?;
        }
        out
    };
    let rmse = |v: &DVector<f64>| ((v - clean).norm_squared() / clean.len() as f64).sqrt();
    Ok(DenoiseReport {
        kind,
        threshold,
        sigma,
        rmse_noisy: rmse(&noisy),
        rmse_denoised: rmse(&denoised),
        noisy: noisy.iter().copied().collect(),
        denoised: denoised.iter().copied().collect(),
    })
}

/// 17-significant-digit float formatting shared by the CSV emitters.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Summary table: one row per algorithm.
pub fn summary_csv(res: &BenchmarkResults) -> String {
    let mut s = String::from("algorithm,trials_ok,failures,mean_l2e,mean_l1e,mean_se\n");
    for row in &res.summary {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.algorithm,
            row.trials_ok,
            row.failures,
            fmt_float(row.mean_l2e),
            fmt_float(row.mean_l1e),
            fmt_float(row.mean_se)
        ));
    }
    s
}

/// Per-trial table: one row per (trial, algorithm).
pub fn trials_csv(res: &BenchmarkResults) -> String {
    let mut s = String::from("trial,algorithm,l2e,l1e,se,false_zeros,false_nonzeros\n");
    for r in &res.trials {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.trial,
            r.algorithm,
            fmt_float(r.metrics.l2e),
            fmt_float(r.metrics.l1e),
            r.metrics.se,
            r.metrics.false_zeros,
            r.metrics.false_nonzeros
        ));
    }
    s
}

/// Sweep table: one row per (lambda, algorithm).
pub fn sweep_csv(res: &SweepResults) -> String {
    let mut s =
        String::from("lambda,algorithm,trials_ok,failures,mean_l2e,mean_l1e,mean_se\n");
    for r in &res.rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_float(r.lambda),
            r.algorithm,
            r.trials_ok,
            r.failures,
            fmt_float(r.mean_l2e),
            fmt_float(r.mean_l1e),
            fmt_float(r.mean_se)
        ));
    }
    s
}
