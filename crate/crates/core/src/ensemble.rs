//! Haar-ensemble Monte Carlo: per-code bound statistics, the empirical
//! operator-norm constant, Markov/Levy fraction audits, and the Lipschitz
//! check of the fidelity through a fixed decoder.
//!
//! Reproducibility contract: identical configs produce bit-identical
//! reports. Trials derive child seeds with [`crate::rng::child_seed`] and may
//! be evaluated on any number of threads; aggregation is pairwise summation
//! in trial order, so the thread count never changes a result.

use crate::bounds::{
    expected_fidelity_bound, fidelity_upper_bound, levy_tail, markov_tail, CodeParams,
    ConstantEstimates,
};
use crate::erasure::{channel_output, ErasureParams};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::oracle::optimal_code_fidelity;
use crate::renyi::renyi_coherent_info_direct;
use crate::rng::child_seed;
use crate::states::{
    check_alpha, fidelity_with_pure, haar_random_isometry, haar_random_pure, maximally_entangled,
    SubsystemLayout,
};

/// Configuration of one ensemble experiment.
#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub trials: usize,
    pub seed: u64,
    pub code: CodeParams,
    pub params: ErasureParams,
    pub alphas: Vec<f64>,
    pub with_oracle: bool,
    /// SDP tolerance when the oracle is enabled.
    pub oracle_tol: f64,
    /// Worker threads; aggregation is thread-count independent.
    pub threads: usize,
}

impl EnsembleConfig {
    pub fn new(
        trials: usize,
        seed: u64,
        code: CodeParams,
        params: ErasureParams,
        alphas: Vec<f64>,
    ) -> Result<Self> {
        let cfg = Self {
            trials,
            seed,
            code,
            params,
            alphas,
            with_oracle: false,
            oracle_tol: 1e-6,
            threads: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_oracle(mut self, tol: f64) -> Self {
        self.with_oracle = true;
        self.oracle_tol = tol;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::argument("ensemble needs at least one trial"));
        }
        if self.alphas.is_empty() {
            return Err(Error::argument("ensemble needs a nonempty alpha list"));
        }
        for &a in &self.alphas {
            check_alpha(a)?;
        }
        let m = self.code.require_m()?;
        SubsystemLayout::code_layout(m as usize, self.params.d(), self.code.n())?;
        Ok(())
    }

    fn layout(&self) -> Result<SubsystemLayout> {
        let m = self.code.require_m()? as usize;
        SubsystemLayout::code_layout(m, self.params.d(), self.code.n())
    }
}

/// Mean / standard error / extremes of one per-alpha statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats {
    pub mean: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

/// One CSV row of an ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub seed_child: u64,
    pub alpha: f64,
    pub bound_value: f64,
    pub oracle_fidelity: Option<f64>,
}

/// Aggregated ensemble results plus the raw per-trial rows.
#[derive(Debug, Clone)]
pub struct EnsembleReport {
    pub trials: usize,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub per_alpha: Vec<SampleStats>,
    pub oracle: Option<SampleStats>,
    pub rows: Vec<TrialRow>,
}

struct TrialResult {
    seed_child: u64,
    bounds: Vec<f64>,
    oracle_fidelity: Option<f64>,
}

fn run_trial(cfg: &EnsembleConfig, layout: &SubsystemLayout, trial: usize) -> Result<TrialResult> {
    let seed = child_seed(cfg.seed, trial as u64);
    let psi = haar_random_pure(layout, seed);
    let mut bounds = Vec::with_capacity(cfg.alphas.len());
    for &alpha in &cfg.alphas {
        bounds.push(fidelity_upper_bound(&psi, &cfg.code, &cfg.params, alpha)?.value);
    }
    let oracle_fidelity = if cfg.with_oracle {
        Some(optimal_code_fidelity(
            &psi,
            &cfg.code,
            &cfg.params,
            cfg.oracle_tol,
        )?)
    } else {
        None
    };
    Ok(TrialResult {
        seed_child: seed,
        bounds,
        oracle_fidelity,
    })
}

/// Pairwise summation in index order (Neumaier at the leaves).
fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for &t in values {
            let s = sum + t;
            if sum.abs() >= t.abs() {
                comp += (sum - s) + t;
            } else {
                comp += (t - s) + sum;
            }
            sum = s;
        }
        return sum + comp;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn stats_of(values: &[f64]) -> SampleStats {
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    let stderr = if n > 1 {
        let sq: Vec<f64> = values.iter().map(|&v| (v - mean) * (v - mean)).collect();
        (pairwise_sum(&sq) / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    } else {
        0.0
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    SampleStats {
        mean,
        stderr,
        min,
        max,
    }
}

/// Sample `cfg.trials` Haar code states and evaluate the per-code fidelity
/// bound at every requested alpha (and the SDP oracle fidelity when enabled).
pub fn run_code_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleReport> {
    cfg.validate()?;
    if cfg.with_oracle {
        // surface guard violations before spending any trials
        let probe = haar_random_pure(&cfg.layout()?, child_seed(cfg.seed, 0));
        optimal_code_fidelity(&probe, &cfg.code, &cfg.params, cfg.oracle_tol)?;
    }
    let layout = cfg.layout()?;
    let threads = cfg.threads.clamp(1, cfg.trials);
    let mut results: Vec<Option<Result<TrialResult>>> = Vec::new();
    results.resize_with(cfg.trials, || None);

    if threads == 1 {
        for (t, slot) in results.iter_mut().enumerate() {
            *slot = Some(run_trial(cfg, &layout, t));
        }
    } else {
        let chunk = cfg.trials.div_ceil(threads);
        std::thread::scope(|scope| {
            for (c, slots) in results.chunks_mut(chunk).enumerate() {
                let layout = &layout;
                scope.spawn(move || {
                    for (off, slot) in slots.iter_mut().enumerate() {
                        *slot = Some(run_trial(cfg, layout, c * chunk + off));
                    }
                });
            }
        });
    }

    let mut rows = Vec::with_capacity(cfg.trials * cfg.alphas.len());
    let mut per_alpha_values: Vec<Vec<f64>> =
        vec![Vec::with_capacity(cfg.trials); cfg.alphas.len()];
    let mut oracle_values: Vec<f64> = Vec::new();
    for (t, slot) in results.into_iter().enumerate() {
        let r = slot.expect("every trial filled")?;
        for (ai, &alpha) in cfg.alphas.iter().enumerate() {
            per_alpha_values[ai].push(r.bounds[ai]);
            rows.push(TrialRow {
                trial: t,
                seed_child: r.seed_child,
                alpha,
                bound_value: r.bounds[ai],
                oracle_fidelity: r.oracle_fidelity,
            });
        }
        if let Some(f) = r.oracle_fidelity {
            oracle_values.push(f);
        }
    }
    let per_alpha = per_alpha_values.iter().map(|v| stats_of(v)).collect();
    let oracle = if oracle_values.is_empty() {
        None
    } else {
        Some(stats_of(&oracle_values))
    };
    Ok(EnsembleReport {
        trials: cfg.trials,
        seed: cfg.seed,
        alphas: cfg.alphas.clone(),
        per_alpha,
        oracle,
        rows,
    })
}

/// Estimate the operator-norm constant C at one size: d_R times the
/// empirical mean of the largest eigenvalue of the d_R-marginal of a Haar
/// pure state on d_R (x) d_S.
pub fn estimate_opnorm_constant(d_r: usize, d_s: usize, trials: usize, seed: u64) -> Result<f64> {
    if d_r < 2 || d_s < 2 {
        return Err(Error::argument(
            "estimate_opnorm_constant needs d_R, d_S >= 2",
        ));
    }
    if d_r * d_s > 4096 {
        return Err(Error::resource(
            "opnorm-dense",
            format!("d_R * d_S = {} exceeds 4096", d_r * d_s),
        ));
    }
    if trials < 1 {
        return Err(Error::argument("estimate needs at least one trial"));
    }
    let layout = SubsystemLayout::new(vec![d_r, d_s])?;
    let mut lmax = Vec::with_capacity(trials);
    for t in 0..trials {
        let psi = haar_random_pure(&layout, child_seed(seed, t as u64));
        let spec = psi.reduced(&[0])?.spectrum()?;
        lmax.push(spec[0]);
    }
    Ok(d_r as f64 * pairwise_sum(&lmax) / trials as f64)
}

/// How the audited fidelity was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditMode {
    /// True optimal fidelity from the per-branch SDP oracle.
    Oracle,
    /// The per-code bound as a stand-in where the SDP is infeasible.
    BoundProxy,
}

/// One threshold row of the fraction audit.
#[derive(Debug, Clone)]
pub struct FractionRow {
    pub threshold: f64,
    pub fraction: f64,
    pub stderr_binom: f64,
    /// Markov prediction from the empirical mean, min(1, mean / tau).
    pub markov_empirical: f64,
    /// Markov prediction from the analytic expected-fidelity bound.
    pub markov_analytic: f64,
    /// Levy prediction at delta = clamp(tau - g, 0, 2).
    pub levy: f64,
}

/// Empirical tail fractions beside their Markov/Levy predictions.
#[derive(Debug, Clone)]
pub struct FractionAudit {
    pub mode: AuditMode,
    pub alpha: f64,
    pub mean: f64,
    /// The markov_tail point prediction (threshold, tail) at this alpha.
    pub markov_point: (f64, f64),
    pub rows: Vec<FractionRow>,
}

/// Fraction of codes with fidelity at or above each threshold, audited
/// against Markov and Levy predictions. Uses the oracle fidelity when the
/// config enables it, otherwise the first-alpha bound as a flagged proxy.
pub fn fraction_audit(
    cfg: &EnsembleConfig,
    thresholds: &[f64],
    consts: &ConstantEstimates,
) -> Result<FractionAudit> {
    if thresholds.is_empty() {
        return Err(Error::argument(
            "fraction audit needs at least one threshold",
        ));
    }
    for &t in thresholds {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::argument(format!("threshold {t} outside (0, 1]")));
        }
    }
    let report = run_code_ensemble(cfg)?;
    let alpha = cfg.alphas[0];
    let (mode, values): (AuditMode, Vec<f64>) = if cfg.with_oracle {
        (
            AuditMode::Oracle,
            report
                .rows
                .iter()
                .filter(|r| r.alpha == alpha)
                .map(|r| r.oracle_fidelity.expect("oracle enabled"))
                .collect(),
        )
    } else {
        (
            AuditMode::BoundProxy,
            report
                .rows
                .iter()
                .filter(|r| r.alpha == alpha)
                .map(|r| r.bound_value)
                .collect(),
        )
    };
    let mean = pairwise_sum(&values) / values.len() as f64;
    let expected = expected_fidelity_bound(&cfg.code, &cfg.params, alpha, consts)?;
    let g_unclamped = expected.components["unclamped"];
    let g = expected.value;
    let markov_point = markov_tail(&cfg.code, &cfg.params, alpha, consts)?;
    let n_trials = values.len() as f64;
    let mut rows = Vec::with_capacity(thresholds.len());
    for &tau in thresholds {
        let hits = values.iter().filter(|&&f| f >= tau).count();
        let fraction = hits as f64 / n_trials;
        let stderr_binom = (fraction * (1.0 - fraction) / n_trials).sqrt();
        let delta = (tau - g).clamp(0.0, 2.0);
        rows.push(FractionRow {
            threshold: tau,
            fraction,
            stderr_binom,
            markov_empirical: (mean / tau).min(1.0),
            markov_analytic: (g_unclamped / tau).min(1.0),
            levy: levy_tail(&cfg.code, cfg.params.d(), delta, consts)?,
        });
    }
    Ok(FractionAudit {
        mode,
        alpha,
        mean,
        markov_point,
        rows,
    })
}

/// Fidelity of a code state through one fixed decoder: the channel output is
/// pushed through the isometry `v`: B^n -> B-hat (x) E, the environment is
/// traced out, and the overlap with the maximally entangled target is taken.
/// `v` must have exactly m * env rows and (d+1)^n columns.
pub fn decoder_fidelity(
    psi: &crate::states::PureState,
    code: &CodeParams,
    params: &ErasureParams,
    v: &CMatrix,
) -> Result<f64> {
    let m = code.require_m()? as usize;
    let n = code.n();
    let b_dim = (params.d() + 1).pow(n as u32);
    if v.cols() != b_dim || !v.rows().is_multiple_of(m) || v.rows() < v.cols() {
        return Err(Error::argument(format!(
            "decoder isometry must map {b_dim} -> m*env, got {}x{}",
            v.rows(),
            v.cols()
        )));
    }
    let env = v.rows() / m;
    let rho_out = channel_output(psi, params)?;
    let w = CMatrix::identity(m).kron(v);
    let pushed = rho_out.matrix().conjugate_by(&w);
    let layout = SubsystemLayout::new(vec![m, m, env])?;
    let dm = crate::states::DensityMatrix::new(layout, pushed)?;
    let omega = dm.partial_trace(&[0, 1])?;
    fidelity_with_pure(&maximally_entangled(m)?, &omega)
}

/// Largest observed |F(phi1) - F(phi2)| / ||phi1 - phi2||_2 over Haar pairs,
/// with the fidelity taken through one fixed random decoder. Pairs closer
/// than 1e-12 are skipped.
pub fn lipschitz_audit(
    pairs: usize,
    code: &CodeParams,
    params: &ErasureParams,
    decoder_seed: u64,
    seed: u64,
) -> Result<f64> {
    if pairs < 1 {
        return Err(Error::argument("lipschitz audit needs at least one pair"));
    }
    let m = code.require_m()? as usize;
    let n = code.n();
    let d = params.d();
    let b_dim = (d + 1).pow(n as u32);
    let env = b_dim; // generous environment so the isometry always exists
    let v = haar_random_isometry(b_dim, m * env, decoder_seed)?;
    let layout = SubsystemLayout::code_layout(m, d, n)?;
    let mut max_ratio = 0.0f64;
    for i in 0..pairs {
        let phi1 = haar_random_pure(&layout, child_seed(seed, 2 * i as u64));
        let phi2 = haar_random_pure(&layout, child_seed(seed, 2 * i as u64 + 1));
        let dist: f64 = phi1
            .amplitudes()
            .iter()
            .zip(phi2.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if dist < 1e-12 {
            continue;
        }
        let f1 = decoder_fidelity(&phi1, code, params, &v)?;
        let f2 = decoder_fidelity(&phi2, code, params, &v)?;
        max_ratio = max_ratio.max((f1 - f2).abs() / dist);
    }
    Ok(max_ratio)
}

/// Data-only probe of the additivity question for the Rényi coherent
/// information: sampled maxima of (1/n) D_alpha at n = 1 and n = 2.
/// No claim is made relating the two numbers.
#[derive(Debug, Clone)]
pub struct AdditivityProbe {
    pub alpha: f64,
    pub trials: usize,
    pub max_rate_n1: f64,
    pub max_rate_n2: f64,
}

pub fn additivity_probe(
    params: &ErasureParams,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<AdditivityProbe> {
    check_alpha(alpha)?;
    if trials < 1 {
        return Err(Error::argument("probe needs at least one trial"));
    }
    let d = params.d();
    let mut best = [f64::NEG_INFINITY; 2];
    for (slot, n) in [(0usize, 1usize), (1, 2)] {
        let layout = SubsystemLayout::code_layout(d.pow(n as u32), d, n)?;
        for t in 0..trials {
            let psi = haar_random_pure(&layout, child_seed(seed.wrapping_add(n as u64), t as u64));
            let v = renyi_coherent_info_direct(&psi, params, n, alpha)?;
            best[slot] = best[slot].max(v / n as f64);
        }
    }
    Ok(AdditivityProbe {
        alpha,
        trials,
        max_rate_n1: best[0],
        max_rate_n2: best[1],
    })
}
