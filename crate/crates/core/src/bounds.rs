//! Closed-form strong-converse bounds: the per-code fidelity bound from the
//! pattern sum of marginal alpha-purities, the Haar-ensemble expected-fidelity
//! bound, exponent optimization over the Rényi order, Markov and Levy tail
//! bounds, and the classical success-probability bound.
//!
//! Conventions: rates and divergences are in bits; every probability-like
//! value is clamped to [0, 1] while the `exponent` field of a report keeps
//! the signed rate difference, value = min(1, 2^(-n ((a-1)/a) exponent)).

use std::collections::BTreeMap;

use crate::erasure::{ErasureParams, MAX_BRANCH_USES};
use crate::error::{Error, Result};
use crate::states::{check_alpha, marginal_purity, PureState};

/// Code parameters: n channel uses at nominal rate R, with M = floor(2^(nR))
/// clamped to at least 2 and the effective rate log2(M)/n.
///
/// When 2^(nR) has no exact 64-bit representation (n R >= 63) the integer M
/// is not materialized; the effective rate equals R, where the floor is the
/// identity at f64 precision. Operations that must lay out an M-dimensional
/// system reject such codes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeParams {
    n: usize,
    rate: f64,
    m: Option<u64>,
    rate_eff: f64,
}

impl CodeParams {
    pub fn new(n: usize, rate: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::argument("code needs n >= 1 channel uses"));
        }
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::argument(format!(
                "rate {rate} must be finite and >= 0"
            )));
        }
        let nr = n as f64 * rate;
        if nr < 63.0 {
            let m = (nr.exp2().floor() as u64).max(2);
            Ok(Self {
                n,
                rate,
                m: Some(m),
                rate_eff: (m as f64).log2() / n as f64,
            })
        } else {
            Ok(Self {
                n,
                rate,
                m: None,
                rate_eff: rate,
            })
        }
    }

    /// Code with an explicitly chosen M (rate = effective rate = log2(M)/n).
    pub fn from_m(n: usize, m: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::argument("code needs n >= 1 channel uses"));
        }
        if m < 2 {
            return Err(Error::argument(format!(
                "code dimension M = {m} must be >= 2"
            )));
        }
        let rate = (m as f64).log2() / n as f64;
        Ok(Self {
            n,
            rate,
            m: Some(m),
            rate_eff: rate,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn rate_eff(&self) -> f64 {
        self.rate_eff
    }

    pub fn m(&self) -> Option<u64> {
        self.m
    }

    /// The materialized code dimension, or a guard error for huge codes.
    pub fn require_m(&self) -> Result<u64> {
        self.m.ok_or_else(|| {
            Error::resource(
                "code-dimension",
                format!(
                    "M = 2^({} * {}) has no exact integer representation",
                    self.n, self.rate
                ),
            )
        })
    }
}

/// The two unspecified universal constants: C from the operator-norm
/// estimate and c from Levy's lemma. Both default to 1 and may be
/// overridden, e.g. with the empirical estimate from the ensemble module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEstimates {
    opnorm: f64,
    levy: f64,
}

impl Default for ConstantEstimates {
    fn default() -> Self {
        Self {
            opnorm: 1.0,
            levy: 1.0,
        }
    }
}

impl ConstantEstimates {
    pub fn new(opnorm: f64, levy: f64) -> Result<Self> {
        if !(opnorm > 0.0 && levy > 0.0) || !opnorm.is_finite() || !levy.is_finite() {
            return Err(Error::argument("constants C and c must be positive"));
        }
        Ok(Self { opnorm, levy })
    }

    pub fn opnorm(&self) -> f64 {
        self.opnorm
    }

    pub fn levy(&self) -> f64 {
        self.levy
    }
}

/// One evaluated bound: the clamped probability `value`, the signed rate
/// difference `exponent` with value = min(1, 2^(-n ((a-1)/a) exponent)),
/// and named intermediate terms.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub alpha: f64,
    pub value: f64,
    pub exponent: f64,
    pub components: BTreeMap<String, f64>,
}

/// Exponent profile over the alpha grid.
#[derive(Debug, Clone)]
pub struct ExponentProfile {
    pub alphas: Vec<f64>,
    pub exponents: Vec<f64>,
    pub best_alpha: f64,
    pub best_exponent: f64,
}

/// Neumaier-compensated sum in a fixed order.
fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// Pattern sum over all 2^n erasure patterns:
/// Sum_i [(1-p) d^(a-1)]^(n-|i|) p^|i| Tr{[phi_(A^i)]^a}.
fn pattern_sum(psi: &PureState, params: &ErasureParams, alpha: f64) -> Result<f64> {
    let dims = psi.layout().dims();
    if dims.len() < 2 || dims[1..].iter().any(|&d| d != params.d()) {
        return Err(Error::argument(
            "pattern sum needs a code layout [M, d, ..., d] matching the channel",
        ));
    }
    let n = dims.len() - 1;
    if n > MAX_BRANCH_USES {
        return Err(Error::resource(
            "branch-enumeration",
            format!("n = {n} exceeds {MAX_BRANCH_USES} (2^n patterns)"),
        ));
    }
    let survive_factor = (1.0 - params.p()) * (params.d() as f64).powf(alpha - 1.0);
    let p = params.p();
    let mut terms = Vec::with_capacity(1usize << n);
    for bits in 0..(1u64 << n) {
        let k = bits.count_ones() as i32;
        let coeff = survive_factor.powi(n as i32 - k) * p.powi(k);
        if coeff == 0.0 {
            terms.push(0.0);
            continue;
        }
        let erased: Vec<usize> = (0..n)
            .filter(|&j| (bits >> j) & 1 == 1)
            .map(|j| j + 1)
            .collect();
        let purity = marginal_purity(psi, &erased, alpha)?;
        terms.push(coeff * purity);
    }
    Ok(compensated_sum(terms))
}

/// The Rényi divergence of the n-fold erasure output against the fixed
/// reference, evaluated through the closed-form pattern sum:
/// (1/(a-1)) log2 Sum_i [(1-p) d^(a-1)]^(n-|i|) p^|i| Tr{[phi_(A^i)]^a}.
pub fn erasure_renyi_closed_form(
    psi: &PureState,
    params: &ErasureParams,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let s = pattern_sum(psi, params, alpha)?;
    if s <= 0.0 {
        return Err(Error::numeric("pattern sum vanished"));
    }
    Ok(s.log2() / (alpha - 1.0))
}

/// Per-code fidelity bound:
/// F <= min(1, 2^(-n ((a-1)/a) R_eff) * [pattern sum]^(1/a)).
pub fn fidelity_upper_bound(
    psi: &PureState,
    code: &CodeParams,
    params: &ErasureParams,
    alpha: f64,
) -> Result<BoundReport> {
    check_alpha(alpha)?;
    let dims = psi.layout().dims();
    let m = code.require_m()?;
    if dims[0] as u64 != m {
        return Err(Error::argument(format!(
            "state reference dimension {} does not match code M = {m}",
            dims[0]
        )));
    }
    if dims.len() != code.n() + 1 {
        return Err(Error::argument(format!(
            "state has {} channel factors, code has n = {}",
            dims.len() - 1,
            code.n()
        )));
    }
    let n = code.n() as f64;
    let s = pattern_sum(psi, params, alpha)?;
    if s <= 0.0 {
        return Err(Error::numeric("pattern sum vanished"));
    }
    let divergence = s.log2() / (alpha - 1.0);
    let exponent = code.rate_eff() - divergence / n;
    let raw = (-n * ((alpha - 1.0) / alpha) * exponent).exp2();
    let mut components = BTreeMap::new();
    components.insert("pattern_sum".into(), s);
    components.insert("renyi_closed_form".into(), divergence);
    components.insert("rate_eff".into(), code.rate_eff());
    components.insert("unclamped".into(), raw);
    Ok(BoundReport {
        alpha,
        value: raw.min(1.0),
        exponent,
        components,
    })
}

/// g(a) = (1/(a-1)) log2[(1-p) d^(a-1) + d^(1-a) p]; converges to the
/// quantum capacity (1-2p) log2 d as a -> 1 (signed, not clamped).
pub fn renyi_capacity_term(params: &ErasureParams, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let d = params.d() as f64;
    let p = params.p();
    let inner = (1.0 - p) * d.powf(alpha - 1.0) + d.powf(1.0 - alpha) * p;
    Ok(inner.log2() / (alpha - 1.0))
}

/// Ensemble expected-fidelity bound
/// 2^(-n ((a-1)/a) (R_eff - g(a) - (a/n) log2 C)), clamped to [0, 1].
pub fn expected_fidelity_bound(
    code: &CodeParams,
    params: &ErasureParams,
    alpha: f64,
    consts: &ConstantEstimates,
) -> Result<BoundReport> {
    check_alpha(alpha)?;
    let n = code.n() as f64;
    let g = renyi_capacity_term(params, alpha)?;
    let c_term = alpha / n * consts.opnorm().log2();
    let exponent = code.rate_eff() - g - c_term;
    let raw = (-n * ((alpha - 1.0) / alpha) * exponent).exp2();
    let mut components = BTreeMap::new();
    components.insert("g_alpha".into(), g);
    components.insert("log2_c_term".into(), c_term);
    components.insert("rate_eff".into(), code.rate_eff());
    components.insert("unclamped".into(), raw);
    Ok(BoundReport {
        alpha,
        value: raw.min(1.0),
        exponent,
        components,
    })
}

/// E(a) = ((a-1)/a)(R_eff - g(a) - (a/n) log2 C), maximized over a geometric
/// grid of a-1 in [1e-4, 1] refined by golden-section to 1e-6 in alpha.
/// Negative best exponents are reported as-is.
pub fn optimize_exponent(
    code: &CodeParams,
    params: &ErasureParams,
    consts: &ConstantEstimates,
    grid_size: usize,
) -> Result<ExponentProfile> {
    if grid_size < 16 {
        return Err(Error::argument(format!(
            "grid size {grid_size} must be >= 16"
        )));
    }
    let n = code.n() as f64;
    let rate = code.rate_eff();
    let log2_c = consts.opnorm().log2();
    let d = params.d() as f64;
    let p = params.p();
    let exponent_at = |alpha: f64| -> f64 {
        let g = ((1.0 - p) * d.powf(alpha - 1.0) + d.powf(1.0 - alpha) * p).log2() / (alpha - 1.0);
        (alpha - 1.0) / alpha * (rate - g - alpha / n * log2_c)
    };

    let mut alphas = Vec::with_capacity(grid_size);
    let mut exponents = Vec::with_capacity(grid_size);
    for i in 0..grid_size {
        let t = 1e-4 * 1e4f64.powf(i as f64 / (grid_size - 1) as f64);
        let alpha = 1.0 + t;
        alphas.push(alpha);
        exponents.push(exponent_at(alpha));
    }
    let mut best_idx = 0usize;
    for (i, &e) in exponents.iter().enumerate() {
        if e > exponents[best_idx] {
            best_idx = i;
        }
    }

    // golden-section refinement inside the bracketing cells
    let lo = alphas[best_idx.saturating_sub(1)];
    let hi = alphas[(best_idx + 1).min(grid_size - 1)];
    let (mut a, mut b) = (lo, hi);
    let inv_phi = 0.618_033_988_749_894_8;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = exponent_at(x1);
    let mut f2 = exponent_at(x2);
    while b - a > 1e-6 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = exponent_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = exponent_at(x2);
        }
    }
    let refined_alpha = 0.5 * (a + b);
    let refined = exponent_at(refined_alpha);

    let (best_alpha, best_exponent) = if refined > exponents[best_idx] {
        (refined_alpha, refined)
    } else {
        (alphas[best_idx], exponents[best_idx])
    };
    Ok(ExponentProfile {
        alphas,
        exponents,
        best_alpha,
        best_exponent,
    })
}

/// Markov tail: with G the unclamped expected-fidelity bound,
/// Pr{F > sqrt(G)} <= sqrt(G). Returns (threshold, tail), both in [0, 1].
pub fn markov_tail(
    code: &CodeParams,
    params: &ErasureParams,
    alpha: f64,
    consts: &ConstantEstimates,
) -> Result<(f64, f64)> {
    let report = expected_fidelity_bound(code, params, alpha, consts)?;
    let g = report.components["unclamped"];
    let root = g.sqrt().min(1.0);
    Ok((root, root))
}

/// Levy tail 4 exp{-2^(n [R_eff + log2 d]) delta^2 / (2c)}, clamped to [0,1].
/// The Lipschitz constant of the fidelity is 2, so delta must be in [0, 2].
pub fn levy_tail(
    code: &CodeParams,
    d: usize,
    delta: f64,
    consts: &ConstantEstimates,
) -> Result<f64> {
    if d < 2 {
        return Err(Error::argument("levy_tail needs d >= 2"));
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::argument(format!("delta {delta} must be >= 0")));
    }
    if delta > 2.0 {
        return Err(Error::argument(format!(
            "delta {delta} exceeds the fidelity Lipschitz constant 2"
        )));
    }
    let n = code.n() as f64;
    let dim = (n * (code.rate_eff() + (d as f64).log2())).exp2();
    let tail = 4.0 * (-dim * delta * delta / (2.0 * consts.levy())).exp();
    Ok(tail.min(1.0))
}

/// Single-letter classical term (1/(a-1)) log2[(1-p) d^(a-1) + p];
/// converges to the classical capacity (1-p) log2 d as a -> 1.
pub fn classical_renyi_term(params: &ErasureParams, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let d = params.d() as f64;
    let p = params.p();
    let inner = (1.0 - p) * d.powf(alpha - 1.0) + p;
    Ok(inner.log2() / (alpha - 1.0))
}

/// Success-probability bound for classical messages:
/// min(1, 2^(-n ((a-1)/a)(R_eff - classical term))).
pub fn classical_success_bound(
    code: &CodeParams,
    params: &ErasureParams,
    alpha: f64,
) -> Result<BoundReport> {
    check_alpha(alpha)?;
    let n = code.n() as f64;
    let term = classical_renyi_term(params, alpha)?;
    let exponent = code.rate_eff() - term;
    let raw = (-n * ((alpha - 1.0) / alpha) * exponent).exp2();
    let mut components = BTreeMap::new();
    components.insert("classical_renyi_term".into(), term);
    components.insert("rate_eff".into(), code.rate_eff());
    components.insert("unclamped".into(), raw);
    Ok(BoundReport {
        alpha,
        value: raw.min(1.0),
        exponent,
        components,
    })
}
