//! Rényi relative entropy D_alpha(rho||sigma) = log2 Tr{rho^a sigma^(1-a)} / (a-1)
//! for a in (1, 2], the binary-flag divergence it reduces to after the
//! entanglement test, and the Rényi coherent information of the n-fold
//! erasure output against the fixed reference I_A (x) [N_p(pi)]^(x n).
//!
//! The second argument is any positive operator, not necessarily
//! normalized: the bounds are stated against I_A (x) sigma, which has
//! trace larger than one. If rho has weight outside the support of sigma
//! the divergence is +infinity; that is returned as `f64::INFINITY` so
//! downstream code cannot silently turn it into a finite exponent.

use crate::erasure::{self, ErasureParams};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::states::{check_alpha, DensityMatrix, PureState, SubsystemLayout};

/// Eigenvalues of sigma below this are treated as outside its support.
const SUPPORT_EPS: f64 = 1e-12;
/// Weight of rho on the null space of sigma above this triggers +infinity.
const MASS_EPS: f64 = 1e-10;
/// Eigenvalues below this are dropped before fractional powers.
const POWER_CLAMP: f64 = 1e-14;

/// Largest output dimension for which the direct (full-output) Rényi
/// coherent information is evaluated densely.
pub const MAX_DIRECT_DIM: usize = 4096;

struct EigPair {
    rho_vals: Vec<f64>,
    sigma_vals: Vec<f64>,
    /// |<u_j | v_k>|^2 overlaps between rho and sigma eigenvectors.
    overlaps: CMatrix,
}

fn eig_pair(rho: &DensityMatrix, sigma: &CMatrix) -> Result<EigPair> {
    if sigma.rows() != sigma.cols() {
        return Err(Error::argument("sigma must be square"));
    }
    if sigma.rows() != rho.side() {
        return Err(Error::argument(format!(
            "dimension mismatch: rho side {}, sigma side {}",
            rho.side(),
            sigma.rows()
        )));
    }
    if sigma.hermitian_defect() > 1e-9 {
        return Err(Error::argument("sigma is not Hermitian within 1e-9"));
    }
    let (rho_vals, rho_vecs) = rho.matrix().eigh()?;
    let (sigma_vals, sigma_vecs) = sigma.eigh()?;
    if let Some(&bad) = sigma_vals.iter().find(|&&s| s < -1e-9) {
        return Err(Error::argument(format!(
            "sigma has negative eigenvalue {bad:.3e}; not a positive operator"
        )));
    }
    let overlaps = rho_vecs.adjoint().matmul(&sigma_vecs);
    Ok(EigPair {
        rho_vals,
        sigma_vals,
        overlaps,
    })
}

/// D_alpha(rho || sigma) in bits; `sigma` is any positive operator.
/// Returns +infinity when rho is not supported inside sigma.
pub fn renyi_relative_entropy(rho: &DensityMatrix, sigma: &CMatrix, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let pair = eig_pair(rho, sigma)?;
    let n = pair.rho_vals.len();
    // mass of rho on the null space of sigma
    for k in 0..n {
        if pair.sigma_vals[k] >= SUPPORT_EPS {
            continue;
        }
        let mass: f64 = (0..n)
            .filter(|&j| pair.rho_vals[j] > MASS_EPS)
            .map(|j| pair.rho_vals[j] * pair.overlaps[(j, k)].norm_sqr())
            .sum();
        if mass > MASS_EPS {
            return Ok(f64::INFINITY);
        }
    }
    let mut trace_form = 0.0f64;
    for j in 0..n {
        let r = pair.rho_vals[j];
        if r <= POWER_CLAMP {
            continue;
        }
        let ra = r.powf(alpha);
        for k in 0..n {
            let s = pair.sigma_vals[k];
            if s < SUPPORT_EPS {
                continue;
            }
            trace_form += ra * s.powf(1.0 - alpha) * pair.overlaps[(j, k)].norm_sqr();
        }
    }
    if trace_form <= 0.0 {
        return Err(Error::numeric(
            "renyi trace form vanished; rho has no weight on the support of sigma",
        ));
    }
    Ok(trace_form.log2() / (alpha - 1.0))
}

/// Von Neumann relative entropy D(rho||sigma) in bits, from the same
/// eigendecomposition route as the Rényi form (used as the alpha -> 1 limit).
pub fn von_neumann_relative_entropy(rho: &DensityMatrix, sigma: &CMatrix) -> Result<f64> {
    let pair = eig_pair(rho, sigma)?;
    let n = pair.rho_vals.len();
    let mut acc = 0.0f64;
    for j in 0..n {
        let r = pair.rho_vals[j];
        if r <= POWER_CLAMP {
            continue;
        }
        acc += r * r.log2();
    }
    for k in 0..n {
        let s = pair.sigma_vals[k];
        let mass: f64 = (0..n)
            .map(|j| pair.rho_vals[j].max(0.0) * pair.overlaps[(j, k)].norm_sqr())
            .sum();
        if s < SUPPORT_EPS {
            if mass > MASS_EPS {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        acc -= mass * s.log2();
    }
    Ok(acc)
}

/// The two-point flag distribution rho_F = F|1><1| + (1-F)|0><0| paired with
/// the reference P_(1/M) = (1/M)|1><1| + (M - 1/M)|0><0|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryFlagDistribution {
    succ: f64,
    m: u64,
}

impl BinaryFlagDistribution {
    pub fn new(succ: f64, m: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&succ) {
            return Err(Error::argument(format!(
                "success weight {succ} outside [0, 1]"
            )));
        }
        if m < 2 {
            return Err(Error::argument(format!(
                "flag reference needs M >= 2, got {m}"
            )));
        }
        Ok(Self { succ, m })
    }

    pub fn succ(&self) -> f64 {
        self.succ
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn succ_ref(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn fail_ref(&self) -> f64 {
        self.m as f64 - 1.0 / self.m as f64
    }

    /// D_alpha(rho_F || P_(1/M)) via the closed form.
    pub fn divergence(&self, alpha: f64) -> Result<f64> {
        binary_flag_divergence(self.succ, self.m, alpha)
    }

    /// Explicit diagonal matrices (basis order |0>, |1>) for oracle checks.
    pub fn as_operators(&self) -> Result<(DensityMatrix, CMatrix)> {
        let layout = SubsystemLayout::new(vec![2])?;
        let rho = DensityMatrix::new(
            layout,
            CMatrix::from_real_diag(&[1.0 - self.succ, self.succ]),
        )?;
        let sigma = CMatrix::from_real_diag(&[self.fail_ref(), self.succ_ref()]);
        Ok((rho, sigma))
    }
}

/// Closed form for D_alpha(rho_F || P_(1/M)):
/// log2[ F^a (1/M)^(1-a) + (1-F)^a (M - 1/M)^(1-a) ] / (a - 1).
pub fn binary_flag_divergence(f: f64, m: u64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let flag = BinaryFlagDistribution::new(f, m)?;
    let pow = |x: f64, e: f64| if x <= 0.0 { 0.0 } else { x.powf(e) };
    let sum = pow(f, alpha) * flag.succ_ref().powf(1.0 - alpha)
        + pow(1.0 - f, alpha) * flag.fail_ref().powf(1.0 - alpha);
    Ok(sum.log2() / (alpha - 1.0))
}

/// D_alpha(N^(x n)(phi) || I_A (x) [N_p(pi)]^(x n)) by building the full
/// output density matrix and reference operator. The identity factor on A is
/// kept unnormalized, matching the bound's reference.
pub fn renyi_coherent_info_direct(
    psi: &PureState,
    params: &ErasureParams,
    n: usize,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let dims = psi.layout().dims();
    if dims.len() != n + 1 {
        return Err(Error::argument(format!(
            "state has {} channel factors, expected n = {n}",
            dims.len().saturating_sub(1)
        )));
    }
    let m = dims[0];
    let d = params.d();
    let out_dim = m.saturating_mul((d + 1).checked_pow(n as u32).unwrap_or(usize::MAX));
    if out_dim > MAX_DIRECT_DIM {
        return Err(Error::resource(
            "renyi-direct-dense",
            format!("output dimension {out_dim} exceeds {MAX_DIRECT_DIM}"),
        ));
    }
    let rho_out = erasure::channel_output(psi, params)?;
    let pi = DensityMatrix::maximally_mixed(SubsystemLayout::new(vec![d])?);
    let sigma_single = erasure::apply_erasure(&pi, params)?;
    let mut sigma = CMatrix::identity(m);
    for _ in 0..n {
        sigma = sigma.kron(sigma_single.matrix());
    }
    renyi_relative_entropy(&rho_out, &sigma, alpha)
}
