//! Ground-truth optimal decoder.
//!
//! The maximal entanglement-generation fidelity of a joint state rho_{AB}
//! over all decoding channels B -> B-hat is the linear semidefinite program
//! max Tr{J X} over J >= 0 with Tr_out(J) = I_in, where J is the decoder's
//! Choi operator on (out x in) and X = rho^T / m.
//! It is solved by a first-order primal-dual scheme (PDHG): PSD projection
//! by eigenvalue clipping against the trace-preservation affine constraint.
//! Termination is by certified duality gap: the primal candidate is made
//! exactly trace-preserving by a W^(-1/2) congruence, the dual candidate
//! Z' = Z + max(0, lmax(X - I (x) Z)) I is exactly feasible, so the reported
//! optimum always carries a machine-verifiable two-sided certificate.

use num_complex::Complex64;

use crate::bounds::CodeParams;
use crate::erasure::{branch_decompose, ErasureParams};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::states::DensityMatrix;
use crate::states::PureState;

/// Dense guard on the joint dimension of an SDP instance.
pub const MAX_SDP_DIM: usize = 256;
/// Iteration cap for the primal-dual scheme.
pub const SDP_ITERATION_CAP: usize = 100_000;
const CHECK_EVERY: usize = 25;

/// A decoder in Choi form on (out x in), trace-preserving in the sense
/// Tr_out(J) = I_in.
#[derive(Debug, Clone)]
pub struct ChoiOperator {
    mat: CMatrix,
    out_dim: usize,
    in_dim: usize,
}

impl ChoiOperator {
    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    /// Check Hermitian PSD and the trace-preservation marginal within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.mat.hermitian_defect() > tol {
            return Err(Error::invariant("choi operator not Hermitian"));
        }
        let (vals, _) = self.mat.eigh()?;
        if let Some(&min) = vals.first() {
            if min < -tol {
                return Err(Error::invariant(format!(
                    "choi operator has negative eigenvalue {min:.3e}"
                )));
            }
        }
        let w = ptrace_out(&self.mat, self.out_dim, self.in_dim);
        if w.max_abs_diff(&CMatrix::identity(self.in_dim)) > tol {
            return Err(Error::invariant(
                "choi operator partial trace deviates from the identity",
            ));
        }
        Ok(())
    }
}

/// Solved SDP instance with its two-sided certificate.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Value achieved by the feasible primal candidate (a true lower bound).
    pub primal: f64,
    /// Value of the feasible dual candidate (a true upper bound).
    pub dual: f64,
    pub iterations: usize,
    pub choi: ChoiOperator,
}

impl SdpSolution {
    pub fn gap(&self) -> f64 {
        self.dual - self.primal
    }
}

fn ptrace_out(j: &CMatrix, out_dim: usize, in_dim: usize) -> CMatrix {
    let mut z = CMatrix::zeros(in_dim, in_dim);
    for a in 0..out_dim {
        for i in 0..in_dim {
            for k in 0..in_dim {
                z[(i, k)] += j[(a * in_dim + i, a * in_dim + k)];
            }
        }
    }
    z
}

fn kron_identity_left(z: &CMatrix, out_dim: usize) -> CMatrix {
    let n = z.rows();
    let mut out = CMatrix::zeros(out_dim * n, out_dim * n);
    for a in 0..out_dim {
        for i in 0..n {
            for k in 0..n {
                out[(a * n + i, a * n + k)] = z[(i, k)];
            }
        }
    }
    out
}

fn psd_project(h: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = h.hermitize().eigh()?;
    let n = vals.len();
    // V diag(max(vals, 0)) V†
    let mut scaled = vecs.clone();
    for j in 0..n {
        let w = vals[j].max(0.0);
        for i in 0..n {
            scaled[(i, j)] *= w;
        }
    }
    Ok(scaled.matmul(&vecs.adjoint()))
}

fn lambda_max(h: &CMatrix) -> Result<f64> {
    let (vals, _) = h.hermitize().eigh()?;
    Ok(*vals.last().expect("nonempty spectrum"))
}

/// Rescale an approximately trace-preserving PSD iterate to an exactly
/// feasible Choi operator.
fn feasible_choi(j: &CMatrix, out_dim: usize, in_dim: usize) -> Result<CMatrix> {
    let w = ptrace_out(j, out_dim, in_dim);
    let (vals, vecs) = w.hermitize().eigh()?;
    let n = in_dim;
    let mut inv_sqrt = vecs.clone();
    let mut kernel = CMatrix::zeros(n, n);
    for col in 0..n {
        if vals[col] > 1e-12 {
            let s = 1.0 / vals[col].sqrt();
            for row in 0..n {
                inv_sqrt[(row, col)] *= s;
            }
        } else {
            for row in 0..n {
                let v = vecs[(row, col)];
                inv_sqrt[(row, col)] = Complex64::new(0.0, 0.0);
                for row2 in 0..n {
                    kernel[(row, row2)] += v * vecs[(row2, col)].conj();
                }
            }
        }
    }
    let wi = inv_sqrt.matmul(&vecs.adjoint());
    let wi_full = kron_identity_left(&wi, out_dim);
    let mut feas = wi_full.matmul(j).matmul(&wi_full.adjoint());
    if kernel.frobenius_norm() > 0.0 {
        let fill = kron_identity_left(&kernel.scale(1.0 / out_dim as f64), out_dim);
        feas = feas.add(&fill);
    }
    Ok(feas.hermitize())
}

/// Maximize Tr{J X} over Choi operators J on (out x in).
pub fn solve_decoder_sdp(
    x: &CMatrix,
    out_dim: usize,
    in_dim: usize,
    tol: f64,
) -> Result<SdpSolution> {
    if x.rows() != out_dim * in_dim || x.cols() != x.rows() {
        return Err(Error::argument("sdp objective has wrong dimensions"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::argument("sdp tolerance must be positive"));
    }
    let side = out_dim * in_dim;
    if side > MAX_SDP_DIM {
        return Err(Error::resource(
            "sdp-dimension",
            format!("choi dimension {side} exceeds {MAX_SDP_DIM}"),
        ));
    }
    let identity_in = CMatrix::identity(in_dim);
    // fixed maximally mixed Choi start
    let mut j = CMatrix::identity(side).scale(1.0 / out_dim as f64);
    let mut jbar = j.clone();
    let mut z = ptrace_out(x, out_dim, in_dim).hermitize();
    let step = 0.99 / (out_dim as f64).sqrt();

    let mut best_primal = f64::NEG_INFINITY;
    let mut best_dual = f64::INFINITY;
    let mut best_choi = feasible_choi(&j, out_dim, in_dim)?;

    for it in 1..=SDP_ITERATION_CAP {
        let residual = ptrace_out(&jbar, out_dim, in_dim).sub(&identity_in);
        z = z.add(&residual.scale(step));
        let ascent = x.sub(&kron_identity_left(&z, out_dim));
        let jn = psd_project(&j.add(&ascent.scale(step)))?;
        jbar = jn.scale(2.0).sub(&j);
        j = jn;

        if it % CHECK_EVERY == 0 || it == SDP_ITERATION_CAP {
            let feas = feasible_choi(&j, out_dim, in_dim)?;
            let primal = feas.inner_re(x);
            if primal > best_primal {
                best_primal = primal;
                best_choi = feas;
            }
            let zs = z.hermitize();
            let slack = lambda_max(&x.sub(&kron_identity_left(&zs, out_dim)))?;
            let dual = zs.trace().re + in_dim as f64 * slack.max(0.0);
            best_dual = best_dual.min(dual);
            if best_dual - best_primal <= tol {
                return Ok(SdpSolution {
                    primal: best_primal,
                    dual: best_dual,
                    iterations: it,
                    choi: ChoiOperator {
                        mat: best_choi,
                        out_dim,
                        in_dim,
                    },
                });
            }
        }
    }
    Err(Error::SdpStalled {
        primal: best_primal,
        dual: best_dual,
    })
}

/// Exact maximal entanglement fidelity of `joint` (first factor of dimension
/// m) over all decoding channels on the remaining factors, to absolute
/// accuracy `tol`; the returned value is the certified primal.
pub fn max_entanglement_fidelity(joint: &DensityMatrix, m: usize, tol: f64) -> Result<f64> {
    Ok(solve_max_entanglement(joint, m, tol)?.primal)
}

/// As [`max_entanglement_fidelity`] but returning the full certificate.
pub fn solve_max_entanglement(joint: &DensityMatrix, m: usize, tol: f64) -> Result<SdpSolution> {
    if m < 2 {
        return Err(Error::argument(
            "target entanglement dimension m must be >= 2",
        ));
    }
    let dims = joint.layout().dims();
    if dims.is_empty() || dims[0] != m {
        return Err(Error::argument(format!(
            "joint state's first factor {:?} must have dimension m = {m}",
            dims.first()
        )));
    }
    let total = joint.side();
    if total > MAX_SDP_DIM {
        return Err(Error::resource(
            "sdp-dimension",
            format!("joint dimension {total} exceeds {MAX_SDP_DIM}"),
        ));
    }
    let in_dim = total / m;
    let x = joint.matrix().transpose().scale(1.0 / m as f64);
    solve_decoder_sdp(&x, m, in_dim, tol)
}

/// Closed form for the optimum on a pure branch with Schmidt spectrum
/// `schmidt`: (1/m) (sum of the m largest sqrt(lambda_j))^2.
pub fn pure_branch_fidelity(schmidt: &[f64], m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::argument("pure branch fidelity needs m >= 2"));
    }
    if schmidt.is_empty() {
        return Err(Error::argument("empty spectrum"));
    }
    if let Some(&bad) = schmidt.iter().find(|&&l| l < -1e-10 || !l.is_finite()) {
        return Err(Error::argument(format!("malformed spectrum entry {bad}")));
    }
    let sum: f64 = schmidt.iter().sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(Error::argument(format!(
            "spectrum sums to {sum}, expected 1 within 1e-10"
        )));
    }
    let mut sorted: Vec<f64> = schmidt.iter().map(|&l| l.max(0.0)).collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let root_sum: f64 = sorted.iter().take(m).map(|&l| l.sqrt()).sum();
    Ok((root_sum * root_sum / m as f64).clamp(0.0, 1.0))
}

/// Exact optimal entanglement-generation fidelity of a code state: the
/// erasure flags are perfectly distinguishable, so the optimal decoder
/// conditions on the pattern and the optimum is the probability-weighted sum
/// of per-branch SDP optima. (That reduction is itself validated against a
/// global SDP over the full output in the test suite.)
pub fn optimal_code_fidelity(
    psi: &PureState,
    code: &CodeParams,
    params: &ErasureParams,
    tol: f64,
) -> Result<f64> {
    let m = code.require_m()? as usize;
    if code.n() > 3 {
        return Err(Error::resource(
            "oracle-uses",
            format!("n = {} exceeds the SDP guard n <= 3", code.n()),
        ));
    }
    if params.d() != 2 {
        return Err(Error::resource(
            "oracle-dimension",
            format!("d = {} outside the SDP guard d = 2", params.d()),
        ));
    }
    if m > 8 {
        return Err(Error::resource(
            "oracle-code-dim",
            format!("M = {m} exceeds the SDP guard M <= 8"),
        ));
    }
    let dims = psi.layout().dims();
    if dims[0] != m || dims.len() != code.n() + 1 {
        return Err(Error::argument(
            "state layout does not match the code parameters",
        ));
    }
    let branches = branch_decompose(psi, params)?;
    let mut total = 0.0f64;
    for entry in branches.entries() {
        if entry.probability == 0.0 {
            continue;
        }
        total += entry.probability * max_entanglement_fidelity(&entry.state, m, tol)?;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Exact optimal success probability for M equiprobable classical messages
/// over n erasure uses: exhaustive search over codebooks of distinct
/// classical codewords, with maximum-likelihood decoding evaluated per
/// erasure pattern (the decoder sees which positions were erased and groups
/// codewords by their surviving symbols).
pub fn optimal_classical_success(code: &CodeParams, params: &ErasureParams) -> Result<f64> {
    let m = code.require_m()? as usize;
    let n = code.n();
    let d = params.d();
    if n > 3 {
        return Err(Error::resource(
            "classical-oracle-uses",
            format!("n = {n} exceeds the exhaustive guard n <= 3"),
        ));
    }
    if m > 8 {
        return Err(Error::resource(
            "classical-oracle-messages",
            format!("M = {m} exceeds the exhaustive guard M <= 8"),
        ));
    }
    let strings = d.checked_pow(n as u32).unwrap_or(usize::MAX);
    if m > strings {
        return Err(Error::argument(format!(
            "cannot place {m} distinct codewords into {strings} strings"
        )));
    }
    let n_codebooks = binomial(strings, m);
    if n_codebooks > 1_000_000 {
        return Err(Error::resource(
            "classical-oracle-search",
            format!("{n_codebooks} codebooks exceed the exhaustive search cap"),
        ));
    }

    // digits of every string, most significant position first
    let digits: Vec<Vec<usize>> = (0..strings)
        .map(|s| {
            let mut rem = s;
            let mut ds = vec![0usize; n];
            for pos in (0..n).rev() {
                ds[pos] = rem % d;
                rem /= d;
            }
            ds
        })
        .collect();

    let mut best = 0.0f64;
    let mut codebook: Vec<usize> = (0..m).collect();
    loop {
        let mut succ = 0.0f64;
        for bits in 0..(1u32 << n) {
            let k = bits.count_ones() as i32;
            let prob = (1.0 - params.p()).powi(n as i32 - k) * params.p().powi(k);
            if prob == 0.0 {
                continue;
            }
            let surviving: Vec<usize> = (0..n).filter(|&j| (bits >> j) & 1 == 0).collect();
            let mut keys: Vec<Vec<usize>> = codebook
                .iter()
                .map(|&c| surviving.iter().map(|&j| digits[c][j]).collect())
                .collect();
            keys.sort();
            keys.dedup();
            succ += prob * keys.len() as f64 / m as f64;
        }
        best = best.max(succ);
        if !next_combination(&mut codebook, strings) {
            break;
        }
    }
    Ok(best)
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] != i + n - k {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
