//! The quantum erasure channel: single-use action, n-fold output, the
//! orthogonal-flag branch decomposition, and capacity formulas.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::states::{DensityMatrix, PureState, SubsystemLayout};

/// Largest number of channel uses for which the 2^n branches are enumerated.
pub const MAX_BRANCH_USES: usize = 20;

/// Erasure probability and input dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasureParams {
    p: f64,
    d: usize,
}

impl ErasureParams {
    pub fn new(p: f64, d: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::argument(format!(
                "erasure probability {p} outside [0, 1]"
            )));
        }
        if d < 2 {
            return Err(Error::argument(format!("input dimension {d} must be >= 2")));
        }
        Ok(Self { p, d })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Parameters of the complementary channel (the map to the environment):
    /// an erasure channel with probability 1 - p.
    pub fn complementary(&self) -> Self {
        Self {
            p: 1.0 - self.p,
            d: self.d,
        }
    }
}

/// Quantum capacity max(0, (1-2p) log2 d) in bits per use.
pub fn quantum_capacity(params: &ErasureParams) -> f64 {
    ((1.0 - 2.0 * params.p) * (params.d as f64).log2()).max(0.0)
}

/// Classical capacity (1-p) log2 d in bits per use.
pub fn classical_capacity(params: &ErasureParams) -> f64 {
    (1.0 - params.p) * (params.d as f64).log2()
}

/// One channel use on a single d-dimensional system: the input survives in
/// the first d basis states with weight 1-p, and the extra basis state d
/// carries the erasure flag with weight p.
pub fn apply_erasure(rho: &DensityMatrix, params: &ErasureParams) -> Result<DensityMatrix> {
    let d = params.d;
    if rho.side() != d {
        return Err(Error::argument(format!(
            "apply_erasure: state side {} does not match channel dimension {}",
            rho.side(),
            d
        )));
    }
    let mut out = CMatrix::zeros(d + 1, d + 1);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = rho.matrix()[(i, j)] * (1.0 - params.p);
        }
    }
    out[(d, d)] = Complex64::new(params.p, 0.0);
    DensityMatrix::new(SubsystemLayout::new(vec![d + 1])?, out)
}

/// Binary erasure pattern over n channel uses; bit j set means use j erased.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErasurePattern {
    bits: u32,
    n: usize,
}

impl ErasurePattern {
    pub fn new(bits: u32, n: usize) -> Result<Self> {
        if n > MAX_BRANCH_USES {
            return Err(Error::resource(
                "branch-enumeration",
                format!("pattern length {n} exceeds {MAX_BRANCH_USES}"),
            ));
        }
        if n < 32 && bits >= (1u32 << n) {
            return Err(Error::argument(format!(
                "pattern bits {bits:#b} do not fit in {n} uses"
            )));
        }
        Ok(Self { bits, n })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// |i|, the number of erased uses.
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_erased(&self, use_idx: usize) -> bool {
        (self.bits >> use_idx) & 1 == 1
    }

    /// Channel-use indices (0-based) that are erased.
    pub fn erased_uses(&self) -> Vec<usize> {
        (0..self.n).filter(|&j| self.is_erased(j)).collect()
    }

    /// Probability (1-p)^(n-|i|) p^|i| of this pattern.
    pub fn probability(&self, params: &ErasureParams) -> f64 {
        let k = self.weight() as i32;
        (1.0 - params.p).powi(self.n as i32 - k) * params.p.powi(k)
    }
}

/// One branch of the n-fold erasure output: the pattern, its probability,
/// and the post-erasure state on A tensor the surviving inputs.
#[derive(Debug, Clone)]
pub struct BranchEntry {
    pub pattern: ErasurePattern,
    pub probability: f64,
    pub state: DensityMatrix,
}

/// All 2^n branches of the n-fold erasure output of a code state, ordered by
/// the integer value of the pattern bits.
#[derive(Debug, Clone)]
pub struct BranchDecomposition {
    entries: Vec<BranchEntry>,
    m: usize,
    d: usize,
    n: usize,
}

impl BranchDecomposition {
    pub fn entries(&self) -> &[BranchEntry] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn code_dim(&self) -> usize {
        self.m
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }
}

fn check_code_layout(psi: &PureState, params: &ErasureParams) -> Result<(usize, usize)> {
    let dims = psi.layout().dims();
    if dims.len() < 2 {
        return Err(Error::argument(
            "code state needs layout [M, d, ..., d] with at least one channel input",
        ));
    }
    let m = dims[0];
    let n = dims.len() - 1;
    if dims[1..].iter().any(|&d| d != params.d) {
        return Err(Error::argument(format!(
            "code state channel factors {:?} do not all equal d = {}",
            &dims[1..],
            params.d
        )));
    }
    Ok((m, n))
}

/// Decompose the n-fold erasure output of |psi><psi| into its 2^n
/// orthogonal-flag branches.
pub fn branch_decompose(psi: &PureState, params: &ErasureParams) -> Result<BranchDecomposition> {
    let (m, n) = check_code_layout(psi, params)?;
    if n > MAX_BRANCH_USES {
        return Err(Error::resource(
            "branch-enumeration",
            format!("n = {n} exceeds {MAX_BRANCH_USES} (2^n branches)"),
        ));
    }
    let mut entries = Vec::with_capacity(1usize << n);
    for bits in 0..(1u32 << n) {
        let pattern = ErasurePattern::new(bits, n)?;
        let probability = pattern.probability(params);
        let keep: Vec<usize> = std::iter::once(0)
            .chain((0..n).filter(|&j| !pattern.is_erased(j)).map(|j| j + 1))
            .collect();
        let state = psi.reduced(&keep)?;
        entries.push(BranchEntry {
            pattern,
            probability,
            state,
        });
    }
    Ok(BranchDecomposition {
        entries,
        m,
        d: params.d,
        n,
    })
}

/// Output of the n-fold channel on |psi><psi|, built by applying the
/// single-use map to one input factor at a time. Layout [M, (d+1) x n].
pub fn channel_output(psi: &PureState, params: &ErasureParams) -> Result<DensityMatrix> {
    let (m, n) = check_code_layout(psi, params)?;
    let d = params.d;
    let p = params.p;
    let mut dims: Vec<usize> = psi.layout().dims().to_vec();
    let mut mat = psi.projector().matrix().clone();
    for use_idx in 0..n {
        let site = use_idx + 1;
        let left: usize = dims[..site].iter().product();
        let right: usize = dims[site + 1..].iter().product();
        let dj = dims[site];
        let new_side = left * (dj + 1) * right;
        let mut new = CMatrix::zeros(new_side, new_side);
        let old_idx = |l: usize, b: usize, r: usize| (l * dj + b) * right + r;
        let new_idx = |l: usize, b: usize, r: usize| (l * (dj + 1) + b) * right + r;
        for l1 in 0..left {
            for r1 in 0..right {
                for l2 in 0..left {
                    for r2 in 0..right {
                        // surviving block
                        for b1 in 0..dj {
                            for b2 in 0..dj {
                                let v = mat[(old_idx(l1, b1, r1), old_idx(l2, b2, r2))];
                                if v != Complex64::new(0.0, 0.0) {
                                    new[(new_idx(l1, b1, r1), new_idx(l2, b2, r2))] = v * (1.0 - p);
                                }
                            }
                        }
                        // erased block: flag at index dj, input traced out
                        let mut tr = Complex64::new(0.0, 0.0);
                        for c in 0..dj {
                            tr += mat[(old_idx(l1, c, r1), old_idx(l2, c, r2))];
                        }
                        new[(new_idx(l1, dj, r1), new_idx(l2, dj, r2))] = tr * p;
                    }
                }
            }
        }
        dims[site] = dj + 1;
        mat = new;
    }
    debug_assert_eq!(dims, {
        let mut v = vec![m];
        v.extend(std::iter::repeat_n(d + 1, n));
        v
    });
    DensityMatrix::new(SubsystemLayout::new(dims)?, mat)
}

/// Reassemble the full (d+1)^n-dimensional channel output from a branch
/// decomposition: surviving factors occupy basis states 0..d, erased factors
/// sit at the flag index d.
pub fn reconstruct_from_branches(branches: &BranchDecomposition) -> Result<DensityMatrix> {
    let (m, d, n) = (branches.m, branches.d, branches.n);
    let mut dims = vec![m];
    dims.extend(std::iter::repeat_n(d + 1, n));
    let layout = SubsystemLayout::new(dims)?;
    let side = layout.total();
    let mut mat = CMatrix::zeros(side, side);
    for entry in &branches.entries {
        if entry.probability == 0.0 {
            continue;
        }
        let surviving: Vec<usize> = (0..n).filter(|&j| !entry.pattern.is_erased(j)).collect();
        let b_side = entry.state.side();
        // map a branch index (a, surviving coords) to the full-output index
        let branch_dims: Vec<usize> = std::iter::once(m)
            .chain(surviving.iter().map(|_| d))
            .collect();
        let to_full = |idx: usize| -> usize {
            let mut rem = idx;
            let mut coords = vec![0usize; branch_dims.len()];
            for pos in 0..branch_dims.len() {
                let stride: usize = branch_dims[pos + 1..].iter().product();
                coords[pos] = rem / stride;
                rem %= stride;
            }
            let mut full = coords[0];
            let mut s_iter = 1usize;
            for j in 0..n {
                let c = if entry.pattern.is_erased(j) {
                    d
                } else {
                    let c = coords[s_iter];
                    s_iter += 1;
                    c
                };
                full = full * (d + 1) + c;
            }
            full
        };
        let full_rows: Vec<usize> = (0..b_side).map(to_full).collect();
        for i in 0..b_side {
            for j in 0..b_side {
                mat[(full_rows[i], full_rows[j])] +=
                    entry.state.matrix()[(i, j)] * entry.probability;
            }
        }
    }
    DensityMatrix::new(layout, mat)
}
