//! States over multipartite systems: pure vectors, density operators,
//! partial traces, spectra, marginal purities, fidelity and Haar sampling.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::rng::SplitMix64;

/// Densest total dimension the crate will represent. Everything here is
/// dense linear algebra; tensor-network scale is out of scope.
pub const MAX_TOTAL_DIM: usize = 4096;

/// Ordered local dimensions of a multipartite system.
///
/// Subsystems are indexed from 0; by convention the reference system A is
/// index 0 in every higher-level module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemLayout {
    dims: Vec<usize>,
    total: usize,
}

impl SubsystemLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.iter().any(|&d| d < 1) {
            return Err(Error::argument(
                "layout: every local dimension must be >= 1",
            ));
        }
        let mut total = 1usize;
        for &d in &dims {
            total = total
                .checked_mul(d)
                .ok_or_else(|| Error::argument("layout: total dimension overflows"))?;
        }
        if total > MAX_TOTAL_DIM {
            return Err(Error::resource(
                "layout-total",
                format!("total dimension {total} exceeds dense limit {MAX_TOTAL_DIM}"),
            ));
        }
        Ok(Self { dims, total })
    }

    /// Layout `[m, d, d, ..., d]` with `n` channel-input factors.
    pub fn code_layout(m: usize, d: usize, n: usize) -> Result<Self> {
        let mut dims = Vec::with_capacity(n + 1);
        dims.push(m);
        dims.extend(std::iter::repeat_n(d, n));
        Self::new(dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    fn check_subset(&self, subset: &[usize]) -> Result<Vec<usize>> {
        let mut keep: Vec<usize> = subset.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if let Some(&bad) = keep.iter().find(|&&i| i >= self.dims.len()) {
            return Err(Error::argument(format!(
                "subsystem index {bad} out of range for layout with {} factors",
                self.dims.len()
            )));
        }
        Ok(keep)
    }
}

/// Index bookkeeping for one bipartition (kept vs traced-out subsystems).
struct IndexSplit {
    keep_total: usize,
    rest_total: usize,
    /// global index -> (kept index, rest index)
    split_of: Vec<(usize, usize)>,
}

impl IndexSplit {
    fn new(layout: &SubsystemLayout, keep_sorted: &[usize]) -> Self {
        let dims = layout.dims();
        let m = dims.len();
        let in_keep: Vec<bool> = {
            let mut v = vec![false; m];
            for &k in keep_sorted {
                v[k] = true;
            }
            v
        };
        let keep_total: usize = keep_sorted.iter().map(|&k| dims[k]).product();
        let rest_total = layout.total() / keep_total.max(1);
        let mut split_of = Vec::with_capacity(layout.total());
        for g in 0..layout.total() {
            // decompose row-major: factor 0 is most significant
            let mut rem = g;
            let mut k_idx = 0usize;
            let mut r_idx = 0usize;
            for (j, &d) in dims.iter().enumerate() {
                let stride: usize = dims[j + 1..].iter().product();
                let c = rem / stride;
                rem %= stride;
                if in_keep[j] {
                    k_idx = k_idx * d + c;
                } else {
                    r_idx = r_idx * d + c;
                }
            }
            split_of.push((k_idx, r_idx));
        }
        Self {
            keep_total,
            rest_total,
            split_of,
        }
    }
}

/// Unit vector over a subsystem layout.
#[derive(Debug, Clone)]
pub struct PureState {
    layout: SubsystemLayout,
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn new(layout: SubsystemLayout, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != layout.total() {
            return Err(Error::argument(format!(
                "state length {} does not match layout total {}",
                amps.len(),
                layout.total()
            )));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invariant(format!(
                "pure state norm {norm} deviates from 1 beyond 1e-10"
            )));
        }
        Ok(Self { layout, amps })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// |psi><psi| as a density matrix.
    pub fn projector(&self) -> DensityMatrix {
        let n = self.amps.len();
        let mat = CMatrix::from_fn(n, n, |i, j| self.amps[i] * self.amps[j].conj());
        DensityMatrix {
            layout: self.layout.clone(),
            mat,
        }
    }

    /// Reduced density matrix on `keep` (set semantics, layout order kept).
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = self.layout.check_subset(keep)?;
        let split = IndexSplit::new(&self.layout, &keep);
        // psi reshaped to keep x rest, then rho = Psi Psi†
        let mut psi_mat = CMatrix::zeros(split.keep_total, split.rest_total);
        for (g, &(k, r)) in split.split_of.iter().enumerate() {
            psi_mat[(k, r)] = self.amps[g];
        }
        let mat = psi_mat.matmul(&psi_mat.adjoint());
        let dims: Vec<usize> = keep.iter().map(|&k| self.layout.dims()[k]).collect();
        DensityMatrix::new(SubsystemLayout::new(dims)?, mat)
    }
}

/// Hermitian, unit-trace operator over a subsystem layout.
///
/// Hermiticity and trace are checked at construction (1e-10); positivity is
/// a contract checked where eigenvalues are consumed and by the test suite,
/// not at every construction.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    layout: SubsystemLayout,
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(layout: SubsystemLayout, mat: CMatrix) -> Result<Self> {
        if mat.rows() != layout.total() || mat.cols() != layout.total() {
            return Err(Error::argument(format!(
                "matrix side {}x{} does not match layout total {}",
                mat.rows(),
                mat.cols(),
                layout.total()
            )));
        }
        let defect = mat.hermitian_defect();
        if defect > 1e-10 {
            return Err(Error::invariant(format!(
                "density matrix not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::invariant(format!(
                "density matrix trace {} deviates from 1",
                tr.re
            )));
        }
        Ok(Self { layout, mat })
    }

    pub fn maximally_mixed(layout: SubsystemLayout) -> Self {
        let n = layout.total();
        let mat = CMatrix::identity(n).scale(1.0 / n as f64);
        Self { layout, mat }
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn side(&self) -> usize {
        self.mat.rows()
    }

    /// Partial trace keeping `keep` (set semantics, layout order preserved).
    ///
    /// Keeping every index returns the input unchanged; keeping none returns
    /// the 1x1 matrix [1].
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = self.layout.check_subset(keep)?;
        let split = IndexSplit::new(&self.layout, &keep);
        // g_of[k * rest + r] = global index
        let mut g_of = vec![0usize; self.layout.total()];
        for (g, &(k, r)) in split.split_of.iter().enumerate() {
            g_of[k * split.rest_total + r] = g;
        }
        let mut out = CMatrix::zeros(split.keep_total, split.keep_total);
        for k1 in 0..split.keep_total {
            for k2 in 0..split.keep_total {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..split.rest_total {
                    let g1 = g_of[k1 * split.rest_total + r];
                    let g2 = g_of[k2 * split.rest_total + r];
                    acc += self.mat[(g1, g2)];
                }
                out[(k1, k2)] = acc;
            }
        }
        let dims: Vec<usize> = keep.iter().map(|&k| self.layout.dims()[k]).collect();
        DensityMatrix::new(SubsystemLayout::new(dims)?, out)
    }

    /// Eigenvalues sorted descending, tiny negatives (>= -1e-10) clamped to 0.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let defect = self.mat.hermitian_defect();
        if defect > 1e-10 {
            return Err(Error::invariant(format!(
                "spectrum: operator not Hermitian (defect {defect:.3e})"
            )));
        }
        let (mut vals, _) = self.mat.eigh()?;
        for v in vals.iter_mut() {
            if *v < 0.0 {
                if *v < -1e-10 {
                    return Err(Error::invariant(format!(
                        "spectrum: eigenvalue {v:.3e} below -1e-10; operator is not positive"
                    )));
                }
                *v = 0.0;
            }
        }
        vals.reverse();
        Ok(vals)
    }

    /// Full invariant check including positivity; used by tests.
    pub fn validate_full(&self) -> Result<()> {
        let _ = self.spectrum()?;
        Ok(())
    }
}

/// Rényi order valid for the bounds in this crate.
pub fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::argument(format!(
            "alpha {alpha} outside the supported interval (1, 2]"
        )));
    }
    Ok(())
}

/// Tr{ [phi_subset]^alpha } for a pure state, from the eigenvalues of the
/// reduced matrix on `subset`. Eigenvalues at or below 1e-14 are dropped
/// before the power. The empty subset has purity 1 by convention.
pub fn marginal_purity(psi: &PureState, subset: &[usize], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let subset = psi.layout.check_subset(subset)?;
    if subset.is_empty() {
        return Ok(1.0);
    }
    let reduced = psi.reduced(&subset)?;
    let spec = reduced.spectrum()?;
    Ok(spec
        .iter()
        .filter(|&&l| l > 1e-14)
        .map(|&l| l.powf(alpha))
        .sum())
}

/// <target| state |target>, clamped to [0, 1].
pub fn fidelity_with_pure(target: &PureState, state: &DensityMatrix) -> Result<f64> {
    if target.amps.len() != state.side() {
        return Err(Error::argument(format!(
            "fidelity: target dimension {} vs state dimension {}",
            target.amps.len(),
            state.side()
        )));
    }
    let n = state.side();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += state.mat[(i, j)] * target.amps[j];
        }
        acc += target.amps[i].conj() * row;
    }
    debug_assert!(acc.im.abs() < 1e-9, "fidelity imaginary part {}", acc.im);
    Ok(acc.re.clamp(0.0, 1.0))
}

/// Haar-random pure state: i.i.d. complex Gaussian amplitudes, normalized.
/// Deterministic in (layout, seed).
pub fn haar_random_pure(layout: &SubsystemLayout, seed: u64) -> PureState {
    let mut rng = SplitMix64::new(seed);
    let mut amps: Vec<Complex64> = (0..layout.total())
        .map(|_| Complex64::new(rng.next_gaussian(), rng.next_gaussian()))
        .collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in amps.iter_mut() {
        *z /= norm;
    }
    PureState {
        layout: layout.clone(),
        amps,
    }
}

/// Haar-random isometry as an `out_dim x in_dim` matrix with orthonormal
/// columns (Gaussian matrix, modified Gram-Schmidt).
pub fn haar_random_isometry(in_dim: usize, out_dim: usize, seed: u64) -> Result<CMatrix> {
    if out_dim < in_dim || in_dim == 0 {
        return Err(Error::argument(format!(
            "isometry requires 1 <= in_dim <= out_dim, got {in_dim} -> {out_dim}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut v = CMatrix::from_fn(out_dim, in_dim, |_, _| {
        Complex64::new(rng.next_gaussian(), rng.next_gaussian())
    });
    for j in 0..in_dim {
        for prev in 0..j {
            let mut overlap = Complex64::new(0.0, 0.0);
            for r in 0..out_dim {
                overlap += v[(r, prev)].conj() * v[(r, j)];
            }
            for r in 0..out_dim {
                let sub = overlap * v[(r, prev)];
                v[(r, j)] -= sub;
            }
        }
        let norm = (0..out_dim)
            .map(|r| v[(r, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm < 1e-12 {
            return Err(Error::numeric(
                "isometry sampling produced a degenerate column",
            ));
        }
        for r in 0..out_dim {
            v[(r, j)] /= norm;
        }
    }
    Ok(v)
}

/// Maximally entangled state on [m, m]: sum_i |ii> / sqrt(m).
pub fn maximally_entangled(m: usize) -> Result<PureState> {
    if m < 1 {
        return Err(Error::argument("maximally entangled state needs m >= 1"));
    }
    let layout = SubsystemLayout::new(vec![m, m])?;
    let amp = 1.0 / (m as f64).sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..m {
        amps[i * m + i] = Complex64::new(amp, 0.0);
    }
    Ok(PureState { layout, amps })
}

#[derive(Debug, Serialize, Deserialize)]
struct StateFile {
    dims: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Parse the CLI state-file format: `{"dims": [...], "re": [...], "im": [...]}`.
///
/// The vector must be unit-norm within 1e-8; it is renormalized exactly on
/// load.
pub fn state_from_json(text: &str) -> Result<PureState> {
    let raw: StateFile =
        serde_json::from_str(text).map_err(|e| Error::format(format!("state file: {e}")))?;
    let layout = SubsystemLayout::new(raw.dims)?;
    if raw.re.len() != layout.total() || raw.im.len() != layout.total() {
        return Err(Error::format(format!(
            "state file: amplitude arrays have length {}/{}, layout total is {}",
            raw.re.len(),
            raw.im.len(),
            layout.total()
        )));
    }
    let mut amps: Vec<Complex64> = raw
        .re
        .iter()
        .zip(&raw.im)
        .map(|(&r, &i)| Complex64::new(r, i))
        .collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::format(format!(
            "state file: vector norm {norm} deviates from 1 beyond 1e-8"
        )));
    }
    for z in amps.iter_mut() {
        *z /= norm;
    }
    Ok(PureState { layout, amps })
}

/// Serialize a state in the CLI state-file format.
pub fn state_to_json(psi: &PureState) -> String {
    let raw = StateFile {
        dims: psi.layout.dims().to_vec(),
        re: psi.amps.iter().map(|z| z.re).collect(),
        im: psi.amps.iter().map(|z| z.im).collect(),
    };
    serde_json::to_string(&raw).expect("state serialization cannot fail")
}
