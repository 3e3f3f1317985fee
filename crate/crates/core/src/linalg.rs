//! Dense complex matrices and the Hermitian eigensolver.
//!
//! Everything downstream (spectra, Rényi traces, PSD projections in the
//! decoder SDP) reduces to the eigendecomposition implemented here:
//! Householder reduction of a Hermitian matrix to real symmetric
//! tridiagonal form, a phase rescaling that makes the subdiagonal real
//! nonnegative, then implicit-shift QL with the rotations accumulated
//! into the complex eigenvector matrix.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let brow = other.row(k);
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Largest |A_ij - conj(A_ji)| over all entries.
    pub fn hermitian_defect(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = self[(i, j)] - self[(j, i)].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Hermitian part (A + A†)/2.
    pub fn hermitize(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Re Tr{A† B}, the Hilbert–Schmidt pairing of Hermitian operands.
    pub fn inner_re(&self, other: &Self) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// V A V† for an isometry or unitary V (rows x cols applied to cols x cols).
    pub fn conjugate_by(&self, v: &Self) -> Self {
        v.matmul(self).matmul(&v.adjoint())
    }

    /// Eigendecomposition of a Hermitian matrix.
    ///
    /// Returns eigenvalues in ascending order and the matrix whose columns
    /// are the corresponding orthonormal eigenvectors. The input is
    /// symmetrized before reduction; callers are expected to have checked
    /// Hermiticity to their own tolerance.
    pub fn eigh(&self) -> Result<(Vec<f64>, CMatrix)> {
        if self.rows != self.cols {
            return Err(Error::argument("eigh: matrix is not square"));
        }
        let n = self.rows;
        if n == 0 {
            return Ok((Vec::new(), CMatrix::zeros(0, 0)));
        }
        let mut w = self.hermitize();
        let mut q = CMatrix::identity(n);

        // Householder reduction to Hermitian tridiagonal form.
        for k in 0..n.saturating_sub(2) {
            let m = n - k - 1; // length of the column below the diagonal
            let mut norm_sq = 0.0;
            for i in 0..m {
                norm_sq += w[(k + 1 + i, k)].norm_sqr();
            }
            let norm = norm_sq.sqrt();
            if norm < 1e-300 {
                continue;
            }
            let x0 = w[(k + 1, k)];
            let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
            let alpha = -phase * norm;
            let mut v = vec![ZERO; m];
            v[0] = x0 - alpha;
            for i in 1..m {
                v[i] = w[(k + 1 + i, k)];
            }
            let vn: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if vn < 1e-300 {
                continue;
            }
            for z in v.iter_mut() {
                *z /= vn;
            }

            // Column k collapses onto the subdiagonal.
            w[(k + 1, k)] = alpha;
            w[(k, k + 1)] = alpha.conj();
            for i in 2..=m {
                if k + i < n {
                    w[(k + i, k)] = ZERO;
                    w[(k, k + i)] = ZERO;
                }
            }

            // Rank-2 update of the trailing block: B -= 2(v u† + u v†),
            // u = Bv - (v†Bv) v.
            let mut bv = vec![ZERO; m];
            for i in 0..m {
                let mut acc = ZERO;
                for j in 0..m {
                    acc += w[(k + 1 + i, k + 1 + j)] * v[j];
                }
                bv[i] = acc;
            }
            let tau: Complex64 = v.iter().zip(&bv).map(|(a, b)| a.conj() * b).sum();
            let u: Vec<Complex64> = bv
                .iter()
                .zip(&v)
                .map(|(w_i, v_i)| w_i - tau * v_i)
                .collect();
            for i in 0..m {
                for j in 0..m {
                    let upd = v[i] * u[j].conj() + u[i] * v[j].conj();
                    w[(k + 1 + i, k + 1 + j)] -= 2.0 * upd;
                }
            }

            // Accumulate Q <- Q (I - 2 v v†) on columns k+1..n.
            for r in 0..n {
                let mut s = ZERO;
                for j in 0..m {
                    s += q[(r, k + 1 + j)] * v[j];
                }
                if s == ZERO {
                    continue;
                }
                for j in 0..m {
                    let upd = 2.0 * s * v[j].conj();
                    q[(r, k + 1 + j)] -= upd;
                }
            }
        }

        // Phase-rescale columns so the subdiagonal becomes real nonnegative.
        let mut d = vec![0.0f64; n];
        let mut e = vec![0.0f64; n];
        for i in 0..n {
            d[i] = w[(i, i)].re;
        }
        let mut phase = ONE;
        for i in 0..n - 1 {
            let ei = w[(i + 1, i)];
            let abs = ei.norm();
            e[i] = abs;
            phase = if abs > 0.0 { phase * (ei / abs) } else { phase };
            for r in 0..n {
                let cur = q[(r, i + 1)];
                q[(r, i + 1)] = cur * phase;
            }
        }
        e[n - 1] = 0.0;

        tql_implicit(&mut d, &mut e, &mut q)?;

        // Sort ascending, permuting eigenvector columns.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("eigenvalues are finite"));
        let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |i, j| q[(i, order[j])]);
        Ok((values, vectors))
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix, rotations
/// accumulated into the (complex) column matrix `q`.
fn tql_implicit(d: &mut [f64], e: &mut [f64], q: &mut CMatrix) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    // deflation threshold keyed to the whole-matrix norm: each sweep crosses
    // the full unreduced block, so rounding noise of order eps * anorm leaks
    // into numerically-zero regions and a locally-scaled threshold stalls on
    // rank-deficient inputs
    let anorm = d
        .iter()
        .zip(e.iter())
        .map(|(di, ei)| di.abs() + ei.abs())
        .fold(0.0f64, f64::max);
    let thresh = f64::EPSILON * anorm;
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m < n - 1 {
                if e[m].abs() <= thresh {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::numeric(
                    "eigh: QL iteration failed to converge after 60 sweeps",
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in 0..q.rows() {
                    let f = q[(row, i + 1)];
                    q[(row, i + 1)] = s * q[(row, i)] + c * f;
                    q[(row, i)] = c * q[(row, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

impl std::ops::Mul<f64> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, s: f64) -> CMatrix {
        self.scale(s)
    }
}
