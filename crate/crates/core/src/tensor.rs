//! Dense tensors in row-major order, matricizations, and the SVD wrapper
//! used everywhere ranks or principal subspaces are needed.
//!
//! Matricization fixes the index convention for the whole crate: for a mode
//! subset alpha, rows are indexed lexicographically by the alpha-indices in
//! sorted mode order and columns by the complement likewise. Singular value
//! routines enforce a deterministic ordering (stable descending sort) and a
//! sign convention (largest-magnitude entry of each left singular vector is
//! nonnegative), so repeated runs factor identically.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense tensors above this entry count are rejected.
pub const DENSE_GUARD: u64 = 100_000_000;

/// Relative cutoff for numerical rank: sigma_k counts while
/// sigma_k > RANK_REL_TOL * sigma_1.
pub const RANK_REL_TOL: f64 = 1e-12;

/// Dense row-major tensor of f64 coefficients.
///
/// `orthonormal_basis` records whether the Euclidean norm of the
/// coefficients equals the L2 norm of the represented function; width and
/// bound computations require it.
#[derive(Debug, Clone, PartialEq)]
pub struct FullTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    orthonormal_basis: bool,
}

impl FullTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>, orthonormal_basis: bool) -> Result<Self> {
        let entries = checked_len(&shape)?;
        if entries as usize != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} wants {} entries, data has {}",
                shape,
                entries,
                data.len()
            )));
        }
        Ok(FullTensor {
            shape,
            data,
            orthonormal_basis,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let entries = checked_len(&shape)?;
        Ok(FullTensor {
            shape,
            data: vec![0.0; entries as usize],
            orthonormal_basis: false,
        })
    }

    /// Fills the tensor by calling `f` on every multi-index in row-major
    /// order. Indices are 0-based per mode.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let entries = checked_len(&shape)? as usize;
        let mut data = Vec::with_capacity(entries);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..entries {
            data.push(f(&idx));
            advance(&mut idx, &shape);
        }
        Ok(FullTensor {
            shape,
            data,
            orthonormal_basis: false,
        })
    }

    /// I.i.d. standard normal entries; flagged orthonormal because random
    /// corpora are treated as coefficients in an orthonormal basis.
    pub fn random_normal<R: rand::Rng>(shape: Vec<usize>, rng: &mut R) -> Result<Self> {
        let entries = checked_len(&shape)? as usize;
        let mut data = Vec::with_capacity(entries);
        for _ in 0..entries {
            // Box-Muller keeps the dependency surface at `rand` alone.
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            data.push((-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos());
        }
        FullTensor::new(shape, data, true)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn orthonormal_basis(&self) -> bool {
        self.orthonormal_basis
    }

    pub fn with_orthonormal(mut self, flag: bool) -> Self {
        self.orthonormal_basis = flag;
        self
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut o = 0usize;
        for (i, (&ix, &n)) in idx.iter().zip(&self.shape).enumerate() {
            debug_assert!(ix < n, "index {ix} out of bounds for axis {i} of size {n}");
            o = o * n + ix;
        }
        o
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Frobenius distance to another tensor of identical shape.
    pub fn distance(&self, other: &FullTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// Reorders axes; `perm[new_axis] = old_axis`.
    pub fn permute_axes(&self, perm: &[usize]) -> Result<FullTensor> {
        let nd = self.ndim();
        let mut seen = vec![false; nd];
        if perm.len() != nd || perm.iter().any(|&p| p >= nd || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument(format!(
                "bad axis permutation {perm:?} for {nd} axes"
            )));
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let old_strides = strides(&self.shape);
        let mut out = vec![0.0; self.data.len()];
        let mut idx = vec![0usize; nd];
        for slot in out.iter_mut() {
            let mut src = 0usize;
            for (new_axis, &old_axis) in perm.iter().enumerate() {
                src += idx[new_axis] * old_strides[old_axis];
            }
            *slot = self.data[src];
            advance(&mut idx, &new_shape);
        }
        FullTensor::new(new_shape, out, self.orthonormal_basis)
    }

    /// Contracts `matrix` (rows_out x n_mode) along the given 1-based mode.
    pub fn multiply_mode(&self, mode: usize, matrix: &DMatrix<f64>) -> Result<FullTensor> {
        if mode == 0 || mode > self.ndim() {
            return Err(Error::InvalidArgument(format!(
                "mode {mode} out of range 1..={}",
                self.ndim()
            )));
        }
        let axis = mode - 1;
        let n = self.shape[axis];
        if matrix.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "matrix has {} columns, mode {mode} has size {n}",
                matrix.ncols()
            )));
        }
        let l: usize = self.shape[..axis].iter().product();
        let r: usize = self.shape[axis + 1..].iter().product();
        let out_n = matrix.nrows();
        let data = contract_middle(&self.data, l, n, r, matrix);
        let mut new_shape = self.shape.clone();
        new_shape[axis] = out_n;
        FullTensor::new(new_shape, data, self.orthonormal_basis)
    }

    /// Matricization with rows indexed by the sorted modes of `alpha` and
    /// columns by the sorted complement; both sides lexicographic.
    pub fn matricize(&self, alpha: &[usize]) -> Result<Matricization> {
        let d = self.ndim();
        let mut a: Vec<usize> = alpha.to_vec();
        a.sort_unstable();
        a.dedup();
        if a.len() != alpha.len() {
            return Err(Error::InvalidArgument(format!(
                "duplicate modes in {alpha:?}"
            )));
        }
        if a.is_empty() || a.len() >= d || a.iter().any(|&m| m == 0 || m > d) {
            return Err(Error::InvalidArgument(format!(
                "alpha {alpha:?} must be a nonempty strict subset of 1..={d}"
            )));
        }
        let comp: Vec<usize> = (1..=d).filter(|m| !a.contains(m)).collect();

        let row_dims: Vec<usize> = a.iter().map(|&m| self.shape[m - 1]).collect();
        let col_dims: Vec<usize> = comp.iter().map(|&m| self.shape[m - 1]).collect();
        let nrows: usize = row_dims.iter().product();
        let ncols: usize = col_dims.iter().product();

        // Per-axis multipliers into the (row, col) pair.
        let row_strides = strides(&row_dims);
        let col_strides = strides(&col_dims);
        let mut row_mul = vec![0usize; d];
        let mut col_mul = vec![0usize; d];
        for (k, &m) in a.iter().enumerate() {
            row_mul[m - 1] = row_strides[k];
        }
        for (k, &m) in comp.iter().enumerate() {
            col_mul[m - 1] = col_strides[k];
        }

        let mut data = vec![0.0; self.data.len()];
        let mut idx = vec![0usize; d];
        for &v in &self.data {
            let mut row = 0usize;
            let mut col = 0usize;
            for (ax, &ix) in idx.iter().enumerate() {
                row += ix * row_mul[ax];
                col += ix * col_mul[ax];
            }
            data[row * ncols + col] = v;
            advance(&mut idx, &self.shape);
        }
        Ok(Matricization {
            row_modes: a,
            col_modes: comp,
            row_dims,
            col_dims,
            nrows,
            ncols,
            data,
            orthonormal_basis: self.orthonormal_basis,
        })
    }

    /// Writes `<path>` (u64-LE shape header, then f64-LE entries) and a JSON
    /// sidecar `<path>.json` with the shape and the orthonormal flag.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes =
            Vec::with_capacity(8 * (1 + self.shape.len()) + 8 * self.data.len());
        bytes.extend_from_slice(&(self.shape.len() as u64).to_le_bytes());
        for &n in &self.shape {
            bytes.extend_from_slice(&(n as u64).to_le_bytes());
        }
        for &v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, bytes)?;
        let sidecar = TensorSidecar {
            shape: self.shape.clone(),
            orthonormal_basis: self.orthonormal_basis,
        };
        fs::write(
            sidecar_path(path),
            serde_json::to_string_pretty(&sidecar)?,
        )?;
        Ok(())
    }

    /// Reads a tensor written by [`FullTensor::save`], cross-checking the
    /// binary header against the sidecar.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        let sidecar: TensorSidecar =
            serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
        let (shape, data) = decode_tensor_bytes(&bytes)?;
        if shape != sidecar.shape {
            return Err(Error::ShapeMismatch(format!(
                "binary header {:?} disagrees with sidecar {:?}",
                shape, sidecar.shape
            )));
        }
        FullTensor::new(shape, data, sidecar.orthonormal_basis)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorSidecar {
    shape: Vec<usize>,
    orthonormal_basis: bool,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

pub(crate) fn decode_tensor_bytes(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f64>)> {
    let fail = |msg: &str| Error::InvalidArgument(format!("corrupt tensor file: {msg}"));
    if bytes.len() < 8 {
        return Err(fail("missing header"));
    }
    let nd = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    let header = 8 + 8 * nd;
    if bytes.len() < header {
        return Err(fail("truncated shape"));
    }
    let shape: Vec<usize> = (0..nd)
        .map(|i| {
            u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap()) as usize
        })
        .collect();
    let entries = checked_len(&shape)? as usize;
    if bytes.len() != header + 8 * entries {
        return Err(fail("payload length disagrees with shape"));
    }
    let data: Vec<f64> = bytes[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((shape, data))
}

pub(crate) fn encode_tensor_bytes(shape: &[usize], data: &[f64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(8 * (1 + shape.len()) + 8 * data.len());
    bytes.extend_from_slice(&(shape.len() as u64).to_le_bytes());
    for &n in shape {
        bytes.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for &v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Matricized view of a tensor for one mode subset. Row-major.
#[derive(Debug, Clone)]
pub struct Matricization {
    row_modes: Vec<usize>,
    col_modes: Vec<usize>,
    row_dims: Vec<usize>,
    col_dims: Vec<usize>,
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
    orthonormal_basis: bool,
}

impl Matricization {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row_modes(&self) -> &[usize] {
        &self.row_modes
    }

    pub fn col_modes(&self) -> &[usize] {
        &self.col_modes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.ncols + c]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.nrows, self.ncols, &self.data)
    }

    /// Same mode bookkeeping with new entries; write-back path after a
    /// row-space operation on the unfolding.
    pub(crate) fn replace_data(&self, m: &DMatrix<f64>) -> Result<Matricization> {
        if m.nrows() != self.nrows || m.ncols() != self.ncols {
            return Err(Error::ShapeMismatch(format!(
                "replacement is {}x{}, unfolding is {}x{}",
                m.nrows(),
                m.ncols(),
                self.nrows,
                self.ncols
            )));
        }
        let mut data = vec![0.0; self.data.len()];
        for r in 0..self.nrows {
            for c in 0..self.ncols {
                data[r * self.ncols + c] = m[(r, c)];
            }
        }
        Ok(Matricization {
            data,
            ..self.clone()
        })
    }

    /// Exact inverse of [`FullTensor::matricize`]; bit-identical round trip.
    pub fn to_tensor(&self) -> FullTensor {
        let d = self.row_modes.len() + self.col_modes.len();
        let mut shape = vec![0usize; d];
        for (k, &m) in self.row_modes.iter().enumerate() {
            shape[m - 1] = self.row_dims[k];
        }
        for (k, &m) in self.col_modes.iter().enumerate() {
            shape[m - 1] = self.col_dims[k];
        }
        let row_strides = strides(&self.row_dims);
        let col_strides = strides(&self.col_dims);
        let mut row_mul = vec![0usize; d];
        let mut col_mul = vec![0usize; d];
        for (k, &m) in self.row_modes.iter().enumerate() {
            row_mul[m - 1] = row_strides[k];
        }
        for (k, &m) in self.col_modes.iter().enumerate() {
            col_mul[m - 1] = col_strides[k];
        }
        let mut data = vec![0.0; self.data.len()];
        let mut idx = vec![0usize; d];
        for slot in data.iter_mut() {
            let mut row = 0usize;
            let mut col = 0usize;
            for (ax, &ix) in idx.iter().enumerate() {
                row += ix * row_mul[ax];
                col += ix * col_mul[ax];
            }
            *slot = self.data[row * self.ncols + col];
            advance(&mut idx, &shape);
        }
        FullTensor {
            shape,
            data,
            orthonormal_basis: self.orthonormal_basis,
        }
    }

    /// Singular values, descending. Rejects non-finite input.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let (_, sigma, _) = svd_ordered(self.to_dmatrix(), false)?;
        Ok(sigma)
    }

    /// First `n` left singular vectors (nrows x n, orthonormal columns),
    /// ordered and sign-fixed deterministically.
    pub fn principal_subspace(&self, n: usize) -> Result<DMatrix<f64>> {
        let max = self.nrows.min(self.ncols);
        if n == 0 || n > max {
            return Err(Error::InvalidArgument(format!(
                "subspace dimension {n} out of range 1..={max}"
            )));
        }
        let (u, _, _) = svd_ordered(self.to_dmatrix(), true)?;
        Ok(u.columns(0, n).into_owned())
    }
}

/// SVD with deterministic ordering and signs.
///
/// Singular values are sorted descending by a stable sort (ties keep the
/// factorization's order); each left singular vector is flipped so its
/// largest-magnitude entry (first such index on ties) is nonnegative, with
/// the matching right vector flipped alongside.
pub fn svd_ordered(
    m: DMatrix<f64>,
    want_vectors: bool,
) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix passed to SVD".into()));
    }
    let (nr, nc) = (m.nrows(), m.ncols());
    // One-sided Jacobi wants at least as many rows as columns; factorize
    // the transpose otherwise and swap the roles of U and V.
    let (mut u, sigma, mut vt) = if nr >= nc {
        let (u, s, v) = jacobi_one_sided(m, want_vectors)?;
        (u, s, v.transpose())
    } else {
        let (u, s, v) = jacobi_one_sided(m.transpose(), want_vectors)?;
        (v, s, u.transpose())
    };

    if !want_vectors {
        return Ok((DMatrix::zeros(0, 0), sigma, DMatrix::zeros(0, 0)));
    }
    let k = nr.min(nc);
    for j in 0..k {
        let mut imax = 0usize;
        let mut best = -1.0f64;
        for i in 0..nr {
            let a = u[(i, j)].abs();
            if a > best {
                best = a;
                imax = i;
            }
        }
        if u[(imax, j)] < 0.0 {
            for i in 0..nr {
                u[(i, j)] = -u[(i, j)];
            }
            for c in 0..nc {
                vt[(j, c)] = -vt[(j, c)];
            }
        }
    }
    Ok((u, sigma, vt))
}

/// One-sided Jacobi (Hestenes) SVD of a tall matrix (nrows >= ncols):
/// cyclic plane rotations orthogonalize the columns, whose norms then give
/// the singular values with high relative accuracy even deep in the tail.
/// Returns (U nrows x k, sigma, V ncols x k) with k = ncols and sigma
/// descending (stable order on ties).
fn jacobi_one_sided(
    mut a: DMatrix<f64>,
    want_vectors: bool,
) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (m, n) = (a.nrows(), a.ncols());
    debug_assert!(m >= n);
    let mut v = if want_vectors {
        DMatrix::identity(n, n)
    } else {
        DMatrix::zeros(0, 0)
    };
    // Relative off-diagonal threshold; rotations stop once every column
    // pair is orthogonal to this accuracy relative to the column norms.
    let tol = 1e-14f64;
    // Tied spectra can make the last rounding-scale rotations oscillate, so
    // a stalled state this orthogonal still counts as converged.
    let stall_tol = 1e-12f64;
    // Columns this far below the matrix scale are rotation-rounding dust:
    // rank-deficient inputs shed them, and rotations against large columns
    // regenerate them at eps * scale every sweep, where two residues can
    // stay exactly parallel and stall the relative measure at 1. Zeroing
    // them reports their singular values as exact zeros, which is safe
    // because the cutoff sits well below RANK_REL_TOL.
    let dust_rel = 1e-13f64;
    let max_sweeps = 64;
    let mut worst = f64::INFINITY;
    for _ in 0..max_sweeps {
        let max_norm = (0..n).map(|j| a.column(j).norm()).fold(0.0f64, f64::max);
        let dust = dust_rel * max_norm;
        for j in 0..n {
            if a.column(j).norm() <= dust {
                a.column_mut(j).fill(0.0);
            }
        }
        worst = 0.0;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = 0.0f64;
                for i in 0..m {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                // Columns whose norms square to the subnormal range are
                // rounding dust of a deficient rank; pairs touching them
                // need no rotation (and would divide by underflowed zeros).
                if app < f64::MIN_POSITIVE || aqq < f64::MIN_POSITIVE || apq == 0.0 {
                    continue;
                }
                let rel = apq.abs() / (app.sqrt() * aqq.sqrt());
                worst = worst.max(rel);
                if rel <= tol {
                    continue;
                }
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    a[(i, p)] = c * x - s * y;
                    a[(i, q)] = s * x + c * y;
                }
                if want_vectors {
                    for i in 0..n {
                        let x = v[(i, p)];
                        let y = v[(i, q)];
                        v[(i, p)] = c * x - s * y;
                        v[(i, q)] = s * x + c * y;
                    }
                }
            }
        }
        if worst <= tol {
            break;
        }
    }
    if worst > stall_tol {
        return Err(Error::Factorization(format!(
            "SVD did not converge: column orthogonality stalled at {worst:.3e}"
        )));
    }

    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    if !want_vectors {
        return Ok((DMatrix::zeros(0, 0), sigma, DMatrix::zeros(0, 0)));
    }

    let mut u = DMatrix::zeros(m, n);
    let mut vs = DMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        if norms[old] > 0.0 {
            for i in 0..m {
                u[(i, new)] = a[(i, old)] / norms[old];
            }
        }
        vs.set_column(new, &v.column(old));
    }
    // Exactly zero columns leave U underdetermined; fill each with the
    // canonical direction that survives orthogonalization against the
    // already-determined columns best, so U always has orthonormal columns.
    for j in 0..n {
        if sigma[j] > 0.0 {
            continue;
        }
        let project_out = |col: &mut [f64]| {
            for prev in 0..n {
                if prev == j || (sigma[prev] == 0.0 && prev > j) {
                    continue;
                }
                let dot: f64 = (0..m).map(|i| col[i] * u[(i, prev)]).sum();
                for (i, c) in col.iter_mut().enumerate() {
                    *c -= dot * u[(i, prev)];
                }
            }
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        for e in 0..m {
            let mut col = vec![0.0f64; m];
            col[e] = 1.0;
            project_out(&mut col);
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            if best.as_ref().map_or(true, |(b, _)| norm > *b) {
                best = Some((norm, col));
            }
        }
        let (norm, mut col) = best.expect("m >= 1");
        for c in col.iter_mut() {
            *c /= norm;
        }
        // A second pass cleans up the loss of orthogonality a small
        // first-pass residual would leave behind.
        project_out(&mut col);
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (i, c) in col.iter().enumerate() {
            u[(i, j)] = c / norm;
        }
    }
    Ok((u, sigma, vs))
}

/// Number of singular values above the relative cutoff
/// [`RANK_REL_TOL`] * sigma_1. All-zero spectra have rank 0.
pub fn numerical_rank(sigma: &[f64]) -> usize {
    match sigma.first() {
        None => 0,
        Some(&s1) if s1 <= 0.0 => 0,
        Some(&s1) => sigma.iter().take_while(|&&s| s > RANK_REL_TOL * s1).count(),
    }
}

/// out[l, o, r] = sum_k matrix[o, k] * data[l, k, r]
pub(crate) fn contract_middle(
    data: &[f64],
    l: usize,
    n: usize,
    r: usize,
    matrix: &DMatrix<f64>,
) -> Vec<f64> {
    let m = matrix.nrows();
    let mut out = vec![0.0; l * m * r];
    for li in 0..l {
        let in_block = &data[li * n * r..(li + 1) * n * r];
        let out_block = &mut out[li * m * r..(li + 1) * m * r];
        for k in 0..n {
            let row = &in_block[k * r..(k + 1) * r];
            for o in 0..m {
                let w = matrix[(o, k)];
                if w == 0.0 {
                    continue;
                }
                let dst = &mut out_block[o * r..(o + 1) * r];
                for (d, &s) in dst.iter_mut().zip(row) {
                    *d += w * s;
                }
            }
        }
    }
    out
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

pub(crate) fn advance(idx: &mut [usize], shape: &[usize]) {
    for ax in (0..shape.len()).rev() {
        idx[ax] += 1;
        if idx[ax] < shape[ax] {
            return;
        }
        idx[ax] = 0;
    }
}

fn checked_len(shape: &[usize]) -> Result<u64> {
    if shape.is_empty() {
        return Err(Error::InvalidArgument("empty shape".into()));
    }
    if shape.iter().any(|&n| n == 0) {
        return Err(Error::InvalidArgument(format!("zero-size axis in {shape:?}")));
    }
    let mut entries: u128 = 1;
    for &n in shape {
        entries = entries.saturating_mul(n as u128);
        if entries > DENSE_GUARD as u128 {
            return Err(Error::TooLarge {
                entries,
                guard: DENSE_GUARD,
            });
        }
    }
    Ok(entries as u64)
}
