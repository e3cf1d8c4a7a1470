//! Univariate interpolation bases, function handles, coefficient sampling,
//! and quadrature-grid error measurement.
//!
//! Two basis families are supported on an interval [a, b]:
//!
//! * piecewise-constant on n equal cells, interpolating at cell midpoints;
//! * piecewise-linear hats on n grid nodes (endpoints included),
//!   interpolating at the nodes.
//!
//! All L2 quantities are taken against the uniform probability measure on
//! the domain box, so norms are dimension-comparable.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::FullTensor;

/// Hard cap on evaluation-grid sizes used by [`measure_error`].
pub const GRID_BUDGET: u64 = 10_000_000;

/// Per-mode fine resolution when the approximation offers no grid hint.
pub const DEFAULT_FINE_RESOLUTION: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    PiecewiseConstant,
    PiecewiseLinear,
}

impl BasisKind {
    /// Largest Sobolev order the scheme converges at: 1 for constants,
    /// 2 for hats.
    pub fn order(self) -> usize {
        match self {
            BasisKind::PiecewiseConstant => 1,
            BasisKind::PiecewiseLinear => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    L2,
    Linf,
}

/// One univariate basis on an interval.
///
/// `orthonormal` marks the L2(uniform-probability)-orthonormalized variant,
/// which exists only for the piecewise-constant kind (hats are not
/// orthogonal; use [`orthonormalize`] on sampled tensors instead).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateBasis {
    kind: BasisKind,
    n: usize,
    a: f64,
    b: f64,
    #[serde(default)]
    orthonormal: bool,
}

impl UnivariateBasis {
    pub fn new(kind: BasisKind, n: usize, interval: (f64, f64)) -> Result<Self> {
        let (a, b) = interval;
        if !a.is_finite() || !b.is_finite() || a >= b {
            return Err(Error::InvalidArgument(format!(
                "bad interval [{a}, {b}]"
            )));
        }
        let min_n = match kind {
            BasisKind::PiecewiseConstant => 1,
            BasisKind::PiecewiseLinear => 2,
        };
        if n < min_n {
            return Err(Error::InvalidArgument(format!(
                "{kind:?} needs at least {min_n} functions, got {n}"
            )));
        }
        Ok(UnivariateBasis {
            kind,
            n,
            a,
            b,
            orthonormal: false,
        })
    }

    /// Orthonormalized variant; only the piecewise-constant kind admits one.
    pub fn orthonormalized(&self) -> Result<Self> {
        if self.kind != BasisKind::PiecewiseConstant {
            return Err(Error::InvalidArgument(
                "only the piecewise-constant basis has an orthonormal variant".into(),
            ));
        }
        let mut b = self.clone();
        b.orthonormal = true;
        Ok(b)
    }

    /// Re-checks constructor invariants; used on deserialized values.
    pub fn check_invariants(&self) -> Result<()> {
        let probe = UnivariateBasis::new(self.kind, self.n, (self.a, self.b))?;
        if self.orthonormal {
            probe.orthonormalized()?;
        }
        Ok(())
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    /// Interpolation points: cell midpoints or grid nodes.
    pub fn nodes(&self) -> Vec<f64> {
        match self.kind {
            BasisKind::PiecewiseConstant => {
                let h = (self.b - self.a) / self.n as f64;
                (0..self.n).map(|i| self.a + (i as f64 + 0.5) * h).collect()
            }
            BasisKind::PiecewiseLinear => {
                let h = (self.b - self.a) / (self.n - 1) as f64;
                (0..self.n).map(|i| self.a + i as f64 * h).collect()
            }
        }
    }

    /// Cell index containing x (piecewise-constant view); out-of-domain
    /// points clamp to the nearest cell.
    pub fn cell_of(&self, x: f64) -> usize {
        let h = (self.b - self.a) / self.n as f64;
        let i = ((x - self.a) / h).floor();
        (i.max(0.0) as usize).min(self.n - 1)
    }

    /// All basis functions evaluated at x, dense. Out-of-domain points are
    /// clamped to the interval first.
    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, v) in self.eval_sparse(x) {
            out[i] = v;
        }
        out
    }

    /// Nonzero basis values at x: one entry for constants, up to two for
    /// hats.
    pub fn eval_sparse(&self, x: f64) -> Vec<(usize, f64)> {
        let x = x.clamp(self.a, self.b);
        match self.kind {
            BasisKind::PiecewiseConstant => {
                let v = if self.orthonormal {
                    (self.n as f64).sqrt()
                } else {
                    1.0
                };
                vec![(self.cell_of(x), v)]
            }
            BasisKind::PiecewiseLinear => {
                let h = (self.b - self.a) / (self.n - 1) as f64;
                let j = (((x - self.a) / h).floor().max(0.0) as usize).min(self.n - 2);
                let t = ((x - (self.a + j as f64 * h)) / h).clamp(0.0, 1.0);
                if t == 0.0 {
                    vec![(j, 1.0)]
                } else {
                    vec![(j, 1.0 - t), (j + 1, t)]
                }
            }
        }
    }

    /// Evaluation matrix: rows are points, columns basis functions.
    pub fn eval_matrix(&self, points: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(points.len(), self.n);
        for (p, &x) in points.iter().enumerate() {
            for (i, v) in self.eval_sparse(x) {
                m[(p, i)] = v;
            }
        }
        m
    }

    /// Upper factor L^T of the Gram matrix G = L L^T under the uniform
    /// probability measure. Transformed coefficients L^T c have Euclidean
    /// norm equal to the interpolant's L2 norm.
    pub fn gram_cholesky_transpose(&self) -> Result<DMatrix<f64>> {
        match self.kind {
            BasisKind::PiecewiseConstant => {
                let s = if self.orthonormal {
                    1.0
                } else {
                    1.0 / (self.n as f64).sqrt()
                };
                Ok(DMatrix::from_diagonal_element(self.n, self.n, s))
            }
            BasisKind::PiecewiseLinear => {
                // Tridiagonal mass matrix of hats scaled to the probability
                // measure: interior diagonal 2h/3, boundary h/3, off h/6,
                // all divided by (b - a).
                let w = 1.0 / (self.n - 1) as f64;
                let mut g = DMatrix::zeros(self.n, self.n);
                for i in 0..self.n {
                    let diag = if i == 0 || i == self.n - 1 {
                        w / 3.0
                    } else {
                        2.0 * w / 3.0
                    };
                    g[(i, i)] = diag;
                    if i + 1 < self.n {
                        g[(i, i + 1)] = w / 6.0;
                        g[(i + 1, i)] = w / 6.0;
                    }
                }
                let chol = nalgebra::Cholesky::new(g).ok_or_else(|| {
                    Error::Factorization("hat Gram matrix is not positive definite".into())
                })?;
                Ok(chol.l().transpose())
            }
        }
    }
}

/// A point evaluator over a box domain. Evaluators must be pure: the same
/// input always yields the same output, and concurrent calls are safe.
#[derive(Clone)]
pub struct FunctionHandle {
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    domain: Vec<(f64, f64)>,
    name: Option<String>,
}

impl fmt::Debug for FunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionHandle")
            .field("d", &self.domain.len())
            .field("name", &self.name)
            .finish()
    }
}

impl FunctionHandle {
    pub fn new(
        domain: Vec<(f64, f64)>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if domain.is_empty() || domain.iter().any(|&(a, b)| !a.is_finite() || a >= b) {
            return Err(Error::InvalidArgument(format!("bad domain {domain:?}")));
        }
        Ok(FunctionHandle {
            eval: Arc::new(eval),
            domain,
            name: None,
        })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn d(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn call(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn call_checked(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.domain.len() {
            return Err(Error::ShapeMismatch(format!(
                "point has {} coordinates, function takes {}",
                x.len(),
                self.domain.len()
            )));
        }
        let v = self.call(x);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "{} at {:?}",
                self.name.as_deref().unwrap_or("function"),
                x
            )));
        }
        Ok(v)
    }
}

/// Anything that can be evaluated over the domain box; implemented by
/// function handles, interpolants, tree tensor networks, and compositional
/// specs. `eval_grid` evaluates over the row-major product of per-mode point
/// lists and exists so structured approximations can amortize work.
pub trait Evaluable {
    fn domain(&self) -> Vec<(f64, f64)>;

    fn eval_point(&self, x: &[f64]) -> f64;

    /// Natural per-mode resolution, if any (basis dimensions).
    fn grid_hint(&self) -> Option<Vec<usize>> {
        None
    }

    fn eval_grid(&self, pts: &[Vec<f64>]) -> Result<Vec<f64>> {
        let total: usize = pts.iter().map(|p| p.len()).product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; pts.len()];
        let mut x = vec![0.0; pts.len()];
        for _ in 0..total {
            for (k, &i) in idx.iter().enumerate() {
                x[k] = pts[k][i];
            }
            out.push(self.eval_point(&x));
            let shape: Vec<usize> = pts.iter().map(|p| p.len()).collect();
            crate::tensor::advance(&mut idx, &shape);
        }
        Ok(out)
    }
}

impl Evaluable for FunctionHandle {
    fn domain(&self) -> Vec<(f64, f64)> {
        self.domain.clone()
    }

    fn eval_point(&self, x: &[f64]) -> f64 {
        self.call(x)
    }
}

/// Coefficient tensor plus bases, viewed as a function.
#[derive(Debug, Clone)]
pub struct Interpolant<'a> {
    coeffs: &'a FullTensor,
    bases: &'a [UnivariateBasis],
}

impl<'a> Interpolant<'a> {
    pub fn new(coeffs: &'a FullTensor, bases: &'a [UnivariateBasis]) -> Result<Self> {
        if coeffs.ndim() != bases.len()
            || coeffs
                .shape()
                .iter()
                .zip(bases)
                .any(|(&n, b)| n != b.dim())
        {
            return Err(Error::ShapeMismatch(format!(
                "coefficient shape {:?} does not match basis dims {:?}",
                coeffs.shape(),
                bases.iter().map(|b| b.dim()).collect::<Vec<_>>()
            )));
        }
        Ok(Interpolant { coeffs, bases })
    }
}

impl Evaluable for Interpolant<'_> {
    fn domain(&self) -> Vec<(f64, f64)> {
        self.bases.iter().map(|b| b.interval()).collect()
    }

    fn eval_point(&self, x: &[f64]) -> f64 {
        // Expand the (at most 2^d) nonzero product terms.
        let sparse: Vec<Vec<(usize, f64)>> = self
            .bases
            .iter()
            .zip(x)
            .map(|(b, &xi)| b.eval_sparse(xi))
            .collect();
        let mut total = 0.0;
        let mut pick = vec![0usize; sparse.len()];
        loop {
            let mut w = 1.0;
            let mut idx = Vec::with_capacity(sparse.len());
            for (k, &p) in pick.iter().enumerate() {
                let (i, v) = sparse[k][p];
                w *= v;
                idx.push(i);
            }
            total += w * self.coeffs.get(&idx);
            // Odometer over the ragged choice lists.
            let mut ax = sparse.len();
            loop {
                if ax == 0 {
                    return total;
                }
                ax -= 1;
                pick[ax] += 1;
                if pick[ax] < sparse[ax].len() {
                    break;
                }
                pick[ax] = 0;
            }
        }
    }

    fn grid_hint(&self) -> Option<Vec<usize>> {
        Some(self.bases.iter().map(|b| b.dim()).collect())
    }

    fn eval_grid(&self, pts: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut t = self.coeffs.clone();
        for (mode, (basis, p)) in self.bases.iter().zip(pts).enumerate() {
            t = t.multiply_mode(mode + 1, &basis.eval_matrix(p))?;
        }
        Ok(t.data().to_vec())
    }
}

/// Samples interpolation coefficients of `f` in the given per-mode bases:
/// values at cell midpoints (constant) or grid nodes (linear). When every
/// basis is orthonormal the values are rescaled accordingly and the tensor
/// is flagged orthonormal; the piecewise-linear kind never is.
pub fn sample_coefficients(
    f: &FunctionHandle,
    bases: &[UnivariateBasis],
) -> Result<FullTensor> {
    if f.d() != bases.len() {
        return Err(Error::ShapeMismatch(format!(
            "function takes {} modes, {} bases given",
            f.d(),
            bases.len()
        )));
    }
    for (k, (basis, &(da, db))) in bases.iter().zip(f.domain()).enumerate() {
        let (a, b) = basis.interval();
        if (a - da).abs() > 1e-12 || (b - db).abs() > 1e-12 {
            return Err(Error::ShapeMismatch(format!(
                "basis interval [{a}, {b}] does not match domain [{da}, {db}] on mode {}",
                k + 1
            )));
        }
    }
    let nodes: Vec<Vec<f64>> = bases.iter().map(|b| b.nodes()).collect();
    let all_orthonormal = bases.iter().all(|b| b.is_orthonormal());
    // Orthonormal constants are values scaled by 1/sqrt(n) per mode.
    let scale: f64 = if all_orthonormal {
        bases.iter().map(|b| 1.0 / (b.dim() as f64).sqrt()).product()
    } else {
        1.0
    };
    let shape: Vec<usize> = bases.iter().map(|b| b.dim()).collect();
    let mut x = vec![0.0; bases.len()];
    let mut err = None;
    let t = FullTensor::from_fn(shape, |idx| {
        for (k, &i) in idx.iter().enumerate() {
            x[k] = nodes[k][i];
        }
        let v = f.call(&x);
        if !v.is_finite() && err.is_none() {
            err = Some(Error::NonFinite(format!("sampling at {x:?}")));
        }
        scale * v
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(t.with_orthonormal(all_orthonormal))
}

/// Rewrites raw interpolation coefficients into an L2-orthonormal
/// coordinate system (per-mode Gram Cholesky transport). The result's
/// Euclidean norm is the interpolant's L2 norm under the uniform
/// probability measure.
pub fn orthonormalize(t: &FullTensor, bases: &[UnivariateBasis]) -> Result<FullTensor> {
    if t.ndim() != bases.len()
        || t.shape().iter().zip(bases).any(|(&n, b)| n != b.dim())
    {
        return Err(Error::ShapeMismatch(format!(
            "tensor shape {:?} vs basis dims {:?}",
            t.shape(),
            bases.iter().map(|b| b.dim()).collect::<Vec<_>>()
        )));
    }
    let mut out = t.clone();
    for (mode, basis) in bases.iter().enumerate() {
        out = out.multiply_mode(mode + 1, &basis.gram_cholesky_transpose()?)?;
    }
    Ok(out.with_orthonormal(true))
}

/// Midpoint grid with `counts[k]` points on the k-th interval.
pub fn midpoint_grid(domain: &[(f64, f64)], counts: &[usize]) -> Vec<Vec<f64>> {
    domain
        .iter()
        .zip(counts)
        .map(|(&(a, b), &m)| {
            let h = (b - a) / m as f64;
            (0..m).map(|i| a + (i as f64 + 0.5) * h).collect()
        })
        .collect()
}

/// L2 (uniform probability measure) or sup-norm error between `f` and an
/// approximation, estimated on a fine midpoint grid that refines the
/// approximation's own resolution `q` times per mode.
pub fn measure_error(
    f: &FunctionHandle,
    g: &dyn Evaluable,
    norm: Norm,
    oversample: usize,
) -> Result<f64> {
    if oversample == 0 {
        return Err(Error::InvalidArgument("oversample must be >= 1".into()));
    }
    let hint = g
        .grid_hint()
        .unwrap_or_else(|| vec![DEFAULT_FINE_RESOLUTION; f.d()]);
    if hint.len() != f.d() {
        return Err(Error::ShapeMismatch(format!(
            "grid hint covers {} modes, function takes {}",
            hint.len(),
            f.d()
        )));
    }
    let counts: Vec<usize> = hint.iter().map(|&n| n * oversample).collect();
    measure_error_on_grid(f, g, &counts, norm)
}

/// [`measure_error`] with explicit per-mode grid counts. Grids above
/// [`GRID_BUDGET`] points are rejected.
pub fn measure_error_on_grid(
    f: &FunctionHandle,
    g: &dyn Evaluable,
    counts: &[usize],
    norm: Norm,
) -> Result<f64> {
    let domain = f.domain().to_vec();
    let gdom = g.domain();
    if counts.len() != domain.len() || counts.iter().any(|&c| c == 0) {
        return Err(Error::InvalidArgument(format!("bad grid counts {counts:?}")));
    }
    if gdom.len() != domain.len()
        || gdom
            .iter()
            .zip(&domain)
            .any(|(&(a, b), &(c, d))| (a - c).abs() > 1e-9 || (b - d).abs() > 1e-9)
    {
        return Err(Error::ShapeMismatch(format!(
            "domains differ: {domain:?} vs {gdom:?}"
        )));
    }
    let total: u128 = counts.iter().map(|&c| c as u128).product();
    if total > GRID_BUDGET as u128 {
        return Err(Error::GridBudget {
            points: total,
            budget: GRID_BUDGET,
        });
    }
    let pts = midpoint_grid(&domain, counts);
    let gv = g.eval_grid(&pts)?;

    let mut idx = vec![0usize; counts.len()];
    let mut x = vec![0.0; counts.len()];
    let mut sum_sq = 0.0f64;
    let mut max_abs = 0.0f64;
    for &gval in &gv {
        for (k, &i) in idx.iter().enumerate() {
            x[k] = pts[k][i];
        }
        let fv = f.call(&x);
        if !fv.is_finite() || !gval.is_finite() {
            return Err(Error::NonFinite(format!("error evaluation at {x:?}")));
        }
        let diff = fv - gval;
        sum_sq += diff * diff;
        max_abs = max_abs.max(diff.abs());
        crate::tensor::advance(&mut idx, counts);
    }
    Ok(match norm {
        Norm::L2 => (sum_sq / total as f64).sqrt(),
        Norm::Linf => max_abs,
    })
}

/// Metadata for one named test function.
#[derive(Debug, Clone, Serialize)]
pub struct RegistryEntry {
    pub name: &'static str,
    /// Sobolev order the declared derivative bounds hold at.
    pub smoothness: usize,
    pub b1: f64,
    pub bstar: f64,
    pub summary: &'static str,
}

/// Built-in test functions addressable by name. All live on [0,1]^d.
pub fn registry() -> Vec<RegistryEntry> {
    vec![
        RegistryEntry {
            name: "rank-one",
            smoothness: 2,
            b1: 1.0,
            bstar: 1.0,
            summary: "product of per-mode affine factors; every matricization has rank 1",
        },
        RegistryEntry {
            name: "sum",
            smoothness: 2,
            b1: 1.0,
            bstar: 1.0,
            summary: "mean of the coordinates; every matricization has rank 2",
        },
        RegistryEntry {
            name: "sum-power",
            smoothness: 2,
            b1: 1.0,
            bstar: 1.0,
            summary: "cubed coordinate mean; smooth with slowly growing ranks",
        },
        RegistryEntry {
            name: "runge-multiplicative",
            smoothness: 2,
            b1: 7.0,
            bstar: 50.0,
            summary: "product of univariate Runge bumps 1/(1+25(x-1/2)^2); rank 1",
        },
        RegistryEntry {
            name: "inverse-sum",
            smoothness: 2,
            b1: 1.0,
            bstar: 2.0,
            summary: "1/(1+sum x); genuinely coupled with fast singular value decay",
        },
        RegistryEntry {
            name: "max-affine",
            smoothness: 1,
            b1: 1.0,
            bstar: 1.0,
            summary: "max of three affine ridges; Lipschitz, not differentiable",
        },
    ]
}

/// Instantiates a registry function on [0,1]^d.
pub fn registry_function(name: &str, d: usize) -> Result<FunctionHandle> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("need d >= 2, got {d}")));
    }
    let domain = vec![(0.0, 1.0); d];
    let handle = match name {
        "rank-one" => FunctionHandle::new(domain, |x| {
            x.iter().map(|&v| 0.6 + 0.4 * v).product()
        })?,
        "sum" => FunctionHandle::new(domain, move |x| {
            x.iter().sum::<f64>() / x.len() as f64
        })?,
        "sum-power" => FunctionHandle::new(domain, move |x| {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            m * m * m
        })?,
        "runge-multiplicative" => FunctionHandle::new(domain, |x| {
            x.iter()
                .map(|&v| 1.0 / (1.0 + 25.0 * (v - 0.5) * (v - 0.5)))
                .product()
        })?,
        "inverse-sum" => FunctionHandle::new(domain, |x| {
            1.0 / (1.0 + x.iter().sum::<f64>())
        })?,
        "max-affine" => FunctionHandle::new(domain, move |x| {
            let d = x.len() as f64;
            let mean = x.iter().sum::<f64>() / d;
            let tilt = x
                .iter()
                .enumerate()
                .map(|(i, &v)| if i % 2 == 0 { v } else { -v })
                .sum::<f64>()
                / d;
            mean.max(0.8 - mean).max(0.4 + 0.5 * tilt)
        })?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown registry function '{other}'"
            )))
        }
    };
    Ok(handle.named(name))
}
