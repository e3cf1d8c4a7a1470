//! Hyperbolic-cross combinatorics, complexity predictors, and empirical
//! rate fitting.
//!
//! The hyperbolic cross of depth `L` over `d` modes is the set of dyadic
//! level tuples `l` with `|l|_1 <= L`, each level contributing `2^l`
//! translates per mode. Its cardinality and the induced bounds on subset
//! matricization ranks drive the mixed-smoothness predictors; the
//! compositional predictors come from rank schedules on the composition
//! tree. All predictors return leading-order terms with the dimension
//! constant fixed to a configurable prefactor.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Exact binomial coefficient with an overflow guard.
pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc stays exact: after multiplying by (n - i) it is divisible
        // by i + 1 because it equals C(n, i + 1) (i + 1)!/( ... ) along
        // the way.
        acc = acc.checked_mul((n - i) as u128).ok_or_else(|| {
            Error::InvalidArgument(format!("binomial({n}, {k}) overflows"))
        })?;
        acc /= (i + 1) as u128;
    }
    Ok(acc)
}

fn pow2(j: usize) -> Result<u128> {
    if j >= 128 {
        return Err(Error::InvalidArgument(format!("2^{j} overflows")));
    }
    Ok(1u128 << j)
}

/// Sum over total levels `0..=top` of (level tuples over `modes` modes)
/// times translates: sum_j C(j + modes - 1, modes - 1) 2^j.
fn dyadic_count(modes: usize, top: usize) -> Result<u128> {
    let mut total: u128 = 0;
    for j in 0..=top {
        let tuples = binomial((j + modes - 1) as u64, (modes - 1) as u64)?;
        let term = tuples.checked_mul(pow2(j)?).ok_or_else(|| {
            Error::InvalidArgument(format!("hyperbolic cross count overflows at level {j}"))
        })?;
        total = total.checked_add(term).ok_or_else(|| {
            Error::InvalidArgument("hyperbolic cross count overflows".into())
        })?;
    }
    Ok(total)
}

/// The dyadic hyperbolic cross: level tuples `l` in N^d with `|l|_1 <= L`,
/// `2^l` translates per mode and level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HyperbolicCross {
    d: usize,
    level: usize,
}

impl HyperbolicCross {
    pub fn new(d: usize, level: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        Ok(HyperbolicCross { d, level })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Indices contributed by level tuples with `|l|_1` exactly `j`.
    pub fn count_at(&self, j: usize) -> Result<u128> {
        if j > self.level {
            return Ok(0);
        }
        let tuples = binomial((j + self.d - 1) as u64, (self.d - 1) as u64)?;
        tuples.checked_mul(pow2(j)?).ok_or_else(|| {
            Error::InvalidArgument(format!("hyperbolic cross count overflows at level {j}"))
        })
    }

    pub fn cardinality(&self) -> Result<u128> {
        dyadic_count(self.d, self.level)
    }

    /// Rank bound for the `alpha`-matricization of a coefficient tensor
    /// supported on this cross: indices whose `alpha`-levels sum to at
    /// most L/2, plus complement indices whose levels sum to strictly
    /// less than L/2.
    pub fn alpha_rank_bound(&self, alpha: &[usize]) -> Result<u128> {
        let a = alpha.len();
        if a == 0 || a >= self.d {
            return Err(Error::InvalidArgument(format!(
                "mode subset must be a nonempty strict subset, got {alpha:?} in d = {}",
                self.d
            )));
        }
        let mut seen = vec![false; self.d + 1];
        for &m in alpha {
            if m == 0 || m > self.d || seen[m] {
                return Err(Error::InvalidArgument(format!(
                    "bad mode subset {alpha:?} for d = {}",
                    self.d
                )));
            }
            seen[m] = true;
        }
        let ac = self.d - a;
        let low = dyadic_count(a, self.level / 2)?;
        // Strict half: |l|_1 < L/2, empty only at L = 0.
        let high = if self.level == 0 {
            0
        } else {
            dyadic_count(ac, self.level.div_ceil(2) - 1)?
        };
        low.checked_add(high)
            .ok_or_else(|| Error::InvalidArgument("rank bound overflows".into()))
    }
}

/// See [`HyperbolicCross::cardinality`].
pub fn hc_cardinality(d: usize, level: usize) -> Result<u128> {
    HyperbolicCross::new(d, level)?.cardinality()
}

/// See [`HyperbolicCross::alpha_rank_bound`].
pub fn hc_alpha_rank_bound(d: usize, level: usize, alpha: &[usize]) -> Result<u128> {
    HyperbolicCross::new(d, level)?.alpha_rank_bound(alpha)
}

/// Leading-order envelope `2^{L/2} (L/2)^{#alpha - 1}` the rank bound is
/// compared against.
pub fn hc_rank_envelope(alpha_size: usize, level: usize) -> f64 {
    let half = level as f64 / 2.0;
    2f64.powf(half) * half.powi(alpha_size as i32 - 1)
}

/// Dyadic level of a zero-based translate index: levels own index blocks
/// of size 2^l starting at 2^l - 1.
pub fn dyadic_level(index: usize) -> usize {
    (index + 1).ilog2() as usize
}

/// Per-mode dimension holding every translate up to `level`.
pub fn dyadic_dim(level: usize) -> usize {
    (1usize << (level + 1)) - 1
}

/// Complexity scaling models, one per approximation-class result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictModel {
    /// Isotropic Sobolev smoothness s, any tree: eps^(-d/s).
    Sobolev,
    /// Mixed smoothness, trivial depth-one tree.
    MixedTrivial,
    /// Mixed smoothness, binary tree.
    MixedBinary,
    /// Compositional class on the trivial tree.
    CompositionalTrivial,
    /// Compositional class on a tree of bounded arity.
    CompositionalBoundedArity,
}

impl PredictModel {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictModel::Sobolev => "sobolev",
            PredictModel::MixedTrivial => "mixed-trivial",
            PredictModel::MixedBinary => "mixed-binary",
            PredictModel::CompositionalTrivial => "compositional-trivial",
            PredictModel::CompositionalBoundedArity => "compositional-bounded-arity",
        }
    }

    pub fn all() -> [PredictModel; 5] {
        [
            PredictModel::Sobolev,
            PredictModel::MixedTrivial,
            PredictModel::MixedBinary,
            PredictModel::CompositionalTrivial,
            PredictModel::CompositionalBoundedArity,
        ]
    }
}

impl FromStr for PredictModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PredictModel::all()
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown model '{s}', known: {:?}",
                    PredictModel::all().map(|m| m.as_str())
                ))
            })
    }
}

impl fmt::Display for PredictModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inputs for [`predict_complexity`]; tree and derivative parameters are
/// only consulted by the models that use them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictParams {
    pub d: usize,
    pub s: usize,
    pub eps: f64,
    /// Tree arity, for the bounded-arity compositional model.
    #[serde(default)]
    pub arity: Option<usize>,
    /// Tree depth, for the bounded-arity compositional model.
    #[serde(default)]
    pub depth: Option<usize>,
    /// First-derivative bound B1.
    #[serde(default)]
    pub b1: Option<f64>,
    /// Largest derivative bound B*.
    #[serde(default)]
    pub bstar: Option<f64>,
    /// Stand-in for the unspecified dimension constant.
    #[serde(default = "default_prefactor")]
    pub prefactor: f64,
}

fn default_prefactor() -> f64 {
    1.0
}

impl PredictParams {
    pub fn new(d: usize, s: usize, eps: f64) -> Self {
        PredictParams {
            d,
            s,
            eps,
            arity: None,
            depth: None,
            b1: None,
            bstar: None,
            prefactor: 1.0,
        }
    }
}

/// One predicted complexity value with its inputs and the caveats that
/// qualify it.
#[derive(Debug, Clone, Serialize)]
pub struct PredictorOutput {
    pub model: String,
    pub inputs: Value,
    pub value: f64,
    pub caveats: Vec<String>,
}

/// Leading-order complexity (degrees of freedom) to reach accuracy `eps`
/// under the given approximation-class model. Constants that the theory
/// leaves unquantified are fixed to `prefactor`.
pub fn predict_complexity(model: PredictModel, p: &PredictParams) -> Result<PredictorOutput> {
    if !(p.eps > 0.0 && p.eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "accuracy must lie in (0, 1), got {}",
            p.eps
        )));
    }
    if p.d == 0 || p.s == 0 {
        return Err(Error::InvalidArgument(format!(
            "need d >= 1 and s >= 1, got d = {}, s = {}",
            p.d, p.s
        )));
    }
    if !(p.prefactor > 0.0) || !p.prefactor.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bad prefactor {}",
            p.prefactor
        )));
    }
    let d = p.d as f64;
    let s = p.s as f64;
    let eps = p.eps;
    let log_inv = (1.0 / eps).ln();
    let mut caveats = vec![format!(
        "leading-order term only; the dimension constant is fixed to {}",
        p.prefactor
    )];
    let value = match model {
        PredictModel::Sobolev => eps.powf(-d / s),
        PredictModel::MixedTrivial => {
            if p.d < 2 {
                return Err(Error::InvalidArgument(
                    "mixed models need d >= 2".into(),
                ));
            }
            caveats.push("constant may depend exponentially on d".into());
            eps.powf(-d / (2.0 * s)) * log_inv.powf(d * (d - 2.0))
        }
        PredictModel::MixedBinary => {
            if p.d < 2 {
                return Err(Error::InvalidArgument(
                    "mixed models need d >= 2".into(),
                ));
            }
            caveats.push("constant may depend exponentially on d".into());
            eps.powf(-3.0 / (2.0 * s)) * log_inv.powf(3.0 * (d - 2.0))
        }
        PredictModel::CompositionalTrivial => {
            caveats.push("constant may depend super-exponentially on d".into());
            eps.powf(-d / s)
        }
        PredictModel::CompositionalBoundedArity => {
            let a = p.arity.ok_or_else(|| {
                Error::InvalidArgument("bounded-arity model needs 'arity'".into())
            })? as f64;
            let depth = p.depth.ok_or_else(|| {
                Error::InvalidArgument("bounded-arity model needs 'depth'".into())
            })? as f64;
            let b1 = p.b1.unwrap_or(1.0);
            let bstar = p.bstar.unwrap_or(1.0);
            if a < 2.0 || depth < 1.0 || b1 < 1.0 || bstar < b1.max(1.0) - 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "need arity >= 2, depth >= 1, 1 <= b1 <= bstar; got a = {a}, depth = {depth}, b1 = {b1}, bstar = {bstar}"
                )));
            }
            caveats.push("constant polynomial in d".into());
            depth.powf(a + 1.0)
                * eps.powf(-(a + 1.0) / s)
                * b1.powf((a + 1.0) * depth)
                * bstar.powf(a + 1.0)
        }
    };
    let value = value * p.prefactor;
    if !value.is_finite() {
        return Err(Error::NonFinite(format!(
            "predicted complexity for {model} at {p:?}"
        )));
    }
    Ok(PredictorOutput {
        model: model.to_string(),
        inputs: json!({
            "d": p.d,
            "s": p.s,
            "eps": p.eps,
            "arity": p.arity,
            "depth": p.depth,
            "b1": p.b1,
            "bstar": p.bstar,
            "prefactor": p.prefactor,
        }),
        value,
        caveats,
    })
}

/// Least-squares power-law fit of error against complexity.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    /// Slope of log error vs log complexity.
    pub slope: f64,
    /// Intercept: log error extrapolated to complexity 1.
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
}

/// Fits `log e = intercept + slope log N` by least squares over
/// `(complexity, error)` samples. Needs at least three samples with
/// distinct complexities, all values positive.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(n, e)| !(n > 0.0) || !(e > 0.0) || !n.is_finite() || !e.is_finite())
    {
        return Err(Error::InvalidArgument(
            "rate fit needs strictly positive finite samples".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| n.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    if sxx < 1e-24 {
        return Err(Error::InvalidArgument(
            "rate fit abscissae are degenerate".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(RateFit {
        slope,
        intercept,
        residual,
    })
}
