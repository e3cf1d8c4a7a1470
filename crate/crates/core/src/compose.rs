//! Tree-structured compositional functions and their constructive low-rank
//! encoding.
//!
//! A compositional spec assigns one component function to every non-leaf
//! node of a dimension tree; leaves pass their coordinate through, and each
//! node applies its component to the children's outputs. Declared output
//! ranges and derivative bounds make two things possible without ever
//! forming a dense tensor: a priori L2/sup-norm error bounds for a given
//! rank budget, and a direct encoder that writes the composition into a
//! tree tensor network by tabulating components on interpolation nodes.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::discretize::{BasisKind, Evaluable, UnivariateBasis};
use crate::error::{Error, Result};
use crate::expr::{parse_expression, CompiledExpr};
use crate::tensor::{strides, FullTensor};
use crate::tree::{DimensionTree, NodeId};
use crate::ttn::{RankAssignment, TreeTensorNetwork};

/// Probe outputs may overshoot a declared range by this fraction of the
/// range length before construction fails; the encoder clamps anything
/// smaller.
pub const RANGE_MARGIN: f64 = 0.05;

/// Cap on total probe evaluations per component during range validation.
const PROBE_BUDGET: f64 = 2e5;

/// How a component function was defined, kept for serialization.
#[derive(Debug, Clone, PartialEq)]
pub enum ComponentSource {
    Named(String),
    Expression(String),
}

/// One node's function: children outputs in, scalar out, with a declared
/// output range.
#[derive(Clone)]
pub struct ComponentFunction {
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    source: ComponentSource,
    /// Required arity, when the definition fixes one.
    arity: Option<usize>,
    range: (f64, f64),
}

impl fmt::Debug for ComponentFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComponentFunction")
            .field("source", &self.source)
            .field("range", &self.range)
            .finish()
    }
}

/// Derivative bounds and eligibility of one named component.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentInfo {
    pub name: &'static str,
    /// Bound on first partial derivatives (any arity >= 2).
    pub b1: f64,
    /// Bound on second-order partials, infinite when not differentiable.
    pub b2: f64,
    pub max_smoothness: usize,
    /// Largest s at which the component may sit at the root (its full
    /// W^{s,inf} norm is at most 1); 0 if never.
    pub root_max_smoothness: usize,
    pub summary: &'static str,
}

pub fn component_registry() -> Vec<ComponentInfo> {
    let pi = std::f64::consts::PI;
    vec![
        ComponentInfo {
            name: "mean",
            b1: 1.0,
            b2: 1.0,
            max_smoothness: 2,
            root_max_smoothness: 2,
            summary: "arithmetic mean of the inputs",
        },
        ComponentInfo {
            name: "product",
            b1: 1.0,
            b2: 1.0,
            max_smoothness: 2,
            root_max_smoothness: 2,
            summary: "product of the inputs",
        },
        ComponentInfo {
            name: "sin-mean",
            b1: pi / 4.0,
            b2: pi * pi / 8.0,
            max_smoothness: 2,
            root_max_smoothness: 1,
            summary: "0.5 + 0.5 sin(pi (2 mean - 1) / 2); smooth, curvature near 1.23",
        },
        ComponentInfo {
            name: "tent-mean",
            b1: 1.0,
            b2: f64::INFINITY,
            max_smoothness: 1,
            root_max_smoothness: 1,
            summary: "tent function of the mean; Lipschitz kink at the midpoint",
        },
        ComponentInfo {
            name: "expand-tent",
            b1: 1.5,
            b2: f64::INFINITY,
            max_smoothness: 1,
            root_max_smoothness: 0,
            summary: "1.5 x tent of the mean, capped at 1; expansive slope 3/arity",
        },
    ]
}

fn named_eval(name: &str) -> Option<Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>> {
    let f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> = match name {
        "mean" => Arc::new(|u: &[f64]| u.iter().sum::<f64>() / u.len() as f64),
        "product" => Arc::new(|u: &[f64]| u.iter().product()),
        "sin-mean" => Arc::new(|u: &[f64]| {
            let m = u.iter().sum::<f64>() / u.len() as f64;
            0.5 + 0.5 * (std::f64::consts::FRAC_PI_2 * (2.0 * m - 1.0)).sin()
        }),
        "tent-mean" => Arc::new(|u: &[f64]| {
            let m = u.iter().sum::<f64>() / u.len() as f64;
            1.0 - (2.0 * m - 1.0).abs()
        }),
        "expand-tent" => Arc::new(|u: &[f64]| {
            let m = u.iter().sum::<f64>() / u.len() as f64;
            (1.5 * (1.0 - (2.0 * m - 1.0).abs())).min(1.0)
        }),
        _ => return None,
    };
    Some(f)
}

impl ComponentFunction {
    /// A registry component; all of them map [0,1]^arity into [0,1].
    pub fn named(name: &str) -> Result<Self> {
        let eval = named_eval(name).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown component '{name}'"))
        })?;
        Ok(ComponentFunction {
            eval,
            source: ComponentSource::Named(name.to_string()),
            arity: None,
            range: (0.0, 1.0),
        })
    }

    /// A component from expression source over u1..u{arity}.
    pub fn from_expr(src: &str, arity: usize) -> Result<Self> {
        let compiled: CompiledExpr = parse_expression(src, arity)?;
        let source = ComponentSource::Expression(src.to_string());
        Ok(ComponentFunction {
            eval: Arc::new(move |u: &[f64]| compiled.eval(u)),
            source,
            arity: Some(arity),
            range: (0.0, 1.0),
        })
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "bad component range [{lo}, {hi}]"
            )));
        }
        self.range = (lo, hi);
        Ok(self)
    }

    pub fn call(&self, args: &[f64]) -> f64 {
        (self.eval)(args)
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn source(&self) -> &ComponentSource {
        &self.source
    }

    pub fn to_json_value(&self) -> Value {
        let mut v = match &self.source {
            ComponentSource::Named(n) => json!({ "name": n }),
            ComponentSource::Expression(e) => json!({ "expr": e }),
        };
        v["range"] = json!([self.range.0, self.range.1]);
        v
    }

    pub fn from_json_value(v: &Value, arity: usize) -> Result<Self> {
        let mut c = match (v.get("name"), v.get("expr")) {
            (Some(n), None) => {
                let name = n.as_str().ok_or_else(|| {
                    Error::InvalidArgument("component name must be a string".into())
                })?;
                ComponentFunction::named(name)?
            }
            (None, Some(e)) => {
                let src = e.as_str().ok_or_else(|| {
                    Error::InvalidArgument("component expr must be a string".into())
                })?;
                ComponentFunction::from_expr(src, arity)?
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "component needs exactly one of 'name' or 'expr'".into(),
                ))
            }
        };
        if let Some(r) = v.get("range") {
            let pair: Vec<f64> = serde_json::from_value(r.clone())?;
            if pair.len() != 2 {
                return Err(Error::InvalidArgument("range must be [lo, hi]".into()));
            }
            c = c.with_range(pair[0], pair[1])?;
        }
        Ok(c)
    }
}

/// A function built by composing one component per non-leaf tree node.
#[derive(Debug, Clone)]
pub struct CompositionalSpec {
    tree: DimensionTree,
    domain: Vec<(f64, f64)>,
    components: Vec<Option<ComponentFunction>>,
    s: usize,
    b: Vec<f64>,
    c_general: f64,
}

impl CompositionalSpec {
    /// Builds and validates a spec: every non-leaf node needs a component
    /// keyed by its label, derivative bounds must cover the declared
    /// smoothness, and a probe grid checks each component's outputs stay
    /// within its declared range (up to [`RANGE_MARGIN`]).
    pub fn new(
        tree: DimensionTree,
        domain: Vec<(f64, f64)>,
        components: BTreeMap<String, ComponentFunction>,
        s: usize,
        b: Vec<f64>,
    ) -> Result<Self> {
        if domain.len() != tree.d()
            || domain.iter().any(|&(a, z)| !a.is_finite() || !z.is_finite() || a >= z)
        {
            return Err(Error::InvalidArgument(format!("bad domain {domain:?}")));
        }
        if s == 0 || b.len() != s {
            return Err(Error::InvalidArgument(format!(
                "need one derivative bound per order 1..={s}, got {}",
                b.len()
            )));
        }
        if b.iter().any(|&v| !(v >= 1.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "derivative bounds must be finite and >= 1, got {b:?}"
            )));
        }
        let mut by_node: Vec<Option<ComponentFunction>> = vec![None; tree.node_count()];
        let mut used = 0usize;
        for id in tree.node_ids() {
            if tree.is_leaf(id) {
                continue;
            }
            let label = tree.label(id);
            let c = components.get(&label).ok_or_else(|| {
                Error::InvalidArgument(format!("no component for node {label}"))
            })?;
            if let Some(a) = c.arity {
                if a != tree.children(id).len() {
                    return Err(Error::InvalidArgument(format!(
                        "component at {label} takes {a} inputs, node has {} children",
                        tree.children(id).len()
                    )));
                }
            }
            by_node[id.index()] = Some(c.clone());
            used += 1;
        }
        if used != components.len() {
            return Err(Error::InvalidArgument(
                "component map names nodes that are leaves or absent".into(),
            ));
        }
        let spec = CompositionalSpec {
            tree,
            domain,
            components: by_node,
            s,
            b,
            c_general: 1.0,
        };
        spec.validate_ranges()?;
        Ok(spec)
    }

    /// Overrides the constant in the order >= 3 smoothness formula.
    pub fn with_general_constant(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("bad constant {c}")));
        }
        self.c_general = c;
        Ok(self)
    }

    pub fn tree(&self) -> &DimensionTree {
        &self.tree
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn smoothness(&self) -> usize {
        self.s
    }

    pub fn derivative_bounds(&self) -> &[f64] {
        &self.b
    }

    pub fn component(&self, id: NodeId) -> Option<&ComponentFunction> {
        self.components[id.index()].as_ref()
    }

    /// The interval feeding the edge above this node: the domain interval
    /// for a leaf, the declared output range otherwise.
    pub fn edge_interval(&self, id: NodeId) -> (f64, f64) {
        if self.tree.is_leaf(id) {
            self.domain[self.tree.modes(id)[0] - 1]
        } else {
            self.components[id.index()]
                .as_ref()
                .expect("non-leaf component")
                .range()
        }
    }

    fn validate_ranges(&self) -> Result<()> {
        for id in self.tree.node_ids() {
            let Some(c) = &self.components[id.index()] else {
                continue;
            };
            let children = self.tree.children(id);
            let a = children.len();
            // Probe inputs per axis, shrunk for high arity to respect the
            // evaluation budget.
            let per_axis = (PROBE_BUDGET.powf(1.0 / a as f64).floor() as usize).clamp(3, 33);
            let grids: Vec<Vec<f64>> = children
                .iter()
                .map(|&ch| {
                    let (lo, hi) = self.edge_interval(ch);
                    (0..per_axis)
                        .map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64)
                        .collect()
                })
                .collect();
            let (lo, hi) = c.range();
            let margin = RANGE_MARGIN * (hi - lo);
            let shape: Vec<usize> = vec![per_axis; a];
            let total: usize = shape.iter().product();
            let mut idx = vec![0usize; a];
            let mut args = vec![0.0f64; a];
            for _ in 0..total {
                for (k, &i) in idx.iter().enumerate() {
                    args[k] = grids[k][i];
                }
                let y = c.call(&args);
                if !y.is_finite() || y < lo - margin || y > hi + margin {
                    return Err(Error::RangeViolation {
                        node: self.tree.label(id),
                        value: y,
                        lo,
                        hi,
                    });
                }
                crate::tensor::advance(&mut idx, &shape);
            }
        }
        Ok(())
    }

    fn eval_nodes(&self, x: &[f64], check: bool) -> Result<f64> {
        if x.len() != self.tree.d() {
            return Err(Error::ShapeMismatch(format!(
                "point has {} coordinates, spec takes {}",
                x.len(),
                self.tree.d()
            )));
        }
        let order: Vec<NodeId> = self.tree.node_ids().collect();
        let mut vals = vec![0.0f64; self.tree.node_count()];
        let mut args = Vec::new();
        for &id in order.iter().rev() {
            let v = if self.tree.is_leaf(id) {
                x[self.tree.modes(id)[0] - 1]
            } else {
                args.clear();
                args.extend(self.tree.children(id).iter().map(|c| vals[c.index()]));
                let y = self.components[id.index()]
                    .as_ref()
                    .expect("non-leaf component")
                    .call(&args);
                if check {
                    let (lo, hi) = self.components[id.index()].as_ref().unwrap().range();
                    let margin = RANGE_MARGIN * (hi - lo);
                    if !y.is_finite() || y < lo - margin || y > hi + margin {
                        return Err(Error::RangeViolation {
                            node: self.tree.label(id),
                            value: y,
                            lo,
                            hi,
                        });
                    }
                }
                y
            };
            vals[id.index()] = v;
        }
        Ok(vals[self.tree.root().index()])
    }

    /// Composes the tree at one point.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.eval_nodes(x, false).expect("validated spec")
    }

    /// Like [`evaluate`](Self::evaluate) but fails if any intermediate
    /// output leaves its declared range by more than the margin.
    pub fn evaluate_checked(&self, x: &[f64]) -> Result<f64> {
        self.eval_nodes(x, true)
    }

    /// Bound on W^{s,inf} norms of `ell`-fold compositions of components,
    /// evaluated at smoothness `s_eff <= s`. For a node the relevant `ell`
    /// is its level: the number of components stacked between it and the
    /// root output.
    pub fn smoothness_constant(&self, s_eff: usize, ell: usize) -> f64 {
        assert!(s_eff >= 1 && s_eff <= self.s && ell >= 1);
        let b1 = self.b[0];
        match s_eff {
            1 => b1.powi(ell as i32 - 1),
            2 => ell as f64 * b1.powi(2 * ell as i32 - 2) * self.b[1],
            _ => {
                let bstar = self.b[..s_eff].iter().cloned().fold(1.0f64, f64::max);
                (self.c_general * ell as f64).powi(s_eff as i32 - 1)
                    * b1.powi((s_eff * (ell - 1)) as i32)
                    * bstar.powi(s_eff as i32)
            }
        }
    }

    pub fn to_json_value(&self) -> Value {
        let mut comps = serde_json::Map::new();
        for id in self.tree.node_ids() {
            if let Some(c) = &self.components[id.index()] {
                comps.insert(self.tree.label(id), c.to_json_value());
            }
        }
        json!({
            "tree": self.tree.to_json_value(),
            "domain": self.domain.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>(),
            "smoothness": self.s,
            "derivative_bounds": self.b,
            "general_constant": self.c_general,
            "components": Value::Object(comps),
        })
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let tree = DimensionTree::from_json_value(&v["tree"])?;
        let domain: Vec<(f64, f64)> = serde_json::from_value(v["domain"].clone())?;
        let s: usize = serde_json::from_value(v["smoothness"].clone())?;
        let b: Vec<f64> = serde_json::from_value(v["derivative_bounds"].clone())?;
        let comps_json = v["components"].as_object().ok_or_else(|| {
            Error::InvalidArgument("spec needs a components object".into())
        })?;
        let mut comps = BTreeMap::new();
        for (label, cv) in comps_json {
            let id = tree
                .node_ids()
                .find(|&id| tree.label(id) == *label)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("component for unknown node {label}"))
                })?;
            comps.insert(
                label.clone(),
                ComponentFunction::from_json_value(cv, tree.children(id).len())?,
            );
        }
        let spec = CompositionalSpec::new(tree, domain, comps, s, b)?;
        match v.get("general_constant") {
            Some(c) => spec.with_general_constant(serde_json::from_value(c.clone())?),
            None => Ok(spec),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_json_value())?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_json_value(&v)
    }
}

impl Evaluable for CompositionalSpec {
    fn domain(&self) -> Vec<(f64, f64)> {
        self.domain.clone()
    }

    fn eval_point(&self, x: &[f64]) -> f64 {
        self.evaluate(x)
    }

    fn eval_grid(&self, pts: &[Vec<f64>]) -> Result<Vec<f64>> {
        if pts.len() != self.tree.d() {
            return Err(Error::ShapeMismatch(format!(
                "{} point lists for d = {}",
                pts.len(),
                self.tree.d()
            )));
        }
        // Bottom-up value tensors, one axis per mode of the node, so each
        // component is tabulated only over its own subtree's grid.
        let order: Vec<NodeId> = self.tree.node_ids().collect();
        let mut vals: Vec<Option<FullTensor>> = vec![None; self.tree.node_count()];
        for &id in order.iter().rev() {
            let t = if self.tree.is_leaf(id) {
                let mode = self.tree.modes(id)[0];
                FullTensor::new(vec![pts[mode - 1].len()], pts[mode - 1].clone(), false)?
            } else {
                let children = self.tree.children(id).to_vec();
                let tensors: Vec<FullTensor> = children
                    .iter()
                    .map(|c| vals[c.index()].take().expect("children first"))
                    .collect();
                let concat_shape: Vec<usize> = tensors
                    .iter()
                    .flat_map(|t| t.shape().iter().copied())
                    .collect();
                let child_sizes: Vec<usize> = tensors.iter().map(|t| t.len()).collect();
                let outer = strides(&child_sizes);
                let total: usize = child_sizes.iter().product();
                let comp = self.components[id.index()].as_ref().unwrap();
                let mut data = Vec::with_capacity(total);
                let mut args = vec![0.0f64; children.len()];
                for flat in 0..total {
                    for (j, t) in tensors.iter().enumerate() {
                        args[j] = t.data()[(flat / outer[j]) % child_sizes[j]];
                    }
                    data.push(comp.call(&args));
                }
                let t = FullTensor::new(concat_shape, data, false)?;
                // Children-concat axes to sorted mode order.
                let concat_modes: Vec<usize> = children
                    .iter()
                    .flat_map(|&c| self.tree.modes(c).iter().copied())
                    .collect();
                let perm: Vec<usize> = self
                    .tree
                    .modes(id)
                    .iter()
                    .map(|m| concat_modes.iter().position(|x| x == m).unwrap())
                    .collect();
                t.permute_axes(&perm)?
            };
            vals[id.index()] = Some(t);
        }
        Ok(vals[self.tree.root().index()]
            .take()
            .expect("root value")
            .data()
            .to_vec())
    }
}

/// Interpolation-error constant of one scheme consuming arity-`a`
/// functions on unit-length intervals, valid for every admissible basis
/// dimension (constant: any n >= 1; linear: n >= 2, where the worst case
/// n = 2 sets the constant).
pub fn default_q_a(scheme: BasisKind, s_eff: usize, a: usize) -> f64 {
    match (scheme, s_eff) {
        (BasisKind::PiecewiseConstant, _) => a as f64 / 2.0,
        (BasisKind::PiecewiseLinear, 1) => a as f64,
        (BasisKind::PiecewiseLinear, _) => a as f64 / 2.0,
    }
}

/// L2 (uniform probability) error bound on the best rank-`ranks`
/// approximation of `spec`: root sum of squares of per-edge width tails,
/// each carrying the node-level composition constant. `m_norm` is the
/// width constant of the univariate approximation spaces (1 for the
/// built-in schemes on unit intervals).
pub fn l2_error_bound(spec: &CompositionalSpec, ranks: &RankAssignment, m_norm: f64) -> f64 {
    let s = spec.smoothness() as i32;
    let mut sum = 0.0f64;
    for id in spec.tree().non_root_ids() {
        let c = spec.smoothness_constant(s as usize, spec.tree().level(id));
        let term = m_norm * c * (ranks.get(id) as f64).powi(-s);
        sum += term * term;
    }
    sum.sqrt()
}

/// Sup-norm error bound for the encoded network: per non-root edge,
/// interpolation constant times the node-level composition constant times
/// `rank^-s_eff`, where `s_eff` caps the spec's smoothness at the scheme
/// order. The constant is `q_a` when given, otherwise the scheme default
/// scaled by the largest edge-interval length to the `s_eff` power.
pub fn linf_error_bound(
    spec: &CompositionalSpec,
    ranks: &RankAssignment,
    scheme: BasisKind,
    q_a: Option<f64>,
) -> f64 {
    let s = spec.smoothness().min(scheme.order());
    let q = q_a.unwrap_or_else(|| {
        let max_len = spec
            .tree()
            .non_root_ids()
            .map(|id| {
                let (lo, hi) = spec.edge_interval(id);
                hi - lo
            })
            .fold(0.0f64, f64::max);
        default_q_a(scheme, s, spec.tree().max_arity()) * max_len.powi(s as i32)
    });
    sup_bound_sum(spec, ranks, s, q)
}

fn sup_bound_sum(spec: &CompositionalSpec, ranks: &RankAssignment, s: usize, q: f64) -> f64 {
    spec.tree()
        .non_root_ids()
        .map(|id| {
            let c = spec.smoothness_constant(s, spec.tree().level(id));
            q * c * (ranks.get(id) as f64).powi(-(s as i32))
        })
        .sum()
}

/// Smallest uniform-style rank schedule whose a priori bounds reach `eps`:
/// per edge, `ceil((m_norm (#T - 1) C / eps)^{1/s})` with the node-level
/// constant C. `m_norm` doubles as the master constant for both norms; the
/// resulting schedule is checked against its own bounds.
pub fn rank_schedule(
    spec: &CompositionalSpec,
    eps: f64,
    m_norm: f64,
) -> Result<RankAssignment> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target accuracy must lie in (0, 1), got {eps}"
        )));
    }
    if !(m_norm >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "master constant must be >= 1, got {m_norm}"
        )));
    }
    let s = spec.smoothness();
    let edges = (spec.tree().node_count() - 1) as f64;
    let mut ranks = vec![1usize; spec.tree().node_count()];
    for id in spec.tree().non_root_ids() {
        let c = spec.smoothness_constant(s, spec.tree().level(id));
        let base = m_norm * edges * c / eps;
        // Shave float fuzz so exact integer targets do not round up.
        let r = (base.powf(1.0 / s as f64) - 1e-9).ceil() as usize;
        ranks[id.index()] = r.max(1);
    }
    let ranks = RankAssignment::from_vec(spec.tree(), ranks)?;
    let l2 = l2_error_bound(spec, &ranks, m_norm);
    if l2 > eps {
        return Err(Error::InvalidArgument(format!(
            "rank schedule missed its L2 target: bound {l2}, target {eps}"
        )));
    }
    if s <= 2 {
        let linf = sup_bound_sum(spec, &ranks, s, m_norm);
        if linf > eps {
            return Err(Error::InvalidArgument(format!(
                "rank schedule missed its sup-norm target: bound {linf}, target {eps}"
            )));
        }
    }
    Ok(ranks)
}

/// Writes the composition into a tree tensor network without forming any
/// dense tensor: each non-root edge carries `rank` basis functions of the
/// chosen scheme on that edge's interval, leaves store identities, and
/// every interior component is the parent function tabulated on the
/// children's interpolation nodes and expanded in the node's own basis.
pub fn encode_network(
    spec: &CompositionalSpec,
    ranks: &RankAssignment,
    scheme: BasisKind,
) -> Result<TreeTensorNetwork> {
    let tree = spec.tree();
    if scheme == BasisKind::PiecewiseLinear {
        if let Some(id) = tree.non_root_ids().find(|&id| ranks.get(id) < 2) {
            return Err(Error::InvalidArgument(format!(
                "the piecewise-linear scheme needs rank >= 2, node {} has {}",
                tree.label(id),
                ranks.get(id)
            )));
        }
    }
    let mut edge_bases: Vec<Option<UnivariateBasis>> = vec![None; tree.node_count()];
    for id in tree.non_root_ids() {
        let (lo, hi) = spec.edge_interval(id);
        edge_bases[id.index()] = Some(UnivariateBasis::new(scheme, ranks.get(id), (lo, hi))?);
    }

    let mut components = Vec::with_capacity(tree.node_count());
    for id in tree.node_ids() {
        let t = if tree.is_leaf(id) {
            let r = ranks.get(id);
            FullTensor::from_fn(vec![r, r], |idx| f64::from(idx[0] == idx[1]))?
        } else {
            let children = tree.children(id).to_vec();
            let child_nodes: Vec<Vec<f64>> = children
                .iter()
                .map(|c| edge_bases[c.index()].as_ref().unwrap().nodes())
                .collect();
            let child_ranks: Vec<usize> = children.iter().map(|&c| ranks.get(c)).collect();
            let comp = spec.component(id).expect("non-leaf component");
            let (lo, hi) = comp.range();
            let margin = RANGE_MARGIN * (hi - lo);
            let total: usize = child_ranks.iter().product();
            let own_basis = if tree.is_root(id) {
                None
            } else {
                Some(edge_bases[id.index()].as_ref().unwrap())
            };
            let r_own = own_basis.map_or(1, |b| b.dim());

            // Values laid out [r_own, child ranks...]: column i of the
            // node's basis expansion per child node combination.
            let mut data = vec![0.0f64; r_own * total];
            let mut idx = vec![0usize; children.len()];
            let mut args = vec![0.0f64; children.len()];
            for flat in 0..total {
                for (k, &i) in idx.iter().enumerate() {
                    args[k] = child_nodes[k][i];
                }
                let y = comp.call(&args);
                if !y.is_finite() || y < lo - margin || y > hi + margin {
                    return Err(Error::RangeViolation {
                        node: tree.label(id),
                        value: y,
                        lo,
                        hi,
                    });
                }
                match own_basis {
                    None => data[flat] = y,
                    Some(basis) => {
                        // eval_sparse clamps overshoot inside the margin.
                        for (c, v) in basis.eval_sparse(y) {
                            data[c * total + flat] = v;
                        }
                    }
                }
                crate::tensor::advance(&mut idx, &child_ranks);
            }
            let mut shape = if tree.is_root(id) {
                Vec::new()
            } else {
                vec![r_own]
            };
            shape.extend(&child_ranks);
            FullTensor::new(shape, data, false)?
        };
        components.push(t);
    }
    let leaf_bases: Vec<UnivariateBasis> = (1..=tree.d())
        .map(|mode| {
            edge_bases[tree.leaf_for_mode(mode).unwrap().index()]
                .clone()
                .unwrap()
        })
        .collect();
    TreeTensorNetwork::new(tree.clone(), components, Some(leaf_bases), false)
}

/// Ready-made compositional specs on balanced binary trees over [0,1]^d.
pub fn registry_spec_names() -> Vec<&'static str> {
    vec![
        "mean-balanced-d4-s1",
        "mean-balanced-d5-s1",
        "mean-balanced-d6-s1",
        "product-balanced-d4-s2",
        "product-balanced-d5-s2",
        "product-balanced-d6-s2",
        "sin-mean-balanced-d4-s2",
        "sin-mean-balanced-d4-s1",
        "tent-mean-balanced-d4-s1",
        "tent-mean-balanced-d5-s1",
        "tent-mean-balanced-d6-s1",
        "expand-tent-balanced-d4-s1",
    ]
}

/// Instantiates a named registry spec. Interior nodes share one component;
/// specs whose component is not root-eligible put `mean` at the root.
pub fn registry_spec(name: &str) -> Result<CompositionalSpec> {
    let parts: Vec<&str> = name.rsplitn(3, '-').collect();
    // name = <component>-balanced-d<d>-s<s>, parsed from the right.
    let (s_part, d_part, rest) = match parts.as_slice() {
        [s, d, rest] => (*s, *d, *rest),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown spec '{name}', known: {:?}",
                registry_spec_names()
            )))
        }
    };
    if !registry_spec_names().contains(&name) {
        return Err(Error::InvalidArgument(format!(
            "unknown spec '{name}', known: {:?}",
            registry_spec_names()
        )));
    }
    let d: usize = d_part.trim_start_matches('d').parse().map_err(|_| {
        Error::InvalidArgument(format!("bad dimension in '{name}'"))
    })?;
    let s: usize = s_part.trim_start_matches('s').parse().map_err(|_| {
        Error::InvalidArgument(format!("bad smoothness in '{name}'"))
    })?;
    let component = rest.trim_end_matches("-balanced");
    let info = component_registry()
        .into_iter()
        .find(|i| i.name == component)
        .expect("registry names use known components");
    let tree = DimensionTree::balanced_binary(d)?;
    let root_component = if info.root_max_smoothness >= s {
        component
    } else {
        "mean"
    };
    let mut comps = BTreeMap::new();
    for id in tree.node_ids() {
        if tree.is_leaf(id) {
            continue;
        }
        let which = if tree.is_root(id) { root_component } else { component };
        comps.insert(tree.label(id), ComponentFunction::named(which)?);
    }
    let b = match s {
        1 => vec![info.b1.max(1.0)],
        _ => vec![info.b1.max(1.0), info.b2.max(1.0)],
    };
    CompositionalSpec::new(tree, vec![(0.0, 1.0); d], comps, s, b)
}
