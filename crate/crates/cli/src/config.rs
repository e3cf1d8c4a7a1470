//! Experiment configuration: one JSON file drives each run.
//!
//! The file is rejected on unknown fields so typos fail loudly, and each
//! command validates that exactly the fields it consumes are present.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use serde_json::Value;
use treetensor::{registry_spec, BasisKind, CompositionalSpec, DimensionTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    RunWidths,
    RunApprox,
    RunCompose,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::RunWidths => "run_widths",
            Command::RunApprox => "run_approx",
            Command::RunCompose => "run_compose",
        }
    }

    /// Stem used for default output file names.
    pub fn stem(self) -> &'static str {
        match self {
            Command::RunWidths => "widths",
            Command::RunApprox => "approx",
            Command::RunCompose => "compose",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeKind {
    Trivial,
    LinearBinary,
    BalancedBinary,
}

impl TreeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TreeKind::Trivial => "trivial",
            TreeKind::LinearBinary => "linear_binary",
            TreeKind::BalancedBinary => "balanced_binary",
        }
    }

    pub fn build(self, d: usize) -> treetensor::Result<DimensionTree> {
        match self {
            TreeKind::Trivial => DimensionTree::trivial(d),
            TreeKind::LinearBinary => DimensionTree::linear_binary(d),
            TreeKind::BalancedBinary => DimensionTree::balanced_binary(d),
        }
    }
}

/// Where the target tensor comes from: a named registry function sampled on
/// a per-mode grid, or a seeded Gaussian tensor of the given shape.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSource {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub random: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub function: Option<FunctionSource>,
    /// Compositional spec: `{"registry": name}`, `{"file": path}` relative
    /// to the config file, or the spec object inline.
    #[serde(default)]
    pub spec: Option<Value>,
    #[serde(default)]
    pub trees: Vec<TreeKind>,
    #[serde(default)]
    pub ranks: Vec<usize>,
    #[serde(default)]
    pub leaf_dims: Option<Vec<usize>>,
    /// Per-mode sampling resolution for registry functions.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Per-mode oversampling factor for error measurement grids.
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    #[serde(default)]
    pub seed: u64,
    /// Encoding scheme for run_compose.
    #[serde(default = "default_scheme")]
    pub scheme: BasisKind,
    /// Appends a scheduled-rank row targeting this accuracy (run_compose).
    #[serde(default)]
    pub schedule_eps: Option<f64>,
    /// Norm estimate entering the scheduled-rank certificates.
    #[serde(default = "default_m_norm")]
    pub m_norm: f64,
    #[serde(default)]
    pub outputs: Option<OutputPaths>,
}

fn default_grid() -> usize {
    8
}

fn default_oversample() -> usize {
    4
}

fn default_scheme() -> BasisKind {
    BasisKind::PiecewiseConstant
}

fn default_m_norm() -> f64 {
    1.0
}

/// A parsed config together with the raw bytes it came from (for hashing)
/// and the directory holding it (for relative spec paths).
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub cfg: ExperimentConfig,
    pub raw: Vec<u8>,
    pub dir: PathBuf,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let raw = fs::read(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg: ExperimentConfig = serde_json::from_slice(&raw)
        .with_context(|| format!("parsing config {}", path.display()))?;
    finalize(&mut cfg)?;
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(LoadedConfig { cfg, raw, dir })
}

/// Applies per-command defaults and rejects field combinations the command
/// would silently ignore.
fn finalize(cfg: &mut ExperimentConfig) -> Result<()> {
    let cmd = cfg.command.as_str();
    match cfg.command {
        Command::RunWidths | Command::RunApprox => {
            if cfg.spec.is_some() {
                bail!("{cmd} works on a function, not a spec; drop 'spec'");
            }
            if cfg.schedule_eps.is_some() {
                bail!("'schedule_eps' only applies to run_compose");
            }
            let f = cfg
                .function
                .as_ref()
                .with_context(|| format!("{cmd} needs a 'function' entry"))?;
            check_function(f)?;
            if cfg.trees.is_empty() {
                cfg.trees.push(TreeKind::BalancedBinary);
            }
        }
        Command::RunCompose => {
            if cfg.function.is_some() {
                bail!("run_compose works on a spec, not a function; drop 'function'");
            }
            if !cfg.trees.is_empty() {
                bail!("run_compose takes its tree from the spec; drop 'trees'");
            }
            if cfg.leaf_dims.is_some() {
                bail!("run_compose derives leaf dimensions from the ranks; drop 'leaf_dims'");
            }
            if cfg.spec.is_none() {
                bail!("run_compose needs a 'spec' entry");
            }
            if cfg.ranks.is_empty() && cfg.schedule_eps.is_none() {
                bail!("run_compose needs 'ranks' to sweep or a 'schedule_eps' target");
            }
        }
    }
    match cfg.command {
        Command::RunWidths => {
            if cfg.trees.len() != 1 {
                bail!("run_widths profiles one tree, {} given", cfg.trees.len());
            }
            if !cfg.ranks.is_empty() {
                bail!("run_widths reports every width; drop 'ranks'");
            }
        }
        Command::RunApprox => {
            if cfg.ranks.is_empty() {
                bail!("run_approx needs a nonempty 'ranks' sweep");
            }
            if cfg.ranks.contains(&0) {
                bail!("ranks must be >= 1");
            }
        }
        Command::RunCompose => {
            if cfg.ranks.contains(&0) {
                bail!("ranks must be >= 1");
            }
        }
    }
    if cfg.grid == 0 {
        bail!("'grid' must be >= 1");
    }
    if cfg.oversample == 0 {
        bail!("'oversample' must be >= 1");
    }
    if !(cfg.m_norm > 0.0) || !cfg.m_norm.is_finite() {
        bail!("'m_norm' must be a positive finite number");
    }
    if let Some(eps) = cfg.schedule_eps {
        if !(eps > 0.0 && eps < 1.0) {
            bail!("'schedule_eps' must lie in (0, 1), got {eps}");
        }
    }
    Ok(())
}

fn check_function(f: &FunctionSource) -> Result<()> {
    match (&f.name, &f.random) {
        (Some(_), Some(_)) => bail!("'function' takes either 'name' or 'random', not both"),
        (None, None) => bail!("'function' needs a 'name' or a 'random' shape"),
        (Some(_), None) => {
            let d = f.d.context("a named function needs 'd'")?;
            if d < 2 {
                bail!("named functions need d >= 2, got {d}");
            }
        }
        (None, Some(shape)) => {
            if f.d.is_some() {
                bail!("'d' is implied by the 'random' shape; drop it");
            }
            if shape.len() < 2 || shape.iter().any(|&n| n == 0) {
                bail!("'random' needs >= 2 modes with nonzero dimensions, got {shape:?}");
            }
        }
    }
    Ok(())
}

/// Resolves the `spec` config entry to a compositional spec.
pub fn resolve_spec(v: &Value, config_dir: &Path) -> Result<CompositionalSpec> {
    if let Some(name) = v.get("registry") {
        let name = name
            .as_str()
            .context("'spec.registry' must be a string")?;
        return Ok(registry_spec(name)?);
    }
    if let Some(rel) = v.get("file") {
        let rel = rel.as_str().context("'spec.file' must be a path string")?;
        let path = config_dir.join(rel);
        let raw = fs::read(&path)
            .with_context(|| format!("reading spec {}", path.display()))?;
        let json: Value = serde_json::from_slice(&raw)
            .with_context(|| format!("parsing spec {}", path.display()))?;
        return Ok(CompositionalSpec::from_json_value(&json)?);
    }
    Ok(CompositionalSpec::from_json_value(v)?)
}

/// Human-readable origin of the spec, for summaries.
pub fn spec_origin(v: &Value) -> String {
    if let Some(name) = v.get("registry").and_then(Value::as_str) {
        return format!("registry:{name}");
    }
    if let Some(path) = v.get("file").and_then(Value::as_str) {
        return format!("file:{path}");
    }
    "inline".into()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> Result<ExperimentConfig> {
        let mut cfg: ExperimentConfig = serde_json::from_str(json)?;
        finalize(&mut cfg)?;
        Ok(cfg)
    }

    #[test]
    fn minimal_widths_config_gets_defaults() {
        let cfg = parse(
            r#"{"command": "run_widths",
                "function": {"name": "sum", "d": 4}}"#,
        )
        .unwrap();
        assert_eq!(cfg.trees, vec![TreeKind::BalancedBinary]);
        assert_eq!(cfg.grid, 8);
        assert_eq!(cfg.oversample, 4);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.scheme, BasisKind::PiecewiseConstant);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = parse(r#"{"command": "run_widths", "granularity": 3}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("granularity"), "{err}");
    }

    #[test]
    fn commands_reject_fields_they_ignore() {
        for (json, needle) in [
            (
                r#"{"command": "run_widths",
                    "function": {"name": "sum", "d": 4},
                    "spec": {"registry": "mean-balanced-d4-s1"}}"#,
                "drop 'spec'",
            ),
            (
                r#"{"command": "run_compose",
                    "spec": {"registry": "mean-balanced-d4-s1"},
                    "ranks": [2],
                    "trees": ["trivial"]}"#,
                "drop 'trees'",
            ),
            (
                r#"{"command": "run_approx",
                    "function": {"name": "sum", "d": 4}}"#,
                "nonempty 'ranks'",
            ),
            (
                r#"{"command": "run_compose",
                    "spec": {"registry": "mean-balanced-d4-s1"}}"#,
                "'schedule_eps'",
            ),
            (
                r#"{"command": "run_widths",
                    "function": {"name": "sum"}}"#,
                "needs 'd'",
            ),
            (
                r#"{"command": "run_widths",
                    "function": {"name": "sum", "d": 4, "random": [3, 3]}}"#,
                "not both",
            ),
        ] {
            let err = parse(json).unwrap_err().to_string();
            assert!(err.contains(needle), "expected '{needle}' in '{err}'");
        }
    }

    #[test]
    fn registry_spec_reference_resolves() {
        let v = serde_json::json!({"registry": "mean-balanced-d4-s1"});
        let spec = resolve_spec(&v, Path::new(".")).unwrap();
        assert_eq!(spec.domain().len(), 4);
        assert_eq!(spec_origin(&v), "registry:mean-balanced-d4-s1");
    }

    #[test]
    fn inline_spec_resolves_through_the_same_parser() {
        let spec = registry_spec("product-balanced-d4-s2").unwrap();
        let v = spec.to_json_value();
        let back = resolve_spec(&v, Path::new(".")).unwrap();
        assert_eq!(back.smoothness(), spec.smoothness());
        assert_eq!(spec_origin(&v), "inline");
    }
}
