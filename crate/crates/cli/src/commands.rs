//! The three experiment commands behind `ttn --config`.
//!
//! Each command reads its inputs from the config, runs a deterministic
//! sweep (parallelism never reorders rows), writes one CSV table and one
//! JSON summary, and reports certified-bound violations instead of failing.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use treetensor::{
    encode_network, fit_rate, linf_error_bound, measure_error_on_grid, project_to_tree,
    rank_schedule, sample_coefficients, width_profile, BasisKind,
    FullTensor, FunctionHandle, Norm, RankAssignment, RateFit, UnivariateBasis,
    GRID_BUDGET,
};

use crate::config::{resolve_spec, spec_origin, Command, ExperimentConfig, LoadedConfig};
use crate::output::{fmt_float, write_csv, write_summary, RunMeta};

pub struct RunContext {
    pub loaded: LoadedConfig,
    pub meta: RunMeta,
    pub out_dir: PathBuf,
    /// Effective seed: the --seed flag wins over the config.
    pub seed: u64,
    pub threads: usize,
}

pub struct RunOutcome {
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
    pub violations: Vec<String>,
}

pub fn run(ctx: &RunContext) -> Result<RunOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.threads)
        .build()
        .context("building the worker pool")?;
    pool.install(|| match ctx.loaded.cfg.command {
        Command::RunWidths => run_widths(ctx),
        Command::RunApprox => run_approx(ctx),
        Command::RunCompose => run_compose(ctx),
    })
}

/// Output path: explicit absolute paths win, explicit relative paths land
/// under --out, and missing entries get a command-derived default name.
fn resolve_out(explicit: Option<&Path>, out_dir: &Path, default_name: &str) -> PathBuf {
    match explicit {
        Some(p) if p.is_absolute() => p.to_path_buf(),
        Some(p) => out_dir.join(p),
        None => out_dir.join(default_name),
    }
}

fn out_paths(ctx: &RunContext) -> Result<(PathBuf, PathBuf)> {
    let cfg = &ctx.loaded.cfg;
    let stem = cfg.command.stem();
    let outputs = cfg.outputs.clone().unwrap_or_default();
    let csv = resolve_out(
        outputs.csv.as_deref(),
        &ctx.out_dir,
        &format!("{stem}.csv"),
    );
    let summary = resolve_out(
        outputs.summary.as_deref(),
        &ctx.out_dir,
        &format!("{stem}_summary.json"),
    );
    for p in [&csv, &summary] {
        if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    Ok((csv, summary))
}

/// The coefficient tensor a width/approximation run works on, plus a label
/// describing where it came from.
///
/// Named functions are sampled in per-mode orthonormal piecewise-constant
/// bases, so Euclidean distances on coefficients are L2(uniform
/// probability) distances between the interpolants.
fn coefficient_tensor(cfg: &ExperimentConfig, seed: u64) -> Result<(FullTensor, String)> {
    let src = cfg.function.as_ref().expect("validated");
    if let Some(shape) = &src.random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = FullTensor::random_normal(shape.clone(), &mut rng)?;
        return Ok((t, "random-normal".into()));
    }
    let name = src.name.as_deref().expect("validated");
    let d = src.d.expect("validated");
    let f = treetensor::registry_function(name, d)?;
    let bases = f
        .domain()
        .iter()
        .map(|&iv| {
            UnivariateBasis::new(BasisKind::PiecewiseConstant, cfg.grid, iv)?.orthonormalized()
        })
        .collect::<treetensor::Result<Vec<_>>>()?;
    let t = sample_coefficients(&f, &bases)?;
    Ok((t, format!("registry:{name}")))
}

fn run_widths(ctx: &RunContext) -> Result<RunOutcome> {
    let cfg = &ctx.loaded.cfg;
    let (tensor, source) = coefficient_tensor(cfg, ctx.seed)?;
    let kind = cfg.trees[0];
    let tree = kind.build(tensor.ndim())?;
    let profile = width_profile(&tensor, &tree)?;
    let body = profile.to_csv();
    let rows = body.lines().count().saturating_sub(1);

    let (csv_path, summary_path) = out_paths(ctx)?;
    let comments = vec![
        format!("tree: {}", kind.as_str()),
        format!("source: {source}"),
    ];
    write_csv(&csv_path, &ctx.meta, &comments, &body)?;
    let summary = json!({
        "command": cfg.command.as_str(),
        "config_sha256": ctx.meta.config_sha256,
        "seed": ctx.seed,
        "source": source,
        "shape": tensor.shape(),
        "tree": kind.as_str(),
        "nodes": tree.node_count(),
        "coefficient_norm": tensor.frobenius_norm(),
        "rows": rows,
        "csv": csv_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
    });
    write_summary(&summary_path, &summary)?;
    Ok(RunOutcome {
        csv_path,
        summary_path,
        violations: Vec::new(),
    })
}

struct ApproxRow {
    tree: &'static str,
    rank: usize,
    n_params: u128,
    error: f64,
    bound: f64,
}

fn run_approx(ctx: &RunContext) -> Result<RunOutcome> {
    let cfg = &ctx.loaded.cfg;
    let (tensor, source) = coefficient_tensor(cfg, ctx.seed)?;
    let d = tensor.ndim();
    let leaf_dims = cfg.leaf_dims.as_deref();

    let jobs: Vec<_> = cfg
        .trees
        .iter()
        .flat_map(|&kind| cfg.ranks.iter().map(move |&r| (kind, r)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(kind, r)| -> Result<ApproxRow> {
            let tree = kind.build(d)?;
            let ranks = RankAssignment::uniform(&tree, r)?;
            let res = project_to_tree(&tensor, &tree, &ranks, leaf_dims)?;
            Ok(ApproxRow {
                tree: kind.as_str(),
                rank: r,
                n_params: res.network.complexity(),
                error: res.l2_error,
                bound: res.error_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut violations = Vec::new();
    for row in &rows {
        if row.error > row.bound + 1e-9 {
            violations.push(format!(
                "tree={} rank={}: measured error {:.6e} exceeds certified bound {:.6e}",
                row.tree, row.rank, row.error, row.bound
            ));
        }
    }

    let mut body = String::from("tree,rank,n_params,l2_error,l2_bound\n");
    for row in &rows {
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            row.tree,
            row.rank,
            row.n_params,
            fmt_float(row.error),
            fmt_float(row.bound)
        ));
    }

    // Per-tree decay fit of error against parameter count; null when the
    // sweep is too short or an error hits exact zero.
    let mut fits = serde_json::Map::new();
    let mut finals = serde_json::Map::new();
    for &kind in &cfg.trees {
        let name = kind.as_str();
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|row| row.tree == name)
            .map(|row| (row.n_params as f64, row.error))
            .collect();
        fits.insert(name.into(), rate_fit_json(&pts));
        if let Some(last) = rows.iter().filter(|row| row.tree == name).last() {
            finals.insert(
                name.into(),
                json!({
                    "rank": last.rank,
                    "n_params": last.n_params.to_string(),
                    "l2_error": last.error,
                    "l2_bound": last.bound,
                }),
            );
        }
    }

    let (csv_path, summary_path) = out_paths(ctx)?;
    let comments = vec![format!("source: {source}")];
    write_csv(&csv_path, &ctx.meta, &comments, &body)?;
    let summary = json!({
        "command": cfg.command.as_str(),
        "config_sha256": ctx.meta.config_sha256,
        "seed": ctx.seed,
        "source": source,
        "shape": tensor.shape(),
        "coefficient_norm": tensor.frobenius_norm(),
        "rows": rows.len(),
        "violations": violations,
        "fit": Value::Object(fits),
        "final": Value::Object(finals),
        "csv": csv_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
    });
    write_summary(&summary_path, &summary)?;
    Ok(RunOutcome {
        csv_path,
        summary_path,
        violations,
    })
}

struct ComposeRow {
    label: &'static str,
    rank_max: usize,
    n_params: u128,
    linf_error: f64,
    linf_bound: f64,
    l2_error: f64,
    grid_side: usize,
}

fn scheme_name(scheme: BasisKind) -> &'static str {
    match scheme {
        BasisKind::PiecewiseConstant => "piecewise-constant",
        BasisKind::PiecewiseLinear => "piecewise-linear",
    }
}

/// Largest per-mode grid side whose full grid stays inside the evaluation
/// budget.
fn per_mode_cap(d: usize) -> usize {
    // The float root can land one off in either direction.
    let mut c = ((GRID_BUDGET as f64).powf(1.0 / d as f64).floor() as usize).max(2);
    while c > 2 && (c as u128).pow(d as u32) > GRID_BUDGET as u128 {
        c -= 1;
    }
    while ((c + 1) as u128).pow(d as u32) <= GRID_BUDGET as u128 {
        c += 1;
    }
    c
}

fn rate_fit_json(pts: &[(f64, f64)]) -> Value {
    match fit_rate(pts) {
        Ok(RateFit {
            slope,
            intercept,
            residual,
        }) => json!({"slope": slope, "intercept": intercept, "residual": residual}),
        Err(_) => Value::Null,
    }
}

fn run_compose(ctx: &RunContext) -> Result<RunOutcome> {
    let cfg = &ctx.loaded.cfg;
    let spec_value = cfg.spec.as_ref().expect("validated");
    let spec = resolve_spec(spec_value, &ctx.loaded.dir)?;
    let source = spec_origin(spec_value);
    let scheme = cfg.scheme;
    let tree = spec.tree().clone();
    let d = spec.domain().len();
    let s_eff = spec.smoothness().min(scheme.order());

    let spec_for_eval = spec.clone();
    let target = FunctionHandle::new(spec.domain().to_vec(), move |x| {
        spec_for_eval.evaluate(x)
    })?;

    let mut jobs: Vec<(&'static str, RankAssignment)> = Vec::new();
    for &r in &cfg.ranks {
        jobs.push(("uniform", RankAssignment::uniform(&tree, r)?));
    }
    let schedule = match cfg.schedule_eps {
        Some(eps) => {
            let ranks = rank_schedule(&spec, eps, cfg.m_norm)?;
            jobs.push(("schedule", ranks.clone()));
            Some((eps, ranks))
        }
        None => None,
    };

    let cap = per_mode_cap(d);
    let rows = jobs
        .par_iter()
        .map(|(label, ranks)| -> Result<ComposeRow> {
            let net = encode_network(&spec, ranks, scheme)?;
            let rank_max = ranks.as_slice().iter().copied().max().unwrap_or(1);
            let side = (cfg.oversample * net.leaf_dims().iter().copied().max().unwrap_or(1))
                .clamp(2, cap);
            let counts = vec![side; d];
            let linf_error = measure_error_on_grid(&target, &net, &counts, Norm::Linf)?;
            let l2_error = measure_error_on_grid(&target, &net, &counts, Norm::L2)?;
            Ok(ComposeRow {
                label,
                rank_max,
                n_params: net.complexity(),
                linf_error,
                linf_bound: linf_error_bound(&spec, ranks, scheme, None),
                l2_error,
                grid_side: side,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut violations = Vec::new();
    for row in &rows {
        if row.linf_error > row.linf_bound + 1e-9 {
            violations.push(format!(
                "{} rank={}: measured sup error {:.6e} exceeds certified bound {:.6e}",
                row.label, row.rank_max, row.linf_error, row.linf_bound
            ));
        }
        // The sup certificate also covers the L2(probability) error.
        if row.l2_error > row.linf_bound + 1e-9 {
            violations.push(format!(
                "{} rank={}: measured l2 error {:.6e} exceeds certified bound {:.6e}",
                row.label, row.rank_max, row.l2_error, row.linf_bound
            ));
        }
    }
    if let (Some((eps, _)), Some(row)) = (
        &schedule,
        rows.iter().find(|row| row.label == "schedule"),
    ) {
        if row.linf_bound > eps + 1e-12 {
            violations.push(format!(
                "schedule: certificate {:.6e} misses the {eps:.6e} target",
                row.linf_bound
            ));
        }
        if row.linf_error > eps + 1e-9 {
            violations.push(format!(
                "schedule: measured sup error {:.6e} exceeds the {eps:.6e} target",
                row.linf_error
            ));
        }
    }

    let mut body =
        String::from("row,rank_max,n_params,linf_error,linf_bound,l2_error,l2_bound\n");
    for row in &rows {
        body.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.label,
            row.rank_max,
            row.n_params,
            fmt_float(row.linf_error),
            fmt_float(row.linf_bound),
            fmt_float(row.l2_error),
            fmt_float(row.linf_bound)
        ));
    }

    // Decay fit over the uniform sweep; the theory predicts slope near
    // -s_eff/(arity+1) for bounded-arity trees.
    let uniform_pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.label == "uniform")
        .map(|row| (row.n_params as f64, row.linf_error))
        .collect();
    let arity = tree.max_arity();
    let reference_slope = -(s_eff as f64) / (arity as f64 + 1.0);

    let (csv_path, summary_path) = out_paths(ctx)?;
    let comments = vec![
        format!("source: {source}"),
        format!("scheme: {}, effective smoothness: {s_eff}", scheme_name(scheme)),
        "l2_bound repeats the sup-norm certificate; the L2(uniform probability) error never exceeds it".into(),
    ];
    write_csv(&csv_path, &ctx.meta, &comments, &body)?;

    let schedule_json = match (&schedule, rows.iter().find(|r| r.label == "schedule")) {
        (Some((eps, ranks)), Some(row)) => json!({
            "eps": eps,
            "ranks": ranks.as_slice(),
            "n_params": row.n_params.to_string(),
            "linf_error": row.linf_error,
            "linf_bound": row.linf_bound,
            "grid_side": row.grid_side,
        }),
        _ => Value::Null,
    };
    let summary = json!({
        "command": cfg.command.as_str(),
        "config_sha256": ctx.meta.config_sha256,
        "seed": ctx.seed,
        "source": source,
        "d": d,
        "smoothness": spec.smoothness(),
        "effective_smoothness": s_eff,
        "scheme": scheme,
        "max_arity": arity,
        "rows": rows.len(),
        "violations": violations,
        "fit": rate_fit_json(&uniform_pts),
        "reference_slope": reference_slope,
        "schedule": schedule_json,
        "csv": csv_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
    });
    write_summary(&summary_path, &summary)?;
    Ok(RunOutcome {
        csv_path,
        summary_path,
        violations,
    })
}
