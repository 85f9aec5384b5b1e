//! `reinforce-walk`: simulate step-reinforced random walks and verify
//! their limit theorems against exact finite-horizon oracles.
//!
//! Exit codes: 0 = all checks passed, 1 = a statistical or oracle check
//! failed, 2 = usage/config error.

mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use reinforce_core::bridge::{
    bridge_exact_covariance, bridge_fluctuation_ensemble, indicator_walk, GridSpec,
};
use reinforce_core::engine::{
    enumerate_exact_pmf, enumerate_memory_walk_pmf, erw_param_map, merw_param_map,
    pmf_variance_cross_check, simulate_reinforced_path, walk_path_to_csv,
};
use reinforce_core::fluctuation::{
    cramer_wold_project, run_ensemble, EnsembleSpec, FluctuationEnsemble,
};
use reinforce_core::numerics;
use reinforce_core::stats::{covariance_compare, ks_test, moment_z_test, normal_cdf};
use reinforce_core::step_model::{derive_stream, make_distribution, StepDistribution};
use reinforce_core::TestReport;

use config::{parse_f64_list, parse_usize_list, FileConfig};

#[derive(Parser)]
#[command(name = "reinforce-walk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one reinforced path and emit checkpoint rows as CSV.
    Simulate(CommonArgs),
    /// Verify the Gaussian fluctuation law on a Monte Carlo ensemble.
    Fluct(CommonArgs),
    /// Verify the empirical-process bridge fluctuations on a grid.
    Bridge(CommonArgs),
    /// Emit exact sequences: a_n, moment recursion, variance targets.
    Exact(CommonArgs),
    /// Enumerate the exact law of the walk for small horizons.
    Enumerate(CommonArgs),
    /// Check the ERW/MERW parameter-map equivalences by enumeration.
    Equivalence(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Step distribution descriptor, e.g. `rademacher`,
    /// `gaussian:0,1`, `lattice:2`, `indicator:0.25,0.5`, `discrete:FILE`.
    #[arg(long)]
    dist: Option<String>,
    /// Reinforcement parameter.
    #[arg(long)]
    p: Option<f64>,
    /// Memory parameter for the equivalence check (defaults to the map).
    #[arg(long)]
    q: Option<f64>,
    /// Grid points for the bridge, e.g. `0.25,0.5,0.75`.
    #[arg(long)]
    grid: Option<String>,
    /// Checkpoint list, e.g. `16,64,1024`.
    #[arg(long)]
    checkpoints: Option<String>,
    /// Simulation horizon N.
    #[arg(long)]
    horizon: Option<usize>,
    /// Number of Monte Carlo paths R.
    #[arg(long)]
    paths: Option<usize>,
    /// Master seed; path i uses the derived stream (seed, i).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: `csv` or `json`.
    #[arg(long)]
    format: Option<String>,
    /// Statistical test level.
    #[arg(long)]
    alpha: Option<f64>,
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Index or index list (exact/enumerate/equivalence).
    #[arg(long)]
    n: Option<String>,
    /// Lattice dimension (equivalence).
    #[arg(long)]
    d: Option<usize>,
    /// Bridge diagnostic at p = 0 (classical empirical process).
    #[arg(long)]
    classical: bool,
    /// Also report the certified interval for Var(W).
    #[arg(long = "variance-limit")]
    variance_limit: bool,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fluct(a) => cmd_fluct(a),
        Command::Bridge(a) => cmd_bridge(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Equivalence(a) => cmd_equivalence(a),
    }
}

struct Resolved {
    args: CommonArgs,
    file: FileConfig,
}

impl Resolved {
    fn new(args: CommonArgs) -> Result<Self> {
        let file = FileConfig::load(args.config.as_deref())?;
        if let Some(w) = file.resolve_opt("workers", args.workers)? {
            if w == 0 {
                bail!("workers must be >= 1");
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build_global()
                .context("worker pool already initialized")?;
        }
        Ok(Resolved { args, file })
    }

    fn distribution(&self) -> Result<StepDistribution> {
        let desc = self
            .file
            .resolve("dist", self.args.dist.clone(), "rademacher".to_string())?;
        Ok(make_distribution(&desc)?)
    }

    fn descriptor(&self) -> Result<String> {
        self.file
            .resolve("dist", self.args.dist.clone(), "rademacher".to_string())
    }

    fn p(&self, default: f64) -> Result<f64> {
        self.file.resolve("p", self.args.p, default)
    }

    fn seed(&self) -> Result<u64> {
        self.file.resolve("seed", self.args.seed, 0)
    }

    fn alpha(&self) -> Result<f64> {
        self.file.resolve("alpha", self.args.alpha, 0.005)
    }

    fn format(&self, default: &str) -> Result<String> {
        let f = self
            .file
            .resolve("format", self.args.format.clone(), default.to_string())?;
        if f != "csv" && f != "json" {
            bail!("format must be `csv` or `json`, got `{f}`");
        }
        Ok(f)
    }

    fn checkpoints(&self, default: &[usize]) -> Result<Vec<usize>> {
        match self.file.resolve_opt("checkpoints", self.args.checkpoints.clone())? {
            Some(s) => parse_usize_list(&s),
            None => Ok(default.to_vec()),
        }
    }

    fn grid(&self) -> Result<GridSpec> {
        let Some(s) = self.file.resolve_opt("grid", self.args.grid.clone())? else {
            bail!("a --grid is required for this command");
        };
        Ok(GridSpec::new(parse_f64_list(&s)?)?)
    }

    fn out(&self) -> Result<Option<PathBuf>> {
        self.file.resolve_opt("out", self.args.out.clone())
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Assembles the versioned report. `elapsed_seconds` is the only field
/// that varies between identical runs.
fn report(command: &str, config: Value, seed: u64, tests: &[TestReport], extra: Value, started: Instant) -> Value {
    let pass = tests.iter().all(|t| t.pass)
        && extra
            .get("cross_check_pass")
            .or_else(|| extra.get("pass"))
            .is_none_or(|v| v.as_bool() == Some(true));
    json!({
        "schema": 1,
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "master_seed": seed,
        "tests": tests,
        "detail": extra,
        "pass": pass,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
    })
}

fn cmd_simulate(args: CommonArgs) -> Result<bool> {
    let o = Resolved::new(args)?;
    let d = o.distribution()?;
    let p = o.p(0.75)?;
    let horizon = o.file.resolve("horizon", o.args.horizon, 1024)?;
    let checkpoints = o.checkpoints(&[horizon])?;
    let seed = o.seed()?;
    let mut stream = derive_stream(seed, 0);
    let path = simulate_reinforced_path(&d, p, horizon, &checkpoints, &mut stream)?;
    let csv = walk_path_to_csv(&path);
    match o.format("csv")?.as_str() {
        "csv" => emit(o.out()?.as_deref(), &csv)?,
        _ => {
            let started = Instant::now();
            let config = json!({
                "dist": o.descriptor()?, "p": p, "horizon": horizon,
                "checkpoints": checkpoints, "seed": seed,
            });
            let rep = report(
                "simulate",
                config,
                seed,
                &[],
                json!({
                    "checkpoints": path.checkpoints,
                    "a_n": path.a_at_checkpoints,
                    "sums": path.sums,
                    "squared_sums": path.squared_sums,
                    "terminal_martingale": path.terminal_martingale,
                }),
                started,
            );
            emit(o.out()?.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&rep)?))?;
        }
    }
    Ok(true)
}

/// Unit projection directions: coordinate axes plus 8 seed-derived
/// random directions (dimension ≥ 2 only).
fn projection_directions(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    if dim < 2 {
        return dirs;
    }
    for c in 0..dim {
        let mut e = vec![0.0; dim];
        e[c] = 1.0;
        dirs.push(e);
    }
    let mut stream = derive_stream(seed, u64::MAX - 1);
    for _ in 0..8 {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| stream.standard_normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                dirs.push(v.iter().map(|x| x / norm).collect());
                break;
            }
        }
    }
    dirs
}

/// KS + moment tests of one scalar projection of the ensemble.
fn scalar_tests(
    ens: &FluctuationEnsemble,
    samples_by_checkpoint: &[Vec<f64>],
    target_by_checkpoint: &[f64],
    label: &str,
    alpha: f64,
    seed: u64,
    tests: &mut Vec<TestReport>,
) -> Result<()> {
    for (k, &n) in ens.spec.checkpoints.iter().enumerate() {
        let target = target_by_checkpoint[k];
        let sd = target.sqrt();
        let mut scaled: Vec<f64> = samples_by_checkpoint[k].iter().map(|x| x / sd).collect();
        scaled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        tests.push(ks_test(
            &scaled,
            normal_cdf,
            format!("ks-{label}-n{n}"),
            alpha,
            Some(seed),
        )?);
        tests.push(moment_z_test(
            &samples_by_checkpoint[k],
            0.0,
            target,
            format!("moments-{label}-n{n}"),
            Some(seed),
        )?);
    }
    Ok(())
}

fn cmd_fluct(args: CommonArgs) -> Result<bool> {
    let started = Instant::now();
    let o = Resolved::new(args)?;
    let d = o.distribution()?;
    let p = o.p(0.75)?;
    let checkpoints = o.checkpoints(&[1024])?;
    let last = *checkpoints.last().unwrap_or(&1024);
    let horizon = o.file.resolve("horizon", o.args.horizon, 64 * last)?;
    let paths = o.file.resolve("paths", o.args.paths, 4000)?;
    let seed = o.seed()?;
    let alpha = o.alpha()?;
    let dim = d.dim();
    let dirs = projection_directions(dim, seed);
    let spec = EnsembleSpec {
        distribution: d,
        p,
        checkpoints: checkpoints.clone(),
        horizon,
        paths,
        master_seed: seed,
        projection_directions: dirs.clone(),
    };
    let ens = run_ensemble(&spec)?;
    let mut tests = Vec::new();
    for c in 0..dim {
        let sigma = ens.spec.distribution.covariance_entry(c, c);
        let samples: Vec<Vec<f64>> = (0..checkpoints.len())
            .map(|k| ens.coordinate_samples(k, c))
            .collect();
        let targets: Vec<f64> = ens.v_exact.iter().map(|v| v * sigma).collect();
        scalar_tests(&ens, &samples, &targets, &format!("coord{c}"), alpha, seed, &mut tests)?;
    }
    for (i, a) in dirs.iter().enumerate().skip(dim) {
        let proj = cramer_wold_project(&ens, a)?;
        scalar_tests(
            &ens,
            &proj.samples,
            &proj.target_variances,
            &format!("dir{}", i - dim),
            alpha,
            seed,
            &mut tests,
        )?;
    }
    let config = json!({
        "dist": o.descriptor()?, "p": p, "checkpoints": checkpoints,
        "horizon": horizon, "paths": paths, "seed": seed, "alpha": alpha,
    });
    let detail = json!({
        "summaries": ens.summaries(),
        "limit_variance": ens.limit_variance,
        "projection_directions": dirs,
    });
    let rep = report("fluct", config, seed, &tests, detail, started);
    let pass = rep["pass"].as_bool().unwrap();
    match o.format("json")?.as_str() {
        "csv" => {
            emit(o.out()?.as_deref(), &ens.to_csv())?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
        }
        _ => emit(o.out()?.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&rep)?))?,
    }
    Ok(pass)
}

fn cmd_bridge(args: CommonArgs) -> Result<bool> {
    let started = Instant::now();
    let o = Resolved::new(args)?;
    let grid = o.grid()?;
    let classical = o.file.resolve_switch("classical", o.args.classical)?;
    if classical {
        return cmd_bridge_classical(&o, &grid, started);
    }
    let p = o.p(0.6)?;
    let checkpoints = o.checkpoints(&[1024])?;
    let n = *checkpoints.last().unwrap();
    let horizon = o.file.resolve("horizon", o.args.horizon, 64 * n)?;
    let paths = o.file.resolve("paths", o.args.paths, 4000)?;
    let seed = o.seed()?;
    let alpha = o.alpha()?;
    let ens = bridge_fluctuation_ensemble(&grid, p, n, horizon, paths, seed)?;
    let k = grid.len();
    let target = bridge_exact_covariance(&grid, p, n, horizon)?;
    let samples: Vec<Vec<f64>> = ens.f.iter().map(|row| row[0].clone()).collect();
    let mut tests = vec![covariance_compare(
        &samples,
        &target,
        k,
        "bridge-covariance",
        Some(seed),
    )?];
    for (c, &x) in grid.points().iter().enumerate() {
        let var = ens.v_exact[0] * x * (1.0 - x);
        let sd = var.sqrt();
        let mut scaled: Vec<f64> = samples.iter().map(|s| s[c] / sd).collect();
        scaled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        tests.push(ks_test(
            &scaled,
            normal_cdf,
            format!("ks-bridge-x{x}"),
            alpha,
            Some(seed),
        )?);
    }
    let config = json!({
        "grid": grid.points(), "p": p, "n": n, "horizon": horizon,
        "paths": paths, "seed": seed, "alpha": alpha,
    });
    let detail = json!({
        "target_covariance": target,
        "v_exact": ens.v_exact[0],
        "limit_variance": ens.limit_variance,
    });
    let rep = report("bridge", config, seed, &tests, detail, started);
    let pass = rep["pass"].as_bool().unwrap();
    match o.format("json")?.as_str() {
        "csv" => {
            emit(o.out()?.as_deref(), &bridge_csv(&ens, &grid, p, n)?)?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
        }
        _ => emit(o.out()?.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&rep)?))?,
    }
    Ok(pass)
}

/// CSV `path_id,x,G_n_value,bridge_proxy_value,fluct_value`.
fn bridge_csv(ens: &FluctuationEnsemble, grid: &GridSpec, p: f64, n: usize) -> Result<String> {
    let a_n = numerics::a_seq(p, n)?;
    let sqrt_n = (n as f64).sqrt();
    let mut out = String::from("path_id,x,G_n_value,bridge_proxy_value,fluct_value\n");
    for (id, (row, w)) in ens.f.iter().zip(&ens.w_estimates).enumerate() {
        for (c, &x) in grid.points().iter().enumerate() {
            let f = row[0][c];
            let g = f + a_n / sqrt_n * w[c];
            out.push_str(&format!("{id},{x},{g:.16e},{:.16e},{f:.16e}\n", w[c]));
        }
    }
    Ok(out)
}

/// p = 0 diagnostic: the classical empirical process has covariance
/// x_i(1−x_j) without the reinforcement factor.
fn cmd_bridge_classical(o: &Resolved, grid: &GridSpec, started: Instant) -> Result<bool> {
    let checkpoints = o.checkpoints(&[256])?;
    let n = *checkpoints.last().unwrap();
    let paths = o.file.resolve("paths", o.args.paths, 4000)?;
    let seed = o.seed()?;
    let k = grid.len();
    let pts = grid.points();
    let mut samples = Vec::with_capacity(paths);
    for id in 0..paths {
        let mut stream = derive_stream(seed, id as u64);
        let path = indicator_walk(grid, 0.0, n, &[n], &mut stream)?;
        samples.push(
            path.sums[0]
                .iter()
                .map(|s| s / (n as f64).sqrt())
                .collect::<Vec<f64>>(),
        );
    }
    let mut target = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            target[i * k + j] = pts[i.min(j)] * (1.0 - pts[i.max(j)]);
        }
    }
    let tests = vec![covariance_compare(
        &samples,
        &target,
        k,
        "classical-covariance",
        Some(seed),
    )?];
    let config = json!({
        "grid": pts, "p": 0.0, "n": n, "paths": paths, "seed": seed, "classical": true,
    });
    let rep = report(
        "bridge",
        config,
        seed,
        &tests,
        json!({ "target_covariance": target }),
        started,
    );
    let pass = rep["pass"].as_bool().unwrap();
    emit(o.out()?.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&rep)?))?;
    Ok(pass)
}

fn cmd_exact(args: CommonArgs) -> Result<bool> {
    let started = Instant::now();
    let o = Resolved::new(args)?;
    let p = o.p(0.75)?;
    if !(p > 0.0 && p < 1.0) {
        bail!("exact tables require p in (0, 1), got {p}");
    }
    let indices = match o.file.resolve_opt("n", o.args.n.clone())? {
        Some(s) => parse_usize_list(&s)?,
        None => vec![1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024],
    };
    if indices.is_empty() || indices.contains(&0) {
        bail!("indices must be positive");
    }
    let horizon = o.file.resolve_opt("horizon", o.args.horizon)?;
    if let Some(h) = horizon {
        if h < *indices.iter().max().unwrap() {
            bail!("horizon {h} is smaller than the largest requested index");
        }
    }
    let mut rows = Vec::new();
    for &n in &indices {
        let a = numerics::a_seq(p, n)?;
        let m = numerics::exact_second_moment(p, n)?;
        let mut row = json!({
            "n": n,
            "a_n": a,
            "gamma_n": numerics::gamma_step(p, n)?,
            "m_tilde_n": m,
            "lln_factor": a * a * m / (n as f64 * n as f64),
            "centering_discrepancy": numerics::centering_discrepancy(p, n)?,
        });
        if let Some(h) = horizon {
            row["v_exact"] = json!(numerics::v_exact(p, n, h)?);
        }
        rows.push(row);
    }
    let mut detail = json!({
        "rows": rows,
        "limit_variance": if p > 0.5 { json!(numerics::limit_fluctuation_variance(p)?) } else { Value::Null },
    });
    let variance_limit = o.file.resolve_switch("variance-limit", o.args.variance_limit)?;
    if variance_limit {
        if p <= 0.5 {
            bail!("the variance limit requires p in (1/2, 1)");
        }
        let iv = numerics::limit_variance_w(p, 1e-3, 1 << 23)?;
        detail["w_variance_interval"] = json!({
            "lower": iv.lower,
            "upper": iv.upper,
            "index": iv.index,
            "converged": iv.converged,
        });
    }
    let config = json!({ "p": p, "n": indices, "horizon": horizon });
    match o.format("json")?.as_str() {
        "csv" => {
            let mut csv = String::from(
                "n,a_n,gamma_n,m_tilde_n,lln_factor,centering_discrepancy,v_exact\n",
            );
            for row in detail["rows"].as_array().unwrap() {
                csv.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                    row["n"],
                    row["a_n"].as_f64().unwrap(),
                    row["gamma_n"].as_f64().unwrap(),
                    row["m_tilde_n"].as_f64().unwrap(),
                    row["lln_factor"].as_f64().unwrap(),
                    row["centering_discrepancy"].as_f64().unwrap(),
                    row.get("v_exact")
                        .and_then(Value::as_f64)
                        .map_or(String::new(), |v| format!("{v:.16e}")),
                ));
            }
            emit(o.out()?.as_deref(), &csv)?;
        }
        _ => {
            let rep = report("exact", config, 0, &[], detail, started);
            emit(o.out()?.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&rep)?))?;
        }
    }
    Ok(true)
}

fn cmd_enumerate(args: CommonArgs) -> Result<bool> {
    let started = Instant::now();
    let o = Resolved::new(args)?;
    let d = o.distribution()?;
    let p = o.p(0.75)?;
    let n: usize = match o.file.resolve_opt("n", o.args.n.clone())? {
        Some(s) => s.trim().parse().context("--n must be a single integer")?,
        None => 2,
    };
    let pmf = enumerate_exact_pmf(&d, p, n)?;
    let cross_check = pmf_variance_cross_check(&d, p, n, &pmf)?;
    let pass = cross_check <= 1e-10;
    let mut csv = String::new();
    for c in 1..=pmf.dim {
        csv.push_str(&format!("value_{c},"));
    }
    csv.push_str("probability\n");
    for (v, prob) in &pmf.entries {
        for x in v {
            csv.push_str(&format!("{x:.16e},"));
        }
        csv.push_str(&format!("{prob:.16e}\n"));
    }
    match o.format("csv")?.as_str() {
        "csv" => {
            emit(o.out()?.as_deref(), &csv)?;
            eprintln!(
                "mean = {:?}, variance = {:?}, recursion cross-check max error = {cross_check:.3e} ({})",
                pmf.mean(),
                pmf.variance(),
                if pass { "ok" } else { "MISMATCH" },
            );
        }
        _ => {
            let config = json!({ "dist": o.descriptor()?, "p": p, "n": n });
            let detail = json!({
                "entries": pmf.entries.iter().map(|(v, pr)| json!({"value": v, "probability": pr})).collect::<Vec<_>>(),
                "mean": pmf.mean(),
                "variance": pmf.variance(),
                "cross_check_error": cross_check,
                "cross_check_pass": pass,
            });
            let rep = report("enumerate", config, 0, &[], detail, started);
            emit(o.out()?.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&rep)?))?;
        }
    }
    Ok(pass)
}

fn cmd_equivalence(args: CommonArgs) -> Result<bool> {
    let started = Instant::now();
    let o = Resolved::new(args)?;
    let p = o.p(0.6)?;
    if !(0.0..=1.0).contains(&p) {
        bail!("p must lie in [0, 1], got {p}");
    }
    let d = o.file.resolve("d", o.args.d, 1)?;
    let n: usize = match o.file.resolve_opt("n", o.args.n.clone())? {
        Some(s) => s.trim().parse().context("--n must be a single integer")?,
        None => 3,
    };
    if n > 4 {
        bail!("exact equivalence mode supports n <= 4, got {n}");
    }
    let mapped_q = if d == 1 {
        erw_param_map(p)
    } else {
        merw_param_map(p, d)
    };
    let q = o.file.resolve("q", o.args.q, mapped_q)?;
    let reinforced_dist = if d == 1 {
        StepDistribution::rademacher()
    } else {
        StepDistribution::lattice_isotropic(d)?
    };
    let reinforced = enumerate_exact_pmf(&reinforced_dist, p, n)?;
    let memory = enumerate_memory_walk_pmf(q, d, n)?;
    let diff = reinforced.max_abs_diff(&memory);
    let pass = diff <= 1e-12;
    let config = json!({ "p": p, "q": q, "mapped_q": mapped_q, "d": d, "n": n });
    let detail = json!({
        "max_abs_pmf_diff": diff,
        "tolerance": 1e-12,
        "pass": pass,
    });
    let rep = report("equivalence", config, 0, &[], detail, started);
    emit(o.out()?.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&rep)?))?;
    Ok(pass)
}
