use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use lloydspp::breakpoints::{breakpoint_histogram, count_intervals_vs_n, enumerate_execution_tree, BreakpointSet};
use lloydspp::datagen::{load_instance, seed_vector, sidecar_path, write_instance, Distribution};
use lloydspp::lloyds::{clus_outcome, LloydsConfig};
use lloydspp::model::lp_cost;
use lloydspp::tuner::{default_beta_grid, draw_sample, linspace, sweep_surface, train_test_report, TunerConfig};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    ClusterArgs, Command, CountArgs, DistArgs, GenerateArgs, HistogramArgs, SweepArgs, TuneArgs,
};

/// A bad flag combination, reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    version: &'static str,
    threads: usize,
    config: &'a Command,
    wall_clock_seconds: f64,
    outputs: Vec<PathBuf>,
    summary: Value,
}

/// Data files written by a command and a summary for its manifest.
struct Report {
    outputs: Vec<PathBuf>,
    summary: Value,
}

/// Runs the command and writes its manifest next to the primary output.
pub fn run(command: &Command, threads: usize) -> Result<()> {
    let start = Instant::now();
    let report = match command {
        Command::Generate(args) => generate(args)?,
        Command::Cluster(args) => cluster(args)?,
        Command::Sweep(args) => sweep(args)?,
        Command::TuneAlpha(args) => tune(args)?,
        Command::CountIntervals(args) => count(args)?,
        Command::Histogram(args) => histogram(args)?,
    };
    let manifest_path = manifest_path(&report.outputs[0]);
    let manifest = RunManifest {
        command: command.name(),
        version: env!("CARGO_PKG_VERSION"),
        threads,
        config: command,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs: report.outputs,
        summary: report.summary,
    };
    let mut out = BufWriter::new(
        File::create(&manifest_path).with_context(|| format!("creating {}", manifest_path.display()))?,
    );
    serde_json::to_writer_pretty(&mut out, &manifest)?;
    out.write_all(b"\n")?;
    out.flush()?;
    println!("manifest {}", manifest_path.display());
    Ok(())
}

/// `out.csv` -> `out.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

fn distribution(args: &DistArgs) -> Result<Distribution> {
    let config = args.config().map_err(UsageError)?;
    Ok(Distribution::from_config(&config)?)
}

/// Writes `header` then one row per record, so empty outputs keep a header.
fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn generate(args: &GenerateArgs) -> Result<Report> {
    let dist = distribution(&args.dist)?;
    let instance = dist.instance(args.dist.seed, args.index)?;
    write_instance(&args.out, &instance, Some(args.dist.seed), Some(args.index))?;
    println!("n {}", instance.n());
    println!("k {}", instance.k());
    Ok(Report {
        outputs: vec![args.out.clone(), sidecar_path(&args.out)],
        summary: json!({ "n": instance.n(), "k": instance.k(), "dim": instance.dim() }),
    })
}

fn cluster(args: &ClusterArgs) -> Result<Report> {
    let (instance, _) =
        load_instance(&args.instance).with_context(|| format!("reading {}", args.instance.display()))?;
    let config = LloydsConfig::for_beta(args.beta, args.lloyds.max_iterations, args.lloyds.center_rule.into())?;
    let z = seed_vector(args.seed, 0, instance.k());
    let outcome = clus_outcome(&instance, &z, args.alpha, &config)?;
    let hamming = outcome.hamming.value();
    let objective = lp_cost(&instance, &outcome.lloyds.clustering, args.beta)?;
    write_csv(
        &args.out,
        &["point_index", "cluster"],
        outcome.lloyds.clustering.assignment.iter().enumerate(),
    )?;
    println!("hamming_cost {hamming}");
    println!("lp_cost {objective}");
    Ok(Report {
        outputs: vec![args.out.clone()],
        summary: json!({
            "hamming_cost": hamming,
            "lp_cost": objective,
            "seeds": outcome.seeds,
            "iterations": outcome.lloyds.iterations,
            "converged": outcome.lloyds.converged,
        }),
    })
}

fn sweep(args: &SweepArgs) -> Result<Report> {
    let dist = distribution(&args.dist)?;
    let alphas = linspace(args.alpha_range.lo, args.alpha_range.hi, args.alpha_points);
    let betas = args.beta_grid.clone().unwrap_or_else(default_beta_grid);
    let sample = draw_sample(&dist, args.m, args.dist.seed)?;
    let surface = sweep_surface(
        &sample,
        &alphas,
        &betas,
        args.lloyds.max_iterations,
        args.lloyds.center_rule.into(),
    )?;
    write_csv(&args.out, &["alpha", "beta", "mean_cost", "stderr"], surface.cells())?;
    let best = surface.argmin();
    let row = surface
        .cells()
        .position(|c| c == best)
        .expect("argmin is a cell");
    println!(
        "argmin alpha {} beta {} mean_cost {} stderr {}",
        best.alpha, best.beta, best.mean_cost, best.stderr
    );
    Ok(Report {
        outputs: vec![args.out.clone()],
        summary: json!({ "rows": alphas.len() * betas.len(), "argmin": best, "argmin_row": row }),
    })
}

fn tune(args: &TuneArgs) -> Result<Report> {
    let dist = distribution(&args.dist)?;
    let config = TunerConfig {
        m: args.m,
        alpha_range: args.alpha_range.interval(),
        beta: args.beta,
        eps: args.eps,
        max_iterations: args.lloyds.max_iterations,
        seed: args.dist.seed,
        center_rule: args.lloyds.center_rule.into(),
        ..TunerConfig::default()
    };
    let report = train_test_report(&dist, &config)?;
    write_csv(
        &args.out,
        &["alpha_candidate", "train_cost", "test_cost"],
        &report.rows,
    )?;
    println!("alpha_hat {}", report.alpha_hat);
    println!("train_cost {}", report.train_cost);
    println!("test_cost {}", report.test_cost);
    println!("max_gap {}", report.max_gap);
    if report.gap_flagged {
        eprintln!(
            "warning: train/test gap {} exceeds {}; consider m >= {}",
            report.max_gap, config.gap_threshold, report.suggested_m
        );
    }
    Ok(Report {
        outputs: vec![args.out.clone()],
        summary: json!({
            "alpha_hat": report.alpha_hat,
            "train_cost": report.train_cost,
            "test_cost": report.test_cost,
            "train_m": report.train_m,
            "test_m": report.test_m,
            "candidates": report.rows.len(),
            "max_gap": report.max_gap,
            "gap_flagged": report.gap_flagged,
            "suggested_m": report.suggested_m,
        }),
    })
}

fn count(args: &CountArgs) -> Result<Report> {
    let dist = distribution(&args.dist)?;
    let grid = args
        .n_grid
        .clone()
        .unwrap_or_else(|| (1..=20).map(|i| 50 * i).collect());
    let rows = count_intervals_vs_n(&dist, &grid, args.m, args.dist.seed, args.alpha_range.interval(), args.eps)?;
    write_csv(&args.out, &["n", "mean_intervals", "stderr"], &rows)?;
    for r in &rows {
        println!("n {} mean_intervals {} stderr {}", r.n, r.mean_intervals, r.stderr);
    }
    let monotone = rows.windows(2).all(|w| w[0].mean_intervals <= w[1].mean_intervals);
    Ok(Report {
        outputs: vec![args.out.clone()],
        summary: json!({ "sizes": rows.len(), "monotone": monotone }),
    })
}

fn histogram(args: &HistogramArgs) -> Result<Report> {
    let dist = distribution(&args.dist)?;
    let range = args.alpha_range.interval();
    let sample = draw_sample(&dist, args.m, args.dist.seed)?;
    let enumerations = sample
        .par_iter()
        .map(|item| enumerate_execution_tree(&item.instance, &item.z, range, args.eps))
        .collect::<lloydspp::Result<Vec<_>>>()?;
    let set = BreakpointSet::from_enumerations(enumerations.iter().enumerate(), args.eps);
    let bins = breakpoint_histogram(&set, range, args.bins)?;
    write_csv(&args.out, &["bin_lo", "bin_hi", "count"], &bins)?;
    let leaves: usize = enumerations.iter().map(|e| e.leaves.len()).sum();
    println!("breakpoints {}", set.len());
    Ok(Report {
        outputs: vec![args.out.clone()],
        summary: json!({ "breakpoints": set.len(), "leaves": leaves, "bins": args.bins }),
    })
}
