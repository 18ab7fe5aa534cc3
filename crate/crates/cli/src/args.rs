use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lloydspp::breakpoints::{AlphaInterval, DEFAULT_EPS};
use lloydspp::datagen::{DistributionConfig, GridGeometry};
use lloydspp::lloyds::CenterRule;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "lloydspp", version, about = "(alpha, beta)-Lloyd's clustering experiments")]
pub struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Draw one instance from a distribution and write it as CSV.
    Generate(GenerateArgs),
    /// Cluster one instance file at a fixed (alpha, beta).
    Cluster(ClusterArgs),
    /// Mean Hamming cost over an alpha x beta grid.
    Sweep(SweepArgs),
    /// Exact alpha tuning on a train half, evaluated on a test half.
    TuneAlpha(TuneArgs),
    /// Mean number of alpha-intervals as a function of instance size.
    CountIntervals(CountArgs),
    /// Histogram of pooled alpha breakpoints.
    Histogram(HistogramArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Cluster(_) => "cluster",
            Command::Sweep(_) => "sweep",
            Command::TuneAlpha(_) => "tune-alpha",
            Command::CountIntervals(_) => "count-intervals",
            Command::Histogram(_) => "histogram",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistKind {
    GaussianGrid,
    LabelSubset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleArg {
    Medoid,
    Mean,
}

impl From<RuleArg> for CenterRule {
    fn from(rule: RuleArg) -> Self {
        match rule {
            RuleArg::Medoid => CenterRule::Medoid,
            RuleArg::Mean => CenterRule::Mean,
        }
    }
}

/// `LO:HI` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaRange {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for AlphaRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
        let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        let range = AlphaRange {
            lo: parse(lo)?,
            hi: parse(hi)?,
        };
        AlphaInterval::new(range.lo, range.hi).map_err(|e| e.to_string())?;
        Ok(range)
    }
}

impl fmt::Display for AlphaRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

impl AlphaRange {
    pub fn interval(self) -> AlphaInterval {
        AlphaInterval {
            lo: self.lo,
            hi: self.hi,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DistArgs {
    /// Instance distribution.
    #[arg(long, value_enum, default_value_t = DistKind::GaussianGrid)]
    pub dist: DistKind,

    /// Labeled feature CSV for the label-subset distribution.
    #[arg(long)]
    pub dataset: Option<PathBuf>,

    /// Clusters per instance.
    #[arg(long, default_value_t = 4)]
    pub k: usize,

    /// Points per label.
    #[arg(long = "N", default_value_t = 120)]
    #[serde(rename = "N")]
    pub points_per_label: usize,

    /// Master seed for instances and seed vectors.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl DistArgs {
    pub fn config(&self) -> Result<DistributionConfig, String> {
        match self.dist {
            DistKind::GaussianGrid => Ok(DistributionConfig::GaussianGrid {
                k: self.k,
                points_per_label: self.points_per_label,
                geometry: GridGeometry::default(),
            }),
            DistKind::LabelSubset => {
                let dataset = self
                    .dataset
                    .clone()
                    .ok_or("--dataset is required for --dist label-subset")?;
                Ok(DistributionConfig::LabelSubset {
                    k: self.k,
                    points_per_label: self.points_per_label,
                    dataset,
                })
            }
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct LloydsArgs {
    /// Lloyd's iteration cap.
    #[arg(long = "T", default_value_t = 3)]
    #[serde(rename = "T")]
    pub max_iterations: usize,

    /// Center rule; the mean rule applies only at beta = 2 and falls back to
    /// the medoid rule elsewhere.
    #[arg(long, value_enum, default_value_t = RuleArg::Mean)]
    pub center_rule: RuleArg,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistArgs,

    /// Sample index of the instance to draw.
    #[arg(long, default_value_t = 0)]
    pub index: u64,

    /// Instance CSV; a JSON sidecar with `k` is written next to it.
    #[arg(long, default_value = "instance.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    /// Instance CSV with a trailing label column.
    #[arg(long)]
    pub instance: PathBuf,

    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,

    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,

    /// Seed of the seed vector Z.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    #[serde(flatten)]
    pub lloyds: LloydsArgs,

    /// Assignment CSV (point_index,cluster).
    #[arg(long, default_value = "clustering.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistArgs,

    /// Sample size.
    #[arg(long, default_value_t = 100)]
    pub m: usize,

    #[arg(long, default_value_t = AlphaRange { lo: 0.0, hi: 20.0 })]
    pub alpha_range: AlphaRange,

    /// Evenly spaced alpha values across the range.
    #[arg(long, default_value_t = 50)]
    pub alpha_points: usize,

    /// Beta values; defaults to 25 evenly spaced values over [1, 10].
    #[arg(long, value_delimiter = ',')]
    pub beta_grid: Option<Vec<f64>>,

    #[command(flatten)]
    #[serde(flatten)]
    pub lloyds: LloydsArgs,

    /// Surface CSV (alpha,beta,mean_cost,stderr).
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TuneArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistArgs,

    /// Sample size, split evenly into train and test.
    #[arg(long, default_value_t = 100)]
    pub m: usize,

    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,

    #[arg(long, default_value_t = AlphaRange { lo: 0.0, hi: 20.0 })]
    pub alpha_range: AlphaRange,

    /// Breakpoint precision.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,

    #[command(flatten)]
    #[serde(flatten)]
    pub lloyds: LloydsArgs,

    /// Candidate CSV (alpha_candidate,train_cost,test_cost).
    #[arg(long, default_value = "tune.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CountArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistArgs,

    /// Samples per instance size.
    #[arg(long, default_value_t = 20)]
    pub m: usize,

    /// Instance sizes; each uses floor(n / k) points per label. Defaults to
    /// 50, 100, ..., 1000.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,

    #[arg(long, default_value_t = AlphaRange { lo: 0.0, hi: 20.0 })]
    pub alpha_range: AlphaRange,

    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,

    /// Scaling CSV (n,mean_intervals,stderr).
    #[arg(long, default_value = "intervals.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct HistogramArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistArgs,

    #[arg(long, default_value_t = 20)]
    pub m: usize,

    #[arg(long, default_value_t = AlphaRange { lo: 0.0, hi: 20.0 })]
    pub alpha_range: AlphaRange,

    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,

    #[arg(long, default_value_t = 40)]
    pub bins: usize,

    /// Histogram CSV (bin_lo,bin_hi,count).
    #[arg(long, default_value = "histogram.csv")]
    pub out: PathBuf,
}
