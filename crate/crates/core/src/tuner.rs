//! Sample-based parameter selection.
//!
//! Alpha is tuned exactly: each sample element's cost is a step function of
//! alpha whose pieces are the leaves of its execution tree, so the sample
//! mean at any alpha is a sum of step functions evaluated by one sweep over
//! sorted leaf boundaries. Beta is tuned over a grid.

use std::collections::HashMap;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::breakpoints::{enumerate_execution_tree, AlphaInterval, BreakpointSet, EnumerationStats, DEFAULT_EPS};
use crate::datagen::{seed_vector, Distribution};
use crate::error::{Error, Result};
use crate::lloyds::{CenterRule, LloydsConfig, LloydsRunner};
use crate::model::{cost_stats, ClusteringInstance, CostScale, CostStats, DistanceStats, HammingCost};
use crate::seeding::{seed, SeedVector};

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| {
                if i + 1 == points {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}

/// 50 alpha values over `[0, 20]`.
pub fn default_alpha_grid() -> Vec<f64> {
    linspace(0.0, 20.0, 50)
}

/// 25 beta values over `[1, 10]`.
pub fn default_beta_grid() -> Vec<f64> {
    linspace(1.0, 10.0, 25)
}

/// Settings shared by the tuning procedures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerConfig {
    pub m: usize,
    pub alpha_range: AlphaInterval,
    pub alpha_points: usize,
    pub beta: f64,
    pub beta_grid: Vec<f64>,
    pub eps: f64,
    /// Confidence parameter for the advisory sample size.
    pub delta: f64,
    /// Target accuracy for the advisory sample size.
    pub accuracy: f64,
    #[serde(rename = "T")]
    pub max_iterations: usize,
    pub seed: u64,
    pub center_rule: CenterRule,
    /// Train/test gaps above this are flagged.
    pub gap_threshold: f64,
}

impl Default for TunerConfig {
    fn default() -> Self {
        Self {
            m: 100,
            alpha_range: AlphaInterval { lo: 0.0, hi: 20.0 },
            alpha_points: 50,
            beta: 2.0,
            beta_grid: default_beta_grid(),
            eps: DEFAULT_EPS,
            delta: 0.05,
            accuracy: 0.05,
            max_iterations: 3,
            seed: 0,
            center_rule: CenterRule::Mean,
            gap_threshold: 0.03,
        }
    }
}

impl TunerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::EmptySample);
        }
        AlphaInterval::new(self.alpha_range.lo, self.alpha_range.hi)?;
        if self.alpha_points == 0 || self.beta_grid.is_empty() {
            return Err(Error::InvalidParameter("parameter grids must be non-empty".into()));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0 && self.accuracy > 0.0) {
            return Err(Error::InvalidParameter("delta must lie in (0, 1) and accuracy be positive".into()));
        }
        for &b in std::iter::once(&self.beta).chain(&self.beta_grid) {
            LloydsConfig::for_beta(b, self.max_iterations, self.center_rule)?;
        }
        Ok(())
    }

    pub fn alpha_grid(&self) -> Vec<f64> {
        linspace(self.alpha_range.lo, self.alpha_range.hi, self.alpha_points)
    }

    /// Lloyd's settings at `beta`; the mean rule is replaced by the medoid
    /// rule away from `beta = 2`.
    pub fn lloyds(&self, beta: f64) -> Result<LloydsConfig> {
        LloydsConfig::for_beta(beta, self.max_iterations, self.center_rule)
    }
}

/// One sample element: an instance and its seed vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleItem {
    pub index: u64,
    pub instance: ClusteringInstance,
    pub z: SeedVector,
}

/// The first `m` sample elements of `distribution` under `seed`.
pub fn draw_sample(distribution: &Distribution, m: usize, seed: u64) -> Result<Vec<SampleItem>> {
    if m == 0 {
        return Err(Error::EmptySample);
    }
    draw_sample_range(distribution, 0..m as u64, seed)
}

/// Sample elements with the given indices.
pub fn draw_sample_range(distribution: &Distribution, indices: Range<u64>, seed: u64) -> Result<Vec<SampleItem>> {
    let k = distribution.k();
    indices
        .into_par_iter()
        .map(|i| {
            Ok(SampleItem {
                index: i,
                instance: distribution.instance(seed, i)?,
                z: seed_vector(seed, i, k),
            })
        })
        .collect()
}

/// Hamming cost of one element at `alpha`.
pub fn item_cost(item: &SampleItem, alpha: f64, lloyds: &LloydsConfig) -> Result<HammingCost> {
    let seeds = seed(&item.instance, &item.z, alpha)?;
    LloydsRunner::new(&item.instance, *lloyds)?.cost(&seeds)
}

/// Mean and standard error of the cost at `alpha` over the sample.
pub fn empirical_cost(sample: &[SampleItem], alpha: f64, lloyds: &LloydsConfig) -> Result<CostStats> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let costs = sample
        .par_iter()
        .map(|item| item_cost(item, alpha, lloyds))
        .collect::<Result<Vec<_>>>()?;
    cost_stats(&costs)
}

/// Costs of one element at every alpha of `alphas`, running local search once
/// per distinct seed sequence.
fn costs_over_alphas(item: &SampleItem, alphas: &[f64], lloyds: &LloydsConfig) -> Result<Vec<HammingCost>> {
    let mut runner = LloydsRunner::new(&item.instance, *lloyds)?;
    alphas
        .iter()
        .map(|&alpha| runner.cost(&seed(&item.instance, &item.z, alpha)?))
        .collect()
}

/// One cell of a cost surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCell {
    pub alpha: f64,
    pub beta: f64,
    pub mean_cost: f64,
    pub stderr: f64,
}

/// Mean Hamming cost over an `alpha x beta` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSurface {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Alpha-major: cell `(a, b)` is at `a * betas.len() + b`.
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl CostSurface {
    pub fn cell(&self, a: usize, b: usize) -> SurfaceCell {
        let idx = a * self.betas.len() + b;
        SurfaceCell {
            alpha: self.alphas[a],
            beta: self.betas[b],
            mean_cost: self.mean[idx],
            stderr: self.stderr[idx],
        }
    }

    /// Cells in alpha-major order.
    pub fn cells(&self) -> impl Iterator<Item = SurfaceCell> + '_ {
        (0..self.alphas.len()).flat_map(move |a| (0..self.betas.len()).map(move |b| self.cell(a, b)))
    }

    /// Cell of least mean cost; ties go to the lexicographically smallest
    /// `(alpha, beta)`.
    pub fn argmin(&self) -> SurfaceCell {
        self.cells()
            .min_by(|x, y| {
                x.mean_cost
                    .total_cmp(&y.mean_cost)
                    .then(x.alpha.total_cmp(&y.alpha))
                    .then(x.beta.total_cmp(&y.beta))
            })
            .expect("non-empty surface")
    }
}

/// Evaluates every `(alpha, beta)` pair over the sample.
pub fn sweep_surface(
    sample: &[SampleItem],
    alphas: &[f64],
    betas: &[f64],
    max_iterations: usize,
    center_rule: CenterRule,
) -> Result<CostSurface> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if alphas.is_empty() || betas.is_empty() {
        return Err(Error::InvalidParameter("parameter grids must be non-empty".into()));
    }
    let configs = betas
        .iter()
        .map(|&b| LloydsConfig::for_beta(b, max_iterations, center_rule))
        .collect::<Result<Vec<_>>>()?;
    let (na, nb) = (alphas.len(), betas.len());
    let per_item = sample
        .par_iter()
        .map(|item| {
            let seeds = alphas
                .iter()
                .map(|&a| seed(&item.instance, &item.z, a))
                .collect::<Result<Vec<_>>>()?;
            let mut distinct: Vec<&Vec<usize>> = Vec::new();
            let mut slot = HashMap::new();
            let which: Vec<usize> = seeds
                .iter()
                .map(|s| {
                    *slot.entry(s).or_insert_with(|| {
                        distinct.push(s);
                        distinct.len() - 1
                    })
                })
                .collect();
            let mut costs = vec![HammingCost { mismatches: 0, n: 1 }; na * nb];
            for (b, config) in configs.iter().enumerate() {
                let mut runner = LloydsRunner::new(&item.instance, *config)?;
                let found = distinct
                    .iter()
                    .map(|s| runner.cost(s))
                    .collect::<Result<Vec<_>>>()?;
                for (a, &w) in which.iter().enumerate() {
                    costs[a * nb + b] = found[w];
                }
            }
            Ok(costs)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut mean = Vec::with_capacity(na * nb);
    let mut stderr = Vec::with_capacity(na * nb);
    let mut column = Vec::with_capacity(sample.len());
    for cell in 0..na * nb {
        column.clear();
        column.extend(per_item.iter().map(|c| c[cell]));
        let stats = cost_stats(&column)?;
        mean.push(stats.mean);
        stderr.push(stats.stderr);
    }
    Ok(CostSurface {
        alphas: alphas.to_vec(),
        betas: betas.to_vec(),
        mean,
        stderr,
    })
}

/// One element's cost as a step function of alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostProfile {
    pub range: AlphaInterval,
    /// Left end of each piece; the first equals `range.lo`.
    pub starts: Vec<f64>,
    /// Right end of the last piece equals `range.hi`.
    pub ends: Vec<f64>,
    pub costs: Vec<HammingCost>,
    pub stats: EnumerationStats,
}

impl CostProfile {
    pub fn cost_at(&self, alpha: f64) -> Option<HammingCost> {
        if !(alpha >= self.range.lo && alpha <= self.range.hi) {
            return None;
        }
        let idx = self.starts.partition_point(|&s| s <= alpha);
        Some(self.costs[idx.checked_sub(1)?])
    }
}

/// Enumerates the execution tree of one element and costs each leaf.
pub fn cost_profile(item: &SampleItem, range: AlphaInterval, eps: f64, lloyds: &LloydsConfig) -> Result<CostProfile> {
    let e = enumerate_execution_tree(&item.instance, &item.z, range, eps)?;
    let mut runner = LloydsRunner::new(&item.instance, *lloyds)?;
    let costs = e
        .leaves
        .iter()
        .map(|leaf| runner.cost(&leaf.centers))
        .collect::<Result<Vec<_>>>()?;
    Ok(CostProfile {
        range: e.range,
        starts: e.leaves.iter().map(|l| l.interval.lo).collect(),
        ends: e.leaves.iter().map(|l| l.interval.hi).collect(),
        costs,
        stats: e.stats,
    })
}

/// Cost profiles of all sample elements, in sample order.
pub fn cost_profiles(
    sample: &[SampleItem],
    range: AlphaInterval,
    eps: f64,
    lloyds: &LloydsConfig,
) -> Result<Vec<CostProfile>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    sample
        .par_iter()
        .map(|item| cost_profile(item, range, eps, lloyds))
        .collect()
}

/// Mean cost of the profiles at each of the ascending `alphas`.
///
/// Sums are kept as integers over a common denominator when one fits, so
/// equal means compare equal.
pub fn mean_cost_at(profiles: &[CostProfile], alphas: &[f64]) -> Result<Vec<f64>> {
    if profiles.is_empty() {
        return Err(Error::EmptySample);
    }
    debug_assert!(alphas.windows(2).all(|w| w[0] <= w[1]));
    let m = profiles.len();
    let scale = CostScale::for_sizes(profiles.iter().flat_map(|p| p.costs.iter().map(|c| c.n)));
    if !scale.exact() {
        return Ok(alphas
            .iter()
            .map(|&a| {
                profiles
                    .iter()
                    .map(|p| p.cost_at(a).map_or(f64::NAN, HammingCost::value))
                    .sum::<f64>()
                    / m as f64
            })
            .collect());
    }
    let v = |c: HammingCost| scale.scaled(c).expect("exact scale");
    let mut total: i128 = profiles.iter().map(|p| v(p.costs[0])).sum();
    let mut events: Vec<(f64, i128)> = profiles
        .iter()
        .flat_map(|p| {
            p.costs
                .windows(2)
                .zip(&p.starts[1..])
                .map(|(w, &s)| (s, v(w[1]) - v(w[0])))
        })
        .filter(|e| e.1 != 0)
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut next = 0;
    Ok(alphas
        .iter()
        .map(|&a| {
            while next < events.len() && events[next].0 <= a {
                total += events[next].1;
                next += 1;
            }
            scale.mean(total, m)
        })
        .collect())
}

/// Candidate alphas: breakpoints deduplicated at `eps`, every leaf midpoint,
/// and both range ends, ascending and distinct.
pub fn candidate_alphas(profiles: &[CostProfile], range: AlphaInterval, eps: f64) -> Vec<f64> {
    let entries = profiles
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.starts.iter().skip(1).map(move |&s| (s, i)))
        .collect();
    let breakpoints = BreakpointSet::from_entries(entries, eps);
    let mut out = breakpoints.values;
    for p in profiles {
        out.extend(
            p.starts
                .iter()
                .zip(&p.ends)
                .map(|(&lo, &hi)| AlphaInterval { lo, hi }.midpoint()),
        );
    }
    out.push(range.lo);
    out.push(range.hi);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// A candidate alpha and its sample cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub alpha: f64,
    pub cost: f64,
}

/// Result of exact alpha tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub alpha_hat: f64,
    pub cost: f64,
    pub candidates: Vec<Candidate>,
    /// Number of candidate alphas evaluated.
    pub evaluations: usize,
    pub total_leaves: usize,
    pub breakpoints: usize,
}

/// First candidate of least cost (ties go to the smallest alpha).
fn argmin(candidates: &[Candidate]) -> Candidate {
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        if c.cost < best.cost {
            best = c;
        }
    }
    best
}

/// Tunes alpha on precomputed cost profiles.
pub fn tune_from_profiles(profiles: &[CostProfile], range: AlphaInterval, eps: f64) -> Result<TuneResult> {
    let alphas = candidate_alphas(profiles, range, eps);
    let costs = mean_cost_at(profiles, &alphas)?;
    let candidates: Vec<Candidate> = alphas
        .iter()
        .zip(costs)
        .map(|(&alpha, cost)| Candidate { alpha, cost })
        .collect();
    let best = argmin(&candidates);
    let entries = profiles
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.starts.iter().skip(1).map(move |&s| (s, i)))
        .collect();
    Ok(TuneResult {
        alpha_hat: best.alpha,
        cost: best.cost,
        evaluations: candidates.len(),
        candidates,
        total_leaves: profiles.iter().map(|p| p.costs.len()).sum(),
        breakpoints: BreakpointSet::from_entries(entries, eps).len(),
    })
}

/// Alpha minimizing the sample cost at the beta of `lloyds`.
pub fn tune_alpha(
    sample: &[SampleItem],
    range: AlphaInterval,
    eps: f64,
    lloyds: &LloydsConfig,
) -> Result<TuneResult> {
    let profiles = cost_profiles(sample, range, eps, lloyds)?;
    tune_from_profiles(&profiles, range, eps)
}

/// Result of the uniform-grid baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub alpha: f64,
    pub cost: f64,
    pub evaluations: usize,
}

/// Number of grid points `lo, lo + step, ...` inside a range of `width`.
pub fn baseline_evaluations(width: f64, step: f64) -> usize {
    (width / step + 1e-9).floor() as usize + 1
}

/// Mean cost at each alpha of `alphas` (any order).
pub fn grid_costs(sample: &[SampleItem], alphas: &[f64], lloyds: &LloydsConfig) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let per_item = sample
        .par_iter()
        .map(|item| costs_over_alphas(item, alphas, lloyds))
        .collect::<Result<Vec<_>>>()?;
    let mut column = Vec::with_capacity(sample.len());
    (0..alphas.len())
        .map(|a| {
            column.clear();
            column.extend(per_item.iter().map(|c| c[a]));
            Ok(cost_stats(&column)?.mean)
        })
        .collect()
}

/// Best alpha on the grid `lo + i * step`; ties go to the smallest alpha.
pub fn discretized_baseline(
    sample: &[SampleItem],
    range: AlphaInterval,
    step: f64,
    lloyds: &LloydsConfig,
) -> Result<BaselineResult> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    let evaluations = baseline_evaluations(range.width(), step);
    let alphas: Vec<f64> = (0..evaluations)
        .map(|i| (range.lo + step * i as f64).min(range.hi))
        .collect();
    let costs = grid_costs(sample, &alphas, lloyds)?;
    let candidates: Vec<Candidate> = alphas
        .iter()
        .zip(costs)
        .map(|(&alpha, cost)| Candidate { alpha, cost })
        .collect();
    let best = argmin(&candidates);
    Ok(BaselineResult {
        alpha: best.alpha,
        cost: best.cost,
        evaluations,
    })
}

/// Advisory sample size `(H / accuracy)^2 (min(T, k) ln n + ln k + ln(1/delta) + L)`
/// with `H = 1`, where `L = ln ln(hi / lo)` for `lo > 0` and
/// `ln ln(hi ln R)` otherwise, each clamped at 0.
pub fn suggested_m(
    accuracy: f64,
    delta: f64,
    max_iterations: usize,
    k: usize,
    n: usize,
    range: AlphaInterval,
    distance_ratio: f64,
) -> usize {
    let lnln = |x: f64| if x > 1.0 { x.ln().ln().max(0.0) } else { 0.0 };
    let range_term = if range.lo > 0.0 {
        lnln(range.hi / range.lo)
    } else {
        lnln(range.hi * distance_ratio.ln().max(0.0))
    };
    let complexity = max_iterations.min(k) as f64 * (n as f64).ln()
        + (k as f64).ln()
        + (1.0 / delta).ln()
        + range_term;
    (complexity / (accuracy * accuracy)).ceil() as usize
}

/// Train and test cost at one candidate alpha.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub alpha_candidate: f64,
    pub train_cost: f64,
    pub test_cost: f64,
}

/// Tuning on one sample and evaluation on another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTestReport {
    pub train_m: usize,
    pub test_m: usize,
    pub alpha_hat: f64,
    pub train_cost: f64,
    pub test_cost: f64,
    pub rows: Vec<SplitRow>,
    /// Largest `|train - test|` over all candidates.
    pub max_gap: f64,
    pub gap_flagged: bool,
    pub suggested_m: usize,
}

/// Tunes on `train` profiles and evaluates every train candidate on `test`.
pub fn split_from_profiles(
    train: &[CostProfile],
    test: &[CostProfile],
    config: &TunerConfig,
    suggested_m: usize,
) -> Result<TrainTestReport> {
    let tuned = tune_from_profiles(train, config.alpha_range, config.eps)?;
    let alphas: Vec<f64> = tuned.candidates.iter().map(|c| c.alpha).collect();
    let test_costs = mean_cost_at(test, &alphas)?;
    let rows: Vec<SplitRow> = tuned
        .candidates
        .iter()
        .zip(&test_costs)
        .map(|(c, &t)| SplitRow {
            alpha_candidate: c.alpha,
            train_cost: c.cost,
            test_cost: t,
        })
        .collect();
    let max_gap = rows
        .iter()
        .map(|r| (r.train_cost - r.test_cost).abs())
        .fold(0.0, f64::max);
    let test_cost = rows
        .iter()
        .find(|r| r.alpha_candidate == tuned.alpha_hat)
        .map_or(f64::NAN, |r| r.test_cost);
    Ok(TrainTestReport {
        train_m: train.len(),
        test_m: test.len(),
        alpha_hat: tuned.alpha_hat,
        train_cost: tuned.cost,
        test_cost,
        rows,
        max_gap,
        gap_flagged: max_gap > config.gap_threshold,
        suggested_m,
    })
}

fn advisory_m(sample: &[SampleItem], config: &TunerConfig) -> usize {
    let first = &sample[0].instance;
    let ratio = DistanceStats::compute(first).ratio;
    suggested_m(
        config.accuracy,
        config.delta,
        config.max_iterations,
        first.k(),
        sample.iter().map(|s| s.instance.n()).max().unwrap_or(1),
        config.alpha_range,
        ratio,
    )
}

/// Draws `m` elements, tunes alpha on the first half and tests on the rest.
pub fn train_test_report(distribution: &Distribution, config: &TunerConfig) -> Result<TrainTestReport> {
    config.validate()?;
    if config.m < 2 {
        return Err(Error::InsufficientData("a train/test split needs m >= 2".into()));
    }
    let sample = draw_sample(distribution, config.m, config.seed)?;
    let lloyds = config.lloyds(config.beta)?;
    let profiles = cost_profiles(&sample, config.alpha_range, config.eps, &lloyds)?;
    let half = config.m / 2;
    split_from_profiles(&profiles[..half], &profiles[half..], config, advisory_m(&sample, config))
}

/// Tunes on `m` elements of one distribution and tests on `m` elements of
/// another.
pub fn transfer_report(
    train_distribution: &Distribution,
    test_distribution: &Distribution,
    config: &TunerConfig,
) -> Result<TrainTestReport> {
    config.validate()?;
    let lloyds = config.lloyds(config.beta)?;
    let train = draw_sample(train_distribution, config.m, config.seed)?;
    let test = draw_sample(test_distribution, config.m, config.seed.wrapping_add(1))?;
    let train_profiles = cost_profiles(&train, config.alpha_range, config.eps, &lloyds)?;
    let test_profiles = cost_profiles(&test, config.alpha_range, config.eps, &lloyds)?;
    split_from_profiles(&train_profiles, &test_profiles, config, advisory_m(&train, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(i: u64) -> SampleItem {
        let shift = i as f64;
        let instance = ClusteringInstance::new(
            [0.0, 0.1, 0.2, 50.0, 50.1, 50.2]
                .iter()
                .map(|&x| vec![x + shift])
                .collect(),
            2,
            vec![0, 0, 0, 1, 1, 1],
        )
        .unwrap();
        SampleItem {
            index: i,
            instance,
            z: seed_vector(11, i, 2),
        }
    }

    #[test]
    fn linspace_ends_exactly() {
        let g = default_alpha_grid();
        assert_eq!((g.len(), g[0], g[49]), (50, 0.0, 20.0));
        let b = default_beta_grid();
        assert_eq!((b.len(), b[0], b[24]), (25, 1.0, 10.0));
        assert_eq!(b[4], 2.5);
    }

    #[test]
    fn separable_sample_costs_nothing() {
        let sample: Vec<SampleItem> = (0..4).map(separable).collect();
        let lloyds = LloydsConfig::new(2.0, 3, CenterRule::Mean).unwrap();
        let stats = empirical_cost(&sample, 2.0, &lloyds).unwrap();
        assert_eq!((stats.mean, stats.stderr), (0.0, 0.0));
        let tuned = tune_alpha(&sample, AlphaInterval::new(0.0, 20.0).unwrap(), DEFAULT_EPS, &lloyds).unwrap();
        assert_eq!((tuned.alpha_hat, tuned.cost), (0.0, 0.0));
    }

    #[test]
    fn empty_sample_is_rejected() {
        let grid = Distribution::GaussianGrid(crate::datagen::GaussianGrid::new(2, 3).unwrap());
        assert!(matches!(draw_sample(&grid, 0, 1), Err(Error::EmptySample)));
        let lloyds = LloydsConfig::new(2.0, 3, CenterRule::Mean).unwrap();
        assert!(matches!(empirical_cost(&[], 1.0, &lloyds), Err(Error::EmptySample)));
    }

    #[test]
    fn baseline_evaluation_count() {
        assert_eq!(baseline_evaluations(20.0, 20.0), 2);
        assert_eq!(baseline_evaluations(20.0, 1e-4), 200_001);
        assert_eq!(baseline_evaluations(20.0, 3.0), 7);
    }

    #[test]
    fn suggested_m_grows_with_accuracy() {
        let r = AlphaInterval::new(0.0, 20.0).unwrap();
        let loose = suggested_m(0.1, 0.05, 3, 4, 480, r, 100.0);
        let tight = suggested_m(0.05, 0.05, 3, 4, 480, r, 100.0);
        assert!(tight > loose && loose > 0);
    }
}
