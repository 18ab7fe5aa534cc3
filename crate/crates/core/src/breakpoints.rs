//! Exact enumeration of the piecewise-constant alpha structure of seeding.
//!
//! For fixed `(instance, Z)` the seeded center sequence is a step function of
//! alpha. The execution tree is walked depth first: at each node the pick at
//! both ends of its interval bounds the possible next centers, and one
//! boundary per consecutive rank pair is located by bisection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{seed_vector, Distribution};
use crate::error::{Error, Result};
use crate::model::{mean_stderr, ClusteringInstance};
use crate::seeding::{seed_with, update_nearest, DAlphaFamily, RoundProfile, SeedVector, SeedingFamily};

/// Default breakpoint precision in alpha units.
pub const DEFAULT_EPS: f64 = 1e-7;

/// A range of alpha values `[lo, hi)`; the last interval of an enumeration
/// is closed at `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaInterval {
    pub lo: f64,
    pub hi: f64,
}

impl AlphaInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
            return Err(Error::InvalidParameter(format!(
                "alpha range [{lo}, {hi}] must satisfy 0 <= lo <= hi < inf"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        self.lo + 0.5 * (self.hi - self.lo)
    }
}

/// A node of the execution tree: the centers chosen so far and the alpha
/// values that choose them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionNode {
    pub centers: Vec<usize>,
    pub interval: AlphaInterval,
    /// Whether `interval.hi` itself belongs to the node.
    pub closed: bool,
}

impl ExecutionNode {
    pub fn root(range: AlphaInterval) -> Self {
        Self {
            centers: Vec::new(),
            interval: range,
            closed: true,
        }
    }

    pub fn depth(&self) -> usize {
        self.centers.len()
    }
}

/// A complete center sequence and the alpha values producing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionLeaf {
    pub centers: Vec<usize>,
    pub interval: AlphaInterval,
}

/// One outcome of a round: the rank picked, its point, and where.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Child {
    pub rank: usize,
    pub center: usize,
    pub interval: AlphaInterval,
    pub closed: bool,
}

/// A located boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    /// Smallest examined alpha at which the partial sum exceeds `z`.
    pub alpha: f64,
    /// Largest examined alpha at which it does not.
    pub below: f64,
    /// Bisection steps down to width `eps`.
    pub iterations: usize,
}

/// Work counters of an enumeration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnumerationStats {
    pub nodes: usize,
    pub solved: usize,
    pub bisection_steps: usize,
    pub max_bisection_steps: usize,
    /// Leaves at most `2 eps` wide whose centers changed when recomputed at
    /// their midpoint.
    pub repaired: usize,
}

impl EnumerationStats {
    fn record(&mut self, root: &Root) {
        self.solved += 1;
        self.bisection_steps += root.iterations;
        self.max_bisection_steps = self.max_bisection_steps.max(root.iterations);
    }
}

/// Upper bound on bisection steps for a search of width `width`.
pub fn bisection_budget(width: f64, eps: f64) -> usize {
    if width <= eps {
        0
    } else {
        (width / eps).log2().ceil() as usize
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// Locates the alpha where `f` turns positive inside `[a, b]`, given
/// `f(a) <= 0 < f(b)`, by bisection down to a bracket of width `eps`.
fn bracket_root(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, eps: f64) -> Root {
    let mut iterations = 0;
    while b - a > eps {
        let mid = a + 0.5 * (b - a);
        if mid <= a || mid >= b {
            break;
        }
        if f(mid) > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
        iterations += 1;
    }
    Root {
        alpha: b,
        below: a,
        iterations,
    }
}

/// Boundary where the partial sum of the 1-based rank `i` crosses `z`.
///
/// Requires `S_i(lo) <= z < S_i(hi)`; returns `alpha` within `eps` of the
/// crossing, after at most [`bisection_budget`] bisection steps.
pub fn solve_breakpoint<P: RoundProfile>(
    profile: &P,
    i: usize,
    z: f64,
    search: AlphaInterval,
    eps: f64,
) -> Result<Root> {
    check_eps(eps)?;
    if i == 0 || i > profile.len() {
        return Err(Error::InvalidParameter(format!(
            "rank {i} outside 1..={}",
            profile.len()
        )));
    }
    let f = |alpha: f64| profile.cumulative(i - 1, alpha) - z;
    if !(f(search.lo) <= 0.0 && f(search.hi) > 0.0) {
        return Err(Error::NoSignChange {
            lo: search.lo,
            hi: search.hi,
        });
    }
    Ok(bracket_root(f, search.lo, search.hi, eps))
}

/// Splits an interval by the center picked with `z` in one round.
///
/// Children are returned in increasing alpha order with strictly decreasing
/// ranks; they partition `interval` (children of zero width are dropped
/// unless they carry the closed right end).
pub fn split_round<P: RoundProfile>(
    profile: &P,
    z: f64,
    interval: AlphaInterval,
    closed: bool,
    eps: f64,
    stats: &mut EnumerationStats,
) -> Vec<Child> {
    let (lo, hi) = (interval.lo, interval.hi);
    let r_lo = profile.pick(lo, z);
    let r_hi = if profile.is_alpha_independent() || lo == hi {
        r_lo
    } else {
        profile.pick(hi, z)
    };
    let child = |rank: usize, lo: f64, hi: f64, closed: bool| Child {
        rank,
        center: profile.point(rank),
        interval: AlphaInterval { lo, hi },
        closed,
    };
    if r_lo == r_hi {
        return vec![child(r_lo, lo, hi, closed)];
    }
    let mut children = Vec::with_capacity(r_lo - r_hi + 1);
    let mut prev = lo;
    for r in (r_hi + 1..=r_lo).rev() {
        // Rank r is picked until S_{r-1} exceeds z.
        let f = |alpha: f64| profile.cumulative(r - 1, alpha) - z;
        if f(prev) > 0.0 {
            continue;
        }
        let root = bracket_root(f, prev, hi, eps);
        stats.record(&root);
        if root.alpha > prev {
            children.push(child(r, prev, root.alpha, false));
        }
        prev = root.alpha;
    }
    if prev < hi || closed {
        children.push(child(r_hi, prev, hi, closed));
    }
    children
}

/// Children of `node` in the next round of the d^alpha family.
pub fn child_intervals(
    node: &ExecutionNode,
    instance: &ClusteringInstance,
    z_t: f64,
    eps: f64,
) -> Result<Vec<Child>> {
    child_intervals_with(&DAlphaFamily, node, instance, z_t, eps)
}

/// [`child_intervals`] for an arbitrary seeding family.
pub fn child_intervals_with<F: SeedingFamily>(
    family: &F,
    node: &ExecutionNode,
    instance: &ClusteringInstance,
    z_t: f64,
    eps: f64,
) -> Result<Vec<Child>> {
    check_eps(eps)?;
    if node.depth() >= instance.k() {
        return Err(Error::InvalidParameter("node already holds k centers".into()));
    }
    let mut nearest = vec![f64::INFINITY; instance.n()];
    for &c in &node.centers {
        update_nearest(instance, &mut nearest, c);
    }
    let profile = family.round_profile(instance, &node.centers, &nearest);
    if profile.is_empty() {
        return Err(Error::InsufficientData("no candidate points left".into()));
    }
    let mut stats = EnumerationStats::default();
    Ok(split_round(&profile, z_t, node.interval, node.closed, eps, &mut stats))
}

/// All leaves of the execution tree of one `(instance, Z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub range: AlphaInterval,
    pub eps: f64,
    /// Leaves in increasing alpha order; they partition `range`.
    pub leaves: Vec<ExecutionLeaf>,
    pub stats: EnumerationStats,
}

impl Enumeration {
    /// Left ends of all leaves but the first.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.leaves.iter().skip(1).map(|l| l.interval.lo).collect()
    }

    /// The leaf whose interval contains `alpha`.
    pub fn leaf_at(&self, alpha: f64) -> Option<&ExecutionLeaf> {
        if !(alpha >= self.range.lo && alpha <= self.range.hi) {
            return None;
        }
        let idx = self.leaves.partition_point(|l| l.interval.lo <= alpha);
        self.leaves.get(idx.checked_sub(1)?)
    }
}

struct Frame {
    centers: Vec<usize>,
    nearest: Vec<f64>,
    interval: AlphaInterval,
    closed: bool,
}

/// Enumerates the d^alpha execution tree over `range`.
pub fn enumerate_execution_tree(
    instance: &ClusteringInstance,
    z: &SeedVector,
    range: AlphaInterval,
    eps: f64,
) -> Result<Enumeration> {
    enumerate_with(&DAlphaFamily, instance, z, range, eps)
}

/// Enumerates the execution tree of any seeding family over `range`.
pub fn enumerate_with<F: SeedingFamily>(
    family: &F,
    instance: &ClusteringInstance,
    z: &SeedVector,
    range: AlphaInterval,
    eps: f64,
) -> Result<Enumeration> {
    check_eps(eps)?;
    let range = AlphaInterval::new(range.lo, range.hi)?;
    let (n, k) = (instance.n(), instance.k());
    if k > n {
        return Err(Error::KExceedsPoints { k, n });
    }
    if z.len() != k {
        return Err(Error::InvalidParameter(format!(
            "seed vector has {} entries, instance has k = {k}",
            z.len()
        )));
    }
    let zs = z.as_slice();
    let mut stats = EnumerationStats::default();
    let mut leaves = Vec::new();
    let mut stack = vec![Frame {
        centers: Vec::with_capacity(k),
        nearest: vec![f64::INFINITY; n],
        interval: range,
        closed: true,
    }];
    while let Some(frame) = stack.pop() {
        stats.nodes += 1;
        let depth = frame.centers.len();
        if depth == k {
            leaves.push(ExecutionLeaf {
                centers: frame.centers,
                interval: frame.interval,
            });
            continue;
        }
        let profile = family.round_profile(instance, &frame.centers, &frame.nearest);
        if profile.is_empty() {
            return Err(Error::InsufficientData("no candidate points left".into()));
        }
        let children = split_round(&profile, zs[depth], frame.interval, frame.closed, eps, &mut stats);
        for child in children.iter().rev() {
            let mut centers = frame.centers.clone();
            centers.push(child.center);
            let mut nearest = frame.nearest.clone();
            if depth + 1 < k {
                update_nearest(instance, &mut nearest, child.center);
            }
            stack.push(Frame {
                centers,
                nearest,
                interval: child.interval,
                closed: child.closed,
            });
        }
    }
    // A boundary is only known to within `eps`, so a leaf this narrow may
    // lie on the wrong side of it.
    for leaf in leaves.iter_mut().filter(|l| l.interval.width() <= 2.0 * eps) {
        let centers = seed_with(family, instance, z, leaf.interval.midpoint())?;
        if centers != leaf.centers {
            leaf.centers = centers;
            stats.repaired += 1;
        }
    }
    Ok(Enumeration {
        range,
        eps,
        leaves,
        stats,
    })
}

/// Breakpoints pooled across enumerations, sorted and deduplicated so that
/// consecutive kept values are more than `precision` apart.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BreakpointSet {
    pub values: Vec<f64>,
    /// Sample index that produced each kept value.
    pub sources: Vec<usize>,
    pub precision: f64,
}

impl BreakpointSet {
    pub fn from_entries(mut entries: Vec<(f64, usize)>, precision: f64) -> Self {
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut sources = Vec::with_capacity(entries.len());
        for (v, s) in entries {
            if values.last().is_some_and(|&last| v - last <= precision) {
                continue;
            }
            values.push(v);
            sources.push(s);
        }
        Self {
            values,
            sources,
            precision,
        }
    }

    /// Pools the breakpoints of `(sample index, enumeration)` pairs.
    pub fn from_enumerations<'a>(
        enumerations: impl IntoIterator<Item = (usize, &'a Enumeration)>,
        precision: f64,
    ) -> Self {
        let entries = enumerations
            .into_iter()
            .flat_map(|(i, e)| e.breakpoints().into_iter().map(move |b| (b, i)))
            .collect();
        Self::from_entries(entries, precision)
    }

    pub fn merge(self, other: Self) -> Self {
        let precision = self.precision.max(other.precision);
        let entries = self
            .values
            .into_iter()
            .zip(self.sources)
            .chain(other.values.into_iter().zip(other.sources))
            .collect();
        Self::from_entries(entries, precision)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One histogram bin `[bin_lo, bin_hi)`; the last bin is closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
}

/// Fixed-width histogram of `values` over `range`. Values outside the range
/// are clamped into the end bins.
pub fn histogram(values: &[f64], range: AlphaInterval, bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::InvalidParameter("bin count must be positive".into()));
    }
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let width = range.width() / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            bin_lo: range.lo + width * b as f64,
            bin_hi: if b + 1 == bins { range.hi } else { range.lo + width * (b + 1) as f64 },
            count: 0,
        })
        .collect();
    for &v in values {
        let b = if width > 0.0 {
            (((v - range.lo) / width).floor().max(0.0) as usize).min(bins - 1)
        } else {
            0
        };
        out[b].count += 1;
    }
    Ok(out)
}

/// Histogram of a breakpoint set; counts sum to the set size.
pub fn breakpoint_histogram(set: &BreakpointSet, range: AlphaInterval, bins: usize) -> Result<Vec<HistogramBin>> {
    histogram(&set.values, range, bins)
}

/// Mean leaf count at one instance size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalCount {
    pub n: usize,
    pub mean_intervals: f64,
    pub stderr: f64,
}

/// Mean number of alpha-intervals per `(instance, Z)` for each requested
/// instance size. Size `n` uses `floor(n / k)` points per label; sample `i`
/// uses the same seed stream at every size.
pub fn count_intervals_vs_n(
    distribution: &Distribution,
    n_grid: &[usize],
    m: usize,
    seed: u64,
    range: AlphaInterval,
    eps: f64,
) -> Result<Vec<IntervalCount>> {
    if m == 0 {
        return Err(Error::EmptySample);
    }
    let k = distribution.k();
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        if n < k {
            return Err(Error::KExceedsPoints { k, n });
        }
        let dist = distribution.with_points_per_label(n / k);
        let counts = (0..m as u64)
            .into_par_iter()
            .map(|i| {
                let instance = dist.instance(seed, i)?;
                let z = seed_vector(seed, i, k);
                Ok(enumerate_execution_tree(&instance, &z, range, eps)?.leaves.len() as f64)
            })
            .collect::<Result<Vec<f64>>>()?;
        let (mean, stderr) = mean_stderr(&counts);
        rows.push(IntervalCount {
            n,
            mean_intervals: mean,
            stderr,
        });
    }
    Ok(rows)
}

/// Empirical constant `c` in `mean <= c * n * k * ln(n) * ln(hi / lo)`.
pub fn expected_count_constant(mean_leaves: f64, n: usize, k: usize, range: AlphaInterval) -> f64 {
    let n = n as f64;
    mean_leaves / (n * k as f64 * n.ln() * (range.hi / range.lo).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::{seed, SortedDistanceProfile};

    fn two_point() -> SortedDistanceProfile {
        SortedDistanceProfile::from_distances(&[2.0, 1.0])
    }

    #[test]
    fn closed_form_roots() {
        let p = two_point();
        let range = AlphaInterval::new(0.0, 10.0).unwrap();
        let root = solve_breakpoint(&p, 1, 0.8, range, 1e-9).unwrap();
        assert!((root.alpha - 2.0).abs() <= 1e-9);
        assert!(root.iterations <= bisection_budget(10.0, 1e-9));
        let root = solve_breakpoint(&p, 1, 0.5, range, 1e-9).unwrap();
        assert!(root.alpha.abs() <= 1e-9);
        assert!(matches!(
            solve_breakpoint(&p, 1, 0.95, AlphaInterval::new(0.0, 1.0).unwrap(), 1e-9),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn two_point_split() {
        let p = two_point();
        let mut stats = EnumerationStats::default();
        let range = AlphaInterval::new(0.0, 3.0).unwrap();
        let children = split_round(&p, 0.7, range, true, 1e-9, &mut stats);
        assert_eq!(children.len(), 2);
        assert_eq!((children[0].rank, children[1].rank), (1, 0));
        let split = (7.0f64 / 3.0).log2();
        assert!((children[0].interval.hi - split).abs() <= 1e-9);
        assert_eq!(children[0].interval.hi, children[1].interval.lo);
        assert_eq!((children[0].interval.lo, children[1].interval.hi), (0.0, 3.0));
    }

    #[test]
    fn same_pick_at_both_ends_needs_no_search() {
        let p = two_point();
        let mut stats = EnumerationStats::default();
        let range = AlphaInterval::new(0.0, 3.0).unwrap();
        let children = split_round(&p, 0.1, range, true, 1e-9, &mut stats);
        assert_eq!(children.len(), 1);
        assert_eq!(stats.solved, 0);
    }

    #[test]
    fn single_center_has_one_leaf() {
        let inst = ClusteringInstance::new(
            vec![vec![0.0], vec![1.0], vec![3.0]],
            1,
            vec![0, 0, 0],
        )
        .unwrap();
        let z = SeedVector::new(vec![0.5]).unwrap();
        let e = enumerate_execution_tree(&inst, &z, AlphaInterval::new(0.0, 20.0).unwrap(), DEFAULT_EPS).unwrap();
        assert_eq!(e.leaves.len(), 1);
        assert!(e.breakpoints().is_empty());
    }

    #[test]
    fn leaves_match_seeding_at_midpoints() {
        let xs: [f64; 10] = [0.0, 0.3, 1.1, 2.0, 4.5, 4.6, 7.0, 9.5, 12.0, 12.2];
        let inst = ClusteringInstance::new(
            xs.iter().map(|&x| vec![x, (x * 1.7).sin()]).collect(),
            3,
            vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 2],
        )
        .unwrap();
        let z = SeedVector::new(vec![0.42, 0.77, 0.13]).unwrap();
        let range = AlphaInterval::new(0.0, 20.0).unwrap();
        let e = enumerate_execution_tree(&inst, &z, range, DEFAULT_EPS).unwrap();
        assert_eq!(e.leaves.first().unwrap().interval.lo, 0.0);
        assert_eq!(e.leaves.last().unwrap().interval.hi, 20.0);
        for w in e.leaves.windows(2) {
            assert_eq!(w[0].interval.hi, w[1].interval.lo);
        }
        for leaf in &e.leaves {
            assert_eq!(seed(&inst, &z, leaf.interval.midpoint()).unwrap(), leaf.centers);
        }
        assert_eq!(e.breakpoints().len() + 1, e.leaves.len());
    }

    #[test]
    fn breakpoint_set_dedups_and_histograms() {
        let set = BreakpointSet::from_entries(vec![(2.0, 0), (2.0 + 1e-9, 1), (5.0, 1)], 1e-7);
        assert_eq!(set.values, vec![2.0, 5.0]);
        let range = AlphaInterval::new(0.0, 20.0).unwrap();
        let single = BreakpointSet::from_entries(vec![(2.0, 0)], 1e-7);
        let h = breakpoint_histogram(&single, range, 20).unwrap();
        assert_eq!(h.len(), 20);
        assert_eq!(h[2].count, 1);
        assert_eq!((h[2].bin_lo, h[2].bin_hi), (2.0, 3.0));
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 1);
        assert!(breakpoint_histogram(&BreakpointSet::default(), range, 20).unwrap().is_empty());
    }
}
