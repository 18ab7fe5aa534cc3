//! Clustering instances, clusterings and the two cost functions.
//!
//! An instance is a point set with a metric, a cluster count `k` and a target
//! partition. Distances are computed on demand in double precision; callers
//! that need repeated access (the Lloyd's medoid step) cache powers of them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::optimal_matching;

/// Distance function over feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
}

impl Metric {
    #[inline]
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// A point set together with its cluster count and target labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringInstance {
    coords: Vec<f64>,
    dim: usize,
    k: usize,
    target: Vec<usize>,
    metric: Metric,
}

impl ClusteringInstance {
    /// Builds an instance from row vectors. Every label in `0..k` must occur.
    pub fn new(points: Vec<Vec<f64>>, k: usize, target: Vec<usize>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if let Some((row, p)) = points.iter().enumerate().find(|(_, p)| p.len() != dim) {
            return Err(Error::InvalidInstance(format!(
                "point {row} has dimension {}, expected {dim}",
                p.len()
            )));
        }
        let coords = points.into_iter().flatten().collect();
        Self::from_flat(coords, dim, k, target)
    }

    /// Builds an instance from row-major coordinates.
    pub fn from_flat(coords: Vec<f64>, dim: usize, k: usize, target: Vec<usize>) -> Result<Self> {
        let n = target.len();
        if dim == 0 || coords.len() != n * dim {
            return Err(Error::InvalidInstance(format!(
                "{} coordinates do not form {n} points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(x) = coords.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidInstance(format!("non-finite coordinate {x}")));
        }
        if k > n {
            return Err(Error::KExceedsPoints { k, n });
        }
        if k == 0 {
            return Err(Error::InvalidInstance("k must be positive".into()));
        }
        let mut seen = vec![false; k];
        for (i, &label) in target.iter().enumerate() {
            if label >= k {
                return Err(Error::InvalidInstance(format!(
                    "point {i} has label {label} outside 0..{k}"
                )));
            }
            seen[label] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInstance(format!("label {missing} has no points")));
        }
        Ok(Self {
            coords,
            dim,
            k,
            target,
            metric: Metric::Euclidean,
        })
    }

    pub fn n(&self) -> usize {
        self.target.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Distance between points `i` and `j`; indices are not checked beyond
    /// slice bounds.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric.distance(self.point(i), self.point(j))
    }

    /// Distance from point `i` to an arbitrary coordinate vector.
    #[inline]
    pub fn distance_to(&self, i: usize, coords: &[f64]) -> f64 {
        self.metric.distance(self.point(i), coords)
    }

    /// Same instance with a different target; used to build instances whose
    /// labels are derived from a clustering.
    pub fn with_target(&self, k: usize, target: Vec<usize>) -> Result<Self> {
        Self::from_flat(self.coords.clone(), self.dim, k, target)
    }
}

/// `d(v_i, v_j)` with index validation.
pub fn pairwise_distance(instance: &ClusteringInstance, i: usize, j: usize) -> Result<f64> {
    let n = instance.n();
    for index in [i, j] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, n });
        }
    }
    Ok(instance.distance(i, j))
}

/// Cluster centers: either dataset points or free coordinate vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Centers {
    Points(Vec<usize>),
    Coords(Vec<Vec<f64>>),
}

impl Centers {
    pub fn len(&self) -> usize {
        match self {
            Centers::Points(p) => p.len(),
            Centers::Coords(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn distance(&self, instance: &ClusteringInstance, v: usize, j: usize) -> f64 {
        match self {
            Centers::Points(p) => instance.distance(v, p[j]),
            Centers::Coords(c) => instance.distance_to(v, &c[j]),
        }
    }
}

/// A k-partition of the instance points, optionally with its centers.
///
/// Empty clusters are allowed; `k` is kept explicitly so they are not lost.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignment: Vec<usize>,
    pub k: usize,
    pub centers: Option<Centers>,
}

impl Clustering {
    pub fn from_assignment(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = assignment.iter().find(|&&a| a >= k) {
            return Err(Error::InvalidParameter(format!(
                "cluster index {bad} outside 0..{k}"
            )));
        }
        Ok(Self {
            assignment,
            k,
            centers: None,
        })
    }

    /// Point indices of each cluster, in ascending index order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c].push(v);
        }
        out
    }
}

/// Assigns every point to its nearest center. Ties go to the lowest center
/// position.
pub fn voronoi_partition(instance: &ClusteringInstance, centers: &Centers) -> Result<Clustering> {
    if centers.is_empty() {
        return Err(Error::EmptyCenters);
    }
    if let Centers::Points(p) = centers {
        if let Some(&index) = p.iter().find(|&&c| c >= instance.n()) {
            return Err(Error::IndexOutOfRange {
                index,
                n: instance.n(),
            });
        }
    }
    let k = centers.len();
    let assignment = (0..instance.n())
        .map(|v| {
            let mut best = 0;
            let mut best_d = centers.distance(instance, v, 0);
            for j in 1..k {
                let d = centers.distance(instance, v, j);
                if d < best_d {
                    best = j;
                    best_d = d;
                }
            }
            best
        })
        .collect();
    Ok(Clustering {
        assignment,
        k,
        centers: Some(centers.clone()),
    })
}

fn assigned_distances<'a>(
    instance: &'a ClusteringInstance,
    clustering: &'a Clustering,
) -> Result<impl Iterator<Item = f64> + 'a> {
    let centers = clustering.centers.as_ref().ok_or(Error::MissingCenters)?;
    if clustering.assignment.len() != instance.n() {
        return Err(Error::PointSetMismatch {
            found: clustering.assignment.len(),
            target: instance.n(),
        });
    }
    if centers.len() != clustering.k {
        return Err(Error::InvalidParameter(format!(
            "{} centers for {} clusters",
            centers.len(),
            clustering.k
        )));
    }
    Ok(clustering
        .assignment
        .iter()
        .enumerate()
        .map(move |(v, &c)| centers.distance(instance, v, c)))
}

/// The l_beta clustering objective `(sum_v d(v, c_v)^beta)^(1/beta)`;
/// `beta = inf` gives the k-center objective `max_v d(v, c_v)`.
pub fn lp_cost(instance: &ClusteringInstance, clustering: &Clustering, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let dists = assigned_distances(instance, clustering)?;
    if beta.is_infinite() {
        Ok(dists.fold(0.0, f64::max))
    } else {
        Ok(dists.map(|d| d.powf(beta)).sum::<f64>().powf(1.0 / beta))
    }
}

/// `sum_v d(v, c_v)^beta`, the quantity the medoid step descends on.
pub fn power_sum_objective(
    instance: &ClusteringInstance,
    clustering: &Clustering,
    beta: f64,
) -> Result<f64> {
    check_beta(beta)?;
    Ok(assigned_distances(instance, clustering)?
        .map(|d| d.powf(beta))
        .sum())
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta.is_nan() || beta < 1.0 {
        return Err(Error::InvalidParameter(format!("beta must lie in [1, inf], got {beta}")));
    }
    Ok(())
}

/// Hamming distance between a clustering and the target, kept as an exact
/// count so sample means can be compared without rounding noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HammingCost {
    pub mismatches: usize,
    pub n: usize,
}

impl HammingCost {
    pub fn value(self) -> f64 {
        self.mismatches as f64 / self.n as f64
    }
}

/// Fraction of points placed differently from the target under the best
/// relabeling of clusters.
pub fn hamming_distance(found: &Clustering, target: &[usize]) -> Result<HammingCost> {
    let n = target.len();
    if found.assignment.len() != n {
        return Err(Error::PointSetMismatch {
            found: found.assignment.len(),
            target: n,
        });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("empty point set".into()));
    }
    let labels = target.iter().max().map_or(0, |&m| m + 1);
    let size = labels.max(found.k);
    let mut confusion = vec![vec![0u64; size]; size];
    for (&c, &t) in found.assignment.iter().zip(target) {
        confusion[c][t] += 1;
    }
    let (_, agreement) = optimal_matching(&confusion)?;
    Ok(HammingCost {
        mismatches: n - agreement as usize,
        n,
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Least common multiple of all point counts, or `None` on overflow.
pub(crate) fn common_denominator(ns: impl IntoIterator<Item = usize>) -> Option<u64> {
    ns.into_iter().try_fold(1u64, |acc, n| {
        let n = n as u64;
        (acc / gcd(acc, n)).checked_mul(n)
    })
}

/// Sum of Hamming costs over a sample expressed as `numerator / denominator`,
/// exact whenever the point counts share a representable common multiple.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CostScale {
    denominator: Option<u64>,
}

impl CostScale {
    pub fn for_costs(costs: &[HammingCost]) -> Self {
        Self::for_sizes(costs.iter().map(|c| c.n))
    }

    pub fn for_sizes(ns: impl IntoIterator<Item = usize>) -> Self {
        Self {
            denominator: common_denominator(ns),
        }
    }

    /// Scaled integer numerator of one cost; `None` when not representable.
    pub fn scaled(&self, cost: HammingCost) -> Option<i128> {
        self.denominator
            .map(|l| cost.mismatches as i128 * (l / cost.n as u64) as i128)
    }

    /// Mean over `m` items from a scaled total.
    pub fn mean(&self, total: i128, m: usize) -> f64 {
        let l = self.denominator.expect("scaled total without denominator");
        total as f64 / (l as f64 * m as f64)
    }

    pub fn exact(&self) -> bool {
        self.denominator.is_some()
    }
}

/// Mean and standard error of a set of costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostStats {
    pub mean: f64,
    pub stderr: f64,
}

/// Mean (exact when possible) and sample standard error of Hamming costs.
pub fn cost_stats(costs: &[HammingCost]) -> Result<CostStats> {
    let m = costs.len();
    if m == 0 {
        return Err(Error::EmptySample);
    }
    let scale = CostScale::for_costs(costs);
    let mean = if scale.exact() {
        let total: i128 = costs.iter().map(|&c| scale.scaled(c).unwrap()).sum();
        scale.mean(total, m)
    } else {
        costs.iter().map(|c| c.value()).sum::<f64>() / m as f64
    };
    let stderr = if m > 1 {
        let var = costs
            .iter()
            .map(|c| (c.value() - mean).powi(2))
            .sum::<f64>()
            / (m - 1) as f64;
        (var / m as f64).sqrt()
    } else {
        0.0
    };
    Ok(CostStats { mean, stderr })
}

/// Mean and sample standard error (`sd / sqrt(m)`, 0 for a single value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

/// Ratio statistics of the pairwise distances of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    /// Largest over smallest non-zero pairwise distance.
    pub ratio: f64,
    /// Smallest ratio `d1 / d2` over distinct non-zero distances `d1 > d2`;
    /// infinite when fewer than two distinct values exist.
    pub min_gap_ratio: f64,
    pub dmax: f64,
    pub dmin_nonzero: f64,
}

impl DistanceStats {
    pub fn compute(instance: &ClusteringInstance) -> Self {
        let n = instance.n();
        let mut d: Vec<f64> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| instance.distance(i, j))
            .filter(|&d| d > 0.0)
            .collect();
        d.sort_by(f64::total_cmp);
        d.dedup();
        let (dmin_nonzero, dmax) = match (d.first(), d.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => (0.0, 0.0),
        };
        let min_gap_ratio = d
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold(f64::INFINITY, f64::min);
        Self {
            ratio: if dmin_nonzero > 0.0 { dmax / dmin_nonzero } else { 1.0 },
            min_gap_ratio,
            dmax,
            dmin_nonzero,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64], k: usize, target: Vec<usize>) -> ClusteringInstance {
        ClusteringInstance::new(xs.iter().map(|&x| vec![x]).collect(), k, target).unwrap()
    }

    #[test]
    fn pairwise_distance_cases() {
        let inst = ClusteringInstance::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]], 1, vec![0, 0]).unwrap();
        assert_eq!(pairwise_distance(&inst, 0, 1).unwrap(), 5.0);
        assert_eq!(pairwise_distance(&inst, 1, 0).unwrap(), 5.0);
        assert_eq!(pairwise_distance(&inst, 1, 1).unwrap(), 0.0);
        let inst = line(&[0.0, 7.0], 1, vec![0, 0]);
        assert_eq!(pairwise_distance(&inst, 0, 1).unwrap(), 7.0);
        assert!(matches!(
            pairwise_distance(&inst, 0, 2),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        ));
    }

    #[test]
    fn instance_validation() {
        assert!(matches!(
            ClusteringInstance::new(vec![vec![0.0]], 2, vec![0]),
            Err(Error::KExceedsPoints { k: 2, n: 1 })
        ));
        assert!(ClusteringInstance::new(vec![vec![0.0], vec![1.0]], 2, vec![0, 0]).is_err());
        assert!(ClusteringInstance::new(vec![vec![0.0], vec![1.0, 2.0]], 1, vec![0, 0]).is_err());
        assert!(ClusteringInstance::new(vec![vec![f64::NAN]], 1, vec![0]).is_err());
    }

    #[test]
    fn voronoi_nearest_and_ties() {
        let inst = line(&[0.0, 1.0, 10.0], 2, vec![0, 0, 1]);
        let c = voronoi_partition(&inst, &Centers::Points(vec![0, 2])).unwrap();
        assert_eq!(c.assignment, vec![0, 0, 1]);

        let c = voronoi_partition(&inst, &Centers::Points(vec![0, 1, 2])).unwrap();
        assert_eq!(c.assignment, vec![0, 1, 2]);

        let inst = line(&[0.0, 1.0, 2.0], 2, vec![0, 0, 1]);
        let c = voronoi_partition(&inst, &Centers::Points(vec![0, 2])).unwrap();
        assert_eq!(c.assignment[1], 0);
        let c = voronoi_partition(&inst, &Centers::Points(vec![2, 0])).unwrap();
        assert_eq!(c.assignment[1], 0, "tie goes to center position 0");

        assert!(matches!(
            voronoi_partition(&inst, &Centers::Points(vec![])),
            Err(Error::EmptyCenters)
        ));
    }

    #[test]
    fn lp_cost_values() {
        let inst = line(&[0.0, 3.0, 4.0], 1, vec![0, 0, 0]);
        let c = voronoi_partition(&inst, &Centers::Points(vec![1])).unwrap();
        assert_eq!(lp_cost(&inst, &c, 1.0).unwrap(), 4.0);
        assert!((lp_cost(&inst, &c, 2.0).unwrap() - 10f64.sqrt()).abs() < 1e-12);
        assert_eq!(lp_cost(&inst, &c, f64::INFINITY).unwrap(), 3.0);

        let bare = Clustering::from_assignment(vec![0, 0, 0], 1).unwrap();
        assert!(matches!(lp_cost(&inst, &bare, 2.0), Err(Error::MissingCenters)));
        assert!(lp_cost(&inst, &c, 0.5).is_err());
    }

    #[test]
    fn hamming_examples() {
        // points a, b, c
        let found = Clustering::from_assignment(vec![0, 0, 1], 2).unwrap();
        assert_eq!(hamming_distance(&found, &[1, 1, 0]).unwrap().value(), 0.0);
        let h = hamming_distance(&found, &[0, 1, 1]).unwrap();
        assert_eq!(h, HammingCost { mismatches: 1, n: 3 });
        assert_eq!(hamming_distance(&found, &[0, 0, 1]).unwrap().mismatches, 0);
        assert!(matches!(
            hamming_distance(&found, &[0, 1]),
            Err(Error::PointSetMismatch { .. })
        ));
    }

    #[test]
    fn hamming_with_empty_cluster() {
        let found = Clustering::from_assignment(vec![0, 0, 0, 0], 3).unwrap();
        let h = hamming_distance(&found, &[0, 1, 2, 2]).unwrap();
        assert_eq!(h.mismatches, 2);
    }

    #[test]
    fn exact_means() {
        let costs = [
            HammingCost { mismatches: 1, n: 3 },
            HammingCost { mismatches: 1, n: 6 },
        ];
        let s = cost_stats(&costs).unwrap();
        assert!((s.mean - 0.25).abs() < 1e-15);
        let single = cost_stats(&costs[..1]).unwrap();
        assert_eq!(single.stderr, 0.0);
        assert!(cost_stats(&[]).is_err());
    }

    #[test]
    fn distance_stats() {
        let inst = line(&[0.0, 1.0, 3.0], 1, vec![0, 0, 0]);
        let s = DistanceStats::compute(&inst);
        assert_eq!(s.dmax, 3.0);
        assert_eq!(s.dmin_nonzero, 1.0);
        assert_eq!(s.ratio, 3.0);
        assert_eq!(s.min_gap_ratio, 1.5);
    }
}
