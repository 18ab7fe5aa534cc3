//! d^alpha seeding driven by a fixed vector of uniforms.
//!
//! Each round sorts the points by distance to the chosen centers (descending,
//! ties by ascending index) and splits `[0, 1)` into consecutive intervals
//! whose widths are the sampling probabilities. The `t`-th uniform `z_t`
//! selects the point whose interval contains it, so the whole procedure is a
//! deterministic function of `(instance, Z, alpha)`.
//!
//! Conventions:
//! - round 1 is uniform over all points in index order, for every alpha;
//! - points at distance zero from the centers get weight zero, also at
//!   `alpha = 0`; if every point is at distance zero the pick falls back to
//!   uniform over the non-center points;
//! - `alpha = inf` is farthest-first traversal, with tied farthest points
//!   sharing `z_t` equally in ascending index order.

use crate::error::{Error, Result};
use crate::model::ClusteringInstance;

/// The `k` uniforms `z_1..z_k` in `[0, 1)` that fix the seeding randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedVector(Vec<f64>);

impl SeedVector {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if let Some(bad) = z.iter().find(|z| !(0.0..1.0).contains(*z)) {
            return Err(Error::InvalidParameter(format!(
                "seed entries must lie in [0, 1), got {bad}"
            )));
        }
        Ok(Self(z))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One round of an alpha-parameterized seeding rule.
///
/// Candidates are arranged in a fixed rank order; `cumulative(r, alpha)` is
/// the probability that the pick lands in ranks `0..=r`. Implementations must
/// keep it continuous and non-decreasing in `alpha`, non-decreasing in `r`,
/// and equal to 1 at the last rank.
pub trait RoundProfile {
    /// Number of candidates with positive probability.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point index at a rank.
    fn point(&self, rank: usize) -> usize;

    /// Cumulative probability of ranks `0..=rank`.
    fn cumulative(&self, rank: usize, alpha: f64) -> f64;

    /// Smallest rank `r` with `z < cumulative(r, alpha)`.
    fn pick(&self, alpha: f64, z: f64) -> usize {
        let (mut lo, mut hi) = (0, self.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if z < self.cumulative(mid, alpha) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }

    /// True when the round's probabilities do not depend on alpha.
    fn is_alpha_independent(&self) -> bool {
        false
    }
}

/// An alpha-parameterized seeding rule ("p-randomized initialization").
///
/// The breakpoint enumeration works against this trait, so any family whose
/// partial sums are monotone, continuous and non-crossing in alpha can be
/// tuned exactly.
pub trait SeedingFamily: Sync {
    type Profile: RoundProfile;

    /// Profile for the next round given the chosen centers and each point's
    /// distance to its nearest center (`inf` before the first pick).
    fn round_profile(
        &self,
        instance: &ClusteringInstance,
        centers: &[usize],
        nearest: &[f64],
    ) -> Self::Profile;

    /// Upper bound on `d/d alpha` of any partial sum.
    fn derivative_bound(&self, instance: &ClusteringInstance) -> f64;
}

/// The built-in d^alpha sampling family.
#[derive(Debug, Clone, Copy, Default)]
pub struct DAlphaFamily;

impl SeedingFamily for DAlphaFamily {
    type Profile = SortedDistanceProfile;

    fn round_profile(
        &self,
        _instance: &ClusteringInstance,
        centers: &[usize],
        nearest: &[f64],
    ) -> SortedDistanceProfile {
        SortedDistanceProfile::from_nearest(nearest, centers)
    }

    fn derivative_bound(&self, instance: &ClusteringInstance) -> f64 {
        4.0 * (instance.n() as f64).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProfileKind {
    /// No centers yet: uniform over all points in index order.
    Uniform,
    /// Weights `d^alpha` over the positive-distance points.
    Weighted,
    /// Every point at distance zero: uniform over the non-center points.
    Degenerate,
}

/// Distances to the current centers sorted in descending order, with the
/// partial sums `D_i(alpha)` normalized by the largest distance.
#[derive(Debug, Clone)]
pub struct SortedDistanceProfile {
    kind: ProfileKind,
    order: Vec<usize>,
    distances: Vec<f64>,
    /// `ln(d_j / d_1)` for the positive-distance ranks.
    log_ratio: Vec<f64>,
    eligible: usize,
    /// Ranks tied with the largest distance.
    ties: usize,
}

impl SortedDistanceProfile {
    /// Builds the profile from each point's nearest-center distance.
    pub fn from_nearest(nearest: &[f64], centers: &[usize]) -> Self {
        let n = nearest.len();
        if centers.is_empty() {
            return Self {
                kind: ProfileKind::Uniform,
                order: (0..n).collect(),
                distances: nearest.to_vec(),
                log_ratio: Vec::new(),
                eligible: n,
                ties: n,
            };
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&a, &b| nearest[b].total_cmp(&nearest[a]).then(a.cmp(&b)));
        let distances: Vec<f64> = order.iter().map(|&v| nearest[v]).collect();
        let eligible = distances.iter().take_while(|&&d| d > 0.0).count();
        if eligible == 0 {
            let mut is_center = vec![false; n];
            for &c in centers.iter().filter(|&&c| c < n) {
                is_center[c] = true;
            }
            let mut order: Vec<usize> = (0..n).filter(|&v| !is_center[v]).collect();
            let eligible = order.len();
            order.extend((0..n).filter(|&v| is_center[v]));
            return Self {
                kind: ProfileKind::Degenerate,
                order,
                distances: vec![0.0; n],
                log_ratio: Vec::new(),
                eligible,
                ties: eligible,
            };
        }
        let top = distances[0];
        let log_ratio = distances[..eligible]
            .iter()
            .map(|&d| (d / top).ln())
            .collect();
        let ties = distances.iter().take_while(|&&d| d == top).count();
        Self {
            kind: ProfileKind::Weighted,
            order,
            distances,
            log_ratio,
            eligible,
            ties,
        }
    }

    /// Profile over raw distances, with point `j` being the `j`-th entry.
    /// Treats the zero entries as already-chosen centers.
    pub fn from_distances(distances: &[f64]) -> Self {
        let centers: Vec<usize> = (0..distances.len())
            .filter(|&j| distances[j] == 0.0)
            .collect();
        if centers.is_empty() {
            // A sentinel center selects the weighted rule without excluding
            // any of the given points.
            return Self::from_nearest(distances, &[usize::MAX]);
        }
        Self::from_nearest(distances, &centers)
    }

    /// Rank-to-point permutation.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Sorted (non-increasing) distances.
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn is_degenerate(&self) -> bool {
        self.kind == ProfileKind::Degenerate
    }

    #[inline]
    fn weight(&self, j: usize, alpha: f64) -> f64 {
        (alpha * self.log_ratio[j]).exp()
    }

    fn uniform_cumulative(&self, rank: usize) -> f64 {
        (rank + 1) as f64 / self.eligible as f64
    }

    fn farthest_cumulative(&self, rank: usize) -> f64 {
        (rank + 1).min(self.ties) as f64 / self.ties as f64
    }

    /// All cumulative probabilities `S_0..S_{len-1}` at `alpha`.
    pub fn cumulative_all(&self, alpha: f64) -> Vec<f64> {
        let e = self.eligible;
        match self.kind {
            ProfileKind::Uniform | ProfileKind::Degenerate => {
                (0..e).map(|r| self.uniform_cumulative(r)).collect()
            }
            ProfileKind::Weighted if alpha.is_infinite() => {
                (0..e).map(|r| self.farthest_cumulative(r)).collect()
            }
            ProfileKind::Weighted => {
                let mut running = Vec::with_capacity(e);
                let mut total = 0.0;
                for j in 0..e {
                    total += self.weight(j, alpha);
                    running.push(total);
                }
                running.iter_mut().for_each(|c| *c /= total);
                running
            }
        }
    }

    /// Fills `scratch` with the running sums of the weights and returns the
    /// total.
    fn running_sums(&self, alpha: f64, scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        let mut total = 0.0;
        for j in 0..self.eligible {
            total += self.weight(j, alpha);
            scratch.push(total);
        }
        total
    }

    /// `pick` reusing a caller-provided buffer.
    pub fn pick_with(&self, alpha: f64, z: f64, scratch: &mut Vec<f64>) -> usize {
        let e = self.eligible;
        match self.kind {
            ProfileKind::Uniform | ProfileKind::Degenerate => {
                (0..e).find(|&r| z < self.uniform_cumulative(r)).unwrap_or(e - 1)
            }
            ProfileKind::Weighted if alpha.is_infinite() => (0..self.ties)
                .find(|&r| z < self.farthest_cumulative(r))
                .unwrap_or(self.ties - 1),
            ProfileKind::Weighted => {
                let total = self.running_sums(alpha, scratch);
                scratch
                    .iter()
                    .position(|&c| z < c / total)
                    .unwrap_or(e - 1)
            }
        }
    }
}

impl RoundProfile for SortedDistanceProfile {
    fn len(&self) -> usize {
        self.eligible
    }

    fn point(&self, rank: usize) -> usize {
        self.order[rank]
    }

    fn cumulative(&self, rank: usize, alpha: f64) -> f64 {
        match self.kind {
            ProfileKind::Uniform | ProfileKind::Degenerate => self.uniform_cumulative(rank),
            ProfileKind::Weighted if alpha.is_infinite() => self.farthest_cumulative(rank),
            ProfileKind::Weighted => {
                // Same summation order as `pick_with`, so both agree bit for bit.
                let mut total = 0.0;
                let mut upto = 0.0;
                for j in 0..self.eligible {
                    total += self.weight(j, alpha);
                    if j == rank {
                        upto = total;
                    }
                }
                upto / total
            }
        }
    }

    fn pick(&self, alpha: f64, z: f64) -> usize {
        self.pick_with(alpha, z, &mut Vec::new())
    }

    fn is_alpha_independent(&self) -> bool {
        self.kind != ProfileKind::Weighted
    }
}

/// Each point's distance to its nearest center (`inf` when `centers` is
/// empty).
pub fn nearest_distances(instance: &ClusteringInstance, centers: &[usize]) -> Vec<f64> {
    let mut nearest = vec![f64::INFINITY; instance.n()];
    for &c in centers {
        update_nearest(instance, &mut nearest, c);
    }
    nearest
}

/// Lowers `nearest` to account for a newly chosen center.
pub fn update_nearest(instance: &ClusteringInstance, nearest: &mut [f64], center: usize) {
    for (v, d) in nearest.iter_mut().enumerate() {
        let dc = instance.distance(v, center);
        if dc < *d {
            *d = dc;
        }
    }
}

/// Sorted distance profile of the instance relative to `centers`.
pub fn distance_profile(
    instance: &ClusteringInstance,
    centers: &[usize],
) -> Result<SortedDistanceProfile> {
    if let Some(&index) = centers.iter().find(|&&c| c >= instance.n()) {
        return Err(Error::IndexOutOfRange {
            index,
            n: instance.n(),
        });
    }
    Ok(SortedDistanceProfile::from_nearest(
        &nearest_distances(instance, centers),
        centers,
    ))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, inf], got {alpha}"
        )));
    }
    Ok(())
}

/// `D_i(alpha) / D_n(alpha)` for the 1-based rank `i`.
pub fn partial_sum_ratio(profile: &SortedDistanceProfile, i: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if profile.is_degenerate() {
        return Err(Error::DegenerateProfile);
    }
    if i == 0 || i > profile.len() {
        return Err(Error::InvalidParameter(format!(
            "rank {i} outside 1..={}",
            profile.len()
        )));
    }
    Ok(profile.cumulative(i - 1, alpha))
}

/// The point selected by `z_t` in this round.
pub fn pick_center(profile: &SortedDistanceProfile, alpha: f64, z: f64) -> Result<usize> {
    check_alpha(alpha)?;
    if !(0.0..1.0).contains(&z) {
        return Err(Error::InvalidParameter(format!("z must lie in [0, 1), got {z}")));
    }
    if profile.is_empty() {
        return Err(Error::InsufficientData("no candidate points left".into()));
    }
    Ok(profile.point(profile.pick(alpha, z)))
}

/// Phase 1 with the d^alpha family: `k` distinct centers in pick order.
pub fn seed(instance: &ClusteringInstance, z: &SeedVector, alpha: f64) -> Result<Vec<usize>> {
    seed_with(&DAlphaFamily, instance, z, alpha)
}

/// Phase 1 with an arbitrary seeding family.
pub fn seed_with<F: SeedingFamily>(
    family: &F,
    instance: &ClusteringInstance,
    z: &SeedVector,
    alpha: f64,
) -> Result<Vec<usize>> {
    check_alpha(alpha)?;
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
    let mut centers = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; n];
    for &zt in z.as_slice() {
        let profile = family.round_profile(instance, &centers, &nearest);
        if profile.is_empty() {
            return Err(Error::InsufficientData("no candidate points left".into()));
        }
        let c = profile.point(profile.pick(alpha, zt));
        centers.push(c);
        update_nearest(instance, &mut nearest, c);
    }
    Ok(centers)
}

/// `S_{i,C}(alpha)` of a family for the 1-based rank `i`.
pub fn family_partial_sum<F: SeedingFamily>(
    family: &F,
    instance: &ClusteringInstance,
    centers: &[usize],
    i: usize,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let profile = family.round_profile(instance, centers, &nearest_distances(instance, centers));
    if i == 0 || i > profile.len() {
        return Err(Error::InvalidParameter(format!(
            "rank {i} outside 1..={}",
            profile.len()
        )));
    }
    Ok(profile.cumulative(i - 1, alpha))
}

/// Spot-checks the family contract on center sets drawn by `draw`.
///
/// Verifies that partial sums are non-decreasing in alpha and in rank and
/// reach 1 at the last rank, on `trials` center sets of every size below `k`,
/// over an alpha grid spanning `[lo, hi]`.
pub fn check_family_contract<F: SeedingFamily>(
    family: &F,
    instance: &ClusteringInstance,
    (lo, hi): (f64, f64),
    trials: usize,
    mut draw: impl FnMut() -> f64,
) -> Result<()> {
    const SLACK: f64 = 1e-12;
    const STEPS: usize = 16;
    let n = instance.n();
    for size in 0..instance.k() {
        for _ in 0..trials {
            let mut centers: Vec<usize> = Vec::with_capacity(size);
            while centers.len() < size {
                let c = ((draw() * n as f64) as usize).min(n - 1);
                if !centers.contains(&c) {
                    centers.push(c);
                }
            }
            let nearest = nearest_distances(instance, &centers);
            let profile = family.round_profile(instance, &centers, &nearest);
            let len = profile.len();
            if len == 0 {
                return Err(Error::FamilyContract(format!(
                    "no candidates with {size} centers"
                )));
            }
            let mut prev_row: Option<Vec<f64>> = None;
            for s in 0..=STEPS {
                let alpha = lo + (hi - lo) * s as f64 / STEPS as f64;
                let row: Vec<f64> = (0..len).map(|r| profile.cumulative(r, alpha)).collect();
                if let Some(r) = row.windows(2).position(|w| w[1] + SLACK < w[0]) {
                    return Err(Error::FamilyContract(format!(
                        "partial sums cross at rank {r}, alpha {alpha}"
                    )));
                }
                if (row[len - 1] - 1.0).abs() > SLACK {
                    return Err(Error::FamilyContract(format!(
                        "total probability {} at alpha {alpha}",
                        row[len - 1]
                    )));
                }
                if let Some(prev) = &prev_row {
                    if let Some(r) = (0..len).find(|&r| row[r] + SLACK < prev[r]) {
                        return Err(Error::FamilyContract(format!(
                            "partial sum at rank {r} decreases in alpha near {alpha}"
                        )));
                    }
                }
                prev_row = Some(row);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64], k: usize) -> ClusteringInstance {
        let target = (0..xs.len()).map(|i| i % k).collect();
        ClusteringInstance::new(xs.iter().map(|&x| vec![x]).collect(), k, target).unwrap()
    }

    #[test]
    fn profile_sorting() {
        let inst = line(&[0.0, 1.0, 3.0], 1);
        let p = distance_profile(&inst, &[1]).unwrap();
        assert_eq!(p.distances(), &[2.0, 1.0, 0.0]);
        assert_eq!(p.order(), &[2, 0, 1]);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn round_one_is_uniform() {
        let inst = line(&[0.0, 1.0, 3.0, 9.0], 1);
        let p = distance_profile(&inst, &[]).unwrap();
        for alpha in [0.0, 1.0, 7.5, f64::INFINITY] {
            let s: Vec<f64> = (0..4).map(|r| p.cumulative(r, alpha)).collect();
            assert_eq!(s, vec![0.25, 0.5, 0.75, 1.0]);
        }
        assert!(p.is_alpha_independent());
    }

    #[test]
    fn duplicates_of_a_center_get_zero_distance() {
        let inst = line(&[0.0, 0.0, 5.0], 1);
        let p = distance_profile(&inst, &[0]).unwrap();
        assert_eq!(p.distances(), &[5.0, 0.0, 0.0]);
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn partial_sum_examples() {
        let p = SortedDistanceProfile::from_distances(&[2.0, 1.0, 1.0]);
        let r = |i, a| partial_sum_ratio(&p, i, a).unwrap();
        assert_eq!([r(1, 1.0), r(2, 1.0), r(3, 1.0)], [0.5, 0.75, 1.0]);
        let third = [r(1, 0.0), r(2, 0.0), r(3, 0.0)];
        assert!((third[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((third[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(third[2], 1.0);

        let p = SortedDistanceProfile::from_distances(&[2.0, 1.0]);
        assert!((partial_sum_ratio(&p, 1, 2.0).unwrap() - 0.8).abs() < 1e-15);
        assert!(partial_sum_ratio(&p, 3, 2.0).is_err());

        let p = SortedDistanceProfile::from_distances(&[0.0, 0.0]);
        assert!(matches!(partial_sum_ratio(&p, 1, 1.0), Err(Error::DegenerateProfile)));
    }

    #[test]
    fn pick_examples() {
        // points a, b, c with distances 2, 1, 1
        let p = SortedDistanceProfile::from_distances(&[2.0, 1.0, 1.0]);
        assert_eq!(pick_center(&p, 2.0, 0.5).unwrap(), 0);
        assert_eq!(pick_center(&p, 2.0, 0.70).unwrap(), 1);
        assert_eq!(pick_center(&p, 2.0, 0.90).unwrap(), 2);
        assert!(pick_center(&p, 2.0, 1.0).is_err());
    }

    #[test]
    fn degenerate_profile_falls_back_to_non_centers() {
        let inst = line(&[4.0, 4.0, 4.0], 1);
        let p = distance_profile(&inst, &[1]).unwrap();
        assert!(p.is_degenerate());
        assert_eq!(pick_center(&p, 2.0, 0.1).unwrap(), 0);
        assert_eq!(pick_center(&p, 2.0, 0.9).unwrap(), 2);
    }

    #[test]
    fn farthest_first_example() {
        let inst = line(&[0.0, 1.0, 3.0], 2);
        let z = SeedVector::new(vec![0.4, 0.99]).unwrap();
        assert_eq!(seed(&inst, &z, f64::INFINITY).unwrap(), vec![1, 2]);
    }

    #[test]
    fn farthest_ties_share_z() {
        // center at 0, points at -1 and +1 tie
        let inst = line(&[0.0, -1.0, 1.0, 0.5], 2);
        let p = distance_profile(&inst, &[0]).unwrap();
        assert_eq!(pick_center(&p, f64::INFINITY, 0.2).unwrap(), 1);
        assert_eq!(pick_center(&p, f64::INFINITY, 0.7).unwrap(), 2);
    }

    #[test]
    fn seed_is_deterministic_and_validates() {
        let inst = line(&[0.0, 1.0, 3.0, 7.0, 7.5], 3);
        let z = SeedVector::new(vec![0.3, 0.6, 0.2]).unwrap();
        let a = seed(&inst, &z, 2.0).unwrap();
        assert_eq!(a, seed(&inst, &z, 2.0).unwrap());
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 3);

        let short = SeedVector::new(vec![0.3]).unwrap();
        assert!(seed(&inst, &short, 2.0).is_err());
        assert!(seed(&inst, &z, -1.0).is_err());
        assert!(SeedVector::new(vec![1.0]).is_err());
    }

    #[test]
    fn large_alpha_does_not_overflow() {
        let p = SortedDistanceProfile::from_distances(&[1e6, 3.0, 1e-6]);
        let s = partial_sum_ratio(&p, 1, 200.0).unwrap();
        assert!(s.is_finite() && s > 0.999_999);
    }

    #[test]
    fn family_accessor_matches_ratio() {
        let inst = line(&[0.0, 1.0, 3.0, 6.0], 2);
        let p = distance_profile(&inst, &[1]).unwrap();
        for i in 1..=p.len() {
            assert_eq!(
                family_partial_sum(&DAlphaFamily, &inst, &[1], i, 1.7).unwrap(),
                partial_sum_ratio(&p, i, 1.7).unwrap()
            );
        }
        let mut u = 0.37;
        let mut draw = move || {
            u = (u * 7.31 + 0.123) % 1.0;
            u
        };
        check_family_contract(&DAlphaFamily, &inst, (0.0, 30.0), 5, &mut draw).unwrap();
    }

    proptest! {
        #[test]
        fn pick_agrees_with_cumulative(
            d in proptest::collection::vec(0.01f64..100.0, 1..40),
            alpha in 0.0f64..60.0,
            z in 0.0f64..1.0,
        ) {
            let p = SortedDistanceProfile::from_distances(&d);
            let rank = p.pick_with(alpha, z, &mut Vec::new());
            let first = (0..p.len()).find(|&r| z < p.cumulative(r, alpha)).unwrap();
            prop_assert_eq!(rank, first);
        }

        #[test]
        fn partial_sums_monotone(
            d in proptest::collection::vec(0.01f64..100.0, 2..30),
            a1 in 0.0f64..50.0,
            a2 in 0.0f64..50.0,
        ) {
            let p = SortedDistanceProfile::from_distances(&d);
            let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
            for r in 0..p.len() {
                prop_assert!(p.cumulative(r, lo) <= p.cumulative(r, hi) + 1e-12);
                if r + 1 < p.len() {
                    prop_assert!(p.cumulative(r, lo) <= p.cumulative(r + 1, lo));
                }
            }
        }
    }
}
