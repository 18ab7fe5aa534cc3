//! Phase 2: beta-parameterized Lloyd's iterations with an iteration cap.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_beta, hamming_distance, voronoi_partition, Centers, Clustering, ClusteringInstance, HammingCost};
use crate::seeding::{seed, SeedVector};

/// How a cluster's new center is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterRule {
    /// Dataset point minimizing `sum_v d(x, v)^beta`.
    #[default]
    Medoid,
    /// Coordinate centroid; only valid for `beta = 2` under the Euclidean
    /// metric.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LloydsConfig {
    pub beta: f64,
    pub max_iterations: usize,
    pub center_rule: CenterRule,
    /// Medoid candidates range over all points instead of the cluster's own.
    pub full_scan: bool,
}

impl LloydsConfig {
    pub fn new(beta: f64, max_iterations: usize, center_rule: CenterRule) -> Result<Self> {
        let config = Self {
            beta,
            max_iterations,
            center_rule,
            full_scan: false,
        };
        config.validate()?;
        Ok(config)
    }

    /// The rule to use at `beta`: `Mean` is kept only at `beta = 2` and
    /// otherwise replaced by `Medoid`.
    pub fn for_beta(beta: f64, max_iterations: usize, preferred: CenterRule) -> Result<Self> {
        let rule = if beta == 2.0 { preferred } else { CenterRule::Medoid };
        Self::new(beta, max_iterations, rule)
    }

    pub fn with_full_scan(mut self, full_scan: bool) -> Self {
        self.full_scan = full_scan;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("iteration cap T must be positive".into()));
        }
        if self.center_rule == CenterRule::Mean && self.beta != 2.0 {
            return Err(Error::InvalidParameter(format!(
                "the mean rule requires beta = 2, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// A cluster center produced by [`center_update`].
#[derive(Debug, Clone, PartialEq)]
pub enum Center {
    Point(usize),
    Coords(Vec<f64>),
}

const TABLE_LIMIT: usize = 2048;

/// Lazily filled table of `d(i, j)^beta` for one instance and one beta.
///
/// Entries are computed with `powf` on first use, so cached and uncached
/// paths produce identical values.
pub struct DistancePowers<'a> {
    instance: &'a ClusteringInstance,
    beta: f64,
    table: Option<Vec<f64>>,
}

impl<'a> DistancePowers<'a> {
    pub fn new(instance: &'a ClusteringInstance, beta: f64) -> Self {
        Self {
            instance,
            beta,
            table: None,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    fn compute(&self, i: usize, j: usize) -> f64 {
        let d = self.instance.distance(i, j);
        if self.beta.is_infinite() {
            d
        } else {
            d.powf(self.beta)
        }
    }

    /// `d(i, j)^beta`, or plain `d(i, j)` when beta is infinite.
    #[inline]
    pub fn get(&mut self, i: usize, j: usize) -> f64 {
        let n = self.instance.n();
        if n > TABLE_LIMIT {
            return self.compute(i, j);
        }
        if self.table.is_none() {
            self.table = Some(vec![f64::NAN; n * n]);
        }
        let cached = self.table.as_ref().unwrap()[i * n + j];
        if !cached.is_nan() {
            return cached;
        }
        let value = self.compute(i, j);
        let table = self.table.as_mut().unwrap();
        table[i * n + j] = value;
        table[j * n + i] = value;
        value
    }
}

/// New center of a non-empty cluster.
pub fn center_update(
    instance: &ClusteringInstance,
    cluster: &[usize],
    config: &LloydsConfig,
) -> Result<Center> {
    config.validate()?;
    let mut powers = DistancePowers::new(instance, config.beta);
    update_one(instance, cluster, config, &mut powers)
}

fn update_one(
    instance: &ClusteringInstance,
    cluster: &[usize],
    config: &LloydsConfig,
    powers: &mut DistancePowers<'_>,
) -> Result<Center> {
    if cluster.is_empty() {
        return Err(Error::EmptyCluster);
    }
    if let Some(&index) = cluster.iter().find(|&&v| v >= instance.n()) {
        return Err(Error::IndexOutOfRange {
            index,
            n: instance.n(),
        });
    }
    let centroid = || {
        let mut mean = vec![0.0; instance.dim()];
        for &v in cluster {
            for (m, x) in mean.iter_mut().zip(instance.point(v)) {
                *m += x;
            }
        }
        let size = cluster.len() as f64;
        mean.iter_mut().for_each(|m| *m /= size);
        mean
    };
    match config.center_rule {
        CenterRule::Mean => Ok(Center::Coords(centroid())),
        CenterRule::Medoid => {
            let all: Vec<usize>;
            let candidates: &[usize] = if config.full_scan {
                all = (0..instance.n()).collect();
                &all
            } else {
                cluster
            };
            Ok(Center::Point(medoid(instance, cluster, candidates, &centroid(), powers)))
        }
    }
}

/// Candidate minimizing the beta objective over `cluster`; ties go to the
/// lowest point index. With infinite beta the objective is the maximum
/// distance.
///
/// With `r` the distance of a candidate to the centroid, `s2` the mean
/// squared spread of the cluster and `R` its radius about the centroid, the
/// objective is at least `|C| max(r, sqrt(r^2 + s2))^beta` for `beta >= 2`,
/// at least `|C| max(r^beta, (r^2 + s2) / (r + R)^(2 - beta))` below that,
/// and at least `sqrt(r^2 + s2)` for the maximum. Candidates are visited by
/// increasing `r`; the scan stops once a bound increasing in `r` exceeds the
/// best value, and a candidate is dropped as soon as its bound or running
/// objective does.
fn medoid(
    instance: &ClusteringInstance,
    cluster: &[usize],
    candidates: &[usize],
    centroid: &[f64],
    powers: &mut DistancePowers<'_>,
) -> usize {
    const BOUND_SLACK: f64 = 1.0 - 1e-9;
    let beta = powers.beta();
    let minimax = beta.is_infinite();
    let size = cluster.len() as f64;
    let (mut spread, mut radius) = (0.0f64, 0.0f64);
    for &v in cluster {
        let d = instance.distance_to(v, centroid);
        spread += d * d;
        radius = radius.max(d);
    }
    spread /= size;
    let mut order: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&x| (instance.distance_to(x, centroid), x))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best: Option<(usize, f64)> = None;
    for (r, x) in order {
        let bound = best.map_or(f64::INFINITY, |(_, b)| b);
        let rms = (r * r + spread).sqrt();
        let (monotone, other) = if minimax {
            (rms, 0.0)
        } else if beta >= 2.0 {
            (size * rms.powf(beta), 0.0)
        } else {
            (size * r.powf(beta), size * rms * rms / (r + radius).powf(2.0 - beta))
        };
        if monotone * BOUND_SLACK > bound {
            break;
        }
        if other * BOUND_SLACK > bound {
            continue;
        }
        let mut acc = 0.0f64;
        let mut dropped = false;
        for &v in cluster {
            let t = powers.get(x, v);
            acc = if minimax { acc.max(t) } else { acc + t };
            if acc > bound {
                dropped = true;
                break;
            }
        }
        if dropped {
            continue;
        }
        match best {
            Some((bx, bv)) if acc > bv || (acc == bv && x > bx) => {}
            _ => best = Some((x, acc)),
        }
    }
    best.expect("non-empty candidate set").0
}

/// Result of running phase 2.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydsOutcome {
    pub clustering: Clustering,
    pub iterations: usize,
    pub converged: bool,
}

fn same_centers(instance: &ClusteringInstance, a: &Centers, b: &Centers) -> bool {
    match (a, b) {
        (Centers::Points(x), Centers::Points(y)) => {
            let mut x = x.clone();
            let mut y = y.clone();
            x.sort_unstable();
            y.sort_unstable();
            x == y
        }
        (Centers::Coords(x), Centers::Coords(y)) => x
            .iter()
            .zip(y)
            .all(|(p, q)| p.iter().zip(q).all(|(s, t)| (s - t).abs() <= 1e-12)),
        (Centers::Points(p), coords) => same_centers(
            instance,
            &Centers::Coords(p.iter().map(|&i| instance.point(i).to_vec()).collect()),
            coords,
        ),
        (coords, Centers::Points(p)) => same_centers(instance, &Centers::Points(p.clone()), coords),
    }
}

/// Centers after one update of `partition`; empty clusters keep their
/// current center.
fn next_centers(
    instance: &ClusteringInstance,
    centers: &Centers,
    partition: &Clustering,
    config: &LloydsConfig,
    powers: &mut DistancePowers<'_>,
    mut medoids: Option<&mut HashMap<Vec<usize>, usize>>,
) -> Result<Centers> {
    let members = partition.members();
    match config.center_rule {
        CenterRule::Medoid => {
            let Centers::Points(current) = centers else {
                unreachable!("medoid centers are points")
            };
            let mut next = Vec::with_capacity(current.len());
            for (cluster, &prev) in members.iter().zip(current) {
                if cluster.is_empty() {
                    next.push(prev);
                    continue;
                }
                if let Some(&p) = medoids.as_deref().and_then(|m| m.get(cluster)) {
                    next.push(p);
                    continue;
                }
                let Center::Point(p) = update_one(instance, cluster, config, powers)? else {
                    unreachable!("medoid rule yields points")
                };
                if let Some(m) = medoids.as_deref_mut() {
                    m.insert(cluster.clone(), p);
                }
                next.push(p);
            }
            Ok(Centers::Points(next))
        }
        CenterRule::Mean => {
            let mut next = Vec::with_capacity(members.len());
            for (j, cluster) in members.iter().enumerate() {
                next.push(if cluster.is_empty() {
                    match centers {
                        Centers::Points(p) => instance.point(p[j]).to_vec(),
                        Centers::Coords(c) => c[j].clone(),
                    }
                } else {
                    match update_one(instance, cluster, config, powers)? {
                        Center::Coords(c) => c,
                        Center::Point(_) => unreachable!(),
                    }
                });
            }
            Ok(Centers::Coords(next))
        }
    }
}

fn check_run(instance: &ClusteringInstance, initial: &[usize], config: &LloydsConfig, powers: &DistancePowers<'_>) -> Result<()> {
    config.validate()?;
    if initial.len() != instance.k() {
        return Err(Error::InvalidParameter(format!(
            "{} initial centers for k = {}",
            initial.len(),
            instance.k()
        )));
    }
    if let Some(&index) = initial.iter().find(|&&c| c >= instance.n()) {
        return Err(Error::IndexOutOfRange {
            index,
            n: instance.n(),
        });
    }
    if powers.beta() != config.beta && config.center_rule == CenterRule::Medoid {
        return Err(Error::InvalidParameter("power table built for a different beta".into()));
    }
    Ok(())
}

/// Alternates Voronoi assignment and center updates until the centers stop
/// changing or `max_iterations` passes have run. Empty clusters keep their
/// previous center.
pub fn lloyds_iterate(
    instance: &ClusteringInstance,
    initial: &[usize],
    config: &LloydsConfig,
) -> Result<LloydsOutcome> {
    let mut powers = DistancePowers::new(instance, config.beta);
    lloyds_iterate_with(instance, initial, config, &mut powers)
}

/// [`lloyds_iterate`] reusing a power table across calls with the same beta.
pub fn lloyds_iterate_with(
    instance: &ClusteringInstance,
    initial: &[usize],
    config: &LloydsConfig,
    powers: &mut DistancePowers<'_>,
) -> Result<LloydsOutcome> {
    check_run(instance, initial, config, powers)?;
    let mut centers = Centers::Points(initial.to_vec());
    for iteration in 1..=config.max_iterations {
        let partition = voronoi_partition(instance, &centers)?;
        let updated = next_centers(instance, &centers, &partition, config, powers, None)?;
        if same_centers(instance, &centers, &updated) {
            return Ok(LloydsOutcome {
                clustering: partition,
                iterations: iteration,
                converged: true,
            });
        }
        centers = updated;
    }
    Ok(LloydsOutcome {
        clustering: voronoi_partition(instance, &centers)?,
        iterations: config.max_iterations,
        converged: false,
    })
}

fn state_key(centers: &Centers) -> Vec<u64> {
    match centers {
        Centers::Points(p) => p.iter().map(|&i| i as u64).collect(),
        Centers::Coords(c) => c.iter().flatten().map(|x| x.to_bits()).collect(),
    }
}

/// Repeated local search on one instance with one configuration.
///
/// The rest of a run depends only on the current centers and the iteration
/// count, so outcomes are memoized on that state and runs from different
/// seeds that meet share their remaining work. Medoids are memoized per
/// cluster. Results equal those of
/// [`lloyds_iterate`].
pub struct LloydsRunner<'a> {
    instance: &'a ClusteringInstance,
    config: LloydsConfig,
    powers: DistancePowers<'a>,
    memo: HashMap<(bool, Vec<u64>, usize), HammingCost>,
    medoids: HashMap<Vec<usize>, usize>,
}

impl<'a> LloydsRunner<'a> {
    pub fn new(instance: &'a ClusteringInstance, config: LloydsConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            instance,
            config,
            powers: DistancePowers::new(instance, config.beta),
            memo: HashMap::new(),
            medoids: HashMap::new(),
        })
    }

    /// Hamming cost of local search started from `seeds`.
    pub fn cost(&mut self, seeds: &[usize]) -> Result<HammingCost> {
        check_run(self.instance, seeds, &self.config, &self.powers)?;
        let instance = self.instance;
        let mut centers = Centers::Points(seeds.to_vec());
        let mut visited = Vec::new();
        let mut partition = None;
        let mut found = None;
        for iteration in 1..=self.config.max_iterations {
            let key = (matches!(centers, Centers::Points(_)), state_key(&centers), iteration);
            if let Some(&c) = self.memo.get(&key) {
                found = Some(c);
                break;
            }
            visited.push(key);
            let p = voronoi_partition(instance, &centers)?;
            let updated = next_centers(instance, &centers, &p, &self.config, &mut self.powers, Some(&mut self.medoids))?;
            if same_centers(instance, &centers, &updated) {
                partition = Some(p);
                break;
            }
            centers = updated;
        }
        let cost = match found {
            Some(c) => c,
            None => {
                let p = match partition {
                    Some(p) => p,
                    None => voronoi_partition(instance, &centers)?,
                };
                hamming_distance(&p, instance.target())?
            }
        };
        for key in visited {
            self.memo.insert(key, cost);
        }
        Ok(cost)
    }
}

/// Full pipeline outcome: seeds, local search and Hamming cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusOutcome {
    pub seeds: Vec<usize>,
    pub lloyds: LloydsOutcome,
    pub hamming: HammingCost,
}

pub fn clus_outcome(
    instance: &ClusteringInstance,
    z: &SeedVector,
    alpha: f64,
    config: &LloydsConfig,
) -> Result<ClusOutcome> {
    let seeds = seed(instance, z, alpha)?;
    let lloyds = lloyds_iterate(instance, &seeds, config)?;
    let hamming = hamming_distance(&lloyds.clustering, instance.target())?;
    Ok(ClusOutcome {
        seeds,
        lloyds,
        hamming,
    })
}

/// Hamming cost of the clustering produced from `(instance, Z)` at
/// `(alpha, beta)`.
pub fn clus_cost(
    instance: &ClusteringInstance,
    z: &SeedVector,
    alpha: f64,
    config: &LloydsConfig,
) -> Result<f64> {
    Ok(clus_outcome(instance, z, alpha, config)?.hamming.value())
}
