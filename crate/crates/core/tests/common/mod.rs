#![allow(dead_code)]

use lloydspp::datagen::rng_uniform;
use lloydspp::{ClusteringInstance, SeedVector};

/// Points drawn uniformly from `[0, scale)^dim` with round-robin labels.
pub fn random_instance(n: usize, k: usize, dim: usize, scale: f64, seed: u64, i: u64) -> ClusteringInstance {
    let points = (0..n)
        .map(|v| (0..dim).map(|d| scale * rng_uniform(seed, i, (v * dim + d) as u64)).collect())
        .collect();
    let target = (0..n).map(|v| v % k).collect();
    ClusteringInstance::new(points, k, target).unwrap()
}

pub fn iid_seed_vector(seed: u64, i: u64, k: usize) -> SeedVector {
    SeedVector::new((0..k).map(|t| rng_uniform(seed, i, 1_000_000 + t as u64)).collect()).unwrap()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Every ordered center sequence of d^alpha sampling with its probability,
/// by direct expansion of the chain: uniform first pick, then weights
/// `d(v, C)^alpha` over points at positive distance.
pub fn chain_probabilities(instance: &ClusteringInstance, alpha: f64) -> Vec<(Vec<usize>, f64)> {
    let n = instance.n();
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<usize>, f64)> = (0..n).map(|v| (vec![v], 1.0 / n as f64)).collect();
    while let Some((centers, p)) = stack.pop() {
        if centers.len() == instance.k() {
            out.push((centers, p));
            continue;
        }
        let weights: Vec<f64> = (0..n)
            .map(|v| {
                let d = centers
                    .iter()
                    .map(|&c| euclid(instance.point(v), instance.point(c)))
                    .fold(f64::INFINITY, f64::min);
                if d > 0.0 {
                    d.powf(alpha)
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        for (v, w) in weights.iter().enumerate() {
            if *w > 0.0 {
                let mut next = centers.clone();
                next.push(v);
                stack.push((next, p * w / total));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Smallest Hamming error over all label permutations, by brute force.
pub fn brute_hamming(found: &[usize], target: &[usize], k: usize) -> f64 {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = usize::MAX;
    permute(&mut perm, 0, &mut |p| {
        let wrong = found.iter().zip(target).filter(|(f, t)| p[**f] != **t).count();
        best = best.min(wrong);
    });
    best as f64 / found.len() as f64
}

pub fn permute(perm: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == perm.len() {
        visit(perm);
        return;
    }
    for j in at..perm.len() {
        perm.swap(at, j);
        permute(perm, at + 1, visit);
        perm.swap(at, j);
    }
}
