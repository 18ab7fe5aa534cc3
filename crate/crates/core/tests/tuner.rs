mod common;

use std::sync::Arc;

use common::{iid_seed_vector, random_instance};
use lloydspp::breakpoints::AlphaInterval;
use lloydspp::datagen::{Distribution, GaussianGrid, LabeledDataset};
use lloydspp::lloyds::{clus_cost, CenterRule, LloydsConfig};
use lloydspp::tuner::{
    baseline_evaluations, cost_profiles, discretized_baseline, draw_sample, empirical_cost, grid_costs, linspace,
    mean_cost_at, suggested_m, sweep_surface, train_test_report, transfer_report, tune_alpha, SampleItem,
    TunerConfig,
};

fn toy_sample(n: usize, k: usize, m: u64, seed: u64) -> Vec<SampleItem> {
    (0..m)
        .map(|i| SampleItem {
            index: i,
            instance: random_instance(n, k, 2, 10.0, seed, i),
            z: iid_seed_vector(seed, i, k),
        })
        .collect()
}

fn mean_config() -> LloydsConfig {
    LloydsConfig::new(2.0, 3, CenterRule::Mean).unwrap()
}

#[test]
fn empirical_cost_recomposes_single_runs() {
    let sample = toy_sample(15, 2, 5, 41);
    let config = LloydsConfig::new(1.5, 3, CenterRule::Medoid).unwrap();
    for alpha in [0.0, 1.0, 2.0, 7.5] {
        let costs: Vec<f64> = sample
            .iter()
            .map(|s| clus_cost(&s.instance, &s.z, alpha, &config).unwrap())
            .collect();
        let mean = costs.iter().sum::<f64>() / 5.0;
        let sd = (costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
        let stats = empirical_cost(&sample, alpha, &config).unwrap();
        assert!((stats.mean - mean).abs() < 1e-12);
        assert!((stats.stderr - sd / 5f64.sqrt()).abs() < 1e-12);
    }
    let one = empirical_cost(&sample[..1], 2.0, &config).unwrap();
    assert_eq!(one.stderr, 0.0);
    assert_eq!(one.mean, clus_cost(&sample[0].instance, &sample[0].z, 2.0, &config).unwrap());
}

#[test]
fn surface_cells_match_direct_evaluation() {
    let sample = toy_sample(20, 3, 6, 42);
    let alphas = [0.0, 2.0, 6.0];
    let betas = [1.0, 2.0, 4.5];
    let surface = sweep_surface(&sample, &alphas, &betas, 3, CenterRule::Mean).unwrap();
    assert_eq!(surface.mean.len(), 9);
    for (a, &alpha) in alphas.iter().enumerate() {
        for (b, &beta) in betas.iter().enumerate() {
            let config = LloydsConfig::for_beta(beta, 3, CenterRule::Mean).unwrap();
            let stats = empirical_cost(&sample, alpha, &config).unwrap();
            let cell = surface.cell(a, b);
            assert_eq!((cell.alpha, cell.beta), (alpha, beta));
            assert_eq!(cell.mean_cost, stats.mean);
            assert_eq!(cell.stderr, stats.stderr);
            assert!((0.0..=1.0).contains(&cell.mean_cost));
        }
    }
    let single = sweep_surface(&sample, &[2.0], &[2.0], 3, CenterRule::Mean).unwrap();
    assert_eq!(single.mean[0], empirical_cost(&sample, 2.0, &mean_config()).unwrap().mean);

    let permuted = sweep_surface(&sample, &[6.0, 0.0, 2.0], &[4.5, 1.0, 2.0], 3, CenterRule::Mean).unwrap();
    for cell in permuted.cells() {
        let a = alphas.iter().position(|&x| x == cell.alpha).unwrap();
        let b = betas.iter().position(|&x| x == cell.beta).unwrap();
        assert_eq!(surface.cell(a, b).mean_cost, cell.mean_cost);
    }
    assert_eq!(surface, sweep_surface(&sample, &alphas, &betas, 3, CenterRule::Mean).unwrap());
}

#[test]
fn argmin_prefers_smallest_parameters_on_ties() {
    let sample = toy_sample(12, 1, 3, 43);
    let surface = sweep_surface(&sample, &[0.0, 1.0], &[1.0, 2.0], 3, CenterRule::Medoid).unwrap();
    let best = surface.argmin();
    assert_eq!((best.alpha, best.beta, best.mean_cost), (0.0, 1.0, 0.0));
}

#[test]
fn single_cluster_tunes_to_the_left_end() {
    let sample = toy_sample(12, 1, 4, 44);
    let range = AlphaInterval::new(0.5, 9.0).unwrap();
    let tuned = tune_alpha(&sample, range, 1e-7, &mean_config()).unwrap();
    assert_eq!(tuned.alpha_hat, 0.5);
    assert_eq!(tuned.cost, 0.0);
    assert_eq!(tuned.breakpoints, 0);
}

#[test]
fn tuning_dominates_grids() {
    let sample = toy_sample(30, 3, 20, 45);
    let range = AlphaInterval::new(0.0, 20.0).unwrap();
    let config = mean_config();
    let tuned = tune_alpha(&sample, range, 1e-7, &config).unwrap();
    let grid = linspace(0.0, 20.0, 2000);
    let costs = grid_costs(&sample, &grid, &config).unwrap();
    let grid_min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(tuned.cost <= grid_min);
    for step in [20.0, 1.0, 0.1, 0.01] {
        let base = discretized_baseline(&sample, range, step, &config).unwrap();
        assert!(tuned.cost <= base.cost, "step {step}");
        assert_eq!(base.evaluations, baseline_evaluations(20.0, step));
    }
    assert_eq!(discretized_baseline(&sample, range, 20.0, &config).unwrap().evaluations, 2);
    // Every candidate cost equals a fresh evaluation at that alpha.
    let probe: Vec<f64> = tuned.candidates.iter().step_by(7).map(|c| c.alpha).collect();
    let direct = grid_costs(&sample, &probe, &config).unwrap();
    for (c, d) in tuned.candidates.iter().step_by(7).zip(direct) {
        assert_eq!(c.cost, d, "alpha {}", c.alpha);
    }
}

#[test]
fn more_candidates_never_raise_the_minimum() {
    let sample = toy_sample(25, 3, 10, 46);
    let range = AlphaInterval::new(0.0, 15.0).unwrap();
    let profiles = cost_profiles(&sample, range, 1e-7, &mean_config()).unwrap();
    let coarse = linspace(0.0, 15.0, 16);
    let mut fine = coarse.clone();
    fine.extend(linspace(0.0, 15.0, 301));
    fine.sort_by(f64::total_cmp);
    let min = |v: Vec<f64>| v.into_iter().fold(f64::INFINITY, f64::min);
    assert!(min(mean_cost_at(&profiles, &fine).unwrap()) <= min(mean_cost_at(&profiles, &coarse).unwrap()));
}

fn two_label_dataset(separated: bool, rows: usize) -> Arc<LabeledDataset> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for r in 0..rows {
        for l in 0..2 {
            let x = if separated {
                100.0 * l as f64 + (r % 5) as f64
            } else {
                // Labels alternate along one line: no clustering recovers them.
                (2 * r + l) as f64
            };
            features.push(vec![x, 0.0]);
            labels.push(format!("class{l}"));
        }
    }
    Arc::new(LabeledDataset::new("two", features, labels).unwrap())
}

fn subset(dataset: Arc<LabeledDataset>, n: usize) -> Distribution {
    Distribution::LabelSubset {
        dataset,
        k: 2,
        points_per_label: n,
    }
}

fn small_config(m: usize) -> TunerConfig {
    TunerConfig {
        m,
        alpha_range: AlphaInterval::new(0.0, 10.0).unwrap(),
        ..TunerConfig::default()
    }
}

#[test]
fn identical_easy_instances_have_no_gap() {
    let dist = subset(two_label_dataset(true, 10), 10);
    let report = train_test_report(&dist, &small_config(8)).unwrap();
    assert_eq!((report.train_m, report.test_m), (4, 4));
    assert_eq!(report.max_gap, 0.0);
    assert!(!report.gap_flagged);
    assert_eq!(report.train_cost, 0.0);
    assert!(report.suggested_m > 0);
}

#[test]
fn disjoint_train_and_test_are_flagged() {
    let easy = subset(two_label_dataset(true, 12), 12);
    let hard = subset(two_label_dataset(false, 12), 12);
    let report = transfer_report(&easy, &hard, &small_config(6)).unwrap();
    assert_eq!(report.train_cost, 0.0);
    assert!(report.max_gap > 0.25, "gap {}", report.max_gap);
    assert!(report.gap_flagged);
    let alpha_hat_row = report.rows.iter().find(|r| r.alpha_candidate == report.alpha_hat).unwrap();
    assert_eq!(alpha_hat_row.test_cost, report.test_cost);
}

#[test]
fn grid_sample_contract() {
    let dist = Distribution::GaussianGrid(GaussianGrid::new(4, 10).unwrap());
    let sample = draw_sample(&dist, 3, 0).unwrap();
    assert!(sample.iter().all(|s| s.instance.n() == 40 && s.z.len() == 4));
    let tuned = tune_alpha(&sample, AlphaInterval::new(0.0, 20.0).unwrap(), 1e-7, &mean_config()).unwrap();
    let at_two = empirical_cost(&sample, 2.0, &mean_config()).unwrap().mean;
    assert!(tuned.cost <= at_two);
}

#[test]
fn suggested_sample_size_grows_with_accuracy() {
    let range = AlphaInterval::new(0.0, 20.0).unwrap();
    let loose = suggested_m(0.1, 0.05, 3, 4, 480, range, 50.0);
    let tight = suggested_m(0.05, 0.05, 3, 4, 480, range, 50.0);
    assert!(tight > loose && loose > 0);
    let expected = ((3.0 * 480f64.ln() + 4f64.ln() + 20f64.ln() + (20.0 * 50f64.ln()).ln().ln()) / 0.01).ceil();
    assert_eq!(loose, expected as usize);
}
