//! Agreement between the exact, event-driven and hull engines.

use proptest::prelude::*;
use stickygas_core::dynamics::{audit_conservation, merging_times_from_log, simulate, state_at};
use stickygas_core::exact::{all_merging_times, count_clusters, merging_time};
use stickygas_core::hull::HullProfile;
use stickygas_core::model::{couple_uniform_from_poisson, sample_id, sample_poisson_coupled, sample_uniform};
use stickygas_core::{Configuration, IncrementModel, ModelTag};

fn grid(step: f64, last: f64) -> Vec<f64> {
    let steps = (last / step).round() as usize;
    (0..=steps).map(|i| step * i as f64).collect()
}

#[test]
fn hull_counts_match_exact_counts_on_200_configurations() {
    let times = grid(0.1, 1.4);
    for seed in 0..200 {
        let cfg = sample_id(&IncrementModel::exponential(), 64, 10_000 + seed).unwrap();
        let oracle = all_merging_times(&cfg).unwrap();
        let profile = HullProfile::from_configuration(&cfg);
        for &t in &times {
            assert_eq!(profile.cluster_count_at(t), count_clusters(&oracle, t), "seed {seed}, t = {t}");
        }
    }
}

#[test]
fn bisection_matches_exact_at_n_50() {
    for seed in 0..10 {
        let cfg = sample_id(&IncrementModel::exponential(), 50, seed).unwrap();
        let profile = HullProfile::from_configuration(&cfg);
        for j in 1..50 {
            let exact = merging_time(&cfg, j).unwrap().time;
            let bisect = profile.merging_time_bisect(j, 1e-10).unwrap();
            assert!((exact - bisect).abs() <= 1e-9, "seed {seed}, j = {j}: {exact} vs {bisect}");
        }
    }
}

#[test]
fn hull_counts_match_replayed_dynamics() {
    for seed in 0..20 {
        let cfg = sample_uniform(80, 500 + seed).unwrap();
        let log = simulate(&cfg);
        let profile = HullProfile::from_configuration(&cfg);
        for t in grid(0.07, 1.4) {
            assert_eq!(profile.cluster_count_at(t), state_at(&log, &cfg, t).len(), "seed {seed}, t = {t}");
        }
    }
}

#[test]
fn other_increment_laws_agree() {
    let models = [
        IncrementModel::uniform_interval(0.5).unwrap(),
        IncrementModel::uniform_interval(0.0).unwrap(),
        IncrementModel::pareto_shifted(3.0, 0.0).unwrap(),
        IncrementModel::pareto_shifted(2.5, 0.3).unwrap(),
    ];
    for (i, model) in models.iter().enumerate() {
        for seed in 0..10 {
            let cfg = sample_id(model, 40, seed).unwrap();
            let oracle = all_merging_times(&cfg).unwrap();
            let dynamic = merging_times_from_log(&simulate(&cfg)).unwrap();
            let profile = HullProfile::from_configuration(&cfg);
            for j in 1..40 {
                let t = oracle.get(j).unwrap();
                assert!((dynamic.get(j).unwrap() - t).abs() < 1e-9, "model {i}, seed {seed}, j = {j}");
                assert!((profile.merging_time_bisect(j, 1e-11).unwrap() - t).abs() < 1e-9);
            }
            for t in grid(0.05, 1.5) {
                assert_eq!(profile.cluster_count_at(t), count_clusters(&oracle, t));
            }
        }
    }
}

#[test]
fn coupled_merging_times_scale_by_beta() {
    for seed in 0..10 {
        let (poisson, extra) = sample_poisson_coupled(300, seed).unwrap();
        let (uniform, beta) = couple_uniform_from_poisson(&poisson, extra).unwrap();
        let tp = merging_times_from_log(&simulate(&poisson)).unwrap();
        let tu = merging_times_from_log(&simulate(&uniform)).unwrap();
        for (u, p) in tu.as_slice().iter().zip(tp.as_slice()) {
            assert!((u * beta - p).abs() < 1e-9);
        }
    }
}

fn increments() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..3.0, 2..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn engines_agree_on_arbitrary_spacings(xs in increments()) {
        let n = xs.len();
        let cfg = Configuration::from_increments(xs, ModelTag::Id, 0).unwrap();
        let oracle = all_merging_times(&cfg).unwrap();
        let dynamic = merging_times_from_log(&simulate(&cfg)).unwrap();
        let profile = HullProfile::from_configuration(&cfg);
        for j in 1..n {
            let t = oracle.get(j).unwrap();
            prop_assert!((dynamic.get(j).unwrap() - t).abs() < 1e-9);
            prop_assert!((profile.merging_time_bisect(j, 1e-11).unwrap() - t).abs() < 1e-9);
        }
    }

    #[test]
    fn merging_time_is_bracketed_by_spacings(xs in increments()) {
        let min = xs[1..].iter().copied().fold(f64::INFINITY, f64::min);
        let cfg = Configuration::from_increments(xs.clone(), ModelTag::Id, 0).unwrap();
        for (j, &next) in xs.iter().enumerate().skip(1) {
            let t = merging_time(&cfg, j).unwrap().time;
            prop_assert!(t >= min.sqrt() * (1.0 - 1e-12));
            prop_assert!(t <= next.sqrt() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn count_curve_is_nonincreasing(xs in increments(), t_max in 0.1f64..3.0) {
        let n = xs.len();
        let cfg = Configuration::from_increments(xs, ModelTag::Id, 0).unwrap();
        let profile = HullProfile::from_configuration(&cfg);
        let ts: Vec<f64> = (0..=50).map(|i| t_max * i as f64 / 50.0).collect();
        let curve = profile.cluster_count_curve(&ts);
        prop_assert!(curve.iter().all(|&k| (1..=n).contains(&k)));
        prop_assert!(curve.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn dynamics_conserve_momentum_and_barycenter(seed in any::<u64>(), n in 2usize..400) {
        let cfg = sample_uniform(n, seed).unwrap();
        let log = simulate(&cfg);
        let report = audit_conservation(&log, &cfg, usize::MAX);
        prop_assert!(report.max_momentum <= 1e-9);
        prop_assert!(report.max_barycenter_drift <= 1e-9);
        prop_assert_eq!(log.events().len(), n - 1);
    }

    #[test]
    fn coupling_preserves_counts(seed in any::<u64>(), t in 0.0f64..1.5) {
        let (poisson, extra) = sample_poisson_coupled(200, seed).unwrap();
        let (uniform, beta) = couple_uniform_from_poisson(&poisson, extra).unwrap();
        let hp = HullProfile::from_configuration(&poisson);
        let hu = HullProfile::from_configuration(&uniform);
        prop_assert_eq!(hu.cluster_count_at(t), hp.cluster_count_at(beta * t));
    }
}
