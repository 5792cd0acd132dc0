//! Cross-engine equivalence suite behind `stickygas validate`.

use stickygas_core::dynamics::{audit_conservation, merging_times_from_log, simulate};
use stickygas_core::exact::{all_merging_times, count_clusters};
use stickygas_core::hull::HullProfile;
use stickygas_core::model::{couple_uniform_from_poisson, sample_id, sample_poisson_coupled};
use stickygas_core::rng::{substream_seed, StreamRole};
use stickygas_core::IncrementModel;

use crate::output::{Summary, Table};

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// Largest discrepancy seen (0 for exact comparisons that all matched).
    pub max_error: f64,
}

struct Scale {
    configs: usize,
    sizes: &'static [usize],
    coupled_pairs: usize,
    coupled_n: usize,
}

const QUICK: Scale = Scale { configs: 30, sizes: &[8, 32], coupled_pairs: 10, coupled_n: 200 };
const FULL: Scale = Scale { configs: 200, sizes: &[8, 32, 64], coupled_pairs: 100, coupled_n: 1_000 };

fn count_grid() -> Vec<f64> {
    (0..=28).map(|i| 0.05 * i as f64).collect()
}

/// Exact, dynamics and hull bisection agree on merging times, and hull counts
/// equal the counts implied by the exact times.
fn oracle_triangle(scale: &Scale, seed: u64) -> Vec<Check> {
    let grid = count_grid();
    let (mut time_err, mut count_mismatch, mut momentum, mut cases) = (0.0f64, 0usize, 0.0f64, 0);
    for &n in scale.sizes {
        for r in 0..scale.configs {
            let cfg = sample_id(&IncrementModel::exponential(), n, substream_seed(seed ^ n as u64, r as u64, StreamRole::Configuration))
                .expect("n >= 2");
            let oracle = all_merging_times(&cfg).expect("small n");
            let log = simulate(&cfg);
            let audit = audit_conservation(&log, &cfg, usize::MAX);
            momentum = momentum.max(audit.max_momentum).max(audit.max_barycenter_drift);
            let dynamic = merging_times_from_log(&log).expect("complete log");
            let profile = HullProfile::from_configuration(&cfg);
            for j in 1..n {
                let t = oracle.get(j).expect("in range");
                let bisect = profile.merging_time_bisect(j, 1e-10).unwrap_or(f64::INFINITY);
                time_err = time_err.max((dynamic.get(j).expect("in range") - t).abs()).max((bisect - t).abs());
            }
            count_mismatch += grid
                .iter()
                .filter(|&&t| profile.cluster_count_at(t) != count_clusters(&oracle, t))
                .count();
            cases += 1;
        }
    }
    vec![
        Check { name: "merging times agree across engines", passed: time_err <= 1e-9, cases, max_error: time_err },
        Check {
            name: "hull counts equal exact counts",
            passed: count_mismatch == 0,
            cases: cases * grid.len(),
            max_error: count_mismatch as f64,
        },
        Check { name: "dynamics conserve momentum and barycenter", passed: momentum <= 1e-9, cases, max_error: momentum },
    ]
}

/// Every engine sees the lattice collapse exactly at t = 1.
fn deterministic() -> Check {
    let (mut err, mut ok, mut cases) = (0.0f64, true, 0);
    for n in [2usize, 5, 100] {
        let cfg = sample_id(&IncrementModel::deterministic(), n, 0).expect("n >= 2");
        let exact = all_merging_times(&cfg).expect("small n");
        let dynamic = merging_times_from_log(&simulate(&cfg)).expect("complete log");
        let profile = HullProfile::from_configuration(&cfg);
        for j in 1..n {
            let bisect = profile.merging_time_bisect(j, 1e-13).unwrap_or(f64::INFINITY);
            for t in [exact.get(j).expect("in range"), dynamic.get(j).expect("in range"), bisect] {
                err = err.max((t - 1.0).abs());
            }
        }
        for t in [0.0, 0.5, 0.99] {
            ok &= profile.cluster_count_at(t) == n && count_clusters(&exact, t) == n && count_clusters(&dynamic, t) == n;
        }
        for t in [1.0, 2.0] {
            ok &= profile.cluster_count_at(t) == 1 && count_clusters(&exact, t) == 1 && count_clusters(&dynamic, t) == 1;
        }
        cases += 1;
    }
    Check { name: "deterministic lattice collapses at t = 1", passed: ok && err <= 1e-12, cases, max_error: err }
}

/// Uniform configurations from rescaled Poisson ones have merging times
/// divided by beta and identical counts at rescaled times.
fn coupling(scale: &Scale, seed: u64) -> Check {
    let grid: Vec<f64> = (0..20).map(|i| 0.07 * i as f64).collect();
    let (mut err, mut ok) = (0.0f64, true);
    for r in 0..scale.coupled_pairs {
        let (poisson, extra) =
            sample_poisson_coupled(scale.coupled_n, substream_seed(seed, r as u64, StreamRole::Coupling)).expect("n >= 2");
        let (uniform, beta) = couple_uniform_from_poisson(&poisson, extra).expect("poisson input");
        let tp = merging_times_from_log(&simulate(&poisson)).expect("complete log");
        let tu = merging_times_from_log(&simulate(&uniform)).expect("complete log");
        for (u, p) in tu.as_slice().iter().zip(tp.as_slice()) {
            err = err.max((u * beta - p).abs());
        }
        let (hp, hu) = (HullProfile::from_configuration(&poisson), HullProfile::from_configuration(&uniform));
        ok &= grid.iter().all(|&t| hu.cluster_count_at(t) == hp.cluster_count_at(beta * t));
    }
    Check { name: "poisson-uniform coupling is exact", passed: ok && err <= 1e-9, cases: scale.coupled_pairs, max_error: err }
}

pub fn run_suite(quick: bool, seed: u64) -> Vec<Check> {
    let scale = if quick { &QUICK } else { &FULL };
    let mut checks = oracle_triangle(scale, seed);
    checks.push(deterministic());
    checks.push(coupling(scale, seed));
    checks
}

pub fn report(checks: &[Check], quick: bool, seed: u64) -> (Table, Summary) {
    let mut table = Table::new("validate", &["check", "passed", "cases", "max_error"]);
    for c in checks {
        eprintln!("[{}] {} ({} cases, max error {:e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.cases, c.max_error);
        table.push(vec![c.name.into(), c.passed.into(), c.cases.into(), c.max_error.into()]);
    }
    let mut summary = Summary::default();
    summary.insert("experiment", "validate");
    summary.insert("quick", quick);
    summary.insert("seed", seed);
    summary.insert("passed", checks.iter().all(|c| c.passed));
    (table, summary)
}
