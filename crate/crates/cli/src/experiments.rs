//! One function per subcommand: settings in, result table and summary out.

use anyhow::{bail, Result};
use stickygas_core::dynamics::{self, audit_conservation};
use stickygas_core::exact::{self, MergingTimes, MAX_PARTICLES, SOFT_PARTICLE_LIMIT};
use stickygas_core::hull::HullProfile;
use stickygas_core::math;
use stickygas_core::rng::{substream_seed, StreamRole};
use stickygas_core::stats;

use crate::config::{Engine, Settings};
use crate::output::{Cell, Summary, Table};

/// Reference value `p_k ~ 0.36 k^{-1/4}` of the decay constant.
pub const C1_REFERENCE: f64 = 0.36;

/// Walk lengths at or above this enter the `c1` fit.
pub const FIT_MIN_K: usize = 100;

/// `c3 = e c1^2 B(3/4, 3/4)` at the reference `c1`.
pub fn c3_reference() -> f64 {
    std::f64::consts::E * C1_REFERENCE * C1_REFERENCE * math::beta(0.75, 0.75)
}

pub struct Output {
    pub table: Table,
    pub summary: Summary,
}

fn base_summary(experiment: &str, s: &Settings) -> Summary {
    let mut summary = Summary::default();
    summary.insert("experiment", experiment);
    summary.insert("seed", s.seed);
    summary
}

fn with_model(mut summary: Summary, s: &Settings) -> Summary {
    summary.insert("model", s.model_label());
    summary
}

fn one_minus_t2(t: f64) -> f64 {
    (1.0 - t * t).max(0.0)
}

/// Seed of the single configuration used by `simulate` and `times`.
fn single_seed(s: &Settings) -> u64 {
    substream_seed(s.seed, 0, StreamRole::Configuration)
}

pub fn simulate(s: &Settings, emit_events: bool) -> Result<Output> {
    let n = s.n()?;
    let cfg = s.model().sample(n, single_seed(s))?;
    let log = dynamics::simulate(&cfg);
    let checkpoints = if n <= 2_000 { usize::MAX } else { 64 };
    let audit = audit_conservation(&log, &cfg, checkpoints);

    let mut summary = with_model(base_summary("simulate", s), s);
    summary.insert("n", n);
    summary.insert("events", log.events().len());
    summary.float("last_collision", log.last_collision());
    summary.float("max_momentum", audit.max_momentum);
    summary.float("max_barycenter_drift", audit.max_barycenter_drift);
    summary.insert("conservation_checkpoints", audit.checkpoints);

    let table = if emit_events {
        let mut table = Table::new("simulate-events", &["time", "left_first", "left_last", "right_first", "right_last"]);
        for e in log.events() {
            table.push(vec![
                e.time.into(),
                e.left.first.into(),
                e.left.last.into(),
                e.right.first.into(),
                e.right.last.into(),
            ]);
        }
        table
    } else {
        let t = s.t.unwrap_or_else(|| log.last_collision());
        summary.float("t", t);
        let mut table = Table::new("simulate-clusters", &["first", "last", "mass", "position", "velocity"]);
        for c in dynamics::state_at(&log, &cfg, t) {
            table.push(vec![
                c.span.first.into(),
                c.span.last.into(),
                c.mass.into(),
                c.position.into(),
                c.velocity.into(),
            ]);
        }
        table
    };
    Ok(Output { table, summary })
}

pub fn times(s: &Settings) -> Result<Output> {
    let n = s.n()?;
    let engine = s.engine.unwrap_or(Engine::Dynamics);
    let cfg = s.model().sample(n, single_seed(s))?;
    let times = match engine {
        Engine::Exact => {
            if n > MAX_PARTICLES {
                bail!("the exact engine is limited to n <= {MAX_PARTICLES}; use --engine dynamics");
            }
            if n > SOFT_PARTICLE_LIMIT {
                eprintln!("warning: the exact engine is cubic in n; n = {n} will be slow");
            }
            exact::all_merging_times(&cfg)?
        }
        Engine::Dynamics => dynamics::merging_times_from_log(&dynamics::simulate(&cfg))?,
        Engine::Hull => {
            let profile = HullProfile::from_configuration(&cfg);
            MergingTimes::new((1..n).map(|j| profile.merging_time_bisect(j, 1e-12)).collect::<Result<_, _>>()?)?
        }
    };
    let mut summary = with_model(base_summary("times", s), s);
    summary.insert("n", n);
    summary.insert("engine", format!("{engine:?}").to_lowercase());
    summary.float("last_collision", exact::last_collision(&times));
    let mut table = Table::new("times", &["j", "t_j"]);
    for (i, &t) in times.as_slice().iter().enumerate() {
        table.push(vec![(i + 1).into(), t.into()]);
    }
    Ok(Output { table, summary })
}

fn require_hull(s: &Settings) -> Result<()> {
    match s.engine {
        None | Some(Engine::Hull) => Ok(()),
        Some(other) => bail!("cluster-count statistics use the hull engine, not {other:?}"),
    }
}

pub fn acurve(s: &Settings) -> Result<Output> {
    require_hull(s)?;
    let (n, reps, grid) = (s.n()?, s.replicates()?, s.grid()?);
    let est = stats::estimate_a(&s.model(), n, grid, reps, s.seed)?;
    let mut table = Table::new("acurve", &["t", "a_hat", "stderr", "one_minus_t2"]);
    for (&t, e) in grid.iter().zip(&est) {
        table.push(vec![t.into(), e.value.into(), e.stderr.into(), one_minus_t2(t).into()]);
    }
    let mut summary = with_model(base_summary("acurve", s), s);
    summary.insert("n", n);
    summary.insert("replicates", reps);
    summary.insert("engine", "hull");
    Ok(Output { table, summary })
}

pub fn clt(s: &Settings) -> Result<Output> {
    require_hull(s)?;
    let (n, reps, t) = (s.n()?, s.replicates()?, s.t()?);
    let rep = stats::clt_check(&s.model(), n, t, reps, s.seed, s.a_ref)?;
    let mut table = Table::new("clt", &["replicate", "z"]);
    for (i, &z) in rep.standardized.iter().enumerate() {
        table.push(vec![i.into(), z.into()]);
    }
    let mut summary = with_model(base_summary("clt", s), s);
    summary.insert("n", n);
    summary.insert("replicates", reps);
    summary.float("t", t);
    summary.float("a_ref", rep.a_ref);
    for (key, e) in [
        ("mean", rep.mean),
        ("variance", rep.variance),
        ("skewness", rep.skewness),
        ("excess_kurtosis", rep.excess_kurtosis),
    ] {
        summary.float(key, e.value);
        summary.float(format!("{key}_stderr"), e.stderr);
    }
    summary.float("kolmogorov", rep.kolmogorov);
    Ok(Output { table, summary })
}

pub fn cov(s: &Settings) -> Result<Output> {
    require_hull(s)?;
    let (n, reps) = (s.n()?, s.replicates()?);
    let Some(pairs) = s.pairs.as_deref() else { bail!("missing --pairs") };
    let est = stats::estimate_r(&s.model(), n, pairs, reps, s.seed)?;
    let mut table = Table::new("cov", &["s", "t", "r_hat", "stderr"]);
    for e in &est {
        table.push(vec![e.s.into(), e.t.into(), e.value.into(), e.stderr.into()]);
    }
    let mut summary = with_model(base_summary("cov", s), s);
    summary.insert("n", n);
    summary.insert("replicates", reps);
    Ok(Output { table, summary })
}

pub fn fig1(s: &Settings) -> Result<Output> {
    require_hull(s)?;
    let (n, reps) = (s.n()?, s.replicates()?);
    let ecdf = stats::ecdf_k1(&s.model(), n, reps, s.seed)?;
    let mut table = Table::new("fig1", &["x", "F"]);
    for (x, f) in ecdf.table() {
        table.push(vec![x.into(), f.into()]);
    }
    let mut summary = with_model(base_summary("fig1", s), s);
    summary.insert("n", n);
    summary.insert("replicates", reps);
    let (mean, second, single) = (ecdf.mean(), ecdf.second_moment(), ecdf.single_cluster());
    summary.float("mean", mean.value);
    summary.float("mean_stderr", mean.stderr);
    summary.float("second_moment", second.value);
    summary.float("second_moment_stderr", second.stderr);
    summary.float("p_single_cluster", single.value);
    summary.float("p_single_cluster_stderr", single.stderr);
    summary.float("c3_reference", c3_reference());
    summary.float("half_split_distance", ecdf.half_split_distance());
    summary.float("half_split_bound", 2.0 * ((2.0f64 / 0.01).ln() / reps as f64).sqrt());
    Ok(Output { table, summary })
}

pub fn pk(s: &Settings) -> Result<Output> {
    let reps = s.replicates()?;
    let k_list = s.k_list.clone().unwrap_or_else(|| vec![1, 256, 1024, 4096]);
    let est = stats::estimate_pk(&k_list, reps, s.seed)?;
    let mut table = Table::new("pk", &["k", "p_hat", "stderr", "scaled"]);
    for e in &est {
        let scaled = e.p_hat * (e.k as f64).powf(0.25);
        table.push(vec![e.k.into(), e.p_hat.into(), e.stderr.into(), scaled.into()]);
    }
    let mut summary = base_summary("pk", s);
    summary.insert("replicates", reps);
    let tail: Vec<_> = est.iter().copied().filter(|e| e.k >= FIT_MIN_K).collect();
    summary.insert("fit_min_k", FIT_MIN_K);
    match stats::fit_c1(&tail) {
        Ok(fit) => {
            summary.float("c1", fit.c1);
            summary.float("c1_stderr", fit.c1_stderr);
            summary.float("weighted_rss", fit.weighted_rss);
            summary.float("free_exponent", fit.free_exponent);
            summary.float("free_c1", fit.free_c1);
            summary.float("residual_slope", fit.residual_slope);
        }
        Err(e) => summary.insert("fit_error", e.to_string()),
    }
    Ok(Output { table, summary })
}

pub fn driftform(s: &Settings) -> Result<Output> {
    let reps = s.replicates()?;
    let k_max = s.k_max.unwrap_or(100_000);
    let grid = s.grid.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.75]);
    let mut table = Table::new(
        "driftform",
        &["t", "k_max", "estimate", "stderr", "quarter_estimate", "quarter_stderr", "target"],
    );
    for (i, &t) in grid.iter().enumerate() {
        let seed = substream_seed(s.seed, i as u64, StreamRole::Walk);
        let rep = stats::check_drift_closed_form(t, k_max, reps, seed)?;
        table.push(vec![
            t.into(),
            k_max.into(),
            rep.estimate.value.into(),
            rep.estimate.stderr.into(),
            rep.estimate_quarter.value.into(),
            rep.estimate_quarter.stderr.into(),
            rep.target.into(),
        ]);
    }
    let mut summary = base_summary("driftform", s);
    summary.insert("replicates", reps);
    summary.insert("k_max", k_max);
    Ok(Output { table, summary })
}

pub fn product16(s: &Settings) -> Result<Output> {
    let reps = s.replicates()?;
    let n = s.n.unwrap_or(40);
    let j = s.j.unwrap_or(n / 2);
    let grid = s.grid.clone().unwrap_or_else(|| vec![0.6, 1.0]);
    let mut table = Table::new(
        "product16",
        &["t", "lhs", "lhs_stderr", "left_walk", "right_walk", "rhs", "rhs_stderr", "z"],
    );
    for (i, &t) in grid.iter().enumerate() {
        let seed = substream_seed(s.seed, i as u64, StreamRole::Coupling);
        let rep = stats::check_product_formula(&s.model(), n, j, t, reps, seed)?;
        table.push(vec![
            t.into(),
            rep.lhs.value.into(),
            rep.lhs.stderr.into(),
            rep.left_walk.value.into(),
            rep.right_walk.value.into(),
            rep.rhs.into(),
            rep.rhs_stderr.into(),
            rep.z.into(),
        ]);
    }
    let mut summary = with_model(base_summary("product16", s), s);
    summary.insert("n", n);
    summary.insert("j", j);
    summary.insert("replicates", reps);
    Ok(Output { table, summary })
}

pub fn localization(s: &Settings) -> Result<Output> {
    let reps = s.replicates()?;
    let n = s.n.unwrap_or(1024);
    let j = s.j.unwrap_or(n / 2);
    let radii = s.radii.clone().unwrap_or_else(|| vec![4, 8, 16, 32, 64]);
    let est = stats::localization_decay(&s.model(), n, j, &radii, reps, s.seed)?;
    let mut table = Table::new("localization", &["m", "mismatch", "stderr"]);
    for (&m, e) in radii.iter().zip(&est) {
        table.push(vec![m.into(), e.value.into(), e.stderr.into()]);
    }
    let mut summary = with_model(base_summary("localization", s), s);
    summary.insert("n", n);
    summary.insert("j", j);
    summary.insert("replicates", reps);
    Ok(Output { table, summary })
}

pub fn lastcollision(s: &Settings) -> Result<Output> {
    let reps = s.replicates()?;
    let n_list = s.n_list.clone().unwrap_or_else(|| vec![1_000, 4_000, 16_000]);
    let rows = stats::last_collision_convergence(&s.model(), &n_list, reps, s.seed)?;
    let mut table = Table::new(
        "lastcollision",
        &["n", "p_far", "stderr", "mean_last", "mean_stderr", "max_momentum", "max_barycenter_drift"],
    );
    for r in &rows {
        let row: Vec<Cell> = vec![
            r.n.into(),
            r.far_from_one.value.into(),
            r.far_from_one.stderr.into(),
            r.mean_last.value.into(),
            r.mean_last.stderr.into(),
            r.conservation.max_momentum.into(),
            r.conservation.max_barycenter_drift.into(),
        ];
        table.push(row);
    }
    let mut summary = with_model(base_summary("lastcollision", s), s);
    summary.insert("replicates", reps);
    summary.float("threshold", 0.1);
    Ok(Output { table, summary })
}
