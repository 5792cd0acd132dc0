//! Experiments on merging-time vectors: localization and the last collision.

use alloc::format;
use alloc::vec::Vec;

use super::{check_replicates, run_replicates, McEstimate};
use crate::dynamics::{self, ConservationReport};
use crate::error::{Error, Result};
use crate::exact;
use crate::model::ModelSpec;
use crate::rng::{substream_seed, StreamRole};

/// Two merging times closer than this are considered equal.
const MATCH_TOLERANCE: f64 = 1e-12;

/// Conservation checkpoints audited per simulated configuration.
const AUDIT_CHECKPOINTS: usize = 32;

/// Probability that the window of radius `M` around `j` misses the true
/// merging time, one estimate per entry of `radii`.
pub fn localization_decay(
    model: &ModelSpec,
    n: usize,
    j: usize,
    radii: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    check_replicates(replicates, 2)?;
    if n < 2 || j == 0 || j >= n {
        return Err(Error::Bounds(format!("need 1 <= j <= n - 1, got j = {j}, n = {n}")));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("window radii must be strictly ascending".into()));
    }
    let limit = j.min(n - j);
    if let Some(&radius) = radii.iter().find(|&&m| m == 0 || m > limit) {
        return Err(Error::Window { j, radius, limit });
    }
    let rows: Vec<Result<Vec<bool>>> = run_replicates(replicates, |r| {
        let cfg = model.sample(n, substream_seed(seed, r, StreamRole::Configuration))?;
        let full = exact::merging_time(&cfg, j)?.time;
        radii
            .iter()
            .map(|&m| Ok(exact::windowed_time(&cfg, j, m)?.value - full > MATCH_TOLERANCE))
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    (0..radii.len())
        .map(|i| McEstimate::from_indicators(rows.iter().map(|row| row[i])))
        .collect()
}

/// Last-collision statistics at one system size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LastCollisionRow {
    pub n: usize,
    /// `P{|T_n^last - 1| > 0.1}`.
    pub far_from_one: McEstimate,
    pub mean_last: McEstimate,
    /// Worst conservation errors over every simulated configuration.
    pub conservation: ConservationReport,
}

/// Simulates the full dynamics for each `n` and records when the last
/// collision happens. Needs spacings with a finite second moment.
pub fn last_collision_convergence(
    model: &ModelSpec,
    n_list: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<LastCollisionRow>> {
    check_replicates(replicates, 2)?;
    if let ModelSpec::Id(m) = model {
        if m.finite_moment_order() <= 2.0 {
            return Err(Error::Domain("the last collision needs spacings with a finite second moment".into()));
        }
    }
    n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            // every size gets its own stream family
            let size_seed = substream_seed(seed, i as u64, StreamRole::Coupling);
            let runs: Vec<Result<(f64, ConservationReport)>> = run_replicates(replicates, |r| {
                let cfg = model.sample(n, substream_seed(size_seed, r, StreamRole::Configuration))?;
                let log = dynamics::simulate(&cfg);
                Ok((log.last_collision(), dynamics::audit_conservation(&log, &cfg, AUDIT_CHECKPOINTS)))
            });
            let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
            let lasts: Vec<f64> = runs.iter().map(|r| r.0).collect();
            let conservation = runs.iter().fold(
                ConservationReport { max_momentum: 0.0, max_barycenter_drift: 0.0, checkpoints: 0 },
                |acc, (_, c)| ConservationReport {
                    max_momentum: acc.max_momentum.max(c.max_momentum),
                    max_barycenter_drift: acc.max_barycenter_drift.max(c.max_barycenter_drift),
                    checkpoints: acc.checkpoints + c.checkpoints,
                },
            );
            Ok(LastCollisionRow {
                n,
                far_from_one: McEstimate::from_indicators(lasts.iter().map(|t| (t - 1.0).abs() > 0.1))?,
                mean_last: McEstimate::from_samples(&lasts)?,
                conservation,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IncrementModel;

    #[test]
    fn full_window_never_misses() {
        let est = localization_decay(&ModelSpec::poisson(), 40, 20, &[1, 5, 20], 200, 9).unwrap();
        assert_eq!(est[2].value, 0.0);
        assert!(est[0].value >= est[1].value);
        assert!(est[0].value > 0.0);
    }

    #[test]
    fn window_errors() {
        let m = ModelSpec::poisson();
        assert!(matches!(localization_decay(&m, 40, 10, &[4, 11], 10, 1), Err(Error::Window { .. })));
        assert!(localization_decay(&m, 40, 10, &[8, 4], 10, 1).is_err());
    }

    #[test]
    fn deterministic_last_collision_is_one() {
        let model = ModelSpec::Id(IncrementModel::deterministic());
        let rows = last_collision_convergence(&model, &[10, 100], 5, 1).unwrap();
        for row in rows {
            assert_eq!(row.far_from_one.value, 0.0);
            assert!((row.mean_last.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn heavy_tails_are_rejected() {
        let model = ModelSpec::Id(IncrementModel::pareto_shifted(1.5, 0.0).unwrap());
        assert!(matches!(last_collision_convergence(&model, &[10], 5, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn two_particle_far_probability() {
        // P{sqrt(X) outside [0.9, 1.1]} = 1 - (e^-0.81 - e^-1.21)
        let rows = last_collision_convergence(&ModelSpec::poisson(), &[2], 40_000, 3).unwrap();
        let expect = 1.0 - ((-0.81f64).exp() - (-1.21f64).exp());
        assert!((expect - 0.8534).abs() < 1e-4);
        let est = rows[0].far_from_one;
        assert!((est.value - expect).abs() <= 4.0 * est.stderr, "{est:?}");
    }
}
