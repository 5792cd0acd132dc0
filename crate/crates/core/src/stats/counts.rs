//! Statistics of `K_n(t)` at fixed times, computed with the hull engine.

use alloc::format;
use alloc::vec::Vec;

use super::{check_replicates, run_replicates, CovEstimate, EcdfEstimate, McEstimate};
use crate::error::{Error, Result};
use crate::hull::HullProfile;
use crate::math;
use crate::model::{couple_uniform_from_poisson, sample_poisson_coupled, ModelSpec};
use crate::rng::{substream_seed, StreamRole};

fn check_times(times: &[f64]) -> Result<()> {
    match times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        Some(t) => Err(Error::Parameter(format!("times must be finite and non-negative, got {t}"))),
        None => Ok(()),
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::TooFewParticles(n))
    } else {
        Ok(())
    }
}

/// `K_n(t)` on `times` for every replicate, in replicate order.
fn count_table(model: &ModelSpec, n: usize, times: &[f64], replicates: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    check_n(n)?;
    check_times(times)?;
    run_replicates(replicates, |r| {
        let cfg = model.sample(n, substream_seed(seed, r, StreamRole::Configuration))?;
        let profile = HullProfile::from_configuration(&cfg);
        Ok(times.iter().map(|&t| profile.cluster_count_at(t)).collect())
    })
    .into_iter()
    .collect()
}

/// `K_n(t) / n` averaged over replicates, one estimate per grid point.
pub fn estimate_a(model: &ModelSpec, n: usize, grid: &[f64], replicates: usize, seed: u64) -> Result<Vec<McEstimate>> {
    check_replicates(replicates, 100)?;
    let table = count_table(model, n, grid, replicates, seed)?;
    let scale = 1.0 / n as f64;
    (0..grid.len())
        .map(|i| {
            let column: Vec<f64> = table.iter().map(|row| row[i] as f64 * scale).collect();
            McEstimate::from_samples(&column)
        })
        .collect()
}

/// Standardized counts `(K_n(t) - n a(t)) / sqrt(n)` and their shape.
#[derive(Clone, Debug, PartialEq)]
pub struct CltReport {
    pub n: usize,
    pub t: f64,
    pub a_ref: f64,
    /// One value per replicate, in replicate order.
    pub standardized: Vec<f64>,
    pub mean: McEstimate,
    /// Sample variance, an estimate of `sigma^2(t)`.
    pub variance: McEstimate,
    /// Standard error `sqrt(6 / replicates)` under normality.
    pub skewness: McEstimate,
    /// Standard error `sqrt(24 / replicates)` under normality.
    pub excess_kurtosis: McEstimate,
    /// Kolmogorov distance to the normal law with the sample mean and variance.
    /// Zero when the sample is degenerate.
    pub kolmogorov: f64,
}

/// Checks the central limit behaviour of `K_n(t)` for `t < 1`. `a_ref`
/// defaults to the closed form `1 - t^2` where it is known.
pub fn clt_check(
    model: &ModelSpec,
    n: usize,
    t: f64,
    replicates: usize,
    seed: u64,
    a_ref: Option<f64>,
) -> Result<CltReport> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain(format!("central limit regime needs 0 <= t < 1, got {t}")));
    }
    check_replicates(replicates, 4)?;
    let a_ref = match a_ref.or_else(|| model.limit_fraction(t)) {
        Some(a) => a,
        None => return Err(Error::Parameter(format!("a(t) is not known in closed form for {}", model.tag()))),
    };
    let table = count_table(model, n, &[t], replicates, seed)?;
    let nf = n as f64;
    let root = math::sqrt(nf);
    let z: Vec<f64> = table.iter().map(|row| (row[0] as f64 - nf * a_ref) / root).collect();

    let r = replicates as f64;
    let mean = McEstimate::from_samples(&z)?;
    let m = mean.value;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in &z {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= r;
    m3 /= r;
    m4 /= r;
    let var = m2 * r / (r - 1.0);
    let variance = McEstimate {
        value: var,
        stderr: math::sqrt(((m4 - m2 * m2) / r).max(0.0)),
        replicates,
    };
    let (skew, kurt) = if m2 > 0.0 { (m3 / (m2 * math::sqrt(m2)), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
    let skewness = McEstimate { value: skew, stderr: math::sqrt(6.0 / r), replicates };
    let excess_kurtosis = McEstimate { value: kurt, stderr: math::sqrt(24.0 / r), replicates };

    let kolmogorov = if var > 0.0 {
        let sd = math::sqrt(var);
        let mut sorted = z.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        sorted
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = math::normal_cdf((v - m) / sd);
                ((i + 1) as f64 / r - f).max(f - i as f64 / r)
            })
            .fold(0.0, f64::max)
    } else {
        0.0
    };

    Ok(CltReport { n, t, a_ref, standardized: z, mean, variance, skewness, excess_kurtosis, kolmogorov })
}

/// Jackknife covariance of paired samples: the unbiased covariance and the
/// standard error from leave-one-out recomputation.
fn jackknife_cov(x: &[f64], y: &[f64]) -> (f64, f64) {
    let r = x.len() as f64;
    let mx = x.iter().sum::<f64>() / r;
    let my = y.iter().sum::<f64>() / r;
    let (mut sx, mut sy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (u, v) = (a - mx, b - my);
        sx += u;
        sy += v;
        sxy += u * v;
    }
    let full = (sxy - sx * sy / r) / (r - 1.0);
    let loo: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let (u, v) = (a - mx, b - my);
            ((sxy - u * v) - (sx - u) * (sy - v) / (r - 1.0)) / (r - 2.0)
        })
        .collect();
    let mean_loo = loo.iter().sum::<f64>() / r;
    let spread: f64 = loo.iter().map(|c| (c - mean_loo) * (c - mean_loo)).sum();
    (full, math::sqrt((r - 1.0) / r * spread))
}

/// `Cov(K_n(s), K_n(t)) / n` from the same replicate at both times.
pub fn estimate_r(
    model: &ModelSpec,
    n: usize,
    pairs: &[(f64, f64)],
    replicates: usize,
    seed: u64,
) -> Result<Vec<CovEstimate>> {
    check_replicates(replicates, 3)?;
    if let Some(&(s, t)) = pairs.iter().find(|(s, t)| !(0.0..1.0).contains(s) || !(0.0..1.0).contains(t)) {
        return Err(Error::Domain(format!("covariance needs s, t in [0, 1), got ({s}, {t})")));
    }
    let mut times: Vec<f64> = pairs.iter().flat_map(|&(s, t)| [s, t]).collect();
    times.sort_unstable_by(f64::total_cmp);
    times.dedup();
    let table = count_table(model, n, &times, replicates, seed)?;
    let column = |t: f64| -> Vec<f64> {
        let i = times.partition_point(|&u| u < t);
        table.iter().map(|row| row[i] as f64).collect()
    };
    let nf = n as f64;
    Ok(pairs
        .iter()
        .map(|&(s, t)| {
            let (cov, se) = jackknife_cov(&column(s), &column(t));
            CovEstimate { s, t, value: cov / nf, stderr: se / nf }
        })
        .collect())
}

/// Empirical law of `K_n(1) / sqrt(n)`.
pub fn ecdf_k1(model: &ModelSpec, n: usize, replicates: usize, seed: u64) -> Result<EcdfEstimate> {
    check_replicates(replicates, 2)?;
    let table = count_table(model, n, &[1.0], replicates, seed)?;
    EcdfEstimate::from_counts(n, table.into_iter().map(|row| row[0]).collect())
}

/// One coupled Poisson/uniform pair evaluated on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledCounts {
    pub beta: f64,
    /// `K^Unif_n(t)` on the grid.
    pub uniform: Vec<usize>,
    /// `K^Poiss_n(beta t)` on the grid.
    pub poisson_scaled: Vec<usize>,
}

/// Counts for coupled pairs; the two count vectors agree exactly.
pub fn coupled_cluster_counts(n: usize, grid: &[f64], replicates: usize, seed: u64) -> Result<Vec<CoupledCounts>> {
    check_n(n)?;
    check_times(grid)?;
    run_replicates(replicates, |r| {
        let (poisson, extra) = sample_poisson_coupled(n, substream_seed(seed, r, StreamRole::Coupling))?;
        let (uniform, beta) = couple_uniform_from_poisson(&poisson, extra)?;
        let hp = HullProfile::from_configuration(&poisson);
        let hu = HullProfile::from_configuration(&uniform);
        Ok(CoupledCounts {
            beta,
            uniform: grid.iter().map(|&t| hu.cluster_count_at(t)).collect(),
            poisson_scaled: grid.iter().map(|&t| hp.cluster_count_at(beta * t)).collect(),
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IncrementModel;

    #[test]
    fn a_is_one_at_time_zero() {
        let est = estimate_a(&ModelSpec::poisson(), 200, &[0.0, 0.5], 100, 3).unwrap();
        assert_eq!(est[0].value, 1.0);
        assert_eq!(est[0].stderr, 0.0);
        assert!(est[1].value < 1.0 && est[1].value > 0.5);
        assert!(estimate_a(&ModelSpec::poisson(), 200, &[0.5], 99, 3).is_err());
    }

    #[test]
    fn a_is_one_below_sqrt_mu() {
        let model = ModelSpec::Id(IncrementModel::uniform_interval(0.5).unwrap());
        let est = estimate_a(&model, 500, &[0.4, 0.7], 100, 11).unwrap();
        assert_eq!(est[0].value, 1.0);
        assert_eq!(est[1].value, 1.0);
    }

    #[test]
    fn clt_degenerate_at_zero_and_domain() {
        let rep = clt_check(&ModelSpec::Uniform, 100, 0.0, 20, 1, None).unwrap();
        assert!(rep.standardized.iter().all(|&z| z == 0.0));
        assert_eq!(rep.kolmogorov, 0.0);
        assert!(matches!(clt_check(&ModelSpec::poisson(), 100, 1.0, 20, 1, None), Err(Error::Domain(_))));
        let id = ModelSpec::Id(IncrementModel::deterministic());
        assert!(clt_check(&id, 100, 0.5, 20, 1, None).is_err());
        assert!(clt_check(&id, 100, 0.5, 20, 1, Some(1.0)).is_ok());
    }

    #[test]
    fn jackknife_matches_direct_formula() {
        let x = [1.0, 2.0, 4.0, 7.0, 3.0];
        let y = [2.0, 1.0, 5.0, 6.0, 6.0];
        let (cov, se) = jackknife_cov(&x, &y);
        let r = x.len();
        let direct = |xs: &[f64], ys: &[f64]| {
            let m = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / m;
            let my = ys.iter().sum::<f64>() / m;
            xs.iter().zip(ys).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (m - 1.0)
        };
        assert!((cov - direct(&x, &y)).abs() < 1e-12);
        let loo: Vec<f64> = (0..r)
            .map(|i| {
                let xs: Vec<f64> = (0..r).filter(|&k| k != i).map(|k| x[k]).collect();
                let ys: Vec<f64> = (0..r).filter(|&k| k != i).map(|k| y[k]).collect();
                direct(&xs, &ys)
            })
            .collect();
        let m = loo.iter().sum::<f64>() / r as f64;
        let expect = ((r - 1) as f64 / r as f64 * loo.iter().map(|c| (c - m) * (c - m)).sum::<f64>()).sqrt();
        assert!((se - expect).abs() < 1e-12);
    }

    #[test]
    fn covariance_is_symmetric() {
        let est = estimate_r(&ModelSpec::poisson(), 300, &[(0.4, 0.6), (0.6, 0.4)], 50, 2).unwrap();
        assert_eq!(est[0].value, est[1].value);
        assert!(estimate_r(&ModelSpec::poisson(), 300, &[(0.4, 1.0)], 50, 2).is_err());
    }

    #[test]
    fn coupled_counts_agree() {
        let grid: Vec<f64> = (0..20).map(|i| 0.06 * i as f64).collect();
        for pair in coupled_cluster_counts(200, &grid, 10, 5).unwrap() {
            assert_eq!(pair.uniform, pair.poisson_scaled);
        }
    }

    #[test]
    fn ecdf_at_one() {
        let e = ecdf_k1(&ModelSpec::poisson(), 400, 30, 8).unwrap();
        assert_eq!(e.replicates(), 30);
        assert!(e.counts().iter().all(|&k| (1..=400).contains(&k)));
    }
}
