//! First-passage probabilities of integrated exponential random walks.
//!
//! With `S_k` the partial sums of i.i.d. standard exponentials, the walks here
//! track `I_k = sum_{i<=k} (S_i - i d)` for a drift `d` and record the first
//! step at which `I_k < 0`.

use alloc::format;
use alloc::vec::Vec;

use super::{check_replicates, joint_z, run_replicates, McEstimate, PkEstimate};
use crate::error::{Error, Result};
use crate::exact;
use crate::math;
use crate::model::{ModelSpec, ModelTag};
use crate::rng::{standard_exponential, substream, substream_seed, StreamRng, StreamRole};

/// How often a surviving walk tries to prove it cannot die before the horizon.
const CERTIFY_EVERY: usize = 64;

/// First `k <= horizon` with `I_k < 0`, or `None` if the walk stays
/// non-negative through `horizon`.
///
/// Because increments are non-negative, `S_{k+i} >= S_k`, which gives
/// `I_{k+m} >= I_k + m (S_k - d k) - d m (m + 1) / 2`. This bound is concave in
/// `m`, so once it is non-negative at `m = horizon - k` the walk is certain to
/// survive and the remaining steps are skipped. The result is exact.
pub fn walk_survival(rng: &mut StreamRng, drift: f64, horizon: usize) -> Option<usize> {
    let (mut s, mut integrated) = (0.0f64, 0.0f64);
    for k in 1..=horizon {
        s += standard_exponential(rng);
        integrated += s - drift * k as f64;
        if integrated < 0.0 {
            return Some(k);
        }
        if k % CERTIFY_EVERY == 0 {
            let m = (horizon - k) as f64;
            let bound = integrated + m * (s - drift * k as f64) - 0.5 * drift * m * (m + 1.0);
            if bound >= 0.0 {
                return None;
            }
        }
    }
    None
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

fn survives(death: Option<usize>, k: usize) -> bool {
    death.is_none_or(|d| d > k)
}

/// `p_k` for every `k` in `k_list` from one walk per replicate, run to the
/// largest requested `k` with drift 1.
pub fn estimate_pk(k_list: &[usize], replicates: usize, seed: u64) -> Result<Vec<PkEstimate>> {
    check_replicates(replicates, 2)?;
    if k_list.contains(&0) {
        return Err(Error::Parameter("p_k needs k >= 1".into()));
    }
    let horizon = k_list.iter().copied().max().unwrap_or(0);
    let deaths = run_replicates(replicates, |r| {
        let mut rng = substream(seed, r, StreamRole::Walk);
        walk_survival(&mut rng, 1.0, horizon)
    });
    let r = replicates as f64;
    Ok(k_list
        .iter()
        .map(|&k| {
            let hits = deaths.iter().filter(|d| survives(**d, k)).count();
            let p = hits as f64 / r;
            PkEstimate { k, p_hat: p, stderr: math::sqrt(p * (1.0 - p) / r), replicates }
        })
        .collect())
}

/// Weighted least-squares fit of `log p_k = log c1 - log(k) / 4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C1Fit {
    pub c1: f64,
    /// Delta-method standard error of `c1`.
    pub c1_stderr: f64,
    /// Weighted residual sum of squares of the fixed-exponent fit.
    pub weighted_rss: f64,
    /// Decay exponent when it is fitted freely (conjectured 1/4).
    pub free_exponent: f64,
    pub free_c1: f64,
    /// `free_exponent - 1/4`.
    pub residual_slope: f64,
}

/// Fits `c1` with the exponent fixed at 1/4. Weights are the inverse
/// delta-method variances of `log p_k`, or uniform if any estimate has zero
/// error.
pub fn fit_c1(estimates: &[PkEstimate]) -> Result<C1Fit> {
    let mut ks: Vec<usize> = estimates.iter().map(|e| e.k).collect();
    ks.sort_unstable();
    ks.dedup();
    if ks.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 distinct k, got {}", ks.len())));
    }
    if (ks[ks.len() - 1] as f64) < 10.0 * ks[0] as f64 {
        return Err(Error::Fit("k values must span at least one decade".into()));
    }
    if let Some(e) = estimates.iter().find(|e| !(e.p_hat > 0.0)) {
        return Err(Error::Fit(format!("p_hat is zero at k = {}", e.k)));
    }
    let uniform = estimates.iter().any(|e| !(e.stderr > 0.0));
    let points: Vec<(f64, f64, f64)> = estimates
        .iter()
        .map(|e| {
            let w = if uniform { 1.0 } else { (e.p_hat / e.stderr) * (e.p_hat / e.stderr) };
            (math::ln(e.k as f64), math::ln(e.p_hat), w)
        })
        .collect();

    let sw: f64 = points.iter().map(|p| p.2).sum();
    let log_c1 = points.iter().map(|&(x, y, w)| w * (y + 0.25 * x)).sum::<f64>() / sw;
    let weighted_rss: f64 = points
        .iter()
        .map(|&(x, y, w)| {
            let e = y - (log_c1 - 0.25 * x);
            w * e * e
        })
        .sum();
    let c1 = math::exp(log_c1);
    let c1_stderr = if uniform { 0.0 } else { c1 / math::sqrt(sw) };

    let mx = points.iter().map(|&(x, _, w)| w * x).sum::<f64>() / sw;
    let my = points.iter().map(|&(_, y, w)| w * y).sum::<f64>() / sw;
    let sxx: f64 = points.iter().map(|&(x, _, w)| w * (x - mx) * (x - mx)).sum();
    let sxy: f64 = points.iter().map(|&(x, y, w)| w * (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let free_exponent = -slope;
    Ok(C1Fit {
        c1,
        c1_stderr,
        weighted_rss,
        free_exponent,
        free_c1: math::exp(my - slope * mx),
        residual_slope: free_exponent - 0.25,
    })
}

/// `P{inf_k sum_{i<=k} (S_i - i t) >= 0} = sqrt(1 - t) e^{-t/2}` for `0 <= t <= 1`.
pub fn drift_target(t: f64) -> f64 {
    math::sqrt(1.0 - t) * math::exp(-0.5 * t)
}

/// Truncated survival probabilities against the closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftReport {
    pub t: f64,
    pub k_max: usize,
    /// Survival through `k_max`.
    pub estimate: McEstimate,
    /// Survival through `k_max / 4`, from the same walks.
    pub estimate_quarter: McEstimate,
    pub target: f64,
}

/// Estimates `P{min_{k <= k_max} sum_{i<=k} (S_i - i t) >= 0}`. Truncation
/// can only overshoot the infinite-horizon target, and the overshoot shrinks
/// as `k_max` grows.
pub fn check_drift_closed_form(t: f64, k_max: usize, replicates: usize, seed: u64) -> Result<DriftReport> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain(format!("drift must satisfy 0 <= t < 1, got {t}")));
    }
    if k_max < 4 {
        return Err(Error::Parameter(format!("k_max must be at least 4, got {k_max}")));
    }
    check_replicates(replicates, 2)?;
    let deaths = run_replicates(replicates, |r| {
        let mut rng = substream(seed, r, StreamRole::Walk);
        walk_survival(&mut rng, t, k_max)
    });
    let quarter = k_max / 4;
    Ok(DriftReport {
        t,
        k_max,
        estimate: McEstimate::from_indicators(deaths.iter().map(|d| d.is_none()))?,
        estimate_quarter: McEstimate::from_indicators(deaths.iter().map(|d| survives(*d, quarter)))?,
        target: drift_target(t),
    })
}

/// Both sides of the product formula for `P{T_{j,n} >= t}` in the Poisson model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductReport {
    pub n: usize,
    pub j: usize,
    pub t: f64,
    /// Direct estimate of `P{T_{j,n} >= t}`.
    pub lhs: McEstimate,
    /// Survival of the drift-`t^2` walk for `j` steps.
    pub left_walk: McEstimate,
    /// Survival of the drift-`t^2` walk for `n - j` steps.
    pub right_walk: McEstimate,
    /// `e^{t^2}` times the two walk probabilities.
    pub rhs: f64,
    /// Delta-method standard error of `rhs`.
    pub rhs_stderr: f64,
    /// `|lhs - rhs|` in joint standard errors.
    pub z: f64,
}

/// Monte Carlo of both sides of the product formula, from independent
/// configurations and walks.
pub fn check_product_formula(
    model: &ModelSpec,
    n: usize,
    j: usize,
    t: f64,
    replicates: usize,
    seed: u64,
) -> Result<ProductReport> {
    if model.tag() != ModelTag::Poisson {
        return Err(Error::Domain(format!("the product formula holds for the Poisson model, not {}", model.tag())));
    }
    if n < 2 || j == 0 || j >= n {
        return Err(Error::Bounds(format!("need 1 <= j <= n - 1, got j = {j}, n = {n}")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("need 0 <= t <= 1, got {t}")));
    }
    check_replicates(replicates, 2)?;

    let merged: Vec<Result<bool>> = run_replicates(replicates, |r| {
        let cfg = model.sample(n, substream_seed(seed, r, StreamRole::Configuration))?;
        Ok(exact::merging_time(&cfg, j)?.time >= t)
    });
    let lhs = McEstimate::from_indicators(merged.into_iter().collect::<Result<Vec<_>>>()?)?;

    let drift = t * t;
    let walk = |role: StreamRole, horizon: usize| {
        let deaths = run_replicates(replicates, |r| {
            let mut rng = substream(seed, r, role);
            walk_survival(&mut rng, drift, horizon)
        });
        McEstimate::from_indicators(deaths.into_iter().map(|d| d.is_none()))
    };
    let left_walk = walk(StreamRole::LeftWalk, j)?;
    let right_walk = walk(StreamRole::RightWalk, n - j)?;

    let e = math::exp(drift);
    let rhs = e * left_walk.value * right_walk.value;
    let rhs_stderr = e * math::sqrt(
        sq(right_walk.value * left_walk.stderr) + sq(left_walk.value * right_walk.stderr),
    );
    Ok(ProductReport {
        n,
        j,
        t,
        lhs,
        left_walk,
        right_walk,
        rhs,
        rhs_stderr,
        z: joint_z(lhs.value - rhs, &[lhs.stderr, rhs_stderr]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IncrementModel;
    use crate::rng::rng_from_seed;

    /// Plain simulation without the survival certificate.
    fn naive(rng: &mut StreamRng, drift: f64, horizon: usize) -> Option<usize> {
        let (mut s, mut integrated) = (0.0, 0.0);
        for k in 1..=horizon {
            s += standard_exponential(rng);
            integrated += s - drift * k as f64;
            if integrated < 0.0 {
                return Some(k);
            }
        }
        None
    }

    #[test]
    fn certificate_never_changes_outcome() {
        for seed in 0..400 {
            for &drift in &[0.0, 0.3, 0.8, 1.0] {
                let a = walk_survival(&mut rng_from_seed(seed), drift, 3000);
                let b = naive(&mut rng_from_seed(seed), drift, 3000);
                assert_eq!(a, b, "seed {seed}, drift {drift}");
            }
        }
    }

    #[test]
    fn zero_drift_always_survives() {
        let rep = check_drift_closed_form(0.0, 1000, 50, 1).unwrap();
        assert_eq!(rep.estimate.value, 1.0);
        assert_eq!(rep.target, 1.0);
        assert!(check_drift_closed_form(1.0, 1000, 50, 1).is_err());
    }

    #[test]
    fn drift_targets() {
        assert!((drift_target(0.5) - 0.550_695).abs() < 1e-6);
        assert!((drift_target(0.75) - 0.343_645).abs() < 1e-6);
        // the squared target times e^{t^2} recovers 1 - t^2
        for t in [0.1f64, 0.5, 0.9] {
            let t2 = t * t;
            assert!((math::exp(t2) * drift_target(t2).powi(2) - (1.0 - t2)).abs() < 1e-14);
        }
    }

    #[test]
    fn p1_is_exponential_tail() {
        let est = estimate_pk(&[1, 2, 8], 20_000, 4).unwrap();
        let p1 = est[0];
        assert!((p1.p_hat - (-1.0f64).exp()).abs() <= 4.0 * p1.stderr);
        assert!(est[0].p_hat >= est[1].p_hat && est[1].p_hat >= est[2].p_hat);
        assert!(estimate_pk(&[0], 10, 1).is_err());
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let ks = [16usize, 64, 256, 1024];
        let est: Vec<PkEstimate> = ks
            .iter()
            .map(|&k| PkEstimate { k, p_hat: 0.36 * (k as f64).powf(-0.25), stderr: 0.0, replicates: 1 })
            .collect();
        let fit = fit_c1(&est).unwrap();
        assert!((fit.c1 - 0.36).abs() < 1e-12);
        assert!(fit.weighted_rss < 1e-20);
        assert!(fit.residual_slope.abs() < 1e-12);
        assert!(fit_c1(&est[..2]).is_err());
        assert!(fit_c1(&[est[0], est[1], PkEstimate { k: 32, ..est[0] }]).is_err());
    }

    #[test]
    fn product_formula_domain() {
        let id = ModelSpec::Id(IncrementModel::deterministic());
        assert!(matches!(check_product_formula(&id, 10, 5, 0.5, 10, 1), Err(Error::Domain(_))));
        assert!(check_product_formula(&ModelSpec::poisson(), 10, 10, 0.5, 10, 1).is_err());
        let rep = check_product_formula(&ModelSpec::poisson(), 10, 5, 0.0, 50, 1).unwrap();
        assert_eq!((rep.lhs.value, rep.rhs), (1.0, 1.0));
    }
}
