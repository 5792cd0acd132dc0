//! Merging times from the closed-form minimisation over neighbouring blocks.
//!
//! For particle `j` and block lengths `p` (to the right) and `q` (to the left)
//!
//! ```text
//! H(p, j, q) = 2/(p+q) * ( (1/p) sum_{i=1}^{p-1} (p-i) X_{j+i+1}
//!                        + (1/q) sum_{i=1}^{q-1} (q-i) X_{j-i+1} + X_{j+1} )
//! ```
//!
//! and `T_{j,n} = min sqrt(H(k, j, l))` over `1 <= k <= n-j`, `1 <= l <= j`.
//! `H` is a weighted average of spacings (the weights sum to one), so
//! `sqrt(mu) <= T_{j,n} <= sqrt(X_{j+1})`.
//!
//! Spacings are passed as the slice `X_1..X_n` with `X_m` at index `m - 1`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::Configuration;

/// Above this many particles [`all_merging_times`] is slow enough that callers
/// should prefer the event-driven or hull engines.
pub const SOFT_PARTICLE_LIMIT: usize = 512;
/// Hard cap for [`all_merging_times`].
pub const MAX_PARTICLES: usize = 4096;

/// `T_{1,n}, ..., T_{n-1,n}`, stored with `T_{j,n}` at index `j - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct MergingTimes {
    times: Vec<f64>,
}

impl MergingTimes {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::TooFewParticles(1));
        }
        if let Some(i) = times.iter().position(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::Parameter(format!("merging time {} is {}", i + 1, times[i])));
        }
        Ok(MergingTimes { times })
    }

    /// Number of particles.
    pub fn n(&self) -> usize {
        self.times.len() + 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.times
    }

    /// `T_{j,n}` for 1-based `j`.
    pub fn get(&self, j: usize) -> Option<f64> {
        j.checked_sub(1).and_then(|i| self.times.get(i).copied())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.times
    }
}

/// Minimiser of the block problem for one particle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MergeMinimizer {
    pub j: usize,
    pub time: f64,
    /// Length `k*` of the right block `(j, j + k*]`.
    pub right_len: usize,
    /// Length `l*` of the left block `(j - l*, j]`.
    pub left_len: usize,
}

impl MergeMinimizer {
    /// 1-based span of the cluster created at `time`.
    pub fn first_cluster(&self) -> (usize, usize) {
        (self.j + 1 - self.left_len, self.j + self.right_len)
    }
}

/// `T_j^{(M)}`: the minimisation restricted to blocks of length at most `M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowedTime {
    pub j: usize,
    pub radius: usize,
    pub value: f64,
}

fn needed_range(p: usize, j: usize, q: usize, len: usize) -> Result<()> {
    if p == 0 || q == 0 {
        return Err(Error::Bounds(format!("block lengths must be >= 1, got p={p}, q={q}")));
    }
    // X_{j-q+2} (when q >= 2) through X_{max(j+1, j+p)} must exist.
    let low_ok = q < 2 || j + 2 > q;
    let high = (j + 1).max(j + p);
    if !low_ok || high > len {
        return Err(Error::Bounds(format!(
            "H({p}, {j}, {q}) needs spacings X_{}..X_{high}, have X_1..X_{len}",
            (j + 2).saturating_sub(q).max(1)
        )));
    }
    Ok(())
}

/// Weighted right sum `sum_{i=1}^{k-1} (k-i) X_{j+i+1}` divided by `k`, for
/// `k = 1..=len`. Index 0 holds `k = 1`.
fn right_means(x: &[f64], j: usize, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let (mut partial, mut weighted) = (0.0, 0.0);
    for k in 1..=len {
        if k >= 2 {
            partial += x[j + k - 1]; // X_{j+k}
            weighted += partial;
        }
        out.push(weighted / k as f64);
    }
    out
}

/// Weighted left sum `sum_{i=1}^{l-1} (l-i) X_{j-i+1}` divided by `l`.
fn left_means(x: &[f64], j: usize, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let (mut partial, mut weighted) = (0.0, 0.0);
    for l in 1..=len {
        if l >= 2 {
            partial += x[j + 1 - l]; // X_{j-l+2}
            weighted += partial;
        }
        out.push(weighted / l as f64);
    }
    out
}

#[inline]
fn h_from_parts(right: f64, left: f64, center: f64, p: usize, q: usize) -> f64 {
    // single rounding step at the end keeps H == 1 exact for unit spacings
    2.0 * (right + left + center) / (p + q) as f64
}

pub fn h_value(p: usize, j: usize, q: usize, increments: &[f64]) -> Result<f64> {
    needed_range(p, j, q, increments.len())?;
    let right = right_means(increments, j, p)[p - 1];
    let left = left_means(increments, j, q)[q - 1];
    Ok(h_from_parts(right, left, increments[j], p, q))
}

/// `F_{p,j,q}(s)`, whose unique nonnegative root is `sqrt(H(p, j, q))`.
/// Evaluated term by term in the centred form, independently of [`h_value`].
pub fn f_value(p: usize, j: usize, q: usize, s: f64, increments: &[f64]) -> Result<f64> {
    needed_range(p, j, q, increments.len())?;
    let s2 = s * s;
    let x = |m: usize| increments[m - 1];
    let right: f64 = (1..p).map(|i| (p - i) as f64 * (x(j + i + 1) - s2)).sum::<f64>() / p as f64;
    let left: f64 = (1..q).map(|i| (q - i) as f64 * (x(j + 1 - i) - s2)).sum::<f64>() / q as f64;
    Ok(right + left + (x(j + 1) - s2))
}

fn minimize(x: &[f64], j: usize, right_max: usize, left_max: usize) -> MergeMinimizer {
    let right = right_means(x, j, right_max);
    let left = left_means(x, j, left_max);
    let center = x[j];
    let mut best = (f64::INFINITY, 1, 1);
    for (k, &r) in right.iter().enumerate() {
        for (l, &lm) in left.iter().enumerate() {
            let h = h_from_parts(r, lm, center, k + 1, l + 1);
            if h < best.0 {
                best = (h, k + 1, l + 1);
            }
        }
    }
    MergeMinimizer { j, time: math::sqrt(best.0), right_len: best.1, left_len: best.2 }
}

fn check_particle(j: usize, n: usize) -> Result<()> {
    if j == 0 || j >= n {
        return Err(Error::Bounds(format!("particle index {j} outside 1..{}", n - 1)));
    }
    Ok(())
}

/// Exact `T_{j,n}` with its minimising blocks, `O(n^2)`. Ties go to the
/// lexicographically smallest `(k, l)`.
pub fn merging_time(cfg: &Configuration, j: usize) -> Result<MergeMinimizer> {
    let n = cfg.n();
    check_particle(j, n)?;
    let x = cfg.spacings();
    Ok(minimize(&x, j, n - j, j))
}

/// All merging times, `O(n^3)`; refuses more than [`MAX_PARTICLES`].
pub fn all_merging_times(cfg: &Configuration) -> Result<MergingTimes> {
    let n = cfg.n();
    if n > MAX_PARTICLES {
        return Err(Error::Domain(format!(
            "the exact engine is capped at {MAX_PARTICLES} particles, got {n}"
        )));
    }
    let x = cfg.spacings();
    let times = (1..n).map(|j| minimize(&x, j, n - j, j).time).collect();
    MergingTimes::new(times)
}

/// `T_j^{(M)}` computed from the spacings of a finite configuration. The
/// window must fit on both sides: `M <= min(j, n - j)`.
pub fn windowed_time(cfg: &Configuration, j: usize, radius: usize) -> Result<WindowedTime> {
    let n = cfg.n();
    check_particle(j, n)?;
    let limit = j.min(n - j);
    if radius == 0 || radius > limit {
        return Err(Error::Window { j, radius, limit });
    }
    let x = cfg.spacings();
    let value = minimize(&x, j, radius, radius).time;
    Ok(WindowedTime { j, radius, value })
}

/// `K_n(t) = 1 + #{j : t < T_{j,n}}`.
pub fn count_clusters(times: &MergingTimes, t: f64) -> usize {
    1 + times.times.iter().filter(|&&tj| t < tj).count()
}

/// `T_n^last`, the time of the final collision.
pub fn last_collision(times: &MergingTimes) -> f64 {
    times.times.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_id, IncrementModel, ModelTag};
    use alloc::vec;

    fn cfg_from(x: Vec<f64>) -> Configuration {
        Configuration::from_increments(x, ModelTag::Id, 0).unwrap()
    }

    #[test]
    fn h_single_pair_is_center_spacing() {
        let x = [0.3, 0.7, 1.9, 0.2];
        for j in 0..3 {
            assert_eq!(h_value(1, j, 1, &x).unwrap(), x[j]);
        }
    }

    #[test]
    fn h_hand_expanded() {
        // p = 2, q = 1: (2/3)(X_{j+1} + X_{j+2}/2)
        let x = [9.0, 1.0, 4.0];
        assert_eq!(h_value(2, 1, 1, &x).unwrap(), 2.0);
        // p = 1, q = 3, j = 3: (2/4)(X_4 + (1/3)(2 X_3 + X_2))
        let x = [0.0, 3.0, 6.0, 1.0];
        let expected = 0.5 * (1.0 + (2.0 * 6.0 + 3.0) / 3.0);
        assert!((h_value(1, 3, 3, &x).unwrap() - expected).abs() < 1e-15);
        // p = 3, q = 2, j = 2: (2/5)((2 X_4 + X_5)/3 + X_2/2 + X_3)
        let x = [0.0, 2.0, 5.0, 3.0, 6.0];
        let expected = 0.4 * ((2.0 * 3.0 + 6.0) / 3.0 + 2.0 / 2.0 + 5.0);
        assert!((h_value(3, 2, 2, &x).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn h_is_one_for_unit_spacings() {
        let x = vec![1.0; 40];
        for p in 1..15 {
            for q in 1..15 {
                assert_eq!(h_value(p, 20, q, &x).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn h_bounds() {
        let x = [1.0, 1.0, 1.0];
        assert!(h_value(0, 1, 1, &x).is_err());
        assert!(h_value(3, 1, 1, &x).is_err()); // needs X_4
        assert!(h_value(1, 1, 3, &x).is_err()); // needs X_0
        assert!(h_value(2, 1, 2, &x).is_ok());
    }

    #[test]
    fn f_vanishes_at_sqrt_h() {
        let cfg = sample_id(&IncrementModel::exponential(), 30, 4).unwrap();
        let x = cfg.increments().unwrap();
        for (p, j, q) in [(1, 5, 1), (3, 10, 2), (7, 15, 9), (15, 15, 15)] {
            let s = h_value(p, j, q, x).unwrap().sqrt();
            assert!(f_value(p, j, q, s, x).unwrap().abs() < 1e-12);
            assert!(f_value(p, j, q, 0.0, x).unwrap() >= 0.0);
            assert!(f_value(p, j, q, s + 0.01, x).unwrap() < 0.0);
        }
    }

    #[test]
    fn two_body_closed_form() {
        let cfg = cfg_from(vec![0.0, 0.81]);
        let m = merging_time(&cfg, 1).unwrap();
        assert!((m.time - 0.9).abs() < 1e-15);
        assert_eq!((m.right_len, m.left_len), (1, 1));
        assert_eq!(m.first_cluster(), (1, 2));
        let times = all_merging_times(&cfg).unwrap();
        assert_eq!(last_collision(&times), times.as_slice()[0]);
    }

    #[test]
    fn deterministic_all_ones_exactly() {
        for n in [2, 3, 7, 64] {
            let cfg = sample_id(&IncrementModel::deterministic(), n, 0).unwrap();
            let times = all_merging_times(&cfg).unwrap();
            assert!(times.as_slice().iter().all(|&t| t == 1.0), "n = {n}");
            assert_eq!(last_collision(&times), 1.0);
            // lexicographic tie break: the smallest blocks win
            let m = merging_time(&cfg, n / 2).unwrap();
            assert_eq!((m.right_len, m.left_len), (1, 1));
        }
    }

    #[test]
    fn merging_time_bracketed_by_spacings() {
        let model = IncrementModel::uniform_interval(0.4).unwrap();
        for seed in 0..20 {
            let cfg = sample_id(&model, 40, seed).unwrap();
            let x = cfg.increments().unwrap();
            let times = all_merging_times(&cfg).unwrap();
            assert_eq!(times.as_slice().len(), 39);
            for (i, &t) in times.as_slice().iter().enumerate() {
                assert!(t >= model.mu().sqrt() && t <= x[i + 1].sqrt());
            }
        }
    }

    #[test]
    fn argmin_block_matches_time() {
        let cfg = sample_id(&IncrementModel::exponential(), 25, 8).unwrap();
        let x = cfg.increments().unwrap();
        for j in 1..25 {
            let m = merging_time(&cfg, j).unwrap();
            let h = h_value(m.right_len, j, m.left_len, x).unwrap();
            assert_eq!(h.sqrt(), m.time);
            let (a, b) = m.first_cluster();
            assert!(a <= j && j < b && b <= 25);
        }
    }

    #[test]
    fn windows_shrink_toward_full_time() {
        let cfg = sample_id(&IncrementModel::exponential(), 101, 21).unwrap();
        let x = cfg.increments().unwrap();
        let j = 50;
        let full = merging_time(&cfg, j).unwrap().time;
        let mut prev = f64::INFINITY;
        for m in 1..=50 {
            let w = windowed_time(&cfg, j, m).unwrap();
            assert!(w.value <= prev && w.value >= full);
            prev = w.value;
        }
        assert_eq!(windowed_time(&cfg, j, 1).unwrap().value, x[j].sqrt());
        assert!(windowed_time(&cfg, 3, 3).unwrap().value >= merging_time(&cfg, 3).unwrap().time);
        assert_eq!(
            windowed_time(&cfg, j, 52).unwrap_err(),
            Error::Window { j, radius: 52, limit: 50 }
        );
    }

    #[test]
    fn counting_clusters() {
        let times = MergingTimes::new(vec![0.5, 1.2, 0.8]).unwrap();
        assert_eq!(count_clusters(&times, 0.9), 2);
        assert_eq!(count_clusters(&times, 0.0), 4);
        assert_eq!(count_clusters(&times, 1.2), 1);
        assert_eq!(count_clusters(&times, 0.5), 3); // strict: merged at t = T
        assert_eq!(last_collision(&times), 1.2);
    }

    #[test]
    fn out_of_range_particles() {
        let cfg = cfg_from(vec![1.0, 1.0, 1.0]);
        assert!(merging_time(&cfg, 0).is_err());
        assert!(merging_time(&cfg, 3).is_err());
        assert!(windowed_time(&cfg, 3, 1).is_err());
    }
}
