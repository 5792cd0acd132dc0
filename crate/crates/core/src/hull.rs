//! Cluster counts from the lower convex hull of a quadratic-shifted prefix sum.
//!
//! Let `C_i` be the sum of the first `i` initial positions and
//! `phi_i = C_i - t^2 i^2 / (2n)`. The free-flight barycenters of the blocks
//! `(l, j]` and `(j, k]` satisfy
//!
//! ```text
//! x*_(j,k](t) - x*_(l,j](t) = slope_phi(j -> k) - slope_phi(l -> j)
//! ```
//!
//! so the boundary `j | j+1` has merged by time `t` exactly when some pair
//! `l < j < k` makes this difference non-positive, that is when `j` is not a
//! strict vertex of the lower hull of `{(i, phi_i)}`. `K_n(t)` is then the
//! number of hull edges.
//!
//! Prefix sums are kept in double-double so that block sums are accurate to
//! working precision even when `C_n` is large. Slope comparisons use a
//! relative tolerance of `1e-12` and count ties as merged.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::Configuration;

/// Relative tolerance in slope comparisons.
pub const SLOPE_TOLERANCE: f64 = 1e-12;

/// Tolerance of the predicate bisected by [`HullProfile::merging_time_bisect`].
/// It only has to absorb rounding; with [`SLOPE_TOLERANCE`] the located time
/// would be biased low by up to about `1e-12` relative.
const BISECTION_TOLERANCE: f64 = 16.0 * f64::EPSILON;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Prefix sums `C_0..C_n` of the initial positions.
#[derive(Clone, Debug, PartialEq)]
pub struct HullProfile {
    positions: Vec<f64>,
    hi: Vec<f64>,
    lo: Vec<f64>,
}

/// A block's shifted sum `C_b - C_a - t^2 (b^2 - a^2) / (2n)` with the magnitude
/// of its two parts, used to scale the tie tolerance.
#[derive(Clone, Copy, Debug)]
struct Block {
    value: f64,
    scale: f64,
}

impl HullProfile {
    pub fn new(positions: &[f64]) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::TooFewParticles(positions.len()));
        }
        if let Some(i) = positions.iter().position(|x| !x.is_finite()) {
            return Err(Error::Parameter(format!("position {} is not finite", i + 1)));
        }
        if let Some(i) = positions.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Unsorted(i + 2));
        }
        let n = positions.len();
        let mut hi = Vec::with_capacity(n + 1);
        let mut lo = Vec::with_capacity(n + 1);
        hi.push(0.0);
        lo.push(0.0);
        let (mut s, mut e) = (0.0, 0.0);
        for &x in positions {
            let (sum, err) = two_sum(s, x);
            let (fixed, carry) = two_sum(sum, e + err);
            s = fixed;
            e = carry;
            hi.push(s);
            lo.push(e);
        }
        Ok(HullProfile { positions: positions.to_vec(), hi, lo })
    }

    pub fn from_configuration(cfg: &Configuration) -> Self {
        Self::new(cfg.positions()).expect("configurations hold sorted finite positions")
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    /// `C_0..C_n` rounded to double precision.
    pub fn prefix(&self) -> &[f64] {
        &self.hi
    }

    #[inline]
    fn block(&self, a: usize, b: usize, half_t2_over_n: f64) -> Block {
        let sum = (self.hi[b] - self.hi[a]) + (self.lo[b] - self.lo[a]);
        let q = half_t2_over_n * ((b - a) as f64) * ((b + a) as f64);
        Block { value: sum - q, scale: sum.abs() + q.abs() }
    }

    /// Whether the slope into `b` from `a` is at least the slope out of `b`
    /// to `c`, ties included.
    #[inline]
    fn not_convex(&self, a: usize, b: usize, c: usize, h: f64) -> bool {
        let left = self.block(a, b, h);
        let right = self.block(b, c, h);
        let (wl, wr) = ((c - b) as f64, (b - a) as f64);
        left.value * wl >= right.value * wr - SLOPE_TOLERANCE * (left.scale * wl + right.scale * wr)
    }

    /// Cluster count with `t^2` supplied directly, so tests can hit exact ties.
    pub(crate) fn count_for_t2(&self, t2: f64) -> usize {
        let n = self.n();
        let h = 0.5 * t2 / n as f64;
        let mut stack: Vec<usize> = Vec::with_capacity(n + 1);
        for c in 0..=n {
            while stack.len() >= 2 {
                let b = stack[stack.len() - 1];
                let a = stack[stack.len() - 2];
                if self.not_convex(a, b, c, h) {
                    stack.pop();
                } else {
                    break;
                }
            }
            stack.push(c);
        }
        stack.len() - 1
    }

    /// `K_n(t)`, the number of clusters at time `t`.
    pub fn cluster_count_at(&self, t: f64) -> usize {
        self.count_for_t2(t * t)
    }

    /// `cluster_count_at` over an ascending grid.
    pub fn cluster_count_curve(&self, grid: &[f64]) -> Vec<usize> {
        grid.iter().map(|&t| self.cluster_count_at(t)).collect()
    }

    /// Whether the boundary `j | j+1` has merged by time `t`.
    pub fn is_merged(&self, j: usize, t: f64) -> Result<bool> {
        self.check_boundary(j)?;
        Ok(self.merged_within(j, t, SLOPE_TOLERANCE))
    }

    fn check_boundary(&self, j: usize) -> Result<()> {
        let n = self.n();
        if j == 0 || j >= n {
            Err(Error::Bounds(format!("boundary {j} outside 1..={}", n - 1)))
        } else {
            Ok(())
        }
    }

    /// Merge predicate for one boundary, evaluated on positions relative to
    /// `x_j` so rounding scales with the local spacings rather than with `C_n`.
    /// Compares the steepest mean slope arriving at `j` with the shallowest
    /// one leaving it.
    fn merged_within(&self, j: usize, t: f64, tolerance: f64) -> bool {
        let n = self.n();
        let x = &self.positions;
        let xj = x[j - 1];
        let c = 0.5 * t * t / n as f64;
        let (mut left, mut left_scale) = (f64::NEG_INFINITY, 0.0);
        let (mut acc, mut acc_abs) = (0.0, 0.0);
        for u in 1..=j {
            let d = x[j - u] - xj;
            acc += d;
            acc_abs += d.abs();
            let w = u as f64;
            let v = acc / w + c * w;
            if v > left {
                left = v;
                left_scale = acc_abs / w + c * w;
            }
        }
        let (mut right, mut right_scale) = (f64::INFINITY, 0.0);
        let (mut acc, mut acc_abs) = (0.0, 0.0);
        for v in 1..=n - j {
            let d = x[j + v - 1] - xj;
            acc += d;
            acc_abs += d.abs();
            let w = v as f64;
            let s = acc / w - c * w;
            if s < right {
                right = s;
                right_scale = acc_abs / w + c * w;
            }
        }
        left >= right - tolerance * (left_scale + right_scale)
    }

    /// `T_{j,n}` to within `tol` by bisecting the merge predicate between
    /// `sqrt(min spacing)` and `sqrt(X_{j+1})`.
    pub fn merging_time_bisect(&self, j: usize, tol: f64) -> Result<f64> {
        self.check_boundary(j)?;
        let n = self.n();
        if !(tol > 0.0) {
            return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
        }
        let scale = n as f64;
        let spacing = |m: usize| scale * (self.positions[m] - self.positions[m - 1]);
        let min_spacing = (1..n).map(spacing).fold(f64::INFINITY, f64::min);
        let mut lo = math::sqrt(min_spacing.max(0.0)) * (1.0 - 1e-9);
        let mut hi = math::sqrt(spacing(j)) * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        let merged = |t: f64| self.merged_within(j, t, BISECTION_TOLERANCE);
        if merged(lo) {
            return Ok(lo);
        }
        if !merged(hi) {
            return Err(Error::Consistency(format!("boundary {j} not merged at upper bracket {hi}")));
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if merged(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact;
    use crate::model::{sample_id, IncrementModel, ModelTag};
    use alloc::vec;

    #[test]
    fn prefix_is_cumulative() {
        let p = HullProfile::new(&[0.1, 0.2, 0.7]).unwrap();
        assert_eq!(p.prefix().len(), 4);
        assert_eq!(p.prefix()[0], 0.0);
        assert!((p.prefix()[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(HullProfile::new(&[0.5]), Err(Error::TooFewParticles(1))));
        assert!(matches!(HullProfile::new(&[0.5, 0.2]), Err(Error::Unsorted(2))));
    }

    #[test]
    fn deterministic_counts() {
        for n in [2usize, 5, 100] {
            let cfg = sample_id(&IncrementModel::deterministic(), n, 0).unwrap();
            let p = HullProfile::from_configuration(&cfg);
            for t in [0.0, 0.5, 0.99] {
                assert_eq!(p.cluster_count_at(t), n, "n = {n}, t = {t}");
            }
            assert_eq!(p.cluster_count_at(1.0), 1);
            assert_eq!(p.cluster_count_at(2.0), 1);
            for j in 1..n {
                let t = p.merging_time_bisect(j, 1e-12).unwrap();
                assert!((t - 1.0).abs() <= 1e-12, "n = {n}, j = {j}: {t}");
            }
        }
    }

    #[test]
    fn integer_lattice_ties_count_as_merged() {
        // positions 1..n scaled by n: the collapse happens at t^2 = n exactly
        for n in [4usize, 9, 16, 25, 100] {
            let positions: Vec<f64> = (1..=n).map(|i| i as f64).collect();
            let p = HullProfile::new(&positions).unwrap();
            let tie = n as f64;
            assert_eq!(p.count_for_t2(tie), 1, "n = {n}");
            assert_eq!(p.count_for_t2(tie * (1.0 - 1e-9)), n);
            assert_eq!(p.cluster_count_at(math::sqrt(tie)), 1);
            assert!(p.is_merged(n / 2, math::sqrt(tie)).unwrap());
        }
    }

    #[test]
    fn two_particles() {
        let cfg = Configuration::from_positions(vec![0.0, 0.405], ModelTag::Id, 0).unwrap();
        let p = HullProfile::from_configuration(&cfg);
        assert!((p.merging_time_bisect(1, 1e-12).unwrap() - 0.9).abs() < 1e-11);
        assert_eq!(p.cluster_count_at(0.89), 2);
        assert_eq!(p.cluster_count_at(0.91), 1);
    }

    #[test]
    fn agrees_with_exact_counts() {
        for seed in 0..40 {
            let cfg = sample_id(&IncrementModel::exponential(), 24, seed).unwrap();
            let p = HullProfile::from_configuration(&cfg);
            let times = exact::all_merging_times(&cfg).unwrap();
            let grid: Vec<f64> = (0..=28).map(|i| 0.05 * i as f64).collect();
            let curve = p.cluster_count_curve(&grid);
            for (&t, &k) in grid.iter().zip(&curve) {
                assert_eq!(k, exact::count_clusters(&times, t), "seed {seed}, t = {t}");
            }
            assert!(curve.windows(2).all(|w| w[0] >= w[1]));
            for j in 1..24 {
                let bisect = p.merging_time_bisect(j, 1e-10).unwrap();
                assert!((bisect - times.get(j).unwrap()).abs() < 1e-9, "seed {seed}, j = {j}");
            }
        }
    }

    #[test]
    fn out_of_range_boundary() {
        let p = HullProfile::new(&[0.0, 0.5, 1.0]).unwrap();
        assert!(p.is_merged(0, 0.5).is_err());
        assert!(p.merging_time_bisect(3, 1e-9).is_err());
        assert!(p.merging_time_bisect(1, 0.0).is_err());
    }
}
