//! Monte Carlo estimators for the limit laws of the cluster count.
//!
//! Every replicate draws from its own substream (see [`crate::rng`]) and
//! results are reduced in replicate order, so estimates do not depend on the
//! number of worker threads. With the `std` feature replicates run on the
//! current rayon pool.

mod counts;
mod merging;
mod walks;

pub use counts::{
    clt_check, coupled_cluster_counts, ecdf_k1, estimate_a, estimate_r, CltReport, CoupledCounts,
};
pub use merging::{last_collision_convergence, localization_decay, LastCollisionRow};
pub use walks::{
    check_drift_closed_form, check_product_formula, drift_target, estimate_pk, fit_c1,
    walk_survival, C1Fit, DriftReport, ProductReport,
};

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    /// Sample standard deviation over `sqrt(replicates)`.
    pub stderr: f64,
    pub replicates: usize,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let r = samples.len();
        if r < 2 {
            return Err(Error::Parameter(format!("need at least 2 replicates, got {r}")));
        }
        let mean = samples.iter().sum::<f64>() / r as f64;
        let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
        let sd = math::sqrt(ss / (r - 1) as f64);
        Ok(McEstimate { value: mean, stderr: sd / math::sqrt(r as f64), replicates: r })
    }

    /// Fraction of `true` outcomes.
    pub fn from_indicators(hits: impl IntoIterator<Item = bool>) -> Result<Self> {
        let samples: Vec<f64> = hits.into_iter().map(|h| if h { 1.0 } else { 0.0 }).collect();
        Self::from_samples(&samples)
    }

    /// `|self - other| / sqrt(se^2 + se'^2)` for independent estimates.
    pub fn z_distance(&self, other: &McEstimate) -> f64 {
        joint_z(self.value - other.value, &[self.stderr, other.stderr])
    }
}

/// `|difference|` in units of the root-sum-square of the given errors.
pub fn joint_z(difference: f64, stderrs: &[f64]) -> f64 {
    let se = math::sqrt(stderrs.iter().map(|s| s * s).sum());
    if se == 0.0 {
        if difference == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        difference.abs() / se
    }
}

/// `p_k`: probability that the integrated centered exponential walk stays
/// non-negative for `k` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PkEstimate {
    pub k: usize,
    pub p_hat: f64,
    /// Binomial standard error `sqrt(p (1 - p) / replicates)`.
    pub stderr: f64,
    pub replicates: usize,
}

/// Path covariance `Cov(K_n(s), K_n(t)) / n` with a jackknife standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovEstimate {
    pub s: f64,
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
}

/// Empirical law of `K_n(1) / sqrt(n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EcdfEstimate {
    n: usize,
    counts: Vec<usize>,
    sorted: Vec<f64>,
}

impl EcdfEstimate {
    /// `counts` in replicate order.
    pub fn from_counts(n: usize, counts: Vec<usize>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::Parameter(format!("need at least 2 replicates, got {}", counts.len())));
        }
        let scale = 1.0 / math::sqrt(n as f64);
        let mut sorted: Vec<f64> = counts.iter().map(|&k| k as f64 * scale).collect();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(EcdfEstimate { n, counts, sorted })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn replicates(&self) -> usize {
        self.counts.len()
    }

    /// Cluster counts in replicate order.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    /// `F(x)`, the fraction of values `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    fn scaled(&self) -> Vec<f64> {
        let scale = 1.0 / math::sqrt(self.n as f64);
        self.counts.iter().map(|&k| k as f64 * scale).collect()
    }

    pub fn mean(&self) -> McEstimate {
        McEstimate::from_samples(&self.scaled()).expect("at least 2 replicates")
    }

    pub fn second_moment(&self) -> McEstimate {
        let sq: Vec<f64> = self.scaled().iter().map(|v| v * v).collect();
        McEstimate::from_samples(&sq).expect("at least 2 replicates")
    }

    /// Fraction of replicates where everything has collapsed into one cluster.
    pub fn single_cluster(&self) -> McEstimate {
        McEstimate::from_indicators(self.counts.iter().map(|&k| k == 1)).expect("at least 2 replicates")
    }

    /// Sup-norm distance between two empirical distribution functions.
    pub fn sup_distance(&self, other: &EcdfEstimate) -> f64 {
        sup_distance(&self.sorted, &other.sorted)
    }

    /// Sup distance between the first and second halves of the replicates.
    /// Two independent halves exceed `2 sqrt(ln(2/0.01) / replicates)` with
    /// probability well under 1%.
    pub fn half_split_distance(&self) -> f64 {
        let values = self.scaled();
        let (a, b) = values.split_at(values.len() / 2);
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_unstable_by(f64::total_cmp);
        b.sort_unstable_by(f64::total_cmp);
        sup_distance(&a, &b)
    }

    /// The jump points `(x, F(x))`, one row per distinct value.
    pub fn table(&self) -> Vec<(f64, f64)> {
        let total = self.sorted.len() as f64;
        let mut rows = Vec::new();
        for (i, &x) in self.sorted.iter().enumerate() {
            if self.sorted.get(i + 1) != Some(&x) {
                rows.push((x, (i + 1) as f64 / total));
            }
        }
        rows
    }
}

/// Sup-norm distance between the ECDFs of two sorted samples.
pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

pub(crate) fn check_replicates(replicates: usize, min: usize) -> Result<()> {
    if replicates < min {
        Err(Error::Parameter(format!("need at least {min} replicates, got {replicates}")))
    } else {
        Ok(())
    }
}

/// Evaluates `f(replicate)` for every replicate, in parallel when available,
/// returning results in replicate order.
pub(crate) fn run_replicates<T, F>(replicates: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        (0..replicates as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "std"))]
    {
        (0..replicates as u64).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn estimate_matches_hand_computation() {
        let e = McEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(e.value, 2.5);
        // sample variance 5/3
        assert!((e.stderr - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert!(McEstimate::from_samples(&[1.0]).is_err());
        let p = McEstimate::from_indicators([true, false, false, false]).unwrap();
        assert_eq!(p.value, 0.25);
    }

    #[test]
    fn ecdf_basics() {
        let e = EcdfEstimate::from_counts(4, vec![2, 1, 2, 4]).unwrap();
        assert_eq!(e.sorted_values(), &[0.5, 1.0, 1.0, 2.0]);
        assert_eq!(e.eval(0.4), 0.0);
        assert_eq!(e.eval(0.5), 0.25);
        assert_eq!(e.eval(1.5), 0.75);
        assert_eq!(e.eval(f64::INFINITY), 1.0);
        assert_eq!(e.table(), vec![(0.5, 0.25), (1.0, 0.75), (2.0, 1.0)]);
        assert_eq!(e.single_cluster().value, 0.25);
        assert_eq!(e.mean().value, 1.125);
        assert_eq!(e.sup_distance(&e), 0.0);
    }

    #[test]
    fn sup_distance_of_disjoint_and_shifted_samples() {
        assert_eq!(sup_distance(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
        assert_eq!(sup_distance(&[0.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]), 0.25);
    }

    #[test]
    fn joint_z_handles_zero_error() {
        assert_eq!(joint_z(0.0, &[0.0, 0.0]), 0.0);
        assert_eq!(joint_z(1.0, &[0.0]), f64::INFINITY);
        assert_eq!(joint_z(-5.0, &[3.0, 4.0]), 1.0);
    }
}
