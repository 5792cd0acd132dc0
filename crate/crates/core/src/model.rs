//! Initial configurations.
//!
//! Index convention used throughout the crate: particle `j` (1-based, as in
//! the formulas) sits at `positions[j - 1]`, and the spacing `X_m` preceding
//! particle `m` is `increments[m - 1]`. In the i.d. models
//! `positions[j - 1] = (X_1 + ... + X_j) / n`.

use alloc::borrow::Cow;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::{self, StreamRng};

/// Law of a single spacing `X_i`. Every kind has mean exactly 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IncrementKind {
    /// Standard exponential; the Poisson model.
    Exponential,
    /// Uniform on `[lower, 2 - lower]`, `0 <= lower < 1`.
    UniformInterval { lower: f64 },
    /// `X_i = 1`; particles on the lattice `1/n, 2/n, ..., 1`.
    Deterministic,
    /// `floor + (1 - floor) * Y` with `Y` Lomax (Pareto II) of shape
    /// `tail_index` and scale `tail_index - 1`, so `E Y = 1`. Moments of order
    /// below `tail_index` are finite.
    ParetoShifted { tail_index: f64, floor: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncrementModel {
    kind: IncrementKind,
    mu: f64,
}

impl IncrementModel {
    pub fn exponential() -> Self {
        IncrementModel { kind: IncrementKind::Exponential, mu: 0.0 }
    }

    pub fn deterministic() -> Self {
        IncrementModel { kind: IncrementKind::Deterministic, mu: 1.0 }
    }

    pub fn uniform_interval(lower: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lower) {
            return Err(Error::Parameter(format!(
                "uniform interval lower end must lie in [0, 1), got {lower}"
            )));
        }
        Ok(IncrementModel { kind: IncrementKind::UniformInterval { lower }, mu: lower })
    }

    pub fn pareto_shifted(tail_index: f64, floor: f64) -> Result<Self> {
        if !(tail_index > 1.0) || !tail_index.is_finite() {
            return Err(Error::Parameter(format!(
                "tail index must be finite and > 1 for a unit mean, got {tail_index}"
            )));
        }
        if !(0.0..1.0).contains(&floor) {
            return Err(Error::Parameter(format!("floor must lie in [0, 1), got {floor}")));
        }
        Ok(IncrementModel { kind: IncrementKind::ParetoShifted { tail_index, floor }, mu: floor })
    }

    pub fn kind(&self) -> IncrementKind {
        self.kind
    }

    /// Essential infimum of the law.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mean(&self) -> f64 {
        1.0
    }

    /// Supremum of the orders `g` with `E X^g < inf`.
    pub fn finite_moment_order(&self) -> f64 {
        match self.kind {
            IncrementKind::ParetoShifted { tail_index, .. } => tail_index,
            _ => f64::INFINITY,
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self.kind, IncrementKind::Deterministic)
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            IncrementKind::Exponential => rng::standard_exponential(rng),
            IncrementKind::Deterministic => 1.0,
            IncrementKind::UniformInterval { lower } => {
                lower + (2.0 - 2.0 * lower) * rng::open_unit(rng)
            }
            IncrementKind::ParetoShifted { tail_index, floor } => {
                let u = rng::open_unit(rng);
                let lomax = (tail_index - 1.0) * (math::powf(u, -1.0 / tail_index) - 1.0);
                floor + (1.0 - floor) * lomax
            }
        }
    }
}

/// Which family produced a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelTag {
    Id,
    Poisson,
    Uniform,
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTag::Id => "id",
            ModelTag::Poisson => "poisson",
            ModelTag::Uniform => "uniform",
        })
    }
}

/// A model of initial positions: i.i.d. spacings, or uniform order statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelSpec {
    Id(IncrementModel),
    Uniform,
}

impl ModelSpec {
    pub fn poisson() -> Self {
        ModelSpec::Id(IncrementModel::exponential())
    }

    pub fn tag(&self) -> ModelTag {
        match self {
            ModelSpec::Id(m) if m.kind == IncrementKind::Exponential => ModelTag::Poisson,
            ModelSpec::Id(_) => ModelTag::Id,
            ModelSpec::Uniform => ModelTag::Uniform,
        }
    }

    /// Essential infimum of the spacings; 0 for the uniform model.
    pub fn mu(&self) -> f64 {
        match self {
            ModelSpec::Id(m) => m.mu(),
            ModelSpec::Uniform => 0.0,
        }
    }

    pub fn is_continuous(&self) -> bool {
        match self {
            ModelSpec::Id(m) => m.is_continuous(),
            ModelSpec::Uniform => true,
        }
    }

    /// `a(t) = 1 - t^2` on `[0, 1]` and 0 after, known for the two main models.
    pub fn limit_fraction(&self, t: f64) -> Option<f64> {
        match self.tag() {
            ModelTag::Poisson | ModelTag::Uniform => {
                Some(if t <= 1.0 { 1.0 - t * t } else { 0.0 })
            }
            ModelTag::Id => None,
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Configuration> {
        match self {
            ModelSpec::Id(m) => sample_id(m, n, seed),
            ModelSpec::Uniform => sample_uniform(n, seed),
        }
    }
}

/// One sampled initial condition. Every particle has mass `1/n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    positions: Vec<f64>,
    increments: Option<Vec<f64>>,
    model_tag: ModelTag,
    seed: u64,
}

impl Configuration {
    /// Builds the i.d. configuration `positions[j - 1] = S_j / n`.
    pub fn from_increments(increments: Vec<f64>, model_tag: ModelTag, seed: u64) -> Result<Self> {
        let n = increments.len();
        if n < 2 {
            return Err(Error::TooFewParticles(n));
        }
        if let Some(i) = increments.iter().position(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::Parameter(format!("increment {} is {}", i + 1, increments[i])));
        }
        let scale = n as f64;
        let mut s = 0.0;
        let positions = increments
            .iter()
            .map(|x| {
                s += x;
                s / scale
            })
            .collect();
        Ok(Configuration { positions, increments: Some(increments), model_tag, seed })
    }

    /// A configuration given directly by its (nondecreasing) positions.
    pub fn from_positions(positions: Vec<f64>, model_tag: ModelTag, seed: u64) -> Result<Self> {
        let n = positions.len();
        if n < 2 {
            return Err(Error::TooFewParticles(n));
        }
        if let Some(i) = positions.iter().position(|x| !x.is_finite()) {
            return Err(Error::Parameter(format!("position {} is {}", i + 1, positions[i])));
        }
        if let Some(i) = positions.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Unsorted(i + 1));
        }
        Ok(Configuration { positions, increments: None, model_tag, seed })
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn particle_mass(&self) -> f64 {
        1.0 / self.n() as f64
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// The sampled spacings, when the configuration was built from them.
    pub fn increments(&self) -> Option<&[f64]> {
        self.increments.as_deref()
    }

    /// `X_1..X_n`: stored increments, or `n` times consecutive position
    /// differences (measured from the origin for `X_1`).
    pub fn spacings(&self) -> Cow<'_, [f64]> {
        match &self.increments {
            Some(x) => Cow::Borrowed(x),
            None => {
                let scale = self.n() as f64;
                let mut prev = 0.0;
                Cow::Owned(
                    self.positions
                        .iter()
                        .map(|&x| {
                            let d = scale * (x - prev);
                            prev = x;
                            d
                        })
                        .collect(),
                )
            }
        }
    }

    pub fn model_tag(&self) -> ModelTag {
        self.model_tag
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Mass-weighted mean position.
    pub fn barycenter(&self) -> f64 {
        self.positions.iter().sum::<f64>() / self.n() as f64
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::TooFewParticles(n))
    } else {
        Ok(())
    }
}

fn draw_increments(model: &IncrementModel, count: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..count).map(|_| model.sample(rng)).collect()
}

/// Particles at `S_1/n, ..., S_n/n` with i.i.d. spacings from `model`.
pub fn sample_id(model: &IncrementModel, n: usize, seed: u64) -> Result<Configuration> {
    check_n(n)?;
    let mut rng = rng::rng_from_seed(seed);
    let tag = ModelSpec::Id(*model).tag();
    Configuration::from_increments(draw_increments(model, n, &mut rng), tag, seed)
}

/// Order statistics of `n` independent uniforms on `[0, 1]`.
pub fn sample_uniform(n: usize, seed: u64) -> Result<Configuration> {
    check_n(n)?;
    let mut rng = rng::rng_from_seed(seed);
    let mut positions: Vec<f64> = (0..n).map(|_| rng::open_unit(&mut rng)).collect();
    positions.sort_unstable_by(f64::total_cmp);
    Configuration::from_positions(positions, ModelTag::Uniform, seed)
}

/// A Poisson configuration together with the extra spacing `X_{n+1}` needed
/// to couple it to the uniform model. The first `n` spacings are exactly
/// those of `sample_id(exponential, n, seed)`.
pub fn sample_poisson_coupled(n: usize, seed: u64) -> Result<(Configuration, f64)> {
    check_n(n)?;
    let model = IncrementModel::exponential();
    let mut rng = rng::rng_from_seed(seed);
    let increments = draw_increments(&model, n, &mut rng);
    let extra = model.sample(&mut rng);
    Ok((Configuration::from_increments(increments, ModelTag::Poisson, seed)?, extra))
}

/// Rescales a Poisson configuration by `n / S_{n+1}`, which yields uniform
/// order statistics independent of `S_{n+1}`. Returns the uniform
/// configuration and `beta_n = sqrt(S_{n+1} / n)`; merging times then satisfy
/// `T_unif = T_poisson / beta_n` exactly.
pub fn couple_uniform_from_poisson(
    poisson: &Configuration,
    extra_increment: f64,
) -> Result<(Configuration, f64)> {
    if poisson.model_tag() != ModelTag::Poisson {
        return Err(Error::ModelMismatch { expected: ModelTag::Poisson, found: poisson.model_tag() });
    }
    if !(extra_increment > 0.0) || !extra_increment.is_finite() {
        return Err(Error::Parameter(format!(
            "extra increment must be positive, got {extra_increment}"
        )));
    }
    let n = poisson.n() as f64;
    let total = poisson.spacings().iter().sum::<f64>() + extra_increment;
    let scale = n / total;
    let positions = poisson.positions().iter().map(|x| x * scale).collect();
    let uniform = Configuration::from_positions(positions, ModelTag::Uniform, poisson.seed())?;
    Ok((uniform, math::sqrt(total / n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_lattice() {
        let cfg = sample_id(&IncrementModel::deterministic(), 4, 99).unwrap();
        assert_eq!(cfg.positions(), &[0.25, 0.5, 0.75, 1.0]);
        assert_eq!(cfg.model_tag(), ModelTag::Id);
    }

    #[test]
    fn exponential_is_reproducible_and_centered() {
        let m = IncrementModel::exponential();
        let a = sample_id(&m, 1000, 12345).unwrap();
        let b = sample_id(&m, 1000, 12345).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.model_tag(), ModelTag::Poisson);
        let mean = a.increments().unwrap().iter().sum::<f64>() / 1000.0;
        assert!((mean - 1.0).abs() < 4.0 / 1000f64.sqrt(), "mean {mean}");
    }

    #[test]
    fn uniform_sorted_and_balanced() {
        let two = sample_uniform(2, 5).unwrap();
        assert!(two.positions()[0] <= two.positions()[1]);

        let cfg = sample_uniform(10_000, 77).unwrap();
        let below = cfg.positions().iter().filter(|&&x| x <= 0.5).count() as f64 / 10_000.0;
        assert!((below - 0.5).abs() < 0.02, "fraction {below}");
        assert!(cfg.increments().is_none());
    }

    #[test]
    fn uniform_is_sorted_raw_draws() {
        let cfg = sample_uniform(3, 2024).unwrap();
        let mut rng = rng::rng_from_seed(2024);
        let mut raw: Vec<f64> = (0..3).map(|_| rng::open_unit(&mut rng)).collect();
        raw.sort_by(f64::total_cmp);
        assert_eq!(cfg.positions(), raw.as_slice());
    }

    #[test]
    fn spacings_respect_support() {
        let models = [
            IncrementModel::uniform_interval(0.3).unwrap(),
            IncrementModel::pareto_shifted(5.0, 0.2).unwrap(),
            IncrementModel::exponential(),
        ];
        for m in models {
            let cfg = sample_id(&m, 5000, 1).unwrap();
            let min = cfg.increments().unwrap().iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= m.mu(), "{m:?}: min {min}");
            assert!(cfg.positions().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn pareto_mean_is_one() {
        let m = IncrementModel::pareto_shifted(6.0, 0.1).unwrap();
        let mut rng = rng::rng_from_seed(11);
        let k = 400_000;
        let mean = (0..k).map(|_| m.sample(&mut rng)).sum::<f64>() / k as f64;
        // sd of the Lomax(6, 5) part is sqrt(6/4) ~ 1.22, scaled by 0.9
        assert!((mean - 1.0).abs() < 5.0 * 1.11 / (k as f64).sqrt(), "mean {mean}");
        assert_eq!(m.finite_moment_order(), 6.0);
        assert_eq!(IncrementModel::exponential().finite_moment_order(), f64::INFINITY);
    }

    #[test]
    fn invalid_parameters() {
        assert!(IncrementModel::uniform_interval(1.0).is_err());
        assert!(IncrementModel::uniform_interval(-0.1).is_err());
        assert!(IncrementModel::pareto_shifted(1.0, 0.0).is_err());
        assert!(IncrementModel::pareto_shifted(3.0, 1.0).is_err());
        assert_eq!(sample_uniform(1, 0), Err(Error::TooFewParticles(1)));
        assert!(sample_id(&IncrementModel::exponential(), 0, 0).is_err());
    }

    #[test]
    fn coupling_scales_into_unit_interval() {
        let (p, extra) = sample_poisson_coupled(500, 3).unwrap();
        let (u, beta) = couple_uniform_from_poisson(&p, extra).unwrap();
        assert!(u.positions().iter().all(|&x| x > 0.0 && x < 1.0));
        let total = p.increments().unwrap().iter().sum::<f64>() + extra;
        assert!((beta - (total / 500.0).sqrt()).abs() < 1e-15);
        assert_eq!(sample_id(&IncrementModel::exponential(), 500, 3).unwrap(), p);
    }

    #[test]
    fn coupling_identity_scale() {
        // S_{n+1} = n exactly: beta = 1, positions unchanged
        let p = Configuration::from_increments(vec![0.5, 1.5, 1.0, 0.25], ModelTag::Poisson, 0)
            .unwrap();
        let (u, beta) = couple_uniform_from_poisson(&p, 0.75).unwrap();
        assert_eq!(beta, 1.0);
        assert_eq!(u.positions(), p.positions());
    }

    #[test]
    fn coupling_rejects_other_models() {
        let cfg = sample_uniform(10, 1).unwrap();
        assert_eq!(
            couple_uniform_from_poisson(&cfg, 1.0).unwrap_err(),
            Error::ModelMismatch { expected: ModelTag::Poisson, found: ModelTag::Uniform }
        );
    }

    #[test]
    fn uniform_spacings_from_positions() {
        let cfg = Configuration::from_positions(vec![0.1, 0.3, 0.7], ModelTag::Uniform, 0).unwrap();
        let s = cfg.spacings();
        let expected = [0.3, 0.6, 1.2];
        for (a, b) in s.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(
            Configuration::from_positions(vec![0.2, 0.1], ModelTag::Uniform, 0),
            Err(Error::Unsorted(1))
        );
    }
}
