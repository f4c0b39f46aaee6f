//! Seeded noise models used to corrupt synthetic pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Raster;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseKind {
    SaltPepper,
    Speckle,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::SaltPepper => "salt_pepper",
            NoiseKind::Speckle => "speckle",
        }
    }
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "salt_pepper" | "salt-pepper" | "sp" => Ok(NoiseKind::SaltPepper),
            "speckle" => Ok(NoiseKind::Speckle),
            other => Err(Error::InvalidParameter(format!(
                "unknown noise kind '{other}'"
            ))),
        }
    }
}

/// Noise model and level: density `d` for salt & pepper, variance `v` for speckle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub level: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, level: f64, seed: u64) -> Result<Self> {
        let spec = Self { kind, level, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NoiseKind::SaltPepper => check_density(self.level),
            NoiseKind::Speckle => check_variance(self.level),
        }
    }
}

/// Shape of the multiplicative speckle term `n` in `I * (1 + n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpeckleDistribution {
    /// Uniform on `[-sqrt(3v), sqrt(3v)]`.
    #[default]
    Uniform,
    /// Normal with variance `v`.
    Gaussian,
}

pub fn apply_noise(r: &Raster, spec: &NoiseSpec) -> Result<Raster> {
    match spec.kind {
        NoiseKind::SaltPepper => add_salt_pepper(r, spec.level, spec.seed),
        NoiseKind::Speckle => add_speckle(r, spec.level, spec.seed),
    }
}

fn check_density(d: f64) -> Result<()> {
    if d > 0.0 && d <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "salt & pepper density {d} outside (0, 1]"
        )))
    }
}

fn check_variance(v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "speckle variance {v} must be positive"
        )))
    }
}

/// Replaces each pixel with probability `d` by 0 or 255 (equally likely).
/// Untouched pixels keep their exact input value.
pub fn add_salt_pepper(r: &Raster, d: f64, seed: u64) -> Result<Raster> {
    check_density(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(r.map(|v| {
        if rng.random::<f64>() < d {
            if rng.random::<bool>() {
                255.0
            } else {
                0.0
            }
        } else {
            v
        }
    }))
}

/// Multiplicative uniform speckle `I * (1 + n)`, `Var(n) = v`, clamped to `[0, 255]`.
pub fn add_speckle(r: &Raster, v: f64, seed: u64) -> Result<Raster> {
    add_speckle_with(r, v, seed, SpeckleDistribution::Uniform)
}

pub fn add_speckle_with(
    r: &Raster,
    v: f64,
    seed: u64,
    dist: SpeckleDistribution,
) -> Result<Raster> {
    check_variance(v)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = match dist {
        SpeckleDistribution::Uniform => {
            let half_width = (3.0 * v).sqrt();
            r.map(|p| p * (1.0 + rng.random_range(-half_width..=half_width)))
        }
        SpeckleDistribution::Gaussian => {
            let normal = Normal::new(0.0, v.sqrt()).expect("finite positive std");
            r.map(|p| p * (1.0 + normal.sample(&mut rng)))
        }
    };
    Ok(out.map(|p| p.clamp(0.0, 255.0)))
}
