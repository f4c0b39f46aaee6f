//! Two-class analysis of a difference image.
//!
//! Class index 0 is *unchanged*, index 1 is *changed*; the changed class is
//! always the one with the brighter mean, since the difference operators make
//! change bright. [`fcm`] is plain fuzzy c-means. [`mrffcm`] initializes from
//! a Kittler-Illingworth split and FCM, then alternates MRF prior,
//! Gaussian distance and membership updates until the objective settles.

mod fcm;
mod ki;
mod mrffcm;

pub use fcm::{fcm, fcm_with_centroids, FcmOutcome, FcmParams};
pub use ki::{init_class_stats, ki_threshold, ki_threshold_with_floor};
pub use mrffcm::{mrffcm, EnergySign, Mrffcm, MrffcmParams, MrffcmState};

use crate::raster::{BinaryMap, Label, Raster};
use crate::{Error, Result};

pub const UNCHANGED: usize = 0;
pub const CHANGED: usize = 1;

/// Default lower bound for class standard deviations, in DI units.
pub const STD_FLOOR: f64 = 1e-3;
/// Default lower bound applied inside `-ln(mean_partition)`.
pub const P_FLOOR: f64 = 1e-12;

const NEIGHBOURS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Per-class Gaussian parameters of the DI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStats {
    pub mean_u: f64,
    pub std_u: f64,
    pub mean_c: f64,
    pub std_c: f64,
}

impl ClassStats {
    #[inline]
    pub fn mean(&self, class: usize) -> f64 {
        if class == CHANGED {
            self.mean_c
        } else {
            self.mean_u
        }
    }

    #[inline]
    pub fn std(&self, class: usize) -> f64 {
        if class == CHANGED {
            self.std_c
        } else {
            self.std_u
        }
    }

    pub(crate) fn swapped(self) -> Self {
        Self {
            mean_u: self.mean_c,
            std_u: self.std_c,
            mean_c: self.mean_u,
            std_c: self.std_u,
        }
    }
}

/// A per-pixel pair of reals, one per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassField {
    width: usize,
    height: usize,
    values: Vec<[f64; 2]>,
}

impl ClassField {
    pub fn new(width: usize, height: usize, values: Vec<[f64; 2]>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "{} entries for a {width}x{height} field",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: [f64; 2]) -> Self {
        Self {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        self.values[y * self.width + x]
    }

    pub(crate) fn swapped(self) -> Self {
        Self {
            values: self.values.into_iter().map(|[a, b]| [b, a]).collect(),
            ..self
        }
    }

    fn ensure_dims(&self, width: usize, height: usize) -> Result<()> {
        if self.dims() != (width, height) {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                width,
                height,
            ));
        }
        Ok(())
    }
}

/// Fuzzy partition: `(u_unchanged, u_changed)` per pixel, each row summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership(ClassField);

impl Membership {
    /// Validates that every row lies in `[0, 1]` and sums to 1 within 1e-9.
    pub fn new(width: usize, height: usize, values: Vec<[f64; 2]>) -> Result<Self> {
        let field = ClassField::new(width, height, values)?;
        if let Some(i) = field.values.iter().position(|&[a, b]| {
            !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || (a + b - 1.0).abs() > 1e-9
        }) {
            return Err(Error::InvalidParameter(format!(
                "membership row {i} is not a distribution"
            )));
        }
        Ok(Self(field))
    }

    /// Crisp membership from a label map.
    pub fn from_labels(labels: &BinaryMap) -> Self {
        let values = labels
            .labels()
            .iter()
            .map(|l| {
                if l.is_changed() {
                    [0.0, 1.0]
                } else {
                    [1.0, 0.0]
                }
            })
            .collect();
        Self(ClassField {
            width: labels.width(),
            height: labels.height(),
            values,
        })
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    #[inline]
    pub fn values(&self) -> &[[f64; 2]] {
        self.0.values()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        self.0.get(x, y)
    }

    /// Largest deviation of a row sum from 1.
    pub fn max_normalization_error(&self) -> f64 {
        self.values()
            .iter()
            .map(|&[a, b]| (a + b - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Hard labels: the class with the larger membership; exact ties are unchanged.
    pub fn labels(&self) -> BinaryMap {
        let (w, h) = self.dims();
        let labels = self
            .values()
            .iter()
            .map(|&[u, c]| {
                if c > u {
                    Label::Changed
                } else {
                    Label::Unchanged
                }
            })
            .collect();
        BinaryMap::new(w, h, labels).expect("membership dims are valid")
    }

    pub fn as_field(&self) -> &ClassField {
        &self.0
    }

    pub(crate) fn swapped(self) -> Self {
        Self(self.0.swapped())
    }
}

/// Neighbourhood evidence for every pixel and class over the 8-connected
/// window (centre excluded, replicate borders).
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodStats {
    /// Mean of the class membership over the 8 neighbours.
    pub mean_partition: ClassField,
    /// Number of neighbours whose hard label is the class.
    pub number: Vec<[u8; 2]>,
}

pub fn neighborhood_stats(mem: &Membership, labels: &BinaryMap) -> Result<NeighborhoodStats> {
    let (w, h) = mem.dims();
    if labels.dims() != (w, h) {
        return Err(Error::DimensionMismatch(
            w,
            h,
            labels.width(),
            labels.height(),
        ));
    }
    let mut mean = Vec::with_capacity(w * h);
    let mut number = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut sum = [0.0; 2];
            let mut count = [0u8; 2];
            for (dx, dy) in NEIGHBOURS {
                let nx = (x + dx).clamp(0, w as isize - 1) as usize;
                let ny = (y + dy).clamp(0, h as isize - 1) as usize;
                let [u, c] = mem.get(nx, ny);
                sum[UNCHANGED] += u;
                sum[CHANGED] += c;
                count[usize::from(labels.get(nx, ny).is_changed())] += 1;
            }
            mean.push([sum[0] / 8.0, sum[1] / 8.0]);
            number.push(count);
        }
    }
    Ok(NeighborhoodStats {
        mean_partition: ClassField {
            width: w,
            height: h,
            values: mean,
        },
        number,
    })
}

/// Weight of the neighbour-count term: `beta0 * (1 - |mean_partition - number / 8|)`.
#[inline]
pub fn beta_weight(beta0: f64, mean_partition: f64, number: u8) -> f64 {
    beta0 * (1.0 - (mean_partition - f64::from(number) / 8.0).abs())
}

/// Sign of `u - 0.5`, with `sgn(0) = +1`.
#[inline]
fn membership_sign(u: f64) -> f64 {
    if u >= 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// MRF energy per pixel and class:
/// `E = -ln(max(mu, p_floor)) -/+ beta * sgn(u - 0.5) * n`.
///
/// With [`EnergySign::Smoothing`] the neighbour term is subtracted, so a
/// class backed by its neighbours (and held by the pixel) gets lower energy.
pub fn mrf_energy(
    mem: &Membership,
    nbhd: &NeighborhoodStats,
    beta0: f64,
    sign: EnergySign,
    p_floor: f64,
) -> Result<ClassField> {
    let (w, h) = mem.dims();
    nbhd.mean_partition.ensure_dims(w, h)?;
    let s = match sign {
        EnergySign::Smoothing => -1.0,
        EnergySign::AsPrinted => 1.0,
    };
    let values = mem
        .values()
        .iter()
        .zip(nbhd.mean_partition.values())
        .zip(&nbhd.number)
        .map(|((u, mp), n)| {
            let mut e = [0.0; 2];
            for i in [UNCHANGED, CHANGED] {
                let beta = beta_weight(beta0, mp[i], n[i]);
                e[i] =
                    -mp[i].max(p_floor).ln() + s * beta * membership_sign(u[i]) * f64::from(n[i]);
            }
            e
        })
        .collect();
    ClassField::new(w, h, values)
}

/// Two-class softmax of `-E`, evaluated relative to the smaller energy.
pub fn prior_probs(energy: &ClassField) -> ClassField {
    let values = energy
        .values()
        .iter()
        .map(|&[eu, ec]| softmax_neg(eu, ec))
        .collect();
    ClassField {
        width: energy.width,
        height: energy.height,
        values,
    }
}

/// `[exp(-a), exp(-b)] / (exp(-a) + exp(-b))` without overflow.
#[inline]
fn softmax_neg(a: f64, b: f64) -> [f64; 2] {
    let m = a.min(b);
    let ea = (-(a - m)).exp();
    let eb = (-(b - m)).exp();
    let z = ea + eb;
    [ea / z, eb / z]
}

/// `-ln N(y | mu_i, sigma_i) = ln(sigma_i sqrt(2 pi)) + (y - mu_i)^2 / (2 sigma_i^2)`.
pub fn conditional_distance(di: &Raster, stats: &ClassStats) -> ClassField {
    let ln_sqrt_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let per_class = |y: f64, class: usize| {
        let (mu, sigma) = (stats.mean(class), stats.std(class));
        sigma.ln() + ln_sqrt_2pi + (y - mu).powi(2) / (2.0 * sigma * sigma)
    };
    let values = di
        .pixels()
        .iter()
        .map(|&y| [per_class(y, UNCHANGED), per_class(y, CHANGED)])
        .collect();
    ClassField {
        width: di.width(),
        height: di.height(),
        values,
    }
}

/// `J = sum_i sum_j u_ij^2 d_ij^2`.
pub fn objective(mem: &Membership, distance: &ClassField) -> Result<f64> {
    let (w, h) = mem.dims();
    distance.ensure_dims(w, h)?;
    Ok(mem
        .values()
        .iter()
        .zip(distance.values())
        .map(|(u, d)| (u[0] * d[0]).powi(2) + (u[1] * d[1]).powi(2))
        .sum())
}

/// `u_ij = pi_ij exp(-d_ij) / sum_k pi_kj exp(-d_kj)`, evaluated in log space.
pub fn update_membership(prior: &ClassField, distance: &ClassField) -> Result<Membership> {
    let (w, h) = prior.dims();
    distance.ensure_dims(w, h)?;
    let values = prior
        .values()
        .iter()
        .zip(distance.values())
        .map(|(p, d)| {
            // score_i = -(ln pi_i - d_i); a zero prior gives +inf and a zero weight.
            let su = d[0] - p[0].ln();
            let sc = d[1] - p[1].ln();
            if su.is_infinite() && sc.is_infinite() {
                [0.5, 0.5]
            } else {
                let [u, _] = softmax_neg(su, sc);
                [u, 1.0 - u]
            }
        })
        .collect();
    Ok(Membership(ClassField {
        width: w,
        height: h,
        values,
    }))
}

/// Membership-weighted mean and standard deviation per class; stds are floored.
pub fn update_stats(mem: &Membership, di: &Raster, std_floor: f64) -> Result<ClassStats> {
    let (w, h) = mem.dims();
    if di.dims() != (w, h) {
        return Err(Error::DimensionMismatch(w, h, di.width(), di.height()));
    }
    let mut weight = [0.0; 2];
    let mut weighted = [0.0; 2];
    for (u, &y) in mem.values().iter().zip(di.pixels()) {
        for i in 0..2 {
            weight[i] += u[i];
            weighted[i] += u[i] * y;
        }
    }
    for (i, name) in [(UNCHANGED, "unchanged"), (CHANGED, "changed")] {
        if weight[i] <= 0.0 {
            return Err(Error::DegenerateClass(name));
        }
    }
    let mean = [weighted[0] / weight[0], weighted[1] / weight[1]];
    let mut spread = [0.0; 2];
    for (u, &y) in mem.values().iter().zip(di.pixels()) {
        for i in 0..2 {
            spread[i] += u[i] * (y - mean[i]).powi(2);
        }
    }
    Ok(ClassStats {
        mean_u: mean[0],
        std_u: (spread[0] / weight[0]).sqrt().max(std_floor),
        mean_c: mean[1],
        std_c: (spread[1] / weight[1]).sqrt().max(std_floor),
    })
}
