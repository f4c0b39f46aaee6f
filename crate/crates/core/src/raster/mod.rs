//! Image containers, PGM interchange, noise injection and synthetic pairs.

mod noise;
mod pgm;
mod synthetic;

pub use noise::{
    add_salt_pepper, add_speckle, add_speckle_with, apply_noise, NoiseKind, NoiseSpec,
    SpeckleDistribution,
};
pub use pgm::{load_pgm, read_pgm, save_pgm, write_pgm};
pub use synthetic::{
    make_synthetic_pair, SyntheticPair, MIN_SYNTHETIC_SIZE, TONE_BRIGHT, TONE_DARK,
};

use crate::{Error, Result};

/// Dense row-major grid of finite intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "empty raster {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "{} samples for a {width}x{height} raster",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRaster(format!(
                "non-finite value at index {index}"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds a raster from a function of `(x, y)`.
    ///
    /// Panics if `f` produces a non-finite value or a dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("from_fn produced an invalid raster")
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    /// Builds a raster from nested rows, mostly for tests and small fixtures.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidRaster("ragged rows".into()));
        }
        Self::new(width, height, rows.concat())
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn pixels(&self) -> &[f64] {
        &self.data
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with replicate (clamp-to-edge) boundary handling.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        let var =
            self.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / self.data.len() as f64;
        var.sqrt()
    }

    /// Applies `f` to every pixel. Panics if `f` yields a non-finite value.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        Self::new(self.width, self.height, data).expect("map produced a non-finite value")
    }

    pub fn ensure_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// Affine map of `[min, max]` onto `[lo, hi]`. A constant raster maps to `lo`.
    pub fn normalize(&self, lo: f64, hi: f64) -> Self {
        normalize(self, lo, hi)
    }
}

/// Affine map of `[min(r), max(r)]` onto `[lo, hi]`; a constant raster maps every pixel to `lo`.
pub fn normalize(r: &Raster, lo: f64, hi: f64) -> Raster {
    assert!(hi > lo, "normalize requires hi > lo");
    let (min, max) = (r.min(), r.max());
    normalize_with_range(r, min, max, lo, hi)
}

/// Normalizes two rasters with one shared affine map, so pixels that are equal
/// in both inputs stay equal.
pub fn normalize_jointly(a: &Raster, b: &Raster, lo: f64, hi: f64) -> (Raster, Raster) {
    assert!(hi > lo, "normalize requires hi > lo");
    let min = a.min().min(b.min());
    let max = a.max().max(b.max());
    (
        normalize_with_range(a, min, max, lo, hi),
        normalize_with_range(b, min, max, lo, hi),
    )
}

fn normalize_with_range(r: &Raster, min: f64, max: f64, lo: f64, hi: f64) -> Raster {
    let span = max - min;
    if span <= 0.0 {
        return Raster::filled(r.width, r.height, lo);
    }
    let scale = (hi - lo) / span;
    // Pin the endpoints so the output range is exact.
    r.map(|v| if v == max { hi } else { lo + (v - min) * scale })
}

/// Per-pixel change label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Unchanged,
    Changed,
}

impl Label {
    #[inline]
    pub fn is_changed(self) -> bool {
        self == Label::Changed
    }

    #[inline]
    pub fn flipped(self) -> Self {
        match self {
            Label::Unchanged => Label::Changed,
            Label::Changed => Label::Unchanged,
        }
    }
}

/// Changed/unchanged label grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMap {
    width: usize,
    height: usize,
    labels: Vec<Label>,
}

impl BinaryMap {
    pub fn new(width: usize, height: usize, labels: Vec<Label>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "{} labels for a {width}x{height} map",
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Label) -> Self {
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y));
            }
        }
        Self::new(width, height, labels).expect("zero-sized map")
    }

    pub fn filled(width: usize, height: usize, label: Label) -> Self {
        Self::from_fn(width, height, |_, _| label)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Label {
        self.labels[y * self.width + x]
    }

    pub fn changed_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_changed()).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            labels: self.labels.iter().map(|l| l.flipped()).collect(),
        }
    }

    /// Renders the map as intensities: unchanged -> 0, changed -> 255.
    pub fn to_raster(&self) -> Raster {
        let data = self
            .labels
            .iter()
            .map(|l| if l.is_changed() { 255.0 } else { 0.0 })
            .collect();
        Raster::new(self.width, self.height, data).expect("map dims are valid")
    }

    /// Inverse of [`BinaryMap::to_raster`]: values at or above 128 are changed.
    pub fn from_raster(r: &Raster) -> Self {
        let labels = r
            .pixels()
            .iter()
            .map(|&v| {
                if v >= 128.0 {
                    Label::Changed
                } else {
                    Label::Unchanged
                }
            })
            .collect();
        Self {
            width: r.width(),
            height: r.height(),
            labels,
        }
    }
}
