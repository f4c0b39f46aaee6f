//! Speckle reducing anisotropic diffusion (SRAD).
//!
//! Explicit 4-neighbour scheme. Each step estimates the speckle scale `q0`
//! over a homogeneous region of interest, computes the instantaneous
//! coefficient of variation `q` per pixel, turns it into a diffusion
//! coefficient `c(q)` and advances the image by `dt / 4 * div(c grad I)`.
//! Borders are replicated, i.e. zero flux leaves the image.

use crate::raster::Raster;
use crate::{Error, Result};

/// Side of the square window searched by [`auto_roi`].
pub const AUTO_ROI_SIZE: usize = 16;
const AUTO_ROI_STRIDE: usize = 8;
const MIN_ROI_SIZE: usize = 8;
const DENOMINATOR_FLOOR: f64 = 1e-6;
const POSITIVITY_FLOOR: f64 = 1e-3;

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    fn validate(&self, r: &Raster) -> Result<()> {
        if self.width < MIN_ROI_SIZE || self.height < MIN_ROI_SIZE {
            return Err(Error::InvalidParameter(format!(
                "roi {}x{} smaller than {MIN_ROI_SIZE}x{MIN_ROI_SIZE}",
                self.width, self.height
            )));
        }
        if self.x + self.width > r.width() || self.y + self.height > r.height() {
            return Err(Error::InvalidParameter(format!(
                "roi {self:?} outside {}x{} image",
                r.width(),
                r.height()
            )));
        }
        Ok(())
    }

    fn pixels<'a>(&self, r: &'a Raster) -> impl Iterator<Item = f64> + 'a {
        let Rect {
            x,
            y,
            width,
            height,
        } = *self;
        (y..y + height).flat_map(move |yy| (x..x + width).map(move |xx| r.get(xx, yy)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Roi {
    /// Pick the most homogeneous window with [`auto_roi`].
    #[default]
    Auto,
    Fixed(Rect),
}

/// How the instantaneous coefficient of variation is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IcovForm {
    /// `q = sqrt(max(0, 1/2 g^2 - 1/16 l^2)) / |1 + l/4|` with `g = |grad I|/I`, `l = lap I / I`.
    #[default]
    Canonical,
    /// The ratio without the outer square root; this value is then used as `q`.
    WithoutSqrt,
}

impl std::str::FromStr for IcovForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(IcovForm::Canonical),
            "without_sqrt" | "without-sqrt" => Ok(IcovForm::WithoutSqrt),
            other => Err(Error::InvalidParameter(format!(
                "unknown icov form '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SradParams {
    pub iterations: usize,
    pub dt: f64,
    pub roi: Roi,
    pub q0_floor: f64,
    pub icov_form: IcovForm,
}

impl Default for SradParams {
    fn default() -> Self {
        Self {
            iterations: 100,
            dt: 0.5,
            roi: Roi::Auto,
            q0_floor: 1e-3,
            icov_form: IcovForm::Canonical,
        }
    }
}

impl SradParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter(
                "srad iterations must be at least 1".into(),
            ));
        }
        check_dt(self.dt)?;
        if !(self.q0_floor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "q0 floor {} must be positive",
                self.q0_floor
            )));
        }
        Ok(())
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt <= 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "time step {dt} outside (0, 0.5]"
        )))
    }
}

fn check_positive(r: &Raster) -> Result<()> {
    match r.pixels().iter().position(|&v| v <= 0.0) {
        Some(index) => Err(Error::NonPositive {
            index,
            value: r.pixels()[index],
        }),
        None => Ok(()),
    }
}

/// Speckle scale: coefficient of variation (population) over `roi`, floored at `q0_floor`.
pub fn estimate_q0(r: &Raster, roi: Rect, q0_floor: f64) -> Result<f64> {
    roi.validate(r)?;
    let n = (roi.width * roi.height) as f64;
    let mean = roi.pixels(r).sum::<f64>() / n;
    if mean == 0.0 {
        return Err(Error::ZeroMeanRoi);
    }
    let var = roi.pixels(r).map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok((var.sqrt() / mean.abs()).max(q0_floor))
}

/// The 16x16 window on a stride-8 grid with the smallest coefficient of
/// variation; ties go to the smallest `(row, col)`.
pub fn auto_roi(r: &Raster) -> Result<Rect> {
    let size = AUTO_ROI_SIZE;
    if r.width() < size || r.height() < size {
        return Err(Error::ImageTooSmall {
            width: r.width(),
            height: r.height(),
            min: size,
        });
    }
    let n = (size * size) as f64;
    let mut best: Option<(f64, Rect)> = None;
    let last_y = r.height() - size;
    let last_x = r.width() - size;
    for y in (0..=last_y).step_by(AUTO_ROI_STRIDE) {
        for x in (0..=last_x).step_by(AUTO_ROI_STRIDE) {
            let rect = Rect::new(x, y, size, size);
            let mean = rect.pixels(r).sum::<f64>() / n;
            if mean <= 0.0 {
                continue;
            }
            let var = rect.pixels(r).map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let cv = var.sqrt() / mean;
            if best.is_none_or(|(b, _)| cv < b) {
                best = Some((cv, rect));
            }
        }
    }
    // All windows non-positive: fall back to the first one.
    Ok(best.map_or(Rect::new(0, 0, size, size), |(_, rect)| rect))
}

/// Instantaneous coefficient of variation with replicate borders.
pub fn icov(r: &Raster) -> Result<Raster> {
    icov_with(r, IcovForm::Canonical)
}

pub fn icov_with(r: &Raster, form: IcovForm) -> Result<Raster> {
    check_positive(r)?;
    Ok(Raster::from_fn(r.width(), r.height(), |x, y| {
        let (xi, yi) = (x as isize, y as isize);
        let c = r.get(x, y);
        let n = r.get_clamped(xi, yi - 1);
        let s = r.get_clamped(xi, yi + 1);
        let w = r.get_clamped(xi - 1, yi);
        let e = r.get_clamped(xi + 1, yi);
        let grad2 = 0.5 * ((e - c).powi(2) + (c - w).powi(2) + (s - c).powi(2) + (c - n).powi(2));
        let lap = n + s + w + e - 4.0 * c;
        let g2 = grad2 / (c * c);
        let l = lap / c;
        let radicand = (0.5 * g2 - l * l / 16.0).max(0.0);
        let mut denom = 1.0 + 0.25 * l;
        if denom.abs() < DENOMINATOR_FLOOR {
            denom = DENOMINATOR_FLOOR.copysign(denom);
        }
        match form {
            IcovForm::Canonical => radicand.sqrt() / denom.abs(),
            IcovForm::WithoutSqrt => radicand / (denom * denom),
        }
    }))
}

/// `c = 1 / (1 + (q^2 - q0^2) / (q0^2 (1 + q0^2)))`, clamped to `[0, 1]`.
pub fn diffusion_coeff(q: &Raster, q0: f64) -> Raster {
    let q02 = q0 * q0;
    let scale = q02 * (1.0 + q02);
    q.map(|qv| {
        let c = 1.0 / (1.0 + (qv * qv - q02) / scale);
        if c.is_nan() {
            0.0
        } else {
            c.clamp(0.0, 1.0)
        }
    })
}

/// One explicit update `I + dt/4 * div` for a given coefficient field.
///
/// The divergence pairs `c(i+1, j)` with the south difference, `c(i, j+1)`
/// with the east difference and `c(i, j)` with the north and west ones
/// (`i` indexes rows). No positivity floor is applied.
pub fn diffuse_step(r: &Raster, c: &Raster, dt: f64) -> Raster {
    Raster::from_fn(r.width(), r.height(), |x, y| {
        let (xi, yi) = (x as isize, y as isize);
        let i = r.get(x, y);
        let cc = c.get(x, y);
        let div = c.get_clamped(xi, yi + 1) * (r.get_clamped(xi, yi + 1) - i)
            + cc * (r.get_clamped(xi, yi - 1) - i)
            + c.get_clamped(xi + 1, yi) * (r.get_clamped(xi + 1, yi) - i)
            + cc * (r.get_clamped(xi - 1, yi) - i);
        i + 0.25 * dt * div
    })
}

/// One SRAD step with a given speckle scale.
pub fn srad_step(r: &Raster, q0: f64, dt: f64) -> Result<Raster> {
    srad_step_with(r, q0, dt, IcovForm::Canonical)
}

pub fn srad_step_with(r: &Raster, q0: f64, dt: f64, form: IcovForm) -> Result<Raster> {
    check_dt(dt)?;
    if !(q0 > 0.0) {
        return Err(Error::InvalidParameter(format!("q0 {q0} must be positive")));
    }
    let q = icov_with(r, form)?;
    let c = diffusion_coeff(&q, q0);
    let floor = r.min() * POSITIVITY_FLOOR;
    Ok(diffuse_step(r, &c, dt).map(|v| v.max(floor)))
}

/// Runs `p.iterations` SRAD steps, re-estimating `q0` from the same region
/// of interest before every step. With [`Roi::Auto`] the region is chosen
/// once, on the input image.
pub fn srad(r: &Raster, p: &SradParams) -> Result<Raster> {
    p.validate()?;
    check_positive(r)?;
    let roi = match p.roi {
        Roi::Auto => auto_roi(r)?,
        Roi::Fixed(rect) => {
            rect.validate(r)?;
            rect
        }
    };
    let mut current = r.clone();
    for _ in 0..p.iterations {
        let q0 = estimate_q0(&current, roi, p.q0_floor)?;
        current = srad_step_with(&current, q0, p.dt, p.icov_form)?;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::add_speckle;

    fn lcg_raster(w: usize, h: usize, seed: u64, lo: f64, hi: f64) -> Raster {
        let mut s = seed.wrapping_add(0x2545_F491_4F6C_DD1D);
        Raster::from_fn(w, h, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            lo + (hi - lo) * ((s >> 11) as f64 / (1u64 << 53) as f64)
        })
    }

    #[test]
    fn q0_examples() {
        let flat = Raster::filled(8, 8, 100.0);
        let roi = Rect::new(0, 0, 8, 8);
        assert_eq!(estimate_q0(&flat, roi, 1e-3).unwrap(), 1e-3);

        let two = Raster::from_fn(8, 8, |x, _| if x % 2 == 0 { 90.0 } else { 110.0 });
        assert!((estimate_q0(&two, roi, 1e-3).unwrap() - 0.1).abs() < 1e-12);
        let tripled = two.map(|v| 3.0 * v);
        assert!((estimate_q0(&tripled, roi, 1e-3).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn q0_errors() {
        let zero = Raster::filled(8, 8, 0.0);
        assert!(matches!(
            estimate_q0(&zero, Rect::new(0, 0, 8, 8), 1e-3),
            Err(Error::ZeroMeanRoi)
        ));
        let r = Raster::filled(10, 10, 1.0);
        assert!(estimate_q0(&r, Rect::new(4, 0, 8, 8), 1e-3).is_err());
        assert!(estimate_q0(&r, Rect::new(0, 0, 7, 8), 1e-3).is_err());
    }

    #[test]
    fn auto_roi_finds_flat_block() {
        let mut r = lcg_raster(64, 64, 3, 10.0, 200.0).into_pixels();
        for y in 24..40 {
            for x in 32..48 {
                r[y * 64 + x] = 77.0;
            }
        }
        let r = Raster::new(64, 64, r).unwrap();
        assert_eq!(auto_roi(&r).unwrap(), Rect::new(32, 24, 16, 16));
        assert_eq!(auto_roi(&r).unwrap(), auto_roi(&r).unwrap());
    }

    #[test]
    fn auto_roi_tie_break_and_size_check() {
        assert_eq!(
            auto_roi(&Raster::filled(40, 40, 5.0)).unwrap(),
            Rect::new(0, 0, 16, 16)
        );
        assert!(matches!(
            auto_roi(&Raster::filled(15, 40, 5.0)),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn icov_constant_and_scale_invariance() {
        assert!(icov(&Raster::filled(5, 5, 3.0))
            .unwrap()
            .pixels()
            .iter()
            .all(|&q| q == 0.0));
        let r = lcg_raster(12, 9, 1, 1.0, 50.0);
        let q = icov(&r).unwrap();
        let q_scaled = icov(&r.map(|v| v * 7.5)).unwrap();
        for (a, b) in q.pixels().iter().zip(q_scaled.pixels()) {
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
        assert!(matches!(
            icov(&Raster::filled(2, 2, 0.0)),
            Err(Error::NonPositive { .. })
        ));
    }

    #[test]
    fn icov_step_edge_matches_scalar_oracle() {
        let r = Raster::from_fn(9, 9, |x, _| if x < 4 { 100.0 } else { 200.0 });
        let q = icov(&r).unwrap();
        // Hand-rolled stencils on plain arrays.
        let img: Vec<Vec<f64>> = (0..9)
            .map(|_| (0..9).map(|x| if x < 4 { 100.0 } else { 200.0 }).collect())
            .collect();
        let at = |x: i64, y: i64| img[y.clamp(0, 8) as usize][x.clamp(0, 8) as usize];
        for y in 0..9i64 {
            for x in 0..9i64 {
                let i = at(x, y);
                let dxf = at(x + 1, y) - i;
                let dxb = i - at(x - 1, y);
                let dyf = at(x, y + 1) - i;
                let dyb = i - at(x, y - 1);
                let grad_sq = (dxf * dxf + dxb * dxb + dyf * dyf + dyb * dyb) / 2.0;
                let lap = dxf - dxb + dyf - dyb;
                let num = (grad_sq / (2.0 * i * i) - lap * lap / (16.0 * i * i)).max(0.0);
                let den = 1.0 + lap / (4.0 * i);
                let expected = num.sqrt() / den.abs();
                assert!((q.get(x as usize, y as usize) - expected).abs() < 1e-9);
            }
        }
        assert!(q.get(3, 4) > 0.0 && q.get(4, 4) > 0.0 && q.get(0, 4) == 0.0);
    }

    #[test]
    fn icov_without_sqrt_is_square_of_canonical() {
        let r = lcg_raster(10, 10, 8, 5.0, 60.0);
        let a = icov_with(&r, IcovForm::Canonical).unwrap();
        let b = icov_with(&r, IcovForm::WithoutSqrt).unwrap();
        for (qa, qb) in a.pixels().iter().zip(b.pixels()) {
            assert!((qa * qa - qb).abs() <= 1e-12 * qb.max(1.0));
        }
    }

    #[test]
    fn diffusion_coeff_examples() {
        let q0 = 0.1;
        let c = diffusion_coeff(&Raster::filled(3, 3, q0), q0);
        assert!(c.pixels().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let c = diffusion_coeff(&Raster::filled(1, 1, 1e150), q0);
        assert!(c.get(0, 0) < 1e-200);
        // Unclamped value at q = 0 is 1 / (1 - 0.01 / (0.01 * 1.01)) = 101.
        let raw: f64 = 1.0 / (1.0 - 0.01 / (0.01 * 1.01));
        assert!((raw - 101.0).abs() < 1e-9);
        assert_eq!(
            diffusion_coeff(&Raster::filled(1, 1, 0.0), q0).get(0, 0),
            1.0
        );
    }

    #[test]
    fn constant_raster_is_a_fixed_point() {
        let r = Raster::filled(10, 8, 42.0);
        assert_eq!(srad_step(&r, 0.2, 0.5).unwrap(), r);
        let p = SradParams {
            iterations: 5,
            ..SradParams::default()
        };
        assert_eq!(
            srad(&Raster::filled(32, 32, 42.0), &p).unwrap(),
            Raster::filled(32, 32, 42.0)
        );
    }

    #[test]
    fn unit_coefficient_is_a_conservative_heat_step() {
        let r = Raster::from_fn(11, 11, |x, y| {
            if x == 0 || y == 0 || x == 10 || y == 10 {
                10.0
            } else {
                10.0 + ((x * 31 + y * 17) % 23) as f64
            }
        });
        let ones = Raster::filled(11, 11, 1.0);
        let dt = 0.5;
        let out = diffuse_step(&r, &ones, dt);
        // Five-point heat-step oracle with replicate borders.
        for y in 0..11isize {
            for x in 0..11isize {
                let c = r.get_clamped(x, y);
                let lap = r.get_clamped(x + 1, y)
                    + r.get_clamped(x - 1, y)
                    + r.get_clamped(x, y + 1)
                    + r.get_clamped(x, y - 1)
                    - 4.0 * c;
                assert!((out.get(x as usize, y as usize) - (c + dt / 4.0 * lap)).abs() < 1e-12);
            }
        }
        assert!((out.mean() - r.mean()).abs() < 1e-9);
    }

    #[test]
    fn spike_decays_in_one_step() {
        let r = Raster::from_fn(5, 5, |x, y| if (x, y) == (2, 2) { 500.0 } else { 100.0 });
        let q0 = 0.2;
        let out = srad_step(&r, q0, 0.5).unwrap();
        assert!(out.get(2, 2) < 500.0);
        assert!(out.get(2, 2) > 100.0);
    }

    #[test]
    fn iterations_compose() {
        let r = lcg_raster(32, 32, 5, 20.0, 120.0);
        assert!(srad(
            &r,
            &SradParams {
                iterations: 0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(srad(
            &r,
            &SradParams {
                dt: 0.6,
                ..Default::default()
            }
        )
        .is_err());
        let p = SradParams {
            iterations: 1,
            ..Default::default()
        };
        let roi = auto_roi(&r).unwrap();
        let q0 = estimate_q0(&r, roi, p.q0_floor).unwrap();
        assert_eq!(srad(&r, &p).unwrap(), srad_step(&r, q0, p.dt).unwrap());
    }

    #[test]
    fn smooths_homogeneous_speckle() {
        let clean = Raster::filled(128, 128, 100.0);
        let noisy = add_speckle(&clean, 0.3, 4).unwrap().map(|v| v.max(1.0));
        let p = SradParams {
            iterations: 50,
            ..Default::default()
        };
        let out = srad(&noisy, &p).unwrap();
        assert!(
            out.std_dev() < 0.2 * noisy.std_dev(),
            "{} vs {}",
            out.std_dev(),
            noisy.std_dev()
        );
    }

    #[test]
    fn preserves_step_edge_position() {
        let clean = Raster::from_fn(96, 64, |x, _| if x < 48 { 100.0 } else { 200.0 });
        let noisy = add_speckle(&clean, 0.1, 9).unwrap().map(|v| v.max(1.0));
        let p = SradParams {
            iterations: 50,
            roi: Roi::Fixed(Rect::new(8, 8, 16, 16)),
            ..Default::default()
        };
        let out = srad(&noisy, &p).unwrap();
        let mut argmaxes: Vec<i64> = (0..64)
            .map(|y| {
                (0..95)
                    .max_by(|&a, &b| {
                        let ga = (out.get(a + 1, y) - out.get(a, y)).abs();
                        let gb = (out.get(b + 1, y) - out.get(b, y)).abs();
                        ga.total_cmp(&gb)
                    })
                    .unwrap() as i64
            })
            .collect();
        // true edge lies between columns 47 and 48
        let near = argmaxes.iter().filter(|&&a| (a - 47).abs() <= 1).count();
        assert!(
            near * 10 >= 64 * 9,
            "only {near} of 64 rows locate the edge"
        );
        argmaxes.sort_unstable();
        assert!(
            (argmaxes[32] - 47).abs() <= 1,
            "median edge column {}",
            argmaxes[32]
        );
    }

    #[test]
    fn positive_scale_equivariance() {
        let r = lcg_raster(40, 40, 12, 5.0, 100.0);
        let p = SradParams {
            iterations: 10,
            ..Default::default()
        };
        let base = srad(&r, &p).unwrap();
        for lambda in [0.5, 2.0, 10.0] {
            let scaled = srad(&r.map(|v| v * lambda), &p).unwrap();
            for (a, b) in base.pixels().iter().zip(scaled.pixels()) {
                assert!((a * lambda - b).abs() <= 1e-6 * (a * lambda).abs());
            }
        }
    }
}
