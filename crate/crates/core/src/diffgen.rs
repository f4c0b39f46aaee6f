//! Difference-image operators.
//!
//! Both operators expect intensities already mapped to `[1, 256]` so the
//! logarithms stay finite, and both use natural logarithms.

use crate::raster::Raster;
use crate::Result;

/// Standard deviation of the smoothing kernel used by [`gauss_log_ratio`].
pub const GAUSS_SIGMA: f64 = 0.5;

/// A 3x3 correlation kernel, stored row-major with `weights[dy + 1][dx + 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel3x3 {
    weights: [[f64; 3]; 3],
}

impl Kernel3x3 {
    pub fn new(weights: [[f64; 3]; 3]) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &[[f64; 3]; 3] {
        &self.weights
    }

    #[inline]
    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        self.weights[(dy + 1) as usize][(dx + 1) as usize]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().flatten().sum()
    }
}

/// Sampled Gaussian with sigma 0.5 on the 3x3 grid, normalized to unit sum.
pub fn gaussian_kernel() -> Kernel3x3 {
    let mut weights = [[0.0; 3]; 3];
    for (dy, row) in (-1i32..=1).zip(weights.iter_mut()) {
        for (dx, w) in (-1i32..=1).zip(row.iter_mut()) {
            let r2 = f64::from(dx * dx + dy * dy);
            *w = (-r2 / (2.0 * GAUSS_SIGMA * GAUSS_SIGMA)).exp();
        }
    }
    let total: f64 = weights.iter().flatten().sum();
    weights.iter_mut().flatten().for_each(|w| *w /= total);
    Kernel3x3 { weights }
}

/// 2-D correlation with replicate padding; output has the input dimensions.
pub fn convolve(r: &Raster, k: &Kernel3x3) -> Raster {
    Raster::from_fn(r.width(), r.height(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        let mut acc = 0.0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                acc += k.at(dx, dy) * r.get_clamped(x + dx, y + dy);
            }
        }
        acc
    })
}

/// `|ln(x2 / x1)|` per pixel.
pub fn log_ratio(x1: &Raster, x2: &Raster) -> Result<Raster> {
    x1.ensure_same_dims(x2)?;
    let data = x1
        .pixels()
        .iter()
        .zip(x2.pixels())
        .map(|(a, b)| (b.ln() - a.ln()).abs())
        .collect();
    Raster::new(x1.width(), x1.height(), data)
}

/// Smooths both log images with [`gaussian_kernel`] and sums the absolute
/// differences of the smoothed logs over the 3x3 window around each pixel
/// (replicate padding at the borders).
pub fn gauss_log_ratio(x1: &Raster, x2: &Raster) -> Result<Raster> {
    x1.ensure_same_dims(x2)?;
    let g = gaussian_kernel();
    let smooth1 = convolve(&x1.map(f64::ln), &g);
    let smooth2 = convolve(&x2.map(f64::ln), &g);
    let diff = Raster::new(
        x1.width(),
        x1.height(),
        smooth1
            .pixels()
            .iter()
            .zip(smooth2.pixels())
            .map(|(a, b)| (a - b).abs())
            .collect(),
    )?;
    Ok(window_sum(&diff))
}

/// Sum over the 3x3 neighbourhood with replicate padding.
fn window_sum(r: &Raster) -> Raster {
    Raster::from_fn(r.width(), r.height(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        let mut acc = 0.0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                acc += r.get_clamped(x + dx, y + dy);
            }
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use proptest::prelude::*;

    fn positive(w: usize, h: usize, seed: u64) -> Raster {
        // xorshift; any positive pattern will do
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        Raster::from_fn(w, h, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            1.0 + (s % 25500) as f64 / 100.0
        })
    }

    #[test]
    fn kernel_golden_weights() {
        // exp(-r^2 / 0.5) at r^2 = 0, 1, 2, divided by 1 + 4e^-2 + 4e^-4
        let k = gaussian_kernel();
        let z = 1.0 + 4.0 * (-2.0f64).exp() + 4.0 * (-4.0f64).exp();
        assert!((k.at(0, 0) - 1.0 / z).abs() < 1e-15);
        assert!((k.at(0, 0) - 0.619347).abs() < 1e-6);
        assert!((k.at(1, 0) - 0.083820).abs() < 1e-6);
        assert!((k.at(1, 1) - 0.011344).abs() < 1e-6);
        assert!((k.sum() - 1.0).abs() < 1e-12);
        assert!((k.at(-1, -1) / k.at(0, 0) - (-4.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn kernel_is_rotationally_symmetric() {
        let k = gaussian_kernel();
        for dy in -1..=1 {
            for dx in -1..=1 {
                assert_eq!(k.at(dx, dy), k.at(-dy, dx));
                assert_eq!(k.at(dx, dy), k.at(-dx, dy));
                assert_eq!(k.at(dx, dy), k.at(dy, dx));
            }
        }
    }

    #[test]
    fn convolve_constant_and_single_pixel() {
        let g = gaussian_kernel();
        let c = convolve(&Raster::filled(6, 4, 3.5), &g);
        assert!(c.pixels().iter().all(|v| (v - 3.5).abs() < 1e-12));
        let one = convolve(&Raster::filled(1, 1, 7.0), &g);
        assert!((one.get(0, 0) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn convolve_impulse_imprints_kernel() {
        let g = gaussian_kernel();
        let impulse = Raster::from_fn(5, 5, |x, y| if (x, y) == (2, 2) { 1.0 } else { 0.0 });
        let out = convolve(&impulse, &g);
        for y in 0..5 {
            for x in 0..5 {
                let (dx, dy) = (x as isize - 2, y as isize - 2);
                let expected = if dx.abs() <= 1 && dy.abs() <= 1 {
                    g.at(dx, dy)
                } else {
                    0.0
                };
                assert_eq!(out.get(x, y), expected);
            }
        }
    }

    #[test]
    fn log_ratio_examples() {
        let a = positive(8, 8, 1);
        assert!(log_ratio(&a, &a)
            .unwrap()
            .pixels()
            .iter()
            .all(|&v| v == 0.0));
        let ones = Raster::filled(2, 2, 1.0);
        let e = Raster::filled(2, 2, std::f64::consts::E);
        assert!(log_ratio(&ones, &e)
            .unwrap()
            .pixels()
            .iter()
            .all(|v| (v - 1.0).abs() < 1e-15));
        let b = positive(8, 8, 2);
        assert_eq!(log_ratio(&a, &b).unwrap(), log_ratio(&b, &a).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let a = Raster::filled(3, 3, 1.0);
        let b = Raster::filled(3, 4, 1.0);
        assert!(matches!(
            log_ratio(&a, &b),
            Err(Error::DimensionMismatch(..))
        ));
        assert!(matches!(
            gauss_log_ratio(&a, &b),
            Err(Error::DimensionMismatch(..))
        ));
    }

    #[test]
    fn gauss_log_ratio_identical_inputs() {
        let a = positive(10, 7, 3);
        assert!(gauss_log_ratio(&a, &a)
            .unwrap()
            .pixels()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn gauss_log_ratio_single_pixel_support() {
        // Direct evaluation: one differing pixel at (4, 4) of a 9x9 image
        // influences exactly the 5x5 block around it.
        let a = Raster::filled(9, 9, 10.0);
        let b = Raster::from_fn(9, 9, |x, y| if (x, y) == (4, 4) { 100.0 } else { 10.0 });
        let out = gauss_log_ratio(&a, &b).unwrap();
        let g = gaussian_kernel();
        let step = 10.0f64.ln();
        for y in 0..9 {
            for x in 0..9 {
                let inside = (x as isize - 4).abs() <= 2 && (y as isize - 4).abs() <= 2;
                assert_eq!(out.get(x, y) > 0.0, inside, "({x},{y})");
                // oracle: the window sum of the imprinted kernel
                let mut expected = 0.0;
                for wy in -1..=1isize {
                    for wx in -1..=1isize {
                        let (dx, dy) = (x as isize + wx - 4, y as isize + wy - 4);
                        if dx.abs() <= 1 && dy.abs() <= 1 {
                            expected += step * g.at(dx, dy);
                        }
                    }
                }
                assert!((out.get(x, y) - expected).abs() < 1e-12);
            }
        }
        // the centre window holds the whole kernel mass
        assert!((out.get(4, 4) - step).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn operators_are_symmetric_and_bounded(seed_a in any::<u64>(), seed_b in any::<u64>(), w in 1usize..12, h in 1usize..12) {
            let a = positive(w, h, seed_a);
            let b = positive(w, h, seed_b);
            let glr = gauss_log_ratio(&a, &b).unwrap();
            prop_assert_eq!(&glr, &gauss_log_ratio(&b, &a).unwrap());
            prop_assert_eq!(log_ratio(&a, &b).unwrap(), log_ratio(&b, &a).unwrap());
            let bound = log_ratio(&a, &b).unwrap().max();
            prop_assert!(glr.pixels().iter().all(|&v| v >= 0.0 && v <= 9.0 * bound + 1e-9));
        }

        #[test]
        fn convolve_is_linear(sa in any::<u64>(), sb in any::<u64>(), alpha in -5.0f64..5.0, beta in -5.0f64..5.0) {
            let g = gaussian_kernel();
            let r = positive(9, 6, sa);
            let s = positive(9, 6, sb);
            let combo = Raster::from_fn(9, 6, |x, y| alpha * r.get(x, y) + beta * s.get(x, y));
            let lhs = convolve(&combo, &g);
            let (cr, cs) = (convolve(&r, &g), convolve(&s, &g));
            for (i, v) in lhs.pixels().iter().enumerate() {
                prop_assert!((v - (alpha * cr.pixels()[i] + beta * cs.pixels()[i])).abs() < 1e-9);
            }
        }
    }
}
