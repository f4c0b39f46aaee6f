//! Kittler-Illingworth minimum-error thresholding and the initial class statistics.

use super::ClassStats;
use crate::raster::Raster;
use crate::{Error, Result};

/// 256-bin histogram of the DI, values rounded and clamped to `[0, 255]`.
fn histogram(di: &Raster) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in di.pixels() {
        hist[v.round().clamp(0.0, 255.0) as usize] += 1;
    }
    hist
}

/// Integer threshold `T` in `[1, 254]` minimizing
/// `J(T) = 1 + 2 (P1 ln s1 + P2 ln s2) - 2 (P1 ln P1 + P2 ln P2)`,
/// where class 1 holds the bins `<= T`. Splits leaving a class with fewer
/// than two pixels or a standard deviation below `std_floor` are skipped;
/// ties go to the smaller `T`. If that leaves no admissible split (a DI with
/// a handful of exact values), the search is repeated with the stds floored
/// at `std_floor` instead of skipped.
pub fn ki_threshold(di: &Raster) -> Result<f64> {
    ki_threshold_with_floor(di, super::STD_FLOOR)
}

pub fn ki_threshold_with_floor(di: &Raster, std_floor: f64) -> Result<f64> {
    let hist = histogram(di);
    if hist.iter().filter(|&&n| n > 0).count() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    // prefix sums of count, first and second moments
    let mut count = [0.0f64; 257];
    let mut first = [0.0f64; 257];
    let mut second = [0.0f64; 257];
    for (g, &n) in hist.iter().enumerate() {
        let (n, g) = (n as f64, g as f64);
        count[g as usize + 1] = count[g as usize] + n;
        first[g as usize + 1] = first[g as usize] + n * g;
        second[g as usize + 1] = second[g as usize] + n * g * g;
    }
    let total = count[256];

    let class_terms = |lo: usize, hi: usize, floored: bool| -> Option<(f64, f64)> {
        // bins lo..hi (exclusive)
        let n = count[hi] - count[lo];
        if n < 2.0 {
            return None;
        }
        let mean = (first[hi] - first[lo]) / n;
        let var = ((second[hi] - second[lo]) / n - mean * mean).max(0.0);
        let std = var.sqrt();
        if std < std_floor {
            return floored.then_some((n / total, std_floor));
        }
        Some((n / total, std))
    };

    let search = |floored: bool| {
        let mut best: Option<(f64, usize)> = None;
        for t in 1..=254usize {
            let (Some((p1, s1)), Some((p2, s2))) = (
                class_terms(0, t + 1, floored),
                class_terms(t + 1, 256, floored),
            ) else {
                continue;
            };
            let j = 1.0 + 2.0 * (p1 * s1.ln() + p2 * s2.ln()) - 2.0 * (p1 * p1.ln() + p2 * p2.ln());
            if best.is_none_or(|(b, _)| j < b) {
                best = Some((j, t));
            }
        }
        best.map(|(_, t)| t as f64)
    };
    search(false)
        .or_else(|| search(true))
        .ok_or(Error::DegenerateHistogram)
}

/// Mean and population std of the pixels `<= t` (unchanged) and `> t`
/// (changed), with stds floored at `std_floor`.
pub fn init_class_stats(di: &Raster, t: f64, std_floor: f64) -> Result<ClassStats> {
    let mut n = [0.0f64; 2];
    let mut sum = [0.0f64; 2];
    for &v in di.pixels() {
        let i = usize::from(v > t);
        n[i] += 1.0;
        sum[i] += v;
    }
    if n[0] == 0.0 {
        return Err(Error::EmptyClass("unchanged"));
    }
    if n[1] == 0.0 {
        return Err(Error::EmptyClass("changed"));
    }
    let mean = [sum[0] / n[0], sum[1] / n[1]];
    let mut ss = [0.0f64; 2];
    for &v in di.pixels() {
        let i = usize::from(v > t);
        ss[i] += (v - mean[i]).powi(2);
    }
    Ok(ClassStats {
        mean_u: mean[0],
        std_u: (ss[0] / n[0]).sqrt().max(std_floor),
        mean_c: mean[1],
        std_c: (ss[1] / n[1]).sqrt().max(std_floor),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::STD_FLOOR;

    fn bimodal(shift: f64) -> Raster {
        // 50 +- 1 and 200 +- 1, equal halves
        let values = [49.0, 50.0, 51.0, 199.0, 200.0, 201.0];
        Raster::from_fn(60, 10, |x, _| values[x % 6] + shift)
    }

    /// Brute-force criterion straight from the per-pixel class lists.
    fn criterion_oracle(pixels: &[f64], t: usize) -> Option<f64> {
        let (a, b): (Vec<f64>, Vec<f64>) = pixels
            .iter()
            .map(|v| v.round())
            .partition(|&v| v <= t as f64);
        let stats = |c: &[f64]| {
            if c.len() < 2 {
                return None;
            }
            let m = c.iter().sum::<f64>() / c.len() as f64;
            let s = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / c.len() as f64).sqrt();
            (s >= STD_FLOOR).then_some((c.len() as f64 / pixels.len() as f64, s))
        };
        let ((p1, s1), (p2, s2)) = (stats(&a)?, stats(&b)?);
        Some(1.0 + 2.0 * (p1 * s1.ln() + p2 * s2.ln()) - 2.0 * (p1 * p1.ln() + p2 * p2.ln()))
    }

    #[test]
    fn bimodal_threshold_separates_modes() {
        let di = bimodal(0.0);
        let t = ki_threshold(&di).unwrap();
        // J is flat across the empty gap, so the smallest minimizer is the top of the low mode.
        assert_eq!(t, 51.0);
        assert!((51.0..199.0).contains(&t));
    }

    #[test]
    fn matches_exhaustive_oracle() {
        let di = Raster::from_fn(40, 40, |x, y| {
            ((x * 37 + y * 11) % 97 + if x > 25 { 120 } else { 0 }) as f64
        });
        let t = ki_threshold(&di).unwrap() as usize;
        let mut best = (f64::INFINITY, 0);
        for cand in 1..=254 {
            if let Some(j) = criterion_oracle(di.pixels(), cand) {
                if j < best.0 {
                    best = (j, cand);
                }
            }
        }
        assert_eq!(t, best.1);
    }

    #[test]
    fn shift_moves_threshold() {
        let t0 = ki_threshold(&bimodal(0.0)).unwrap();
        let t1 = ki_threshold(&bimodal(20.0)).unwrap();
        assert_eq!(t1 - t0, 20.0);
    }

    #[test]
    fn two_valued_histogram_falls_back_to_floored_stds() {
        let di = Raster::from_fn(10, 10, |x, _| if x < 4 { 10.0 } else { 200.0 });
        assert_eq!(ki_threshold(&di).unwrap(), 10.0);
        // one pixel per mode is still too few for either rule
        let pair = Raster::from_rows(&[&[10.0, 200.0]]).unwrap();
        assert!(matches!(
            ki_threshold(&pair),
            Err(Error::DegenerateHistogram)
        ));
    }

    #[test]
    fn constant_histogram_is_degenerate() {
        assert!(matches!(
            ki_threshold(&Raster::filled(8, 8, 9.0)),
            Err(Error::DegenerateHistogram)
        ));
    }

    #[test]
    fn class_stats_examples() {
        let di = Raster::from_rows(&[&[10.0, 10.0, 200.0, 200.0]]).unwrap();
        let s = init_class_stats(&di, 100.0, STD_FLOOR).unwrap();
        assert_eq!(
            (s.mean_u, s.std_u, s.mean_c, s.std_c),
            (10.0, STD_FLOOR, 200.0, STD_FLOOR)
        );

        let di = Raster::from_rows(&[&[0.0, 20.0, 200.0, 210.0]]).unwrap();
        let s = init_class_stats(&di, 100.0, STD_FLOOR).unwrap();
        assert_eq!((s.mean_u, s.std_u), (10.0, 10.0));

        assert!(matches!(
            init_class_stats(&di, -1.0, STD_FLOOR),
            Err(Error::EmptyClass("unchanged"))
        ));
        assert!(matches!(
            init_class_stats(&di, 500.0, STD_FLOOR),
            Err(Error::EmptyClass("changed"))
        ));
    }
}
