//! Agreement between a change map and a reference map.
//!
//! Changed is the positive class. OE and PCC are percentages, kappa is the
//! chance-corrected agreement, RMSE is taken over `{0, 1}`-valued maps and
//! PSNR uses a peak of 255, capped to `[0, 99]` dB.

use crate::raster::BinaryMap;
use crate::{Error, Result};

/// Default peak value for [`psnr`].
pub const PSNR_PEAK: f64 = 255.0;
/// PSNR reported for identical maps.
pub const PSNR_CAP: f64 = 99.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    #[inline]
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Pixels changed in the reference.
    #[inline]
    pub fn reference_changed(&self) -> u64 {
        self.tp + self.fn_
    }

    #[inline]
    pub fn reference_unchanged(&self) -> u64 {
        self.fp + self.tn
    }

    /// Pixels labelled changed by the map.
    #[inline]
    pub fn predicted_changed(&self) -> u64 {
        self.tp + self.fp
    }

    #[inline]
    pub fn predicted_unchanged(&self) -> u64 {
        self.tn + self.fn_
    }

    #[inline]
    pub fn errors(&self) -> u64 {
        self.fp + self.fn_
    }

    /// Counts with the positive and negative classes exchanged.
    pub fn swapped_classes(&self) -> Self {
        Self {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }

    fn nonempty_total(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::EmptyCounts),
            n => Ok(n as f64),
        }
    }
}

pub fn confusion(map: &BinaryMap, reference: &BinaryMap) -> Result<ConfusionCounts> {
    if map.dims() != reference.dims() {
        return Err(Error::DimensionMismatch(
            map.width(),
            map.height(),
            reference.width(),
            reference.height(),
        ));
    }
    let mut c = ConfusionCounts::default();
    for (m, r) in map.labels().iter().zip(reference.labels()) {
        match (m.is_changed(), r.is_changed()) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Overall error, percent.
pub fn oe(c: &ConfusionCounts) -> Result<f64> {
    Ok(100.0 * c.errors() as f64 / c.nonempty_total()?)
}

/// Percentage correct classification, `100 (TP+TN) / N`. Evaluated as
/// `100 - OE` so that the two always sum to exactly 100 in floating point.
pub fn pcc(c: &ConfusionCounts) -> Result<f64> {
    Ok(100.0 - oe(c)?)
}

/// Kappa coefficient with `PRE = [(TP+FN) Nc + (FP+TN) Nu] / N^2`, where
/// `Nc = TP+FP` and `Nu = TN+FN` are the map's class totals. PCC enters as a
/// fraction.
pub fn kappa(c: &ConfusionCounts) -> Result<f64> {
    let n = c.nonempty_total()?;
    let pcc_fraction = (c.tp + c.tn) as f64 / n;
    let pre = (c.reference_changed() as f64 * c.predicted_changed() as f64
        + c.reference_unchanged() as f64 * c.predicted_unchanged() as f64)
        / (n * n);
    if pre >= 1.0 {
        return Err(Error::UndefinedKappa);
    }
    Ok((pcc_fraction - pre) / (1.0 - pre))
}

/// Root mean square difference of the maps read as `{0, 1}` images.
pub fn rmse(map: &BinaryMap, reference: &BinaryMap) -> Result<f64> {
    let c = confusion(map, reference)?;
    Ok((c.errors() as f64 / c.nonempty_total()?).sqrt())
}

/// `10 log10(peak^2 / rmse^2)`, clamped to `[0, 99]`; zero error gives 99.
pub fn psnr(rmse_val: f64, peak: f64) -> Result<f64> {
    if rmse_val < 0.0 || rmse_val.is_nan() {
        return Err(Error::NegativeRmse(rmse_val));
    }
    if rmse_val == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (peak * peak / (rmse_val * rmse_val)).log10()).clamp(0.0, PSNR_CAP))
}

/// The five criteria for one map. `kc` is `None` when kappa is undefined
/// (reference and map both hold a single, identical class).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub oe_percent: f64,
    pub pcc_percent: f64,
    pub kc: Option<f64>,
    pub rmse: f64,
    pub psnr_db: f64,
}

impl MetricReport {
    pub fn from_counts(c: &ConfusionCounts) -> Result<Self> {
        let n = c.nonempty_total()?;
        let kc = match kappa(c) {
            Ok(k) => Some(k),
            Err(Error::UndefinedKappa) => None,
            Err(e) => return Err(e),
        };
        let rmse = (c.errors() as f64 / n).sqrt();
        Ok(Self {
            oe_percent: oe(c)?,
            pcc_percent: pcc(c)?,
            kc,
            rmse,
            psnr_db: psnr(rmse, PSNR_PEAK)?,
        })
    }

    pub fn evaluate(map: &BinaryMap, reference: &BinaryMap) -> Result<Self> {
        Self::from_counts(&confusion(map, reference)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Label;
    use proptest::prelude::*;

    fn map(rows: &[&str]) -> BinaryMap {
        let w = rows[0].len();
        BinaryMap::from_fn(w, rows.len(), |x, y| {
            if rows[y].as_bytes()[x] == b'C' {
                Label::Changed
            } else {
                Label::Unchanged
            }
        })
    }

    #[test]
    fn confusion_examples() {
        let reference = map(&["CU", "UU"]);
        let c = confusion(&map(&["CC", "UU"]), &reference).unwrap();
        assert_eq!(c, ConfusionCounts::new(1, 2, 1, 0));
        let same = confusion(&reference, &reference).unwrap();
        assert_eq!((same.fp, same.fn_), (0, 0));
        let inverted = confusion(&reference.complement(), &reference).unwrap();
        assert_eq!((inverted.tp, inverted.tn), (0, 0));
        assert!(confusion(&map(&["CU"]), &reference).is_err());
    }

    #[test]
    fn oe_and_pcc_examples() {
        assert_eq!(oe(&ConfusionCounts::new(10, 90, 0, 0)).unwrap(), 0.0);
        assert_eq!(oe(&ConfusionCounts::new(15, 75, 5, 5)).unwrap(), 10.0);
        assert_eq!(pcc(&ConfusionCounts::new(15, 75, 5, 5)).unwrap(), 90.0);
        assert_eq!(pcc(&ConfusionCounts::new(0, 0, 3, 7)).unwrap(), 0.0);
        assert_eq!(pcc(&ConfusionCounts::new(3, 7, 0, 0)).unwrap(), 100.0);
        assert!(matches!(
            oe(&ConfusionCounts::default()),
            Err(Error::EmptyCounts)
        ));
        assert!(matches!(
            pcc(&ConfusionCounts::default()),
            Err(Error::EmptyCounts)
        ));
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(&ConfusionCounts::new(20, 80, 0, 0)).unwrap(), 1.0);
        // PRE = (20*20 + 80*80) / 100^2 = 0.68, KC = (0.90 - 0.68) / 0.32
        let k = kappa(&ConfusionCounts::new(15, 75, 5, 5)).unwrap();
        assert!((k - 0.6875).abs() < 1e-12);
        assert!(matches!(
            kappa(&ConfusionCounts::new(0, 100, 0, 0)),
            Err(Error::UndefinedKappa)
        ));
        // map-side marginals matter: same PCC, different PRE
        let lopsided = kappa(&ConfusionCounts::new(10, 80, 0, 10)).unwrap();
        assert!((lopsided - (0.9 - 0.74) / 0.26).abs() < 1e-12);
    }

    #[test]
    fn rmse_examples() {
        let a = map(&["CU", "UU"]);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert_eq!(rmse(&map(&["CC", "UU"]), &a).unwrap(), 0.5);
    }

    #[test]
    fn psnr_examples() {
        assert_eq!(psnr(0.0, 255.0).unwrap(), 99.0);
        assert!(psnr(255.0, 255.0).unwrap().abs() < 1e-12);
        assert!((psnr(0.298, 255.0).unwrap() - 58.663).abs() < 0.05);
        assert!(psnr(1e-9, 255.0).unwrap() == 99.0);
        assert!(psnr(1000.0, 255.0).unwrap() == 0.0);
        assert!(matches!(psnr(-1.0, 255.0), Err(Error::NegativeRmse(_))));
    }

    #[test]
    fn report_handles_single_class_scenes() {
        let blank = BinaryMap::filled(4, 4, Label::Unchanged);
        let r = MetricReport::evaluate(&blank, &blank).unwrap();
        assert_eq!(r.oe_percent, 0.0);
        assert_eq!(r.kc, None);
        assert_eq!(r.psnr_db, 99.0);
    }

    proptest! {
        #[test]
        fn identities(tp in 0u64..5000, tn in 0u64..5000, fp in 0u64..5000, fn_ in 0u64..5000) {
            let c = ConfusionCounts::new(tp, tn, fp, fn_);
            prop_assume!(c.total() > 0);
            prop_assert_eq!(oe(&c).unwrap() + pcc(&c).unwrap(), 100.0);
            match (kappa(&c), kappa(&c.swapped_classes())) {
                (Ok(a), Ok(b)) => {
                    prop_assert!((a - b).abs() < 1e-12);
                    prop_assert!(a <= 1.0 + 1e-12);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "kappa definedness must not depend on class naming"),
            }
        }

        #[test]
        fn psnr_strictly_decreasing(a in 1e-3f64..255.0, b in 1e-3f64..255.0) {
            prop_assume!(a < b && b - a > 1e-9);
            let (pa, pb) = (psnr(a, 255.0).unwrap(), psnr(b, 255.0).unwrap());
            // the cap at 99 dB only binds below rmse ~ 2.8e-3
            if a > 3e-3 {
                prop_assert!(pa > pb);
            } else {
                prop_assert!(pa >= pb);
            }
        }
    }
}
