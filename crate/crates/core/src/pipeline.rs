//! End-to-end detection: difference image, optional SRAD, classifier.

use std::fmt;
use std::str::FromStr;

use crate::cluster::{fcm, mrffcm, FcmParams, MrffcmParams};
use crate::diffgen::{gauss_log_ratio, log_ratio};
use crate::raster::{normalize_jointly, BinaryMap, Label, Raster};
use crate::srad::{srad, SradParams};
use crate::{Error, Result};

/// Inputs are mapped onto this range before any logarithm is taken.
pub const LOG_DOMAIN: (f64, f64) = (1.0, 256.0);
/// Range of the difference image handed to the classifiers.
pub const DI_RANGE: (f64, f64) = (0.0, 255.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiOperator {
    LogRatio,
    GaussLogRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Denoise {
    None,
    Srad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classifier {
    Fcm,
    Mrffcm,
}

macro_rules! string_enum {
    ($ty:ty { $($variant:path => $name:literal $(| $alias:literal)*),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name $(| $alias)* => Ok($variant),)+
                    other => Err(Error::InvalidParameter(format!(
                        concat!("unknown ", stringify!($ty), " '{}'"), other
                    ))),
                }
            }
        }
    };
}

string_enum!(DiOperator {
    DiOperator::LogRatio => "log_ratio" | "log-ratio",
    DiOperator::GaussLogRatio => "gauss_log_ratio" | "gauss-log-ratio",
});
string_enum!(Denoise { Denoise::None => "none", Denoise::Srad => "srad" });
string_enum!(Classifier { Classifier::Fcm => "fcm", Classifier::Mrffcm => "mrffcm" });

/// Named stage combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preset {
    /// Gauss-log ratio, SRAD, MRFFCM.
    Proposed,
    /// Log-ratio, no denoising, MRFFCM.
    Baseline,
    /// Log-ratio, no denoising, plain FCM.
    Fcm,
}

string_enum!(Preset {
    Preset::Proposed => "proposed",
    Preset::Baseline => "baseline" | "mrffcm",
    Preset::Fcm => "fcm",
});

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Proposed, Preset::Baseline, Preset::Fcm];

    pub fn config(self) -> PipelineConfig {
        let base = PipelineConfig::default();
        match self {
            Preset::Proposed => base,
            Preset::Baseline => PipelineConfig {
                di_operator: DiOperator::LogRatio,
                denoise: Denoise::None,
                ..base
            },
            Preset::Fcm => PipelineConfig {
                di_operator: DiOperator::LogRatio,
                denoise: Denoise::None,
                classifier: Classifier::Fcm,
                ..base
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub di_operator: DiOperator,
    pub denoise: Denoise,
    pub classifier: Classifier,
    pub srad: SradParams,
    /// SRAD runs on the DI mapped to `[srad_floor, srad_floor + 255]`.
    pub srad_floor: f64,
    pub mrffcm: MrffcmParams,
    pub fcm: FcmParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            di_operator: DiOperator::GaussLogRatio,
            denoise: Denoise::Srad,
            classifier: Classifier::Mrffcm,
            srad: SradParams::default(),
            srad_floor: LOG_DOMAIN.0,
            mrffcm: MrffcmParams::default(),
            fcm: FcmParams::default(),
        }
    }
}

/// Intermediate products of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Difference image as produced by the operator, before any rescaling.
    pub raw_di: Raster,
    /// The classifier input, in `[0, 255]`.
    pub di: Raster,
    pub map: BinaryMap,
}

/// Stage order: joint `[1, 256]` normalization, DI operator, optional SRAD
/// (on the DI rescaled to `[1, 256]`), `[0, 255]` normalization, classifier.
/// A constant DI carries no change evidence and yields an all-unchanged map.
pub fn detect(before: &Raster, after: &Raster, config: &PipelineConfig) -> Result<Detection> {
    before.ensure_same_dims(after)?;
    let (x1, x2) = normalize_jointly(before, after, LOG_DOMAIN.0, LOG_DOMAIN.1);
    let raw_di = match config.di_operator {
        DiOperator::LogRatio => log_ratio(&x1, &x2)?,
        DiOperator::GaussLogRatio => gauss_log_ratio(&x1, &x2)?,
    };
    let (w, h) = raw_di.dims();
    if raw_di.min() == raw_di.max() {
        let di = Raster::filled(w, h, DI_RANGE.0);
        return Ok(Detection {
            raw_di,
            di,
            map: BinaryMap::filled(w, h, Label::Unchanged),
        });
    }

    let di = match config.denoise {
        Denoise::None => raw_di.normalize(DI_RANGE.0, DI_RANGE.1),
        Denoise::Srad => {
            let positive = raw_di.normalize(config.srad_floor, config.srad_floor + 255.0);
            srad(&positive, &config.srad)?.normalize(DI_RANGE.0, DI_RANGE.1)
        }
    };
    let map = classify(&di, config)?;
    Ok(Detection { raw_di, di, map })
}

fn classify(di: &Raster, config: &PipelineConfig) -> Result<BinaryMap> {
    if di.min() == di.max() {
        return Ok(BinaryMap::filled(di.width(), di.height(), Label::Unchanged));
    }
    match config.classifier {
        Classifier::Fcm => Ok(fcm(di, &config.fcm)?.labels),
        Classifier::Mrffcm => Ok(mrffcm(di, &config.mrffcm)?.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricReport;
    use crate::raster::make_synthetic_pair;

    #[test]
    fn presets_wire_the_expected_stages() {
        let p = Preset::Proposed.config();
        assert_eq!(
            (p.di_operator, p.denoise, p.classifier),
            (DiOperator::GaussLogRatio, Denoise::Srad, Classifier::Mrffcm)
        );
        let b = Preset::Baseline.config();
        assert_eq!(
            (b.di_operator, b.denoise, b.classifier),
            (DiOperator::LogRatio, Denoise::None, Classifier::Mrffcm)
        );
        let f = Preset::Fcm.config();
        assert_eq!(
            (f.di_operator, f.denoise, f.classifier),
            (DiOperator::LogRatio, Denoise::None, Classifier::Fcm)
        );
    }

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.as_str().parse::<Preset>().unwrap(), p);
        }
        assert_eq!(
            "gauss-log-ratio".parse::<DiOperator>().unwrap(),
            DiOperator::GaussLogRatio
        );
        assert!("median".parse::<Denoise>().is_err());
    }

    #[test]
    fn identical_inputs_give_an_empty_map() {
        let pair = make_synthetic_pair(64, 64, 3).unwrap();
        for preset in Preset::ALL {
            let out = detect(&pair.before, &pair.before, &preset.config()).unwrap();
            assert_eq!(out.map.changed_count(), 0);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = Raster::filled(8, 8, 1.0);
        let b = Raster::filled(8, 9, 1.0);
        assert!(matches!(
            detect(&a, &b, &PipelineConfig::default()),
            Err(Error::DimensionMismatch(..))
        ));
    }

    #[test]
    fn log_ratio_presets_detect_a_clean_pair_exactly() {
        let pair = make_synthetic_pair(128, 128, 1).unwrap();
        for preset in [Preset::Baseline, Preset::Fcm] {
            let out = detect(&pair.before, &pair.after, &preset.config()).unwrap();
            let report = MetricReport::evaluate(&out.map, &pair.reference).unwrap();
            assert_eq!(report.pcc_percent, 100.0, "{preset}");
        }
    }
}
