//! Inputs shared by the kernel benchmarks.

use changedet_core::diffgen::gauss_log_ratio;
use changedet_core::raster::{add_speckle, make_synthetic_pair, normalize_jointly, Raster};

/// Speckled synthetic pair, jointly mapped to `[1, 256]`.
pub fn noisy_pair(size: usize, seed: u64) -> (Raster, Raster) {
    let pair =
        make_synthetic_pair(size, size, seed).expect("size is at least the synthetic minimum");
    let before = add_speckle(&pair.before, 0.2, seed ^ 1).expect("valid variance");
    let after = add_speckle(&pair.after, 0.2, seed ^ 2).expect("valid variance");
    normalize_jointly(&before, &after, 1.0, 256.0)
}

/// Gauss-log-ratio DI of [`noisy_pair`] in `[1, 256]`, ready for SRAD.
pub fn positive_di(size: usize, seed: u64) -> Raster {
    let (a, b) = noisy_pair(size, seed);
    gauss_log_ratio(&a, &b)
        .expect("equal dims")
        .normalize(1.0, 256.0)
}

/// The same DI in `[0, 255]`, ready for the classifiers.
pub fn classifier_di(size: usize, seed: u64) -> Raster {
    positive_di(size, seed).normalize(0.0, 255.0)
}
