//! Plain two-class fuzzy c-means on scalar intensities.

use super::{Membership, CHANGED, UNCHANGED};
use crate::raster::{BinaryMap, Raster};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcmParams {
    /// Fuzzifier `m > 1`.
    pub m: f64,
    /// Stop once no centroid moves more than this (DI units).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FcmParams {
    fn default() -> Self {
        Self {
            m: 2.0,
            tol: 1e-6,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmOutcome {
    pub membership: Membership,
    pub labels: BinaryMap,
    /// `[unchanged, changed]`; the changed centroid is the larger one.
    pub centroids: [f64; 2],
    pub iterations: usize,
    pub converged: bool,
}

/// FCM seeded with the DI minimum and maximum as centroids.
pub fn fcm(di: &Raster, params: &FcmParams) -> Result<FcmOutcome> {
    fcm_with_centroids(di, [di.min(), di.max()], params)
}

pub fn fcm_with_centroids(di: &Raster, init: [f64; 2], params: &FcmParams) -> Result<FcmOutcome> {
    if params.max_iter == 0 {
        return Err(Error::InvalidParameter(
            "fcm max_iter must be at least 1".into(),
        ));
    }
    if !(params.m > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fuzzifier {} must exceed 1",
            params.m
        )));
    }
    let exponent = 2.0 / (params.m - 1.0);
    let mut centroids = init;
    let mut u: Vec<[f64; 2]> = vec![[0.5, 0.5]; di.len()];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iter {
        iterations += 1;
        for (row, &y) in u.iter_mut().zip(di.pixels()) {
            *row = memberships(y, centroids, exponent);
        }
        let mut next = [0.0; 2];
        for i in 0..2 {
            let (mut num, mut den) = (0.0, 0.0);
            for (row, &y) in u.iter().zip(di.pixels()) {
                let w = row[i].powf(params.m);
                num += w * y;
                den += w;
            }
            next[i] = if den > 0.0 { num / den } else { centroids[i] };
        }
        let shift = (next[0] - centroids[0])
            .abs()
            .max((next[1] - centroids[1]).abs());
        centroids = next;
        if shift < params.tol {
            converged = true;
            break;
        }
    }
    // Memberships consistent with the final centroids.
    for (row, &y) in u.iter_mut().zip(di.pixels()) {
        *row = memberships(y, centroids, exponent);
    }

    if centroids[UNCHANGED] > centroids[CHANGED] {
        centroids.swap(0, 1);
        u.iter_mut().for_each(|row| row.swap(0, 1));
    }
    let membership = Membership::new(di.width(), di.height(), u)?;
    let labels = membership.labels();
    Ok(FcmOutcome {
        membership,
        labels,
        centroids,
        iterations,
        converged,
    })
}

/// `u_i = 1 / sum_k (d_i / d_k)^(2/(m-1))`; a zero distance takes all the
/// membership (shared equally if both distances vanish).
#[inline]
fn memberships(y: f64, centroids: [f64; 2], exponent: f64) -> [f64; 2] {
    let d0 = (y - centroids[0]).abs();
    let d1 = (y - centroids[1]).abs();
    match (d0 == 0.0, d1 == 0.0) {
        (true, true) => [0.5, 0.5],
        (true, false) => [1.0, 0.0],
        (false, true) => [0.0, 1.0],
        (false, false) => {
            let u0 = 1.0 / (1.0 + (d0 / d1).powf(exponent));
            [u0, 1.0 - u0]
        }
    }
}
