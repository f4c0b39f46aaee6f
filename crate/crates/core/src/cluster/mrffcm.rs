//! Fuzzy clustering with an MRF-weighted membership update.
//!
//! Initialization: Kittler-Illingworth threshold -> class means/stds, and a
//! plain FCM run seeded with those means for the starting membership. Each
//! iteration then
//!
//! 1. collects neighbourhood evidence (mean membership, neighbour label counts),
//! 2. turns it into per-class energies and pointwise priors,
//! 3. scores each pixel against the class Gaussians (negative log-likelihood),
//! 4. evaluates the objective and stops when it moves by at most
//!    `delta * pixel_count`,
//! 5. otherwise replaces the membership with the prior-weighted likelihoods
//!    and re-estimates the class means and stds from it.

use super::{
    conditional_distance, fcm_with_centroids, init_class_stats, ki_threshold_with_floor,
    mrf_energy, neighborhood_stats, objective, prior_probs, update_membership, update_stats,
    ClassField, ClassStats, FcmParams, Membership, P_FLOOR, STD_FLOOR,
};
use crate::raster::{BinaryMap, Raster};
use crate::{Error, Result};

/// Sign given to the neighbour-count term of the energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergySign {
    /// `E = -ln mu - beta t n`: neighbour support lowers a class's energy.
    #[default]
    Smoothing,
    /// `E = -ln mu + beta t n`.
    AsPrinted,
}

impl std::str::FromStr for EnergySign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoothing" => Ok(EnergySign::Smoothing),
            "as_printed" | "as-printed" => Ok(EnergySign::AsPrinted),
            other => Err(Error::InvalidParameter(format!(
                "unknown energy sign '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrffcmParams {
    /// Stop tolerance on the objective change, per pixel.
    pub delta: f64,
    pub max_iter: usize,
    /// Strength of the neighbour-count term. Zero switches the MRF prior off
    /// entirely (flat priors), leaving a pure Gaussian-likelihood update.
    pub beta0: f64,
    pub energy_sign: EnergySign,
    pub std_floor: f64,
    pub p_floor: f64,
    pub fcm: FcmParams,
}

impl Default for MrffcmParams {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            max_iter: 100,
            beta0: 1.0,
            energy_sign: EnergySign::Smoothing,
            std_floor: STD_FLOOR,
            p_floor: P_FLOOR,
            fcm: FcmParams::default(),
        }
    }
}

impl MrffcmParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "mrffcm max_iter must be at least 1".into(),
            ));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta {} must be non-negative",
                self.delta
            )));
        }
        if !(self.beta0 >= 0.0) || !self.beta0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta0 {} must be finite and non-negative",
                self.beta0
            )));
        }
        if !(self.std_floor > 0.0) || !(self.p_floor > 0.0) {
            return Err(Error::InvalidParameter("floors must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrffcmState {
    /// Current partition; after a step it is the update of `prior` and `distance`.
    pub membership: Membership,
    /// Class parameters that produced `distance`.
    pub stats: ClassStats,
    pub energy: ClassField,
    pub prior: ClassField,
    pub distance: ClassField,
    pub objective: f64,
    /// Completed iterations.
    pub iteration: usize,
    pub converged: bool,
}

/// Step-wise driver; [`mrffcm`] runs it to completion.
#[derive(Debug, Clone)]
pub struct Mrffcm<'a> {
    di: &'a Raster,
    params: MrffcmParams,
    state: MrffcmState,
    done: bool,
}

impl<'a> Mrffcm<'a> {
    /// Runs the initialization stage.
    pub fn new(di: &'a Raster, params: MrffcmParams) -> Result<Self> {
        params.validate()?;
        let t = ki_threshold_with_floor(di, params.std_floor)?;
        let stats = init_class_stats(di, t, params.std_floor)?;
        let init = fcm_with_centroids(di, [stats.mean_u, stats.mean_c], &params.fcm)?;
        let (w, h) = di.dims();
        let state = MrffcmState {
            membership: init.membership,
            stats,
            energy: ClassField::filled(w, h, [0.0, 0.0]),
            prior: ClassField::filled(w, h, [0.5, 0.5]),
            distance: conditional_distance(di, &stats),
            objective: f64::NAN,
            iteration: 0,
            converged: false,
        };
        Ok(Self {
            di,
            params,
            state,
            done: false,
        })
    }

    pub fn state(&self) -> &MrffcmState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// One iteration. Returns `true` once the run has stopped, either on the
    /// objective tolerance or on `max_iter`.
    pub fn step(&mut self) -> Result<bool> {
        if self.done {
            return Ok(true);
        }
        let p = &self.params;
        let s = &mut self.state;
        let (w, h) = self.di.dims();

        let energy = if p.beta0 > 0.0 {
            let labels = s.membership.labels();
            let nbhd = neighborhood_stats(&s.membership, &labels)?;
            Some(mrf_energy(
                &s.membership,
                &nbhd,
                p.beta0,
                p.energy_sign,
                p.p_floor,
            )?)
        } else {
            None
        };
        let prior = match &energy {
            Some(e) => prior_probs(e),
            None => ClassField::filled(w, h, [0.5, 0.5]),
        };
        let distance = conditional_distance(self.di, &s.stats);
        let j = objective(&s.membership, &distance)?;
        let tolerance = p.delta * self.di.len() as f64;
        let converged = s.iteration > 0 && (j - s.objective).abs() <= tolerance;

        s.membership = update_membership(&prior, &distance)?;
        s.energy = energy.unwrap_or_else(|| ClassField::filled(w, h, [0.0, 0.0]));
        s.prior = prior;
        s.distance = distance;
        s.objective = j;
        s.iteration += 1;
        s.converged = converged;

        if converged || s.iteration >= p.max_iter {
            self.done = true;
        } else {
            s.stats = update_stats(&s.membership, self.di, p.std_floor)?;
        }
        Ok(self.done)
    }

    /// Runs to completion and labels the result. The class with the larger
    /// mean is reported as changed; exact membership ties are unchanged.
    pub fn finish(mut self) -> Result<(BinaryMap, MrffcmState)> {
        while !self.step()? {}
        let mut state = self.state;
        if state.stats.mean_u > state.stats.mean_c {
            state = MrffcmState {
                membership: state.membership.swapped(),
                stats: state.stats.swapped(),
                energy: state.energy.swapped(),
                prior: state.prior.swapped(),
                distance: state.distance.swapped(),
                ..state
            };
        }
        Ok((state.membership.labels(), state))
    }
}

/// Runs MRFFCM on a DI normalized to `[0, 255]`.
pub fn mrffcm(di: &Raster, params: &MrffcmParams) -> Result<(BinaryMap, MrffcmState)> {
    Mrffcm::new(di, *params)?.finish()
}
