//! Sequential Monte Carlo filter driven by possibility-based updates.
//!
//! Three update cases: prediction only (weights carried over), TLE
//! reweighting, and a Gaussian/Kalman resampling step for radar data. All
//! random draws happen on the calling thread in a fixed order; only
//! propagation and possibility evaluation fan out to the rayon pool.

mod cloud;
mod gaussian;

use nalgebra::Vector6;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cloud::{ric_error_stats, systematic_indices, ParticleCloud, RicStats, WEIGHT_SUM_TOL};
pub use gaussian::{
    kalman_update, observation_matrix, sample_gaussian, sampling_factor, to_spherical_gaussian, weighted_gaussian,
    SphericalFrame, SphericalGaussian,
};

use crate::dynamics::{propagate, ForceModel, IntegratorConfig, OrbitalState, PhysicalConstants, ProcessNoiseSample};
use crate::radar::{gaussian_possibility, RadarObservation, RadarStation};
use crate::tle::{h_tle, TleModelParams};
use crate::{Error, Result};

/// What to do when a TLE is incompatible with every particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IncompatiblePolicy {
    /// Keep the prior weights and log a warning.
    #[default]
    Skip,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub particles: usize,
    pub resample_threshold: f64,
    /// Per-axis RIC standard deviation of the acceleration-rate noise, m/s^3.
    pub process_noise: [f64; 3],
    /// Sampling bounds for the unobserved azimuth rate, rad/s.
    pub azimuth_rate_bounds: [f64; 2],
    /// Sampling bounds for the unobserved elevation rate, rad/s.
    pub elevation_rate_bounds: [f64; 2],
    /// Lowest admissible perigee altitude, m.
    pub min_perigee_altitude: f64,
    /// Draw budget for the admissible-region and posterior rejection samplers.
    pub max_draws: usize,
    pub on_incompatible_tle: IncompatiblePolicy,
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            particles: 500,
            resample_threshold: 0.2,
            process_noise: [1e-5; 3],
            azimuth_rate_bounds: [-0.01, 0.01],
            elevation_rate_bounds: [-0.01, 0.01],
            min_perigee_altitude: 200e3,
            max_draws: 10_000_000,
            on_incompatible_tle: IncompatiblePolicy::Skip,
            seed: 0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::Config(format!("need at least 2 particles, got {}", self.particles)));
        }
        if !(self.resample_threshold > 0.0 && self.resample_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "resample_threshold must lie in (0, 1], got {}",
                self.resample_threshold
            )));
        }
        if self.process_noise.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::Config("process noise sigmas must be finite and non-negative".into()));
        }
        for b in [self.azimuth_rate_bounds, self.elevation_rate_bounds] {
            if !(b[0] <= b[1]) || !b[0].is_finite() || !b[1].is_finite() {
                return Err(Error::Config(format!("invalid angular rate bounds {b:?}")));
            }
        }
        if self.max_draws == 0 {
            return Err(Error::Config("max_draws must be positive".into()));
        }
        Ok(())
    }
}

/// Admissible state: bounded orbit with perigee above the configured altitude.
pub fn is_admissible(x: &OrbitalState, min_perigee_altitude: f64, c: &PhysicalConstants) -> bool {
    x.is_finite() && x.specific_energy(c) < 0.0 && x.perigee_radius(c) >= c.earth_radius + min_perigee_altitude
}

/// Result of a TLE update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TleUpdate {
    /// False when the record was incompatible and skipped.
    pub applied: bool,
    /// Effective ratio right after reweighting, before any resampling.
    pub ratio: f64,
    pub resampled: bool,
}

/// Environment shared by every filter operation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterModel {
    pub config: FilterConfig,
    pub constants: PhysicalConstants,
    pub force: ForceModel,
    pub integrator: IntegratorConfig,
}

impl FilterModel {
    pub fn new(config: FilterConfig) -> Self {
        Self {
            config,
            ..Self::default()
        }
    }

    /// Builds the first cloud from a radar observation by sampling the
    /// unobserved angular rates and keeping admissible states.
    pub fn init_admissible_region<R: Rng + ?Sized>(
        &self,
        y: &RadarObservation,
        station: &RadarStation,
        rng: &mut R,
    ) -> Result<ParticleCloud> {
        y.validate()?;
        let cfg = &self.config;
        let n = cfg.particles;
        let (az, el) = (cfg.azimuth_rate_bounds, cfg.elevation_rate_bounds);
        let mut states = Vec::with_capacity(n);
        let mut drawn = 0;
        while states.len() < n && drawn < cfg.max_draws {
            drawn += 1;
            let az_rate = az[0] + (az[1] - az[0]) * rng.random::<f64>();
            let el_rate = el[0] + (el[1] - el[0]) * rng.random::<f64>();
            let s = Vector6::new(y.y[0], y.y[1], y.y[2], y.y[3], az_rate, el_rate);
            let x = SphericalFrame::Topocentric(&station.site).to_cartesian(&s, y.epoch, &self.constants);
            if is_admissible(&x, cfg.min_perigee_altitude, &self.constants) {
                states.push(x);
            }
        }
        if states.len() < n {
            return Err(Error::Infeasible {
                accepted: states.len(),
                drawn,
            });
        }
        log::debug!("admissible region: {n} particles from {drawn} draws");
        ParticleCloud::uniform(states, y.epoch)
    }

    /// Propagates every particle to `t_target` with a fresh process-noise
    /// draw each. Weights are unchanged.
    pub fn predict<R: Rng + ?Sized>(&self, cloud: &ParticleCloud, t_target: f64, rng: &mut R) -> Result<ParticleCloud> {
        if t_target < cloud.epoch() {
            return Err(Error::Input(format!(
                "prediction target {t_target} precedes cloud epoch {}",
                cloud.epoch()
            )));
        }
        if t_target == cloud.epoch() {
            return Ok(cloud.clone());
        }
        let noise = self.draw_noise(cloud.len(), rng)?;
        let states = cloud
            .states()
            .par_iter()
            .zip(noise.par_iter())
            .map(|(x, w)| propagate(x, t_target, w.as_ref(), &self.constants, &self.force, &self.integrator))
            .collect::<Result<Vec<_>>>()?;
        let mut out = cloud.clone();
        out.replace_states(states, t_target);
        Ok(out)
    }

    fn draw_noise<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Option<ProcessNoiseSample>>> {
        let sig = self.config.process_noise;
        if sig.iter().all(|s| *s == 0.0) {
            return Ok(vec![None; n]);
        }
        let dists = sig
            .iter()
            .map(|s| Normal::new(0.0, *s).map_err(|e| Error::Config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..n)
            .map(|_| {
                let v = nalgebra::Vector3::new(dists[0].sample(rng), dists[1].sample(rng), dists[2].sample(rng));
                Some(ProcessNoiseSample(v))
            })
            .collect())
    }

    /// Reweights by the TLE possibility, then resamples if the effective
    /// ratio drops below the threshold.
    pub fn update_tle<R: Rng + ?Sized>(
        &self,
        cloud: &mut ParticleCloud,
        y: &OrbitalState,
        params: &TleModelParams,
        rng: &mut R,
    ) -> Result<TleUpdate> {
        if y.epoch != cloud.epoch() {
            return Err(Error::Input(format!(
                "TLE epoch {} differs from cloud epoch {}",
                y.epoch,
                cloud.epoch()
            )));
        }
        let c = &self.constants;
        let h = cloud
            .states()
            .par_iter()
            .map(|x| h_tle(y, x, params, c))
            .collect::<Result<Vec<_>>>()?;
        match cloud.reweight(&h) {
            Ok(_) => {}
            Err(Error::Incompatible) if self.config.on_incompatible_tle == IncompatiblePolicy::Skip => {
                log::warn!("TLE at t = {} is incompatible with every particle; update skipped", y.epoch);
                return Ok(TleUpdate {
                    applied: false,
                    ratio: cloud.effective_ratio(),
                    resampled: false,
                });
            }
            Err(e) => return Err(e),
        }
        let ratio = cloud.effective_ratio();
        let resampled = self.maybe_resample(cloud, rng);
        Ok(TleUpdate {
            applied: true,
            ratio,
            resampled,
        })
    }

    /// Resamples in place when the effective ratio is below the threshold.
    pub fn maybe_resample<R: Rng + ?Sized>(&self, cloud: &mut ParticleCloud, rng: &mut R) -> bool {
        if cloud.effective_ratio() < self.config.resample_threshold {
            *cloud = cloud.resample(rng);
            true
        } else {
            false
        }
    }

    /// Radar possibility `h_rad(y | x)` of every particle.
    pub fn radar_possibilities(
        &self,
        cloud: &ParticleCloud,
        y: &RadarObservation,
        station: &RadarStation,
    ) -> Result<Vec<f64>> {
        let c = &self.constants;
        cloud
            .states()
            .par_iter()
            .map(|x| Ok(gaussian_possibility(&y.y, &station.predicted(x, c)?, &station.sigmas)))
            .collect()
    }

    /// Radar update through a Gaussian approximation in the sensor frame: a
    /// Kalman step followed by fresh sampling. Output weights are uniform.
    pub fn update_radar<R: Rng + ?Sized>(
        &self,
        cloud: &ParticleCloud,
        y: &RadarObservation,
        station: &RadarStation,
        rng: &mut R,
    ) -> Result<ParticleCloud> {
        y.validate()?;
        if y.epoch != cloud.epoch() {
            return Err(Error::Input(format!(
                "observation epoch {} differs from cloud epoch {}",
                y.epoch,
                cloud.epoch()
            )));
        }
        let c = &self.constants;
        let frame = SphericalFrame::Topocentric(&station.site);
        let prior = to_spherical_gaussian(cloud, frame, c)?;
        let post = kalman_update(&prior, &y.y, &station.covariance())?;
        let factor = sampling_factor(&post.spread);

        let n = cloud.len();
        let mut states = Vec::with_capacity(n);
        let mut drawn = 0;
        while states.len() < n && drawn < self.config.max_draws {
            drawn += 1;
            let s = sample_gaussian(&post.mean, &factor, rng);
            let x = frame.to_cartesian(&s, y.epoch, c);
            if is_admissible(&x, self.config.min_perigee_altitude, c) {
                states.push(x);
            }
        }
        if states.len() < n {
            return Err(Error::Infeasible {
                accepted: states.len(),
                drawn,
            });
        }
        if drawn > n {
            log::debug!("radar update at t = {}: {} inadmissible samples rejected", y.epoch, drawn - n);
        }
        ParticleCloud::uniform(states, y.epoch)
    }

    pub fn map_estimate(&self, cloud: &ParticleCloud) -> Result<OrbitalState> {
        map_estimate(cloud, &self.constants)
    }
}

/// Weighted mean in geocentric spherical coordinates, mapped back to
/// Cartesian.
pub fn map_estimate(cloud: &ParticleCloud, c: &PhysicalConstants) -> Result<OrbitalState> {
    let g = to_spherical_gaussian(cloud, SphericalFrame::Eci, c)?;
    Ok(SphericalFrame::Eci.to_cartesian(&g.mean, cloud.epoch(), c))
}
