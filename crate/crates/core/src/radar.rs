//! Simulated Doppler radar: field-of-view gating, noisy observations and the
//! Gaussian observation possibility.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use nalgebra::Vector4;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{eci_to_topocentric, station_state, GeodeticSite, OrbitalState, PhysicalConstants};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarStation {
    #[serde(default = "default_station_id")]
    pub id: String,
    pub site: GeodeticSite,
    #[serde(default = "default_fov_radius")]
    pub fov_radius: f64,
    /// Standard deviations of `[range m, azimuth rad, elevation rad, range rate m/s]`.
    #[serde(default = "default_sigmas")]
    pub sigmas: [f64; 4],
}

fn default_station_id() -> String {
    "radar".into()
}

fn default_fov_radius() -> f64 {
    2.0e6
}

fn default_sigmas() -> [f64; 4] {
    [28.0, 0.1_f64.to_radians(), 0.1_f64.to_radians(), 11.0]
}

impl RadarStation {
    pub fn new(id: impl Into<String>, site: GeodeticSite) -> Self {
        Self {
            id: id.into(),
            site,
            fov_radius: default_fov_radius(),
            sigmas: default_sigmas(),
        }
    }

    /// Fairbanks, Alaska.
    pub fn fairbanks() -> Self {
        Self::new(
            "fairbanks",
            GeodeticSite {
                latitude_deg: 64.8378,
                longitude_deg: -147.7164,
                altitude_m: 136.0,
            },
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.site.validate()?;
        if !(self.fov_radius > 0.0) {
            return Err(Error::Config(format!("fov_radius must be positive, got {}", self.fov_radius)));
        }
        if self.sigmas.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::Config(format!("radar sigmas must be positive, got {:?}", self.sigmas)));
        }
        Ok(())
    }

    /// Observation covariance `diag(sigma^2)`.
    pub fn covariance(&self) -> Vector4<f64> {
        Vector4::from_iterator(self.sigmas.iter().map(|s| s * s))
    }

    /// Closed ball of radius `fov_radius` around the station.
    pub fn in_fov(&self, x: &OrbitalState, c: &PhysicalConstants) -> bool {
        let st = station_state(&self.site, x.epoch, c);
        (x.position - st.position).norm() <= self.fov_radius
    }

    /// Noise-free observation `[range, azimuth, elevation, range rate]`.
    pub fn predicted(&self, x: &OrbitalState, c: &PhysicalConstants) -> Result<Vector4<f64>> {
        eci_to_topocentric(&self.site, x, c)
    }

    pub fn observe<R: Rng + ?Sized>(
        &self,
        x: &OrbitalState,
        c: &PhysicalConstants,
        rng: &mut R,
    ) -> Result<RadarObservation> {
        if !self.in_fov(x, c) {
            return Err(Error::OutOfFov(x.epoch));
        }
        let mut y = self.predicted(x, c)?;
        for (k, s) in self.sigmas.iter().enumerate() {
            let eta = Normal::new(0.0, *s)
                .map_err(|e| Error::Config(e.to_string()))?
                .sample(rng);
            y[k] += eta;
        }
        y[0] = y[0].abs();
        let (az, el) = wrap_direction(y[1], y[2]);
        y[1] = az;
        y[2] = el;
        Ok(RadarObservation {
            y,
            epoch: x.epoch,
            station_id: self.id.clone(),
        })
    }

    /// Gaussian possibility of `x` given the observation.
    pub fn h_rad(&self, y: &RadarObservation, x: &OrbitalState, c: &PhysicalConstants) -> Result<f64> {
        Ok(gaussian_possibility(&y.y, &self.predicted(x, c)?, &self.sigmas))
    }

    /// Likelihood counterpart of [`RadarStation::h_rad`]; its value depends on the
    /// units of the observation space.
    pub fn l_rad(&self, y: &RadarObservation, x: &OrbitalState, c: &PhysicalConstants) -> Result<f64> {
        Ok(gaussian_likelihood(&y.y, &self.predicted(x, c)?, &self.sigmas))
    }
}

/// Brings an (azimuth, elevation) pair back to `[0, 2 pi) x [-pi/2, pi/2]`,
/// reflecting through the pole if the elevation overshoots.
pub fn wrap_direction(az: f64, el: f64) -> (f64, f64) {
    let mut el = wrap_pi(el);
    let mut az = az;
    if el > PI / 2.0 {
        el = PI - el;
        az += PI;
    } else if el < -PI / 2.0 {
        el = -PI - el;
        az += PI;
    }
    (wrap_two_pi(az), el)
}

/// Angle in `[0, 2 pi)`.
pub fn wrap_two_pi(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Angle in `(-pi, pi]`.
pub fn wrap_pi(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let w = PI - (PI - a).rem_euclid(TAU);
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Residual `y - o` with the azimuth wrapped to `(-pi, pi]`.
pub fn residual(y: &Vector4<f64>, predicted: &Vector4<f64>) -> Vector4<f64> {
    let mut r = y - predicted;
    r[1] = wrap_pi(r[1]);
    r
}

/// `exp(-r^T S^-1 r / 2)` with `S = diag(sigmas^2)`.
pub fn gaussian_possibility(y: &Vector4<f64>, predicted: &Vector4<f64>, sigmas: &[f64; 4]) -> f64 {
    let r = residual(y, predicted);
    let q: f64 = (0..4).map(|k| (r[k] / sigmas[k]).powi(2)).sum();
    (-0.5 * q).exp()
}

/// Gaussian density: `gaussian_possibility / sqrt(|2 pi S|)`.
pub fn gaussian_likelihood(y: &Vector4<f64>, predicted: &Vector4<f64>, sigmas: &[f64; 4]) -> f64 {
    let det: f64 = sigmas.iter().map(|s| TAU * s * s).product();
    gaussian_possibility(y, predicted, sigmas) / det.sqrt()
}

/// Re-expresses a measurement (or a sigma vector) with range multiplied by
/// `range_scale` and range rate by `rate_scale`; angles are untouched.
pub fn rescale(v: &Vector4<f64>, range_scale: f64, rate_scale: f64) -> Vector4<f64> {
    Vector4::new(v[0] * range_scale, v[1], v[2], v[3] * rate_scale)
}

pub fn rescale_sigmas(s: &[f64; 4], range_scale: f64, rate_scale: f64) -> [f64; 4] {
    [s[0] * range_scale, s[1], s[2], s[3] * rate_scale]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadarObservation {
    /// `[range m, azimuth rad, elevation rad, range rate m/s]`.
    pub y: Vector4<f64>,
    pub epoch: f64,
    pub station_id: String,
}

impl RadarObservation {
    pub fn validate(&self) -> Result<()> {
        let y = &self.y;
        if !(y[0] > 0.0)
            || !(0.0..TAU).contains(&y[1])
            || !(-PI / 2.0..=PI / 2.0).contains(&y[2])
            || !y[3].is_finite()
            || !self.epoch.is_finite()
        {
            return Err(Error::Input(format!(
                "radar observation out of range at t = {}: {:?}",
                self.epoch,
                y.as_slice()
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ObservationRow {
    epoch: f64,
    range: f64,
    azimuth: f64,
    elevation: f64,
    range_rate: f64,
    station_id: String,
}

pub fn write_observations<W: Write>(w: W, obs: &[RadarObservation]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for o in obs {
        wr.serialize(ObservationRow {
            epoch: o.epoch,
            range: o.y[0],
            azimuth: o.y[1],
            elevation: o.y[2],
            range_rate: o.y[3],
            station_id: o.station_id.clone(),
        })?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_observations<R: Read>(r: R) -> Result<Vec<RadarObservation>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize::<ObservationRow>()
        .map(|row| {
            let row = row?;
            Ok(RadarObservation {
                y: Vector4::new(row.range, row.azimuth, row.elevation, row.range_rate),
                epoch: row.epoch,
                station_id: row.station_id,
            })
        })
        .collect()
}
