use std::f64::consts::TAU;

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::{OrbitalState, PhysicalConstants};
use crate::{Error, Result};

/// Classical elements. Angles in degrees, mean motion in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerElements {
    pub raan_deg: f64,
    pub inclination_deg: f64,
    pub arg_perigee_deg: f64,
    pub mean_motion: f64,
    pub eccentricity: f64,
    pub mean_anomaly_deg: f64,
}

impl KeplerElements {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.eccentricity) {
            return Err(Error::Input(format!(
                "eccentricity {} outside [0, 1)",
                self.eccentricity
            )));
        }
        if !(self.mean_motion > 0.0) {
            return Err(Error::Input(format!("mean motion {} must be positive", self.mean_motion)));
        }
        let angles = [
            self.raan_deg,
            self.inclination_deg,
            self.arg_perigee_deg,
            self.mean_anomaly_deg,
        ];
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::Input("non-finite angle".into()));
        }
        Ok(())
    }

    pub fn semi_major_axis(&self, c: &PhysicalConstants) -> f64 {
        (c.mu / (self.mean_motion * self.mean_motion)).cbrt()
    }
}

/// Eccentric anomaly from `M = E - e sin E` by Newton iteration.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<f64> {
    let m = mean_anomaly.rem_euclid(TAU);
    let mut ecc = if e > 0.8 { std::f64::consts::PI } else { m };
    for _ in 0..50 {
        let step = (ecc - e * ecc.sin() - m) / (1.0 - e * ecc.cos());
        ecc -= step;
        if step.abs() < 1e-12 {
            return Ok(ecc);
        }
    }
    Err(Error::Numeric(format!(
        "Kepler's equation did not converge (M = {mean_anomaly}, e = {e})"
    )))
}

pub fn kepler_to_cartesian(el: &KeplerElements, c: &PhysicalConstants, epoch: f64) -> Result<OrbitalState> {
    el.validate()?;
    let e = el.eccentricity;
    let a = el.semi_major_axis(c);
    let ecc_anomaly = solve_kepler(el.mean_anomaly_deg.to_radians(), e)?;
    let ce = ecc_anomaly.cos();
    let nu = 2.0 * ((1.0 + e).sqrt() * (ecc_anomaly / 2.0).sin()).atan2((1.0 - e).sqrt() * (ecc_anomaly / 2.0).cos());
    let r = a * (1.0 - e * ce);
    let semi_latus = a * (1.0 - e * e);
    let (sn, cn) = nu.sin_cos();
    let pos_pf = Vector3::new(r * cn, r * sn, 0.0);
    let vel_pf = Vector3::new(-sn, e + cn, 0.0) * (c.mu / semi_latus).sqrt();
    let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), el.raan_deg.to_radians())
        * Rotation3::from_axis_angle(&Vector3::x_axis(), el.inclination_deg.to_radians())
        * Rotation3::from_axis_angle(&Vector3::z_axis(), el.arg_perigee_deg.to_radians());
    Ok(OrbitalState::new(rot * pos_pf, rot * vel_pf, epoch))
}
