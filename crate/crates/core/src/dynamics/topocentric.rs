//! Station-centred range/azimuth/elevation coordinates.
//!
//! Stations sit on a spherical Earth rotating uniformly about the inertial z
//! axis. The local frame is North-East-Up and co-rotates with the Earth, so
//! the angle rates are those seen by the station.

use nalgebra::{Vector3, Vector4, Vector6};
use serde::{Deserialize, Serialize};

use super::frames::{cartesian_to_spherical, spherical_to_cartesian};
use super::{OrbitalState, PhysicalConstants};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticSite {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
}

impl GeodeticSite {
    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude_deg) || !self.longitude_deg.is_finite() {
            return Err(Error::Config(format!(
                "invalid station coordinates ({}, {})",
                self.latitude_deg, self.longitude_deg
            )));
        }
        if !self.altitude_m.is_finite() {
            return Err(Error::Config("non-finite station altitude".into()));
        }
        Ok(())
    }
}

struct LocalFrame {
    north: Vector3<f64>,
    east: Vector3<f64>,
    up: Vector3<f64>,
    position: Vector3<f64>,
}

fn local_frame(site: &GeodeticSite, epoch: f64, c: &PhysicalConstants) -> LocalFrame {
    let lat = site.latitude_deg.to_radians();
    let lon = site.longitude_deg.to_radians() + c.rotation_angle_at_reference + c.earth_rotation_rate * epoch;
    let (sl, cl) = lat.sin_cos();
    let (so, co) = lon.sin_cos();
    let up = Vector3::new(cl * co, cl * so, sl);
    LocalFrame {
        north: Vector3::new(-sl * co, -sl * so, cl),
        east: Vector3::new(-so, co, 0.0),
        position: up * (c.earth_radius + site.altitude_m),
        up,
    }
}

/// Inertial position and velocity of the station at `epoch`.
pub fn station_state(site: &GeodeticSite, epoch: f64, c: &PhysicalConstants) -> OrbitalState {
    let f = local_frame(site, epoch, c);
    let omega = Vector3::new(0.0, 0.0, c.earth_rotation_rate);
    OrbitalState::new(f.position, omega.cross(&f.position), epoch)
}

/// `[range, azimuth, elevation, range_rate, azimuth_rate, elevation_rate]` of
/// `x` as seen from the site at `x.epoch`. Azimuth is measured from North
/// toward East in `[0, 2 pi)`.
pub fn topocentric_state(site: &GeodeticSite, x: &OrbitalState, c: &PhysicalConstants) -> Result<Vector6<f64>> {
    let f = local_frame(site, x.epoch, c);
    let omega = Vector3::new(0.0, 0.0, c.earth_rotation_rate);
    let d = x.position - f.position;
    if d.norm() == 0.0 {
        return Err(Error::Degenerate("zero range to station".into()));
    }
    // relative velocity seen in the rotating frame
    let d_dot = x.velocity - omega.cross(&x.position);
    let local_p = Vector3::new(d.dot(&f.north), d.dot(&f.east), d.dot(&f.up));
    let local_v = Vector3::new(d_dot.dot(&f.north), d_dot.dot(&f.east), d_dot.dot(&f.up));
    cartesian_to_spherical(&local_p, &local_v)
}

/// Inverse of [`topocentric_state`].
pub fn topocentric_to_eci(
    site: &GeodeticSite,
    epoch: f64,
    s: &Vector6<f64>,
    c: &PhysicalConstants,
) -> OrbitalState {
    let f = local_frame(site, epoch, c);
    let omega = Vector3::new(0.0, 0.0, c.earth_rotation_rate);
    let (lp, lv) = spherical_to_cartesian(s);
    let d = f.north * lp.x + f.east * lp.y + f.up * lp.z;
    let d_dot = f.north * lv.x + f.east * lv.y + f.up * lv.z;
    let position = f.position + d;
    OrbitalState::new(position, d_dot + omega.cross(&position), epoch)
}

/// Radar observation mapping: `[range m, azimuth rad, elevation rad, range rate m/s]`.
pub fn eci_to_topocentric(site: &GeodeticSite, x: &OrbitalState, c: &PhysicalConstants) -> Result<Vector4<f64>> {
    let s = topocentric_state(site, x, c)?;
    Ok(Vector4::new(s[0], s[1], s[2], s[3]))
}
