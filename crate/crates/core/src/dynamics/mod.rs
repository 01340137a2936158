//! Orbital states, frames, element conversion and numerical propagation.

mod frames;
mod kepler;
mod propagate;
mod topocentric;

use std::io::{Read, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub use frames::{cartesian_to_spherical, eci_to_ric, ric_to_eci, spherical_to_cartesian, RicFrame};
pub use kepler::{kepler_to_cartesian, solve_kepler, KeplerElements};
pub use propagate::{propagate, ForceModel, IntegratorConfig, ProcessNoiseSample};
pub use topocentric::{
    eci_to_topocentric, station_state, topocentric_state, topocentric_to_eci, GeodeticSite,
};

use crate::{Error, Result};

/// Position (m) and velocity (m/s) in the inertial frame at an epoch given in
/// seconds since the reference epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitalState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub epoch: f64,
}

impl OrbitalState {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>, epoch: f64) -> Self {
        Self {
            position,
            velocity,
            epoch,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|v| v.is_finite()) && self.epoch.is_finite()
    }

    /// Finite and above the Earth's equatorial radius.
    pub fn is_valid(&self, c: &PhysicalConstants) -> bool {
        self.is_finite() && self.position.norm() > c.earth_radius
    }

    pub fn specific_angular_momentum(&self) -> Vector3<f64> {
        self.position.cross(&self.velocity)
    }

    pub fn specific_energy(&self, c: &PhysicalConstants) -> f64 {
        -c.mu / self.position.norm() + self.velocity.norm_squared() / 2.0
    }

    /// Perigee radius of the osculating two-body orbit (m); infinite for
    /// unbounded orbits.
    pub fn perigee_radius(&self, c: &PhysicalConstants) -> f64 {
        let energy = self.specific_energy(c);
        if energy >= 0.0 {
            return f64::INFINITY;
        }
        let a = -c.mu / (2.0 * energy);
        let h2 = self.specific_angular_momentum().norm_squared();
        let e = (1.0 + 2.0 * energy * h2 / (c.mu * c.mu)).max(0.0).sqrt();
        a * (1.0 - e)
    }
}

/// `p x v`, m^2/s.
pub fn specific_angular_momentum(x: &OrbitalState) -> Vector3<f64> {
    x.specific_angular_momentum()
}

/// `-mu/|p| + |v|^2/2`, m^2/s^2.
pub fn specific_orbital_energy(x: &OrbitalState, c: &PhysicalConstants) -> f64 {
    x.specific_energy(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalConstants {
    /// Earth gravitational constant, m^3/s^2.
    pub mu: f64,
    /// Earth equatorial radius, m.
    pub earth_radius: f64,
    pub j2: f64,
    pub j3: f64,
    pub j4: f64,
    /// Earth rotation rate, rad/s.
    pub earth_rotation_rate: f64,
    /// Earth rotation angle at the reference epoch, rad.
    pub rotation_angle_at_reference: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            mu: 3.986004418e14,
            earth_radius: 6_378_137.0,
            j2: 1.08263e-3,
            j3: -2.53266e-6,
            j4: -1.61962e-6,
            earth_rotation_rate: 7.292_115_146_706_979e-5,
            // Greenwich mean sidereal angle at J2000
            rotation_angle_at_reference: 280.460_618_37_f64.to_radians(),
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.earth_radius > 0.0 && self.j2 > 0.0 && self.earth_rotation_rate > 0.0) {
            return Err(Error::Config("physical constants must be strictly positive".into()));
        }
        Ok(())
    }
}

/// Writes `epoch,px,py,pz,vx,vy,vz` rows.
pub fn write_ephemeris<W: Write>(w: W, states: &[OrbitalState]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["epoch", "px", "py", "pz", "vx", "vy", "vz"])?;
    for s in states {
        let row = [
            s.epoch,
            s.position.x,
            s.position.y,
            s.position.z,
            s.velocity.x,
            s.velocity.y,
            s.velocity.z,
        ];
        wtr.write_record(row.iter().map(f64::to_string))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_ephemeris<R: Read>(r: R) -> Result<Vec<OrbitalState>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let vals: Vec<f64> = record
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Input(format!("ephemeris row {}: {e}", out.len() + 1)))?;
        if vals.len() != 7 {
            return Err(Error::Input(format!(
                "ephemeris row {} has {} columns, expected 7",
                out.len() + 1,
                vals.len()
            )));
        }
        out.push(OrbitalState::new(
            Vector3::new(vals[1], vals[2], vals[3]),
            Vector3::new(vals[4], vals[5], vals[6]),
            vals[0],
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_angular_momentum() {
        let x = OrbitalState::new(Vector3::new(7e6, 0.0, 0.0), Vector3::new(0.0, 7.5e3, 0.0), 0.0);
        assert_eq!(specific_angular_momentum(&x), Vector3::new(0.0, 0.0, 5.25e10));
        let radial = OrbitalState::new(Vector3::new(7e6, 0.0, 0.0), Vector3::new(3.0, 0.0, 0.0), 0.0);
        assert_eq!(specific_angular_momentum(&radial), Vector3::zeros());
    }

    #[test]
    fn circular_energy_identity() {
        let c = PhysicalConstants::default();
        let r = 7e6;
        let x = OrbitalState::new(Vector3::new(r, 0.0, 0.0), Vector3::new(0.0, (c.mu / r).sqrt(), 0.0), 0.0);
        let expected = -c.mu / (2.0 * r);
        assert!((specific_orbital_energy(&x, &c) - expected).abs() < 1e-12 * expected.abs());
        assert!((expected + 2.8471e7).abs() < 1e3);
    }

    #[test]
    fn escape_speed_energy_sign() {
        let c = PhysicalConstants::default();
        let r = 7e6;
        let vesc = (2.0 * c.mu / r).sqrt();
        let at = OrbitalState::new(Vector3::new(r, 0.0, 0.0), Vector3::new(0.0, vesc, 0.0), 0.0);
        assert!(specific_orbital_energy(&at, &c).abs() < 1e-6);
        let above = OrbitalState::new(Vector3::new(r, 0.0, 0.0), Vector3::new(0.0, vesc * 1.01, 0.0), 0.0);
        assert!(specific_orbital_energy(&above, &c) > 0.0);
        assert!(above.perigee_radius(&c).is_infinite());
    }

    #[test]
    fn ephemeris_csv_round_trip() {
        let states = vec![
            OrbitalState::new(Vector3::new(7e6, 1.5, -2.25), Vector3::new(0.1, 7.5e3, 3.0), 12.5),
            OrbitalState::new(Vector3::new(-6.9e6, 1e5, 3e4), Vector3::new(-10.0, -7.4e3, 1.0), 132.5),
        ];
        let mut buf = Vec::new();
        write_ephemeris(&mut buf, &states).unwrap();
        assert_eq!(read_ephemeris(buf.as_slice()).unwrap(), states);
    }
}
