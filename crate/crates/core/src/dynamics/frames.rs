use std::f64::consts::TAU;

use nalgebra::{Vector3, Vector6};

use super::OrbitalState;
use crate::{Error, Result};

/// Radial / in-track / cross-track basis attached to a reference state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicFrame {
    pub radial: Vector3<f64>,
    pub in_track: Vector3<f64>,
    pub cross_track: Vector3<f64>,
}

impl RicFrame {
    pub fn new(reference: &OrbitalState) -> Result<Self> {
        Self::from_vectors(&reference.position, &reference.velocity)
    }

    pub fn from_vectors(p: &Vector3<f64>, v: &Vector3<f64>) -> Result<Self> {
        let h = p.cross(v);
        let (rn, hn) = (p.norm(), h.norm());
        if rn == 0.0 || hn <= 1e-12 * rn * v.norm() || hn == 0.0 {
            return Err(Error::Degenerate("RIC frame of a radial trajectory".into()));
        }
        let radial = p / rn;
        let cross_track = h / hn;
        let in_track = cross_track.cross(&radial);
        Ok(Self {
            radial,
            in_track,
            cross_track,
        })
    }

    pub fn to_ric(&self, v: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(self.radial.dot(v), self.in_track.dot(v), self.cross_track.dot(v))
    }

    pub fn to_eci(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.radial * v.x + self.in_track * v.y + self.cross_track * v.z
    }
}

pub fn eci_to_ric(reference: &OrbitalState, vec: &Vector3<f64>) -> Result<Vector3<f64>> {
    Ok(RicFrame::new(reference)?.to_ric(vec))
}

pub fn ric_to_eci(reference: &OrbitalState, vec: &Vector3<f64>) -> Result<Vector3<f64>> {
    Ok(RicFrame::new(reference)?.to_eci(vec))
}

/// `[r, az, el, r_dot, az_dot, el_dot]` of a position/velocity pair, with
/// `az = atan2(y, x)` in `[0, 2 pi)` and `el = asin(z / r)`.
pub fn cartesian_to_spherical(pos: &Vector3<f64>, vel: &Vector3<f64>) -> Result<Vector6<f64>> {
    let r = pos.norm();
    let rho2 = pos.x * pos.x + pos.y * pos.y;
    if r == 0.0 {
        return Err(Error::Degenerate("spherical coordinates of the origin".into()));
    }
    let az = pos.y.atan2(pos.x).rem_euclid(TAU);
    let el = (pos.z / r).clamp(-1.0, 1.0).asin();
    let r_dot = pos.dot(vel) / r;
    // on the polar axis the angle rates are undefined; report them as zero
    let (az_dot, el_dot) = if rho2 == 0.0 {
        (0.0, 0.0)
    } else {
        (
            (pos.x * vel.y - pos.y * vel.x) / rho2,
            (vel.z * r - pos.z * r_dot) / (r * rho2.sqrt()),
        )
    };
    Ok(Vector6::new(r, az, el, r_dot, az_dot, el_dot))
}

pub fn spherical_to_cartesian(s: &Vector6<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let (r, az, el, r_dot, az_dot, el_dot) = (s[0], s[1], s[2], s[3], s[4], s[5]);
    let (sa, ca) = az.sin_cos();
    let (se, ce) = el.sin_cos();
    let u_r = Vector3::new(ce * ca, ce * sa, se);
    let u_az = Vector3::new(-sa, ca, 0.0);
    let u_el = Vector3::new(-se * ca, -se * sa, ce);
    let pos = u_r * r;
    let vel = u_r * r_dot + u_az * (r * ce * az_dot) + u_el * (r * el_dot);
    (pos, vel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> OrbitalState {
        OrbitalState::new(
            Vector3::new(6.8e6, 1.2e6, -3.0e5),
            Vector3::new(-1.1e3, 7.2e3, 1.9e3),
            0.0,
        )
    }

    #[test]
    fn radial_unit_vector_maps_to_first_axis() {
        let x = reference();
        let u = x.position.normalize();
        let ric = eci_to_ric(&x, &u).unwrap();
        assert!((ric - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn radial_state_has_no_frame() {
        let x = OrbitalState::new(Vector3::new(7e6, 0.0, 0.0), Vector3::new(10.0, 0.0, 0.0), 0.0);
        assert!(matches!(eci_to_ric(&x, &Vector3::x()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn spherical_rates_match_finite_differences() {
        let p = Vector3::new(1.2e6, -2.3e6, 0.8e6);
        let v = Vector3::new(3.1e3, 1.7e3, -2.2e3);
        let s = cartesian_to_spherical(&p, &v).unwrap();
        let dt = 1e-3;
        let plus = cartesian_to_spherical(&(p + v * dt), &v).unwrap();
        let minus = cartesian_to_spherical(&(p - v * dt), &v).unwrap();
        for k in 0..3 {
            let fd = (plus[k] - minus[k]) / (2.0 * dt);
            assert!((fd - s[k + 3]).abs() < 1e-6 * (1.0 + s[k + 3].abs()), "axis {k}");
        }
    }

    proptest! {
        #[test]
        fn ric_round_trip_and_norm(x in -1e4..1e4f64, y in -1e4..1e4f64, z in -1e4..1e4f64) {
            let r = reference();
            let v = Vector3::new(x, y, z);
            let ric = eci_to_ric(&r, &v).unwrap();
            let back = ric_to_eci(&r, &ric).unwrap();
            prop_assert!((back - v).norm() <= 1e-12 * (1.0 + v.norm()));
            prop_assert!((ric.norm() - v.norm()).abs() <= 1e-12 * (1.0 + v.norm()));
        }

        #[test]
        fn spherical_round_trip(
            r in 6.5e6..8e6f64, az in 0.0..6.2f64, el in -1.5..1.5f64,
            rd in -100.0..100.0f64, azd in -1e-3..1e-3f64, eld in -1e-3..1e-3f64
        ) {
            let s = Vector6::new(r, az, el, rd, azd, eld);
            let (p, v) = spherical_to_cartesian(&s);
            let back = cartesian_to_spherical(&p, &v).unwrap();
            prop_assert!((back[0] - r).abs() < 1e-6);
            prop_assert!((back[1] - az).abs() < 1e-9);
            prop_assert!((back[2] - el).abs() < 1e-9);
            prop_assert!((back[3] - rd).abs() < 1e-8);
            prop_assert!((back[4] - azd).abs() < 1e-12);
            prop_assert!((back[5] - eld).abs() < 1e-12);
        }
    }
}
