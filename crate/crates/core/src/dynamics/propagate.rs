//! Numerical propagation: two-body gravity with optional zonal terms and a
//! linearly growing RIC acceleration noise, integrated with an adaptive
//! Dormand-Prince 5(4) pair.

use nalgebra::{Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::frames::RicFrame;
use super::{OrbitalState, PhysicalConstants};
use crate::{Error, Result};

/// Highest zonal harmonic included in the gravity model: 0 for two-body only,
/// otherwise 2, 3 or 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForceModel {
    pub zonal_degree: u8,
}

impl Default for ForceModel {
    fn default() -> Self {
        Self { zonal_degree: 2 }
    }
}

impl ForceModel {
    pub fn two_body() -> Self {
        Self { zonal_degree: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self.zonal_degree {
            0 | 2..=4 => Ok(()),
            d => Err(Error::Config(format!("unsupported zonal degree {d} (0, 2, 3 or 4)"))),
        }
    }

    /// Gravitational acceleration at `p` (inertial frame, polar axis = z).
    pub fn acceleration(&self, p: &Vector3<f64>, c: &PhysicalConstants) -> Vector3<f64> {
        let r2 = p.norm_squared();
        let r = r2.sqrt();
        let mut acc = -p * (c.mu / (r2 * r));
        if self.zonal_degree < 2 {
            return acc;
        }
        let (x, y, z) = (p.x, p.y, p.z);
        let z2 = z * z / r2;
        let re_r = c.earth_radius / r;
        let base = c.mu / r2;

        let k2 = -1.5 * c.j2 * base * re_r * re_r / r;
        acc += Vector3::new(x * (1.0 - 5.0 * z2), y * (1.0 - 5.0 * z2), z * (3.0 - 5.0 * z2)) * k2;

        if self.zonal_degree >= 3 {
            let k3 = -2.5 * c.j3 * base * re_r.powi(3) / r;
            let zr = z / r;
            acc += Vector3::new(
                x * zr * (3.0 - 7.0 * z2),
                y * zr * (3.0 - 7.0 * z2),
                r * (6.0 * z2 - 7.0 * z2 * z2 - 0.6),
            ) * k3;
        }
        if self.zonal_degree >= 4 {
            let k4 = 1.875 * c.j4 * base * re_r.powi(4) / r;
            let s = 1.0 - 14.0 * z2 + 21.0 * z2 * z2;
            acc += Vector3::new(x * s, y * s, z * (5.0 - 70.0 / 3.0 * z2 + 21.0 * z2 * z2)) * k4;
        }
        acc
    }
}

/// Adaptive step-size control. `abs_tol` applies to every state component
/// (m and m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-9,
            max_step: 600.0,
            min_step: 1e-9,
        }
    }
}

/// Acceleration-rate noise in the RIC frame (m/s^3), held constant over one
/// prediction interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessNoiseSample(pub Vector3<f64>);

struct Dynamics<'a> {
    constants: &'a PhysicalConstants,
    force: &'a ForceModel,
    noise: Option<Vector3<f64>>,
    epoch0: f64,
}

impl Dynamics<'_> {
    fn rhs(&self, tau: f64, y: &Vector6<f64>) -> Result<Vector6<f64>> {
        let p = y.fixed_rows::<3>(0).into_owned();
        let v = y.fixed_rows::<3>(3).into_owned();
        let r = p.norm();
        if !(r > self.constants.earth_radius) {
            return Err(Error::Reentry {
                epoch: self.epoch0 + tau,
                radius: r,
            });
        }
        let mut a = self.force.acceleration(&p, self.constants);
        if let Some(w) = self.noise {
            a += RicFrame::from_vectors(&p, &v)?.to_eci(&(w * tau));
        }
        let mut out = Vector6::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&v);
        out.fixed_rows_mut::<3>(3).copy_from(&a);
        Ok(out)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Propagates `x` to `t_target`. With `noise`, the extra acceleration
/// `(t - x.epoch) * w` is applied along the current osculating RIC axes.
pub fn propagate(
    x: &OrbitalState,
    t_target: f64,
    noise: Option<&ProcessNoiseSample>,
    c: &PhysicalConstants,
    force: &ForceModel,
    integrator: &IntegratorConfig,
) -> Result<OrbitalState> {
    if t_target < x.epoch {
        return Err(Error::Input(format!(
            "cannot propagate backwards from {} to {t_target}",
            x.epoch
        )));
    }
    let span = t_target - x.epoch;
    if span == 0.0 {
        return Ok(*x);
    }
    let dyn_ = Dynamics {
        constants: c,
        force,
        noise: noise.map(|n| n.0),
        epoch0: x.epoch,
    };
    let mut y = Vector6::new(
        x.position.x,
        x.position.y,
        x.position.z,
        x.velocity.x,
        x.velocity.y,
        x.velocity.z,
    );
    let mut tau = 0.0;
    let mut h = span.min(integrator.max_step).min(10.0);
    let mut k1 = dyn_.rhs(0.0, &y)?;
    let mut last_rejected = false;

    while tau < span {
        if span - tau < h {
            h = span - tau;
        }
        let k2 = dyn_.rhs(tau + C2 * h, &(y + k1 * (A21 * h)))?;
        let k3 = dyn_.rhs(tau + C3 * h, &(y + (k1 * A31 + k2 * A32) * h))?;
        let k4 = dyn_.rhs(tau + C4 * h, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * h))?;
        let k5 = dyn_.rhs(
            tau + C5 * h,
            &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h),
        )?;
        let k6 = dyn_.rhs(
            tau + h,
            &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h),
        )?;
        let y_new = y + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * h;
        let k7 = dyn_.rhs(tau + h, &y_new)?;
        let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;

        let mut err = 0.0_f64;
        for i in 0..6 {
            let scale = integrator.abs_tol + integrator.rel_tol * y[i].abs().max(y_new[i].abs());
            err = err.max(err_vec[i].abs() / scale);
        }

        if err <= 1.0 {
            tau = if span - tau <= h { span } else { tau + h };
            y = y_new;
            k1 = k7;
            let mut factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if last_rejected {
                factor = factor.min(1.0);
            }
            h = (h * factor).min(integrator.max_step);
            last_rejected = false;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            last_rejected = true;
        }
        if h < integrator.min_step {
            return Err(Error::Numeric(format!(
                "step size underflow ({h:e} s) at t = {}",
                x.epoch + tau
            )));
        }
    }
    Ok(OrbitalState::new(
        y.fixed_rows::<3>(0).into_owned(),
        y.fixed_rows::<3>(3).into_owned(),
        t_target,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn potential(p: &Vector3<f64>, c: &PhysicalConstants, degree: u8) -> f64 {
        // V = mu/r (1 - sum J_n (R/r)^n P_n(sin(lat)))
        let r = p.norm();
        let s = p.z / r;
        let legendre = [
            0.0,
            0.0,
            (3.0 * s * s - 1.0) / 2.0,
            (5.0 * s.powi(3) - 3.0 * s) / 2.0,
            (35.0 * s.powi(4) - 30.0 * s * s + 3.0) / 8.0,
        ];
        let js = [0.0, 0.0, c.j2, c.j3, c.j4];
        let mut sum = 0.0;
        for n in 2..=degree as usize {
            sum += js[n] * (c.earth_radius / r).powi(n as i32) * legendre[n];
        }
        c.mu / r * (1.0 - sum)
    }

    #[test]
    fn zonal_accelerations_match_potential_gradient() {
        let c = PhysicalConstants::default();
        let p = Vector3::new(3.1e6, -4.2e6, 4.4e6);
        for degree in [0u8, 2, 3, 4] {
            let model = ForceModel { zonal_degree: degree };
            let a = model.acceleration(&p, &c);
            let h = 1.0;
            for k in 0..3 {
                let mut dp = Vector3::zeros();
                dp[k] = h;
                let fd = (potential(&(p + dp), &c, degree) - potential(&(p - dp), &c, degree)) / (2.0 * h);
                assert!((fd - a[k]).abs() < 1e-9 * a.norm(), "degree {degree} axis {k}: {fd} vs {}", a[k]);
            }
        }
    }

    #[test]
    fn zero_span_is_identity() {
        let c = PhysicalConstants::default();
        let x = OrbitalState::new(Vector3::new(7e6, 0.0, 0.0), Vector3::new(0.0, 7.5e3, 0.0), 42.0);
        let y = propagate(&x, 42.0, None, &c, &ForceModel::default(), &IntegratorConfig::default()).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn backwards_is_rejected() {
        let c = PhysicalConstants::default();
        let x = OrbitalState::new(Vector3::new(7e6, 0.0, 0.0), Vector3::new(0.0, 7.5e3, 0.0), 42.0);
        assert!(propagate(&x, 41.0, None, &c, &ForceModel::default(), &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn suborbital_state_reenters() {
        let c = PhysicalConstants::default();
        let x = OrbitalState::new(Vector3::new(6.5e6, 0.0, 0.0), Vector3::new(0.0, 1.0e3, 0.0), 0.0);
        let r = propagate(&x, 3000.0, None, &c, &ForceModel::two_body(), &IntegratorConfig::default());
        assert!(matches!(r, Err(Error::Reentry { .. })));
    }

    #[test]
    fn circular_orbit_closes_after_one_period() {
        let c = PhysicalConstants::default();
        let a = 7e6;
        let x = OrbitalState::new(Vector3::new(a, 0.0, 0.0), Vector3::new(0.0, (c.mu / a).sqrt(), 0.0), 0.0);
        let period = std::f64::consts::TAU * (a.powi(3) / c.mu).sqrt();
        let y = propagate(&x, period, None, &c, &ForceModel::two_body(), &IntegratorConfig::default()).unwrap();
        assert!((y.position - x.position).norm() < 1.0);
    }

    #[test]
    fn noise_displaces_along_requested_axis() {
        let c = PhysicalConstants::default();
        let a = 7e6;
        let x = OrbitalState::new(Vector3::new(a, 0.0, 0.0), Vector3::new(0.0, (c.mu / a).sqrt(), 0.0), 0.0);
        let cfg = IntegratorConfig::default();
        let model = ForceModel::two_body();
        let clean = propagate(&x, 120.0, None, &c, &model, &cfg).unwrap();
        let w = ProcessNoiseSample(Vector3::new(0.0, 0.0, 1e-3));
        let noisy = propagate(&x, 120.0, Some(&w), &c, &model, &cfg).unwrap();
        // cross-track displacement of (1/6) w t^3 to first order
        let d = noisy.position - clean.position;
        let expected = 1e-3 * 120f64.powi(3) / 6.0;
        assert!((d.z - expected).abs() < 0.01 * expected, "{} vs {expected}", d.z);
        assert!(d.x.abs() < 0.01 * expected && d.y.abs() < 0.01 * expected);
    }
}
