//! Possibility model linking a TLE pseudo-observation to a candidate state.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{OrbitalState, PhysicalConstants};
use crate::possibility::Trapezoid;
use crate::{Error, Result};

/// Smallest angle tolerance a calibration may return.
pub const MIN_ANGLE_TOLERANCE: f64 = 1e-12;
/// Smallest energy tolerance a calibration may return, m^2/s^2.
pub const MIN_ENERGY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TleModelParams {
    /// Plateau depth below 1 for the plane-alignment offset.
    pub angle_tolerance: f64,
    /// Nominal energy offset (TLE minus truth), m^2/s^2.
    pub energy_offset: f64,
    /// Energy plateau half-width, m^2/s^2.
    pub energy_tolerance: f64,
    /// Distance of each foot from the plateau edge, in tolerances.
    pub foot_factor: f64,
}

impl Default for TleModelParams {
    fn default() -> Self {
        Self {
            angle_tolerance: 1e-7,
            energy_offset: -2.67e4,
            energy_tolerance: 0.5e4,
            foot_factor: 5.0,
        }
    }
}

impl TleModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.angle_tolerance > 0.0) || !(self.energy_tolerance > 0.0) {
            return Err(Error::Config("TLE model tolerances must be positive".into()));
        }
        if !(self.foot_factor > 1.0) {
            return Err(Error::Config(format!("foot_factor must exceed 1, got {}", self.foot_factor)));
        }
        if !self.energy_offset.is_finite() {
            return Err(Error::Config("non-finite energy offset".into()));
        }
        Ok(())
    }

    /// Possibility of the plane-alignment offset. Values above 1 cannot occur
    /// for a normalised dot product.
    pub fn angle_trapezoid(&self) -> Trapezoid {
        let t = self.angle_tolerance;
        Trapezoid::from_ordered(1.0 - self.foot_factor * t, 1.0 - t, 1.0, 1.0)
    }

    pub fn energy_trapezoid(&self) -> Trapezoid {
        let (n, t) = (self.energy_offset, self.energy_tolerance);
        Trapezoid::from_ordered(n - self.foot_factor * t, n - t, n + t, n + self.foot_factor * t)
    }

    pub fn h_ang(&self, delta: f64) -> f64 {
        self.angle_trapezoid().eval(delta)
    }

    pub fn h_en(&self, delta: f64) -> f64 {
        self.energy_trapezoid().eval(delta)
    }
}

/// Cosine of the angle between the orbital planes of `y` and `x`.
pub fn delta_ang(y: &OrbitalState, x: &OrbitalState) -> Result<f64> {
    let hy = y.specific_angular_momentum();
    let hx = x.specific_angular_momentum();
    let (ny, nx) = (hy.norm(), hx.norm());
    if ny == 0.0 || nx == 0.0 || !ny.is_finite() || !nx.is_finite() {
        return Err(Error::Degenerate("zero angular momentum".into()));
    }
    Ok((hy.dot(&hx) / (ny * nx)).clamp(-1.0, 1.0))
}

/// Specific energy of `y` minus that of `x`.
pub fn delta_en(y: &OrbitalState, x: &OrbitalState, c: &PhysicalConstants) -> f64 {
    -c.mu * (1.0 / y.position.norm() - 1.0 / x.position.norm())
        + (y.velocity.norm_squared() - x.velocity.norm_squared()) / 2.0
}

/// Joint possibility that `x` is the true state given the TLE state `y`.
pub fn h_tle(y: &OrbitalState, x: &OrbitalState, params: &TleModelParams, c: &PhysicalConstants) -> Result<f64> {
    Ok(params.h_ang(delta_ang(y, x)?) * params.h_en(delta_en(y, x, c)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationPair {
    pub delta_ang: f64,
    pub delta_en: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub params: TleModelParams,
    pub pairs: Vec<CalibrationPair>,
    /// Set when a tolerance had to be raised to its floor.
    pub floored: bool,
}

impl Calibration {
    /// Report with one row per pair: index, delta_ang, delta_en.
    pub fn write_report<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["pair", "delta_ang", "delta_en"])?;
        for (i, p) in self.pairs.iter().enumerate() {
            wr.write_record([i.to_string(), format!("{:.17e}", p.delta_ang), format!("{:.17e}", p.delta_en)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Fits the model to `(tle state, reference state)` pairs so that every
/// training offset falls on the plateaus.
pub fn calibrate(pairs: &[(OrbitalState, OrbitalState)], c: &PhysicalConstants) -> Result<Calibration> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "calibration needs at least 2 pairs, got {}",
            pairs.len()
        )));
    }
    let offsets = pairs
        .iter()
        .map(|(y, x)| {
            Ok(CalibrationPair {
                delta_ang: delta_ang(y, x)?,
                delta_en: delta_en(y, x, c),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = offsets.len() as f64;
    let raw_ang = offsets.iter().map(|p| 1.0 - p.delta_ang).fold(0.0, f64::max);
    let energy_offset = offsets.iter().map(|p| p.delta_en).sum::<f64>() / n;
    let raw_en = offsets
        .iter()
        .map(|p| (p.delta_en - energy_offset).abs())
        .fold(0.0, f64::max);

    let floored = raw_ang < MIN_ANGLE_TOLERANCE || raw_en < MIN_ENERGY_TOLERANCE;
    if floored {
        log::warn!("degenerate calibration set: tolerances raised to their floors");
    }
    let params = TleModelParams {
        angle_tolerance: raw_ang.max(MIN_ANGLE_TOLERANCE),
        energy_offset,
        energy_tolerance: raw_en.max(MIN_ENERGY_TOLERANCE),
        ..TleModelParams::default()
    };
    Ok(Calibration {
        params,
        pairs: offsets,
        floored,
    })
}
