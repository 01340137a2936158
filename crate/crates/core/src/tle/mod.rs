//! Two-line element sets: parsing, conversion to inertial pseudo-observations
//! and the possibility model used to weight particles against them.

mod model;
mod parse;

pub use model::{
    calibrate, delta_ang, delta_en, h_tle, Calibration, CalibrationPair, TleModelParams, MIN_ANGLE_TOLERANCE,
    MIN_ENERGY_TOLERANCE,
};
pub use parse::{checksum, parse_tle, read_tles, scan_tles, TleError, TleRecord, LINE_LENGTH};

use crate::dynamics::{kepler_to_cartesian, OrbitalState, PhysicalConstants};
use crate::Result;

/// Inertial state of the record's elements at the record epoch, treating the
/// mean elements as osculating.
pub fn tle_to_eci(rec: &TleRecord, c: &PhysicalConstants) -> Result<OrbitalState> {
    kepler_to_cartesian(&rec.elements, c, rec.epoch)
}
