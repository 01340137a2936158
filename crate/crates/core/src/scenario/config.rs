use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    kepler_to_cartesian, ForceModel, IntegratorConfig, KeplerElements, OrbitalState, PhysicalConstants,
};
use crate::filter::FilterConfig;
use crate::radar::RadarStation;
use crate::tle::TleModelParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Radar data only.
    Radar,
    /// Radar and TLE data.
    Fused,
    #[default]
    Both,
}

impl Mode {
    pub fn runs(self) -> Vec<Mode> {
        match self {
            Mode::Both => vec![Mode::Radar, Mode::Fused],
            m => vec![m],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Radar => "radar",
            Mode::Fused => "fused",
            Mode::Both => "both",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radar" => Ok(Mode::Radar),
            "fused" => Ok(Mode::Fused),
            "both" => Ok(Mode::Both),
            other => Err(Error::Config(format!("unknown mode {other:?} (radar, fused, both)"))),
        }
    }
}

/// Initial truth, either as Cartesian state or as Kepler elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruthInit {
    State { position: [f64; 3], velocity: [f64; 3] },
    Elements(KeplerElements),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum TleSource {
    /// No TLE data.
    #[default]
    None,
    /// Records read from a TLE file; only those inside the scenario span are used.
    File { path: PathBuf },
    /// Pseudo-observations built from truth at `offsets` seconds after the
    /// scenario start.
    Synthesize {
        offsets: Vec<f64>,
        #[serde(default)]
        params: TleModelParams,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Scenario start, seconds since J2000.
    #[serde(default)]
    pub start_epoch: f64,
    pub duration: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_mc_runs")]
    pub mc_runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Also write every particle at every epoch.
    #[serde(default)]
    pub write_particles: bool,
    pub truth: TruthInit,
    pub station: RadarStation,
    #[serde(default)]
    pub tle: TleSource,
    /// Model parameters used by the filter's TLE update.
    #[serde(default)]
    pub tle_model: TleModelParams,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub truth_force: ForceModel,
    #[serde(default)]
    pub filter_force: ForceModel,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub constants: PhysicalConstants,
}

fn default_step() -> f64 {
    120.0
}

fn default_mc_runs() -> usize {
    10
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let TleSource::File { path: p } = &mut cfg.tle {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::Config(format!("step must be positive, got {}", self.step)));
        }
        if !(self.duration >= self.step) || !self.duration.is_finite() {
            return Err(Error::Config(format!(
                "duration ({}) must be at least one step ({})",
                self.duration, self.step
            )));
        }
        if self.mc_runs < 1 {
            return Err(Error::Config("mc_runs must be at least 1".into()));
        }
        if !self.start_epoch.is_finite() {
            return Err(Error::Config("non-finite start_epoch".into()));
        }
        self.station.validate()?;
        self.tle_model.validate()?;
        self.filter.validate()?;
        self.truth_force.validate()?;
        self.filter_force.validate()?;
        self.constants.validate()?;
        if let TruthInit::Elements(el) = &self.truth {
            el.validate()?;
        }
        if let TleSource::Synthesize { offsets, .. } = &self.tle {
            if let Some(t) = offsets.iter().find(|t| !(0.0..=self.duration).contains(*t)) {
                return Err(Error::Config(format!(
                    "TLE offset {t} s lies outside the scenario span [0, {}]",
                    self.duration
                )));
            }
        }
        Ok(())
    }

    pub fn end_epoch(&self) -> f64 {
        self.start_epoch + self.duration
    }

    pub fn initial_truth(&self) -> Result<OrbitalState> {
        match &self.truth {
            TruthInit::State { position, velocity } => Ok(OrbitalState::new(
                Vector3::from(*position),
                Vector3::from(*velocity),
                self.start_epoch,
            )),
            TruthInit::Elements(el) => kepler_to_cartesian(el, &self.constants, self.start_epoch),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        duration = 600.0
        [truth]
        raan_deg = 311.18
        inclination_deg = 97.45
        arg_perigee_deg = 144.12
        mean_motion = 11.07e-4
        eccentricity = 0.001195
        mean_anomaly_deg = 216.09
        [station]
        site = { latitude_deg = 64.84, longitude_deg = -147.72, altitude_m = 150.0 }
    "#;

    #[test]
    fn defaults_apply() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.step, 120.0);
        assert_eq!(cfg.mc_runs, 10);
        assert_eq!(cfg.mode, Mode::Both);
        assert_eq!(cfg.filter.particles, 500);
        assert_eq!(cfg.station.fov_radius, 2e6);
        assert_eq!(cfg.tle, TleSource::None);
        assert!(matches!(cfg.truth, TruthInit::Elements(_)));
    }

    #[test]
    fn cartesian_truth_and_synthesized_tles() {
        let text = r#"
            duration = 3600.0
            [truth]
            position = [7.0e6, 0.0, 0.0]
            velocity = [0.0, 7.5e3, 0.0]
            [station]
            site = { latitude_deg = 0.0, longitude_deg = 0.0, altitude_m = 0.0 }
            [tle]
            source = "synthesize"
            offsets = [600.0, 1800.0]
        "#;
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        assert!(matches!(cfg.truth, TruthInit::State { .. }));
        match &cfg.tle {
            TleSource::Synthesize { offsets, params } => {
                assert_eq!(offsets, &vec![600.0, 1800.0]);
                assert_eq!(*params, TleModelParams::default());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_step = MINIMAL.replace("duration = 600.0", "duration = 600.0\nstep = 0.0");
        assert!(matches!(ScenarioConfig::from_toml(&bad_step), Err(Error::Config(_))));
        let short = MINIMAL.replace("duration = 600.0", "duration = 60.0");
        assert!(ScenarioConfig::from_toml(&short).is_err());
        let runs = MINIMAL.replace("duration = 600.0", "duration = 600.0\nmc_runs = 0");
        assert!(ScenarioConfig::from_toml(&runs).is_err());
        let typo = MINIMAL.replace("duration = 600.0", "duration = 600.0\nstpe = 10.0");
        assert!(matches!(ScenarioConfig::from_toml(&typo), Err(Error::Toml(_))));
        let late = format!("{MINIMAL}\n[tle]\nsource = \"synthesize\"\noffsets = [700.0]\n");
        assert!(matches!(ScenarioConfig::from_toml(&late), Err(Error::Config(_))));
    }
}
