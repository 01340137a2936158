use std::io::Write;

use nalgebra::Vector3;
use rand::Rng;

use crate::dynamics::{OrbitalState, RicFrame};
use crate::{Error, Result};

/// Tolerance on the total weight of a normalised cloud.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Weighted particle approximation of the filtering density.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    states: Vec<OrbitalState>,
    weights: Vec<f64>,
    epoch: f64,
}

impl ParticleCloud {
    /// Equal-weight cloud. All states must share `epoch`.
    pub fn uniform(states: Vec<OrbitalState>, epoch: f64) -> Result<Self> {
        let n = states.len();
        Self::new(states, vec![1.0 / n as f64; n], epoch)
    }

    pub fn new(states: Vec<OrbitalState>, weights: Vec<f64>, epoch: f64) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Input("empty particle cloud".into()));
        }
        if states.len() != weights.len() {
            return Err(Error::Dimension {
                expected: states.len(),
                got: weights.len(),
            });
        }
        if let Some(s) = states.iter().find(|s| s.epoch != epoch) {
            return Err(Error::Input(format!(
                "particle epoch {} differs from cloud epoch {epoch}",
                s.epoch
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Input("particle weights must be finite and non-negative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Input(format!("particle weights sum to {sum}, expected 1")));
        }
        Ok(Self { states, weights, epoch })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn epoch(&self) -> f64 {
        self.epoch
    }

    pub fn states(&self) -> &[OrbitalState] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn replace_states(&mut self, states: Vec<OrbitalState>, epoch: f64) {
        debug_assert_eq!(states.len(), self.states.len());
        self.states = states;
        self.epoch = epoch;
    }

    /// Multiplies each weight by the matching factor and renormalises.
    /// Returns the normalising sum `sum_i factor_i w_i`; on a zero sum the
    /// weights are left untouched and [`Error::Incompatible`] is returned.
    pub fn reweight(&mut self, factors: &[f64]) -> Result<f64> {
        if factors.len() != self.weights.len() {
            return Err(Error::Dimension {
                expected: self.weights.len(),
                got: factors.len(),
            });
        }
        if factors.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) {
            return Err(Error::Numeric("weight factors must be finite and non-negative".into()));
        }
        let unnormalised: Vec<f64> = self.weights.iter().zip(factors).map(|(w, f)| w * f).collect();
        let total: f64 = unnormalised.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Incompatible);
        }
        self.weights = unnormalised.into_iter().map(|w| w / total).collect();
        Ok(total)
    }

    /// Effective sample size over `N`: `1 / (N sum w^2)`.
    pub fn effective_ratio(&self) -> f64 {
        // equal weights give exactly 1, whatever the rounding of 1/N
        if self.weights.iter().all(|w| *w == self.weights[0]) {
            return 1.0;
        }
        let s2: f64 = self.weights.iter().map(|w| w * w).sum();
        1.0 / (self.weights.len() as f64 * s2)
    }

    /// Systematic resampling; output weights are uniform.
    pub fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParticleCloud {
        let idx = systematic_indices(&self.weights, rng.random::<f64>());
        let n = self.len();
        ParticleCloud {
            states: idx.into_iter().map(|i| self.states[i]).collect(),
            weights: vec![1.0 / n as f64; n],
            epoch: self.epoch,
        }
    }

    /// One row per particle: epoch, index, weight, position, velocity.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["epoch", "index", "weight", "px", "py", "pz", "vx", "vy", "vz"])?;
        for (i, (s, w)) in self.states.iter().zip(&self.weights).enumerate() {
            let mut row = vec![self.epoch.to_string(), i.to_string(), w.to_string()];
            row.extend(s.position.iter().chain(s.velocity.iter()).map(|v| v.to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Indices picked by `N` evenly spaced pointers `(offset + k) / N`, with
/// `offset` in `[0, 1)`.
pub fn systematic_indices(weights: &[f64], offset: f64) -> Vec<usize> {
    let n = weights.len();
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights[0];
    let mut i = 0;
    for k in 0..n {
        let u = (offset + k as f64) / n as f64;
        while u >= cumulative && i + 1 < n {
            i += 1;
            cumulative += weights[i];
        }
        out.push(i);
    }
    out
}

/// Weighted per-axis offsets from a reference state, in its RIC frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RicStats {
    pub position_mean: Vector3<f64>,
    pub position_std: Vector3<f64>,
    pub velocity_mean: Vector3<f64>,
    pub velocity_std: Vector3<f64>,
}

pub fn ric_error_stats(cloud: &ParticleCloud, truth: &OrbitalState) -> Result<RicStats> {
    let frame = RicFrame::new(truth)?;
    let mut dp = Vec::with_capacity(cloud.len());
    let mut dv = Vec::with_capacity(cloud.len());
    for s in cloud.states() {
        dp.push(frame.to_ric(&(s.position - truth.position)));
        dv.push(frame.to_ric(&(s.velocity - truth.velocity)));
    }
    let (position_mean, position_std) = weighted_moments(&dp, cloud.weights());
    let (velocity_mean, velocity_std) = weighted_moments(&dv, cloud.weights());
    Ok(RicStats {
        position_mean,
        position_std,
        velocity_mean,
        velocity_std,
    })
}

fn weighted_moments(v: &[Vector3<f64>], w: &[f64]) -> (Vector3<f64>, Vector3<f64>) {
    let total: f64 = w.iter().sum();
    let mean = v.iter().zip(w).fold(Vector3::zeros(), |acc, (x, w)| acc + x * *w) / total;
    let var = v
        .iter()
        .zip(w)
        .fold(Vector3::zeros(), |acc, (x, w)| acc + (x - mean).component_mul(&(x - mean)) * *w)
        / total;
    (mean, var.map(f64::sqrt))
}
