use super::region::Region;
use super::PossibilityFunction;
use crate::{Error, Result};

/// Finite weighted mixture of possibility functions over a common space.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterProbabilityMeasure {
    components: Vec<(f64, PossibilityFunction)>,
}

/// Lower and upper bounds on the probability of a subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityBounds {
    pub lower: f64,
    pub upper: f64,
}

impl OuterProbabilityMeasure {
    pub fn new(components: Vec<(f64, PossibilityFunction)>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Input("outer measure needs at least one component".into()))?;
        let dim = first.1.dim();
        let mut total = 0.0;
        for (w, f) in &components {
            if !(*w >= 0.0) {
                return Err(Error::Input(format!("negative weight {w}")));
            }
            if f.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: f.dim(),
                });
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { components })
    }

    pub fn single(f: PossibilityFunction) -> Self {
        Self {
            components: vec![(1.0, f)],
        }
    }

    pub fn dim(&self) -> usize {
        self.components[0].1.dim()
    }

    pub fn components(&self) -> &[(f64, PossibilityFunction)] {
        &self.components
    }

    /// Possibility that the state lies in `region`: `sum_i alpha_i sup_B f_i`.
    pub fn evaluate(&self, region: &Region) -> Result<f64> {
        let mut total = 0.0;
        for (w, f) in &self.components {
            total += w * f.sup(region)?;
        }
        Ok(total.min(1.0))
    }

    /// `(1 - P(complement of B), P(B))`.
    pub fn probability_bounds(&self, region: &Region) -> Result<ProbabilityBounds> {
        let upper = self.evaluate(region)?;
        let complement = region.complement(self.dim())?;
        let lower = (1.0 - self.evaluate(&complement)?).max(0.0);
        Ok(ProbabilityBounds { lower, upper })
    }
}
