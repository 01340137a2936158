use nalgebra::{DMatrix, DVector};

use super::grid::GridPossibility;
use super::region::{AxisBox, Region};
use crate::{Error, Result};

/// Piecewise-linear possibility on the real line.
///
/// Equal to 1 on `[lower, upper]`, ramps linearly to 0 at `lower_foot` and
/// `upper_foot`, and is 0 beyond the feet. A foot equal to its plateau edge
/// gives a vertical side; an infinite foot gives a side that never decays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    lower_foot: f64,
    lower: f64,
    upper: f64,
    upper_foot: f64,
}

impl Trapezoid {
    pub fn new(lower_foot: f64, lower: f64, upper: f64, upper_foot: f64) -> Result<Self> {
        if [lower_foot, lower, upper, upper_foot].iter().any(|v| v.is_nan())
            || !(lower_foot <= lower && lower <= upper && upper <= upper_foot)
        {
            return Err(Error::Input(format!(
                "trapezoid breakpoints must be ordered: {lower_foot} <= {lower} <= {upper} <= {upper_foot}"
            )));
        }
        Ok(Self {
            lower_foot,
            lower,
            upper,
            upper_foot,
        })
    }

    /// Caller guarantees the ordering.
    pub(crate) fn from_ordered(lower_foot: f64, lower: f64, upper: f64, upper_foot: f64) -> Self {
        debug_assert!(lower_foot <= lower && lower <= upper && upper <= upper_foot);
        Self {
            lower_foot,
            lower,
            upper,
            upper_foot,
        }
    }

    /// Plateau `[a, b]` with feet at `a - w` and `b + w`.
    pub fn symmetric(a: f64, b: f64, w: f64) -> Result<Self> {
        if w < 0.0 {
            return Err(Error::Input(format!("negative trapezoid width {w}")));
        }
        Self::new(a - w, a, b, b + w)
    }

    pub fn plateau(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn feet(&self) -> (f64, f64) {
        (self.lower_foot, self.upper_foot)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x >= self.lower && x <= self.upper {
            1.0
        } else if x < self.lower {
            if self.lower_foot == f64::NEG_INFINITY {
                1.0
            } else if x <= self.lower_foot {
                0.0
            } else {
                (x - self.lower_foot) / (self.lower - self.lower_foot)
            }
        } else if self.upper_foot == f64::INFINITY {
            1.0
        } else if x >= self.upper_foot {
            0.0
        } else {
            (self.upper_foot - x) / (self.upper_foot - self.upper)
        }
    }

    /// Supremum over the closed interval `[lo, hi]`.
    pub fn sup_interval(&self, lo: f64, hi: f64) -> f64 {
        // unimodal: the maximum sits at the point of [lo, hi] closest to the plateau
        if hi < self.lower {
            self.eval(hi)
        } else if lo > self.upper {
            self.eval(lo)
        } else {
            1.0
        }
    }
}

/// `exp(-(x - mean)^T S^-1 (x - mean) / 2)` for a positive-definite spread `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPossibility {
    mean: DVector<f64>,
    spread: DMatrix<f64>,
    precision: DMatrix<f64>,
}

impl GaussianPossibility {
    pub fn new(mean: DVector<f64>, spread: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if spread.nrows() != d || spread.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                got: spread.nrows(),
            });
        }
        let chol = spread
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Input("Gaussian spread must be positive definite".into()))?;
        Ok(Self {
            mean,
            precision: chol.inverse(),
            spread,
        })
    }

    pub fn scalar(mean: f64, variance: f64) -> Result<Self> {
        Self::new(DVector::from_element(1, mean), DMatrix::from_element(1, 1, variance))
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn spread(&self) -> &DMatrix<f64> {
        &self.spread
    }

    fn quadratic(&self, x: &[f64]) -> f64 {
        let r = DVector::from_iterator(x.len(), x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        (r.transpose() * &self.precision * &r)[(0, 0)]
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (-0.5 * self.quadratic(x)).exp()
    }

    fn is_diagonal(&self) -> bool {
        let d = self.mean.len();
        (0..d).all(|i| (0..d).all(|j| i == j || self.precision[(i, j)] == 0.0))
    }

    /// Supremum over an axis-aligned box: the box point minimising the
    /// Mahalanobis distance. Closed form for diagonal spreads, coordinate
    /// descent on the convex quadratic otherwise.
    pub fn sup_box(&self, b: &AxisBox) -> f64 {
        let mu: Vec<f64> = self.mean.iter().copied().collect();
        let mut x = b.clamp(&mu);
        if !self.is_diagonal() {
            let d = x.len();
            let p = &self.precision;
            for _ in 0..10_000 {
                let mut change = 0.0_f64;
                for k in 0..d {
                    let coupling: f64 = (0..d)
                        .filter(|&j| j != k)
                        .map(|j| p[(k, j)] * (x[j] - mu[j]))
                        .sum();
                    let target = (mu[k] - coupling / p[(k, k)]).clamp(b.lo()[k], b.hi()[k]);
                    change = change.max((target - x[k]).abs());
                    x[k] = target;
                }
                if change <= 1e-15 * (1.0 + x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))) {
                    break;
                }
            }
        }
        self.eval(&x)
    }
}

/// Indicator of a finite union of boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSupport {
    boxes: Vec<AxisBox>,
}

impl BoxSupport {
    pub fn new(boxes: Vec<AxisBox>) -> Result<Self> {
        let first = boxes
            .first()
            .ok_or_else(|| Error::Input("box possibility needs a non-empty support".into()))?;
        if let Some(b) = boxes.iter().find(|b| b.dim() != first.dim()) {
            return Err(Error::Dimension {
                expected: first.dim(),
                got: b.dim(),
            });
        }
        Ok(Self { boxes })
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PossibilityFunction {
    Box(BoxSupport),
    Trapezoid(Trapezoid),
    Gaussian(GaussianPossibility),
    Product(Vec<PossibilityFunction>),
    Grid(GridPossibility),
}

impl PossibilityFunction {
    pub fn indicator(boxes: Vec<AxisBox>) -> Result<Self> {
        Ok(Self::Box(BoxSupport::new(boxes)?))
    }

    pub fn product(factors: Vec<PossibilityFunction>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Input("product possibility needs at least one factor".into()));
        }
        Ok(Self::Product(factors))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Box(b) => b.boxes[0].dim(),
            Self::Trapezoid(_) => 1,
            Self::Gaussian(g) => g.mean.len(),
            Self::Product(fs) => fs.iter().map(|f| f.dim()).sum(),
            Self::Grid(g) => g.axes().dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(match self {
            Self::Box(b) => {
                if b.boxes.iter().any(|bx| bx.contains(x)) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Trapezoid(t) => t.eval(x[0]),
            Self::Gaussian(g) => g.eval(x),
            Self::Product(fs) => {
                let mut offset = 0;
                let mut value = 1.0;
                for f in fs {
                    let d = f.dim();
                    value *= f.eval(&x[offset..offset + d])?;
                    offset += d;
                }
                value
            }
            Self::Grid(g) => g.eval(x),
        })
    }

    /// Supremum of the function over a single box.
    pub fn sup_box(&self, b: &AxisBox) -> Result<f64> {
        if b.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: b.dim(),
            });
        }
        Ok(match self {
            Self::Box(s) => {
                if s.boxes.iter().any(|bx| bx.overlaps(b)) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Trapezoid(t) => t.sup_interval(b.lo()[0], b.hi()[0]),
            Self::Gaussian(g) => g.sup_box(b),
            Self::Product(fs) => {
                let mut offset = 0;
                let mut value = 1.0;
                for f in fs {
                    let d = f.dim();
                    value *= f.sup_box(&b.project(offset, d))?;
                    offset += d;
                }
                value
            }
            Self::Grid(g) => g.sup_box(b),
        })
    }

    /// Supremum over a subset descriptor.
    pub fn sup(&self, region: &Region) -> Result<f64> {
        match region {
            Region::Boxes(boxes) => boxes
                .iter()
                .try_fold(0.0_f64, |m, b| Ok(m.max(self.sup_box(b)?))),
            Region::Mask(mask) => match self {
                Self::Grid(g) => g.sup_mask(mask),
                _ => Err(Error::UnsupportedRegion(
                    "grid masks apply only to grid possibilities".into(),
                )),
            },
        }
    }
}
