//! Tabulated possibilities on rectilinear grids and the max-product
//! prediction/update calculus.
//!
//! Evaluation between nodes is nearest-neighbour, so the tabulated maximum is
//! also the supremum of the function.

use std::io::Write;

use super::opm::OuterProbabilityMeasure;
use super::region::{AxisBox, GridMask};
use super::PossibilityFunction;
use crate::{Error, Result};

const SUP_TOL: f64 = 1e-12;
const PREDICT_SUP_TOL: f64 = 1e-9;
const CONDITIONAL_TOL: f64 = 1e-6;

/// Axis coordinates of a rectilinear grid; nodes are enumerated row-major
/// (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxes {
    axes: Vec<Vec<f64>>,
}

impl GridAxes {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Input("grid needs at least one axis".into()));
        }
        for axis in &axes {
            if axis.is_empty() {
                return Err(Error::Input("grid axis is empty".into()));
            }
            if axis.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Input("grid axis must be strictly increasing".into()));
            }
        }
        Ok(Self { axes })
    }

    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Self::new(vec![vec![lo]]);
        }
        let step = (hi - lo) / (n - 1) as f64;
        Self::new(vec![(0..n).map(|i| lo + step * i as f64).collect()])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn nearest_on_axis(axis: &[f64], v: f64) -> usize {
        let idx = axis.partition_point(|&a| a < v);
        if idx == 0 {
            0
        } else if idx == axis.len() {
            axis.len() - 1
        } else if v - axis[idx - 1] <= axis[idx] - v {
            idx - 1
        } else {
            idx
        }
    }

    fn flat(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.axes)
            .fold(0, |acc, (i, axis)| acc * axis.len() + i)
    }

    pub fn nearest(&self, x: &[f64]) -> usize {
        let multi: Vec<usize> = self
            .axes
            .iter()
            .zip(x)
            .map(|(axis, &v)| Self::nearest_on_axis(axis, v))
            .collect();
        self.flat(&multi)
    }

    pub fn node(&self, mut index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            out[k] = axis[index % axis.len()];
            index /= axis.len();
        }
        out
    }

    /// Flat indices of the nodes whose nearest-neighbour cells meet the box.
    fn indices_in_box(&self, b: &AxisBox) -> Vec<usize> {
        let ranges: Vec<(usize, usize)> = self
            .axes
            .iter()
            .enumerate()
            .map(|(k, axis)| {
                (
                    Self::nearest_on_axis(axis, b.lo()[k]),
                    Self::nearest_on_axis(axis, b.hi()[k]),
                )
            })
            .collect();
        let mut out = Vec::new();
        let mut multi: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(self.flat(&multi));
            let mut k = self.dim();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if multi[k] < ranges[k].1 {
                    multi[k] += 1;
                    break;
                }
                multi[k] = ranges[k].0;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPossibility {
    axes: GridAxes,
    values: Vec<f64>,
}

impl GridPossibility {
    /// Validates values in `[0, 1]` with maximum 1 (within 1e-12).
    pub fn new(axes: GridAxes, values: Vec<f64>) -> Result<Self> {
        if values.len() != axes.len() {
            return Err(Error::Dimension {
                expected: axes.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Input("grid values must lie in [0, 1]".into()));
        }
        let max = values.iter().copied().fold(0.0, f64::max);
        if (max - 1.0).abs() > SUP_TOL {
            return Err(Error::Input(format!("grid maximum is {max}, expected 1")));
        }
        Ok(Self { axes, values })
    }

    /// Tabulates `f` on the nodes and rescales so the maximum is exactly 1.
    pub fn tabulate(axes: GridAxes, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let raw: Vec<f64> = (0..axes.len()).map(|i| f(&axes.node(i))).collect();
        let max = raw.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 || !max.is_finite() {
            return Err(Error::Input("tabulated function has no positive maximum".into()));
        }
        Self::new(axes, raw.into_iter().map(|v| v / max).collect())
    }

    pub fn axes(&self) -> &GridAxes {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.values[self.axes.nearest(x)]
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn sup_box(&self, b: &AxisBox) -> f64 {
        self.axes
            .indices_in_box(b)
            .into_iter()
            .map(|i| self.values[i])
            .fold(0.0, f64::max)
    }

    pub fn sup_mask(&self, mask: &GridMask) -> Result<f64> {
        if mask.shape != self.axes.shape() {
            return Err(Error::UnsupportedRegion(format!(
                "mask shape {:?} does not match grid shape {:?}",
                mask.shape,
                self.axes.shape()
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&mask.mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| *v)
            .fold(0.0, f64::max))
    }

    /// Peak location and curvature-implied variance of a 1-D grid from a
    /// parabola through the log-values of the arg-max node and its neighbours.
    /// Exact for Gaussian-shaped tabulations.
    pub fn log_quadratic_peak(&self) -> Result<(f64, f64)> {
        if self.axes.dim() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                got: self.axes.dim(),
            });
        }
        let axis = &self.axes.axes()[0];
        let i = self.argmax();
        if i == 0 || i + 1 >= axis.len() {
            return Err(Error::Numeric("peak lies on the grid boundary".into()));
        }
        let (x0, x1, x2) = (axis[i - 1], axis[i], axis[i + 1]);
        let (l0, l1, l2) = (
            self.values[i - 1].ln(),
            self.values[i].ln(),
            self.values[i + 1].ln(),
        );
        // divided differences of the interpolating parabola
        let d01 = (l1 - l0) / (x1 - x0);
        let d12 = (l2 - l1) / (x2 - x1);
        let curvature = (d12 - d01) / (x2 - x0);
        if !(curvature < 0.0) {
            return Err(Error::Numeric("log-values are not concave at the peak".into()));
        }
        // l(x) = l0 + d01 (x - x0) + c (x - x0)(x - x1); l'(x) = d01 + c (2x - x0 - x1)
        let peak = (x0 + x1) / 2.0 - d01 / (2.0 * curvature);
        Ok((peak, -1.0 / (2.0 * curvature)))
    }

    /// Writes `x0, ..., x{d-1}, value` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..self.axes.dim()).map(|k| format!("x{k}")).collect();
        header.push("value".into());
        wtr.write_record(&header)?;
        for (i, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.axes.node(i).iter().map(f64::to_string).collect();
            row.push(v.to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// A conditional possibility `f(t | s)` tabulated on target x source nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGrid {
    target: GridAxes,
    source: GridAxes,
    table: Vec<f64>,
}

impl ConditionalGrid {
    pub fn new(target: GridAxes, source: GridAxes, table: Vec<f64>) -> Result<Self> {
        let n = target.len() * source.len();
        if table.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: table.len(),
            });
        }
        if table.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Input("conditional values must be finite and non-negative".into()));
        }
        Ok(Self {
            target,
            source,
            table,
        })
    }

    pub fn tabulate(target: GridAxes, source: GridAxes, f: impl Fn(&[f64], &[f64]) -> f64) -> Result<Self> {
        let mut table = Vec::with_capacity(target.len() * source.len());
        for t in 0..target.len() {
            let tn = target.node(t);
            for s in 0..source.len() {
                table.push(f(&tn, &source.node(s)));
            }
        }
        Self::new(target, source, table)
    }

    pub fn target(&self) -> &GridAxes {
        &self.target
    }

    pub fn source(&self) -> &GridAxes {
        &self.source
    }

    pub fn value(&self, t: usize, s: usize) -> f64 {
        self.table[t * self.source.len() + s]
    }

    /// Checks `max_t f(t | s) = 1` for every source node.
    pub fn check_normalized(&self) -> Result<()> {
        for s in 0..self.source.len() {
            let max = (0..self.target.len())
                .map(|t| self.value(t, s))
                .fold(0.0, f64::max);
            if !(1.0 - CONDITIONAL_TOL..=1.0 + CONDITIONAL_TOL).contains(&max) {
                return Err(Error::Model(format!(
                    "conditional possibility not normalised at source node {s} (max {max})"
                )));
            }
        }
        Ok(())
    }
}

/// `f(x) = max_x' f(x | x') f'(x')`.
pub fn predict_possibility_grid(
    kernel: &ConditionalGrid,
    prior: &GridPossibility,
) -> Result<GridPossibility> {
    if kernel.source != prior.axes {
        return Err(Error::Input("kernel source grid differs from the prior grid".into()));
    }
    kernel.check_normalized()?;
    let ns = kernel.source.len();
    let values: Vec<f64> = (0..kernel.target.len())
        .map(|t| {
            let row = &kernel.table[t * ns..(t + 1) * ns];
            row.iter()
                .zip(&prior.values)
                .map(|(k, p)| k * p)
                .fold(0.0, f64::max)
        })
        .collect();
    let max = values.iter().copied().fold(0.0, f64::max);
    if (max - 1.0).abs() > PREDICT_SUP_TOL {
        return Err(Error::Model(format!("predicted supremum is {max}, expected 1")));
    }
    Ok(GridPossibility {
        axes: kernel.target.clone(),
        values,
    })
}

/// `f'(x | y) = f(y | x) f(x) / max_x f(y | x) f(x)`, with `y` snapped to the
/// nearest observation node.
pub fn update_possibility_grid(
    observation: &ConditionalGrid,
    y: &[f64],
    prior: &GridPossibility,
) -> Result<GridPossibility> {
    if observation.source != prior.axes {
        return Err(Error::Input("observation source grid differs from the prior grid".into()));
    }
    if y.len() != observation.target.dim() {
        return Err(Error::Dimension {
            expected: observation.target.dim(),
            got: y.len(),
        });
    }
    let row = observation.target.nearest(y);
    let ns = observation.source.len();
    let numerators: Vec<f64> = observation.table[row * ns..(row + 1) * ns]
        .iter()
        .zip(&prior.values)
        .map(|(l, p)| l * p)
        .collect();
    let (arg, max) = numerators
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    if !(max > 0.0) {
        return Err(Error::Incompatible);
    }
    let mut values: Vec<f64> = numerators.iter().map(|v| v / max).collect();
    values[arg] = 1.0;
    Ok(GridPossibility {
        axes: prior.axes.clone(),
        values,
    })
}

/// Finite mixture of grid possibilities, the grid-scale form of an outer
/// probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMixture {
    components: Vec<(f64, GridPossibility)>,
}

impl GridMixture {
    pub fn new(components: Vec<(f64, GridPossibility)>) -> Result<Self> {
        check_weights(components.iter().map(|c| c.0))?;
        if let Some((_, first)) = components.first() {
            if components.iter().any(|(_, g)| g.axes != first.axes) {
                return Err(Error::Input("mixture components must share a grid".into()));
            }
        }
        Ok(Self { components })
    }

    pub fn single(f: GridPossibility) -> Self {
        Self {
            components: vec![(1.0, f)],
        }
    }

    pub fn components(&self) -> &[(f64, GridPossibility)] {
        &self.components
    }

    pub fn to_opm(&self) -> Result<OuterProbabilityMeasure> {
        OuterProbabilityMeasure::new(
            self.components
                .iter()
                .map(|(w, g)| (*w, PossibilityFunction::Grid(g.clone())))
                .collect(),
        )
    }
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    let mut count = 0;
    for w in weights {
        if !(w >= 0.0) {
            return Err(Error::Input(format!("negative mixture weight {w}")));
        }
        total += w;
        count += 1;
    }
    if count == 0 || (total - 1.0).abs() > 1e-12 {
        return Err(Error::Input(format!("mixture weights sum to {total}, expected 1")));
    }
    Ok(())
}

/// Mixture prediction: every (kernel, prior) pair contributes one component
/// with the product of their weights.
pub fn predict_mixture(
    kernels: &[(f64, ConditionalGrid)],
    prior: &GridMixture,
) -> Result<GridMixture> {
    check_weights(kernels.iter().map(|k| k.0))?;
    let mut components = Vec::with_capacity(kernels.len() * prior.components.len());
    for (beta, kernel) in kernels {
        for (alpha, f) in &prior.components {
            components.push((beta * alpha, predict_possibility_grid(kernel, f)?));
        }
    }
    Ok(GridMixture { components })
}

/// Mixture update: the component for (observation model o, prior i) is the
/// per-pair normalised update, weighted by `gamma_o alpha_i c_oi` where
/// `c_oi = max_x f_o(y | x) f_i(x)`; pairs with `c_oi = 0` drop out.
pub fn update_mixture(
    observations: &[(f64, ConditionalGrid)],
    y: &[f64],
    prior: &GridMixture,
) -> Result<GridMixture> {
    check_weights(observations.iter().map(|o| o.0))?;
    let mut raw = Vec::new();
    for (gamma, obs) in observations {
        for (alpha, f) in &prior.components {
            let row = obs.target.nearest(y);
            let ns = obs.source.len();
            let c = obs.table[row * ns..(row + 1) * ns]
                .iter()
                .zip(&f.values)
                .map(|(l, p)| l * p)
                .fold(0.0, f64::max);
            if c > 0.0 && gamma * alpha > 0.0 {
                raw.push((gamma * alpha * c, update_possibility_grid(obs, y, f)?));
            }
        }
    }
    let total: f64 = raw.iter().map(|r| r.0).sum();
    if !(total > 0.0) {
        return Err(Error::Incompatible);
    }
    Ok(GridMixture {
        components: raw.into_iter().map(|(w, f)| (w / total, f)).collect(),
    })
}
