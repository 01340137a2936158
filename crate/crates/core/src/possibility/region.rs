//! Subset descriptors: finite unions of axis-aligned boxes and grid masks.
//!
//! Boxes are closed and may have infinite bounds. Overlap between two boxes is
//! tested on interiors along every axis where both boxes have positive width,
//! and on closed intervals along axes where either box is degenerate. This
//! makes set differences behave up to boundaries (the complement of `[0, 1]`
//! does not "touch" `[0, 1]`), while point queries still work.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::Input("a box needs at least one axis".into()));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if l.is_nan() || h.is_nan() || l > h {
                return Err(Error::Input(format!("invalid box bounds [{l}, {h}]")));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn point(x: &[f64]) -> Result<Self> {
        Self::new(x.to_vec(), x.to_vec())
    }

    /// The whole space of dimension `dim`.
    pub fn whole(dim: usize) -> Self {
        Self {
            lo: vec![f64::NEG_INFINITY; dim],
            hi: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| l <= v && v <= h)
    }

    fn axis_overlaps(&self, other: &AxisBox, k: usize) -> bool {
        let lo = self.lo[k].max(other.lo[k]);
        let hi = self.hi[k].min(other.hi[k]);
        let degenerate = self.lo[k] == self.hi[k] || other.lo[k] == other.hi[k];
        if degenerate {
            lo <= hi
        } else {
            lo < hi
        }
    }

    pub fn overlaps(&self, other: &AxisBox) -> bool {
        self.dim() == other.dim() && (0..self.dim()).all(|k| self.axis_overlaps(other, k))
    }

    /// Closed intersection, `None` when the boxes do not overlap.
    pub fn intersection(&self, other: &AxisBox) -> Option<AxisBox> {
        if !self.overlaps(other) {
            return None;
        }
        let lo = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        Some(AxisBox { lo, hi })
    }

    /// Closure of `self \ other`, as a list of boxes.
    pub fn subtract(&self, other: &AxisBox) -> Vec<AxisBox> {
        if !self.overlaps(other) {
            return vec![self.clone()];
        }
        let mut rest = self.clone();
        let mut pieces = Vec::new();
        for k in 0..self.dim() {
            if rest.lo[k] == rest.hi[k] {
                continue;
            }
            if rest.lo[k] < other.lo[k] {
                let mut piece = rest.clone();
                piece.hi[k] = other.lo[k];
                pieces.push(piece);
                rest.lo[k] = other.lo[k];
            }
            if rest.hi[k] > other.hi[k] {
                let mut piece = rest.clone();
                piece.lo[k] = other.hi[k];
                pieces.push(piece);
                rest.hi[k] = other.hi[k];
            }
        }
        pieces
    }

    /// Sub-box over the axis range `[start, start + len)`.
    pub fn project(&self, start: usize, len: usize) -> AxisBox {
        AxisBox {
            lo: self.lo[start..start + len].to_vec(),
            hi: self.hi[start..start + len].to_vec(),
        }
    }

    /// Point of the box closest to `x` in each coordinate.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect()
    }
}

/// A boolean mask over the nodes of a rectilinear grid (row-major, last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridMask {
    pub shape: Vec<usize>,
    pub mask: Vec<bool>,
}

impl GridMask {
    pub fn new(shape: Vec<usize>, mask: Vec<bool>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != mask.len() {
            return Err(Error::Dimension {
                expected: n,
                got: mask.len(),
            });
        }
        Ok(Self { shape, mask })
    }

    pub fn complement(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            mask: self.mask.iter().map(|m| !m).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Boxes(Vec<AxisBox>),
    Mask(GridMask),
}

impl Region {
    pub fn boxes(boxes: Vec<AxisBox>) -> Result<Self> {
        if let Some(first) = boxes.first() {
            let d = first.dim();
            if let Some(b) = boxes.iter().find(|b| b.dim() != d) {
                return Err(Error::Dimension {
                    expected: d,
                    got: b.dim(),
                });
            }
        }
        Ok(Region::Boxes(boxes))
    }

    pub fn whole(dim: usize) -> Self {
        Region::Boxes(vec![AxisBox::whole(dim)])
    }

    pub fn single(b: AxisBox) -> Self {
        Region::Boxes(vec![b])
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Region::Boxes(b) => b.is_empty(),
            Region::Mask(m) => !m.mask.iter().any(|&v| v),
        }
    }

    /// Complement within the whole space of dimension `dim` (ignored for masks).
    pub fn complement(&self, dim: usize) -> Result<Self> {
        match self {
            Region::Mask(m) => Ok(Region::Mask(m.complement())),
            Region::Boxes(boxes) => {
                let mut pieces = vec![AxisBox::whole(dim)];
                for b in boxes {
                    if b.dim() != dim {
                        return Err(Error::Dimension {
                            expected: dim,
                            got: b.dim(),
                        });
                    }
                    pieces = pieces.iter().flat_map(|p| p.subtract(b)).collect();
                }
                Ok(Region::Boxes(pieces))
            }
        }
    }
}
