//! Discrete data model: uniform grids with an exterior collar, vector phase
//! fields, label partitions, and cell masks.
//!
//! Cells are enumerated row-major over the full grid (collar included), so
//! enumeration is deterministic and serialization bit-stable. The second axis
//! is degenerate (one cell) in 1D, which lets most code treat both dimensions
//! uniformly.

use crate::error::{Error, Result};
use crate::wells::Wells;

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    /// spatial dimension (1 or 2)
    pub n: usize,
    /// grid spacing
    pub h: f64,
    /// interior box lower corner (axis 1 unused in 1D)
    pub box_lo: [f64; 2],
    /// interior box upper corner
    pub box_hi: [f64; 2],
    /// collar width in cells on each side of each active axis
    pub collar_cells: usize,
    /// total cells per axis; shape[1] = 1 in 1D
    pub shape: [usize; 2],
    /// interior cells per axis
    pub interior_shape: [usize; 2],
    /// radius beyond which interactions use the analytic radial tail
    pub tail_radius: f64,
}

impl Lattice {
    pub fn cell_count(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn interior_count(&self) -> usize {
        self.interior_shape[0] * self.interior_shape[1]
    }

    #[inline]
    pub fn index(&self, i0: usize, i1: usize) -> usize {
        i0 * self.shape[1] + i1
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx / self.shape[1], idx % self.shape[1])
    }

    /// Cell center.
    pub fn center(&self, idx: usize) -> [f64; 2] {
        let (i0, i1) = self.coords(idx);
        let x0 = self.box_lo[0] + self.h * (i0 as f64 + 0.5 - self.collar_cells as f64);
        let x1 = if self.n == 2 {
            self.box_lo[1] + self.h * (i1 as f64 + 0.5 - self.collar_cells as f64)
        } else {
            0.0
        };
        [x0, x1]
    }

    #[inline]
    pub fn is_interior(&self, idx: usize) -> bool {
        let (i0, i1) = self.coords(idx);
        let c = self.collar_cells;
        let in0 = i0 >= c && i0 < c + self.interior_shape[0];
        if self.n == 1 {
            in0
        } else {
            in0 && i1 >= c && i1 < c + self.interior_shape[1]
        }
    }

    /// Mask of the interior cells.
    pub fn interior_mask(&self) -> Vec<bool> {
        (0..self.cell_count()).map(|i| self.is_interior(i)).collect()
    }

    /// Cell measure h^n.
    pub fn cell_measure(&self) -> f64 {
        self.h.powi(self.n as i32)
    }
}

/// Build a lattice over the interior box with an exterior collar.
///
/// The box extents must be (near-)multiples of h; the collar is rounded to
/// whole cells.
pub fn build_lattice(
    n: usize,
    h: f64,
    box_lo: [f64; 2],
    box_hi: [f64; 2],
    collar_width: f64,
    tail_radius: f64,
) -> Result<Lattice> {
    if n == 0 || n > 2 {
        return Err(Error::InvalidParam(format!("n must be 1 or 2, got {n}")));
    }
    if h <= 0.0 {
        return Err(Error::InvalidParam("h must be positive".into()));
    }
    if collar_width < 2.0 * h {
        return Err(Error::InvalidParam(format!(
            "collar width {collar_width} must be at least 2h = {}",
            2.0 * h
        )));
    }
    let mut interior_shape = [1usize; 2];
    for ax in 0..n {
        let len = box_hi[ax] - box_lo[ax];
        if len < 4.0 * h {
            return Err(Error::InvalidParam(format!(
                "box extent {len} on axis {ax} is below 4h"
            )));
        }
        let cells = (len / h).round();
        if ((len / h) - cells).abs() > 1e-9 * cells.max(1.0) {
            return Err(Error::InvalidParam(format!(
                "box extent {len} on axis {ax} is not a multiple of h = {h}"
            )));
        }
        interior_shape[ax] = cells as usize;
    }
    let collar_cells = (collar_width / h).round() as usize;
    let mut shape = [1usize; 2];
    for ax in 0..n {
        shape[ax] = interior_shape[ax] + 2 * collar_cells;
    }
    Ok(Lattice {
        n,
        h,
        box_lo,
        box_hi,
        collar_cells,
        shape,
        interior_shape,
        tail_radius,
    })
}

/// Per-cell vectors in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub d: usize,
    pub cells: usize,
    /// cell-major layout: values[idx*d .. idx*d+d]
    pub values: Vec<f64>,
}

impl VectorField {
    pub fn zeros(lattice: &Lattice, d: usize) -> Self {
        VectorField {
            d,
            cells: lattice.cell_count(),
            values: vec![0.0; lattice.cell_count() * d],
        }
    }

    pub fn constant(lattice: &Lattice, v: &[f64]) -> Self {
        let cells = lattice.cell_count();
        let mut values = Vec::with_capacity(cells * v.len());
        for _ in 0..cells {
            values.extend_from_slice(v);
        }
        VectorField { d: v.len(), cells, values }
    }

    #[inline]
    pub fn get(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.d..(idx + 1) * self.d]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: &[f64]) {
        self.values[idx * self.d..(idx + 1) * self.d].copy_from_slice(v);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Componentwise sup-norm over all cells.
    pub fn sup_norm(&self) -> f64 {
        let mut m: f64 = 0.0;
        for idx in 0..self.cells {
            let v = self.get(idx);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            m = m.max(norm);
        }
        m
    }
}

/// Per-cell labels 1..=m.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelField {
    pub m: usize,
    pub labels: Vec<u16>,
}

impl LabelField {
    pub fn constant(lattice: &Lattice, m: usize, label: u16) -> Result<Self> {
        if label == 0 || label as usize > m {
            return Err(Error::InvalidParam(format!("label {label} outside 1..={m}")));
        }
        Ok(LabelField { m, labels: vec![label; lattice.cell_count()] })
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &l) in self.labels.iter().enumerate() {
            if l == 0 || l as usize > self.m {
                return Err(Error::InvalidParam(format!(
                    "cell {i} carries label {l} outside 1..={}",
                    self.m
                )));
            }
        }
        Ok(())
    }

    /// Indicator mask of one label.
    pub fn mask_of(&self, label: u16) -> Vec<bool> {
        self.labels.iter().map(|&l| l == label).collect()
    }

    /// The piecewise-constant embedding u = sum_j chi_{E_j} a_j.
    pub fn embed(&self, lattice: &Lattice, wells: &Wells) -> VectorField {
        let d = wells.d;
        let mut f = VectorField::zeros(lattice, d);
        for idx in 0..lattice.cell_count() {
            let a = &wells.points[(self.labels[idx] - 1) as usize];
            f.set(idx, a);
        }
        f
    }
}

/// Nearest-well projection of a vector field to labels; ties go to the
/// smallest index.
pub fn threshold_to_labels(lattice: &Lattice, u: &VectorField, wells: &Wells) -> Result<LabelField> {
    if u.d != wells.d {
        return Err(Error::DimensionMismatch(format!(
            "field dimension {} vs wells dimension {}",
            u.d, wells.d
        )));
    }
    let mut labels = Vec::with_capacity(u.cells);
    for idx in 0..u.cells {
        let v = u.get(idx);
        let mut best = 0usize;
        let mut best_d2 = f64::INFINITY;
        for (j, a) in wells.points.iter().enumerate() {
            let d2: f64 = v.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum();
            if d2 < best_d2 {
                best_d2 = d2;
                best = j;
            }
        }
        labels.push((best + 1) as u16);
    }
    let _ = lattice;
    Ok(LabelField { m: wells.m(), labels })
}

/// Mask of cells where dist(u, Z) >= t.
pub fn transition_set(u: &VectorField, wells: &Wells, t: f64) -> Result<Vec<bool>> {
    if t <= 0.0 {
        return Err(Error::InvalidParam("threshold t must be positive".into()));
    }
    if u.d != wells.d {
        return Err(Error::DimensionMismatch("field vs wells dimension".into()));
    }
    let mut mask = Vec::with_capacity(u.cells);
    for idx in 0..u.cells {
        let v = u.get(idx);
        let dist = wells.dist_to_wells(v);
        mask.push(dist >= t);
    }
    Ok(mask)
}
