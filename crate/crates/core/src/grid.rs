//! Discretization of the truncated strip and the grid functions living on it.
//!
//! The domain is the slab `{0 < y < r}` over a tangential torus of side `L`
//! (one or two tangential axes). Node `(·, 0)` sits on the bottom boundary,
//! node `(·, n_normal - 1)` on the top one. Tangential indices wrap
//! periodically. The interior normal points in the `+y` direction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("non-positive dimension: {0}")]
    NonPositiveDimension(String),
    #[error("grid too coarse: {0}")]
    TooCoarse(String),
    #[error("boundary dimension must be 1 or 2, got {0}")]
    BadBoundaryDim(usize),
    #[error("field does not match grid: {0}")]
    GridMismatch(String),
}

/// Node-centered grid on the truncated strip, periodic tangentially.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripGrid {
    depth: f64,
    period: f64,
    n_tangential: usize,
    n_normal: usize,
    boundary_dim: usize,
    h_tangential: f64,
    h_normal: f64,
}

impl StripGrid {
    /// Build a grid for the strip of height `depth` over a periodic box of
    /// side `period` with `n_tangential` nodes per tangential axis and
    /// `n_normal` layers across the strip.
    pub fn new(
        depth: f64,
        period: f64,
        n_tangential: usize,
        n_normal: usize,
        boundary_dim: usize,
    ) -> Result<Self, GridError> {
        if !(depth > 0.0) {
            return Err(GridError::NonPositiveDimension(format!("depth r = {depth}")));
        }
        if !(period > 0.0) {
            return Err(GridError::NonPositiveDimension(format!("period L = {period}")));
        }
        if boundary_dim != 1 && boundary_dim != 2 {
            return Err(GridError::BadBoundaryDim(boundary_dim));
        }
        if n_tangential < 8 {
            return Err(GridError::TooCoarse(format!(
                "n_tangential = {n_tangential}, need >= 8"
            )));
        }
        if n_normal < 4 {
            return Err(GridError::TooCoarse(format!("n_normal = {n_normal}, need >= 4")));
        }
        Ok(Self {
            depth,
            period,
            n_tangential,
            n_normal,
            boundary_dim,
            h_tangential: period / n_tangential as f64,
            h_normal: depth / (n_normal - 1) as f64,
        })
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn n_tangential(&self) -> usize {
        self.n_tangential
    }

    pub fn n_normal(&self) -> usize {
        self.n_normal
    }

    pub fn boundary_dim(&self) -> usize {
        self.boundary_dim
    }

    pub fn h_tangential(&self) -> f64 {
        self.h_tangential
    }

    pub fn h_normal(&self) -> f64 {
        self.h_normal
    }

    /// Largest grid spacing; truncation-order tolerances scale with its square.
    pub fn h_max(&self) -> f64 {
        self.h_tangential.max(self.h_normal)
    }

    /// Number of nodes on one tangential slice (all of the bottom boundary).
    pub fn boundary_len(&self) -> usize {
        match self.boundary_dim {
            1 => self.n_tangential,
            _ => self.n_tangential * self.n_tangential,
        }
    }

    /// Total node count including both boundary layers.
    pub fn bulk_len(&self) -> usize {
        self.boundary_len() * self.n_normal
    }

    #[inline]
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n_tangential as isize) as usize
    }

    /// Flat index of tangential node `(i, j)` in layer `k`; `j` is ignored for
    /// a one-dimensional boundary.
    #[inline]
    pub fn bulk_index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.n_tangential && k < self.n_normal);
        match self.boundary_dim {
            1 => k * self.n_tangential + i,
            _ => (k * self.n_tangential + j) * self.n_tangential + i,
        }
    }

    #[inline]
    pub fn boundary_index(&self, i: usize, j: usize) -> usize {
        match self.boundary_dim {
            1 => i,
            _ => j * self.n_tangential + i,
        }
    }

    pub fn tangential_coord(&self, i: usize) -> f64 {
        i as f64 * self.h_tangential
    }

    pub fn normal_coord(&self, k: usize) -> f64 {
        k as f64 * self.h_normal
    }

    /// Wrapped distance between two tangential coordinates on the torus.
    pub fn wrapped_distance(&self, a: f64, b: f64) -> f64 {
        let l = self.period;
        let d = (a - b).rem_euclid(l);
        d.min(l - d)
    }
}

/// Real-valued grid function on the whole strip, both boundary layers included.
#[derive(Debug, Clone, PartialEq)]
pub struct BulkField {
    grid: StripGrid,
    values: Vec<f64>,
}

impl BulkField {
    pub fn zeros(grid: StripGrid) -> Self {
        Self { grid, values: vec![0.0; grid.bulk_len()] }
    }

    pub fn constant(grid: StripGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.bulk_len()] }
    }

    pub fn from_values(grid: StripGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.bulk_len() {
            return Err(GridError::GridMismatch(format!(
                "expected {} values, got {}",
                grid.bulk_len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Fill from a function of the tangential coordinates and the normal
    /// coordinate; the second tangential argument is 0 when `d = 1`.
    pub fn from_fn(grid: StripGrid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; grid.bulk_len()];
        let nj = if grid.boundary_dim() == 1 { 1 } else { grid.n_tangential() };
        for k in 0..grid.n_normal() {
            let y = grid.normal_coord(k);
            for j in 0..nj {
                let xj = grid.tangential_coord(j);
                for i in 0..grid.n_tangential() {
                    let xi = grid.tangential_coord(i);
                    values[grid.bulk_index(i, j, k)] = f(xi, xj, y);
                }
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.bulk_index(i, j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Tangential translation by whole cells; a pure reindexing.
    pub fn translate_tangential(&self, di: isize, dj: isize) -> BulkField {
        let g = self.grid;
        let mut out = vec![0.0; self.values.len()];
        let nj = if g.boundary_dim() == 1 { 1 } else { g.n_tangential() };
        for k in 0..g.n_normal() {
            for j in 0..nj {
                let js = g.wrap(j as isize + dj);
                for i in 0..g.n_tangential() {
                    let is = g.wrap(i as isize + di);
                    out[g.bulk_index(i, j, k)] = self.values[g.bulk_index(is, js, k)];
                }
            }
        }
        BulkField { grid: g, values: out }
    }

    /// Pointwise `a*self + b*other`.
    pub fn lin_comb(&self, a: f64, other: &BulkField, b: f64) -> BulkField {
        assert_eq!(self.grid, other.grid, "fields on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        BulkField { grid: self.grid, values }
    }

    /// Periodic-linear interpolation onto another grid over the same strip.
    /// Used to warm-start refined solves.
    pub fn interpolate_to(&self, target: StripGrid) -> BulkField {
        let src = self.grid;
        assert_eq!(src.boundary_dim(), target.boundary_dim());
        let interp1 = |x: f64, j: usize, k: usize, field: &BulkField| -> f64 {
            let t = x / src.h_tangential();
            let i0 = t.floor() as isize;
            let frac = t - t.floor();
            let a = field.values[src.bulk_index(src.wrap(i0), j, k)];
            let b = field.values[src.bulk_index(src.wrap(i0 + 1), j, k)];
            a + frac * (b - a)
        };
        BulkField::from_fn(target, |xi, xj, y| {
            // clamp against the top layer to stay in range under round-off
            let t = (y / src.h_normal()).min((src.n_normal() - 1) as f64);
            let k0 = (t.floor() as usize).min(src.n_normal() - 2);
            let fy = t - k0 as f64;
            let j0;
            let fj;
            if src.boundary_dim() == 1 {
                j0 = 0;
                fj = 0.0;
            } else {
                let tj = xj / src.h_tangential();
                j0 = src.wrap(tj.floor() as isize);
                fj = tj - tj.floor();
            }
            let j1 = src.wrap(j0 as isize + 1);
            let lo = (1.0 - fj) * interp1(xi, j0, k0, self) + fj * interp1(xi, j1, k0, self);
            let hi = (1.0 - fj) * interp1(xi, j0, k0 + 1, self) + fj * interp1(xi, j1, k0 + 1, self);
            lo + fy * (hi - lo)
        })
    }
}

/// Real-valued grid function on the bottom boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    grid: StripGrid,
    values: Vec<f64>,
}

impl BoundaryField {
    pub fn zeros(grid: StripGrid) -> Self {
        Self { grid, values: vec![0.0; grid.boundary_len()] }
    }

    pub fn constant(grid: StripGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.boundary_len()] }
    }

    pub fn from_values(grid: StripGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.boundary_len() {
            return Err(GridError::GridMismatch(format!(
                "expected {} values, got {}",
                grid.boundary_len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: StripGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; grid.boundary_len()];
        let nj = if grid.boundary_dim() == 1 { 1 } else { grid.n_tangential() };
        for j in 0..nj {
            let xj = grid.tangential_coord(j);
            for i in 0..grid.n_tangential() {
                values[grid.boundary_index(i, j)] = f(grid.tangential_coord(i), xj);
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.boundary_index(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(*v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }

    /// max - min over the boundary.
    pub fn oscillation(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.max() - self.min()
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn translate(&self, di: isize, dj: isize) -> BoundaryField {
        let g = self.grid;
        let mut out = vec![0.0; self.values.len()];
        let nj = if g.boundary_dim() == 1 { 1 } else { g.n_tangential() };
        for j in 0..nj {
            let js = g.wrap(j as isize + dj);
            for i in 0..g.n_tangential() {
                let is = g.wrap(i as isize + di);
                out[g.boundary_index(i, j)] = self.values[g.boundary_index(is, js)];
            }
        }
        BoundaryField { grid: g, values: out }
    }

    pub fn lin_comb(&self, a: f64, other: &BoundaryField, b: f64) -> BoundaryField {
        assert_eq!(self.grid, other.grid, "fields on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        BoundaryField { grid: self.grid, values }
    }

    pub fn add_scalar(&self, c: f64) -> BoundaryField {
        BoundaryField {
            grid: self.grid,
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &BoundaryField) -> f64 {
        assert_eq!(self.grid, other.grid, "fields on different grids");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Slice of a bulk field at the bottom boundary.
pub fn restrict_to_boundary(u: &BulkField) -> BoundaryField {
    let g = *u.grid();
    let n = g.boundary_len();
    BoundaryField { grid: g, values: u.values()[..n].to_vec() }
}

/// Second-order one-sided interior-normal derivative on the bottom boundary:
/// `(-3 u0 + 4 u1 - u2) / (2 h_n)` per tangential node. Exact on fields affine
/// or quadratic in the normal coordinate.
pub fn normal_derivative_at_boundary(u: &BulkField) -> Result<BoundaryField, GridError> {
    let g = *u.grid();
    if g.n_normal() < 4 {
        return Err(GridError::TooCoarse(format!(
            "one-sided stencil needs n_normal >= 4, got {}",
            g.n_normal()
        )));
    }
    let n = g.boundary_len();
    let v = u.values();
    let scale = 1.0 / (2.0 * g.h_normal());
    let values = (0..n)
        .map(|p| (-3.0 * v[p] + 4.0 * v[n + p] - v[2 * n + p]) * scale)
        .collect();
    Ok(BoundaryField { grid: g, values })
}
