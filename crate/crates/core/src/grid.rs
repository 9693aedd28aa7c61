//! Discretizations of the unit disc.
//!
//! * [`GridKind::Radial`]: nodes `rᵢ = i h` on `[0, 1]`, `h = 1/(n−1)`, for
//!   radially symmetric data. Node `n−1` carries the Dirichlet condition.
//! * [`GridKind::Disc2D`]: an `n × n` lattice on `[−1, 1]²`,
//!   `h = 2/(n−1)`; nodes strictly inside the unit circle are unknowns, all
//!   others are held at zero (staircase boundary).
//!
//! Quadrature weights are the areas of the nodes' control cells: `h²` on the
//! disc lattice, annuli `π(r_{i+½}² − r_{i−½}²)` radially. Away from the
//! endpoints the radial weight is the trapezoid weight `2π rᵢ h`; at the
//! origin it is `π h²/4` and at `r = 1` it is `π(h − h²/4)`, so the weights
//! sum to `π` exactly and make the discrete Laplacian symmetric.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Radial,
    #[serde(rename = "disc")]
    Disc2D,
}

/// Identifies the grid a [`Field`] lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridKey {
    pub kind: GridKind,
    pub n: usize,
}

/// `−Δ_h` restricted to the interior nodes, in compressed rows.
///
/// Row `r` belongs to node `interior[r]`; `cols` hold row indices of
/// interior neighbours (Dirichlet neighbours are dropped).
#[derive(Debug, Clone)]
pub struct Stencil {
    pub diag: Vec<f64>,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Stencil {
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    kind: GridKind,
    n: usize,
    h: f64,
    coords: Vec<[f64; 2]>,
    interior_mask: Vec<bool>,
    interior: Vec<usize>,
    quad_weights: Vec<f64>,
    stencil: Stencil,
}

impl Grid {
    pub fn build(kind: GridKind, n: usize) -> Result<Self> {
        match kind {
            GridKind::Radial => Self::build_radial(n),
            GridKind::Disc2D => Self::build_disc(n),
        }
    }

    pub fn build_radial(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Argument(format!("radial grid needs n >= 3, got {n}")));
        }
        let h = 1.0 / (n - 1) as f64;
        let coords: Vec<[f64; 2]> = (0..n).map(|i| [i as f64 * h, 0.0]).collect();
        let mut interior_mask = vec![true; n];
        interior_mask[n - 1] = false;
        let interior: Vec<usize> = (0..n - 1).collect();

        let mut quad_weights = vec![0.0; n];
        quad_weights[0] = PI * h * h / 4.0;
        for (i, w) in quad_weights.iter_mut().enumerate().take(n - 1).skip(1) {
            *w = 2.0 * PI * (i as f64 * h) * h;
        }
        quad_weights[n - 1] = PI * (h - h * h / 4.0);

        // −Δu(0) = −2u''(0) = 4(u₀ − u₁)/h² + O(h²) by symmetry u'(0) = 0;
        // elsewhere the flux form −(r u')'/r with half-point radii.
        let h2 = h * h;
        let mut diag = Vec::with_capacity(n - 1);
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n - 1 {
            if i == 0 {
                diag.push(4.0 / h2);
                cols.push(1);
                vals.push(-4.0 / h2);
            } else {
                let r = i as f64 * h;
                let r_lo = r - 0.5 * h;
                let r_hi = r + 0.5 * h;
                diag.push((r_lo + r_hi) / (r * h2));
                cols.push(i - 1);
                vals.push(-r_lo / (r * h2));
                if i + 1 < n - 1 {
                    cols.push(i + 1);
                    vals.push(-r_hi / (r * h2));
                }
            }
            row_ptr.push(cols.len());
        }

        Ok(Grid {
            kind: GridKind::Radial,
            n,
            h,
            coords,
            interior_mask,
            interior,
            quad_weights,
            stencil: Stencil { diag, row_ptr, cols, vals },
        })
    }

    pub fn build_disc(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Argument(format!("disc grid needs n >= 3, got {n}")));
        }
        let h = 2.0 / (n - 1) as f64;
        let mut coords = Vec::with_capacity(n * n);
        let mut interior_mask = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                let (x, y) = (-1.0 + ix as f64 * h, -1.0 + iy as f64 * h);
                coords.push([x, y]);
                interior_mask.push(x * x + y * y < 1.0);
            }
        }
        // the centre row/column must sit exactly on the axes for odd n
        if n % 2 == 1 {
            let mid = n / 2;
            for i in 0..n {
                coords[mid * n + i][1] = 0.0;
                coords[i * n + mid][0] = 0.0;
            }
        }
        let interior: Vec<usize> = (0..n * n).filter(|&i| interior_mask[i]).collect();
        let mut row_of = vec![usize::MAX; n * n];
        for (r, &node) in interior.iter().enumerate() {
            row_of[node] = r;
        }
        let quad_weights: Vec<f64> =
            interior_mask.iter().map(|&inside| if inside { h * h } else { 0.0 }).collect();

        let h2 = h * h;
        let mut diag = Vec::with_capacity(interior.len());
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for &node in &interior {
            let (ix, iy) = (node % n, node / n);
            diag.push(4.0 / h2);
            // interior nodes never touch the lattice edge, so neighbours exist
            for nb in [node - 1, node + 1, node - n, node + n] {
                debug_assert!(ix > 0 && iy > 0 && ix + 1 < n && iy + 1 < n);
                if interior_mask[nb] {
                    cols.push(row_of[nb]);
                    vals.push(-1.0 / h2);
                }
            }
            row_ptr.push(cols.len());
        }

        Ok(Grid {
            kind: GridKind::Disc2D,
            n,
            h,
            coords,
            interior_mask,
            interior,
            quad_weights,
            stencil: Stencil { diag, row_ptr, cols, vals },
        })
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn key(&self) -> GridKey {
        GridKey { kind: self.kind, n: self.n }
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    /// `[x, y]` on the disc lattice, `[r, 0]` radially.
    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    /// Distance of a node from the origin.
    pub fn radius(&self, node: usize) -> f64 {
        let [x, y] = self.coords[node];
        match self.kind {
            GridKind::Radial => x,
            GridKind::Disc2D => x.hypot(y),
        }
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.interior_mask[node]
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior_mask
    }

    /// Unknown nodes, in increasing order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    /// Index of the node nearest the origin.
    pub fn center(&self) -> usize {
        match self.kind {
            GridKind::Radial => 0,
            GridKind::Disc2D => (self.n / 2) * self.n + self.n / 2,
        }
    }

    fn check(&self, field: &Field) -> Result<()> {
        if field.key != self.key() || field.values.len() != self.node_count() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `Σ wᵢ vᵢ` over all nodes.
    pub fn integrate(&self, field: &Field) -> Result<f64> {
        self.check(field)?;
        Ok(self.quad_weights.iter().zip(&field.values).map(|(w, v)| w * v).sum())
    }

    /// `Σ wᵢ vᵢ` over interior nodes only.
    pub fn integrate_interior(&self, field: &Field) -> Result<f64> {
        self.check(field)?;
        Ok(self.interior.iter().map(|&i| self.quad_weights[i] * field.values[i]).sum())
    }

    /// Weighted `Σ wᵢ φ(vᵢ)` over interior nodes.
    pub fn integrate_interior_with(&self, field: &Field, phi: impl Fn(usize, f64) -> f64) -> Result<f64> {
        self.check(field)?;
        Ok(self.interior.iter().map(|&i| self.quad_weights[i] * phi(i, field.values[i])).sum())
    }

    /// Anisotropic discrete total variation over edges joining two interior
    /// nodes: `Σ h |Δv|` on the lattice, `Σ 2π r_{i+½} |v_{i+1} − vᵢ|`
    /// radially.
    pub fn total_variation(&self, field: &Field) -> Result<f64> {
        self.check(field)?;
        let v = &field.values;
        let tv = match self.kind {
            GridKind::Radial => (0..self.n - 2)
                .map(|i| 2.0 * PI * (i as f64 + 0.5) * self.h * (v[i + 1] - v[i]).abs())
                .sum(),
            GridKind::Disc2D => {
                let n = self.n;
                let mut acc = 0.0;
                for &node in &self.interior {
                    for nb in [node + 1, node + n] {
                        if self.interior_mask[nb] {
                            acc += self.h * (v[nb] - v[node]).abs();
                        }
                    }
                }
                acc
            }
        };
        Ok(tv)
    }
}

/// Nodal values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    key: GridKey,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field { key: grid.key(), values: vec![0.0; grid.node_count()] }
    }

    /// The same value at every node, including Dirichlet nodes.
    pub fn constant(grid: &Grid, c: f64) -> Self {
        Field { key: grid.key(), values: vec![c; grid.node_count()] }
    }

    /// `c` on interior nodes, zero elsewhere.
    pub fn interior_constant(grid: &Grid, c: f64) -> Self {
        let values = grid.interior_mask().iter().map(|&m| if m { c } else { 0.0 }).collect();
        Field { key: grid.key(), values }
    }

    /// Samples `f(x, y)` at every node (`f(r, 0)` radially).
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = grid.coords().iter().map(|&[x, y]| f(x, y)).collect();
        Field { key: grid.key(), values }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch);
        }
        Ok(Field { key: grid.key(), values })
    }

    pub fn key(&self) -> GridKey {
        self.key
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.key != other.key {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { key: self.key, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field { key: self.key, values })
    }

    /// Zeroes every non-interior node.
    pub fn masked(mut self, grid: &Grid) -> Field {
        for (v, &inside) in self.values.iter_mut().zip(grid.interior_mask()) {
            if !inside {
                *v = 0.0;
            }
        }
        self
    }
}
