//! The state/adjoint operator `−Δ_h + m` with homogeneous Dirichlet data.
//!
//! Rows are scaled by the quadrature weights, which makes the system matrix
//! symmetric on both grids, and positive definite whenever `m ≥ 0`. It is
//! solved by conjugate gradients with a diagonal preconditioner.

use serde::Serialize;

use crate::control::CostIntegrand;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Default relative residual tolerance of the linear solves.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
}

/// `W (−Δ_h + m)` on the interior unknowns of a grid.
#[derive(Debug, Clone)]
pub struct EllipticOperator<'g> {
    grid: &'g Grid,
    weights: Vec<f64>,
    diag: Vec<f64>,
}

impl<'g> EllipticOperator<'g> {
    /// Fails with [`Error::NegativePotential`] if `m < 0` at an interior node.
    pub fn new(grid: &'g Grid, m: &Field) -> Result<Self> {
        if m.key() != grid.key() {
            return Err(Error::GridMismatch);
        }
        let stencil = grid.stencil();
        let mut weights = Vec::with_capacity(grid.interior().len());
        let mut diag = Vec::with_capacity(grid.interior().len());
        for (r, &node) in grid.interior().iter().enumerate() {
            let mv = m.values()[node];
            if mv < 0.0 || mv.is_nan() {
                return Err(Error::NegativePotential { node, value: mv });
            }
            let w = grid.quad_weights()[node];
            weights.push(w);
            diag.push(w * (stencil.diag[r] + mv));
        }
        Ok(EllipticOperator { grid, weights, diag })
    }

    pub fn grid(&self) -> &Grid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `out = W (−Δ_h + m) v` on compact interior vectors.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let stencil = self.grid.stencil();
        for r in 0..self.diag.len() {
            let mut acc = self.diag[r] * v[r];
            let w = self.weights[r];
            for (c, a) in stencil.row(r) {
                acc += w * a * v[c];
            }
            out[r] = acc;
        }
    }

    /// Solves `(−Δ_h + m) u = rhs` on the interior nodes to relative residual
    /// `tol`, starting from `guess` (zero when absent). Never fails; the
    /// report says whether the iteration cap `20 n²` was hit.
    pub fn solve(&self, rhs: &Field, tol: f64, guess: Option<&Field>) -> Result<(Field, SolveReport)> {
        if rhs.key() != self.grid.key() {
            return Err(Error::GridMismatch);
        }
        let interior = self.grid.interior();
        let dim = interior.len();
        let b: Vec<f64> = interior
            .iter()
            .zip(&self.weights)
            .map(|(&node, w)| w * rhs.values()[node])
            .collect();
        let b_norm = norm(&b);

        let mut x: Vec<f64> = match guess {
            Some(g) => {
                rhs.same_grid(g)?;
                interior.iter().map(|&node| g.values()[node]).collect()
            }
            None => vec![0.0; dim],
        };
        let mut r = vec![0.0; dim];
        self.apply(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&b) {
            *ri = bi - *ri;
        }

        let cap = 20 * self.grid.n() * self.grid.n();
        let target = tol * b_norm;
        let mut res = norm(&r);
        let mut iterations = 0;
        if res > target {
            let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(ri, d)| ri / d).collect();
            let mut p = z.clone();
            let mut ap = vec![0.0; dim];
            let mut rz = dot(&r, &z);
            while iterations < cap {
                iterations += 1;
                self.apply(&p, &mut ap);
                let step = rz / dot(&p, &ap);
                for i in 0..dim {
                    x[i] += step * p[i];
                    r[i] -= step * ap[i];
                }
                res = norm(&r);
                if res <= target {
                    break;
                }
                for i in 0..dim {
                    z[i] = r[i] / self.diag[i];
                }
                let rz_next = dot(&r, &z);
                let beta = rz_next / rz;
                rz = rz_next;
                for i in 0..dim {
                    p[i] = z[i] + beta * p[i];
                }
            }
        }

        let mut u = Field::zeros(self.grid);
        for (&node, xi) in interior.iter().zip(&x) {
            u.values_mut()[node] = *xi;
        }
        let converged = res <= target;
        let residual_norm = if b_norm > 0.0 { res / b_norm } else { res };
        Ok((u, SolveReport { iterations, residual_norm, converged }))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn require_converged(out: (Field, SolveReport)) -> Result<(Field, SolveReport)> {
    if out.1.converged {
        Ok(out)
    } else {
        Err(Error::NonConvergence { iterations: out.1.iterations, residual: out.1.residual_norm })
    }
}

/// `−Δ_h u + m u = f`, `u = 0` off the interior.
pub fn solve_state(grid: &Grid, m: &Field, f: &Field, tol: f64) -> Result<(Field, SolveReport)> {
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    require_converged(EllipticOperator::new(grid, m)?.solve(f, tol, None)?)
}

/// `−Δ_h z + m z = ∂ₛj(x, u)`.
pub fn solve_adjoint(
    grid: &Grid,
    m: &Field,
    j: &CostIntegrand,
    u: &Field,
    tol: f64,
) -> Result<(Field, SolveReport)> {
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let rhs = j.deriv_field(grid, u)?;
    require_converged(EllipticOperator::new(grid, m)?.solve(&rhs, tol, None)?)
}

/// Nodal `(−Δ_h v)ᵢ` on interior nodes, zero elsewhere.
pub fn neg_laplacian(grid: &Grid, v: &Field) -> Result<Field> {
    if v.key() != grid.key() {
        return Err(Error::GridMismatch);
    }
    let stencil = grid.stencil();
    let interior = grid.interior();
    let mut out = Field::zeros(grid);
    for (r, &node) in interior.iter().enumerate() {
        let mut acc = stencil.diag[r] * v.values()[node];
        for (c, a) in stencil.row(r) {
            acc += a * v.values()[interior[c]];
        }
        out.values_mut()[node] = acc;
    }
    Ok(out)
}
