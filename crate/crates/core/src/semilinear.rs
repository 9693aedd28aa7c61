//! `−Δu + g(u) ∋ f` with a non-decreasing, possibly discontinuous `g`.
//!
//! The solution `u` minimizes the strictly convex energy
//!
//! ```text
//! E(v) = Σ wᵢ [ ½ (v·(−Δ_h v))ᵢ + G(vᵢ) − fᵢ vᵢ ]
//! ```
//!
//! which is done by nonlinear Gauss–Seidel: each nodal sub-problem is
//! minimized exactly through the graph resolvent with `λᵢ = 1/(−Δ_h)ᵢᵢ`.
//! Sweeps alternate lexicographic and reverse order and are over-relaxed; an
//! over-relaxed value is kept only when it does not raise the nodal energy,
//! so `E` never increases. The selection is then recovered as the defect
//! `w = f + Δ_h u`.

use serde::Serialize;

use crate::convex::MonotoneGraph;
use crate::elliptic::neg_laplacian;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, GridKind};

#[derive(Debug, Clone)]
pub struct SemilinearOptions {
    /// Stop once `max dist(wᵢ, [g₋(uᵢ), g₊(uᵢ)]) ≤ tol · max(1, ‖f‖∞)`, or
    /// once it reaches the round-off level of evaluating `Δ_h u`.
    pub tol: f64,
    /// Cap on symmetric sweeps.
    pub max_sweeps: usize,
    /// Over-relaxation factor; `None` picks the linear optimum for the grid.
    pub omega: Option<f64>,
    /// Starting field; zero when absent.
    pub initial: Option<Field>,
}

impl Default for SemilinearOptions {
    fn default() -> Self {
        SemilinearOptions { tol: 1e-10, max_sweeps: 50_000, omega: None, initial: None }
    }
}

/// The pair `(u, w)` with `g₋(u) ≤ w ≤ g₊(u)` and `−Δ_h u + w = f`.
#[derive(Debug, Clone)]
pub struct SemilinearSolution {
    pub u: Field,
    pub w: Field,
    pub energy: f64,
    /// Largest nodal distance of `w` to `[g₋(u), g₊(u)]`.
    pub selection_violation: f64,
    pub sweeps: usize,
    /// Energy after each symmetric sweep, starting with the initial field.
    pub energy_history: Vec<f64>,
}

fn default_omega(grid: &Grid) -> f64 {
    let intervals = match grid.kind() {
        GridKind::Disc2D => (grid.n() - 1) as f64,
        // Neumann at the axis doubles the effective width
        GridKind::Radial => 2.0 * (grid.n() - 1) as f64,
    };
    2.0 / (1.0 + (std::f64::consts::PI / intervals).sin())
}

/// Solves with default options and residual tolerance `tol`.
pub fn solve_semilinear(grid: &Grid, graph: &MonotoneGraph, f: &Field, tol: f64) -> Result<SemilinearSolution> {
    solve_semilinear_with(grid, graph, f, &SemilinearOptions { tol, ..Default::default() })
}

pub fn solve_semilinear_with(
    grid: &Grid,
    graph: &MonotoneGraph,
    f: &Field,
    opts: &SemilinearOptions,
) -> Result<SemilinearSolution> {
    if f.key() != grid.key() {
        return Err(Error::GridMismatch);
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let f_max = grid.interior().iter().map(|&i| f.values()[i].abs()).fold(0.0, f64::max);
    let reach = 10.0 * (1.0 + f_max + graph.upper(0.0).abs());
    graph.check_monotone(-reach, reach)?;

    let stencil = grid.stencil();
    let interior = grid.interior();
    let fv: Vec<f64> = interior.iter().map(|&i| f.values()[i]).collect();
    let mut u: Vec<f64> = match &opts.initial {
        Some(init) => {
            init.same_grid(f)?;
            interior.iter().map(|&i| init.values()[i]).collect()
        }
        None => vec![0.0; interior.len()],
    };
    let omega = opts.omega.unwrap_or_else(|| default_omega(grid));
    let weights: Vec<f64> = interior.iter().map(|&i| grid.quad_weights()[i]).collect();

    let energy = |u: &[f64]| -> f64 {
        let mut e = 0.0;
        for r in 0..u.len() {
            let mut lap = stencil.diag[r] * u[r];
            for (c, a) in stencil.row(r) {
                lap += a * u[c];
            }
            e += weights[r] * (0.5 * u[r] * lap + graph.primitive(u[r]) - fv[r] * u[r]);
        }
        e
    };
    let violation = |u: &[f64]| -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..u.len() {
            let mut lap = stencil.diag[r] * u[r];
            for (c, a) in stencil.row(r) {
                lap += a * u[c];
            }
            worst = worst.max(graph.selection_distance(u[r], fv[r] - lap));
        }
        worst
    };

    let relax = |u: &mut [f64], r: usize| {
        let d = stencil.diag[r];
        let mut off = 0.0;
        for (c, a) in stencil.row(r) {
            off += a * u[c];
        }
        let exact = graph.resolvent(1.0 / d, (fv[r] - off) / d);
        let old = u[r];
        let mut next = exact;
        if omega != 1.0 {
            let over = old + omega * (exact - old);
            let nodal = |s: f64| 0.5 * d * s * s + (off - fv[r]) * s + graph.primitive(s);
            if nodal(over) <= nodal(old) {
                next = over;
            }
        }
        u[r] = next;
    };

    let d_max = stencil.diag.iter().cloned().fold(0.0, f64::max);
    let target = |u: &[f64]| {
        let u_max = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let floor = 64.0 * f64::EPSILON * (d_max * u_max + f_max);
        (opts.tol * f_max.max(1.0)).max(floor)
    };

    let mut history = vec![energy(&u)];
    let mut sweeps = 0;
    let mut viol = violation(&u);
    while viol > target(&u) {
        if sweeps == opts.max_sweeps {
            return Err(Error::NonConvergence { iterations: sweeps, residual: viol });
        }
        for r in 0..u.len() {
            relax(&mut u, r);
        }
        for r in (0..u.len()).rev() {
            relax(&mut u, r);
        }
        sweeps += 1;
        history.push(energy(&u));
        viol = violation(&u);
    }

    let mut u_field = Field::zeros(grid);
    for (&node, v) in interior.iter().zip(&u) {
        u_field.values_mut()[node] = *v;
    }
    let lap = neg_laplacian(grid, &u_field)?;
    let mut w = Field::zeros(grid);
    for &node in interior {
        w.values_mut()[node] = f.values()[node] - lap.values()[node];
    }
    Ok(SemilinearSolution {
        u: u_field,
        w,
        energy: *history.last().unwrap(),
        selection_violation: viol,
        sweeps,
        energy_history: history,
    })
}

/// `(∫|w₁ − w₂|, ∫|f₁ − f₂|)` over the interior nodes.
pub fn check_l1_contraction(
    grid: &Grid,
    graph: &MonotoneGraph,
    f1: &Field,
    f2: &Field,
    tol: f64,
) -> Result<(f64, f64)> {
    let s1 = solve_semilinear(grid, graph, f1, tol)?;
    let s2 = solve_semilinear(grid, graph, f2, tol)?;
    let dw = s1.w.zip_map(&s2.w, |a, b| (a - b).abs())?;
    let df = f1.zip_map(f2, |a, b| (a - b).abs())?;
    Ok((grid.integrate_interior(&dw)?, grid.integrate_interior(&df)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BvDiagnostic {
    pub tv_w: f64,
    pub tv_f: f64,
    /// `TV(w) / (TV(f) + ‖f‖₁ + |g₊(0)|)`.
    pub ratio: f64,
}

pub fn bv_diagnostic(
    grid: &Grid,
    graph: &MonotoneGraph,
    solution: &SemilinearSolution,
    f: &Field,
) -> Result<BvDiagnostic> {
    let f_int = f.clone().masked(grid);
    let tv_w = grid.total_variation(&solution.w)?;
    let tv_f = grid.total_variation(&f_int)?;
    let l1_f = grid.integrate_interior(&f_int.map(f64::abs))?;
    let scale = tv_f + l1_f + graph.upper(0.0).abs();
    let ratio = if scale > 0.0 { tv_w / scale } else { 0.0 };
    Ok(BvDiagnostic { tv_w, tv_f, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::solve_state;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_diff(a: &Field, b: &Field) -> f64 {
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn linear_graph_matches_linear_solver() {
        let g = Grid::build_radial(101).unwrap();
        let f = Field::constant(&g, 1.0);
        let sol = solve_semilinear(&g, &MonotoneGraph::Linear { slope: 1.0 }, &f, 1e-11).unwrap();
        let (u, _) = solve_state(&g, &Field::constant(&g, 1.0), &f, 1e-13).unwrap();
        assert!(max_diff(&sol.u, &u) < 1e-8, "{}", max_diff(&sol.u, &u));
    }

    #[test]
    fn zero_graph_gives_poisson_solution() {
        let g = Grid::build_radial(201).unwrap();
        let f = Field::constant(&g, 1.0);
        let sol = solve_semilinear(&g, &MonotoneGraph::zero(), &f, 1e-10).unwrap();
        assert!((sol.u.values()[0] - 0.25).abs() < 1e-4);
        assert!(g.total_variation(&sol.w).unwrap() < 1e-8);
    }

    #[test]
    fn inactive_step_is_transparent() {
        let g = Grid::build_radial(101).unwrap();
        let f = Field::constant(&g, 1.0);
        let plain = solve_semilinear(&g, &MonotoneGraph::zero(), &f, 1e-11).unwrap();
        let step = MonotoneGraph::Step { threshold: 0.5, low: 0.0, high: 1.0 };
        let sol = solve_semilinear(&g, &step, &f, 1e-11).unwrap();
        assert!(max_diff(&plain.u, &sol.u) < 1e-12);
    }

    #[test]
    fn selection_and_energy_descent_with_step_graph() {
        let g = Grid::build_disc(33).unwrap();
        let f = Field::from_fn(&g, |x, y| 4.0 + 3.0 * x - y);
        let step = MonotoneGraph::Step { threshold: 0.05, low: 0.0, high: 2.0 };
        let sol = solve_semilinear(&g, &step, &f, 1e-10).unwrap();
        assert!(sol.selection_violation <= 1e-8);
        assert!(sol.energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)));
        // the plateau u = threshold carries a genuinely set-valued selection
        let on_jump = g.interior().iter().filter(|&&i| (sol.u.values()[i] - 0.05).abs() < 1e-9).count();
        assert!(on_jump > 0);
    }

    #[test]
    fn different_initial_fields_agree() {
        let g = Grid::build_disc(25).unwrap();
        let f = Field::from_fn(&g, |x, y| 2.0 * (3.0 * x).sin() + y);
        let graph = MonotoneGraph::Step { threshold: 0.02, low: -0.5, high: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let init = Field::from_fn(&g, |_, _| rng.gen_range(-1.0..1.0)).masked(&g);
        let a = solve_semilinear(&g, &graph, &f, 1e-11).unwrap();
        let b = solve_semilinear_with(
            &g,
            &graph,
            &f,
            &SemilinearOptions { tol: 1e-11, initial: Some(init), ..Default::default() },
        )
        .unwrap();
        assert!(max_diff(&a.u, &b.u) < 1e-8);
    }

    #[test]
    fn l1_contraction_and_comparison() {
        let g = Grid::build_disc(21).unwrap();
        let graph = MonotoneGraph::Power { coeff: 1.0, exponent: 3.0 };
        let f1 = Field::from_fn(&g, |x, y| x - 2.0 * y);
        let (lhs, rhs) = check_l1_contraction(&g, &graph, &f1, &f1, 1e-10).unwrap();
        assert_eq!((lhs, rhs), (0.0, 0.0));

        let f2 = f1.map(|v| v + 0.7);
        let (lhs, rhs) = check_l1_contraction(&g, &graph, &f1, &f2, 1e-10).unwrap();
        assert!(lhs <= rhs + 1e-8);
        let s1 = solve_semilinear(&g, &graph, &f1, 1e-10).unwrap();
        let s2 = solve_semilinear(&g, &graph, &f2, 1e-10).unwrap();
        assert!(s1.u.values().iter().zip(s2.u.values()).all(|(a, b)| *a <= b + 1e-10));
    }

    #[test]
    fn decreasing_graph_is_rejected() {
        let g = Grid::build_radial(11).unwrap();
        let f = Field::constant(&g, 1.0);
        let bad = MonotoneGraph::custom(
            |s| if (0.2..0.4).contains(&s) { -s } else { s },
            |s| if (0.2..0.4).contains(&s) { -s } else { s },
            |s| 0.5 * s * s,
        );
        assert!(matches!(solve_semilinear(&g, &bad, &f, 1e-8), Err(Error::Monotonicity { .. })));
    }

    #[test]
    fn bv_diagnostic_of_zero_graph() {
        let g = Grid::build_disc(33).unwrap();
        let f = Field::from_fn(&g, |x, _| 1.0 + x);
        let graph = MonotoneGraph::zero();
        let sol = solve_semilinear(&g, &graph, &f, 1e-10).unwrap();
        let bv = bv_diagnostic(&g, &graph, &sol, &f).unwrap();
        assert!(bv.tv_w < 1e-7);
        assert!(bv.tv_f > 0.0);
    }

    #[test]
    fn linear_graph_selection_is_u() {
        let g = Grid::build_disc(33).unwrap();
        let f = Field::from_fn(&g, |x, y| 1.0 + x * y);
        let graph = MonotoneGraph::Linear { slope: 1.0 };
        let sol = solve_semilinear(&g, &graph, &f, 1e-11).unwrap();
        assert!(max_diff(&sol.w, &sol.u) < 1e-10);
        let bv = bv_diagnostic(&g, &graph, &sol, &f).unwrap();
        assert!((bv.tv_w - g.total_variation(&sol.u).unwrap()).abs() < 1e-8);
        assert!(bv.tv_w.is_finite());
    }

    /// `g * ρ_ε` with ρ uniform on `(−ε, 0)`: the step ramps linearly on
    /// `[θ − ε, θ]`.
    fn mollified_step(threshold: f64, low: f64, high: f64, eps: f64) -> MonotoneGraph {
        let g = move |s: f64| {
            if s <= threshold - eps {
                low
            } else if s >= threshold {
                high
            } else {
                low + (high - low) * (s - threshold + eps) / eps
            }
        };
        let prim = move |s: f64| {
            let big = |x: f64| {
                let ramp_start = threshold - eps;
                if x <= ramp_start {
                    low * x
                } else if x <= threshold {
                    let t = x - ramp_start;
                    low * x + (high - low) * t * t / (2.0 * eps)
                } else {
                    low * x + (high - low) * (eps / 2.0 + x - threshold)
                }
            };
            big(s) - big(0.0)
        };
        MonotoneGraph::custom(g, g, prim)
    }

    #[test]
    fn mollified_graphs_converge_to_step_solution() {
        let g = Grid::build_radial(81).unwrap();
        let f = Field::from_fn(&g, |r, _| 3.0 - r);
        let (th, lo, hi) = (0.1, 0.0, 1.5);
        let exact = solve_semilinear(&g, &MonotoneGraph::Step { threshold: th, low: lo, high: hi }, &f, 1e-11).unwrap();
        let errs: Vec<f64> = [1e-2, 1e-3]
            .iter()
            .map(|&eps| {
                let sol = solve_semilinear(&g, &mollified_step(th, lo, hi, eps), &f, 1e-11).unwrap();
                max_diff(&sol.u, &exact.u)
            })
            .collect();
        assert!(errs[1] < errs[0] && errs[1] < 2e-3, "{errs:?}");
    }
}
