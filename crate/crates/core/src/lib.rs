//! Optimal potentials for Schrödinger-type elliptic state equations.
//!
//! The crate solves control problems of the form
//!
//! ```text
//! minimize   ∫_Ω j(x, u) + ψ(m) dx
//! subject to −Δu + m u = f  in Ω,   u = 0 on ∂Ω,
//! ```
//!
//! on the unit disc, where the potential `m ≥ 0` is the control and `ψ` is a
//! convex penalty whose domain encodes hard bounds on `m`.
//!
//! The building blocks are:
//!
//! * [`convex`]: the penalty laws ψ with exact subdifferentials, Fenchel
//!   conjugates, the selection map `h = d₊ψ*` and the induced monotone graphs.
//! * [`grid`]: a second-order radial grid and a masked Cartesian disc grid,
//!   with quadrature and discrete total variation.
//! * [`elliptic`]: conjugate-gradient solves of `(−Δ_h + m) u = f`.
//! * [`semilinear`]: `−Δu + g(u) ∋ f` for discontinuous non-decreasing `g`,
//!   via nonlinear Gauss–Seidel on the convex energy.
//! * [`control`]: reduced cost, adjoint-based descent directions, the
//!   projected gradient loop and optimality residuals.
//! * [`oracle`]: closed-form reference solutions and exhaustive search.
//! * [`diagnostics`]: norms, truncations, bang-bang fraction and a seeded
//!   property suite.
//! * [`io`]: field CSV and PGM export.

pub mod control;
pub mod convex;
pub mod diagnostics;
pub mod elliptic;
mod error;
pub mod grid;
pub mod io;
pub mod oracle;
pub mod semilinear;

pub use control::{
    descent_direction, optimality_residual, optimize, reduced_cost, solve_via_auxiliary,
    CostIntegrand, OptimizeOptions, OptimizeReport, StopReason,
};
pub use convex::{
    ExtReal, HRegularity, LawKind, MonotoneGraph, PotentialLaw, SubdiffInterval,
};
pub use diagnostics::{bangbang_fraction, cutoff, run_property_suite, truncate, DiagnosticsReport};
pub use elliptic::{solve_adjoint, solve_state, SolveReport};
pub use error::{Error, Result};
pub use grid::{Field, Grid, GridKind};
pub use semilinear::{solve_semilinear, SemilinearOptions, SemilinearSolution};
