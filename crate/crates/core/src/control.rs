//! Reduced cost, adjoint-based descent and the projected gradient loop.
//!
//! For a potential `m` the state `u(m)` solves `−Δu + m u = f`, and the
//! reduced cost is `I(m) = ∫ j(x, u(m)) + ψ(m)`. With the adjoint
//! `−Δz + m z = ∂ₛj(x, u)` the derivative of `m ↦ ∫ j(x, u(m))` is `−u z`, so
//! `u z − ψ′(m)` is a descent direction wherever ψ is smooth. Laws with an
//! affine piece use the sign of that quantity instead.

use serde::Serialize;

use crate::convex::{LawKind, PotentialLaw};
use crate::diagnostics::bangbang_fraction;
use crate::elliptic::{solve_adjoint, EllipticOperator, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::semilinear::solve_semilinear;

/// Nodes closer than this fraction of `β − α` to a bound count as bang-bang.
pub const BANGBANG_TOL: f64 = 1e-6;

/// The integrand `j(x, s)` of the cost.
#[derive(Debug, Clone, PartialEq)]
pub enum CostIntegrand {
    /// `γ(x) s`.
    Linear { gamma: Field },
    /// `½ |s − target(x)|²`.
    Tracking { target: Field },
    /// `sign · f(x) s`, with `f` the state right-hand side.
    Energy { sign: f64, f: Field },
}

impl CostIntegrand {
    pub fn linear(gamma: Field) -> Self {
        CostIntegrand::Linear { gamma }
    }

    pub fn tracking(target: Field) -> Self {
        CostIntegrand::Tracking { target }
    }

    /// `sign` is reduced to ±1.
    pub fn energy(sign: f64, f: Field) -> Self {
        CostIntegrand::Energy { sign: if sign < 0.0 { -1.0 } else { 1.0 }, f }
    }

    fn data(&self) -> &Field {
        match self {
            CostIntegrand::Linear { gamma } => gamma,
            CostIntegrand::Tracking { target } => target,
            CostIntegrand::Energy { f, .. } => f,
        }
    }

    pub fn eval(&self, node: usize, s: f64) -> f64 {
        match self {
            CostIntegrand::Linear { gamma } => gamma.values()[node] * s,
            CostIntegrand::Tracking { target } => 0.5 * (s - target.values()[node]).powi(2),
            CostIntegrand::Energy { sign, f } => sign * f.values()[node] * s,
        }
    }

    /// `∂ₛj(x, s)`.
    pub fn deriv(&self, node: usize, s: f64) -> f64 {
        match self {
            CostIntegrand::Linear { gamma } => gamma.values()[node],
            CostIntegrand::Tracking { target } => s - target.values()[node],
            CostIntegrand::Energy { sign, f } => sign * f.values()[node],
        }
    }

    pub fn deriv_field(&self, grid: &Grid, u: &Field) -> Result<Field> {
        self.check_grid(grid, u)?;
        let values = u.values().iter().enumerate().map(|(i, &s)| self.deriv(i, s)).collect();
        Field::from_values(grid, values)
    }

    /// `∫ j(x, u)` over every node carrying quadrature weight.
    pub fn integrate(&self, grid: &Grid, u: &Field) -> Result<f64> {
        self.check_grid(grid, u)?;
        Ok(u.values()
            .iter()
            .zip(grid.quad_weights())
            .enumerate()
            .map(|(i, (&s, &w))| w * self.eval(i, s))
            .sum())
    }

    fn check_grid(&self, grid: &Grid, u: &Field) -> Result<()> {
        if u.key() != grid.key() || self.data().key() != grid.key() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOptions {
    /// Relative cost change `|I(mⱼ) − I(mⱼ₋₁)| / |I(m₀)|` that stops the loop.
    pub tol: f64,
    pub max_iter: usize,
    /// First trial step of every iteration.
    pub eps0: f64,
    /// Step reduction factor of the backtracking.
    pub backtrack: f64,
    pub max_halvings: usize,
    /// Relative tolerance of the state and adjoint solves.
    pub solve_tol: f64,
    /// Use `sgn(k − u z)` for the `BoxPlusLinear` law with `p = 1`.
    pub reversed_box_plus_linear_sign: bool,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            tol: 1e-6,
            max_iter: 2000,
            eps0: 1.0,
            backtrack: 0.5,
            max_halvings: 40,
            solve_tol: DEFAULT_TOL,
            reversed_box_plus_linear_sign: false,
        }
    }
}

impl OptimizeOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = self.tol > 0.0 && self.eps0 > 0.0 && self.solve_tol > 0.0;
        if !positive || self.max_iter == 0 || !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Argument(format!("invalid optimizer options {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The relative cost change fell below `tol`.
    RelativeChange,
    /// No trial step decreased the cost.
    NoDescent,
    /// The descent direction vanished.
    ZeroDirection,
    MaxIter,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeReport {
    #[serde(skip)]
    pub m: Field,
    #[serde(skip)]
    pub u: Field,
    #[serde(skip)]
    pub z: Field,
    pub cost_history: Vec<f64>,
    /// Accepted step of each iteration.
    pub step_history: Vec<f64>,
    pub iterations: usize,
    pub optimality_residual: f64,
    pub l1_m: f64,
    pub tv_m: f64,
    /// Absent for laws with an unbounded domain.
    pub bangbang_fraction: Option<f64>,
    pub converged: bool,
    pub stop_reason: StopReason,
}

/// `∫ j(x, u(m)) + ∫ ψ(m)`, the penalty taken over interior nodes.
pub fn reduced_cost(grid: &Grid, law: &PotentialLaw, j: &CostIntegrand, f: &Field, m: &Field) -> Result<f64> {
    let penalty = penalty_integral(grid, law, m)?;
    let (u, _) = crate::elliptic::solve_state(grid, m, f, DEFAULT_TOL)?;
    Ok(j.integrate(grid, &u)? + penalty)
}

fn penalty_integral(grid: &Grid, law: &PotentialLaw, m: &Field) -> Result<f64> {
    if m.key() != grid.key() {
        return Err(Error::GridMismatch);
    }
    let w = grid.quad_weights();
    let mut total = 0.0;
    for &i in grid.interior() {
        total += w[i] * law.eval_finite(m.values()[i])?;
    }
    Ok(total)
}

/// Smooth part of `ψ′`, for the laws that have one.
fn smooth_slope(law: &PotentialLaw, s: f64) -> f64 {
    law.k() * law.p() * s.max(0.0).powf(law.p() - 1.0)
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Descent direction at the interior nodes, zero elsewhere.
///
/// Strictly convex laws give `(u z − ψ′(m)) / ‖u z − ψ′(m)‖_{L²}`. The laws
/// with an affine piece give `sgn(u z − c)` with `c` the constant slope.
pub fn descent_direction(
    grid: &Grid,
    law: &PotentialLaw,
    m: &Field,
    u: &Field,
    z: &Field,
    reversed_box_plus_linear_sign: bool,
) -> Result<Field> {
    m.same_grid(u)?;
    u.same_grid(z)?;
    if m.key() != grid.key() {
        return Err(Error::GridMismatch);
    }
    let smooth = matches!(law.kind(), LawKind::Power) || (law.kind() == LawKind::BoxPlusLinear && law.p() > 1.0);
    let mut d = Field::zeros(grid);
    for &i in grid.interior() {
        let uz = u.values()[i] * z.values()[i];
        let mi = m.values()[i];
        d.values_mut()[i] = match law.kind() {
            _ if smooth => uz - smooth_slope(law, mi),
            LawKind::Box => sgn(uz),
            LawKind::BoxPlusLinear if reversed_box_plus_linear_sign => sgn(law.k() - uz),
            LawKind::BoxPlusLinear => sgn(uz - law.k()),
            LawKind::BoxMinusLinear => sgn(uz + law.k()),
            LawKind::Power => unreachable!(),
        };
    }
    let norm = grid.integrate_interior(&d.map(|v| v * v))?.sqrt();
    if !(norm >= 1e-14) {
        return Err(Error::ZeroDirection { norm });
    }
    if smooth {
        d = d.map(|v| v / norm);
    }
    Ok(d)
}

/// `∫ dist(m, [h₋(u z), h(u z)])` over the interior.
pub fn optimality_residual(grid: &Grid, law: &PotentialLaw, m: &Field, u: &Field, z: &Field) -> Result<f64> {
    m.same_grid(u)?;
    u.same_grid(z)?;
    grid.integrate_interior_with(m, |i, mi| {
        let uz = u.values()[i] * z.values()[i];
        let (lo, hi) = (law.h_minus(uz), law.h(uz));
        (lo - mi).max(mi - hi).max(0.0)
    })
}

struct Evaluated {
    m: Field,
    u: Field,
    cost: f64,
}

fn evaluate(
    grid: &Grid,
    law: &PotentialLaw,
    j: &CostIntegrand,
    f: &Field,
    m: Field,
    guess: Option<&Field>,
    tol: f64,
) -> Result<Evaluated> {
    let penalty = penalty_integral(grid, law, &m)?;
    let (u, rep) = EllipticOperator::new(grid, &m)?.solve(f, tol, guess)?;
    if !rep.converged {
        return Err(Error::NonConvergence { iterations: rep.iterations, residual: rep.residual_norm });
    }
    let cost = j.integrate(grid, &u)? + penalty;
    Ok(Evaluated { m, u, cost })
}

/// Projected gradient descent `mⱼ₊₁ = P_ψ(mⱼ + εⱼ m̃ⱼ)`.
///
/// Each iteration starts from `ε = eps0` and multiplies it by `backtrack`
/// until the cost strictly decreases. Running out of iterations is not an
/// error: the report comes back with `converged = false`.
pub fn optimize(
    grid: &Grid,
    law: &PotentialLaw,
    j: &CostIntegrand,
    f: &Field,
    m0: &Field,
    opts: &OptimizeOptions,
) -> Result<OptimizeReport> {
    opts.validate()?;
    if f.key() != grid.key() {
        return Err(Error::GridMismatch);
    }
    let start = m0.map(|s| law.project(s));
    if start.values().iter().zip(m0.values()).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs())) {
        let node = start.values().iter().zip(m0.values()).position(|(a, b)| a != b).unwrap();
        return Err(Error::domain(m0.values()[node], "initial potential outside dom ψ"));
    }
    let mut cur = evaluate(grid, law, j, f, start, None, opts.solve_tol)?;
    let scale = cur.cost.abs().max(f64::MIN_POSITIVE);
    let mut costs = vec![cur.cost];
    let mut steps = Vec::new();
    let mut z = Field::zeros(grid);
    let mut stop = StopReason::MaxIter;

    for _ in 0..opts.max_iter {
        z = solve_adjoint(grid, &cur.m, j, &cur.u, opts.solve_tol)?.0;
        let d = match descent_direction(grid, law, &cur.m, &cur.u, &z, opts.reversed_box_plus_linear_sign) {
            Ok(d) => d,
            Err(Error::ZeroDirection { .. }) => {
                stop = StopReason::ZeroDirection;
                break;
            }
            Err(e) => return Err(e),
        };
        let mut eps = opts.eps0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = cur.m.zip_map(&d, |mi, di| law.project(mi + eps * di))?;
            if trial.values() != cur.m.values() {
                let cand = evaluate(grid, law, j, f, trial, Some(&cur.u), opts.solve_tol)?;
                if cand.cost < cur.cost {
                    accepted = Some(cand);
                    break;
                }
            }
            eps *= opts.backtrack;
        }
        let Some(next) = accepted else {
            stop = StopReason::NoDescent;
            break;
        };
        let change = (next.cost - cur.cost).abs() / scale;
        cur = next;
        costs.push(cur.cost);
        steps.push(eps);
        if change < opts.tol {
            stop = StopReason::RelativeChange;
            z = solve_adjoint(grid, &cur.m, j, &cur.u, opts.solve_tol)?.0;
            break;
        }
    }
    if stop == StopReason::MaxIter {
        z = solve_adjoint(grid, &cur.m, j, &cur.u, opts.solve_tol)?.0;
    }

    let m_int = cur.m.clone().masked(grid);
    let bangbang = law
        .is_bounded()
        .then(|| bangbang_fraction(grid, &cur.m, law.alpha(), law.beta(), BANGBANG_TOL * (law.beta() - law.alpha())));
    Ok(OptimizeReport {
        optimality_residual: optimality_residual(grid, law, &cur.m, &cur.u, &z)?,
        l1_m: grid.integrate_interior(&m_int.map(f64::abs))?,
        tv_m: grid.total_variation(&m_int)?,
        bangbang_fraction: bangbang,
        iterations: steps.len(),
        cost_history: costs,
        step_history: steps,
        converged: stop != StopReason::MaxIter,
        stop_reason: stop,
        m: cur.m,
        u: cur.u,
        z,
    })
}

/// Energy case `j(x, s) = f(x) s`: solves `−Δu + u h(u²) ∋ f` and recovers
/// `m = h(u²)`.
pub fn solve_via_auxiliary(grid: &Grid, law: &PotentialLaw, f: &Field) -> Result<(Field, Field)> {
    let graph = law.auxiliary_graph()?;
    let sol = solve_semilinear(grid, &graph, f, 1e-11)?;
    let m = sol.u.map(|s| law.h(s * s));
    Ok((sol.u, m))
}
