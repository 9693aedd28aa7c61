//! Reference solutions.
//!
//! For `j(x, s) = ½|s − s₀|²`, `f = 1` and the unpenalized law `ψ = 0` on
//! `[0, ∞)` the optimal potential on the unit disc is a measure: density
//! `1/s₀` on `{|x| < a}` plus a surface layer on `{|x| = a}`, and the optimal
//! state equals `s₀` inside the disc of radius `a`. The radius solves
//!
//! ```text
//! F(a) = log a ∫ₐ¹ r(4s₀ − 1 + r²) log r dr − (4s₀ − 1 + a²) ∫ₐ¹ r log²r dr = 0
//! ```
//!
//! subject to `4s₀ − 1 + a² < 2a² log a`. The measure is never discretized;
//! comparisons with the optimizer go through the state.
//!
//! [`brute_force_boxlaw`] enumerates every piecewise-level potential on tiny
//! radial grids as an independent check of the optimizer.

use crate::control::{reduced_cost, CostIntegrand};
use crate::convex::{LawKind, PotentialLaw};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, GridKind};

const SCAN_POINTS: usize = 200;
const RADIUS_TOL: f64 = 1e-10;

/// `∫ₐ¹ r log r dr`.
pub fn int_r_log(a: f64) -> f64 {
    let la = a.ln();
    -0.25 - (0.5 * a * a * la - 0.25 * a * a)
}

/// `∫ₐ¹ r³ log r dr`.
pub fn int_r3_log(a: f64) -> f64 {
    let a4 = a.powi(4);
    -1.0 / 16.0 - (0.25 * a4 * a.ln() - a4 / 16.0)
}

/// `∫ₐ¹ r log²r dr`.
pub fn int_r_log2(a: f64) -> f64 {
    let la = a.ln();
    let a2 = a * a;
    0.25 - (0.5 * a2 * la * la - 0.5 * a2 * la + 0.25 * a2)
}

/// `F(a)` with the integrals in closed form.
pub fn radius_residual(s0: f64, a: f64) -> f64 {
    let c = 4.0 * s0 - 1.0;
    a.ln() * (c * int_r_log(a) + int_r3_log(a)) - (c + a * a) * int_r_log2(a)
}

/// `4s₀ − 1 + a² < 2a² log a` with `0 < a < 1`.
pub fn is_admissible(s0: f64, a: f64) -> bool {
    a > 0.0 && a < 1.0 && 4.0 * s0 - 1.0 + a * a < 2.0 * a * a * a.ln()
}

fn check_s0(s0: f64) -> Result<()> {
    if s0 > 0.0 && s0 < 0.25 {
        Ok(())
    } else {
        Err(Error::domain(s0, "s0 must lie in (0, 1/4)"))
    }
}

/// The interface radius `a(s₀)`, by bisection on the first admissible sign
/// change of `F` along a log-spaced scan of `(1e−6, 1 − 1e−6)`.
pub fn example1_radius(s0: f64) -> Result<f64> {
    check_s0(s0)?;
    let (lo, hi) = (1e-6f64, 1.0 - 1e-6);
    let ratio = (hi / lo).ln() / (SCAN_POINTS - 1) as f64;
    let pts: Vec<f64> = (0..SCAN_POINTS).map(|i| (lo.ln() + ratio * i as f64).exp().min(hi)).collect();
    for w in pts.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (mut fa, fb) = (radius_residual(s0, a), radius_residual(s0, b));
        if fa == 0.0 && is_admissible(s0, a) {
            return Ok(a);
        }
        if fa * fb > 0.0 {
            continue;
        }
        while b - a > RADIUS_TOL {
            let mid = 0.5 * (a + b);
            let fm = radius_residual(s0, mid);
            if fm == 0.0 {
                (a, b) = (mid, mid);
            } else if (fm < 0.0) == (fa < 0.0) {
                (a, fa) = (mid, fm);
            } else {
                b = mid;
            }
        }
        let root = 0.5 * (a + b);
        if is_admissible(s0, root) {
            return Ok(root);
        }
    }
    Err(Error::NoBracket)
}

/// The optimal state at radius `r`.
pub fn example1_state(s0: f64, a: f64, r: f64) -> f64 {
    if r < a {
        s0
    } else {
        (1.0 - r * r) / 4.0 + (4.0 * s0 - 1.0 + a * a) * r.ln() / (4.0 * a.ln())
    }
}

/// Density of the surface layer on `{|x| = a}`.
pub fn example1_ring_weight(s0: f64, a: f64) -> f64 {
    (4.0 * s0 - 1.0 + a * a * (1.0 - 2.0 * a.ln())) / (4.0 * s0 * a.ln())
}

/// The optimal measure for one `s₀`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RadialOptimal {
    pub s0: f64,
    pub a: f64,
    pub ring_weight: f64,
    pub bulk_density: f64,
}

impl RadialOptimal {
    pub fn new(s0: f64) -> Result<Self> {
        let a = example1_radius(s0)?;
        Ok(RadialOptimal { s0, a, ring_weight: example1_ring_weight(s0, a), bulk_density: 1.0 / s0 })
    }

    pub fn state(&self, r: f64) -> f64 {
        example1_state(self.s0, self.a, r)
    }

    /// Bulk mass `πa²/s₀` plus ring mass `2πa · weight`.
    pub fn total_mass(&self) -> f64 {
        let pi = std::f64::consts::PI;
        self.bulk_density * pi * self.a * self.a + self.ring_weight * 2.0 * pi * self.a
    }
}

/// Exhaustive minimum of the reduced cost over potentials taking, at each
/// interior node, one of `{α, β}` (`levels = 2`) or `{α, (α+β)/2, β}`
/// (`levels = 3`). Returns the minimizer and its cost; ties keep the first
/// candidate in lexicographic order.
pub fn brute_force_boxlaw(
    grid: &Grid,
    law: &PotentialLaw,
    j: &CostIntegrand,
    f: &Field,
    levels: usize,
) -> Result<(Field, f64)> {
    if grid.kind() != GridKind::Radial || grid.interior().len() > 9 {
        return Err(Error::Size(format!(
            "exhaustive search needs a radial grid with at most 9 interior nodes, got {:?} with {}",
            grid.kind(),
            grid.interior().len()
        )));
    }
    if !(2..=3).contains(&levels) {
        return Err(Error::Size(format!("levels must be 2 or 3, got {levels}")));
    }
    if law.kind() != LawKind::Box {
        return Err(Error::Argument("exhaustive search is defined for the box law".into()));
    }
    let values: Vec<f64> = if levels == 2 {
        vec![law.alpha(), law.beta()]
    } else {
        vec![law.alpha(), 0.5 * (law.alpha() + law.beta()), law.beta()]
    };
    let interior = grid.interior();
    let count = levels.pow(interior.len() as u32);
    let mut best: Option<(Field, f64)> = None;
    for code in 0..count {
        let mut m = Field::constant(grid, law.alpha());
        let mut c = code;
        for &node in interior {
            m.values_mut()[node] = values[c % levels];
            c /= levels;
        }
        let cost = reduced_cost(grid, law, j, f, &m)?;
        if best.as_ref().map_or(true, |(_, b)| cost < *b) {
            best = Some((m, cost));
        }
    }
    Ok(best.expect("at least one candidate"))
}
