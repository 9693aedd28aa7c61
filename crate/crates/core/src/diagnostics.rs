//! Norms, truncations, bang-bang measurement and a seeded property suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::convex::{ExtReal, LawKind, MonotoneGraph, PotentialLaw};
use crate::elliptic::EllipticOperator;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::semilinear::solve_semilinear;

/// `T_k(s)`: `s` clamped to `[−k, k]`.
pub fn truncate(k: f64, s: f64) -> f64 {
    s.clamp(-k, k)
}

/// `S_k(s)`: 1 on `|s| ≤ k`, `2 − |s|/k` on `k < |s| < 2k`, 0 beyond.
pub fn cutoff(k: f64, s: f64) -> f64 {
    let a = s.abs();
    if a <= k {
        1.0
    } else if a < 2.0 * k {
        2.0 - a / k
    } else {
        0.0
    }
}

/// Fraction of interior nodes within `tol` of `α` or `β`.
pub fn bangbang_fraction(grid: &Grid, m: &Field, alpha: f64, beta: f64, tol: f64) -> f64 {
    let interior = grid.interior();
    if interior.is_empty() {
        return 0.0;
    }
    let hits = interior
        .iter()
        .filter(|&&i| {
            let v = m.values()[i];
            (v - alpha).abs().min((v - beta).abs()) <= tol
        })
        .count();
    hits as f64 / interior.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub tv: f64,
}

/// Norms over the interior and the discrete total variation.
pub fn field_norms(grid: &Grid, field: &Field) -> Result<FieldNorms> {
    let v = field.clone().masked(grid);
    Ok(FieldNorms {
        l1: grid.integrate_interior(&v.map(f64::abs))?,
        l2: grid.integrate_interior(&v.map(|x| x * x))?.sqrt(),
        linf: grid.interior().iter().map(|&i| v.values()[i].abs()).fold(0.0, f64::max),
        tv: grid.total_variation(&v)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    /// Norms of the last state computed by the suite.
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub tv: f64,
    /// Only meaningful for potentials; the suite leaves it empty.
    pub bangbang_fraction: Option<f64>,
    pub comparison_ok: bool,
    pub contraction_ok: bool,
    pub symmetry_ok: bool,
    pub fenchel_ok: bool,
    pub trials: usize,
    /// Description of the first failing check, if any.
    pub first_failure: Option<String>,
}

impl DiagnosticsReport {
    pub fn all_ok(&self) -> bool {
        self.comparison_ok && self.contraction_ok && self.symmetry_ok && self.fenchel_ok
    }
}

/// Smooth random field `Σ aₖ sin(bₖ x + cₖ y + φₖ)` with `Σ|aₖ| ≤ amplitude`.
pub fn random_smooth_field(grid: &Grid, rng: &mut impl Rng, amplitude: f64) -> Field {
    let modes: Vec<[f64; 4]> = (0..4)
        .map(|_| {
            [
                rng.gen_range(-1.0..1.0) * amplitude / 4.0,
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ]
        })
        .collect();
    Field::from_fn(grid, |x, y| modes.iter().map(|[a, b, c, p]| a * (b * x + c * y + p).sin()).sum())
}

/// The three graphs exercised by the suite: linear, cubic and a unit step.
pub fn suite_graphs() -> [MonotoneGraph; 3] {
    [
        MonotoneGraph::Linear { slope: 1.0 },
        MonotoneGraph::Power { coeff: 1.0, exponent: 3.0 },
        MonotoneGraph::Step { threshold: 0.0, low: -0.5, high: 0.5 },
    ]
}

/// One law of each kind.
pub fn suite_laws() -> [PotentialLaw; 4] {
    [
        PotentialLaw::power(1.5, 2.5).unwrap(),
        PotentialLaw::boxed(0.5, 2.0).unwrap(),
        PotentialLaw::box_plus_power(0.0, 3.0, 0.7, 1.5).unwrap(),
        PotentialLaw::box_minus_linear(1.0, 4.0, 0.3).unwrap(),
    ]
}

/// Draws `(s, τ)` with `s ∈ dom ψ` and `τ ∈ ∂ψ(s)`; every third sample sits
/// on a domain bound.
pub fn sample_subgradient_pair(law: &PotentialLaw, rng: &mut impl Rng) -> (f64, f64) {
    let (lo, hi) = if law.kind() == LawKind::Power { (0.0, 5.0) } else { (law.alpha(), law.beta()) };
    let s = match rng.gen_range(0..3) {
        0 if law.kind() == LawKind::Power => 0.0,
        0 => {
            if rng.gen_bool(0.5) {
                lo
            } else {
                hi
            }
        }
        _ => rng.gen_range(lo..hi),
    };
    let sub = law.subdiff(s).expect("sample lies in the domain");
    let tau = match (sub.lo, sub.hi) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => a + rng.gen_range(0.0..=1.0) * (b - a),
        (ExtReal::NegInf, ExtReal::Finite(b)) => b - rng.gen_range(0.0..3.0),
        (ExtReal::Finite(a), ExtReal::PosInf) => a + rng.gen_range(0.0..3.0),
        _ => rng.gen_range(-3.0..3.0),
    };
    (s, tau)
}

/// Seeded randomized checks of comparison, L¹ contraction, operator symmetry
/// and the Fenchel equality. Failures are reported, not raised.
pub fn run_property_suite(seed: u64, trials: usize) -> Result<DiagnosticsReport> {
    if trials == 0 {
        return Err(Error::Argument("trials must be at least 1".into()));
    }
    let grid = Grid::build_disc(17)?;
    let graphs = suite_graphs();
    let laws = suite_laws();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = DiagnosticsReport {
        l1: 0.0,
        l2: 0.0,
        linf: 0.0,
        tv: 0.0,
        bangbang_fraction: None,
        comparison_ok: true,
        contraction_ok: true,
        symmetry_ok: true,
        fenchel_ok: true,
        trials,
        first_failure: None,
    };
    let fail = |report: &mut DiagnosticsReport, msg: String| {
        if report.first_failure.is_none() {
            report.first_failure = Some(msg);
        }
    };

    for trial in 0..trials {
        let graph = &graphs[trial % graphs.len()];
        let f1 = random_smooth_field(&grid, &mut rng, 20.0);
        let f2 = random_smooth_field(&grid, &mut rng, 20.0);
        let bump = random_smooth_field(&grid, &mut rng, 5.0).map(f64::abs);
        let f3 = f1.zip_map(&bump, |a, b| a + b)?;

        let s1 = solve_semilinear(&grid, graph, &f1, 1e-11)?;
        let s2 = solve_semilinear(&grid, graph, &f2, 1e-11)?;
        let s3 = solve_semilinear(&grid, graph, &f3, 1e-11)?;

        let dw = grid.integrate_interior(&s1.w.zip_map(&s2.w, |a, b| (a - b).abs())?)?;
        let df = grid.integrate_interior(&f1.zip_map(&f2, |a, b| (a - b).abs())?)?;
        if dw > df + 1e-8 {
            report.contraction_ok = false;
            fail(&mut report, format!("contraction, trial {trial}: ∫|w₁−w₂| = {dw} > ∫|f₁−f₂| = {df}"));
        }
        if let Some(&i) = grid.interior().iter().find(|&&i| s1.u.values()[i] > s3.u.values()[i] + 1e-10) {
            report.comparison_ok = false;
            fail(
                &mut report,
                format!("comparison, trial {trial}: u₁ = {} > u₂ = {} at node {i}", s1.u.values()[i], s3.u.values()[i]),
            );
        }

        let m = random_smooth_field(&grid, &mut rng, 4.0).map(f64::abs);
        let op = EllipticOperator::new(&grid, &m)?;
        let n = op.dim();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (mut av, mut aw) = (vec![0.0; n], vec![0.0; n]);
        op.apply(&v, &mut av);
        op.apply(&w, &mut aw);
        let lhs: f64 = av.iter().zip(&w).map(|(a, b)| a * b).sum();
        let rhs: f64 = aw.iter().zip(&v).map(|(a, b)| a * b).sum();
        if (lhs - rhs).abs() > 1e-12 * lhs.abs().max(rhs.abs()).max(1.0) {
            report.symmetry_ok = false;
            fail(&mut report, format!("symmetry, trial {trial}: ⟨Av,w⟩ = {lhs}, ⟨v,Aw⟩ = {rhs}"));
        }

        let law = &laws[trial % laws.len()];
        for _ in 0..4 {
            let (s, tau) = sample_subgradient_pair(law, &mut rng);
            let gap = tau * s - law.eval_finite(s)? - law.conjugate(tau);
            if gap.abs() > 1e-10 * (1.0 + (tau * s).abs()) {
                report.fenchel_ok = false;
                fail(&mut report, format!("fenchel, trial {trial}: {law:?} s = {s}, τ = {tau}, gap {gap:e}"));
            }
        }

        if trial + 1 == trials {
            let norms = field_norms(&grid, &s3.u)?;
            report.l1 = norms.l1;
            report.l2 = norms.l2;
            report.linf = norms.linf;
            report.tv = norms.tv;
        }
    }
    Ok(report)
}
