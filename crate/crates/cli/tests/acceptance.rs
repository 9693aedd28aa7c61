//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use optpot::control::{optimize, reduced_cost, solve_via_auxiliary, CostIntegrand, OptimizeOptions};
use optpot::convex::{LawKind, PotentialLaw};
use optpot::diagnostics::{random_smooth_field, sample_subgradient_pair, suite_graphs, suite_laws};
use optpot::elliptic::solve_state;
use optpot::grid::{Field, Grid};
use optpot::oracle::{brute_force_boxlaw, example1_radius, is_admissible};
use optpot::semilinear::{bv_diagnostic, solve_semilinear};
use optpot::MonotoneGraph;
use optpot_cli::{cmd_optimize, RunConfig, RunContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn timed(limit: Duration, run: impl FnOnce() -> Verdict) -> Verdict {
    let t = Instant::now();
    let v = run();
    let took = t.elapsed();
    let pass = v.pass && took <= limit;
    verdict(pass, format!("{}; {:.3} s (limit {:.1} s)", v.detail, took.as_secs_f64(), limit.as_secs_f64()))
}

fn run_optimize(config: &str, out: &Path) -> serde_json::Value {
    let cfg = RunConfig::from_json(config).expect("config parses");
    let ctx = RunContext::new(&cfg, Path::new("."), Some(out.to_owned()));
    cmd_optimize(&cfg, &ctx).expect("optimize runs").report
}

/// Gauss–Legendre on many panels; independent of the closed forms.
fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683, 0.538_469_310_105_683, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
        0.236_926_885_056_189,
    ];
    let panels = 4000;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let c = a + (p as f64 + 0.5) * h;
            X.iter().zip(W).map(|(x, w)| w * f(c + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

fn criterion_1() -> Verdict {
    timed(Duration::from_secs(1), || {
        let g = Grid::build_radial(1001).unwrap();
        let (u, _) = solve_state(&g, &Field::zeros(&g), &Field::constant(&g, 1.0), 1e-10).unwrap();
        let err = (u.values()[0] - 0.25).abs();
        verdict(err <= 1e-4, format!("u(0) = {:.8}, |u(0) − 0.25| = {err:.2e} ≤ 1e-4", u.values()[0]))
    })
}

fn criterion_2() -> Verdict {
    timed(Duration::from_millis(100), || {
        let s0 = 0.1;
        let a = example1_radius(s0).unwrap();
        let c = 4.0 * s0 - 1.0;
        let i1 = quad(|r| r * (c + r * r) * r.ln(), a, 1.0);
        let i2 = quad(|r| r * r.ln().powi(2), a, 1.0);
        let residual = a.ln() * i1 - (c + a * a) * i2;
        let ok = (a - 0.2825).abs() <= 5e-4 && residual.abs() <= 1e-8 && is_admissible(s0, a);
        verdict(ok, format!("a = {a:.10}, |a − 0.2825| = {:.2e}, |F(a)| = {:.2e}", (a - 0.2825).abs(), residual.abs()))
    })
}

fn criterion_3(tmp: &Path) -> Verdict {
    let cases = [(0.00175, 0.172766), (0.0014, 0.531971), (0.001, 0.874948)];
    let mut norms = Vec::new();
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, expected) in cases {
        let t = Instant::now();
        let config = format!(
            r#"{{"grid": {{"kind": "disc", "n": 129}},
                "law": {{"kind": "box_plus_linear", "alpha": 0, "beta": 1, "k": {k}, "p": 1}},
                "cost": {{"kind": "energy"}}, "rhs": {{"kind": "fourballs"}}}}"#
        );
        let report = run_optimize(&config, &tmp.join(format!("c3_{k}")));
        let l1 = report["result"]["l1_m"].as_f64().unwrap();
        let rel = (l1 - expected).abs() / expected;
        let took = t.elapsed();
        ok &= rel <= 0.10 && took <= Duration::from_secs(120);
        parts.push(format!("k={k}: ‖m‖₁ = {l1:.4} vs {expected} ({:.1}%, {:.1} s)", 100.0 * rel, took.as_secs_f64()));
        norms.push(l1);
    }
    let monotone = norms.windows(2).all(|w| w[1] > w[0]);
    verdict(ok && monotone, format!("{}; increasing as k decreases: {monotone}", parts.join("; ")))
}

fn criterion_4(tmp: &Path) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [1.0f64, 100.0] {
        let t = Instant::now();
        let config = format!(
            r#"{{"grid": {{"kind": "disc", "n": 129}},
                "law": {{"kind": "box", "alpha": 0, "beta": {beta}}},
                "cost": {{"kind": "linear", "gamma": {{"kind": "saddle"}}}},
                "rhs": {{"kind": "oscillatory"}}, "opt": {{"eps0": {beta}}}}}"#
        );
        let report = run_optimize(&config, &tmp.join(format!("c4_{beta}")));
        let frac = report["result"]["bangbang_fraction"].as_f64().unwrap();
        let residual = report["result"]["optimality_residual"].as_f64().unwrap();
        let bound = 1e-3 * beta * std::f64::consts::PI;
        let took = t.elapsed();
        ok &= frac >= 0.99 && residual <= bound && took <= Duration::from_secs(300);
        parts.push(format!(
            "β={beta}: bang-bang {frac:.4} ≥ 0.99, residual {residual:.2e} ≤ {bound:.2e} ({:.1} s)",
            took.as_secs_f64()
        ));
    }
    verdict(ok, parts.join("; "))
}

fn criterion_5a() -> Verdict {
    let g = Grid::build_disc(33).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let mut worst = f64::NEG_INFINITY;
    let mut trials = 0;
    for graph in suite_graphs() {
        for _ in 0..50 {
            let f1 = random_smooth_field(&g, &mut rng, 20.0);
            let f2 = random_smooth_field(&g, &mut rng, 20.0);
            let s1 = solve_semilinear(&g, &graph, &f1, 1e-11).unwrap();
            let s2 = solve_semilinear(&g, &graph, &f2, 1e-11).unwrap();
            let dw = g.integrate_interior(&s1.w.zip_map(&s2.w, |a, b| (a - b).abs()).unwrap()).unwrap();
            let df = g.integrate_interior(&f1.zip_map(&f2, |a, b| (a - b).abs()).unwrap()).unwrap();
            worst = worst.max(dw - df);
            trials += 1;
        }
    }
    verdict(worst <= 1e-8, format!("{trials} trials, max(∫|w₁−w₂| − ∫|f₁−f₂|) = {worst:.3e} ≤ 1e-8"))
}

fn criterion_5b() -> Verdict {
    let g = Grid::build_disc(33).unwrap();
    let graphs = suite_graphs();
    let mut rng = ChaCha8Rng::seed_from_u64(502);
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..50 {
        let graph = &graphs[trial % graphs.len()];
        let f1 = random_smooth_field(&g, &mut rng, 20.0);
        let bump = random_smooth_field(&g, &mut rng, 5.0).map(f64::abs);
        let f2 = f1.zip_map(&bump, |a, b| a + b).unwrap();
        let u1 = solve_semilinear(&g, graph, &f1, 1e-11).unwrap().u;
        let u2 = solve_semilinear(&g, graph, &f2, 1e-11).unwrap().u;
        for (a, b) in u1.values().iter().zip(u2.values()) {
            worst = worst.max(a - b);
        }
    }
    verdict(worst <= 0.0, format!("50 trials, max(u₁ − u₂) = {worst:.3e} ≤ 0"))
}

fn criterion_5c() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(503);
    let mut worst: f64 = 0.0;
    for law in suite_laws() {
        for _ in 0..200 {
            let (s, tau) = sample_subgradient_pair(&law, &mut rng);
            let gap = tau * s - law.eval_finite(s).unwrap() - law.conjugate(tau);
            worst = worst.max(gap.abs());
        }
    }
    verdict(worst <= 1e-10, format!("4 laws × 200 samples, max |τs − ψ(s) − ψ*(τ)| = {worst:.2e} ≤ 1e-10"))
}

fn criterion_5d() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for law in suite_laws() {
        let mut taus: Vec<f64> = (-5000..=5000).map(|i| i as f64 * 1e-3).collect();
        let kinks = [0.0, law.k(), -law.k(), law.k() * law.p() * law.alpha().powf(law.p() - 1.0)];
        for &c in &kinks {
            for j in 1..=12 {
                taus.push(c + 10f64.powi(-j));
                taus.push(c - 10f64.powi(-j));
            }
        }
        taus.sort_by(f64::total_cmp);
        let monotone = taus.windows(2).all(|w| law.h(w[0]) <= law.h(w[1]));
        let right_continuous = kinks.iter().all(|&c| {
            let limit = law.h(c + 1e-12);
            (limit - law.h(c)).abs() <= 1e-5 * (1.0 + law.h(c).abs())
        });
        let (g_ok, witness) = law.g_monotonicity();
        let expect_fail = law.kind() == LawKind::BoxMinusLinear;
        let witness_valid = match witness {
            Some((t1, t2)) => t1 < t2 && law.g(t1) > law.g(t2),
            None => true,
        };
        let g_correct = g_ok != expect_fail && witness.is_some() == expect_fail && witness_valid;
        ok &= monotone && right_continuous && g_correct;
        notes.push(format!("{:?}: monotone {monotone}, right-continuous {right_continuous}, g check {g_correct}", law.kind()));
    }
    verdict(ok, notes.join("; "))
}

fn criterion_5e() -> Verdict {
    let graph = MonotoneGraph::Step { threshold: 0.05, low: 0.0, high: 2.0 };
    let mut tvs = Vec::new();
    for n in [65, 129, 257] {
        let g = Grid::build_disc(n).unwrap();
        let f = Field::from_fn(&g, |x, y| 4.0 + 3.0 * (2.0 * x).sin() - 2.0 * y * y);
        let sol = solve_semilinear(&g, &graph, &f, 1e-10).unwrap();
        tvs.push(bv_diagnostic(&g, &graph, &sol, &f).unwrap().tv_w);
    }
    let ratios: Vec<f64> = tvs.windows(2).map(|w| w[1] / w[0]).collect();
    let ok = tvs.iter().all(|t| t.is_finite()) && ratios.iter().all(|&r| r <= 2.0);
    verdict(ok, format!("TV(w) at n=65,129,257: {tvs:.4?}; consecutive ratios {ratios:.3?} ≤ 2"))
}

fn criterion_6() -> Verdict {
    let g = Grid::build_radial(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(506);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10 {
        let alpha = rng.gen_range(0.0..1.0);
        let beta = alpha + rng.gen_range(0.5..4.0);
        let law = PotentialLaw::boxed(alpha, beta).unwrap();
        let f = random_smooth_field(&g, &mut rng, 4.0).map(|v| v + 1.0);
        let j = if rng.gen_bool(0.5) {
            CostIntegrand::energy(1.0, f.clone())
        } else {
            CostIntegrand::linear(random_smooth_field(&g, &mut rng, 2.0))
        };
        let (_, brute) = brute_force_boxlaw(&g, &law, &j, &f, 3).unwrap();
        let opts = OptimizeOptions { tol: 1e-12, eps0: beta - alpha, ..Default::default() };
        let rep = optimize(&g, &law, &j, &f, &Field::constant(&g, law.default_start()), &opts).unwrap();
        let cost = reduced_cost(&g, &law, &j, &f, &rep.m).unwrap();
        worst = worst.max(cost - brute);
    }
    verdict(worst <= 1e-8, format!("10 instances, max(optimize − brute force) = {worst:.3e} ≤ 1e-8"))
}

fn criterion_7() -> Verdict {
    let g = Grid::build_radial(201).unwrap();
    let law = PotentialLaw::power(0.05, 2.0).unwrap();
    let f = Field::constant(&g, 1.0);
    let (u_aux, _) = solve_via_auxiliary(&g, &law, &f).unwrap();
    let opts = OptimizeOptions { tol: 1e-12, max_iter: 3000, ..Default::default() };
    let rep = optimize(&g, &law, &CostIntegrand::energy(1.0, f.clone()), &f, &Field::zeros(&g), &opts).unwrap();
    let diff = u_aux.values().iter().zip(rep.u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    verdict(diff <= 1e-3, format!("‖u_aux − u_opt‖∞ = {diff:.2e} ≤ 1e-3 ({} iterations)", rep.iterations))
}

fn criterion_8(tmp: &Path) -> Verdict {
    let configs = [
        ("state", r#"{"grid": {"kind": "radial", "n": 201}, "rhs": {"kind": "constant", "value": 1},
                      "output": {"emit_pgm": true}}"#),
        ("semilinear", r#"{"grid": {"kind": "disc", "n": 33}, "rhs": {"kind": "oscillatory"},
                           "graph": {"kind": "step", "threshold": 0.05, "low": 0, "high": 2},
                           "output": {"emit_pgm": true}}"#),
        ("optimize", r#"{"grid": {"kind": "disc", "n": 65},
                         "law": {"kind": "box", "alpha": 0, "beta": 1},
                         "cost": {"kind": "linear", "gamma": {"kind": "saddle"}},
                         "rhs": {"kind": "oscillatory"}, "output": {"emit_pgm": true}}"#),
    ];
    let mut ok = true;
    let mut compared = 0;
    for (cmd, text) in configs {
        let cfg = tmp.join(format!("c8_{cmd}.json"));
        fs::write(&cfg, text).unwrap();
        let mut runs = Vec::new();
        for rep in 0..2 {
            let out = tmp.join(format!("c8_{cmd}_{rep}"));
            let status = Command::new(env!("CARGO_BIN_EXE_optpot"))
                .args([cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "1"])
                .output()
                .unwrap();
            ok &= status.status.success();
            let mut files: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
            files.sort();
            runs.push((status.stdout, files.iter().map(|p| (p.file_name().unwrap().to_owned(), fs::read(p).unwrap())).collect::<Vec<_>>()));
        }
        ok &= runs[0] == runs[1];
        compared += runs[0].1.len();
    }
    verdict(ok, format!("3 commands run twice, stdout and {compared} output files byte-identical: {ok}"))
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("1 radial Poisson", Box::new(criterion_1)),
        ("2 oracle radius", Box::new(criterion_2)),
        ("3 four-ball L1 norms", Box::new(|| criterion_3(tmp.path()))),
        ("4 bang-bang structure", Box::new(|| criterion_4(tmp.path()))),
        ("5a L1 contraction", Box::new(criterion_5a)),
        ("5b comparison", Box::new(criterion_5b)),
        ("5c Fenchel equality", Box::new(criterion_5c)),
        ("5d h monotone, g check", Box::new(criterion_5d)),
        ("5e BV diagnostic", Box::new(criterion_5e)),
        ("6 brute-force oracle", Box::new(criterion_6)),
        ("7 auxiliary route", Box::new(criterion_7)),
        ("8 determinism", Box::new(|| criterion_8(tmp.path()))),
    ];
    let mut failures = 0;
    for (name, run) in &criteria {
        let v = run();
        if !v.pass {
            failures += 1;
        }
        println!("[{}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
