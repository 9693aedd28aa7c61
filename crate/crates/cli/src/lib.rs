//! Config-driven runs of the optpot solvers.
//!
//! Each command reads a [`RunConfig`], writes field CSVs (and optionally PGM
//! heatmaps) plus a `report.json` into the output directory, and maps the
//! outcome to an exit code: 0 on success, 2 when a solver did not converge
//! (artifacts are still written when there is something to write), 1 for
//! configuration and I/O errors.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use optpot::diagnostics::field_norms;
use optpot::grid::{Field, Grid};
use optpot::io::{write_field_csv, write_field_pgm};
use optpot::oracle::RadialOptimal;
use optpot::semilinear::{bv_diagnostic, solve_semilinear_with, SemilinearOptions};
use optpot::{optimize, run_property_suite, solve_state};
use serde_json::{json, Value};

pub use config::{ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver error: {0}")]
    Solve(#[from] optpot::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solve(optpot::Error::NonConvergence { .. }) => EXIT_NONCONVERGENCE,
            _ => EXIT_CONFIG,
        }
    }
}

/// Outcome of a command: the JSON report and the exit code it maps to.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub exit_code: i32,
}

/// Where a run writes its files.
pub struct RunContext {
    pub out: PathBuf,
    pub emit_pgm: bool,
    /// Directory against which relative paths in the config resolve.
    pub base: PathBuf,
}

impl RunContext {
    /// `--out` wins over `output.dir`, which wins over `./out`.
    pub fn new(cfg: &RunConfig, config_path: &Path, out: Option<PathBuf>) -> Self {
        let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let out = out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
        RunContext { out, emit_pgm: cfg.output.emit_pgm, base }
    }

    fn prepare(&self) -> std::io::Result<()> {
        fs::create_dir_all(&self.out)
    }

    /// Writes `<name>.csv` and, if enabled, `<name>.pgm`; returns the PGM
    /// scale.
    fn emit(&self, grid: &Grid, name: &str, field: &Field) -> std::io::Result<Option<(f64, f64)>> {
        write_field_csv(&self.out.join(format!("{name}.csv")), grid, field)?;
        if self.emit_pgm {
            return Ok(Some(write_field_pgm(&self.out.join(format!("{name}.pgm")), grid, field)?));
        }
        Ok(None)
    }

    fn write_report(&self, report: &Value) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
        text.push('\n');
        fs::write(self.out.join("report.json"), text)
    }
}

fn scales(entries: Vec<(&str, Option<(f64, f64)>)>) -> Value {
    let map: serde_json::Map<String, Value> = entries
        .into_iter()
        .filter_map(|(name, s)| s.map(|(lo, hi)| (name.to_string(), json!({"min": lo, "max": hi}))))
        .collect();
    Value::Object(map)
}

/// Solves the state equation for the initial potential `opt.m0`.
pub fn cmd_state(cfg: &RunConfig, ctx: &RunContext) -> Result<Outcome, CliError> {
    let prep = cfg.validate(&ctx.base)?;
    ctx.prepare()?;
    let (u, solve) = solve_state(&prep.grid, &prep.m0, &prep.f, cfg.opt.solve_tol)?;
    let su = ctx.emit(&prep.grid, "u", &u)?;
    let sm = ctx.emit(&prep.grid, "m", &prep.m0)?;
    let report = json!({
        "command": "state",
        "config": cfg,
        "solve": solve,
        "u_center": u.values()[prep.grid.center()],
        "u_norms": field_norms(&prep.grid, &u)?,
        "pgm_scale": scales(vec![("u", su), ("m", sm)]),
    });
    ctx.write_report(&report)?;
    Ok(Outcome { report, exit_code: EXIT_OK })
}

/// Solves `−Δu + g(u) ∋ f` for the configured graph.
pub fn cmd_semilinear(cfg: &RunConfig, ctx: &RunContext) -> Result<Outcome, CliError> {
    let prep = cfg.validate(&ctx.base)?;
    let graph = prep.graph.ok_or_else(|| ConfigError::Invalid("semilinear needs a `graph` section".into()))?;
    ctx.prepare()?;
    let opts = SemilinearOptions { tol: cfg.semilinear.tol, max_sweeps: cfg.semilinear.max_sweeps, ..Default::default() };
    let sol = solve_semilinear_with(&prep.grid, &graph, &prep.f, &opts)?;
    let su = ctx.emit(&prep.grid, "u", &sol.u)?;
    let sw = ctx.emit(&prep.grid, "w", &sol.w)?;
    let report = json!({
        "command": "semilinear",
        "config": cfg,
        "sweeps": sol.sweeps,
        "energy": sol.energy,
        "selection_violation": sol.selection_violation,
        "bv": bv_diagnostic(&prep.grid, &graph, &sol, &prep.f)?,
        "u_norms": field_norms(&prep.grid, &sol.u)?,
        "pgm_scale": scales(vec![("u", su), ("w", sw)]),
    });
    ctx.write_report(&report)?;
    Ok(Outcome { report, exit_code: EXIT_OK })
}

/// Runs the projected gradient descent.
pub fn cmd_optimize(cfg: &RunConfig, ctx: &RunContext) -> Result<Outcome, CliError> {
    let prep = cfg.validate(&ctx.base)?;
    let law = prep.law.ok_or_else(|| ConfigError::Invalid("optimize needs a `law` section".into()))?;
    let cost = prep.cost.ok_or_else(|| ConfigError::Invalid("optimize needs a `cost` section".into()))?;
    ctx.prepare()?;
    let rep = optimize(&prep.grid, &law, &cost, &prep.f, &prep.m0, &cfg.opt.options())?;
    let sm = ctx.emit(&prep.grid, "m", &rep.m)?;
    let su = ctx.emit(&prep.grid, "u", &rep.u)?;
    let sz = ctx.emit(&prep.grid, "z", &rep.z)?;
    let report = json!({
        "command": "optimize",
        "config": cfg,
        "result": rep,
        "pgm_scale": scales(vec![("m", sm), ("u", su), ("z", sz)]),
    });
    ctx.write_report(&report)?;
    let exit_code = if rep.converged { EXIT_OK } else { EXIT_NONCONVERGENCE };
    Ok(Outcome { report, exit_code })
}

/// Interface radius, ring weight and total mass of the radial optimum.
pub fn cmd_oracle1(s0: f64) -> Result<Outcome, CliError> {
    let opt = RadialOptimal::new(s0)?;
    let report = json!({
        "command": "oracle1",
        "s0": opt.s0,
        "a": opt.a,
        "ring_weight": opt.ring_weight,
        "bulk_density": opt.bulk_density,
        "total_mass": opt.total_mass(),
    });
    Ok(Outcome { report, exit_code: EXIT_OK })
}

/// Seeded property checks; exit code 2 if any check fails.
pub fn cmd_suite(seed: u64, trials: usize) -> Result<Outcome, CliError> {
    let rep = run_property_suite(seed, trials).map_err(|e| match e {
        optpot::Error::Argument(msg) => CliError::Config(ConfigError::Invalid(msg)),
        other => CliError::Solve(other),
    })?;
    let exit_code = if rep.all_ok() { EXIT_OK } else { EXIT_NONCONVERGENCE };
    let mut report = serde_json::to_value(&rep).expect("reports serialize");
    report["command"] = json!("suite");
    report["seed"] = json!(seed);
    Ok(Outcome { report, exit_code })
}
