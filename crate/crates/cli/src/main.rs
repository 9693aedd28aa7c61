use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optpot_cli::{
    cmd_optimize, cmd_oracle1, cmd_semilinear, cmd_state, cmd_suite, CliError, Outcome, RunConfig, RunContext,
};

#[derive(Parser)]
#[command(name = "optpot", version, about = "Optimal potentials for −Δu + m u = f on the unit disc")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for uniformity; these runs are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the state equation for the initial potential.
    State(RunArgs),
    /// Solve −Δu + g(u) ∋ f for the configured graph.
    Semilinear(RunArgs),
    /// Projected gradient descent on the reduced cost.
    Optimize(RunArgs),
    /// Closed-form radial optimum of the unpenalized tracking problem.
    Oracle1 {
        #[arg(long, default_value_t = 0.1)]
        s0: f64,
    },
    /// Seeded property checks.
    Suite {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
}

fn with_config(
    args: &RunArgs,
    run: fn(&RunConfig, &RunContext) -> Result<Outcome, CliError>,
) -> Result<Outcome, CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let ctx = RunContext::new(&cfg, &args.config, args.out.clone());
    run(&cfg, &ctx)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::State(a) => with_config(a, cmd_state),
        Command::Semilinear(a) => with_config(a, cmd_semilinear),
        Command::Optimize(a) => with_config(a, cmd_optimize),
        Command::Oracle1 { s0 } => cmd_oracle1(*s0),
        Command::Suite { seed, trials } => cmd_suite(*seed, *trials),
    };
    match result {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.report).expect("reports serialize"));
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("optpot: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
