use std::path::PathBuf;
use std::process::ExitCode;

use afge_cli::{load_config, run, CliError, Invocation, Subcommand, DEFAULT_SEED};
use clap::{Args, Parser};

/// Adaptive RK4 integration, sensitivity gradient checks, order sweeps and
/// toy Neural-ODE training. Settings go after the flags as KEY=VALUE pairs.
#[derive(Parser)]
#[command(name = "afge", version)]
enum Cli {
    /// Integrate a registered problem and write its step trace and dense output.
    Integrate(Common),
    /// Compare sensitivity gradients against central differences.
    Gradcheck(Common),
    /// Train an MLP vector field on a toy classification task.
    Train(Common),
    /// Fixed-step convergence sweep against a closed-form solution.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Problem name (`mlp` for gradcheck; `circles` or `spirals` for train).
    #[arg(long, visible_alias = "task")]
    problem: Option<String>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed (default: $AFGE_SEED, else 7).
    #[arg(long)]
    seed: Option<u64>,
    /// KEY=VALUE overrides.
    overrides: Vec<String>,
}

fn invocation(cli: Cli) -> Result<Invocation, CliError> {
    let (subcommand, common) = match cli {
        Cli::Integrate(c) => (Subcommand::Integrate, c),
        Cli::Gradcheck(c) => (Subcommand::Gradcheck, c),
        Cli::Train(c) => (Subcommand::Train, c),
        Cli::Sweep(c) => (Subcommand::Sweep, c),
    };
    let problem = match (common.problem, subcommand) {
        (Some(p), _) => p,
        (None, Subcommand::Train) => "circles".to_string(),
        (None, _) => {
            return Err(CliError::Usage(format!(
                "`{}` needs --problem",
                subcommand.name()
            )))
        }
    };
    let seed = match common.seed {
        Some(s) => s,
        None => match std::env::var("AFGE_SEED") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("AFGE_SEED is not an integer: `{v}`")))?,
            Err(_) => DEFAULT_SEED,
        },
    };
    let settings = load_config(common.config.as_deref(), &common.overrides)?;
    Ok(Invocation {
        subcommand,
        problem,
        settings,
        out: common.out,
        seed,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match invocation(cli).and_then(|inv| run(&inv)) {
        Ok(summary) => {
            eprintln!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
