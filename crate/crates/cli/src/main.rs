use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semilinear_cli::efficiency::write_table;
use semilinear_cli::{efficiency_sweep, execute, write_outputs, CliConfig, CliError, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "semilinear", version, about = "Adaptive Newton/FEM solver for -eps*Lap(u) = f(u)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Sweep epsilon for a config whose problem has an exact solution and
    /// print efficiency indices as CSV.
    Efficiency {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1e0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5])]
        epsilons: Vec<f64>,
        /// Write the table here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(config: PathBuf) -> Result<i32, CliError> {
    let config = CliConfig::load(&config)?;
    let report = execute(&config)?;
    write_outputs(&config, &report)?;
    let s = &report.summary;
    match &s.error {
        Some(e) => eprintln!("solver failure after {} records: {e}", s.records),
        None => eprintln!(
            "{}: {} records ({} newton, {} refine), final estimate {:.3e} at {} dofs",
            s.termination,
            s.records,
            s.newton_steps,
            s.refinements,
            s.final_estimate.unwrap_or(f64::NAN),
            s.final_dofs.unwrap_or(0),
        ),
    }
    Ok(report.exit_code)
}

fn efficiency(config: PathBuf, epsilons: Vec<f64>, output: Option<PathBuf>) -> Result<i32, CliError> {
    let config = CliConfig::load(&config)?;
    let rows = efficiency_sweep(&config, &epsilons)?;
    match output {
        Some(path) => {
            let file = std::fs::File::create(&path).map_err(|source| CliError::Io { path, source })?;
            write_table(BufWriter::new(file), &rows)?;
        }
        None => write_table(io::stdout().lock(), &rows)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => run(config),
        Command::Efficiency { config, epsilons, output } => efficiency(config, epsilons, output),
    };
    let code = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_CONFIG as u8))
}
