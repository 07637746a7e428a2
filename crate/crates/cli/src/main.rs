use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use srd_cli::commands::{self, GridOrigin};
use srd_cli::format::curve_csv;
use srd_cli::problem::{DistortionSpec, ProblemFile};
use srd_cli::{load_problem, CliError, CliResult, GridSpec};

#[derive(Parser)]
#[command(name = "srd", version, about = "Rate-distortion bounds for distortion measures with one-step memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Memory span, feasible distortion range and convexity of a problem.
    Analyze {
        file: PathBuf,
        /// Print the problem with presets expanded instead of the analysis.
        #[arg(long)]
        dump_normalized: bool,
    },
    /// Bound curves as CSV plus a metadata document.
    Curves {
        file: PathBuf,
        /// Comma-separated bound ids: R_I1, R_I2, ENV_I1, ENV_I2, R_O1, R_O2, THM3, R1, R2.
        #[arg(long, default_value = "R1,R2")]
        bounds: String,
        /// Distortion grid as min:max:count.
        #[arg(long)]
        grid: Option<String>,
        /// Overrides solver.seed from the problem file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact operational distortion at a small blocklength.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        messages: usize,
        /// Overrides y0 from the problem file.
        #[arg(long)]
        y0: Option<usize>,
        /// Grid for the comparison curves, min:max:count.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Closed-form inner bound for the Gaussian source.
    Gaussian {
        #[arg(long)]
        sigma2: f64,
        #[arg(long)]
        gamma: f64,
        /// Distortion grid as min:max:count; defaults to [0, 1.25 (1 + gamma) sigma2] with 61 points.
        #[arg(long)]
        grid: Option<String>,
        /// Directory for CSV and metadata; the CSV goes to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("SRD_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Validation(format!("SRD_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Io(format!("cannot start thread pool: {e}")))
}

fn print_json<T: serde::Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("document serializes");
    writeln!(std::io::stdout(), "{text}")?;
    Ok(())
}

fn finish_curves(run: &commands::CurvesRun, out: &std::path::Path) -> CliResult<()> {
    for path in commands::write_curves(run, out)? {
        eprintln!("wrote {}", path.display());
    }
    if run.unconverged > 0 {
        return Err(CliError::NonConvergence(format!(
            "{} curve points did not converge; results were written but are not certified",
            run.unconverged
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Analyze { file, dump_normalized } => {
            let loaded = load_problem(&file)?;
            if dump_normalized {
                write!(std::io::stdout(), "{}", loaded.problem.to_toml()?)?;
                Ok(())
            } else {
                print_json(&commands::analyze(&loaded)?)
            }
        }
        Command::Curves {
            file,
            bounds,
            grid,
            seed,
            out,
        } => {
            let mut loaded = load_problem(&file)?;
            if let Some(s) = seed {
                loaded.problem.solver.seed = s;
            }
            let bounds = commands::parse_bounds(&bounds)?;
            let cli_grid = grid.as_deref().map(GridSpec::parse).transpose()?;
            let (grid, origin) = commands::resolve_grid(&loaded.problem, cli_grid);
            let run = commands::run_curves(&loaded, &bounds, grid, origin)?;
            finish_curves(&run, &out)
        }
        Command::Oracle {
            file,
            n,
            messages,
            y0,
            grid,
        } => {
            let loaded = load_problem(&file)?;
            let cli_grid = grid.as_deref().map(GridSpec::parse).transpose()?;
            let (grid, _) = commands::resolve_grid(&loaded.problem, cli_grid);
            print_json(&commands::oracle(&loaded, n, messages, y0, grid)?)
        }
        Command::Gaussian {
            sigma2,
            gamma,
            grid,
            out,
        } => {
            let file = ProblemFile {
                source: None,
                y0: None,
                distortion: DistortionSpec {
                    preset: Some("gaussian".into()),
                    sigma2: Some(sigma2),
                    gamma: Some(gamma),
                    ..DistortionSpec::default()
                },
                solver: Default::default(),
                grid: None,
            };
            let loaded = file.into_problem()?;
            let (grid, origin) = match grid.as_deref().map(GridSpec::parse).transpose()? {
                Some(g) => (g, GridOrigin::CommandLine),
                None => (
                    GridSpec {
                        min: 0.0,
                        max: 1.25 * (1.0 + gamma) * sigma2,
                        count: 61,
                    },
                    GridOrigin::Default,
                ),
            };
            let run = commands::run_curves(&loaded, &[srd_core::BoundId::RI2], grid, origin)?;
            match out {
                Some(dir) => finish_curves(&run, &dir),
                None => {
                    write!(std::io::stdout(), "{}", curve_csv(&run.curves[0]))?;
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
