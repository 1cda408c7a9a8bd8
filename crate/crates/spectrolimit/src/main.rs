use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spectrolimit::config::Config;
use spectrolimit::error::CliError;
use spectrolimit::figures::{emit_figure_pack, Figure};
use spectrolimit::mc::{telegraph_parallel, McRecord};
use spectrolimit::record::{write_csv, ComparisonRecord, PointRecord, RelativeDeviation};
use spectrolimit::sweep::{pool, run_sweep, Axis, RouteChoice, SweepSpec};
use spectrolimit_core::oracles::McConfig;
use spectrolimit_core::pipeline::{evaluate_with, Route};

#[derive(Parser)]
#[command(
    name = "spectrolimit",
    version,
    about = "Sensitivity limits of homodyne spectroscopy on reacting molecules"
)]
struct Cli {
    /// JSON configuration; built-in defaults when absent
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Dotted override, e.g. molecule.rate_a_mhz=1e-3 (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[arg(long, global = true, value_enum, default_value = "full")]
    route: RouteArg,

    /// Worker threads; defaults to available parallelism
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Seed for Monte Carlo checks
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Full,
    Adiabatic,
    Both,
}

impl From<RouteArg> for RouteChoice {
    fn from(r: RouteArg) -> Self {
        match r {
            RouteArg::Full => RouteChoice::Full,
            RouteArg::Adiabatic => RouteChoice::Adiabatic,
            RouteArg::Both => RouteChoice::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one parameter point and print a JSON record
    Point {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run the telegraph Monte Carlo with this many trajectories
        #[arg(long, default_value_t = 0)]
        mc_trajectories: usize,
    },
    /// Sweep one or two parameters and write CSV
    Sweep {
        /// param:scale:min:max:count with param in detuning, rate, rate_A,
        /// rate_B, density and scale in lin, log
        #[arg(long)]
        axis: String,
        #[arg(long)]
        axis2: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the CSVs and gnuplot scripts of a figure
    Figures {
        #[arg(value_enum)]
        figure: Figure,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    for o in &cli.overrides {
        config.apply_override(o)?;
    }
    Ok(config)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn companion(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    path.with_file_name(format!("{stem}.adiabatic.csv"))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let params = config.to_params();
    let thresholds = config.thresholds();
    let routes = RouteChoice::from(cli.route);
    let workers = pool(cli.workers)?;
    match &cli.command {
        Command::Point {
            out,
            mc_trajectories,
        } => {
            let mut records = Vec::new();
            for &route in routes.routes() {
                let result = evaluate_with(&params, route, &thresholds)?;
                records.push(PointRecord::new(&params, route, &result));
            }
            let mut value = if let [full, adiabatic] = &records[..] {
                serde_json::to_value(ComparisonRecord {
                    relative_deviation: RelativeDeviation::between(&full.row, &adiabatic.row),
                    full: full.clone(),
                    adiabatic: adiabatic.clone(),
                })
            } else {
                serde_json::to_value(&records[0])
            }
            .expect("records serialize");
            if *mc_trajectories > 0 {
                let mc =
                    McConfig::for_reaction_time(params.reaction_time(), *mc_trajectories, cli.seed);
                let result = telegraph_parallel(&workers, &params, &mc)?;
                value["telegraph_mc"] =
                    serde_json::to_value(McRecord::new(&result, cli.seed)).expect("serializes");
            }
            let mut w = sink(out)?;
            serde_json::to_writer_pretty(&mut w, &value).map_err(io::Error::from)?;
            writeln!(w)?;
            w.flush()?;
            Ok(())
        }
        Command::Sweep { axis, axis2, out } => {
            let spec = SweepSpec {
                axis1: axis.parse::<Axis>()?,
                axis2: axis2.as_deref().map(str::parse::<Axis>).transpose()?,
            };
            if routes == RouteChoice::Both && out.is_none() {
                return Err(CliError::Sweep("--route both needs --out".into()));
            }
            let mut failed = 0;
            let mut total = 0;
            for &route in routes.routes() {
                let rows = run_sweep(&workers, &params, &spec, route, &thresholds);
                failed += rows.iter().filter(|r| !r.is_ok()).count();
                total += rows.len();
                let target = match (route, out) {
                    (Route::Adiabatic, Some(path)) if routes == RouteChoice::Both => {
                        Some(companion(path))
                    }
                    _ => out.clone(),
                };
                let mut w = sink(&target)?;
                write_csv(&mut w, &rows)?;
                w.flush()?;
            }
            if failed > 0 {
                return Err(CliError::PartialFailure { failed, total });
            }
            Ok(())
        }
        Command::Figures { figure, out } => {
            for path in emit_figure_pack(*figure, out, &workers, &params, &thresholds)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
