use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lod_core::OperatorKind;
use lod_harness::{commands, ExperimentConfig, HarnessError, Result};

#[derive(Parser)]
#[command(name = "lod", version, about = "Localized orthogonal decomposition experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured coefficient and save it as a PGM image.
    Coef {
        config: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Print the per-node integration domain table of an operator.
    Kappa {
        config: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "IH", value_parser = parse_operator)]
        operator: OperatorKind,
        /// Write the table here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run the sweep described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        output_csv: Option<PathBuf>,
        #[arg(long)]
        plot_dir: Option<PathBuf>,
    },
    /// Render SVG panels from a result CSV.
    Plot {
        csv: PathBuf,
        #[arg(long, short)]
        out_dir: PathBuf,
    },
    /// Energy decay of an unlocalized element corrector.
    Decay {
        config: PathBuf,
        #[arg(long)]
        element: usize,
        #[arg(long)]
        node: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "IH", value_parser = parse_operator)]
        operator: OperatorKind,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn parse_operator(s: &str) -> std::result::Result<OperatorKind, String> {
    OperatorKind::parse(s).ok_or_else(|| format!("unknown operator '{s}' (SZ, nodal, IH, IH1, Aproj, AprojQM)"))
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn io::Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("LOD_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("LOD_THREADS must be an integer, got '{value}'")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Coef { config, alpha, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let fraction = commands::coef(&cfg, alpha, &out)?;
            eprintln!("wrote {} (unit fraction {fraction:.4})", out.display());
        }
        Command::Kappa { config, alpha, operator, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::kappa(&cfg, alpha, operator, output(out.as_ref())?, io::stderr())?;
        }
        Command::Run { config, output_csv, plot_dir } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if output_csv.is_some() {
                cfg.output_csv = output_csv;
            }
            if plot_dir.is_some() {
                cfg.plot_dir = plot_dir;
            }
            let result = commands::run(&cfg)?;
            let failed = result.rows.iter().filter(|r| !r.is_ok()).count();
            eprintln!("{} rows, {failed} failed", result.rows.len());
            if let Some(p) = result.csv {
                eprintln!("wrote {}", p.display());
            }
            for p in result.svgs {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Plot { csv, out_dir } => {
            for p in commands::plot(&csv, &out_dir)? {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Decay { config, element, node, alpha, operator, k_max, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let slope = commands::decay(&cfg, alpha, operator, element, node, k_max, output(out.as_ref())?)?;
            match slope {
                Some(s) => eprintln!("fitted slope: {s:.4} (log10 per layer)"),
                None => eprintln!("not enough points above the noise floor to fit a slope"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
