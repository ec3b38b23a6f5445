use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use conformal_ab::cli::{run_path, Overrides, EXIT_CONFIG, EXIT_FAIL};
use conformal_ab::diffgeo::Scheme;
use conformal_ab::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Central2,
    Central4,
    Analytic,
}

/// Numerical verification of conformal fields on (α, β)-metric spaces.
#[derive(Debug, Parser)]
#[command(name = "verify", version)]
struct Args {
    /// JSON run configuration.
    config: PathBuf,
    /// Number of base points.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces every tolerance in the config.
    #[arg(long)]
    tol: Option<f64>,
    /// Where to write the JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        samples: args.samples,
        seed: args.seed,
        tol: args.tol,
        report: args.report,
        scheme: args.scheme.map(|s| match s {
            SchemeArg::Central2 => Scheme::Central2,
            SchemeArg::Central4 => Scheme::Central4,
            SchemeArg::Analytic => Scheme::AnalyticWhenAvailable,
        }),
    };
    match run_path(&args.config, &overrides) {
        Ok(report) => {
            print!("{}", report.summary());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAIL as u8)
        }
    }
}
