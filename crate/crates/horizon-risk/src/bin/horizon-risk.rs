//! Command-line front end over the library. Exit codes: 0 on success, 1 on
//! configuration errors, 2 on computation errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use horizon_risk::cli::{self, Command, RunConfig};
use horizon_risk::error::Error;

#[derive(Parser, Debug)]
#[command(
    name = "horizon-risk",
    version,
    about = "Edge-image denoisers and their Monte Carlo risk decay rates"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Master seed for all noise substreams.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file (CSV); a JSON metadata sidecar is written next to it.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Also emit a gnuplot script for log-log risk curves.
    #[arg(long, global = true)]
    emit_plot: bool,
}

#[derive(Args, Debug, Clone)]
struct ContourArgs {
    /// Edge contour: const:L, poly:C0,C1,..., or sin:AMP,FREQ,OFFSET.
    #[arg(long, default_value = "const:0.5")]
    contour: String,
    /// Declared smoothness order of the contour.
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// Declared seminorm bound of the contour.
    #[arg(long, default_value_t = 4.0)]
    holder_c: f64,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Render the noise-free image as a CSV matrix.
    Render {
        #[command(flatten)]
        contour: ContourArgs,
        #[arg(long)]
        n: usize,
    },
    /// Add one noise field and denoise it once.
    Denoise {
        #[command(flatten)]
        contour: ContourArgs,
        /// Denoiser: identity, global-mean, box:H, yf[:D,T], syf[:D,T],
        /// nlm, snlm, fnlm, nlm-tapered, wavelet.
        #[arg(long)]
        denoiser: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        sigma: f64,
        /// Rate parameter for the nonlocal-means rule.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Monte Carlo risk sweep over grid sizes.
    Sweep {
        #[command(flatten)]
        contour: ContourArgs,
        /// Comma-separated list of denoiser families.
        #[arg(long)]
        denoiser: String,
        /// Comma-separated strictly increasing grid sizes, e.g. 32,64,128.
        #[arg(long)]
        n: String,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Accept nonlocal-means sweeps beyond n = 256.
        #[arg(long)]
        allow_large_nlm: bool,
    },
    /// Fit log-log decay slopes to a sweep CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// Edge-mechanism diagnostics on the half-plane image.
    Diagnose {
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Use semi-oracle reference patches.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 30)]
        trials: usize,
    },
    /// Verify the closed-form golden values.
    Selftest,
}

fn build_config(cli: Cli) -> Result<RunConfig, Error> {
    let command = match cli.command {
        Sub::Render { contour, n } => Command::Render {
            contour: cli::parse_contour(&contour.contour, contour.alpha, contour.holder_c)?,
            n,
        },
        Sub::Denoise {
            contour,
            denoiser,
            n,
            sigma,
            epsilon,
        } => Command::Denoise {
            contour: cli::parse_contour(&contour.contour, contour.alpha, contour.holder_c)?,
            family: cli::parse_family(&denoiser, epsilon)?,
            n,
            sigma,
        },
        Sub::Sweep {
            contour,
            denoiser,
            n,
            sigma,
            trials,
            epsilon,
            allow_large_nlm,
        } => Command::Sweep {
            contour: cli::parse_contour(&contour.contour, contour.alpha, contour.holder_c)?,
            families: denoiser
                .split(',')
                .map(|d| cli::parse_family(d.trim(), epsilon))
                .collect::<Result<Vec<_>, _>>()?,
            n_list: cli::parse_n_list(&n)?,
            sigma,
            trials,
            allow_large_nlm,
        },
        Sub::Fit { input } => Command::Fit { input },
        Sub::Diagnose {
            n,
            sigma,
            epsilon,
            oracle,
            trials,
        } => Command::Diagnose {
            n,
            sigma,
            epsilon,
            oracle,
            trials,
        },
        Sub::Selftest => Command::Selftest,
    };
    Ok(RunConfig {
        command,
        master_seed: cli.seed,
        output: cli.output,
        emit_plot: cli.emit_plot,
    })
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("HORIZON_RISK_THREADS") {
        match value.parse::<usize>() {
            Ok(threads) if threads >= 1 => {
                // Ignore failure: the pool can only be set once per process.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring invalid HORIZON_RISK_THREADS={value}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap help/version output is not an error
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    init_thread_pool();
    let config = match build_config(cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match cli::run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(2))
        }
    }
}
