//! Command-line front end: dataset synthesis, training, inference,
//! evaluation, the blur-sharpness sweep, and the verification suites.

mod commands;
mod config;
mod plot;

use clap::{Parser, Subcommand};
use config::RunConfig;
use dnsp_core::verify::Suite;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dnsp", about = "Single-image super-resolution with structural priors")]
struct Cli {
    /// Configuration file with `key = value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress status output (CSV still goes to stdout).
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic phantom images as PGM files.
    Synth {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on a directory of PGM images; writes checkpoint and report.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        eta_last_layer_ratio: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        blur_sigma: Option<f64>,
        #[arg(long)]
        scale: Option<usize>,
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        patch: Option<usize>,
        #[arg(long)]
        stride: Option<usize>,
        /// Fraction of training pairs to keep (deterministic by seed).
        #[arg(long)]
        fraction: Option<f64>,
    },
    /// Upscale one image with a trained checkpoint.
    Infer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        scale: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// PSNR/SSIM for (sr, gt) file pairs; CSV to stdout.
    Eval {
        /// Alternating sr gt sr gt ... paths.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Variance of Laplacian for a list of blur sigmas; CSV to stdout.
    BlurSweep {
        #[arg(long)]
        image: PathBuf,
        /// Comma-separated sigmas, reported in the given order.
        #[arg(long)]
        sigmas: String,
        /// Optional SVG line plot output path.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run a verification suite: gradients, svd, priors or all.
    Verify { suite: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let mut cfg = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => return usage_error(&e.to_string()),
        },
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.hp.seed = seed;
    }

    let result = match cli.command {
        Command::Synth { count, size, out } => {
            commands::synth(count, size, cfg.hp.seed, &out, cli.quiet)
        }
        Command::Train {
            data,
            out,
            alpha,
            beta,
            delta,
            eta,
            eta_last_layer_ratio,
            batch_size,
            epochs,
            blur_sigma,
            scale,
            profile,
            patch,
            stride,
            fraction,
        } => {
            set_if(&mut cfg.hp.alpha, alpha);
            set_if(&mut cfg.hp.beta, beta);
            set_if(&mut cfg.hp.delta, delta);
            set_if(&mut cfg.hp.eta, eta);
            set_if(&mut cfg.hp.eta_last_layer_ratio, eta_last_layer_ratio);
            set_if(&mut cfg.hp.batch_size, batch_size);
            set_if(&mut cfg.hp.epochs, epochs);
            set_if(&mut cfg.degradation.blur_sigma, blur_sigma);
            set_if(&mut cfg.degradation.scale, scale);
            set_if(&mut cfg.profile, profile);
            set_if(&mut cfg.patch, patch);
            set_if(&mut cfg.stride, stride);
            set_if(&mut cfg.fraction, fraction);
            commands::train_cmd(&cfg, &data, &out, cli.quiet)
        }
        Command::Infer { checkpoint, input, scale, output } => {
            commands::infer_cmd(&checkpoint, &input, scale, &output, cli.quiet)
        }
        Command::Eval { paths } => {
            if paths.len() % 2 != 0 {
                return usage_error("eval expects an even number of paths (sr gt pairs)");
            }
            commands::eval_cmd(&paths)
        }
        Command::BlurSweep { image, sigmas, svg } => match parse_sigmas(&sigmas) {
            Ok(list) => commands::blur_sweep(&image, &list, svg.as_deref()),
            Err(msg) => return usage_error(&msg),
        },
        Command::Verify { suite } => match suite.parse::<Suite>() {
            Ok(suite) => commands::verify_cmd(suite),
            Err(e) => return usage_error(&e.to_string()),
        },
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn set_if<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn parse_sigmas(s: &str) -> Result<Vec<f64>, String> {
    let list: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match list {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(format!("invalid sigma list '{s}'")),
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("usage error: {msg}");
    ExitCode::from(2)
}
