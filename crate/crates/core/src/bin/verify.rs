use std::process::ExitCode;

use clap::Parser;
use fpfree::epsilon::ContractionParams;
use fpfree::exact::{parse_rat, Rat};
use fpfree::harness::{run, Format, Suite, SuiteConfig};

/// Runs exact verification suites and prints a report.
///
/// Exit status: 0 when every check passes (or the parameters are
/// exploratory), 1 when a check fails, 2 on a configuration error.
#[derive(Debug, Parser)]
#[command(name = "verify", version)]
struct Args {
    /// Suites to run; repeat or comma-separate.
    #[arg(
        long = "suite",
        value_enum,
        value_delimiter = ',',
        default_value = "all",
        env = "FPFREE_SUITE"
    )]
    suites: Vec<Suite>,

    #[arg(long, default_value_t = 0, env = "FPFREE_SEED")]
    seed: u64,

    /// Sampled points (or pairs) per property.
    #[arg(long, default_value_t = 500, env = "FPFREE_SAMPLES")]
    samples: usize,

    /// Length of the certified eps-sequence prefix.
    #[arg(long, default_value_t = 1000, env = "FPFREE_DEPTH")]
    depth: usize,

    /// Radius of D, as an integer or `num/den`.
    #[arg(long, default_value = "4", value_parser = rational, env = "FPFREE_Q")]
    q: Rat,

    /// Largest Rademacher index used.
    #[arg(long, default_value_t = 12, env = "FPFREE_N_RADEMACHER")]
    n_rademacher: usize,

    #[arg(long, value_enum, default_value = "text", env = "FPFREE_FORMAT")]
    format: Format,

    /// Non-default delta; switches to exploratory mode.
    #[arg(long, value_parser = rational, env = "FPFREE_DELTA")]
    delta: Option<Rat>,

    /// Non-default eta; switches to exploratory mode.
    #[arg(long, value_parser = rational, env = "FPFREE_ETA")]
    eta: Option<Rat>,

    /// Non-default eps_1; switches to exploratory mode.
    #[arg(long, value_parser = rational, env = "FPFREE_EPS1")]
    eps1: Option<Rat>,

    /// Non-default alpha; switches to exploratory mode.
    #[arg(long, value_parser = rational, env = "FPFREE_ALPHA")]
    alpha: Option<Rat>,

    /// Record per-suite wall-clock time (reports are then not reproducible).
    #[arg(long, env = "FPFREE_TIMINGS")]
    timings: bool,
}

fn rational(s: &str) -> Result<Rat, String> {
    parse_rat(s).ok_or_else(|| format!("`{s}` is not a rational number"))
}

impl Args {
    fn into_config(self) -> SuiteConfig {
        let d = ContractionParams::default();
        SuiteConfig {
            suites: self.suites,
            seed: self.seed,
            samples: self.samples,
            depth: self.depth,
            n_rademacher: self.n_rademacher,
            params: ContractionParams {
                delta: self.delta.unwrap_or(d.delta),
                eta: self.eta.unwrap_or(d.eta),
                eps1: self.eps1.unwrap_or(d.eps1),
                alpha: self.alpha.unwrap_or(d.alpha),
                q: self.q,
            },
            format: self.format,
            timings: self.timings,
        }
    }
}

fn main() -> ExitCode {
    let config = Args::parse().into_config();
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match config.format {
        Format::Json => println!("{}", report.to_json()),
        Format::Text => print!("{}", report.to_text()),
    }
    ExitCode::from(report.exit_code() as u8)
}
