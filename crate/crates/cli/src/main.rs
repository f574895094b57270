use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sdflow::verify::VerifyOptions;
use sdflow_cli::{
    cmd_run, cmd_spectrum, cmd_verify, load_config, output_dir, parse_overrides, EXIT_CONFIG, EXIT_OK, EXIT_VERIFY,
};

/// Surface diffusion flow of height functions over a cylinder.
#[derive(Parser)]
#[command(name = "sdflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file (or `preset:<name>`).
    Run {
        config: String,
        /// Config overrides, `--key=value`, e.g. `--r=2 --ic.amplitude=1e-3`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Print the eigenvalue table of the linearization at the cylinder.
    Spectrum {
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        a: f64,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
        mmax: u32,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
        nmax: u32,
    },
    /// Run the built-in consistency checks.
    Verify {
        /// Grid size for the checks.
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, hide = true)]
        negate_dg0: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, overrides } => run(&config, &overrides),
        Command::Spectrum { r, a, mmax, nmax } => {
            let stdout = io::stdout();
            match cmd_spectrum(r, a, mmax, nmax, &mut stdout.lock()) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    EXIT_CONFIG
                }
            }
        }
        Command::Verify { n, negate_dg0 } => {
            if n < 8 || n % 2 != 0 {
                eprintln!("error: --n must be even and at least 8");
                EXIT_CONFIG
            } else {
                let stdout = io::stdout();
                match cmd_verify(VerifyOptions { n, negate_dg0 }, &mut stdout.lock()) {
                    Ok((true, _)) => EXIT_OK,
                    Ok((false, _)) => EXIT_VERIFY,
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        EXIT_VERIFY
                    }
                }
            }
        }
    };
    io::stdout().flush().ok();
    ExitCode::from(code as u8)
}

fn run(config: &str, overrides: &[String]) -> i32 {
    let cfg = match parse_overrides(overrides).and_then(|o| load_config(config, &o)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let dir = output_dir(&cfg);
    match cmd_run(&cfg, &dir) {
        Ok(report) => {
            let m = &report.manifest;
            println!("event: {}", m.event);
            if let Some(e) = &m.error {
                println!("error: {e}");
            }
            if let Some(t) = m.t_final {
                println!("t: {t:.6}  steps: {} accepted, {} rejected", m.accepted_steps, m.rejected_steps);
            }
            if let (Some(fit), Some(pred)) = (&m.fit, m.predicted_rbar) {
                println!("fit: ybar {:.3e} zbar {:.3e} rbar {:.12} (predicted {:.12})", fit.ybar, fit.zbar, fit.rbar, pred);
            }
            println!("output: {}", report.dir.display());
            report.exit_code
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            sdflow_cli::EXIT_FLOW
        }
    }
}
