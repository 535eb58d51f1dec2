use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use primeq::cli::{self, RunConfig, SelftestOptions};
use primeq::Error;

/// Pseudo-spectral primitive-equations solver.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file with `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// `key=value` overrides, applied after the file; the last one wins.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate and write diagnostics and checkpoints.
    Run(ConfigArgs),
    /// Compare a run with a perturbed twin (`delta` key sets the size).
    Twin(ConfigArgs),
    /// Compare runs over the regularization values in `eps_list`.
    Epsilon(ConfigArgs),
    /// Run the built-in invariant checks.
    Selftest {
        /// Grid points per axis.
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Override the dealiasing cutoff (fault injection).
        #[arg(long, hide = true)]
        corrupt_dealias: Option<usize>,
    },
    /// Print every configuration key with its default.
    Defaults,
}

fn load(args: &ConfigArgs) -> Result<RunConfig, Error> {
    RunConfig::load(args.config.as_deref(), &args.set)
}

fn execute(command: Command) -> Result<bool, Error> {
    match command {
        Command::Run(a) => {
            let cfg = load(&a)?;
            let out = cli::with_pool(cfg.deterministic, || cli::cmd_run(&cfg))??;
            println!(
                "t = {} after {} diagnostic rows; output in {}",
                out.final_state.time,
                out.rows.len(),
                cfg.output_dir.display()
            );
        }
        Command::Twin(a) => {
            let cfg = load(&a)?;
            let r = cli::with_pool(cfg.deterministic, || cli::cmd_twin(&cfg))??;
            let g = &r.gronwall;
            println!(
                "delta = {:e}  d0 = {:e}  d_end = {:e}  C = {}",
                r.delta,
                g.d0,
                g.measured.last().copied().unwrap_or(0.0),
                g.c
            );
        }
        Command::Epsilon(a) => {
            let cfg = load(&a)?;
            let r = cli::with_pool(cfg.deterministic, || cli::cmd_epsilon(&cfg))??;
            for n in 0..r.eps.len() {
                println!("eps = {:e}  D = {:e}  sup H2^2 = {:e}", r.eps[n], r.distance[n], r.sup_h2[n]);
            }
            match r.slope {
                Some(s) => println!("log-log slope = {s:.4}"),
                None => println!("log-log slope undefined"),
            }
            println!("uniform bound ratio = {:.4}", r.uniform_ratio);
        }
        Command::Selftest { n, corrupt_dealias } => {
            return cli::cmd_selftest(&SelftestOptions { n, corrupt_dealias });
        }
        Command::Defaults => print!("{}", RunConfig::default().to_text()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match execute(args.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
