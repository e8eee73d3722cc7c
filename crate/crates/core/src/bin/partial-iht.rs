use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use partial_iht::experiment::{
    emit_plot, exit_code, prepare, run_experiment, ExperimentConfig, OUTPUT_ROOT_ENV,
};
use partial_iht::optim::contraction_diagnostics;
use partial_iht::Result;

#[derive(Parser)]
#[command(version, about = "Sparse regression with a per-example attribute budget")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the trials described by a config file.
    #[command(after_help = format!("Relative output directories are placed under ${OUTPUT_ROOT_ENV} when set."))]
    Run { config: PathBuf },
    /// Plot one or more aggregate CSVs into an SVG line chart.
    Plot {
        out: PathBuf,
        #[arg(required = true)]
        aggregates: Vec<PathBuf>,
        /// Logarithmic y axis.
        #[arg(long)]
        log_y: bool,
    },
    /// Check the step size, sparsity and batch conditions for a config.
    Validate { config: PathBuf },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let s = run_experiment(&cfg)?;
            println!(
                "{} trials of {} -> {}",
                s.trials,
                s.algorithm,
                s.output_dir.display()
            );
            println!("mean final test MSE {:.6}", s.mean_final_test_mse);
            if let Some(e) = s.mean_final_excess_risk {
                println!("mean final excess risk {e:.6}");
            }
            println!("config hash {}", s.config_hash);
        }
        Command::Plot {
            out,
            aggregates,
            log_y,
        } => emit_plot(&aggregates, &out, log_y)?,
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let p = prepare(&cfg)?;
            let report = p.constraint_report()?;
            println!(
                "L_s = {}  mu_s = {}  kappa = {}  R_inf = {}  eta = {}",
                p.profile.l_s,
                p.profile.mu_s,
                p.profile.kappa(),
                p.profile.r_inf,
                p.eta
            );
            print!("{report}");
            let horizon = cfg.optimizer.iterations.unwrap_or(cfg.optimizer.t_minus);
            let c = contraction_diagnostics(
                p.eta,
                &p.budget,
                &p.profile,
                p.instance.sigma(),
                cfg.schedule.delta / (2.0 * horizon as f64),
            );
            println!("alpha = {:.6e}  c_t = {:.6e}", c.alpha, c.c_t);
            println!(
                "{}",
                if report.all_passed() {
                    "all conditions hold"
                } else {
                    "some conditions fail"
                }
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
