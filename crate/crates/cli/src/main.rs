use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conjheat_cli::{checks, plot, runner, RunOptions};

#[derive(Parser)]
#[command(name = "conjheat", version, about = "Conjugate heat equation under Ricci flow: scenario runs and refinement studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory.
    #[arg(long, global = true, env = "CONJHEAT_OUT", default_value = "out")]
    out: PathBuf,
    /// Reject terminal data whose mass is not 1 instead of rescaling it.
    #[arg(long, global = true)]
    strict_normalization: bool,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and run its checks.
    Run { config: PathBuf },
    /// Run a scenario at nested resolutions and fit refinement orders.
    Study {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Render SVG plots for the tables in a report directory.
    Plot { report_dir: PathBuf },
    /// List the registered checks.
    ListChecks,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let opts = RunOptions { strict_normalization: cli.strict_normalization };
    let result = match &cli.command {
        Command::Run { config } => runner::run_scenario(config, &cli.out, &opts).map(|r| {
            for c in &r.checks {
                println!("{:<20} {}", c.check, if c.passed { "pass" } else { "FAIL" });
                for f in &c.failures {
                    println!("    {f}");
                }
            }
            if let Some(e) = &r.error {
                println!("run failed: {e}");
            }
            r.passed
        }),
        Command::Study { config, levels } => runner::convergence_study(config, *levels, &cli.out, &opts).map(|s| {
            for o in &s.orders {
                let order = o.order.map_or("-".to_string(), |x| format!("{x:.3}"));
                println!("{:<20} order {order:>7} {}", o.check, if o.passed { "pass" } else { "FAIL" });
            }
            println!("finest level {}", if s.finest_passed { "pass" } else { "FAIL" });
            s.passed
        }),
        Command::Plot { report_dir } => plot::plot_dir(report_dir).map_err(Into::into).map(|files| {
            for f in files {
                println!("{}", f.display());
            }
            true
        }),
        Command::ListChecks => {
            for c in checks::all() {
                println!("{:<20} {}", c.name(), c.description());
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
