//! Batch front end: `esdg run|audit|sweep <case-file>`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 positivity/NaN
//! abort (partial series retained), 4 I/O error. `audit` additionally
//! exits 1 when a check fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use esdg::config::CaseConfig;
use esdg::driver::{audit_case, run_case, run_convergence_sweep, SweepParam};
use esdg::SolverError;

#[derive(Parser)]
#[command(name = "esdg", about = "Split-form entropy-stable DGSEM batch solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Case configuration file.
    case: PathBuf,
    /// Override the output directory from the case file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the RHS evaluation (results are bitwise
    /// independent of the count).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Force the single-threaded deterministic path.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Advance a case to t_end and write the diagnostic series,
    /// snapshot and report.
    Run(CommonArgs),
    /// Evaluate every semi-discrete invariant check for the case.
    Audit(CommonArgs),
    /// Run a resolution sweep against the exact solution.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep parameter, e.g. `N=2..6` or `mesh=2,4,8`.
        #[arg(long)]
        param: String,
    },
}

fn load_config(args: &CommonArgs) -> Result<CaseConfig, SolverError> {
    let mut config = CaseConfig::from_file(&args.case)?;
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if args.deterministic {
        config.deterministic = true;
    }
    Ok(config)
}

fn install_thread_pool(args: &CommonArgs) {
    let threads = if args.deterministic {
        1
    } else {
        args.threads.max(1)
    };
    // ignore the error if a pool is already installed
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
}

fn dispatch() -> Result<u8, SolverError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            install_thread_pool(&args);
            let config = load_config(&args)?;
            let output = run_case(&config)?;
            println!(
                "completed: {} steps to t = {:.6}, series in {}",
                output.steps,
                output.t_final,
                config.out_dir.join("series.csv").display()
            );
            Ok(0)
        }
        Command::Audit(args) => {
            install_thread_pool(&args);
            let config = load_config(&args)?;
            let report = audit_case(&config)?;
            print!("{}", report.to_text());
            if report.all_pass() {
                println!("audit: PASS");
                Ok(0)
            } else {
                println!("audit: FAIL");
                Ok(1)
            }
        }
        Command::Sweep { common, param } => {
            install_thread_pool(&common);
            let config = load_config(&common)?;
            let param = SweepParam::parse(&param)?;
            let table = run_convergence_sweep(&config, &param)?;
            print!("{}", table.to_csv());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => ExitCode::from(code),
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
