//! Scenario-driven command line: loads a TOML scenario, runs one verification
//! pipeline (or all of them), writes JSON/CSV reports. Exit codes: 0 success,
//! 2 certificate failure, 3 invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nucheck::error::Error;
use nucheck::localization::LocalizationSign;
use nucheck::report::{write_kernel_csv, write_scan_csv, Report};
use nucheck::runner;
use nucheck::scenario::Scenario;

#[derive(Parser)]
#[command(name = "nucheck", version, about = "nuclearity bound checks for the massless free field")]
struct Cli {
    /// Scenario TOML file (defaults to the built-in desk-scale scenario).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Output directory for reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for parallel scans (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Seed override (defaults to the scenario seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Subcommand)]
enum Command {
    /// Localization spectrum, Schatten sums, subadditivity and stability.
    Spectrum,
    /// Correlation scans: support vanishing, decay fits, calibrated bounds.
    CorrScan {
        /// Eigenvector index to scan.
        #[arg(long)]
        eig: Option<usize>,
        /// Subspace sign of the scanned channel.
        #[arg(long, value_enum)]
        sign: Option<SignArg>,
        /// Named translation configuration to append to the CSV.
        #[arg(long)]
        config: Option<String>,
    },
    /// Kernel operator-norm bound sweep over the valid zone.
    KernelSweep,
    /// Fock-space oracles: Weyl, commutators, energy and harmonic bounds.
    FockVerify,
    /// Multi-point norms, proposition bound, nuclear-norm N-sweep.
    Nuclearity,
    /// Everything, into one run directory with a summary index.
    Full,
}

fn load_scenario(path: &Option<PathBuf>) -> Result<Scenario, Error> {
    match path {
        Some(p) => Scenario::load(p),
        None => Ok(Scenario::default()),
    }
}

fn finish(report: Report, out: &PathBuf, file: &str) -> ExitCode {
    let path = out.join(file);
    if let Err(e) = report.write_json(&path) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    for check in &report.checks {
        println!(
            "{:<40} {}  margin={:+.3e}",
            check.name,
            if check.pass { "pass" } else { "FAIL" },
            check.margin
        );
    }
    println!("report: {}", path.display());
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn exit_for_error(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Certificate(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()
        {
            eprintln!("warning: thread pool not configured: {e}");
        }
    }
    let scn = match load_scenario(&cli.scenario) {
        Ok(s) => s,
        Err(e) => return exit_for_error(&e),
    };
    let seed = cli.seed.unwrap_or(scn.seed);

    match cli.command {
        Command::Spectrum => match runner::cmd_spectrum(&scn, seed) {
            Ok(report) => finish(report, &cli.out, "spectrum.json"),
            Err(e) => exit_for_error(&e),
        },
        Command::CorrScan { eig, sign, config } => {
            let sign = sign.map(|s| match s {
                SignArg::Plus => LocalizationSign::Plus,
                SignArg::Minus => LocalizationSign::Minus,
            });
            match runner::cmd_corr_scan(&scn, eig, sign, config.as_deref(), seed) {
                Ok(output) => {
                    let csv = cli.out.join("corr_scan.csv");
                    if let Err(e) = write_scan_csv(&csv, scn.s, &output.rows) {
                        return exit_for_error(&e);
                    }
                    println!("scan rows: {}", csv.display());
                    finish(output.report, &cli.out, "corr_scan.json")
                }
                Err(e) => exit_for_error(&e),
            }
        }
        Command::KernelSweep => match runner::cmd_kernel_sweep(&scn, seed) {
            Ok(output) => {
                let csv = cli.out.join("kernel_sweep.csv");
                if let Err(e) = write_kernel_csv(&csv, &output.rows) {
                    return exit_for_error(&e);
                }
                println!("sweep rows: {}", csv.display());
                finish(output.report, &cli.out, "kernel_sweep.json")
            }
            Err(e) => exit_for_error(&e),
        },
        Command::FockVerify => match runner::cmd_fock_verify(&scn, seed) {
            Ok(report) => finish(report, &cli.out, "fock_verify.json"),
            Err(e) => exit_for_error(&e),
        },
        Command::Nuclearity => match runner::cmd_nuclearity(&scn, seed) {
            Ok(report) => finish(report, &cli.out, "nuclearity.json"),
            Err(e) => exit_for_error(&e),
        },
        Command::Full => match runner::cmd_full(&scn, &cli.out, seed) {
            Ok(run) => {
                println!("summary: {}", run.summary_path.display());
                if run.pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(3)
                }
            }
            Err(e) => exit_for_error(&e),
        },
    }
}
