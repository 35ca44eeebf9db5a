//! Command-line front end: load a scenario catalogue, run a subcommand's
//! check subset, print one line per executed check, and exit nonzero when
//! anything fails.

use clap::{Args, Parser, Subcommand};
use quasisym::runner::{self, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "quasisym",
    version,
    about = "Numerical laboratory for quasi-symmetriser energy estimates of weakly hyperbolic problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify symmetriser family properties on random root samples.
    CheckProps(CommonArgs),
    /// Sweep root separation and lower-order conditions over the grids.
    LeviCheck(CommonArgs),
    /// Integrate the configured frequency modes and dump trajectories.
    Solve(CommonArgs),
    /// Fit the growth law of the mode family and classify the loss.
    FitGrowth(CommonArgs),
    /// Partition the time interval at the symmetriser entry zeros.
    Partition(CommonArgs),
    /// Run every enabled check and write the full per-scenario reports.
    Report(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file, or a directory of .cfg files.
    #[arg(long)]
    config: PathBuf,

    /// Directory for JSON reports and CSV dumps.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override every scenario seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads; defaults to all cores.
    #[arg(long)]
    parallelism: Option<usize>,

    /// Restrict to one check id; repeatable.
    #[arg(long)]
    only: Vec<String>,

    /// Override the sampled order for the root-family property checks.
    #[arg(long)]
    m: Option<usize>,
}

impl Command {
    fn split(self) -> (Option<Vec<String>>, CommonArgs) {
        let subset = |ids: &[&str]| Some(ids.iter().map(|s| s.to_string()).collect());
        match self {
            Command::CheckProps(a) => (
                subset(&[
                    "quasisym-props",
                    "near-diagonal",
                    "commutator",
                    "difference-identity",
                ]),
                a,
            ),
            Command::LeviCheck(a) => (
                subset(&["lc-separation", "lc-equivalence", "levi-lb", "relaxed-levi"]),
                a,
            ),
            Command::Solve(a) => (subset(&["solve", "energy"]), a),
            Command::FitGrowth(a) => (subset(&["fit-growth", "decay-fit"]), a),
            Command::Partition(a) => (subset(&["partition"]), a),
            Command::Report(a) => (None, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (subset, args) = cli.command.split();
    if let Some(threads) = args.parallelism {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let opts = RunOptions {
        out_dir: args.out,
        subset,
        only: (!args.only.is_empty()).then_some(args.only),
        seed: args.seed,
        order: args.m,
    };
    match runner::run_config(&args.config, &opts) {
        Ok(outcome) => {
            for line in &outcome.failures {
                eprintln!("error: {line}");
            }
            for rep in &outcome.reports {
                for check in &rep.checks {
                    let verdict = if check.pass { "PASS" } else { "FAIL" };
                    println!("{verdict} {}/{}", rep.scenario, check.id);
                }
                if let Some(g) = &rep.growth {
                    println!(
                        "     {}: growth kappa={:.3} c={:.3} theta={:.3} [{}]",
                        rep.scenario, g.kappa.0, g.c_stretch.0, g.theta.0, g.classification
                    );
                }
            }
            if !outcome.written.is_empty() {
                println!("wrote {} file(s)", outcome.written.len());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
