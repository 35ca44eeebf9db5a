//! Drive the full check pipeline on a configuration file and print the same
//! summary the command-line tool produces, plus where the JSON and CSV
//! artifacts were written.

use quasisym::runner::{self, RunOptions};
use std::path::Path;

fn main() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/example1.cfg");
    let out = std::env::temp_dir().join("quasisym-scenario-pipeline");
    let opts = RunOptions {
        out_dir: Some(out),
        ..RunOptions::default()
    };

    let outcome = runner::run_config(&config, &opts).unwrap();
    for line in &outcome.failures {
        eprintln!("error: {line}");
    }
    for report in &outcome.reports {
        for check in &report.checks {
            let verdict = if check.pass { "PASS" } else { "FAIL" };
            println!("{verdict} {}/{}", report.scenario, check.id);
        }
        if let Some(growth) = &report.growth {
            println!(
                "     growth kappa={:.3} c={:.3} theta={:.3} [{}]",
                growth.kappa.0, growth.c_stretch.0, growth.theta.0, growth.classification
            );
        }
    }
    println!("artifacts:");
    for path in &outcome.written {
        println!("  {}", path.display());
    }
}
