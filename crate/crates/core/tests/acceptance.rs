//! Acceptance battery: one PASS/FAIL line per criterion, with the
//! individual checks listed underneath. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use projdyn::suite::{run_criterion, Criterion, SuiteOptions};

fn main() -> ExitCode {
    let opts = SuiteOptions::default();
    let mut failed = 0;
    for c in Criterion::ALL {
        let start = Instant::now();
        let checks = run_criterion(c, &opts);
        let ok = !checks.is_empty() && checks.iter().all(|k| k.passed);
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {}: {} [{:.2}s]",
            if ok { "PASS" } else { "FAIL" },
            c.number(),
            c.title(),
            start.elapsed().as_secs_f64()
        );
        for k in &checks {
            println!("    {k}");
        }
    }
    println!("{} of {} criteria passed", Criterion::ALL.len() - failed, Criterion::ALL.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
