//! Acceptance suite: criteria 1 to 9, one line each.
//!
//! Runs without the libtest harness so the summary lines always reach the
//! terminal. `LSC_SEED` selects the corpus seed. The process exits non-zero
//! when any criterion fails, and prints the first diagnostics of each
//! failing suite.

use std::process::ExitCode;
use std::time::Instant;

use lsc::harness::{acceptance, suite_seed};

fn main() -> ExitCode {
    let seed = suite_seed();
    let clock = Instant::now();
    println!("acceptance suite, seed {seed}");
    let criteria = acceptance(seed);
    for c in &criteria {
        println!("{}", c.line());
        for part in &c.parts {
            if !part.passed() {
                for note in &part.notes {
                    println!("    {note}");
                }
            }
        }
    }
    let failed = criteria.iter().filter(|c| !c.passed()).count();
    println!(
        "{} of {} criteria pass ({:.1}s)",
        criteria.len() - failed,
        criteria.len(),
        clock.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
