//! Full acceptance suite: one line per criterion, nonzero exit on any failure.

use std::process::ExitCode;

use ekfluid::verify::{self, Suite};

fn main() -> ExitCode {
    println!("{}", verify::header());
    let results = verify::run_suite(Suite::Full, |r| println!("{}", r.row()));
    let failed: Vec<usize> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    println!("acceptance: {} of {} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
