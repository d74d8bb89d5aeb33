// Run every verification suite at a reduced sample count and report one line
// per suite. `twowell verify` runs the same battery at full size.

use std::process::ExitCode;

use twowell::verify::{all_passed, run_all};

fn main() -> ExitCode {
    let (lambda, seed, samples) = (1.5, 7, 500);
    println!("verification battery: lambda = {lambda}, seed = {seed}, samples = {samples}\n");
    let results = run_all(lambda, seed, samples);
    for r in &results {
        println!("{r}");
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("\n{passed}/{} suites passed", results.len());
    if all_passed(&results) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
