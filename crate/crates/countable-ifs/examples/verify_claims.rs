//! Run a few of the named numerical checks and print the consolidated
//! report. `ifs verify --all` runs the complete set, including the
//! slower measure-support comparisons.

use countable_ifs::verify::{report_from, run_claim, ClaimStatus, VerifyOptions};

fn main() -> countable_ifs::Result<()> {
    let opts = VerifyOptions::default();
    let quick = [
        "example1-fixed-points",
        "example1-interval",
        "example2-closed-forms",
        "example2-unbounded",
        "nondecreasing",
        "minimality-dyadic",
        "enlargement-r1",
        "kravchenko",
        "dsl-roundtrip",
    ];
    let mut claims = Vec::new();
    for name in quick {
        let result = run_claim(name, &opts)?;
        let mark = match result.status {
            ClaimStatus::Pass => "ok  ",
            ClaimStatus::Fail => "FAIL",
            ClaimStatus::NotApplicable => "n/a ",
        };
        println!("[{mark}] {name} ({} ms)", result.runtime_ms);
        println!("       {}", result.anchor);
        claims.push(result);
    }
    let report = report_from(claims);
    println!(
        "\n{} passed, {} failed, {} not applicable",
        report.passed, report.failed, report.not_applicable
    );
    std::process::exit(if report.all_pass { 0 } else { 1 });
}
