//! Finite-difference verification of every op, layer and the tiny models.
//!
//! cargo run --release --example grad_check

use abas::verify::{run_grad_suite, SuiteScope, TOLERANCE};

fn main() -> abas::Result<()> {
    let entries = run_grad_suite(SuiteScope::Model, 0, false)?;
    for e in &entries {
        println!("{:<26} {:.3e}", e.name, e.report.max_rel_error);
    }
    let failed = entries.iter().filter(|e| !e.passed()).count();
    println!("{} checks, {failed} above {TOLERANCE:e}", entries.len());
    Ok(())
}
