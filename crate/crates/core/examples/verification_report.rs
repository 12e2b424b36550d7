//! Runs the verification suite at reduced size and writes its JSON report.
//! Pass `full` for the acceptance-size suite (about a minute).

use difftomo::{run_verify, VerifyScale};

fn main() -> difftomo::Result<()> {
    let scale = match std::env::args().nth(1).as_deref() {
        Some("full") => VerifyScale::Full,
        _ => VerifyScale::Quick,
    };
    let report = run_verify(1, scale)?;
    for c in &report.checks {
        println!("{} {:<48} observed={:<12.4e} bound={:.4e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.observed, c.bound);
    }
    let path = std::env::temp_dir().join("difftomo_verification.json");
    report.write_json(&path)?;
    println!("{} checks, all pass: {}; report at {}", report.checks.len(), report.pass, path.display());
    Ok(())
}
