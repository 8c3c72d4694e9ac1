//! Runs a diagnostics suite and prints its summary.
//!
//! ```text
//! cargo run --release --example verify_suite -- identities 32,64
//! ```

use glmcf::diagnostics::{run_suite, Suite, DEFAULT_LADDER};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let suite = args.next().unwrap_or_else(|| "all".into());
    let suite = Suite::from_name(&suite).ok_or(format!("unknown suite {suite}"))?;
    let ladder: Vec<usize> = match args.next() {
        Some(s) => s.split(',').map(str::parse).collect::<Result<_, _>>()?,
        None => DEFAULT_LADDER.to_vec(),
    };
    let report = run_suite(suite, &ladder)?;
    print!("{}", report.summary());
    std::process::exit(if report.all_pass() { 0 } else { 1 });
}
