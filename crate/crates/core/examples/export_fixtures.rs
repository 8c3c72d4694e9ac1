//! Writes every built-in initial state as a snapshot CSV.
//!
//! ```text
//! cargo run --example export_fixtures -- out/
//! ```

use std::fs;
use std::path::PathBuf;

use glmcf::ambient::AmbientStructure;
use glmcf::fixtures::Fixture;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    fs::create_dir_all(&dir)?;
    for f in Fixture::CATALOG {
        let snap = f.build_default()?.snapshot(&AmbientStructure::calabi_yau(f.n())?)?;
        let path = dir.join(format!("{}.csv", f.name()));
        fs::write(&path, snap.to_csv_string())?;
        println!("{} ({} nodes)", path.display(), snap.rows.len());
    }
    Ok(())
}
