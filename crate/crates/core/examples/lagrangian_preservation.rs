//! Generalized flow of a Lagrangian torus keeps `omega` at discretization
//! level in an admissible ambient; a non-pluriharmonic `psi` does not.

use glmcf::diagnostics::{preservation_ceiling, preservation_pair};

fn main() -> glmcf::Result<()> {
    let (admissible, control) = preservation_pair();
    let mut prev = None;
    for n in [16, 32, 64] {
        let a = preservation_ceiling(n, &admissible, 0.1)?;
        let c = preservation_ceiling(n, &control, 0.1)?;
        let ratio = prev.map_or(String::new(), |p: f64| format!("  ratio {:.3}", a / p));
        println!("N = {n:>2}: max |omega| admissible {a:.3e}, control {c:.3e}{ratio}");
        prev = Some(a);
    }
    Ok(())
}
