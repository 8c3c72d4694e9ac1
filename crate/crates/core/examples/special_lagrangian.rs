//! A flat graph is special Lagrangian for a real-coefficient exponent and
//! stays fixed under the scalar flow; a tilted exponent moves it.

use glmcf::diagnostics::{named_ambient, special_lagrangian_drift};
use glmcf::immersion::{special_lagrangian_residual, GraphState};

fn main() -> glmcf::Result<()> {
    let still = named_ambient(2, "h=0.3z1+0.2z2");
    println!("real exponent: max(|u|, residual) over t in [0, 1] = {:.3e}", special_lagrangian_drift(16, &still, 1.0)?);

    let tilted = named_ambient(2, "h=0.2iz1");
    let flat = GraphState::from_fn(&[16, 16], |_| 0.0)?;
    println!("imaginary exponent: residual at t = 0 = {:.3e}", special_lagrangian_residual(&flat, &tilted)?);
    Ok(())
}
