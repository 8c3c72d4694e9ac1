//! The Lagrangian angle of a few states and the identity `alpha_K = -d theta`
//! under refinement.

use glmcf::diagnostics::{check_alpha_k_dtheta, named_ambient};
use glmcf::fixtures::sine_graph_2d;
use glmcf::immersion::{CurveState, LagrangianState};

fn main() -> glmcf::Result<()> {
    let amb = named_ambient(1, "h=0.2iz");
    let circle = CurveState::circle(1.0, 8)?;
    let angle = circle.lagrangian_angle(&amb)?;
    println!("circle, 8 nodes, h = 0.2iz");
    for (i, t) in angle.theta.iter().enumerate() {
        println!("  node {i}: theta = {t:+.6}");
    }
    println!("  windings {:?}, zero Maslov class: {}", angle.windings, angle.has_zero_maslov());

    println!("\nmax |alpha_K + d theta| on sine_graph_2d, h = 0.1(z1+z2)");
    let amb = named_ambient(2, "h=0.1(z1+z2)");
    let mut prev: Option<f64> = None;
    for n in [16, 32, 64] {
        let r = check_alpha_k_dtheta(&sine_graph_2d(n)?, &amb)?;
        match prev {
            Some(p) => println!("  N = {n:>3}: {r:.3e}  order {:.2}", (p / r).log2()),
            None => println!("  N = {n:>3}: {r:.3e}"),
        }
        prev = Some(r);
    }
    Ok(())
}
