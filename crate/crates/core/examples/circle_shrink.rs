//! Mean curvature flow of the unit circle against the exact radius
//! `r(t) = sqrt(1 - 2t)`.

use glmcf::ambient::AmbientStructure;
use glmcf::flow::{run_flow_with, FlowConfig, FlowKind, FlowState};
use glmcf::immersion::CurveState;

fn main() -> glmcf::Result<()> {
    let ambient = AmbientStructure::calabi_yau(1)?;
    let mut config = FlowConfig::new(FlowKind::Mcf, 0.4);
    config.snapshot_every = 2000;

    println!("{:>8} {:>12} {:>12} {:>10}", "t", "radius", "exact", "error");
    let (_, trace) = run_flow_with(FlowState::Curve(CurveState::circle(1.0, 256)?), &ambient, &config, |_, t, s| {
        if let FlowState::Curve(c) = s {
            let exact = (1.0 - 2.0 * t).sqrt();
            let r = c.mean_radius();
            println!("{t:>8.4} {r:>12.8} {exact:>12.8} {:>10.2e}", (r - exact).abs());
        }
    })?;
    println!("{} after {} steps", trace.termination.name(), trace.steps);
    Ok(())
}
