//! The scalar flow `du/dt = theta` from a small sine mode: `theta` solves
//! the heat equation, so the mode decays like `e^{-t}`.

use glmcf::ambient::AmbientStructure;
use glmcf::fixtures::sine_graph_1d;
use glmcf::flow::{run_flow_with, FlowConfig, FlowKind, FlowState};
use glmcf::immersion::GraphState;

fn sine_mode(g: &GraphState) -> f64 {
    let n = g.len() as f64;
    2.0 / n * g.u().iter().enumerate().map(|(i, u)| u * g.grid().coords(i)[0].sin()).sum::<f64>()
}

fn main() -> glmcf::Result<()> {
    let ambient = AmbientStructure::calabi_yau(1)?;
    let g = sine_graph_1d(128, 1e-3)?;
    let a0 = sine_mode(&g);
    let mut config = FlowConfig::new(FlowKind::Scalar, 0.1);
    config.snapshot_every = 100;
    println!("{:>8} {:>14} {:>14}", "t", "mode", "a0 e^-t");
    run_flow_with(FlowState::Graph(g), &ambient, &config, |_, t, s| {
        if let FlowState::Graph(g) = s {
            println!("{t:>8.4} {:>14.8e} {:>14.8e}", sine_mode(g), a0 * (-t).exp());
        }
    })?;
    Ok(())
}
