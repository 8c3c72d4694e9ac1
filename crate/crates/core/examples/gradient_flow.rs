//! Generalized mean curvature flow as the gradient flow of the conformal
//! volume: first-variation check, then the volume along a run.

use glmcf::ambient::ConformalMetric;
use glmcf::diagnostics::{check_gradient_flow, named_ambient};
use glmcf::fixtures::sine_graph_2d;
use glmcf::flow::{run_flow, FlowConfig, FlowKind, FlowState};
use glmcf::immersion::{volume, MeshState};

fn main() -> glmcf::Result<()> {
    let amb = named_ambient(2, "h=0.2iz1");
    let graph = sine_graph_2d(32)?;
    let err = check_gradient_flow(&graph, &amb, 8, 1e-4)?;
    println!("first variation vs -<K, Y>: max relative error {err:.3e}");

    let mesh = MeshState::from_graph(&graph)?;
    println!("Vol_tilde at t = 0: {:.10}", volume(&mesh, &amb, ConformalMetric::Tilde)?);
    let (_, trace) = run_flow(FlowState::Mesh(mesh), &amb, &FlowConfig::new(FlowKind::Gmcf, 0.1))?;
    for row in trace.rows.iter().step_by(trace.rows.len().div_ceil(5)).chain(trace.rows.last()) {
        println!("t = {:.4}: Vol_tilde {:.10}, max |K| {:.4e}", row.t, row.vol_tilde, row.max_k);
    }
    println!("steps with volume growth: {}", trace.volume_increases.len());
    Ok(())
}
