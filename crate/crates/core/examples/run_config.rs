//! Drives a flow from a JSON run configuration, the same path the `flow`
//! subcommand takes, without touching the filesystem.

use std::path::Path;

use glmcf::cli::{flow_summary, RunConfig};
use glmcf::flow::run_flow;

const CONFIG: &str = r#"{
  "ambient": { "n": 1, "coefficients": [[[1], 0.1, 0.0]] },
  "initial": { "kind": "graph", "fixture": "sine_graph_1d", "resolution": 64 },
  "flow": { "kind": "scalar", "t_end": 0.5, "integrator": "rk4" }
}"#;

fn main() -> glmcf::Result<()> {
    let run = RunConfig::from_json(CONFIG)?.prepare(Path::new("."))?;
    let (state, trace) = run_flow(run.initial, &run.ambient, &run.flow)?;
    print!("{}", flow_summary(&state, &trace));
    Ok(())
}
