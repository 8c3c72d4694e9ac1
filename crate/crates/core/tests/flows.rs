use std::f64::consts::TAU;

use glmcf::ambient::{AmbientStructure, ConformalMetric};
use glmcf::diagnostics::{gradient_flow_error_for, named_ambient};
use glmcf::fixtures::{sine_graph_1d, sine_graph_2d};
use glmcf::flow::{run_flow, run_flow_with, FlowConfig, FlowKind, FlowState, Integrator, Termination};
use glmcf::immersion::{generalized_mean_curvature, omega_pullback, volume, CurveState, GraphState, MeshState};

fn flat(n: usize) -> AmbientStructure {
    AmbientStructure::calabi_yau(n).unwrap()
}

#[test]
fn circle_follows_the_radius_ode_throughout() {
    let mut config = FlowConfig::new(FlowKind::Mcf, 0.3);
    config.snapshot_every = 200;
    let mut worst = 0.0f64;
    let mut seen = 0;
    let (_, trace) =
        run_flow_with(FlowState::Curve(CurveState::circle(1.0, 128).unwrap()), &flat(1), &config, |_, t, s| {
            let FlowState::Curve(c) = s else { unreachable!() };
            worst = worst.max((c.mean_radius() - (1.0 - 2.0 * t).sqrt()).abs());
            seen += 1;
        })
        .unwrap();
    assert_eq!(trace.termination, Termination::ReachedTEnd);
    assert!(seen > 3);
    assert!(worst < 1e-3, "{worst}");
    // the trace's length column is the perimeter of the shrinking circle
    let last = trace.rows.last().unwrap();
    assert!((last.t - 0.3).abs() < 1e-15);
    assert!((last.vol_bar / TAU - 0.4f64.sqrt()).abs() < 2e-3);
}

#[test]
fn straight_line_does_not_move() {
    let line = CurveState::line(TAU, 64).unwrap();
    let (state, trace) =
        run_flow(FlowState::Curve(line.clone()), &flat(1), &FlowConfig::new(FlowKind::Mcf, 0.5)).unwrap();
    assert_eq!(trace.termination, Termination::ReachedTEnd);
    assert_eq!(state, FlowState::Curve(line));
}

#[test]
fn euler_converges_to_rk4_at_first_order_in_time() {
    let run = |integrator, cfl| {
        let mut config = FlowConfig::new(FlowKind::Mcf, 0.1);
        config.integrator = integrator;
        config.cfl = cfl;
        let (s, _) = run_flow(FlowState::Curve(CurveState::circle(1.0, 64).unwrap()), &flat(1), &config).unwrap();
        let FlowState::Curve(c) = s else { unreachable!() };
        c.mean_radius()
    };
    // same spatial grid, so the gap is the Euler time error alone
    let gap = |cfl| (run(Integrator::Euler, cfl) - run(Integrator::Rk4, cfl)).abs();
    let ratio = gap(0.2) / gap(0.1);
    assert!((1.8..2.2).contains(&ratio), "{ratio}");
}

/// Piecewise-linear periodic interpolation of the graph gradient.
fn gradient_at(g: &GraphState, x: f64) -> f64 {
    let n = g.len();
    let h = TAU / n as f64;
    let s = x.rem_euclid(TAU) / h;
    let i = s.floor() as usize % n;
    let w = s - s.floor();
    (1.0 - w) * g.gradient(i)[0] + w * g.gradient((i + 1) % n)[0]
}

#[test]
fn scalar_flow_and_generalized_flow_trace_the_same_curve() {
    let amb = named_ambient(1, "h=0.1z");
    let graph = sine_graph_1d(256, 0.2).unwrap();
    let points: Vec<[f64; 2]> = (0..graph.len())
        .map(|i| {
            let p = graph.position(i);
            [p[0], p[1]]
        })
        .collect();
    let curve = CurveState::new(&points, [TAU, 0.0]).unwrap();
    let t_end = 0.05;
    let (g, _) = run_flow(FlowState::Graph(graph), &amb, &FlowConfig::new(FlowKind::Scalar, t_end)).unwrap();
    let (c, _) = run_flow(FlowState::Curve(curve), &amb, &FlowConfig::new(FlowKind::Gmcf, t_end)).unwrap();
    let (FlowState::Graph(g), FlowState::Curve(c)) = (g, c) else { unreachable!() };
    // the two differ by a tangential reparametrization only
    let mut worst = 0.0f64;
    for i in 0..c.len() {
        let [x, y] = c.point(i);
        worst = worst.max((y - gradient_at(&g, x)).abs());
    }
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn generalized_flow_decreases_tilde_volume() {
    let amb = named_ambient(2, "h=0.1(z1+z2)");
    let mesh = MeshState::from_graph(&sine_graph_2d(16).unwrap()).unwrap();
    let before = volume(&mesh, &amb, ConformalMetric::Tilde).unwrap();
    let (state, trace) = run_flow(FlowState::Mesh(mesh), &amb, &FlowConfig::new(FlowKind::Gmcf, 0.05)).unwrap();
    assert_eq!(trace.termination, Termination::ReachedTEnd);
    assert!(trace.volume_increases.is_empty());
    let FlowState::Mesh(m) = state else { unreachable!() };
    assert!(volume(&m, &amb, ConformalMetric::Tilde).unwrap() < before);
    for w in trace.rows.windows(2) {
        assert!(w[1].vol_tilde <= w[0].vol_tilde * (1.0 + 1e-12));
    }
}

#[test]
fn generalized_flow_keeps_a_lagrangian_mesh_lagrangian() {
    let amb = named_ambient(2, "h=0.2iz1");
    let mesh = MeshState::from_graph(&sine_graph_2d(32).unwrap()).unwrap();
    assert!(omega_pullback(&mesh).unwrap().max_abs() < 1e-14);
    let (state, _) = run_flow(FlowState::Mesh(mesh), &amb, &FlowConfig::new(FlowKind::Gmcf, 0.05)).unwrap();
    assert!(omega_pullback(&state.to_immersion()).unwrap().max_abs() < 1e-4);
}

#[test]
fn first_variation_away_from_the_seam() {
    // psi is not lattice periodic here, so the variation field is kept
    // away from the fundamental domain's boundary.
    let amb = named_ambient(2, "h=0.1(z1+z2)");
    let err = |n: usize| {
        let mesh = MeshState::from_graph(&sine_graph_2d(n).unwrap()).unwrap();
        let k = generalized_mean_curvature(&mesh, &amb).unwrap().k;
        let grid = mesh.as_immersion().grid().clone();
        let y: Vec<_> = (0..mesh.len())
            .map(|i| {
                let x = grid.coords(i);
                let bump = ((0.5 * x[0]).sin() * (0.5 * x[1]).sin()).powi(4);
                k[i].map(|v| bump * v)
            })
            .collect();
        gradient_flow_error_for(&mesh, &amb, &y, 1e-4).unwrap()
    };
    let (coarse, fine) = (err(32), err(64));
    assert!(fine < 1e-2, "{fine}");
    assert!(fine < coarse, "{coarse} {fine}");
}

#[test]
fn velocity_cap_stops_the_run_as_a_singularity() {
    let mut config = FlowConfig::new(FlowKind::Mcf, 0.4);
    config.stop.max_velocity = 1.5;
    let (_, trace) = run_flow(FlowState::Curve(CurveState::circle(1.0, 64).unwrap()), &flat(1), &config).unwrap();
    assert_eq!(trace.termination, Termination::Singularity);
    assert!(trace.message.is_some());
    // |H| = 1/r crosses 1.5 when r = 2/3, i.e. t = (1 - 4/9) / 2
    let t = trace.rows.last().unwrap().t;
    assert!((t - 5.0 / 18.0).abs() < 1e-2, "{t}");
}

#[test]
fn steep_graph_hits_the_graph_cap() {
    let mut config = FlowConfig::new(FlowKind::Scalar, 0.5);
    config.stop.graph_cap = 0.5;
    let g = sine_graph_1d(64, 0.6).unwrap();
    let (_, trace) = run_flow(FlowState::Graph(g), &flat(1), &config).unwrap();
    assert_eq!(trace.termination, Termination::GraphViolation);
}

#[test]
fn mismatched_state_and_flow_are_rejected() {
    let c = FlowState::Curve(CurveState::circle(1.0, 16).unwrap());
    assert!(run_flow(c.clone(), &flat(1), &FlowConfig::new(FlowKind::Scalar, 0.1)).is_err());
    assert!(run_flow(c.clone(), &flat(2), &FlowConfig::new(FlowKind::Mcf, 0.1)).is_err());
    let mut bad = FlowConfig::new(FlowKind::Mcf, 0.1);
    bad.cfl = 0.9;
    assert!(run_flow(c, &flat(1), &bad).is_err());
}
