//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line
//! with its measured numbers and wall time; the test fails if any does.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` for
//! timings comparable to the budgets.

use std::time::{Duration, Instant};

use glmcf::ambient::AmbientStructure;
use glmcf::diagnostics::{
    check_alpha_k_dtheta, check_evolution_equations, check_gradient_flow, check_tilde_mean_curvature,
    circle_radius_error, extrinsic_snapshots, heat_mode_decay_error, heat_theta_residual, named_ambient,
    preservation_ceiling, preservation_pair, special_lagrangian_drift, volume_rate_error,
};
use glmcf::fixtures::{sine_graph_1d, sine_graph_2d, Fixture};
use glmcf::flow::{stable_dt, FlowKind, FlowState};
use glmcf::immersion::{CurveState, MeshState};

struct Verdict {
    id: usize,
    title: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn criterion(
    id: usize,
    title: &'static str,
    budget_secs: f64,
    body: impl FnOnce() -> Result<(bool, String), String>,
) -> Verdict {
    timed_criterion(id, title, budget_secs, || body().map(|(pass, detail)| (pass, detail, None)))
}

/// Like [`criterion`], but the body may report the duration of the part the
/// budget applies to.
fn timed_criterion(
    id: usize,
    title: &'static str,
    budget_secs: f64,
    body: impl FnOnce() -> Result<(bool, String, Option<Duration>), String>,
) -> Verdict {
    let start = Instant::now();
    let (pass, detail, timed) = body().unwrap_or_else(|e| (false, format!("error: {e}"), None));
    let elapsed = timed.unwrap_or_else(|| start.elapsed());
    Verdict { id, title, pass, detail, elapsed, budget: Duration::from_secs_f64(budget_secs) }
}

fn c1_circle() -> Result<(bool, String, Option<Duration>), String> {
    let fine = Instant::now();
    let e256 = circle_radius_error(256, 0.4).map_err(|e| e.to_string())?;
    let fine = fine.elapsed();
    let e128 = circle_radius_error(128, 0.4).map_err(|e| e.to_string())?;
    let ratio = e128 / e256;
    let pass = e256 <= 1e-3 && (3.5..=4.5).contains(&ratio);
    Ok((pass, format!("err(256)={e256:.3e} err(128)/err(256)={ratio:.3}"), Some(fine)))
}

fn c2_preservation() -> Result<(bool, String), String> {
    let (admissible, control) = preservation_pair();
    let run = |n, a: &AmbientStructure| preservation_ceiling(n, a, 0.1).map_err(|e| e.to_string());
    let a32 = run(32, &admissible)?;
    let a64 = run(64, &admissible)?;
    let c64 = run(64, &control)?;
    let contraction = a64 / a32;
    let separation = c64 / a64;
    let pass = contraction <= 0.3 && separation >= 10.0;
    Ok((
        pass,
        format!("ceiling(32)={a32:.3e} ceiling(64)={a64:.3e} ratio={contraction:.3} control(64)={c64:.3e} separation={separation:.1}"),
    ))
}

fn c3_alpha_k() -> Result<(bool, String), String> {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut record = |label: String, coarse: f64, fine: f64| {
        let p = order(coarse, fine);
        pass &= (1.7..=2.5).contains(&p);
        parts.push(format!("{label}:{p:.2}"));
    };
    let e = |r: glmcf::Result<f64>| r.map_err(|e| e.to_string());
    for h in ["h=0", "h=0.1z", "h=0.2iz"] {
        let amb = named_ambient(1, h);
        let circle = |m| e(check_alpha_k_dtheta(&CurveState::circle(1.0, m).unwrap(), &amb));
        record(format!("circle/{h}"), circle(128)?, circle(256)?);
        let graph = |m| e(check_alpha_k_dtheta(&sine_graph_1d(m, 0.1).unwrap(), &amb));
        record(format!("sine_graph_1d/{h}"), graph(128)?, graph(256)?);
    }
    for h in ["h=0", "h=0.1(z1+z2)", "h=0.2iz1"] {
        let amb = named_ambient(2, h);
        let graph = |n| e(check_alpha_k_dtheta(&sine_graph_2d(n).unwrap(), &amb));
        record(format!("sine_graph_2d/{h}"), graph(32)?, graph(64)?);
    }
    Ok((pass, format!("orders {}", parts.join(" "))))
}

fn c4_theta_heat() -> Result<(bool, String), String> {
    let amb = AmbientStructure::calabi_yau(1).map_err(|e| e.to_string())?;
    let residual = heat_theta_residual(128, 1e-3, &amb).map_err(|e| e.to_string())?;
    let decay = heat_mode_decay_error(128, 1e-3, 0.1).map_err(|e| e.to_string())?;
    let pass = residual <= 1e-6 && decay <= 1e-2;
    Ok((pass, format!("theta residual={residual:.3e} mode decay deviation={decay:.3e}")))
}

fn c5_gradient_flow() -> Result<(bool, String), String> {
    let e = |r: glmcf::Result<f64>| r.map_err(|e| e.to_string());
    let flat = named_ambient(1, "h=0");
    let circle = CurveState::circle(1.0, 256).map_err(|e| e.to_string())?;
    let g_circle = e(check_gradient_flow(&circle, &flat, 8, 1e-4))?;
    let tilted = named_ambient(2, "h=0.2iz1");
    let graph = sine_graph_2d(32).map_err(|e| e.to_string())?;
    let g_graph = e(check_gradient_flow(&graph, &tilted, 8, 1e-4))?;

    let amb1 = named_ambient(1, "h=0.1z");
    let dt = e(stable_dt(&FlowState::Curve(circle.clone()), 0.2))?;
    let v_circle = e(volume_rate_error(&circle, &amb1, dt, 10))?;
    let mesh = MeshState::from_graph(&graph).map_err(|e| e.to_string())?;
    let dt = e(stable_dt(&FlowState::Mesh(mesh.clone()), 0.2))?;
    let v_mesh = e(volume_rate_error(&mesh, &tilted, dt, 10))?;

    let pass = g_circle <= 1e-2 && g_graph <= 1e-2 && v_circle <= 1e-2 && v_mesh <= 1e-2;
    Ok((
        pass,
        format!(
            "first variation circle={g_circle:.3e} sine_graph_2d={g_graph:.3e}; volume rate circle={v_circle:.3e} mesh={v_mesh:.3e}"
        ),
    ))
}

fn c6_special_lagrangian() -> Result<(bool, String), String> {
    let mut worst = 0.0f64;
    for (n, label) in [(1, "h=0.1z"), (2, "h=0.3z1+0.2z2")] {
        let amb = named_ambient(n, label);
        worst = worst.max(special_lagrangian_drift(32, &amb, 1.0).map_err(|e| e.to_string())?);
    }
    Ok((worst <= 1e-12, format!("max(|u|, residual)={worst:.3e}")))
}

fn c7_evolution() -> Result<(bool, String), String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (fixture, h) in [(Fixture::ShearMesh, "h=0"), (Fixture::GraphMesh2d, "h=0.1z1")] {
        let amb = named_ambient(2, h);
        let run = |n: usize| -> glmcf::Result<(f64, f64)> {
            let FlowState::Mesh(mesh) = fixture.build(n)? else { unreachable!() };
            let dt = stable_dt(&FlowState::Mesh(mesh.clone()), 0.2)?;
            let r = check_evolution_equations(&extrinsic_snapshots(&mesh, &amb, FlowKind::Gmcf, dt, 2)?, &amb)?;
            Ok((r.omega, r.metric))
        };
        let (w32, g32) = run(32).map_err(|e| e.to_string())?;
        let (w64, g64) = run(64).map_err(|e| e.to_string())?;
        let (pw, pg) = (order(w32, w64), order(g32, g64));
        pass &= pw >= 1.7 && pg >= 1.7;
        parts.push(format!("{}: omega {pw:.2} metric {pg:.2}", fixture.name()));
    }
    Ok((pass, format!("orders {}", parts.join("; "))))
}

fn c8_tilde_mean_curvature() -> Result<(bool, String), String> {
    let amb = named_ambient(1, "h=z");
    let r = |m| check_tilde_mean_curvature(&CurveState::circle(1.0, m).unwrap(), &amb).map_err(|e| e.to_string());
    let (coarse, fine) = (r(128)?, r(256)?);
    let p = order(coarse, fine);
    Ok(((1.7..=2.5).contains(&p), format!("residual(128)={coarse:.3e} residual(256)={fine:.3e} order={p:.2}")))
}

#[test]
fn acceptance() {
    let verdicts = [
        timed_criterion(1, "circle shrinking (M=256 run timed)", 1.0, c1_circle),
        criterion(2, "lagrangian preservation", 60.0, c2_preservation),
        criterion(3, "alpha_K = -d theta", 10.0, c3_alpha_k),
        criterion(4, "theta heat equation", 5.0, c4_theta_heat),
        criterion(5, "gradient flow structure", 30.0, c5_gradient_flow),
        criterion(6, "special lagrangian fixed points", 2.0, c6_special_lagrangian),
        criterion(7, "evolution equations", 60.0, c7_evolution),
        criterion(8, "conformal mean curvature", 5.0, c8_tilde_mean_curvature),
    ];
    for v in &verdicts {
        let timing = if v.elapsed <= v.budget { "" } else { " (over time budget)" };
        println!(
            "{} [{}] {}: {} | {:.2}s of {:.0}s{timing}",
            if v.pass { "PASS" } else { "FAIL" },
            v.id,
            v.title,
            v.detail,
            v.elapsed.as_secs_f64(),
            v.budget.as_secs_f64(),
        );
    }
    let failed: Vec<usize> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
