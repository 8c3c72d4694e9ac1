//! First-order evolution of `omega` and of the induced metric along the
//! generalized flow, on a non-Lagrangian shear torus.

use glmcf::diagnostics::{check_evolution_equations, extrinsic_snapshots, named_ambient};
use glmcf::fixtures::shear_mesh;
use glmcf::flow::{stable_dt, FlowKind, FlowState};

fn main() -> glmcf::Result<()> {
    let amb = named_ambient(2, "h=0.1z1");
    let mut prev: Option<(f64, f64)> = None;
    for n in [16, 32, 64] {
        let mesh = shear_mesh(n, -0.1, 0.1)?;
        let dt = stable_dt(&FlowState::Mesh(mesh.clone()), 0.2)?;
        let r = check_evolution_equations(&extrinsic_snapshots(&mesh, &amb, FlowKind::Gmcf, dt, 2)?, &amb)?;
        print!("N = {n:>2}: omega {:.3e}, metric {:.3e}", r.omega, r.metric);
        if let Some((w, g)) = prev {
            print!("  orders {:.2}, {:.2}", (w / r.omega).log2(), (g / r.metric).log2());
        }
        println!();
        prev = Some((r.omega, r.metric));
    }
    Ok(())
}
