//! The ambient potential `psi = Re h / n` and its derivatives, with the
//! pluriharmonicity check that separates admissible ambients from controls.

use glmcf::ambient::{AmbientStructure, HolomorphicExponent, NegativeControl};
use num_complex::Complex64;

fn main() -> glmcf::Result<()> {
    let h = HolomorphicExponent::new(2, [(vec![1, 1], Complex64::new(1.0, 0.0))])?;
    let amb = AmbientStructure::new(h.clone());
    let p = [1.0, 1.0, 1.0, -1.0, 0.0, 0.0];
    println!("h = z1 z2 at (1+i, 1-i): psi = {}", amb.psi(&p));
    println!("grad psi = {:?}", &amb.grad_psi(&p)[..4]);
    println!("d^c psi(d/dy1) = {}", amb.dc_psi(&p, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]));
    println!("max |dd^c psi| = {:.2e}", amb.ddc_psi_residual(&p, 1e-3));

    for c in NegativeControl::CATALOG {
        let ctl = AmbientStructure::negative_control(h.clone(), c);
        println!("control {}: max |dd^c psi| = {:.2e}", c.name(), ctl.ddc_psi_residual(&p, 1e-3));
    }
    Ok(())
}
