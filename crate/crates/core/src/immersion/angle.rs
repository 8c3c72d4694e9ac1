//! Lagrangian angle `theta`, defined by `F^* Omega = e^{i theta + n psi} dV_g`.
//!
//! Graphs use the canonical zero-Maslov lift `Im h + sum_k arctan(lambda_k)`
//! with `lambda_k` the eigenvalues of `Hess u`. Curves and meshes take
//! `Im h + arg det(dF)` and unwrap it continuously over the grid.

use num_complex::Complex64;

use super::{CurveState, GraphState, Immersed, MeshState, PeriodicImmersion};
use crate::ambient::AmbientStructure;
use crate::error::{Error, Result};
use crate::linalg::{add, complex_det, scale, wrap_angle, Pt, MAX_DIM};

use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianAngle {
    /// Continuous lift of the angle at every node.
    pub theta: Vec<f64>,
    /// Number of turns of `arg det(dF)` around each period axis.
    pub windings: Vec<i64>,
}

impl LagrangianAngle {
    pub fn range(&self) -> (f64, f64) {
        self.theta.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)))
    }

    pub fn has_zero_maslov(&self) -> bool {
        self.windings.iter().all(|&w| w == 0)
    }
}

/// States carrying a Lagrangian angle.
pub trait LagrangianState: Immersed {
    fn lagrangian_angle(&self, ambient: &AmbientStructure) -> Result<LagrangianAngle>;

    /// Central-difference gradient `d_a theta` at every node, built from
    /// local angle increments so that no global branch is needed.
    fn angle_gradient(&self, ambient: &AmbientStructure) -> Result<Vec<[f64; MAX_DIM]>>;
}

/// `arg det(d_j z_k)` at every node.
fn jacobian_phases(imm: &PeriodicImmersion) -> Vec<f64> {
    let n = imm.n();
    let grid = imm.grid();
    (0..imm.len())
        .map(|idx| {
            let mut jac = [[Complex64::new(0.0, 0.0); MAX_DIM]; MAX_DIM];
            for j in 0..n {
                let p = imm.along(idx, j, 1);
                let m = imm.along(idx, j, -1);
                let h = 2.0 * grid.spacing(j);
                for k in 0..n {
                    jac[k][j] = Complex64::new((p[2 * k] - m[2 * k]) / h, (p[2 * k + 1] - m[2 * k + 1]) / h);
                }
            }
            complex_det(n, &jac).arg()
        })
        .collect()
}

fn immersion_angle(imm: &PeriodicImmersion, ambient: &AmbientStructure) -> Result<LagrangianAngle> {
    let n = imm.n();
    let grid = imm.grid();
    let arg = jacobian_phases(imm);
    let phase: Vec<f64> = imm.points().iter().map(|p| ambient.phase(p)).collect();

    // Unwrap along a spanning tree: each node hangs off its predecessor on
    // the first axis with a nonzero index.
    let mut theta = vec![0.0; imm.len()];
    theta[0] = phase[0] + arg[0];
    for idx in 1..imm.len() {
        let m = grid.multi_index(idx);
        let axis = (0..n).find(|&a| m[a] > 0).expect("idx > 0 has a nonzero axis");
        let (prev, _) = grid.step(idx, axis, -1);
        theta[idx] = theta[prev] + (phase[idx] - phase[prev]) + wrap_angle(arg[idx] - arg[prev]);
    }

    // Every other non-wrapping edge must agree with the local increment.
    for idx in 0..imm.len() {
        for a in 0..n {
            let (next, wrap) = grid.step(idx, a, 1);
            if wrap != 0 {
                continue;
            }
            let local = (phase[next] - phase[idx]) + wrap_angle(arg[next] - arg[idx]);
            if (theta[next] - theta[idx] - local).abs() >= PI {
                return Err(Error::BranchInconsistency { from: idx, to: next });
            }
        }
    }

    let windings = (0..n)
        .map(|a| {
            let mut total = 0.0;
            let mut idx = 0;
            for _ in 0..grid.sizes()[a] {
                let (next, _) = grid.step(idx, a, 1);
                total += wrap_angle(arg[next] - arg[idx]);
                idx = next;
            }
            (total / TAU).round() as i64
        })
        .collect();
    Ok(LagrangianAngle { theta, windings })
}

fn immersion_angle_gradient(imm: &PeriodicImmersion, ambient: &AmbientStructure) -> Vec<[f64; MAX_DIM]> {
    let n = imm.n();
    let grid = imm.grid();
    let arg = jacobian_phases(imm);
    (0..imm.len())
        .map(|idx| {
            std::array::from_fn(|a| {
                if a >= n {
                    return 0.0;
                }
                let (jp, _) = grid.step(idx, a, 1);
                let (jm, _) = grid.step(idx, a, -1);
                let dphase = ambient.phase(&imm.along(idx, a, 1)) - ambient.phase(&imm.along(idx, a, -1));
                (dphase + wrap_angle(arg[jp] - arg[jm])) / (2.0 * grid.spacing(a))
            })
        })
        .collect()
}

impl LagrangianState for PeriodicImmersion {
    fn lagrangian_angle(&self, ambient: &AmbientStructure) -> Result<LagrangianAngle> {
        immersion_angle(self, ambient)
    }

    fn angle_gradient(&self, ambient: &AmbientStructure) -> Result<Vec<[f64; MAX_DIM]>> {
        Ok(immersion_angle_gradient(self, ambient))
    }
}

impl LagrangianState for CurveState {
    fn lagrangian_angle(&self, ambient: &AmbientStructure) -> Result<LagrangianAngle> {
        immersion_angle(self.as_immersion(), ambient)
    }

    fn angle_gradient(&self, ambient: &AmbientStructure) -> Result<Vec<[f64; MAX_DIM]>> {
        Ok(immersion_angle_gradient(self.as_immersion(), ambient))
    }
}

impl LagrangianState for MeshState {
    fn lagrangian_angle(&self, ambient: &AmbientStructure) -> Result<LagrangianAngle> {
        immersion_angle(self.as_immersion(), ambient)
    }

    fn angle_gradient(&self, ambient: &AmbientStructure) -> Result<Vec<[f64; MAX_DIM]>> {
        Ok(immersion_angle_gradient(self.as_immersion(), ambient))
    }
}

impl GraphState {
    fn arctan_sum(&self, idx: usize) -> Result<f64> {
        let ev = self.hessian_eigenvalues(idx)?;
        Ok(ev[..self.n()].iter().map(|l| l.atan()).sum())
    }

    /// Position of the neighbour of `idx`, translated across the period seam.
    fn neighbor_position(&self, idx: usize, axis: usize, by: isize) -> (usize, Pt) {
        let (j, wrap) = self.grid().step(idx, axis, by);
        let mut p = self.position(j);
        if wrap != 0 {
            p = add(&p, &scale(wrap as f64, &self.periods()[axis]));
        }
        (j, p)
    }

    /// `theta = Im h(F) + sum_k arctan(lambda_k)` at every node.
    pub fn angle_values(&self, ambient: &AmbientStructure) -> Result<Vec<f64>> {
        check_dims(self.n(), ambient)?;
        (0..self.len()).map(|i| Ok(ambient.phase(&self.position(i)) + self.arctan_sum(i)?)).collect()
    }

    /// Per-axis increment of `theta` across one period, `theta(x + 2 pi e_a) - theta(x)`.
    ///
    /// The increment comes from `Im h` alone and must be the same at every
    /// node for the scalar flow to stay on the torus.
    pub fn angle_period_increments(&self, ambient: &AmbientStructure) -> Result<[f64; MAX_DIM]> {
        check_dims(self.n(), ambient)?;
        let periods = self.periods();
        let mut out = [0.0; MAX_DIM];
        for (a, s) in periods.iter().enumerate() {
            let inc = |i: usize| {
                let p = self.position(i);
                ambient.phase(&add(&p, s)) - ambient.phase(&p)
            };
            let base = inc(0);
            let mut mismatch = 0.0f64;
            for i in 1..self.len() {
                mismatch = mismatch.max((inc(i) - base).abs());
            }
            if mismatch > 1e-9 * (1.0 + base.abs()) {
                return Err(Error::AperiodicAngle { mismatch });
            }
            out[a] = base;
        }
        Ok(out)
    }
}

impl LagrangianState for GraphState {
    fn lagrangian_angle(&self, ambient: &AmbientStructure) -> Result<LagrangianAngle> {
        Ok(LagrangianAngle { theta: self.angle_values(ambient)?, windings: vec![0; self.n()] })
    }

    fn angle_gradient(&self, ambient: &AmbientStructure) -> Result<Vec<[f64; MAX_DIM]>> {
        check_dims(self.n(), ambient)?;
        let n = self.n();
        let arctan: Vec<f64> = (0..self.len()).map(|i| self.arctan_sum(i)).collect::<Result<_>>()?;
        Ok((0..self.len())
            .map(|idx| {
                std::array::from_fn(|a| {
                    if a >= n {
                        return 0.0;
                    }
                    let (jp, pp) = self.neighbor_position(idx, a, 1);
                    let (jm, pm) = self.neighbor_position(idx, a, -1);
                    let tp = ambient.phase(&pp) + arctan[jp];
                    let tm = ambient.phase(&pm) + arctan[jm];
                    (tp - tm) / (2.0 * self.grid().spacing(a))
                })
            })
            .collect())
    }
}

fn check_dims(n: usize, ambient: &AmbientStructure) -> Result<()> {
    if n != ambient.n() {
        return Err(Error::InvalidInput(format!(
            "state dimension {n} does not match ambient dimension {}",
            ambient.n()
        )));
    }
    Ok(())
}

/// `max |sin(theta - theta_0)|` with `theta_0` the circular mean of `theta`.
///
/// Zero exactly when the discrete state is special Lagrangian with phase
/// `theta_0`. Requires zero Maslov winding.
pub fn special_lagrangian_residual<S: LagrangianState + ?Sized>(state: &S, ambient: &AmbientStructure) -> Result<f64> {
    let angle = state.lagrangian_angle(ambient)?;
    if !angle.has_zero_maslov() {
        return Err(Error::NonzeroWinding { windings: angle.windings });
    }
    let (s, c) = angle.theta.iter().fold((0.0, 0.0), |(s, c), t| (s + t.sin(), c + t.cos()));
    let theta0 = s.atan2(c);
    Ok(angle.theta.iter().fold(0.0f64, |m, t| m.max((t - theta0).sin().abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::HolomorphicExponent;
    use crate::immersion::MeshState;
    use crate::linalg::ZERO_MAT;

    fn real_poly(n: usize) -> AmbientStructure {
        let mut terms = vec![];
        for k in 0..n {
            let mut idx = vec![0; n];
            idx[k] = 2;
            terms.push((idx, Complex64::new(0.3, 0.0)));
        }
        terms.push((vec![1; n], Complex64::new(-0.5, 0.0)));
        AmbientStructure::new(HolomorphicExponent::new(n, terms).unwrap())
    }

    #[test]
    fn flat_graph_has_zero_angle() {
        let g = GraphState::new(&[8, 8], vec![0.0; 64]).unwrap();
        let a = g.lagrangian_angle(&AmbientStructure::calabi_yau(2).unwrap()).unwrap();
        assert!(a.theta.iter().all(|&t| t == 0.0));
        assert_eq!(special_lagrangian_residual(&g, &real_poly(2)).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_patch_has_constant_angle() {
        let c = 0.7;
        let mut hess = ZERO_MAT;
        hess[0][0] = c;
        let g = GraphState::new(&[16], vec![0.0; 16]).unwrap().with_background(hess, [0.0; 3]).unwrap();
        let amb = AmbientStructure::calabi_yau(1).unwrap();
        let a = g.lagrangian_angle(&amb).unwrap();
        assert!(a.theta.iter().all(|t| (t - c.atan()).abs() < 1e-15));
        assert!(special_lagrangian_residual(&g, &amb).unwrap() < 1e-15);
    }

    #[test]
    fn sine_graph_is_not_special_lagrangian() {
        let eps = 0.1;
        let n = 64;
        let g = GraphState::from_fn(&[n], |x| eps * x[0].sin()).unwrap();
        let amb = AmbientStructure::calabi_yau(1).unwrap();
        let r = special_lagrangian_residual(&g, &amb).unwrap();
        // theta = arctan(D^2 u); D^2 sin = -sin * (2 - 2 cos h) / h^2, theta_0 = 0 by symmetry
        let h = TAU / n as f64;
        let damp = (2.0 - 2.0 * h.cos()) / (h * h);
        let expected = (0..n).map(|i| (-eps * damp * (h * i as f64).sin()).atan().sin().abs()).fold(0.0, f64::max);
        assert!((r - expected).abs() < 1e-12, "{r} {expected}");
        assert!(r > 0.09);
    }

    #[test]
    fn unit_circle_angle_and_winding() {
        let m = 64;
        let c = CurveState::circle(1.0, m).unwrap();
        let a = c.lagrangian_angle(&AmbientStructure::calabi_yau(1).unwrap()).unwrap();
        assert_eq!(a.windings, vec![1]);
        // oracle: e^{i theta} = gamma'/|gamma'| unwrapped node by node
        let mut prev: Option<f64> = None;
        for i in 0..m {
            let p = c.point((i + 1) % m);
            let q = c.point((i + m - 1) % m);
            let raw = (p[1] - q[1]).atan2(p[0] - q[0]);
            let lifted = match prev {
                None => raw,
                Some(t) => t + wrap_angle(raw - t),
            };
            assert!((a.theta[i] - lifted).abs() < 1e-12);
            let s = i as f64 / m as f64;
            assert!((a.theta[i] - (TAU * s + PI / 2.0)).abs() < 1e-12);
            prev = Some(lifted);
        }
        assert!(matches!(
            special_lagrangian_residual(&c, &AmbientStructure::calabi_yau(1).unwrap()),
            Err(Error::NonzeroWinding { .. })
        ));
    }

    #[test]
    fn graph_angle_matches_mesh_angle() {
        let amb = AmbientStructure::new(
            HolomorphicExponent::linear(&[Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.2)]).unwrap(),
        );
        let err = |n: usize| {
            let g = GraphState::from_fn(&[n, n], |x| 0.2 * x[0].sin() * x[1].cos()).unwrap();
            let mesh = MeshState::from_graph(&g).unwrap();
            let tg = g.lagrangian_angle(&amb).unwrap();
            let tm = mesh.lagrangian_angle(&amb).unwrap();
            assert!(tm.has_zero_maslov());
            tg.theta.iter().zip(&tm.theta).map(|(a, b)| wrap_angle(a - b).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e2 < 1e-2 && (3.5..4.5).contains(&(e1 / e2)), "{e1} {e2}");
    }

    #[test]
    fn vortex_in_jacobian_phase_reports_branch_inconsistency() {
        // det(dz) = cos x1 cos x2 + i sin x2 (1 + sin x1 / 2) vanishes at
        // isolated points, around which its phase winds.
        let mesh = MeshState::sample([10, 10], [[TAU, 0.0, 0.0, 0.0], [0.0, 0.5 * TAU, 0.0, 0.0]], |x1, x2| {
            [x1, 0.5 * x2, x1.cos() * x2.sin(), -x2.cos()]
        })
        .unwrap();
        let r = mesh.lagrangian_angle(&AmbientStructure::calabi_yau(2).unwrap());
        assert!(matches!(r, Err(Error::BranchInconsistency { .. })), "{r:?}");
    }

    #[test]
    fn nonlinear_phase_is_flagged_aperiodic() {
        let g = GraphState::from_fn(&[16], |x| 0.1 * x[0].sin()).unwrap();
        let h = HolomorphicExponent::new(1, [(vec![2], Complex64::new(0.0, 1.0))]).unwrap();
        let r = g.angle_period_increments(&AmbientStructure::new(h));
        assert!(matches!(r, Err(Error::AperiodicAngle { .. })));
        let lin = AmbientStructure::new(HolomorphicExponent::linear(&[Complex64::new(0.0, 0.2)]).unwrap());
        let inc = g.angle_period_increments(&lin).unwrap();
        assert!((inc[0] - 0.2 * TAU).abs() < 1e-12);
    }
}
