//! Pointwise extrinsic geometry with second-order central differences.
//!
//! The normal projection is built from the inverse induced metric
//! `P_T v = e_i g^{ij} <e_j, v>` rather than an explicit normal frame.

use rayon::prelude::*;

use super::{Immersed, PeriodicImmersion};
use crate::ambient::{AmbientStructure, ConformalMetric};
use crate::error::{Error, Result};
use crate::linalg::{apply_j, axpy, det, dot, inverse, norm, omega_bar, sub, Mat, Pt, MAX_DIM, ZERO, ZERO_MAT};

/// Per-node work below this many nodes stays on one thread; splitting tiny
/// grids costs more than it saves.
pub(crate) const PAR_MIN_LEN: usize = 1024;

/// First and second derivatives of `F` plus the induced metric at a node.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    pub n: usize,
    pub tangents: [Pt; MAX_DIM],
    pub second: [[Pt; MAX_DIM]; MAX_DIM],
    pub g: Mat,
    pub g_inv: Mat,
    pub det_g: f64,
}

impl Frame {
    #[inline]
    pub fn at(imm: &PeriodicImmersion, idx: usize) -> Result<Self> {
        let n = imm.n();
        let grid = imm.grid();
        let center = *imm.point(idx);
        let mut tangents = [ZERO; MAX_DIM];
        let mut second = [[ZERO; MAX_DIM]; MAX_DIM];
        for a in 0..n {
            let h = grid.spacing(a);
            let p = imm.along(idx, a, 1);
            let m = imm.along(idx, a, -1);
            tangents[a] = std::array::from_fn(|k| (p[k] - m[k]) / (2.0 * h));
            second[a][a] = std::array::from_fn(|k| (p[k] - 2.0 * center[k] + m[k]) / (h * h));
        }
        for a in 0..n {
            for b in a + 1..n {
                let at = |sa: isize, sb: isize| {
                    let mut o = [0; MAX_DIM];
                    o[a] = sa;
                    o[b] = sb;
                    imm.neighbor(idx, o)
                };
                let (pp, pm, mp, mm) = (at(1, 1), at(1, -1), at(-1, 1), at(-1, -1));
                let w = 4.0 * grid.spacing(a) * grid.spacing(b);
                let v: Pt = std::array::from_fn(|k| (pp[k] - pm[k] - mp[k] + mm[k]) / w);
                second[a][b] = v;
                second[b][a] = v;
            }
        }
        let mut g = ZERO_MAT;
        for i in 0..n {
            for j in 0..n {
                g[i][j] = dot(&tangents[i], &tangents[j]);
            }
        }
        let det_g = det(n, &g);
        let eps = imm.tolerances().eps_det;
        if !(det_g > eps) {
            return Err(Error::DegenerateImmersion {
                node: idx,
                detail: format!("det g = {det_g:.3e} not above {eps:.1e}"),
            });
        }
        let g_inv = inverse(n, &g)
            .ok_or_else(|| Error::DegenerateImmersion { node: idx, detail: "singular induced metric".into() })?;
        Ok(Self { n, tangents, second, g, g_inv, det_g })
    }

    pub fn tangential(&self, v: &Pt) -> Pt {
        let mut out = ZERO;
        for i in 0..self.n {
            let c: f64 = (0..self.n).map(|j| self.g_inv[i][j] * dot(&self.tangents[j], v)).sum();
            out = axpy(&out, c, &self.tangents[i]);
        }
        out
    }

    pub fn normal(&self, v: &Pt) -> Pt {
        sub(v, &self.tangential(v))
    }

    pub fn second_fundamental(&self) -> [[Pt; MAX_DIM]; MAX_DIM] {
        let mut ii = [[ZERO; MAX_DIM]; MAX_DIM];
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.normal(&self.second[i][j]);
                ii[i][j] = v;
                ii[j][i] = v;
            }
        }
        ii
    }

    /// `H = g^{ij} II_ij`
    pub fn mean_curvature(&self) -> Pt {
        let mut trace = ZERO;
        for i in 0..self.n {
            for j in 0..self.n {
                trace = axpy(&trace, self.g_inv[i][j], &self.second[i][j]);
            }
        }
        self.normal(&trace)
    }

    /// `K = H - n pi_nu(grad psi)`
    pub fn generalized_mean_curvature(&self, ambient: &AmbientStructure, p: &Pt) -> Pt {
        let h = self.mean_curvature();
        let y = self.normal(&ambient.grad_psi(p));
        axpy(&h, -(self.n as f64), &y)
    }

    /// `|II|_g = sqrt(g^{ik} g^{jl} <II_ij, II_kl>)`
    pub fn second_fundamental_norm(&self) -> f64 {
        let ii = self.second_fundamental();
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s += self.g_inv[i][k] * self.g_inv[j][l] * dot(&ii[i][j], &ii[k][l]);
                    }
                }
            }
        }
        s.max(0.0).sqrt()
    }

    pub fn omega(&self) -> Mat {
        let mut w = ZERO_MAT;
        for i in 0..self.n {
            for j in 0..self.n {
                w[i][j] = omega_bar(&self.tangents[i], &self.tangents[j]);
            }
        }
        w
    }

    /// `|omega|^2 = g^{ik} g^{jl} omega_ij omega_kl`
    pub fn omega_norm_sq(&self, w: &Mat) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s += self.g_inv[i][k] * self.g_inv[j][l] * w[i][j] * w[k][l];
                    }
                }
            }
        }
        s
    }

    /// `xi -> (omega(xi, e_1), ..., omega(xi, e_n))`
    pub fn one_form(&self, xi: &Pt) -> [f64; MAX_DIM] {
        std::array::from_fn(|i| if i < self.n { omega_bar(xi, &self.tangents[i]) } else { 0.0 })
    }
}

/// Everything pointwise about the immersion at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGeometry {
    pub position: Pt,
    pub tangents: [Pt; MAX_DIM],
    /// Raw second derivatives `d_i d_j F`.
    pub hessian: [[Pt; MAX_DIM]; MAX_DIM],
    pub metric: Mat,
    pub inverse_metric: Mat,
    pub det_metric: f64,
    pub second_fundamental: [[Pt; MAX_DIM]; MAX_DIM],
    pub mean_curvature: Pt,
    pub generalized_mean_curvature: Pt,
    /// `N_i = pi_nu(J e_i)`
    pub n_tensor: [Pt; MAX_DIM],
    /// `eta_ij = <N_i, N_j>`
    pub eta: Mat,
    /// `h_ijk = -<N_i, d_j d_k F>`
    pub h: [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM],
    pub alpha_h: [f64; MAX_DIM],
    pub alpha_k: [f64; MAX_DIM],
    pub omega: Mat,
    pub omega_norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondFundamentalData {
    pub n: usize,
    pub nodes: Vec<NodeGeometry>,
}

impl SecondFundamentalData {
    /// Largest `|h_ijk - h_jik|`, which vanishes on Lagrangian states.
    pub fn h_antisymmetry(&self) -> f64 {
        let n = self.n;
        let mut m = 0.0f64;
        for node in &self.nodes {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        m = m.max((node.h[i][j][k] - node.h[j][i][k]).abs());
                    }
                }
            }
        }
        m
    }
}

fn node_geometry(imm: &PeriodicImmersion, ambient: &AmbientStructure, idx: usize) -> Result<NodeGeometry> {
    let f = Frame::at(imm, idx)?;
    let n = f.n;
    let p = *imm.point(idx);
    let second_fundamental = f.second_fundamental();
    let mean_curvature = f.mean_curvature();
    let k = f.generalized_mean_curvature(ambient, &p);
    let mut n_tensor = [ZERO; MAX_DIM];
    for i in 0..n {
        n_tensor[i] = f.normal(&apply_j(&f.tangents[i]));
    }
    let mut eta = ZERO_MAT;
    let mut h = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
    for i in 0..n {
        for j in 0..n {
            eta[i][j] = dot(&n_tensor[i], &n_tensor[j]);
            for l in 0..n {
                h[i][j][l] = -dot(&n_tensor[i], &f.second[j][l]);
            }
        }
    }
    let omega = f.omega();
    Ok(NodeGeometry {
        position: p,
        tangents: f.tangents,
        hessian: f.second,
        metric: f.g,
        inverse_metric: f.g_inv,
        det_metric: f.det_g,
        second_fundamental,
        mean_curvature,
        generalized_mean_curvature: k,
        n_tensor,
        eta,
        h,
        alpha_h: f.one_form(&mean_curvature),
        alpha_k: f.one_form(&k),
        omega_norm_sq: f.omega_norm_sq(&omega),
        omega,
    })
}

pub(crate) fn frames(imm: &PeriodicImmersion) -> Result<Vec<Frame>> {
    (0..imm.len()).into_par_iter().with_min_len(PAR_MIN_LEN).map(|i| Frame::at(imm, i)).collect()
}

/// `g_ij = <d_i F, d_j F>` per node.
pub fn induced_metric<S: Immersed + ?Sized>(state: &S) -> Result<Vec<Mat>> {
    let imm = state.immersion();
    Ok(frames(&imm)?.into_iter().map(|f| f.g).collect())
}

pub fn second_fundamental<S: Immersed + ?Sized>(
    state: &S,
    ambient: &AmbientStructure,
) -> Result<SecondFundamentalData> {
    let imm = state.immersion();
    check_ambient(&imm, ambient)?;
    let nodes = (0..imm.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|i| node_geometry(&imm, ambient, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(SecondFundamentalData { n: imm.n(), nodes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedCurvature {
    pub k: Vec<Pt>,
    pub alpha_k: Vec<[f64; MAX_DIM]>,
}

pub fn generalized_mean_curvature<S: Immersed + ?Sized>(
    state: &S,
    ambient: &AmbientStructure,
) -> Result<GeneralizedCurvature> {
    let imm = state.immersion();
    check_ambient(&imm, ambient)?;
    let pairs = (0..imm.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|i| {
            let f = Frame::at(&imm, i)?;
            let k = f.generalized_mean_curvature(ambient, imm.point(i));
            Ok((k, f.one_form(&k)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (k, alpha_k) = pairs.into_iter().unzip();
    Ok(GeneralizedCurvature { k, alpha_k })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaPullback {
    pub omega: Vec<Mat>,
    pub norm_sq: Vec<f64>,
}

impl OmegaPullback {
    pub fn max_abs(&self) -> f64 {
        self.omega.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_norm_sq(&self) -> f64 {
        self.norm_sq.iter().copied().fold(0.0, f64::max)
    }
}

/// `omega_ij = omega(d_i F, d_j F)`; identically zero for curves.
pub fn omega_pullback<S: Immersed + ?Sized>(state: &S) -> Result<OmegaPullback> {
    let imm = state.immersion();
    let fs = frames(&imm)?;
    let omega: Vec<Mat> = fs.iter().map(Frame::omega).collect();
    let norm_sq = fs.iter().zip(&omega).map(|(f, w)| f.omega_norm_sq(w)).collect();
    Ok(OmegaPullback { omega, norm_sq })
}

/// Relative tolerance on the tangential part of a field passed to [`alpha_form`].
pub const NORMAL_TOLERANCE: f64 = 1e-8;

/// `alpha_xi(e_i) = omega(xi, d_i F)` for a normal field `xi`.
pub fn alpha_form<S: Immersed + ?Sized>(state: &S, xi: &[Pt]) -> Result<Vec<[f64; MAX_DIM]>> {
    let imm = state.immersion();
    if xi.len() != imm.len() {
        return Err(Error::InvalidInput(format!("expected {} vectors, got {}", imm.len(), xi.len())));
    }
    let fs = frames(&imm)?;
    fs.iter()
        .zip(xi)
        .enumerate()
        .map(|(node, (f, v))| {
            let tangential = norm(&f.tangential(v));
            if tangential > NORMAL_TOLERANCE * norm(v).max(1.0) {
                return Err(Error::NotNormal { node, tangential });
            }
            Ok(f.one_form(v))
        })
        .collect()
}

/// Riemann sum of the volume form induced by `which`.
///
/// The area element at a node averages `sqrt(det g)` over the `2^n`
/// one-sided difference frames, so that the first variation of the sum
/// uses compact second differences like the mean curvature does.
pub fn volume<S: Immersed + ?Sized>(state: &S, ambient: &AmbientStructure, which: ConformalMetric) -> Result<f64> {
    let imm = state.immersion();
    check_ambient(&imm, ambient)?;
    Ok(volume_of(&imm, ambient, which))
}

/// Corner-averaged area element `sqrt(det g)` at a node.
pub(crate) fn area_element(imm: &PeriodicImmersion, idx: usize) -> f64 {
    let n = imm.n();
    let center = imm.point(idx);
    let mut total = 0.0;
    for signs in 0..1usize << n {
        let mut e = [ZERO; MAX_DIM];
        for (a, ea) in e.iter_mut().enumerate().take(n) {
            let s: isize = if signs >> a & 1 == 0 { 1 } else { -1 };
            let q = imm.along(idx, a, s);
            let h = s as f64 * imm.grid().spacing(a);
            *ea = std::array::from_fn(|k| (q[k] - center[k]) / h);
        }
        let mut g = ZERO_MAT;
        for i in 0..n {
            for j in 0..n {
                g[i][j] = dot(&e[i], &e[j]);
            }
        }
        total += det(n, &g).max(0.0).sqrt();
    }
    total / (1usize << n) as f64
}

pub(crate) fn volume_of(imm: &PeriodicImmersion, ambient: &AmbientStructure, which: ConformalMetric) -> f64 {
    let s: f64 = (0..imm.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|i| ambient.volume_weight(imm.point(i), which) * area_element(imm, i))
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    s * imm.grid().cell_volume()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VelocityKind {
    Mean,
    Generalized,
}

/// Normal velocity field of the extrinsic flows.
pub(crate) fn velocity(imm: &PeriodicImmersion, ambient: &AmbientStructure, kind: VelocityKind) -> Result<Vec<Pt>> {
    if imm.n() == 1 && kind == VelocityKind::Mean {
        return (0..imm.len())
            .into_par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|i| curve_mean_curvature(imm, i))
            .collect();
    }
    (0..imm.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|i| {
            let f = Frame::at(imm, i)?;
            Ok(match kind {
                VelocityKind::Mean => f.mean_curvature(),
                VelocityKind::Generalized => f.generalized_mean_curvature(ambient, imm.point(i)),
            })
        })
        .collect()
}

/// Unit-free tangent, `|F'|^2` and `H` of a curve without assembling a full
/// [`Frame`]; same stencils.
pub(crate) fn curve_local(imm: &PeriodicImmersion, idx: usize) -> Result<(Pt, f64, Pt)> {
    let h = imm.grid().spacing(0);
    let c = imm.point(idx);
    let p = imm.along(idx, 0, 1);
    let m = imm.along(idx, 0, -1);
    let t: Pt = std::array::from_fn(|k| (p[k] - m[k]) / (2.0 * h));
    let s: Pt = std::array::from_fn(|k| (p[k] - 2.0 * c[k] + m[k]) / (h * h));
    let g = dot(&t, &t);
    let eps = imm.tolerances().eps_det;
    if !(g > eps) {
        return Err(Error::DegenerateImmersion { node: idx, detail: format!("det g = {g:.3e} not above {eps:.1e}") });
    }
    let along = dot(&t, &s) / g;
    Ok((t, g, std::array::from_fn(|k| (s[k] - along * t[k]) / g)))
}

fn curve_mean_curvature(imm: &PeriodicImmersion, idx: usize) -> Result<Pt> {
    Ok(curve_local(imm, idx)?.2)
}

pub(crate) fn check_ambient(imm: &PeriodicImmersion, ambient: &AmbientStructure) -> Result<()> {
    if imm.n() != ambient.n() {
        return Err(Error::InvalidInput(format!(
            "state dimension {} does not match ambient dimension {}",
            imm.n(),
            ambient.n()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::{HolomorphicExponent, NegativeControl};
    use crate::immersion::{CurveState, GraphState, MeshState};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn linear(c: &[(f64, f64)]) -> AmbientStructure {
        let cs: Vec<Complex64> = c.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
        AmbientStructure::new(HolomorphicExponent::linear(&cs).unwrap())
    }

    #[test]
    fn curve_shortcut_matches_frame() {
        let pts: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let t = TAU * i as f64 / 40.0;
                [t.cos() * (1.0 + 0.2 * (3.0 * t).sin()), t.sin()]
            })
            .collect();
        let c = CurveState::new(&pts, [0.0, 0.0]).unwrap();
        let imm = c.as_immersion();
        for i in 0..imm.len() {
            let a = curve_mean_curvature(imm, i).unwrap();
            let b = Frame::at(imm, i).unwrap().mean_curvature();
            for k in 0..6 {
                assert!((a[k] - b[k]).abs() < 1e-10 * (1.0 + b[k].abs()));
            }
        }
    }

    #[test]
    fn flat_graph_has_identity_metric_and_no_curvature() {
        let g = GraphState::new(&[8, 8], vec![0.0; 64]).unwrap();
        let amb = AmbientStructure::calabi_yau(2).unwrap();
        for m in induced_metric(&g).unwrap() {
            assert_eq!(m[0][0], 1.0);
            assert_eq!(m[1][1], 1.0);
            assert_eq!(m[0][1], 0.0);
        }
        let sff = second_fundamental(&g, &amb).unwrap();
        for node in &sff.nodes {
            assert_eq!(node.mean_curvature, ZERO);
            assert!(node.second_fundamental.iter().flatten().all(|v| *v == ZERO));
        }
    }

    #[test]
    fn circle_speed_squared() {
        let r = 1.5;
        for m in [64, 128] {
            let c = CurveState::circle(r, m).unwrap();
            let g = induced_metric(&c).unwrap();
            let exact = (TAU * r).powi(2);
            let err = (g[0][0][0] - exact).abs();
            // |D gamma| = r sin(2 pi / M) M
            assert!(err < 50.0 / (m * m) as f64 * exact, "M={m}: {err}");
        }
    }

    #[test]
    fn sine_graph_metric_matches_closed_form() {
        let eps = 0.3;
        let err = |n: usize| {
            let g = GraphState::from_fn(&[n], |x| eps * x[0].sin()).unwrap();
            let metric = induced_metric(&g).unwrap();
            (0..n)
                .map(|i| {
                    let x = g.grid().coords(i)[0];
                    let upp = -eps * x.sin();
                    (metric[i][0][0] - (1.0 + upp * upp)).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e2 < 1e-2 && (3.5..4.5).contains(&(e1 / e2)), "{e1} {e2}");
    }

    #[test]
    fn circle_mean_curvature_points_inward_with_unit_over_r() {
        let r = 2.0;
        let c = CurveState::circle(r, 256).unwrap();
        let amb = AmbientStructure::calabi_yau(1).unwrap();
        let sff = second_fundamental(&c, &amb).unwrap();
        for node in &sff.nodes {
            let h = node.mean_curvature;
            assert!((norm(&h) - 1.0 / r).abs() < 1e-4);
            // antiparallel to the position vector
            let cos = dot(&h, &node.position) / (norm(&h) * norm(&node.position));
            assert!((cos + 1.0).abs() < 1e-12);
        }
    }

    /// The curve `(x, u'(x))` with `u = eps sin x` has curvature
    /// `u'''/(1 + u''^2)^{3/2}` along the normal `J T`.
    #[test]
    fn sine_graph_curvature_matches_closed_form() {
        let eps = 0.2;
        let amb = AmbientStructure::calabi_yau(1).unwrap();
        let err = |n: usize| {
            let g = GraphState::from_fn(&[n], |x| eps * x[0].sin()).unwrap();
            let sff = second_fundamental(&g, &amb).unwrap();
            let mut e = 0.0f64;
            for (i, node) in sff.nodes.iter().enumerate() {
                let x = g.grid().coords(i)[0];
                let (upp, uppp) = (-eps * x.sin(), -eps * x.cos());
                let s = (1.0 + upp * upp).sqrt();
                let kappa = uppp / s.powi(3);
                let normal = [-upp / s, 1.0 / s];
                e = e.max((node.mean_curvature[0] - kappa * normal[0]).abs());
                e = e.max((node.mean_curvature[1] - kappa * normal[1]).abs());
            }
            e
        };
        let (e1, e2) = (err(64), err(128));
        assert!((3.5..4.5).contains(&(e1 / e2)), "{e1} {e2}");
    }

    fn horizontal_line() -> CurveState {
        CurveState::line(TAU, 32).unwrap()
    }

    #[test]
    fn generalized_curvature_examples() {
        let line = horizontal_line();
        // psi = -y: gradient (0,-1) is normal, so K = (0, 1)
        let k = generalized_mean_curvature(&line, &linear(&[(0.0, 1.0)])).unwrap();
        for v in &k.k {
            assert!(v[0].abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
        }
        // psi = x: gradient is tangent
        let k = generalized_mean_curvature(&line, &linear(&[(1.0, 0.0)])).unwrap();
        assert!(k.k.iter().all(|v| norm(v) < 1e-15));

        // psi constant: K equals H bit for bit
        let c = CurveState::circle(1.0, 64).unwrap();
        let amb = AmbientStructure::calabi_yau(1).unwrap();
        let k = generalized_mean_curvature(&c, &amb).unwrap();
        let sff = second_fundamental(&c, &amb).unwrap();
        for (a, b) in k.k.iter().zip(&sff.nodes) {
            assert_eq!(*a, b.mean_curvature);
        }
    }

    fn shear_plane(n: usize) -> MeshState {
        MeshState::sample([n, n], [[TAU, 0.0, 0.0, 0.0], [0.0, 0.1 * TAU, TAU, 0.0]], |x1, x2| [x1, 0.1 * x2, x2, 0.0])
            .unwrap()
    }

    #[test]
    fn omega_pullback_examples() {
        let g = GraphState::from_fn(&[16, 16], |x| 0.3 * x[0].sin() * x[1].cos()).unwrap();
        let w = omega_pullback(&MeshState::from_graph(&g).unwrap()).unwrap();
        assert!(w.max_abs() < 1e-14);

        // F = (x1 + 0.1 i x2, x2): omega(e_1, e_2) = dx_1 ^ dy_1 (e_1, e_2) = +0.1
        let w = omega_pullback(&shear_plane(16)).unwrap();
        for m in &w.omega {
            assert!((m[0][1] - 0.1).abs() < 1e-14);
            assert!((m[1][0] + 0.1).abs() < 1e-14);
        }

        let c = CurveState::circle(1.0, 32).unwrap();
        let w = omega_pullback(&c).unwrap();
        assert!(w.norm_sq.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn analytically_sampled_graph_has_second_order_omega() {
        let max_omega = |n: usize| {
            let m = MeshState::sample([n, n], [[TAU, 0.0, 0.0, 0.0], [0.0, 0.0, TAU, 0.0]], |x1, x2| {
                // u = 0.3 sin(x1 + 2 x2)
                let u1 = 0.3 * (x1 + 2.0 * x2).cos();
                let u2 = 0.6 * (x1 + 2.0 * x2).cos();
                [x1, u1, x2, u2]
            })
            .unwrap();
            omega_pullback(&m).unwrap().max_abs()
        };
        let ratio = max_omega(32) / max_omega(64);
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn alpha_form_examples() {
        let line = horizontal_line();
        let zero = vec![ZERO; line.len()];
        assert!(alpha_form(&line, &zero).unwrap().iter().all(|a| a[0] == 0.0));

        let mut up = ZERO;
        up[1] = 1.0;
        let a = alpha_form(&line, &vec![up; line.len()]).unwrap();
        // e_1 = (2 pi, 0) in the unit-interval parameter: omega((0,1), (2 pi, 0)) = -2 pi
        for v in &a {
            assert!((v[0] + TAU).abs() < 1e-12);
        }

        let mut right = ZERO;
        right[0] = 1.0;
        assert!(matches!(alpha_form(&line, &vec![right; line.len()]), Err(Error::NotNormal { .. })));
    }

    #[test]
    fn volume_examples() {
        let circle = CurveState::circle(1.0, 256).unwrap();
        let amb = AmbientStructure::calabi_yau(1).unwrap();
        let v = volume(&circle, &amb, ConformalMetric::Bar).unwrap();
        assert!((v - TAU).abs() < 1e-3);

        let plane = GraphState::new(&[8, 8], vec![0.0; 64]).unwrap();
        let v = volume(&plane, &AmbientStructure::calabi_yau(2).unwrap(), ConformalMetric::Tilde).unwrap();
        assert!((v - TAU * TAU).abs() < 1e-12);

        // int_0^{2 pi} e^{cos s} ds = 2 pi I_0(1), computed by a fine
        // trapezoid rule (spectrally accurate for periodic integrands).
        let quad: f64 = (0..4096).map(|i| (TAU * i as f64 / 4096.0).cos().exp()).sum::<f64>() * TAU / 4096.0;
        assert!((quad - 7.954_926_521).abs() < 1e-8);
        let v = volume(&circle, &linear(&[(1.0, 0.0)]), ConformalMetric::Tilde).unwrap();
        assert!((v - quad).abs() < 2e-3, "{v} vs {quad}");
    }

    #[test]
    fn h_tensor_is_fully_symmetric_only_on_lagrangian_states() {
        let amb = AmbientStructure::calabi_yau(2).unwrap();
        let asym = |n: usize| {
            let g = GraphState::from_fn(&[n, n], |x| 0.2 * x[0].sin() * x[1].cos() + 0.1 * (2.0 * x[1]).sin()).unwrap();
            second_fundamental(&g, &amb).unwrap().h_antisymmetry()
        };
        let (a1, a2) = (asym(32), asym(64));
        assert!(a2 < 1e-2, "{a2}");
        assert!(a1 / a2 > 3.5 || a2 < 1e-13, "{a1} {a2}");

        let shear = MeshState::sample([16, 16], [[TAU, 0.0, 0.0, 0.0], [0.0, 0.1 * TAU, TAU, 0.0]], |x1, x2| {
            [x1, 0.1 * x2 + 0.2 * x1.cos(), x2, 0.1 * x2.sin()]
        })
        .unwrap();
        assert!(second_fundamental(&shear, &amb).unwrap().h_antisymmetry() > 1e-3);
    }

    #[test]
    fn negative_control_changes_k_but_not_h() {
        let g = GraphState::from_fn(&[16, 16], |x| 0.2 * x[0].sin() * x[1].cos()).unwrap();
        let amb = AmbientStructure::negative_control(HolomorphicExponent::zero(2).unwrap(), NegativeControl::CosX1);
        let sff = second_fundamental(&g, &amb).unwrap();
        let plain = second_fundamental(&g, &AmbientStructure::calabi_yau(2).unwrap()).unwrap();
        let mut differs = false;
        for (a, b) in sff.nodes.iter().zip(&plain.nodes) {
            assert_eq!(a.mean_curvature, b.mean_curvature);
            differs |= a.generalized_mean_curvature != b.generalized_mean_curvature;
        }
        assert!(differs);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn h_and_k_are_normal_and_h_is_symmetric_in_last_two(
            a in -0.3f64..0.3, b in -0.3f64..0.3, shear in -0.2f64..0.2,
            cr in -0.3f64..0.3, ci in -0.3f64..0.3,
        ) {
            let mesh = MeshState::sample([12, 12], [[TAU, 0.0, 0.0, 0.0], [0.0, shear * TAU, TAU, 0.0]], |x1, x2| {
                [x1, shear * x2 + a * x1.cos() * x2.sin(), x2, b * (x1 + x2).sin()]
            }).unwrap();
            let amb = linear(&[(cr, ci), (ci, -cr)]);
            let sff = second_fundamental(&mesh, &amb).unwrap();
            for node in &sff.nodes {
                for e in &node.tangents[..2] {
                    prop_assert!(dot(&node.mean_curvature, e).abs() < 1e-10);
                    prop_assert!(dot(&node.generalized_mean_curvature, e).abs() < 1e-10);
                }
                for i in 0..2 {
                    prop_assert!((node.h[i][0][1] - node.h[i][1][0]).abs() < 1e-12);
                    prop_assert!(node.omega[i][i] == 0.0);
                }
                prop_assert!((node.omega[0][1] + node.omega[1][0]).abs() < 1e-15);
            }
        }
    }
}
