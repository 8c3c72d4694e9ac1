//! Discrete periodic immersions and their extrinsic geometry.
//!
//! Every state is sampled on a uniform periodic grid. Curves use the
//! parameter interval `[0, 1)`; graphs and meshes use `[0, 2 pi)^n`. A state
//! may be periodic only up to a translation: moving once around axis `a`
//! adds `periods[a]` to the position, which lets lines and graphs with a
//! quadratic background live on the same footing as closed curves.

mod angle;
mod geometry;
pub mod snapshot;

use std::borrow::Cow;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::linalg::{
    add, axpy, norm, scale, sub, symmetric_eigenvalues, Mat, Pt, MAX_AMBIENT, MAX_DIM, ZERO, ZERO_MAT,
};

pub use angle::{special_lagrangian_residual, LagrangianAngle, LagrangianState};
pub use geometry::{
    alpha_form, generalized_mean_curvature, induced_metric, omega_pullback, second_fundamental, volume,
    GeneralizedCurvature, NodeGeometry, OmegaPullback, SecondFundamentalData,
};
pub(crate) use geometry::{area_element, curve_local, velocity, Frame, VelocityKind, PAR_MIN_LEN};

/// Thresholds at which discrete states are declared degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Smallest admissible `det g`.
    pub eps_det: f64,
    /// Smallest admissible discrete speed `|dF| / ds` along any axis.
    pub eps_imm: f64,
    /// Largest admissible `|eigenvalue|` of `Hess u` for graphs.
    pub graph_cap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eps_det: 1e-8, eps_imm: 1e-6, graph_cap: 50.0 }
    }
}

/// A map from a periodic `n`-grid into `R^{2n} = C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicImmersion {
    grid: PeriodicGrid,
    points: Vec<Pt>,
    periods: [Pt; MAX_DIM],
    tolerances: Tolerances,
}

impl PeriodicImmersion {
    pub fn new(grid: PeriodicGrid, points: Vec<Pt>, periods: &[Pt]) -> Result<Self> {
        let n = grid.dim();
        if points.len() != grid.len() {
            return Err(Error::InvalidInput(format!("expected {} points, got {}", grid.len(), points.len())));
        }
        if periods.len() != n {
            return Err(Error::InvalidInput(format!("expected {n} period vectors, got {}", periods.len())));
        }
        let used = 2 * n;
        let clean = |p: &Pt| -> Result<Pt> {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite coordinate".into()));
            }
            let mut q = ZERO;
            q[..used].copy_from_slice(&p[..used]);
            Ok(q)
        };
        let points = points.iter().map(clean).collect::<Result<Vec<_>>>()?;
        let mut per = [ZERO; MAX_DIM];
        for (a, p) in periods.iter().enumerate() {
            per[a] = clean(p)?;
        }
        Ok(Self { grid, points, periods: per, tolerances: Tolerances::default() })
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn set_tolerances(&mut self, tolerances: Tolerances) {
        self.tolerances = tolerances;
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    /// Real dimension of the immersed manifold (complex dimension of the ambient).
    pub fn n(&self) -> usize {
        self.grid.dim()
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Pt] {
        &self.points
    }

    pub fn point(&self, idx: usize) -> &Pt {
        &self.points[idx]
    }

    pub fn periods(&self) -> &[Pt] {
        &self.periods[..self.n()]
    }

    /// Position of the node reached by `offsets`, including period translations.
    pub fn neighbor(&self, idx: usize, offsets: [isize; MAX_DIM]) -> Pt {
        let (j, wraps) = self.grid.offset(idx, offsets);
        let mut p = self.points[j];
        for a in 0..self.n() {
            if wraps[a] != 0 {
                p = add(&p, &scale(wraps[a] as f64, &self.periods[a]));
            }
        }
        p
    }

    #[inline]
    pub(crate) fn along(&self, idx: usize, axis: usize, by: isize) -> Pt {
        let (j, wrap) = self.grid.step(idx, axis, by);
        let p = self.points[j];
        if wrap == 0 {
            p
        } else {
            axpy(&p, wrap as f64, &self.periods[axis])
        }
    }

    /// `F + s * delta`, node by node, with the same periods.
    pub fn displaced(&self, delta: &[Pt], s: f64) -> Self {
        let points = self.points.iter().zip(delta).map(|(p, d)| std::array::from_fn(|k| p[k] + s * d[k])).collect();
        self.with_points(points)
    }

    pub(crate) fn with_points(&self, points: Vec<Pt>) -> Self {
        Self { grid: self.grid.clone(), points, periods: self.periods, tolerances: self.tolerances.clone() }
    }

    /// Shortest edge between consecutive nodes along any axis.
    pub fn min_edge_length(&self) -> f64 {
        let mut m = f64::INFINITY;
        for idx in 0..self.len() {
            for a in 0..self.n() {
                m = m.min(norm(&sub(&self.along(idx, a, 1), &self.points[idx])));
            }
        }
        m
    }

    /// Fails when consecutive nodes nearly coincide.
    pub fn check_immersed(&self) -> Result<()> {
        for idx in 0..self.len() {
            for a in 0..self.n() {
                let speed = norm(&sub(&self.along(idx, a, 1), &self.points[idx])) / self.grid.spacing(a);
                if !(speed >= self.tolerances.eps_imm) {
                    return Err(Error::DegenerateImmersion {
                        node: idx,
                        detail: format!("discrete speed {speed:.3e} along axis {a} below {}", self.tolerances.eps_imm),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Anything that can be viewed as a periodic immersion.
pub trait Immersed {
    fn immersion(&self) -> Cow<'_, PeriodicImmersion>;
}

impl Immersed for PeriodicImmersion {
    fn immersion(&self) -> Cow<'_, PeriodicImmersion> {
        Cow::Borrowed(self)
    }
}

/// Periodic polyline in `C = R^2`, parametrised uniformly by `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveState(PeriodicImmersion);

pub const MIN_CURVE_NODES: usize = 8;

impl CurveState {
    /// `shift` is the translation after one period; zero for closed curves.
    pub fn new(points: &[[f64; 2]], shift: [f64; 2]) -> Result<Self> {
        if points.len() < MIN_CURVE_NODES {
            return Err(Error::InvalidInput(format!(
                "curve needs at least {MIN_CURVE_NODES} nodes, got {}",
                points.len()
            )));
        }
        let grid = PeriodicGrid::new(&[points.len()], 1.0)?;
        let pts = points.iter().map(|p| to_pt(p)).collect();
        let imm = PeriodicImmersion::new(grid, pts, &[to_pt(&shift)])?;
        imm.check_immersed()?;
        Ok(Self(imm))
    }

    /// Circle of the given radius about the origin, counter-clockwise.
    pub fn circle(radius: f64, nodes: usize) -> Result<Self> {
        let pts: Vec<[f64; 2]> = (0..nodes)
            .map(|i| {
                let s = TAU * i as f64 / nodes as f64;
                [radius * s.cos(), radius * s.sin()]
            })
            .collect();
        Self::new(&pts, [0.0, 0.0])
    }

    /// The real axis `y = 0`, one period of the given length.
    pub fn line(length: f64, nodes: usize) -> Result<Self> {
        let pts: Vec<[f64; 2]> = (0..nodes).map(|i| [length * i as f64 / nodes as f64, 0.0]).collect();
        Self::new(&pts, [length, 0.0])
    }

    pub fn from_immersion(imm: PeriodicImmersion) -> Result<Self> {
        if imm.n() != 1 {
            return Err(Error::InvalidInput("curve state needs a one-dimensional grid".into()));
        }
        Ok(Self(imm))
    }

    pub fn as_immersion(&self) -> &PeriodicImmersion {
        &self.0
    }

    pub fn into_immersion(self) -> PeriodicImmersion {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        let p = self.0.point(idx);
        [p[0], p[1]]
    }

    pub fn shift(&self) -> [f64; 2] {
        let p = self.0.periods()[0];
        [p[0], p[1]]
    }

    /// Mean distance of the nodes from their centroid.
    pub fn mean_radius(&self) -> f64 {
        let m = self.len() as f64;
        let (cx, cy) = self.0.points().iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
        let (cx, cy) = (cx / m, cy / m);
        self.0.points().iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).sum::<f64>() / m
    }
}

impl Immersed for CurveState {
    fn immersion(&self) -> Cow<'_, PeriodicImmersion> {
        Cow::Borrowed(&self.0)
    }
}

/// Free periodic map from the torus `[0, 2 pi)^2` into `C^2 = R^4`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshState(PeriodicImmersion);

impl MeshState {
    pub fn new(sizes: [usize; 2], points: &[[f64; 4]], periods: [[f64; 4]; 2]) -> Result<Self> {
        let grid = PeriodicGrid::new(&sizes, TAU)?;
        let pts = points.iter().map(|p| to_pt(p)).collect();
        let imm = PeriodicImmersion::new(grid, pts, &[to_pt(&periods[0]), to_pt(&periods[1])])?;
        Self::from_immersion(imm)
    }

    /// Samples `F(x_1, x_2)` at the grid nodes.
    pub fn sample(sizes: [usize; 2], periods: [[f64; 4]; 2], f: impl Fn(f64, f64) -> [f64; 4]) -> Result<Self> {
        let grid = PeriodicGrid::new(&sizes, TAU)?;
        let pts: Vec<[f64; 4]> = (0..grid.len())
            .map(|i| {
                let x = grid.coords(i);
                f(x[0], x[1])
            })
            .collect();
        Self::new(sizes, &pts, periods)
    }

    /// Samples `x + i grad u` using the discrete gradient of the graph, so
    /// the pulled-back Kähler form vanishes up to rounding.
    pub fn from_graph(graph: &GraphState) -> Result<Self> {
        if graph.n() != 2 {
            return Err(Error::InvalidInput("mesh states are two-dimensional".into()));
        }
        Self::from_immersion(graph.to_immersion())
    }

    pub fn from_immersion(imm: PeriodicImmersion) -> Result<Self> {
        if imm.n() != 2 {
            return Err(Error::InvalidInput("mesh state needs a two-dimensional grid".into()));
        }
        Ok(Self(imm))
    }

    pub fn as_immersion(&self) -> &PeriodicImmersion {
        &self.0
    }

    pub fn into_immersion(self) -> PeriodicImmersion {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Grid step `2 pi / N` along the first axis.
    pub fn step(&self) -> f64 {
        self.0.grid().spacing(0)
    }
}

impl Immersed for MeshState {
    fn immersion(&self) -> Cow<'_, PeriodicImmersion> {
        Cow::Borrowed(&self.0)
    }
}

/// Lagrangian graph `x + i grad u(x)` over the torus `[0, 2 pi)^n`.
///
/// The potential is `u(x) = x^T A x / 2 + b . x + v(x)` with a constant
/// symmetric background Hessian `A`, background slope `b` and periodic part
/// `v` sampled on the grid. Only `v` and `b` evolve under the scalar flow.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    grid: PeriodicGrid,
    u: Vec<f64>,
    background_hessian: Mat,
    background_slope: [f64; MAX_DIM],
    tolerances: Tolerances,
}

impl GraphState {
    pub fn new(sizes: &[usize], u: Vec<f64>) -> Result<Self> {
        let grid = PeriodicGrid::new(sizes, TAU)?;
        if u.len() != grid.len() {
            return Err(Error::InvalidInput(format!("expected {} potential values, got {}", grid.len(), u.len())));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite potential value".into()));
        }
        Ok(Self {
            grid,
            u,
            background_hessian: ZERO_MAT,
            background_slope: [0.0; MAX_DIM],
            tolerances: Tolerances::default(),
        })
    }

    pub fn from_fn(sizes: &[usize], f: impl Fn(&[f64; MAX_DIM]) -> f64) -> Result<Self> {
        let grid = PeriodicGrid::new(sizes, TAU)?;
        let u = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self::new(sizes, u)
    }

    /// Adds the quadratic background `x^T A x / 2 + b . x`.
    pub fn with_background(mut self, hessian: Mat, slope: [f64; MAX_DIM]) -> Result<Self> {
        let n = self.n();
        for i in 0..MAX_DIM {
            for j in 0..MAX_DIM {
                if (i >= n || j >= n) && hessian[i][j] != 0.0 {
                    return Err(Error::InvalidInput("background Hessian exceeds the dimension".into()));
                }
                if hessian[i][j] != hessian[j][i] {
                    return Err(Error::InvalidInput("background Hessian must be symmetric".into()));
                }
            }
        }
        self.background_hessian = hessian;
        self.background_slope = slope;
        for s in &mut self.background_slope[n..] {
            *s = 0.0;
        }
        Ok(self)
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn set_tolerances(&mut self, tolerances: Tolerances) {
        self.tolerances = tolerances;
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    pub fn n(&self) -> usize {
        self.grid.dim()
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Periodic part of the potential.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub(crate) fn u_mut(&mut self) -> &mut Vec<f64> {
        &mut self.u
    }

    pub fn background_hessian(&self) -> &Mat {
        &self.background_hessian
    }

    pub fn background_slope(&self) -> &[f64; MAX_DIM] {
        &self.background_slope
    }

    pub(crate) fn background_slope_mut(&mut self) -> &mut [f64; MAX_DIM] {
        &mut self.background_slope
    }

    /// Largest `|v|` of the periodic part.
    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `A + D^2 v` with compact second differences.
    pub fn hessian(&self, idx: usize) -> Mat {
        let n = self.n();
        let mut h = self.background_hessian;
        for a in 0..n {
            for b in a..n {
                let d = self.grid.d2(&self.u, idx, a, b);
                h[a][b] += d;
                if a != b {
                    h[b][a] += d;
                }
            }
        }
        h
    }

    /// `A x + b + D v` with central differences.
    pub fn gradient(&self, idx: usize) -> [f64; MAX_DIM] {
        let n = self.n();
        let x = self.grid.coords(idx);
        std::array::from_fn(|k| {
            if k >= n {
                return 0.0;
            }
            let ax: f64 = (0..n).map(|j| self.background_hessian[k][j] * x[j]).sum();
            ax + self.background_slope[k] + self.grid.d1(&self.u, idx, k)
        })
    }

    /// Position `x + i grad u(x)` of a node, interleaved.
    pub fn position(&self, idx: usize) -> Pt {
        let x = self.grid.coords(idx);
        let grad = self.gradient(idx);
        let mut p = ZERO;
        for k in 0..self.n() {
            p[2 * k] = x[k];
            p[2 * k + 1] = grad[k];
        }
        p
    }

    /// Translation after one period along each axis: `2 pi (e_a + i A e_a)`.
    pub fn periods(&self) -> Vec<Pt> {
        let n = self.n();
        (0..n)
            .map(|a| {
                let mut s = ZERO;
                for k in 0..n {
                    s[2 * k] = if k == a { TAU } else { 0.0 };
                    s[2 * k + 1] = TAU * self.background_hessian[k][a];
                }
                s
            })
            .collect()
    }

    /// Eigenvalues of `Hess u` at a node, checked against the graph cap.
    pub fn hessian_eigenvalues(&self, idx: usize) -> Result<[f64; MAX_DIM]> {
        let ev = symmetric_eigenvalues(self.n(), &self.hessian(idx));
        for &l in &ev[..self.n()] {
            if !(l.abs() <= self.tolerances.graph_cap) {
                return Err(Error::GraphConditionViolated {
                    node: idx,
                    eigenvalue: l.abs(),
                    cap: self.tolerances.graph_cap,
                });
            }
        }
        Ok(ev)
    }

    /// Largest `|eigenvalue|` of `Hess u` over the grid.
    pub fn max_hessian_eigenvalue(&self) -> f64 {
        let n = self.n();
        (0..self.len())
            .map(|i| {
                let ev = symmetric_eigenvalues(n, &self.hessian(i));
                ev[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()))
            })
            .fold(0.0, f64::max)
    }

    pub fn to_immersion(&self) -> PeriodicImmersion {
        let points = (0..self.len()).map(|i| self.position(i)).collect();
        PeriodicImmersion::new(self.grid.clone(), points, &self.periods())
            .expect("graph sampling is always well formed")
            .with_tolerances(self.tolerances)
    }
}

impl Immersed for GraphState {
    fn immersion(&self) -> Cow<'_, PeriodicImmersion> {
        Cow::Owned(self.to_immersion())
    }
}

fn to_pt(v: &[f64]) -> Pt {
    let mut p = [0.0; MAX_AMBIENT];
    p[..v.len()].copy_from_slice(v);
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_rejects_short_and_degenerate_input() {
        let pts = [[0.0, 0.0]; 4];
        assert!(CurveState::new(&pts, [0.0, 0.0]).is_err());
        let mut pts: Vec<[f64; 2]> = (0..16).map(|i| [i as f64, 0.0]).collect();
        pts[3] = pts[2];
        assert!(matches!(CurveState::new(&pts, [16.0, 0.0]), Err(Error::DegenerateImmersion { .. })));
    }

    #[test]
    fn neighbor_applies_period_translation() {
        let line = CurveState::line(TAU, 16).unwrap();
        let imm = line.as_immersion();
        let p = imm.along(15, 0, 1);
        assert!((p[0] - TAU).abs() < 1e-12);
        let p = imm.along(0, 0, -1);
        assert!((p[0] + TAU / 16.0).abs() < 1e-12);
    }

    #[test]
    fn graph_background_enters_gradient_and_periods() {
        let c = 0.5;
        let mut a = ZERO_MAT;
        a[0][0] = c;
        let g = GraphState::new(&[16], vec![0.0; 16]).unwrap().with_background(a, [0.25, 0.0, 0.0]).unwrap();
        let x = g.grid().coords(3)[0];
        assert!((g.gradient(3)[0] - (c * x + 0.25)).abs() < 1e-14);
        assert!((g.hessian(7)[0][0] - c).abs() < 1e-14);
        let s = g.periods()[0];
        assert!((s[0] - TAU).abs() < 1e-15 && (s[1] - TAU * c).abs() < 1e-15);
    }

    #[test]
    fn graph_cap_is_enforced() {
        let g = GraphState::from_fn(&[16], |x| 100.0 * x[0].sin()).unwrap();
        assert!(matches!(g.hessian_eigenvalues(4), Err(Error::GraphConditionViolated { .. })));
    }
}
