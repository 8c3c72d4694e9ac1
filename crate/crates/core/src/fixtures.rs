//! Built-in initial states.

use crate::error::{Error, Result};
use crate::flow::FlowState;
use crate::grid::PeriodicGrid;
use crate::immersion::{CurveState, GraphState, MeshState};

use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    /// Unit circle about the origin.
    Circle,
    /// The real axis, one period of length `2 pi`.
    Line,
    /// Flat graph `u = 0` over the 2-torus.
    Plane,
    /// `u = 0.1 sin x` over the circle.
    SineGraph1d,
    /// `u = 0.2 sin x1 cos x2` over the 2-torus.
    SineGraph2d,
    /// Non-Lagrangian mesh `x + i(B x + grad v)` with `B = [[0, -0.1], [0, 0]]`
    /// and `v = 0.1 sin x1 cos x2`; the pulled-back Kähler form is the
    /// constant `omega_12 = -0.1`.
    ShearMesh,
    /// [`Fixture::SineGraph2d`] sampled as a free mesh.
    GraphMesh2d,
}

impl Fixture {
    pub const CATALOG: [Fixture; 7] = [
        Self::Circle,
        Self::Line,
        Self::Plane,
        Self::SineGraph1d,
        Self::SineGraph2d,
        Self::ShearMesh,
        Self::GraphMesh2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Circle => "circle",
            Self::Line => "line",
            Self::Plane => "plane",
            Self::SineGraph1d => "sine_graph_1d",
            Self::SineGraph2d => "sine_graph_2d",
            Self::ShearMesh => "shear_mesh",
            Self::GraphMesh2d => "graph_mesh_2d",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::CATALOG.into_iter().find(|f| f.name() == name)
    }

    pub fn n(self) -> usize {
        match self {
            Self::Circle | Self::Line | Self::SineGraph1d => 1,
            _ => 2,
        }
    }

    /// Nodes per axis.
    pub fn default_resolution(self) -> usize {
        match self {
            Self::Circle | Self::Line => 256,
            Self::SineGraph1d => 128,
            _ => 32,
        }
    }

    pub fn build(self, resolution: usize) -> Result<FlowState> {
        let r = resolution;
        Ok(match self {
            Self::Circle => FlowState::Curve(CurveState::circle(1.0, r)?),
            Self::Line => FlowState::Curve(CurveState::line(TAU, r)?),
            Self::Plane => FlowState::Graph(GraphState::from_fn(&[r, r], |_| 0.0)?),
            Self::SineGraph1d => FlowState::Graph(sine_graph_1d(r, 0.1)?),
            Self::SineGraph2d => FlowState::Graph(sine_graph_2d(r)?),
            Self::ShearMesh => FlowState::Mesh(shear_mesh(r, -0.1, 0.1)?),
            Self::GraphMesh2d => FlowState::Mesh(MeshState::from_graph(&sine_graph_2d(r)?)?),
        })
    }

    pub fn build_default(self) -> Result<FlowState> {
        self.build(self.default_resolution())
    }
}

/// `u = amplitude * sin x` on `nodes` points.
pub fn sine_graph_1d(nodes: usize, amplitude: f64) -> Result<GraphState> {
    GraphState::from_fn(&[nodes], |x| amplitude * x[0].sin())
}

/// `u = 0.2 sin x1 cos x2` on an `nodes x nodes` grid.
pub fn sine_graph_2d(nodes: usize) -> Result<GraphState> {
    GraphState::from_fn(&[nodes, nodes], |x| 0.2 * x[0].sin() * x[1].cos())
}

/// `F = (x1 + i(shear x2 + d1 v), x2 + i d2 v)` with `v = bump sin x1 cos x2`
/// and discrete derivatives of `v`, so that `omega_12 = shear` exactly.
pub fn shear_mesh(nodes: usize, shear: f64, bump: f64) -> Result<MeshState> {
    if nodes < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 nodes per axis, got {nodes}")));
    }
    let grid = PeriodicGrid::new(&[nodes, nodes], TAU)?;
    let v: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            bump * x[0].sin() * x[1].cos()
        })
        .collect();
    let pts: Vec<[f64; 4]> = (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            [x[0], shear * x[1] + grid.d1(&v, i, 0), x[1], grid.d1(&v, i, 1)]
        })
        .collect();
    MeshState::new([nodes, nodes], &pts, [[TAU, 0.0, 0.0, 0.0], [0.0, shear * TAU, TAU, 0.0]])
}
