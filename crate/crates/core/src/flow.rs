//! Explicit time integration of mean curvature flow, generalized mean
//! curvature flow and the integrated scalar flow `du/dt = theta`.
//!
//! The time step follows a parabolic CFL rule
//! `dt = cfl * h_min^2 / max(1, curvature scale)`, where `h_min` is the
//! shortest physical edge (extrinsic flows) or the grid step (scalar flow),
//! and the curvature scale is `sup |II|_g` or `sup |Hess u|` respectively.

use std::f64::consts::TAU;
use std::io::Write;

use crate::ambient::{AmbientStructure, ConformalMetric};
use crate::error::{Error, Result};
use crate::immersion::snapshot::Snapshot;
use crate::immersion::{area_element, curve_local, velocity, Frame, VelocityKind};
use crate::immersion::{CurveState, GraphState, LagrangianState, MeshState, PeriodicImmersion, Tolerances};
use crate::linalg::{axpy, dot, norm, MAX_DIM};

use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    /// `dF/dt = H`
    Mcf,
    /// `dF/dt = K`
    Gmcf,
    /// `du/dt = theta` on a graph
    Scalar,
}

impl FlowKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mcf => "mcf",
            Self::Gmcf => "gmcf",
            Self::Scalar => "scalar",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

/// Thresholds that end a run early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopTolerances {
    pub eps_det: f64,
    pub graph_cap: f64,
    /// Largest admissible `|K|` (or `|H|` for mean curvature flow).
    pub max_velocity: f64,
}

impl Default for StopTolerances {
    fn default() -> Self {
        let t = Tolerances::default();
        Self { eps_det: t.eps_det, graph_cap: t.graph_cap, max_velocity: 1e6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub kind: FlowKind,
    pub t_end: f64,
    pub cfl: f64,
    pub integrator: Integrator,
    /// Record sampled diagnostics every this many steps; 0 disables.
    pub snapshot_every: usize,
    pub stop: StopTolerances,
}

impl FlowConfig {
    pub fn new(kind: FlowKind, t_end: f64) -> Self {
        Self { kind, t_end, cfl: 0.2, integrator: Integrator::Rk4, snapshot_every: 0, stop: StopTolerances::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("t_end must be finite and >= 0, got {}", self.t_end)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(Error::InvalidInput(format!("cfl must lie in (0, 0.5], got {}", self.cfl)));
        }
        let s = &self.stop;
        if !(s.eps_det > 0.0 && s.graph_cap > 0.0 && s.max_velocity > 0.0) {
            return Err(Error::InvalidInput("stop tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// The three state representations a flow can evolve.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowState {
    Curve(CurveState),
    Mesh(MeshState),
    Graph(GraphState),
}

impl FlowState {
    pub fn n(&self) -> usize {
        match self {
            Self::Curve(_) => 1,
            Self::Mesh(_) => 2,
            Self::Graph(g) => g.n(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Curve(_) => "curve",
            Self::Mesh(_) => "mesh",
            Self::Graph(_) => "graph",
        }
    }

    /// The state as an immersion (graphs are sampled through `x + i grad u`).
    pub fn to_immersion(&self) -> PeriodicImmersion {
        match self {
            Self::Curve(c) => c.as_immersion().clone(),
            Self::Mesh(m) => m.as_immersion().clone(),
            Self::Graph(g) => g.to_immersion(),
        }
    }

    fn set_tolerances(&mut self, t: Tolerances) {
        match self {
            Self::Curve(c) => {
                *c = CurveState::from_immersion(c.as_immersion().clone().with_tolerances(t)).expect("curve")
            }
            Self::Mesh(m) => *m = MeshState::from_immersion(m.as_immersion().clone().with_tolerances(t)).expect("mesh"),
            Self::Graph(g) => g.set_tolerances(t),
        }
    }

    fn lagrangian_angle(&self, ambient: &AmbientStructure) -> Result<crate::immersion::LagrangianAngle> {
        match self {
            Self::Curve(c) => c.lagrangian_angle(ambient),
            Self::Mesh(m) => m.lagrangian_angle(ambient),
            Self::Graph(g) => g.lagrangian_angle(ambient),
        }
    }
}

/// States evolved by the extrinsic flows.
pub trait Extrinsic: Sized {
    fn immersion_ref(&self) -> &PeriodicImmersion;
    fn rebuild(&self, imm: PeriodicImmersion) -> Self;
}

impl Extrinsic for PeriodicImmersion {
    fn immersion_ref(&self) -> &PeriodicImmersion {
        self
    }
    fn rebuild(&self, imm: PeriodicImmersion) -> Self {
        imm
    }
}

impl Extrinsic for CurveState {
    fn immersion_ref(&self) -> &PeriodicImmersion {
        self.as_immersion()
    }
    fn rebuild(&self, imm: PeriodicImmersion) -> Self {
        CurveState::from_immersion(imm).expect("one-dimensional")
    }
}

impl Extrinsic for MeshState {
    fn immersion_ref(&self) -> &PeriodicImmersion {
        self.as_immersion()
    }
    fn rebuild(&self, imm: PeriodicImmersion) -> Self {
        MeshState::from_immersion(imm).expect("two-dimensional")
    }
}

fn extrinsic_step(
    imm: &PeriodicImmersion,
    ambient: &AmbientStructure,
    dt: f64,
    integrator: Integrator,
    kind: VelocityKind,
) -> Result<PeriodicImmersion> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let v = |s: &PeriodicImmersion| velocity(s, ambient, kind);
    let next = match integrator {
        Integrator::Euler => imm.displaced(&v(imm)?, dt),
        Integrator::Rk4 => {
            let k1 = v(imm)?;
            let k2 = v(&imm.displaced(&k1, 0.5 * dt))?;
            let k3 = v(&imm.displaced(&k2, 0.5 * dt))?;
            let k4 = v(&imm.displaced(&k3, dt))?;
            let points = imm
                .points()
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    std::array::from_fn(|c| p[c] + dt / 6.0 * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]))
                })
                .collect();
            imm.with_points(points)
        }
    };
    next.check_immersed()?;
    Ok(next)
}

/// One step of `dF/dt = H`.
pub fn step_mcf<S: Extrinsic>(state: &S, ambient: &AmbientStructure, dt: f64, integrator: Integrator) -> Result<S> {
    let imm = extrinsic_step(state.immersion_ref(), ambient, dt, integrator, VelocityKind::Mean)?;
    Ok(state.rebuild(imm))
}

/// One step of `dF/dt = K`.
pub fn step_gmcf<S: Extrinsic>(state: &S, ambient: &AmbientStructure, dt: f64, integrator: Integrator) -> Result<S> {
    let imm = extrinsic_step(state.immersion_ref(), ambient, dt, integrator, VelocityKind::Generalized)?;
    Ok(state.rebuild(imm))
}

/// Time derivative of `(v, b)` under `du/dt = theta`. The linear part of
/// `theta` across the period lattice feeds the background slope `b`.
fn scalar_rate(graph: &GraphState, ambient: &AmbientStructure) -> Result<(Vec<f64>, [f64; MAX_DIM])> {
    let theta = graph.angle_values(ambient)?;
    let inc = graph.angle_period_increments(ambient)?;
    let slope: [f64; MAX_DIM] = std::array::from_fn(|a| inc[a] / TAU);
    let grid = graph.grid();
    let rate = theta
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let x = grid.coords(i);
            t - (0..graph.n()).map(|a| slope[a] * x[a]).sum::<f64>()
        })
        .collect();
    Ok((rate, slope))
}

fn graph_plus(graph: &GraphState, s: f64, rate: &(Vec<f64>, [f64; MAX_DIM])) -> GraphState {
    let mut g = graph.clone();
    for (u, r) in g.u_mut().iter_mut().zip(&rate.0) {
        *u += s * r;
    }
    for (b, r) in g.background_slope_mut().iter_mut().zip(&rate.1) {
        *b += s * r;
    }
    g
}

/// One step of `du/dt = theta(u)` on the zero-Maslov branch.
pub fn step_scalar(
    graph: &GraphState,
    ambient: &AmbientStructure,
    dt: f64,
    integrator: Integrator,
) -> Result<GraphState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    match integrator {
        Integrator::Euler => Ok(graph_plus(graph, dt, &scalar_rate(graph, ambient)?)),
        Integrator::Rk4 => {
            let k1 = scalar_rate(graph, ambient)?;
            let k2 = scalar_rate(&graph_plus(graph, 0.5 * dt, &k1), ambient)?;
            let k3 = scalar_rate(&graph_plus(graph, 0.5 * dt, &k2), ambient)?;
            let k4 = scalar_rate(&graph_plus(graph, dt, &k3), ambient)?;
            let mut g = graph.clone();
            for (i, u) in g.u_mut().iter_mut().enumerate() {
                *u += dt / 6.0 * (k1.0[i] + 2.0 * k2.0[i] + 2.0 * k3.0[i] + k4.0[i]);
            }
            for (a, b) in g.background_slope_mut().iter_mut().enumerate() {
                *b += dt / 6.0 * (k1.1[a] + 2.0 * k2.1[a] + 2.0 * k3.1[a] + k4.1[a]);
            }
            // surface the graph condition of the new state immediately
            for i in 0..g.len() {
                g.hessian_eigenvalues(i)?;
            }
            Ok(g)
        }
    }
}

/// CFL time step for the given state.
pub fn stable_dt(state: &FlowState, cfl: f64) -> Result<f64> {
    match state {
        FlowState::Graph(g) => {
            let h = g.grid().min_spacing();
            Ok(cfl * h * h / g.max_hessian_eigenvalue().max(1.0))
        }
        FlowState::Curve(_) | FlowState::Mesh(_) => {
            let imm = state.to_immersion();
            let h = imm.min_edge_length();
            let mut curv = 0.0f64;
            for i in 0..imm.len() {
                curv = curv.max(Frame::at(&imm, i)?.second_fundamental_norm());
            }
            Ok(cfl * h * h / curv.max(1.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedTEnd,
    Singularity,
    GraphViolation,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Self::ReachedTEnd => "reached_t_end",
            Self::Singularity => "singularity",
            Self::GraphViolation => "graph_violation",
        }
    }

    fn from_error(e: &Error) -> Self {
        match e {
            Error::GraphConditionViolated { .. } | Error::AperiodicAngle { .. } => Self::GraphViolation,
            _ => Self::Singularity,
        }
    }
}

/// Functionals recorded after every accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub vol_bar: f64,
    pub vol_tilde: f64,
    pub vol_hat: f64,
    pub max_omega_sq: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub max_k: f64,
    /// Step that led to this row; zero for the initial row.
    pub dt: f64,
}

impl TraceRow {
    pub const HEADER: [&'static str; 9] =
        ["t", "vol_bar", "vol_tilde", "vol_hat", "max_omega_sq", "theta_min", "theta_max", "max_K", "dt"];

    pub fn values(&self) -> [f64; 9] {
        [
            self.t,
            self.vol_bar,
            self.vol_tilde,
            self.vol_hat,
            self.max_omega_sq,
            self.theta_min,
            self.theta_max,
            self.max_k,
            self.dt,
        ]
    }
}

/// `alpha_K + d theta` measured on a sampled step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledResidual {
    pub step: usize,
    pub t: f64,
    pub alpha_k_dtheta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub rows: Vec<TraceRow>,
    pub termination: Termination,
    pub message: Option<String>,
    pub steps: usize,
    /// Steps after which `Vol_tilde` grew by more than the relative
    /// tolerance, tracked for generalized and scalar runs in admissible
    /// ambients.
    pub volume_increases: Vec<usize>,
    pub sampled: Vec<SampledResidual>,
}

/// Relative per-step tolerance on growth of `Vol_tilde`.
pub const VOLUME_MONOTONE_TOL: f64 = 1e-12;

impl FlowTrace {
    pub fn final_time(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.t)
    }

    pub fn max_omega_sq(&self) -> f64 {
        self.rows.iter().map(|r| r.max_omega_sq).fold(0.0, f64::max)
    }
}

/// Trace row plus the quantities the step-size and stop rules need.
struct Assessment {
    row: TraceRow,
    max_h: f64,
    /// `sup |II|_g` for immersions, `sup |Hess u|` for graphs.
    curvature_scale: f64,
    /// Shortest physical edge for immersions, grid step for graphs.
    spacing: f64,
}

impl Assessment {
    fn dt(&self, cfl: f64) -> f64 {
        cfl * self.spacing * self.spacing / self.curvature_scale.max(1.0)
    }
}

fn assess(state: &FlowState, ambient: &AmbientStructure) -> Result<Assessment> {
    let sampled;
    let imm = match state {
        FlowState::Curve(c) => c.as_immersion(),
        FlowState::Mesh(m) => m.as_immersion(),
        FlowState::Graph(g) => {
            sampled = g.to_immersion();
            &sampled
        }
    };
    let n = imm.n() as f64;
    let nodes = (0..imm.len())
        .into_par_iter()
        .with_min_len(crate::immersion::PAR_MIN_LEN)
        .map(|i| {
            let p = imm.point(i);
            let area = area_element(imm, i);
            if imm.n() == 1 {
                // |II| = |H| and omega vanishes on a curve
                let (t, g, h) = curve_local(imm, i)?;
                let y = ambient.grad_psi(p);
                let k = axpy(&h, -1.0, &axpy(&y, -dot(&t, &y) / g, &t));
                return Ok([
                    area,
                    area * ambient.volume_weight(p, ConformalMetric::Tilde),
                    area * ambient.volume_weight(p, ConformalMetric::Hat),
                    0.0,
                    norm(&h),
                    norm(&k),
                    norm(&h),
                ]);
            }
            let f = Frame::at(imm, i)?;
            let h = f.mean_curvature();
            let k = axpy(&h, -n, &f.normal(&ambient.grad_psi(p)));
            Ok([
                area,
                area * ambient.volume_weight(p, ConformalMetric::Tilde),
                area * ambient.volume_weight(p, ConformalMetric::Hat),
                f.omega_norm_sq(&f.omega()),
                norm(&h),
                norm(&k),
                f.second_fundamental_norm(),
            ])
        })
        .collect::<Result<Vec<[f64; 7]>>>()?;
    let cell = imm.grid().cell_volume();
    let mut sums = [0.0; 3];
    let mut maxima = [0.0f64; 4];
    for v in &nodes {
        for c in 0..3 {
            sums[c] += v[c];
        }
        for c in 0..4 {
            maxima[c] = maxima[c].max(v[3 + c]);
        }
    }
    let (theta_min, theta_max) = match state.lagrangian_angle(ambient) {
        Ok(a) => a.range(),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let (curvature_scale, spacing) = match state {
        FlowState::Graph(g) => (g.max_hessian_eigenvalue(), g.grid().min_spacing()),
        _ => (maxima[3], imm.min_edge_length()),
    };
    Ok(Assessment {
        row: TraceRow {
            t: 0.0,
            vol_bar: sums[0] * cell,
            vol_tilde: sums[1] * cell,
            vol_hat: sums[2] * cell,
            max_omega_sq: maxima[0],
            theta_min,
            theta_max,
            max_k: maxima[2],
            dt: 0.0,
        },
        max_h: maxima[1],
        curvature_scale,
        spacing,
    })
}

/// Evaluates the trace functionals of a state.
pub fn measure(state: &FlowState, ambient: &AmbientStructure) -> Result<TraceRow> {
    Ok(assess(state, ambient)?.row)
}

fn advance(state: &FlowState, ambient: &AmbientStructure, config: &FlowConfig, dt: f64) -> Result<FlowState> {
    let i = config.integrator;
    Ok(match (state, config.kind) {
        (FlowState::Curve(c), FlowKind::Mcf) => FlowState::Curve(step_mcf(c, ambient, dt, i)?),
        (FlowState::Curve(c), FlowKind::Gmcf) => FlowState::Curve(step_gmcf(c, ambient, dt, i)?),
        (FlowState::Mesh(m), FlowKind::Mcf) => FlowState::Mesh(step_mcf(m, ambient, dt, i)?),
        (FlowState::Mesh(m), FlowKind::Gmcf) => FlowState::Mesh(step_gmcf(m, ambient, dt, i)?),
        (FlowState::Graph(g), FlowKind::Scalar) => FlowState::Graph(step_scalar(g, ambient, dt, i)?),
        _ => unreachable!("checked during initialization"),
    })
}

/// Runs a flow to `t_end` or until it breaks down.
pub fn run_flow(initial: FlowState, ambient: &AmbientStructure, config: &FlowConfig) -> Result<(FlowState, FlowTrace)> {
    run_flow_with(initial, ambient, config, |_, _, _| {})
}

/// Like [`run_flow`], calling `observer(step, t, state)` on the initial state,
/// every `snapshot_every` steps and on the final state.
pub fn run_flow_with(
    initial: FlowState,
    ambient: &AmbientStructure,
    config: &FlowConfig,
    mut observer: impl FnMut(usize, f64, &FlowState),
) -> Result<(FlowState, FlowTrace)> {
    config.validate()?;
    let compatible = matches!(
        (&initial, config.kind),
        (FlowState::Curve(_) | FlowState::Mesh(_), FlowKind::Mcf | FlowKind::Gmcf)
            | (FlowState::Graph(_), FlowKind::Scalar)
    );
    if !compatible {
        return Err(Error::InvalidInput(format!(
            "{} flow cannot evolve a {} state",
            config.kind.name(),
            initial.kind_name()
        )));
    }
    if initial.n() != ambient.n() {
        return Err(Error::InvalidInput(format!(
            "state dimension {} does not match ambient dimension {}",
            initial.n(),
            ambient.n()
        )));
    }

    let mut state = initial;
    state.set_tolerances(Tolerances {
        eps_det: config.stop.eps_det,
        graph_cap: config.stop.graph_cap,
        ..Tolerances::default()
    });
    let track_volume = config.kind != FlowKind::Mcf && ambient.is_admissible();
    let mut trace = FlowTrace {
        rows: Vec::new(),
        termination: Termination::ReachedTEnd,
        message: None,
        steps: 0,
        volume_increases: Vec::new(),
        sampled: Vec::new(),
    };
    let stop = |trace: &mut FlowTrace, e: &Error| {
        trace.termination = Termination::from_error(e);
        trace.message = Some(e.to_string());
    };

    let mut t = 0.0;
    let mut current = match assess(&state, ambient) {
        Ok(a) => a,
        Err(e) => {
            stop(&mut trace, &e);
            return Ok((state, trace));
        }
    };
    trace.rows.push(current.row);
    observer(0, t, &state);
    sample(&mut trace, &state, ambient, config, 0, t);

    let mut step = 0;
    while t < config.t_end {
        let result = (|| -> Result<(FlowState, Assessment, f64)> {
            let speed = if config.kind == FlowKind::Mcf { current.max_h } else { current.row.max_k };
            if !(speed <= config.stop.max_velocity) {
                return Err(Error::DegenerateImmersion {
                    node: 0,
                    detail: format!("velocity {speed:.3e} exceeds cap {:.1e}", config.stop.max_velocity),
                });
            }
            let mut dt = current.dt(config.cfl);
            if t + dt >= config.t_end || config.t_end - (t + dt) < 1e-12 * config.t_end {
                dt = config.t_end - t;
            }
            let next = advance(&state, ambient, config, dt)?;
            let assessment = assess(&next, ambient)?;
            Ok((next, assessment, dt))
        })();
        let (next, assessment, dt) = match result {
            Ok(v) => v,
            Err(e) => {
                stop(&mut trace, &e);
                break;
            }
        };
        step += 1;
        t = if dt == config.t_end - t { config.t_end } else { t + dt };
        let mut row = assessment.row;
        row.t = t;
        row.dt = dt;
        let prev = trace.rows.last().expect("initial row").vol_tilde;
        if track_volume && row.vol_tilde > prev * (1.0 + VOLUME_MONOTONE_TOL) {
            trace.volume_increases.push(step);
        }
        trace.rows.push(row);
        current = assessment;
        state = next;
        trace.steps = step;
        if config.snapshot_every > 0 && step % config.snapshot_every == 0 {
            observer(step, t, &state);
            sample(&mut trace, &state, ambient, config, step, t);
        }
    }
    if config.snapshot_every == 0 || trace.steps % config.snapshot_every != 0 {
        observer(trace.steps, t, &state);
    }
    Ok((state, trace))
}

fn sample(
    trace: &mut FlowTrace,
    state: &FlowState,
    ambient: &AmbientStructure,
    config: &FlowConfig,
    step: usize,
    t: f64,
) {
    if config.snapshot_every == 0 {
        return;
    }
    let r = match state {
        FlowState::Curve(c) => crate::diagnostics::check_alpha_k_dtheta(c, ambient),
        FlowState::Mesh(m) => crate::diagnostics::check_alpha_k_dtheta(m, ambient),
        FlowState::Graph(g) => crate::diagnostics::check_alpha_k_dtheta(g, ambient),
    };
    trace.sampled.push(SampledResidual { step, t, alpha_k_dtheta: r.unwrap_or(f64::NAN) });
}

impl FlowState {
    /// Per-node snapshot; `theta` is `NaN` where no continuous angle exists.
    pub fn snapshot(&self, ambient: &AmbientStructure) -> Result<Snapshot> {
        let theta = self.lagrangian_angle(ambient).ok().map(|a| a.theta);
        let imm = self.to_immersion();
        let u = match self {
            Self::Graph(g) => Some(g.u()),
            _ => None,
        };
        Snapshot::capture(&imm, ambient, u, theta.as_deref())
    }
}

impl FlowTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let err = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TraceRow::HEADER).map_err(err)?;
        for r in &self.rows {
            w.write_record(r.values().iter().map(|v| format!("{v:.16e}"))).map_err(err)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("csv write failed: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}
