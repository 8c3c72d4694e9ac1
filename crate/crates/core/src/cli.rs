//! Command-line front end: `flow`, `verify` and `fixtures`.
//!
//! Run configurations are JSON documents:
//!
//! ```json
//! {
//!   "ambient": { "n": 2, "coefficients": [[[1, 0], 0.1, 0.0]], "negative_control": null },
//!   "initial": { "kind": "mesh", "fixture": "graph_mesh_2d", "resolution": 32 },
//!   "flow": { "kind": "gmcf", "t_end": 0.1, "cfl": 0.2, "integrator": "rk4" },
//!   "output": { "directory": "out", "snapshot_every": 50 }
//! }
//! ```
//!
//! Coefficients are `[powers, re, im]` triples of the exponent `h`. The
//! initial state is either a built-in `fixture`, inline data (`points`,
//! `u`), or a snapshot `file`. Relative `file` and output `directory`
//! paths resolve against the config's own directory. Unknown keys are
//! rejected.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::Deserialize;

use crate::ambient::{AmbientStructure, HolomorphicExponent, NegativeControl};
use crate::diagnostics::{run_suite, Suite, DEFAULT_LADDER};
use crate::error::{Error, Result};
use crate::fixtures::Fixture;
use crate::flow::{run_flow_with, FlowConfig, FlowKind, FlowState, FlowTrace, Integrator, StopTolerances, Termination};
use crate::immersion::snapshot::Snapshot;
use crate::immersion::{CurveState, GraphState, MeshState, PeriodicImmersion};
use crate::linalg::{Mat, ZERO_MAT};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientConfig {
    pub n: usize,
    #[serde(default)]
    pub coefficients: Vec<(Vec<u32>, f64, f64)>,
    #[serde(default)]
    pub negative_control: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Curve,
    Graph,
    Mesh,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: StateKind,
    #[serde(default)]
    pub fixture: Option<String>,
    /// Nodes per axis for fixtures.
    #[serde(default)]
    pub resolution: Option<usize>,
    /// Snapshot CSV, relative to the config file.
    #[serde(default)]
    pub file: Option<PathBuf>,
    /// Curve points `[x, y]` or mesh points `[x1, y1, x2, y2]`.
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    /// Periodic part of the graph potential, axis 0 fastest.
    #[serde(default)]
    pub u: Option<Vec<f64>>,
    /// Nodes per axis for inline graph or mesh data.
    #[serde(default)]
    pub sizes: Option<Vec<usize>>,
    /// Translation after one period per axis (curves and meshes).
    #[serde(default)]
    pub periods: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub background_hessian: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub background_slope: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKindConfig {
    Mcf,
    Gmcf,
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorConfig {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub kind: FlowKindConfig,
    pub t_end: f64,
    #[serde(default)]
    pub cfl: Option<f64>,
    #[serde(default)]
    pub integrator: Option<IntegratorConfig>,
    #[serde(default)]
    pub eps_det: Option<f64>,
    #[serde(default)]
    pub graph_cap: Option<f64>,
    #[serde(default)]
    pub max_velocity: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    /// Write a snapshot every this many steps; 0 writes only the first and last.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "yes")]
    pub trace_csv: bool,
    #[serde(default = "yes")]
    pub snapshots: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ambient: AmbientConfig,
    pub initial: InitialConfig,
    pub flow: FlowSection,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Everything a flow run needs, validated.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub ambient: AmbientStructure,
    pub initial: FlowState,
    pub flow: FlowConfig,
    pub output: OutputConfig,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    pub fn ambient(&self) -> Result<AmbientStructure> {
        let a = &self.ambient;
        let terms = a.coefficients.iter().map(|(p, re, im)| (p.clone(), Complex64::new(*re, *im)));
        let e = HolomorphicExponent::new(a.n, terms)?;
        Ok(match &a.negative_control {
            None => AmbientStructure::new(e),
            Some(name) => {
                let c = NegativeControl::from_name(name).ok_or_else(|| {
                    let names: Vec<&str> = NegativeControl::CATALOG.iter().map(|c| c.name()).collect();
                    invalid(format!("unknown negative control {name:?}; expected one of {names:?}"))
                })?;
                AmbientStructure::negative_control(e, c)
            }
        })
    }

    pub fn flow_config(&self) -> Result<FlowConfig> {
        let f = &self.flow;
        let kind = match f.kind {
            FlowKindConfig::Mcf => FlowKind::Mcf,
            FlowKindConfig::Gmcf => FlowKind::Gmcf,
            FlowKindConfig::Scalar => FlowKind::Scalar,
        };
        let mut c = FlowConfig::new(kind, f.t_end);
        if let Some(cfl) = f.cfl {
            c.cfl = cfl;
        }
        c.integrator = match f.integrator {
            Some(IntegratorConfig::Euler) => Integrator::Euler,
            _ => Integrator::Rk4,
        };
        let d = StopTolerances::default();
        c.stop = StopTolerances {
            eps_det: f.eps_det.unwrap_or(d.eps_det),
            graph_cap: f.graph_cap.unwrap_or(d.graph_cap),
            max_velocity: f.max_velocity.unwrap_or(d.max_velocity),
        };
        c.snapshot_every = self.output.snapshot_every;
        c.validate()?;
        Ok(c)
    }

    /// Builds the initial state; `base` resolves relative file paths.
    pub fn initial_state(&self, base: &Path) -> Result<FlowState> {
        let i = &self.initial;
        let sources = [i.fixture.is_some(), i.file.is_some(), i.points.is_some() || i.u.is_some()];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(invalid("initial: give exactly one of fixture, file, or inline points/u"));
        }
        let state = if let Some(name) = &i.fixture {
            let fixture = Fixture::from_name(name).ok_or_else(|| invalid(format!("unknown fixture {name:?}")))?;
            let state = fixture.build(i.resolution.unwrap_or(fixture.default_resolution()))?;
            let kind = match state {
                FlowState::Curve(_) => StateKind::Curve,
                FlowState::Mesh(_) => StateKind::Mesh,
                FlowState::Graph(_) => StateKind::Graph,
            };
            if kind != i.kind {
                return Err(invalid(format!("fixture {name} is a {} state", state.kind_name())));
            }
            state
        } else if let Some(file) = &i.file {
            let path = base.join(file);
            let f = fs::File::open(&path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            self.from_snapshot(&Snapshot::read_csv(f)?)?
        } else {
            self.from_inline()?
        };
        if state.n() != self.ambient.n {
            return Err(invalid(format!(
                "initial state has dimension {} but ambient n = {}",
                state.n(),
                self.ambient.n
            )));
        }
        Ok(state)
    }

    fn background(&self, n: usize) -> Result<(Mat, [f64; 3])> {
        let i = &self.initial;
        let mut a = ZERO_MAT;
        if let Some(rows) = &i.background_hessian {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(invalid(format!("background_hessian must be {n} x {n}")));
            }
            for (r, row) in rows.iter().enumerate() {
                a[r][..n].copy_from_slice(row);
            }
        }
        let mut b = [0.0; 3];
        if let Some(s) = &i.background_slope {
            if s.len() != n {
                return Err(invalid(format!("background_slope must have {n} entries")));
            }
            b[..n].copy_from_slice(s);
        }
        Ok((a, b))
    }

    fn periods(&self, n: usize) -> Result<Vec<[f64; 4]>> {
        let mut out = vec![[0.0; 4]; n];
        if let Some(p) = &self.initial.periods {
            if p.len() != n || p.iter().any(|v| v.len() != 2 * n) {
                return Err(invalid(format!("periods must be {n} vectors of length {}", 2 * n)));
            }
            for (o, v) in out.iter_mut().zip(p) {
                o[..2 * n].copy_from_slice(v);
            }
        }
        Ok(out)
    }

    fn graph(&self, sizes: &[usize], u: Vec<f64>) -> Result<FlowState> {
        let (a, b) = self.background(sizes.len())?;
        Ok(FlowState::Graph(GraphState::new(sizes, u)?.with_background(a, b)?))
    }

    fn from_inline(&self) -> Result<FlowState> {
        let i = &self.initial;
        match i.kind {
            StateKind::Curve => {
                let pts = i.points.as_ref().ok_or_else(|| invalid("curve needs points"))?;
                let pts: Vec<[f64; 2]> = pts
                    .iter()
                    .map(|p| p.as_slice().try_into().map_err(|_| invalid("curve points are [x, y]")))
                    .collect::<Result<_>>()?;
                let s = self.periods(1)?[0];
                Ok(FlowState::Curve(CurveState::new(&pts, [s[0], s[1]])?))
            }
            StateKind::Mesh => {
                let pts = i.points.as_ref().ok_or_else(|| invalid("mesh needs points"))?;
                let sizes = i.sizes.as_ref().ok_or_else(|| invalid("mesh needs sizes"))?;
                let sizes: [usize; 2] = sizes.as_slice().try_into().map_err(|_| invalid("mesh sizes are [n1, n2]"))?;
                let pts: Vec<[f64; 4]> = pts
                    .iter()
                    .map(|p| p.as_slice().try_into().map_err(|_| invalid("mesh points are [x1, y1, x2, y2]")))
                    .collect::<Result<_>>()?;
                let p = self.periods(2)?;
                Ok(FlowState::Mesh(MeshState::new(sizes, &pts, [p[0], p[1]])?))
            }
            StateKind::Graph => {
                let u = i.u.clone().ok_or_else(|| invalid("graph needs u"))?;
                let sizes = i.sizes.clone().unwrap_or_else(|| vec![u.len()]);
                self.graph(&sizes, u)
            }
        }
    }

    fn from_snapshot(&self, snap: &Snapshot) -> Result<FlowState> {
        let sizes = snap.grid_sizes();
        let n = snap.n;
        let extent = if self.initial.kind == StateKind::Curve { 1.0 } else { std::f64::consts::TAU };
        let grid = crate::grid::PeriodicGrid::new(&sizes, extent)?;
        if grid.len() != snap.rows.len() {
            return Err(invalid("snapshot rows do not form a full grid"));
        }
        for (i, row) in snap.rows.iter().enumerate() {
            let x = grid.coords(i);
            if (0..n).any(|a| (x[a] - row.coords[a]).abs() > 1e-9 * extent) {
                return Err(invalid(format!("snapshot row {} is out of grid order", i + 1)));
            }
        }
        match self.initial.kind {
            StateKind::Graph => {
                let u: Vec<f64> = snap
                    .rows
                    .iter()
                    .map(|r| r.u.ok_or_else(|| invalid("graph snapshot needs a u column")))
                    .collect::<Result<_>>()?;
                self.graph(&sizes, u)
            }
            StateKind::Curve | StateKind::Mesh => {
                let pts = snap
                    .rows
                    .iter()
                    .map(|r| {
                        let mut p = [0.0; 6];
                        p[..2 * n].copy_from_slice(&r.position);
                        p
                    })
                    .collect();
                let periods: Vec<[f64; 6]> = self
                    .periods(n)?
                    .iter()
                    .map(|v| {
                        let mut p = [0.0; 6];
                        p[..4].copy_from_slice(v);
                        p
                    })
                    .collect();
                let imm = PeriodicImmersion::new(grid, pts, &periods)?;
                imm.check_immersed()?;
                Ok(match self.initial.kind {
                    StateKind::Curve => FlowState::Curve(CurveState::from_immersion(imm)?),
                    _ => FlowState::Mesh(MeshState::from_immersion(imm)?),
                })
            }
        }
    }

    /// Validates the whole configuration and builds the run.
    pub fn prepare(&self, base: &Path) -> Result<PreparedRun> {
        let ambient = self.ambient()?;
        let flow = self.flow_config()?;
        let initial = self.initial_state(base)?;
        let compatible = matches!(
            (&initial, flow.kind),
            (FlowState::Curve(_) | FlowState::Mesh(_), FlowKind::Mcf | FlowKind::Gmcf)
                | (FlowState::Graph(_), FlowKind::Scalar)
        );
        if !compatible {
            return Err(invalid(format!("{} flow cannot evolve a {} state", flow.kind.name(), initial.kind_name())));
        }
        Ok(PreparedRun { ambient, initial, flow, output: self.output.clone() })
    }
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[derive(Debug, Parser)]
#[command(name = "glmcf", about = "Generalized Lagrangian mean curvature flow in flat almost Calabi-Yau C^n")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a flow described by a JSON config.
    Flow {
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 1 unless the run reaches t_end.
        #[arg(long)]
        expect_completion: bool,
    },
    /// Run a diagnostics suite: identities, flows, preservation or all.
    Verify {
        #[arg(long)]
        suite: String,
        /// Comma-separated resolutions, e.g. 32,64.
        #[arg(long)]
        ladder: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a built-in initial state as a snapshot CSV.
    Fixtures {
        name: String,
        #[arg(long)]
        out: PathBuf,
        /// Nodes per axis; defaults to the fixture's own resolution.
        #[arg(long)]
        resolution: Option<usize>,
    },
}

/// Parses arguments and runs one command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match cli.command {
        Command::Flow { config, out, expect_completion } => cmd_flow(&config, out.as_deref(), expect_completion),
        Command::Verify { suite, ladder, out } => cmd_verify(&suite, ladder.as_deref(), out.as_deref()),
        Command::Fixtures { name, out, resolution } => cmd_fixtures(&name, &out, resolution),
    }
}

fn io_fail(path: &Path, e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {}: {e}", path.display());
    1
}

pub fn cmd_flow(config: &Path, out: Option<&Path>, expect_completion: bool) -> i32 {
    let prepared = fs::read_to_string(config)
        .map_err(|e| invalid(format!("{}: {e}", config.display())))
        .and_then(|text| RunConfig::from_json(&text))
        .and_then(|c| c.prepare(config.parent().unwrap_or(Path::new("."))));
    let run = match prepared {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    // a directory named in the config is relative to the config itself
    let base = config.parent().unwrap_or(Path::new("."));
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| run.output.directory.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = fs::create_dir_all(&dir) {
        return io_fail(&dir, e);
    }

    let mut write_error = None;
    let write_snaps = run.output.snapshots;
    let result = run_flow_with(run.initial, &run.ambient, &run.flow, |step, _, state| {
        if !write_snaps || write_error.is_some() {
            return;
        }
        let path = dir.join(format!("snap_{step}.csv"));
        let res = state
            .snapshot(&run.ambient)
            .map_err(|e| e.to_string())
            .and_then(|s| write_atomic(&path, s.to_csv_string().as_bytes()).map_err(|e| e.to_string()));
        if let Err(e) = res {
            write_error = Some((path, e));
        }
    });
    let (state, trace) = match result {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some((path, e)) = write_error {
        return io_fail(&path, e);
    }
    if run.output.trace_csv {
        let path = dir.join("trace.csv");
        if let Err(e) = write_atomic(&path, trace.to_csv_string().as_bytes()) {
            return io_fail(&path, e);
        }
    }
    let summary = flow_summary(&state, &trace);
    let path = dir.join("summary.txt");
    if let Err(e) = write_atomic(&path, summary.as_bytes()) {
        return io_fail(&path, e);
    }
    print!("{summary}");
    if expect_completion && trace.termination != Termination::ReachedTEnd {
        return 1;
    }
    0
}

/// Text summary of a finished run.
pub fn flow_summary(state: &FlowState, trace: &FlowTrace) -> String {
    let mut s = String::new();
    s.push_str(&format!("termination: {}\n", trace.termination.name()));
    if let Some(m) = &trace.message {
        s.push_str(&format!("message: {m}\n"));
    }
    s.push_str(&format!("steps: {}\n", trace.steps));
    s.push_str(&format!("volume_increases: {}\n", trace.volume_increases.len()));
    if let Some(r) = trace.rows.last() {
        for (name, v) in crate::flow::TraceRow::HEADER.iter().zip(r.values()) {
            s.push_str(&format!("{name}: {v:.16e}\n"));
        }
    }
    match state {
        FlowState::Graph(g) => s.push_str(&format!("max_abs_u: {:.16e}\n", g.max_abs_u())),
        FlowState::Curve(c) => s.push_str(&format!("mean_radius: {:.16e}\n", c.mean_radius())),
        FlowState::Mesh(_) => {}
    }
    s
}

pub fn cmd_verify(suite: &str, ladder: Option<&str>, out: Option<&Path>) -> i32 {
    let Some(suite_id) = Suite::from_name(suite) else {
        let names: Vec<&str> = Suite::CATALOG.iter().map(|s| s.name()).collect();
        eprintln!("error: unknown suite {suite:?}; expected one of {names:?}");
        return 2;
    };
    let ladder: Vec<usize> = match ladder {
        None => DEFAULT_LADDER.to_vec(),
        Some(text) => match text.split(',').map(|t| t.trim().parse::<usize>()).collect() {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: bad ladder {text:?}: {e}");
                return 2;
            }
        },
    };
    let report = match run_suite(suite_id, &ladder) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = fs::create_dir_all(&dir) {
        return io_fail(&dir, e);
    }
    let path = dir.join("report.csv");
    if let Err(e) = write_atomic(&path, report.to_csv_string().as_bytes()) {
        return io_fail(&path, e);
    }
    print!("{}", report.summary());
    if report.all_pass() {
        0
    } else {
        1
    }
}

pub fn cmd_fixtures(name: &str, out: &Path, resolution: Option<usize>) -> i32 {
    let Some(fixture) = Fixture::from_name(name) else {
        let names: Vec<&str> = Fixture::CATALOG.iter().map(|f| f.name()).collect();
        eprintln!("error: unknown fixture {name:?}; expected one of {names:?}");
        return 2;
    };
    let built = fixture
        .build(resolution.unwrap_or(fixture.default_resolution()))
        .and_then(|s| AmbientStructure::calabi_yau(fixture.n()).and_then(|a| s.snapshot(&a)));
    let snap = match built {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Err(e) = fs::create_dir_all(out) {
        return io_fail(out, e);
    }
    let path = out.join(format!("{name}.csv"));
    if let Err(e) = write_atomic(&path, snap.to_csv_string().as_bytes()) {
        return io_fail(&path, e);
    }
    println!("{}", path.display());
    0
}
