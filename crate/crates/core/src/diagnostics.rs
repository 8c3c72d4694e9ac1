//! Numerical residuals for the structural identities of the flow, with
//! refinement-order estimates and suite reports.
//!
//! All residuals are max-norms over nodes unless a relative scale is noted.

use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ambient::{AmbientStructure, ConformalMetric, HolomorphicExponent, NegativeControl};
use crate::error::{Error, Result};
use crate::fixtures::{sine_graph_1d, sine_graph_2d, Fixture};
use crate::flow::{
    run_flow, run_flow_with, stable_dt, step_gmcf, step_mcf, step_scalar, Extrinsic, FlowConfig, FlowKind, FlowState,
    Integrator,
};
use crate::immersion::{
    generalized_mean_curvature, second_fundamental, special_lagrangian_residual, CurveState, Frame, GraphState,
    Immersed, LagrangianState, MeshState, PeriodicImmersion,
};
use crate::linalg::{dot, inverse, norm, Mat, Pt, MAX_DIM, ZERO, ZERO_MAT};

/// Seed of the random variations in [`check_gradient_flow`].
pub const GRADIENT_FLOW_SEED: u64 = 0x5EED_0F_F10E;

/// Residuals at or below this are treated as exact and skip order checks.
pub const EXACT_FLOOR: f64 = 1e-12;

/// Weights of the three-point derivative at the middle of `t`.
fn middle_derivative_weights(t: [f64; 3]) -> [f64; 3] {
    let h0 = t[1] - t[0];
    let h1 = t[2] - t[1];
    [-h1 / (h0 * (h0 + h1)), (h1 - h0) / (h0 * h1), h0 / (h1 * (h0 + h1))]
}

fn middle_window<T>(snapshots: &[(f64, T)]) -> Result<(usize, [f64; 3])> {
    if snapshots.len() < 3 {
        return Err(Error::InsufficientSnapshots { needed: 3, got: snapshots.len() });
    }
    let m = snapshots.len() / 2;
    let t = [snapshots[m - 1].0, snapshots[m].0, snapshots[m + 1].0];
    if !(t[0] < t[1] && t[1] < t[2]) {
        return Err(Error::InvalidInput("snapshot times must increase".into()));
    }
    Ok((m, middle_derivative_weights(t)))
}

/// Discrete `d alpha_H` (for `n >= 2`) together with the loop integrals
/// `oint alpha_H + 2 pi * winding` along every grid line.
pub fn check_alpha_h_closed<S: LagrangianState + ?Sized>(state: &S, ambient: &AmbientStructure) -> Result<f64> {
    let angle = state.lagrangian_angle(ambient)?;
    let imm = state.immersion();
    let data = second_fundamental(&*imm, ambient)?;
    let n = imm.n();
    let grid = imm.grid();
    let alpha: Vec<Vec<f64>> = (0..n).map(|a| data.nodes.iter().map(|g| g.alpha_h[a]).collect()).collect();

    let mut residual = 0.0f64;
    for idx in 0..imm.len() {
        for a in 0..n {
            for b in a + 1..n {
                let d = grid.d1(&alpha[b], idx, a) - grid.d1(&alpha[a], idx, b);
                residual = residual.max(d.abs());
            }
        }
    }
    for a in 0..n {
        let h = grid.spacing(a);
        let target = -std::f64::consts::TAU * angle.windings[a] as f64;
        for start in (0..imm.len()).filter(|&i| grid.multi_index(i)[a] == 0) {
            let mut idx = start;
            let mut sum = 0.0;
            for _ in 0..grid.sizes()[a] {
                sum += alpha[a][idx] * h;
                idx = grid.step(idx, a, 1).0;
            }
            residual = residual.max((sum - target).abs());
        }
    }
    Ok(residual)
}

/// `max |alpha_K + d theta|`.
pub fn check_alpha_k_dtheta<S: LagrangianState + ?Sized>(state: &S, ambient: &AmbientStructure) -> Result<f64> {
    state.lagrangian_angle(ambient)?;
    let dtheta = state.angle_gradient(ambient)?;
    let k = generalized_mean_curvature(state, ambient)?;
    let n = ambient.n();
    Ok(k.alpha_k
        .iter()
        .zip(&dtheta)
        .flat_map(|(ak, dt)| (0..n).map(move |a| (ak[a] + dt[a]).abs()))
        .fold(0.0, f64::max))
}

/// Compares `d theta / dt` at fixed grid position with
/// `Delta_g theta + n d psi(grad_g theta) + d theta(w)` at the middle of
/// three or more scalar-flow snapshots.
///
/// The last term accounts for the tangential part `w` of the graph velocity
/// `i grad theta`.
pub fn check_theta_evolution(snapshots: &[(f64, GraphState)], ambient: &AmbientStructure) -> Result<f64> {
    let (m, w) = middle_window(snapshots)?;
    let thetas: Vec<Vec<f64>> = (m - 1..=m + 1).map(|k| snapshots[k].1.angle_values(ambient)).collect::<Result<_>>()?;
    let graph = &snapshots[m].1;
    let theta = &thetas[1];
    let inc = graph.angle_period_increments(ambient)?;
    let imm = graph.to_immersion();
    let grid = graph.grid();
    let n = graph.n();
    let nf = n as f64;

    let lift = |idx: usize, o: [isize; MAX_DIM]| {
        let (j, wraps) = grid.offset(idx, o);
        theta[j] + (0..n).map(|a| wraps[a] as f64 * inc[a]).sum::<f64>()
    };
    let unit = |a: usize, s: isize| {
        let mut o = [0; MAX_DIM];
        o[a] = s;
        o
    };

    let residuals = (0..graph.len())
        .into_par_iter()
        .map(|idx| {
            let f = Frame::at(&imm, idx)?;
            let mut d1 = [0.0; MAX_DIM];
            let mut d2 = ZERO_MAT;
            for a in 0..n {
                let h = grid.spacing(a);
                let (p, q) = (lift(idx, unit(a, 1)), lift(idx, unit(a, -1)));
                d1[a] = (p - q) / (2.0 * h);
                d2[a][a] = (p - 2.0 * theta[idx] + q) / (h * h);
                for b in a + 1..n {
                    let mut o = [[0isize; MAX_DIM]; 4];
                    for (k, (sa, sb)) in [(1, 1), (1, -1), (-1, 1), (-1, -1)].into_iter().enumerate() {
                        o[k][a] = sa;
                        o[k][b] = sb;
                    }
                    let v = (lift(idx, o[0]) - lift(idx, o[1]) - lift(idx, o[2]) + lift(idx, o[3]))
                        / (4.0 * h * grid.spacing(b));
                    d2[a][b] = v;
                    d2[b][a] = v;
                }
            }
            let grad_psi = ambient.grad_psi(imm.point(idx));
            let mut ft = ZERO;
            for k in 0..n {
                ft[2 * k + 1] = d1[k];
            }
            let mut rhs = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let mut christoffel = 0.0;
                    for k in 0..n {
                        let gamma: f64 = (0..n).map(|l| f.g_inv[k][l] * dot(&f.second[i][j], &f.tangents[l])).sum();
                        christoffel += gamma * d1[k];
                    }
                    rhs += f.g_inv[i][j] * (d2[i][j] - christoffel);
                    rhs += nf * dot(&grad_psi, &f.tangents[i]) * f.g_inv[i][j] * d1[j];
                    rhs += d1[i] * f.g_inv[i][j] * dot(&ft, &f.tangents[j]);
                }
            }
            let dtheta_dt: f64 = (0..3).map(|k| w[k] * thetas[k][idx]).sum();
            Ok((dtheta_dt - rhs).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

fn random_normal_field(imm: &PeriodicImmersion, frames: &[Frame], rng: &mut ChaCha8Rng) -> Vec<Pt> {
    let dim = 2 * imm.n();
    frames
        .iter()
        .map(|f| {
            let mut y = ZERO;
            for c in y.iter_mut().take(dim) {
                *c = rng.gen_range(-1.0..=1.0);
            }
            f.normal(&y)
        })
        .collect()
}

fn tilde_volume(imm: &PeriodicImmersion, ambient: &AmbientStructure) -> Result<f64> {
    crate::immersion::volume(imm, ambient, ConformalMetric::Tilde)
}

/// `-int g_hat(K, Y) dV_hat`
fn hat_pairing(imm: &PeriodicImmersion, frames: &[Frame], k: &[Pt], y: &[Pt], ambient: &AmbientStructure) -> f64 {
    let cell = imm.grid().cell_volume();
    -frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let p = imm.point(i);
            ambient.conformal_factor(p, ConformalMetric::Hat)
                * dot(&k[i], &y[i])
                * ambient.volume_weight(p, ConformalMetric::Hat)
                * f.det_g.sqrt()
                * cell
        })
        .sum::<f64>()
}

/// First variation of `Vol_tilde` along random normal fields against
/// `-int g_hat(K, Y) dV_hat`, as a maximum relative error over trials.
pub fn check_gradient_flow<S: Immersed + ?Sized>(
    state: &S,
    ambient: &AmbientStructure,
    trials: usize,
    probe: f64,
) -> Result<f64> {
    check_gradient_flow_seeded(state, ambient, trials, probe, GRADIENT_FLOW_SEED)
}

pub fn check_gradient_flow_seeded<S: Immersed + ?Sized>(
    state: &S,
    ambient: &AmbientStructure,
    trials: usize,
    probe: f64,
    seed: u64,
) -> Result<f64> {
    if !(probe > 0.0) {
        return Err(Error::InvalidInput(format!("probe must be positive, got {probe}")));
    }
    let imm = state.immersion();
    let frames: Vec<Frame> = (0..imm.len()).map(|i| Frame::at(&imm, i)).collect::<Result<_>>()?;
    let k = generalized_mean_curvature(&*imm, ambient)?.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let y = random_normal_field(&imm, &frames, &mut rng);
        let plus = tilde_volume(&imm.displaced(&y, probe), ambient)?;
        let minus = tilde_volume(&imm.displaced(&y, -probe), ambient)?;
        worst = worst.max(variation_error(&imm, &frames, &k, &y, ambient, plus, minus, probe));
    }
    Ok(worst)
}

/// Same as [`check_gradient_flow`] for one given normal field.
pub fn gradient_flow_error_for<S: Immersed + ?Sized>(
    state: &S,
    ambient: &AmbientStructure,
    y: &[Pt],
    probe: f64,
) -> Result<f64> {
    let imm = state.immersion();
    if y.len() != imm.len() {
        return Err(Error::InvalidInput(format!("expected {} vectors, got {}", imm.len(), y.len())));
    }
    let frames: Vec<Frame> = (0..imm.len()).map(|i| Frame::at(&imm, i)).collect::<Result<_>>()?;
    let k = generalized_mean_curvature(&*imm, ambient)?.k;
    let plus = tilde_volume(&imm.displaced(y, probe), ambient)?;
    let minus = tilde_volume(&imm.displaced(y, -probe), ambient)?;
    Ok(variation_error(&imm, &frames, &k, y, ambient, plus, minus, probe))
}

#[allow(clippy::too_many_arguments)]
fn variation_error(
    imm: &PeriodicImmersion,
    frames: &[Frame],
    k: &[Pt],
    y: &[Pt],
    ambient: &AmbientStructure,
    plus: f64,
    minus: f64,
    probe: f64,
) -> f64 {
    let lhs = (plus - minus) / (2.0 * probe);
    let rhs = hat_pairing(imm, frames, k, y, ambient);
    let diff = (lhs - rhs).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / rhs.abs().max(f64::MIN_POSITIVE)
    }
}

/// Mean curvature for `g_tilde = e^{2 psi} g_bar` assembled from
/// finite-difference Christoffel symbols, compared with `e^{-2 psi} K`.
///
/// The conformal factor is differenced with a step equal to the local
/// physical node spacing.
pub fn check_tilde_mean_curvature<S: Immersed + ?Sized>(state: &S, ambient: &AmbientStructure) -> Result<f64> {
    let imm = state.immersion();
    let n = imm.n();
    let grid = imm.grid();
    let dim = 2 * n;
    let phi = |q: &Pt| ambient.conformal_factor(q, ConformalMetric::Tilde);
    let residuals = (0..imm.len())
        .into_par_iter()
        .map(|idx| {
            let f = Frame::at(&imm, idx)?;
            let p = *imm.point(idx);
            let step = (0..n).map(|a| norm(&f.tangents[a]) * grid.spacing(a)).fold(f64::INFINITY, f64::min);
            let phi0 = phi(&p);
            let mut dphi = ZERO;
            for c in 0..dim {
                let (mut q, mut r) = (p, p);
                q[c] += step;
                r[c] -= step;
                dphi[c] = (phi(&q) - phi(&r)) / (2.0 * step);
            }
            let gamma = |x: &Pt, y: &Pt| -> Pt {
                let (dx, dy, xy) = (dot(&dphi, x), dot(&dphi, y), dot(x, y));
                std::array::from_fn(|c| (x[c] * dy + y[c] * dx - xy * dphi[c]) / (2.0 * phi0))
            };
            let mut acc = ZERO;
            for i in 0..n {
                for j in 0..n {
                    let gij = gamma(&f.tangents[i], &f.tangents[j]);
                    for c in 0..dim {
                        acc[c] += f.g_inv[i][j] * (f.second[i][j][c] + gij[c]);
                    }
                }
            }
            let h_tilde = f.normal(&acc);
            let k = f.generalized_mean_curvature(ambient, &p);
            let r: f64 = (0..dim).map(|c| (h_tilde[c] / phi0 - k[c] / phi0).powi(2)).sum();
            Ok(r.sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

/// Residuals of the first-order evolution of `omega_ij` and `g_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionResiduals {
    /// `d omega / dt - d alpha_K`
    pub omega: f64,
    /// `d g / dt + 2 eta^{mn} (alpha_H)_m h_nij - 2n <grad psi, II_ij>`
    pub metric: f64,
}

/// Checks both evolution equations at the middle of three or more
/// snapshots of a generalized mean curvature flow run.
pub fn check_evolution_equations<S: Immersed>(
    snapshots: &[(f64, S)],
    ambient: &AmbientStructure,
) -> Result<EvolutionResiduals> {
    let (m, w) = middle_window(snapshots)?;
    let imms: Vec<PeriodicImmersion> = (m - 1..=m + 1).map(|k| snapshots[k].1.immersion().into_owned()).collect();
    let frames: Vec<Vec<Frame>> = imms
        .iter()
        .map(|imm| (0..imm.len()).map(|i| Frame::at(imm, i)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let imm = &imms[1];
    let n = imm.n();
    let grid = imm.grid();
    let data = second_fundamental(imm, ambient)?;
    let alpha_k: Vec<Vec<f64>> = (0..n).map(|a| data.nodes.iter().map(|g| g.alpha_k[a]).collect()).collect();

    let mut out = EvolutionResiduals { omega: 0.0, metric: 0.0 };
    for idx in 0..imm.len() {
        let omegas: Vec<Mat> = frames.iter().map(|fs| fs[idx].omega()).collect();
        let node = &data.nodes[idx];
        let eta_inv = inverse(n, &node.eta).ok_or_else(|| Error::DegenerateImmersion {
            node: idx,
            detail: "normal frame N_i does not span the normal space".into(),
        })?;
        let grad_psi = ambient.grad_psi(&node.position);
        for i in 0..n {
            for j in 0..n {
                let d_omega: f64 = (0..3).map(|k| w[k] * omegas[k][i][j]).sum();
                let d_alpha = grid.d1(&alpha_k[j], idx, i) - grid.d1(&alpha_k[i], idx, j);
                out.omega = out.omega.max((d_omega - d_alpha).abs());

                let d_g: f64 = (0..3).map(|k| w[k] * frames[k][idx].g[i][j]).sum();
                let mut rhs = 2.0 * n as f64 * dot(&grad_psi, &node.second_fundamental[i][j]);
                for a in 0..n {
                    for b in 0..n {
                        rhs -= 2.0 * eta_inv[a][b] * node.alpha_h[a] * node.h[b][i][j];
                    }
                }
                out.metric = out.metric.max((d_g - rhs).abs());
            }
        }
    }
    Ok(out)
}

/// `steps + 1` states of an extrinsic flow at fixed `dt`, starting at `t = 0`.
pub fn extrinsic_snapshots<S: Extrinsic + Clone>(
    state: &S,
    ambient: &AmbientStructure,
    kind: FlowKind,
    dt: f64,
    steps: usize,
) -> Result<Vec<(f64, S)>> {
    let mut out = vec![(0.0, state.clone())];
    for k in 0..steps {
        let cur = &out[k].1;
        let next = match kind {
            FlowKind::Mcf => step_mcf(cur, ambient, dt, Integrator::Rk4)?,
            FlowKind::Gmcf => step_gmcf(cur, ambient, dt, Integrator::Rk4)?,
            FlowKind::Scalar => return Err(Error::InvalidInput("scalar flow acts on graphs".into())),
        };
        out.push(((k + 1) as f64 * dt, next));
    }
    Ok(out)
}

/// `steps + 1` states of the scalar flow at fixed `dt`.
pub fn scalar_snapshots(
    graph: &GraphState,
    ambient: &AmbientStructure,
    dt: f64,
    steps: usize,
) -> Result<Vec<(f64, GraphState)>> {
    let mut out = vec![(0.0, graph.clone())];
    for k in 0..steps {
        let next = step_scalar(&out[k].1, ambient, dt, Integrator::Rk4)?;
        out.push(((k + 1) as f64 * dt, next));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Reports

/// How an entry's residuals decide pass or fail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    /// Every refinement order lies in `[min, max]`, unless the finest
    /// residual is below [`EXACT_FLOOR`].
    Order { min: f64, max: f64 },
    /// Each residual is at most `factor` times the previous one.
    Contracts(f64),
    /// The finest residual is at most the bound.
    AtMost(f64),
    /// The finest residual is at least the bound.
    AtLeast(f64),
}

impl Rule {
    pub const SECOND_ORDER: Rule = Rule::Order { min: 1.7, max: 2.5 };
    pub const AT_LEAST_SECOND_ORDER: Rule = Rule::Order { min: 1.7, max: f64::INFINITY };

    pub fn describe(&self) -> String {
        match self {
            Rule::Order { min, max } if max.is_infinite() => format!("order >= {min}"),
            Rule::Order { min, max } => format!("order in [{min}, {max}]"),
            Rule::Contracts(f) => format!("each rung <= {f} x previous"),
            Rule::AtMost(b) => format!("residual <= {b:e}"),
            Rule::AtLeast(b) => format!("residual >= {b}"),
        }
    }

    fn judge(&self, residuals: &[f64], orders: &[Option<f64>]) -> bool {
        let Some(&last) = residuals.last() else { return false };
        if residuals.iter().any(|r| !r.is_finite()) {
            return false;
        }
        match *self {
            Rule::Order { min, max } => {
                if last <= EXACT_FLOOR {
                    return true;
                }
                orders.len() >= 2 && orders[1..].iter().all(|o| o.is_some_and(|o| o >= min && o <= max))
            }
            Rule::Contracts(f) => residuals.len() >= 2 && residuals.windows(2).all(|w| w[1] <= f * w[0]),
            Rule::AtMost(b) => last <= b,
            Rule::AtLeast(b) => last >= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub check_id: String,
    pub resolutions: Vec<usize>,
    pub residuals: Vec<f64>,
    /// `log(r_{k-1} / r_k) / log(N_k / N_{k-1})`; `None` on the first rung.
    pub orders: Vec<Option<f64>>,
    pub rule: Rule,
    pub pass: bool,
    /// Entries that must fail by design, such as negative controls.
    pub expected_fail: bool,
    pub error: Option<String>,
}

impl ReportEntry {
    pub fn from_residuals(
        check_id: impl Into<String>,
        rule: Rule,
        resolutions: Vec<usize>,
        residuals: Vec<f64>,
    ) -> Self {
        let orders = orders(&resolutions, &residuals);
        let pass = rule.judge(&residuals, &orders);
        Self {
            check_id: check_id.into(),
            resolutions,
            residuals,
            orders,
            rule,
            pass,
            expected_fail: false,
            error: None,
        }
    }

    /// Evaluates `f` on every resolution; the first error fails the entry.
    pub fn evaluate(
        check_id: impl Into<String>,
        rule: Rule,
        resolutions: &[usize],
        f: impl Fn(usize) -> Result<f64>,
    ) -> Self {
        let check_id = check_id.into();
        let mut residuals = Vec::with_capacity(resolutions.len());
        for &r in resolutions {
            match f(r) {
                Ok(v) => residuals.push(v),
                Err(e) => {
                    let mut entry =
                        Self::from_residuals(check_id, rule, resolutions.to_vec(), vec![f64::NAN; resolutions.len()]);
                    entry.pass = false;
                    entry.error = Some(format!("at resolution {r}: {e}"));
                    return entry;
                }
            }
        }
        Self::from_residuals(check_id, rule, resolutions.to_vec(), residuals)
    }

    pub fn expecting_failure(mut self) -> Self {
        self.expected_fail = true;
        self
    }

    pub fn ok(&self) -> bool {
        self.pass || self.expected_fail
    }
}

fn orders(resolutions: &[usize], residuals: &[f64]) -> Vec<Option<f64>> {
    (0..residuals.len())
        .map(|k| {
            if k == 0 {
                return None;
            }
            let (r0, r1) = (residuals[k - 1], residuals[k]);
            let ratio = resolutions[k] as f64 / resolutions[k - 1] as f64;
            (r0 > 0.0 && r1 > 0.0 && ratio > 1.0).then(|| (r0 / r1).ln() / ratio.ln())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsReport {
    pub entries: Vec<ReportEntry>,
}

impl DiagnosticsReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(ReportEntry::ok)
    }

    pub fn get(&self, check_id: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.check_id == check_id)
    }

    /// One row per entry and resolution:
    /// `check_id,resolution,residual,order,pass,expected_fail`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let err = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["check_id", "resolution", "residual", "order", "pass", "expected_fail"]).map_err(err)?;
        for e in &self.entries {
            for (k, (&res, &r)) in e.resolutions.iter().zip(&e.residuals).enumerate() {
                let order = e.orders[k].map(|o| format!("{o:.16e}")).unwrap_or_default();
                w.write_record([
                    e.check_id.clone(),
                    res.to_string(),
                    format!("{r:.16e}"),
                    order,
                    e.pass.to_string(),
                    e.expected_fail.to_string(),
                ])
                .map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("csv write failed: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    /// Human-readable summary, one line per entry.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let status = match (e.pass, e.expected_fail) {
                (true, _) => "PASS",
                (false, true) => "XFAIL",
                (false, false) => "FAIL",
            };
            let residuals: Vec<String> =
                e.resolutions.iter().zip(&e.residuals).map(|(n, r)| format!("{n}:{r:.3e}")).collect();
            let orders: Vec<String> = e.orders.iter().flatten().map(|o| format!("{o:.2}")).collect();
            let _ = write!(s, "{status:5} {:<48} {}", e.check_id, residuals.join(" "));
            if !orders.is_empty() {
                let _ = write!(s, "  order {}", orders.join(" "));
            }
            let _ = write!(s, "  [{}]", e.rule.describe());
            if let Some(err) = &e.error {
                let _ = write!(s, "  error: {err}");
            }
            s.push('\n');
        }
        let failed = self.entries.iter().filter(|e| !e.ok()).count();
        let _ = writeln!(s, "{} entries, {} failed", self.entries.len(), failed);
        s
    }
}

// ---------------------------------------------------------------------------
// Suites

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Flows,
    Preservation,
    All,
}

impl Suite {
    pub const CATALOG: [Suite; 4] = [Self::Identities, Self::Flows, Self::Preservation, Self::All];

    pub fn name(self) -> &'static str {
        match self {
            Self::Identities => "identities",
            Self::Flows => "flows",
            Self::Preservation => "preservation",
            Self::All => "all",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::CATALOG.into_iter().find(|s| s.name() == name)
    }
}

/// Ladder used when none is given.
pub const DEFAULT_LADDER: [usize; 2] = [32, 64];

/// Curves and one-dimensional graphs run at this multiple of each rung.
pub const CURVE_FACTOR: usize = 4;

fn exponent(n: usize, terms: &[(&[u32], f64, f64)]) -> HolomorphicExponent {
    HolomorphicExponent::new(n, terms.iter().map(|&(p, re, im)| (p.to_vec(), Complex64::new(re, im))))
        .expect("built-in exponent")
}

/// Built-in exponents by label, for one and two dimensions.
pub fn named_ambient(n: usize, label: &str) -> AmbientStructure {
    let e = match (n, label) {
        (_, "h=0") => HolomorphicExponent::zero(n).expect("dimension"),
        (1, "h=z") => exponent(1, &[(&[1], 1.0, 0.0)]),
        (1, "h=0.1z") => exponent(1, &[(&[1], 0.1, 0.0)]),
        (1, "h=0.2iz") => exponent(1, &[(&[1], 0.0, 0.2)]),
        (2, "h=0.1z1") => exponent(2, &[(&[1, 0], 0.1, 0.0)]),
        (2, "h=0.1(z1+z2)") => exponent(2, &[(&[1, 0], 0.1, 0.0), (&[0, 1], 0.1, 0.0)]),
        (2, "h=0.2iz1") => exponent(2, &[(&[1, 0], 0.0, 0.2)]),
        (2, "h=0.3z1+0.2z2") => exponent(2, &[(&[1, 0], 0.3, 0.0), (&[0, 1], 0.2, 0.0)]),
        _ => panic!("unknown built-in exponent {label} for n = {n}"),
    };
    AmbientStructure::new(e)
}

fn scaled(ladder: &[usize], factor: usize) -> Vec<usize> {
    ladder.iter().map(|n| n * factor).collect()
}

/// Runs a named suite over a resolution ladder.
pub fn run_suite(suite: Suite, ladder: &[usize]) -> Result<DiagnosticsReport> {
    if ladder.is_empty() {
        return Err(Error::InvalidInput("resolution ladder is empty".into()));
    }
    if let Some(&bad) = ladder.iter().find(|&&n| n < 8) {
        return Err(Error::InvalidInput(format!("ladder rungs must be at least 8, got {bad}")));
    }
    let mut entries = Vec::new();
    if matches!(suite, Suite::Identities | Suite::All) {
        entries.extend(identities(ladder));
    }
    if matches!(suite, Suite::Flows | Suite::All) {
        entries.extend(flows(ladder));
    }
    if matches!(suite, Suite::Preservation | Suite::All) {
        entries.extend(preservation(ladder));
    }
    Ok(DiagnosticsReport { entries })
}

fn identities(ladder: &[usize]) -> Vec<ReportEntry> {
    let curve = scaled(ladder, CURVE_FACTOR);
    let mut out = Vec::new();

    for h in ["h=0", "h=0.1z", "h=0.2iz"] {
        let amb = named_ambient(1, h);
        out.push(ReportEntry::evaluate(format!("alpha_k_dtheta/circle/{h}"), Rule::SECOND_ORDER, &curve, |m| {
            check_alpha_k_dtheta(&CurveState::circle(1.0, m)?, &amb)
        }));
        out.push(ReportEntry::evaluate(format!("alpha_k_dtheta/sine_graph_1d/{h}"), Rule::SECOND_ORDER, &curve, |m| {
            check_alpha_k_dtheta(&sine_graph_1d(m, 0.1)?, &amb)
        }));
    }
    for h in ["h=0", "h=0.1(z1+z2)", "h=0.2iz1"] {
        let amb = named_ambient(2, h);
        out.push(ReportEntry::evaluate(format!("alpha_k_dtheta/sine_graph_2d/{h}"), Rule::SECOND_ORDER, ladder, |n| {
            check_alpha_k_dtheta(&sine_graph_2d(n)?, &amb)
        }));
    }

    for h in ["h=0", "h=0.1z"] {
        let amb = named_ambient(1, h);
        out.push(ReportEntry::evaluate(format!("alpha_h_closed/circle/{h}"), Rule::SECOND_ORDER, &curve, |m| {
            check_alpha_h_closed(&CurveState::circle(1.0, m)?, &amb)
        }));
    }
    for h in ["h=0", "h=0.1(z1+z2)"] {
        let amb = named_ambient(2, h);
        out.push(ReportEntry::evaluate(format!("alpha_h_closed/graph_mesh_2d/{h}"), Rule::SECOND_ORDER, ladder, |n| {
            check_alpha_h_closed(&MeshState::from_graph(&sine_graph_2d(n)?)?, &amb)
        }));
    }

    let amb = named_ambient(1, "h=z");
    out.push(ReportEntry::evaluate("tilde_mean_curvature/circle/h=z", Rule::SECOND_ORDER, &curve, |m| {
        check_tilde_mean_curvature(&CurveState::circle(1.0, m)?, &amb)
    }));
    let amb = named_ambient(2, "h=0.1(z1+z2)");
    out.push(ReportEntry::evaluate(
        "tilde_mean_curvature/graph_mesh_2d/h=0.1(z1+z2)",
        Rule::SECOND_ORDER,
        ladder,
        |n| check_tilde_mean_curvature(&MeshState::from_graph(&sine_graph_2d(n)?)?, &amb),
    ));

    let amb = named_ambient(1, "h=0");
    out.push(ReportEntry::evaluate("gradient_flow/circle/h=0", Rule::AtMost(1e-2), &curve, |m| {
        check_gradient_flow(&CurveState::circle(1.0, m)?, &amb, 8, 1e-4)
    }));
    let amb = named_ambient(2, "h=0.2iz1");
    out.push(ReportEntry::evaluate("gradient_flow/sine_graph_2d/h=0.2iz1", Rule::AtMost(1e-2), ladder, |n| {
        check_gradient_flow(&sine_graph_2d(n)?, &amb, 8, 1e-4)
    }));

    let amb = named_ambient(1, "h=0.2iz");
    out.push(ReportEntry::evaluate("theta_evolution/sine_graph_1d/h=0.2iz", Rule::SECOND_ORDER, &curve, |m| {
        let g = sine_graph_1d(m, 0.3)?;
        let dt = stable_dt(&FlowState::Graph(g.clone()), 0.2)?;
        check_theta_evolution(&scalar_snapshots(&g, &amb, dt, 2)?, &amb)
    }));

    for (fixture, h) in [(Fixture::ShearMesh, "h=0"), (Fixture::GraphMesh2d, "h=0.1z1")] {
        let amb = named_ambient(2, h);
        let run = |n: usize| -> Result<EvolutionResiduals> {
            let FlowState::Mesh(mesh) = fixture.build(n)? else { unreachable!("mesh fixture") };
            let dt = stable_dt(&FlowState::Mesh(mesh.clone()), 0.2)?;
            check_evolution_equations(&extrinsic_snapshots(&mesh, &amb, FlowKind::Gmcf, dt, 2)?, &amb)
        };
        let name = fixture.name();
        out.push(ReportEntry::evaluate(
            format!("evolution_omega/{name}/{h}"),
            Rule::AT_LEAST_SECOND_ORDER,
            ladder,
            |n| Ok(run(n)?.omega),
        ));
        out.push(ReportEntry::evaluate(
            format!("evolution_metric/{name}/{h}"),
            Rule::AT_LEAST_SECOND_ORDER,
            ladder,
            |n| Ok(run(n)?.metric),
        ));
    }
    out
}

/// `|r(t_end) - sqrt(1 - 2 t_end)|` for a unit circle under mean curvature flow.
pub fn circle_radius_error(nodes: usize, t_end: f64) -> Result<f64> {
    let amb = AmbientStructure::calabi_yau(1)?;
    let (state, trace) =
        run_flow(FlowState::Curve(CurveState::circle(1.0, nodes)?), &amb, &FlowConfig::new(FlowKind::Mcf, t_end))?;
    finished(&trace)?;
    let FlowState::Curve(c) = state else { unreachable!("curve in, curve out") };
    Ok((c.mean_radius() - (1.0 - 2.0 * t_end).sqrt()).abs())
}

fn finished(trace: &crate::flow::FlowTrace) -> Result<()> {
    match &trace.message {
        Some(m) => Err(Error::InvalidInput(format!("flow stopped early ({}): {m}", trace.termination.name()))),
        None => Ok(()),
    }
}

/// Largest relative deviation of the first Fourier mode of `u` from
/// `a_0 e^{-t}` along the scalar flow from `u_0 = amplitude * sin x`.
pub fn heat_mode_decay_error(nodes: usize, amplitude: f64, t_end: f64) -> Result<f64> {
    let amb = AmbientStructure::calabi_yau(1)?;
    let g = sine_graph_1d(nodes, amplitude)?;
    let mode = |g: &GraphState| {
        let grid = g.grid();
        2.0 / nodes as f64 * g.u().iter().enumerate().map(|(i, u)| u * grid.coords(i)[0].sin()).sum::<f64>()
    };
    let a0 = mode(&g);
    let mut worst = 0.0f64;
    let mut config = FlowConfig::new(FlowKind::Scalar, t_end);
    config.snapshot_every = 1;
    let (_, trace) = run_flow_with(FlowState::Graph(g), &amb, &config, |_, t, s| {
        if let FlowState::Graph(g) = s {
            worst = worst.max((mode(g) / (a0 * (-t).exp()) - 1.0).abs());
        }
    })?;
    finished(&trace)?;
    Ok(worst)
}

/// Theta-evolution residual at the start of the scalar flow from `amplitude * sin x`.
pub fn heat_theta_residual(nodes: usize, amplitude: f64, ambient: &AmbientStructure) -> Result<f64> {
    let g = sine_graph_1d(nodes, amplitude)?;
    let dt = stable_dt(&FlowState::Graph(g.clone()), 0.2)?;
    check_theta_evolution(&scalar_snapshots(&g, ambient, dt, 2)?, ambient)
}

/// Largest of `max |u|` at `t_end` and the special Lagrangian residual seen
/// along the scalar flow from the flat graph.
pub fn special_lagrangian_drift(nodes: usize, ambient: &AmbientStructure, t_end: f64) -> Result<f64> {
    let sizes = vec![nodes; ambient.n()];
    let g = GraphState::from_fn(&sizes, |_| 0.0)?;
    let mut config = FlowConfig::new(FlowKind::Scalar, t_end);
    config.snapshot_every = 1;
    let mut worst = 0.0f64;
    let mut failure = None;
    let (state, trace) = run_flow_with(FlowState::Graph(g), ambient, &config, |_, _, s| {
        if let FlowState::Graph(g) = s {
            match special_lagrangian_residual(g, ambient) {
                Ok(r) => worst = worst.max(r),
                Err(e) => failure = Some(e),
            }
        }
    })?;
    finished(&trace)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let FlowState::Graph(g) = state else { unreachable!("graph in, graph out") };
    Ok(worst.max(g.max_abs_u()))
}

/// `int g_hat(K, K) dV_hat`
pub fn hat_energy<S: Immersed + ?Sized>(state: &S, ambient: &AmbientStructure) -> Result<f64> {
    let imm = state.immersion();
    let frames: Vec<Frame> = (0..imm.len()).map(|i| Frame::at(&imm, i)).collect::<Result<_>>()?;
    let k = generalized_mean_curvature(&*imm, ambient)?.k;
    Ok(-hat_pairing(&imm, &frames, &k, &k, ambient))
}

/// Largest relative gap between `(Vol_tilde(t+dt) - Vol_tilde(t)) / dt` and
/// the trapezoidal average of `-int g_hat(K, K) dV_hat` over `steps` steps of
/// generalized mean curvature flow.
pub fn volume_rate_error<S: Extrinsic + Immersed + Clone>(
    state: &S,
    ambient: &AmbientStructure,
    dt: f64,
    steps: usize,
) -> Result<f64> {
    let snaps = extrinsic_snapshots(state, ambient, FlowKind::Gmcf, dt, steps)?;
    let vols: Vec<f64> = snaps.iter().map(|(_, s)| tilde_volume(&s.immersion(), ambient)).collect::<Result<_>>()?;
    let energy: Vec<f64> = snaps.iter().map(|(_, s)| hat_energy(s, ambient)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for k in 0..steps {
        let rate = (vols[k + 1] - vols[k]) / dt;
        let expected = -0.5 * (energy[k] + energy[k + 1]);
        worst = worst.max((rate - expected).abs() / expected.abs());
    }
    Ok(worst)
}

fn flows(ladder: &[usize]) -> Vec<ReportEntry> {
    let curve = scaled(ladder, CURVE_FACTOR);
    let finest = *ladder.iter().max().expect("non-empty");
    let finest_curve = finest * CURVE_FACTOR;
    let mut out = Vec::new();

    out.push(ReportEntry::evaluate("circle_mcf/radius_error", Rule::SECOND_ORDER, &curve, |m| {
        circle_radius_error(m, 0.4)
    }));
    out.push(ReportEntry::evaluate("circle_mcf/radius_tolerance", Rule::AtMost(1e-3), &[finest_curve], |m| {
        circle_radius_error(m, 0.4)
    }));
    out.push(ReportEntry::evaluate("scalar/heat_mode_decay", Rule::AtMost(1e-2), &[finest_curve], |m| {
        heat_mode_decay_error(m, 1e-3, 0.1)
    }));
    let amb = AmbientStructure::calabi_yau(1).expect("n = 1");
    out.push(ReportEntry::evaluate("scalar/theta_heat_residual", Rule::AtMost(1e-6), &[finest_curve], |m| {
        heat_theta_residual(m, 1e-3, &amb)
    }));
    let amb = named_ambient(2, "h=0.3z1+0.2z2");
    out.push(ReportEntry::evaluate("scalar/special_lagrangian_fixed_point", Rule::AtMost(1e-12), &[finest], |n| {
        special_lagrangian_drift(n, &amb, 1.0)
    }));

    let amb = named_ambient(1, "h=0.1z");
    out.push(ReportEntry::evaluate("gmcf/volume_rate/circle/h=0.1z", Rule::AtMost(1e-2), &[finest_curve], |m| {
        let c = CurveState::circle(1.0, m)?;
        let dt = stable_dt(&FlowState::Curve(c.clone()), 0.2)?;
        volume_rate_error(&c, &amb, dt, 10)
    }));
    let amb = named_ambient(2, "h=0.2iz1");
    out.push(ReportEntry::evaluate("gmcf/volume_rate/graph_mesh_2d/h=0.2iz1", Rule::AtMost(1e-2), &[finest], |n| {
        let m = MeshState::from_graph(&sine_graph_2d(n)?)?;
        let dt = stable_dt(&FlowState::Mesh(m.clone()), 0.2)?;
        volume_rate_error(&m, &amb, dt, 10)
    }));
    out.push(ReportEntry::evaluate(
        "gmcf/volume_increases/graph_mesh_2d/h=0.2iz1",
        Rule::AtMost(0.0),
        &[finest],
        |n| {
            let m = MeshState::from_graph(&sine_graph_2d(n)?)?;
            let (_, trace) = run_flow(FlowState::Mesh(m), &amb, &FlowConfig::new(FlowKind::Gmcf, 0.1))?;
            finished(&trace)?;
            Ok(trace.volume_increases.len() as f64)
        },
    ));
    out
}

/// `max_t max |omega_ij|` along generalized mean curvature flow from the
/// graph-sampled mesh.
pub fn preservation_ceiling(nodes: usize, ambient: &AmbientStructure, t_end: f64) -> Result<f64> {
    let mesh = MeshState::from_graph(&sine_graph_2d(nodes)?)?;
    let mut config = FlowConfig::new(FlowKind::Gmcf, t_end);
    config.snapshot_every = 1;
    let mut worst = 0.0f64;
    let mut failure = None;
    let (_, trace) = run_flow_with(FlowState::Mesh(mesh), ambient, &config, |_, _, s| {
        match crate::immersion::omega_pullback(&s.to_immersion()) {
            Ok(w) => worst = worst.max(w.max_abs()),
            Err(e) => failure = Some(e),
        }
    })?;
    finished(&trace)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(worst)
}

/// The admissible ambient of the preservation suite and its negative control.
pub fn preservation_pair() -> (AmbientStructure, AmbientStructure) {
    let admissible = named_ambient(2, "h=0.1(z1+z2)");
    let control = AmbientStructure::negative_control(admissible.exponent().clone(), NegativeControl::CosX1);
    (admissible, control)
}

fn preservation(ladder: &[usize]) -> Vec<ReportEntry> {
    let (admissible, control) = preservation_pair();
    let t_end = 0.1;
    let adm = ReportEntry::evaluate("preservation/admissible", Rule::Contracts(0.3), ladder, |n| {
        preservation_ceiling(n, &admissible, t_end)
    });
    let ctl = ReportEntry::evaluate("preservation/negative_control/cos_x1", Rule::Contracts(0.3), ladder, |n| {
        preservation_ceiling(n, &control, t_end)
    })
    .expecting_failure();
    let separation = if adm.error.is_none() && ctl.error.is_none() {
        let ratios = ctl.residuals.iter().zip(&adm.residuals).map(|(c, a)| c / a).collect();
        ReportEntry::from_residuals("preservation/separation", Rule::AtLeast(10.0), ladder.to_vec(), ratios)
    } else {
        let mut e = ReportEntry::from_residuals(
            "preservation/separation",
            Rule::AtLeast(10.0),
            ladder.to_vec(),
            vec![f64::NAN; ladder.len()],
        );
        e.error = Some("paired runs failed".into());
        e
    };
    vec![adm, ctl, separation]
}
