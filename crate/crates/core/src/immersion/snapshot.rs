//! Per-node CSV snapshots.
//!
//! Columns are `x1..xn, F1..F2n`, then `u` for graphs, then `theta`,
//! `omega_sq`, `H_norm` and `K_norm`. Values are written with 17
//! significant digits. `theta` is `NaN` when no continuous angle exists.

use std::io::{Read, Write};

use super::geometry::frames;
use super::{Immersed, PeriodicImmersion};
use crate::ambient::AmbientStructure;
use crate::error::{Error, Result};
use crate::linalg::norm;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRow {
    pub coords: Vec<f64>,
    pub position: Vec<f64>,
    pub u: Option<f64>,
    pub theta: f64,
    pub omega_sq: f64,
    pub h_norm: f64,
    pub k_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub rows: Vec<SnapshotRow>,
}

impl Snapshot {
    /// Collects the per-node fields of `state`. Pass `u` for graphs and the
    /// angle when one is available.
    pub fn capture<S: Immersed + ?Sized>(
        state: &S,
        ambient: &AmbientStructure,
        u: Option<&[f64]>,
        theta: Option<&[f64]>,
    ) -> Result<Self> {
        let imm = state.immersion();
        let n = imm.n();
        let fs = frames(&imm)?;
        let rows = fs
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let p = imm.point(i);
                let x = imm.grid().coords(i);
                SnapshotRow {
                    coords: x[..n].to_vec(),
                    position: p[..2 * n].to_vec(),
                    u: u.map(|u| u[i]),
                    theta: theta.map_or(f64::NAN, |t| t[i]),
                    omega_sq: f.omega_norm_sq(&f.omega()),
                    h_norm: norm(&f.mean_curvature()),
                    k_norm: norm(&f.generalized_mean_curvature(ambient, p)),
                }
            })
            .collect();
        Ok(Self { n, rows })
    }

    pub fn has_u(&self) -> bool {
        self.rows.first().is_some_and(|r| r.u.is_some())
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = (1..=self.n).map(|i| format!("x{i}")).collect();
        h.extend((1..=2 * self.n).map(|i| format!("F{i}")));
        if self.has_u() {
            h.push("u".into());
        }
        h.extend(["theta", "omega_sq", "H_norm", "K_norm"].map(String::from));
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
        w.write_record(self.header()).map_err(io)?;
        for r in &self.rows {
            let mut rec: Vec<f64> = r.coords.clone();
            rec.extend(&r.position);
            rec.extend(r.u);
            rec.extend([r.theta, r.omega_sq, r.h_norm, r.k_norm]);
            w.write_record(rec.iter().map(|v| format!("{v:.16e}"))).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("csv write failed: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    /// Parses a snapshot. Only the coordinate and position columns are
    /// required; `u` is picked up when present and the derived columns
    /// default to `NaN`.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let bad = |m: String| Error::InvalidInput(format!("snapshot: {m}"));
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> =
            r.headers().map_err(|e| bad(e.to_string()))?.iter().map(|s| s.trim().to_string()).collect();
        let col = |name: &str| header.iter().position(|h| h == name);
        let n = (1..=3).take_while(|i| col(&format!("x{i}")).is_some()).count();
        if n == 0 {
            return Err(bad("missing x1 column".into()));
        }
        let xs: Vec<usize> = (1..=n).map(|i| col(&format!("x{i}")).unwrap()).collect();
        let fs: Vec<usize> = (1..=2 * n)
            .map(|i| col(&format!("F{i}")).ok_or_else(|| bad(format!("missing F{i} column"))))
            .collect::<Result<_>>()?;
        let (cu, ct, co, ch, ck) = (col("u"), col("theta"), col("omega_sq"), col("H_norm"), col("K_norm"));
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let get = |c: usize| -> Result<f64> {
                rec.get(c)
                    .ok_or_else(|| bad(format!("row {} is short", line + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| bad(format!("row {}: {e}", line + 1)))
            };
            let opt = |c: Option<usize>| c.map(get).transpose();
            rows.push(SnapshotRow {
                coords: xs.iter().map(|&c| get(c)).collect::<Result<_>>()?,
                position: fs.iter().map(|&c| get(c)).collect::<Result<_>>()?,
                u: opt(cu)?,
                theta: opt(ct)?.unwrap_or(f64::NAN),
                omega_sq: opt(co)?.unwrap_or(f64::NAN),
                h_norm: opt(ch)?.unwrap_or(f64::NAN),
                k_norm: opt(ck)?.unwrap_or(f64::NAN),
            });
        }
        if rows.is_empty() {
            return Err(bad("no rows".into()));
        }
        Ok(Self { n, rows })
    }

    /// Number of distinct grid coordinates along each axis.
    pub fn grid_sizes(&self) -> Vec<usize> {
        (0..self.n)
            .map(|a| {
                let mut v: Vec<f64> = self.rows.iter().map(|r| r.coords[a]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
                v.len()
            })
            .collect()
    }
}

/// Snapshot of an immersion without angle or graph data.
pub fn snapshot(imm: &PeriodicImmersion, ambient: &AmbientStructure) -> Result<Snapshot> {
    Snapshot::capture(imm, ambient, None, None)
}
