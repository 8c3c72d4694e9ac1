//! Fixed-size vector and matrix helpers.
//!
//! Ambient points live in `R^{2n}` with `n <= 3`, stored interleaved as
//! `(x1, y1, x2, y2, x3, y3)`; unused trailing slots stay zero. Small
//! square matrices are `[[f64; 3]; 3]` with only the leading `n x n` block
//! meaningful.

use num_complex::Complex64;

pub const MAX_DIM: usize = 3;
pub const MAX_AMBIENT: usize = 2 * MAX_DIM;

pub type Pt = [f64; MAX_AMBIENT];
pub type Mat = [[f64; MAX_DIM]; MAX_DIM];

pub const ZERO: Pt = [0.0; MAX_AMBIENT];
pub const ZERO_MAT: Mat = [[0.0; MAX_DIM]; MAX_DIM];

#[inline]
pub fn dot(a: &Pt, b: &Pt) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &Pt) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn add(a: &Pt, b: &Pt) -> Pt {
    std::array::from_fn(|k| a[k] + b[k])
}

#[inline]
pub fn sub(a: &Pt, b: &Pt) -> Pt {
    std::array::from_fn(|k| a[k] - b[k])
}

#[inline]
pub fn scale(s: f64, a: &Pt) -> Pt {
    std::array::from_fn(|k| s * a[k])
}

/// `a + s * b`
#[inline]
pub fn axpy(a: &Pt, s: f64, b: &Pt) -> Pt {
    std::array::from_fn(|k| a[k] + s * b[k])
}

/// Standard complex structure: `J(d/dx_k) = d/dy_k`, `J(d/dy_k) = -d/dx_k`.
#[inline]
pub fn apply_j(v: &Pt) -> Pt {
    let mut out = ZERO;
    for k in 0..MAX_DIM {
        out[2 * k] = -v[2 * k + 1];
        out[2 * k + 1] = v[2 * k];
    }
    out
}

/// `omega(X, Y) = sum_k dx_k ^ dy_k (X, Y) = g(JX, Y)`.
#[inline]
pub fn omega_bar(x: &Pt, y: &Pt) -> f64 {
    (0..MAX_DIM).map(|k| x[2 * k] * y[2 * k + 1] - x[2 * k + 1] * y[2 * k]).sum()
}

pub fn det(n: usize, m: &Mat) -> f64 {
    match n {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => panic!("unsupported dimension {n}"),
    }
}

/// Inverse via the adjugate. Returns `None` for an exactly singular matrix.
pub fn inverse(n: usize, m: &Mat) -> Option<Mat> {
    let d = det(n, m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut inv = ZERO_MAT;
    match n {
        1 => inv[0][0] = 1.0 / d,
        2 => {
            inv[0][0] = m[1][1] / d;
            inv[0][1] = -m[0][1] / d;
            inv[1][0] = -m[1][0] / d;
            inv[1][1] = m[0][0] / d;
        }
        3 => {
            for i in 0..3 {
                for j in 0..3 {
                    // cofactor of (j, i)
                    let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                    let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                    inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / d;
                }
            }
        }
        _ => panic!("unsupported dimension {n}"),
    }
    Some(inv)
}

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigenvalues of a symmetric `n x n` matrix, ascending.
///
/// Closed form for `n <= 2`; cyclic Jacobi rotations for `n = 3`.
pub fn symmetric_eigenvalues(n: usize, m: &Mat) -> [f64; MAX_DIM] {
    let mut out = [0.0; MAX_DIM];
    match n {
        1 => out[0] = m[0][0],
        2 => {
            let mean = 0.5 * (m[0][0] + m[1][1]);
            let half_diff = 0.5 * (m[0][0] - m[1][1]);
            let r = half_diff.hypot(m[0][1]);
            out[0] = mean - r;
            out[1] = mean + r;
        }
        3 => {
            let mut a = *m;
            let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
            for _ in 0..JACOBI_MAX_SWEEPS {
                let off = (a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2)).sqrt();
                if off <= JACOBI_TOL * scale {
                    break;
                }
                for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                    if a[p][q] == 0.0 {
                        continue;
                    }
                    let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let t = if tau == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..3 {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..3 {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
            out = [a[0][0], a[1][1], a[2][2]];
        }
        _ => panic!("unsupported dimension {n}"),
    }
    out[..n].sort_by(|a, b| a.total_cmp(b));
    out
}

pub fn complex_det(n: usize, m: &[[Complex64; MAX_DIM]; MAX_DIM]) -> Complex64 {
    match n {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => panic!("unsupported dimension {n}"),
    }
}

/// Principal representative of an angle in `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}
