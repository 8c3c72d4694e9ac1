//! Flat almost Calabi-Yau ambient spaces.
//!
//! The ambient is `C^n` (`1 <= n <= 3`) with the standard complex structure,
//! Kähler form and flat metric, and holomorphic volume form
//! `Omega = e^h dz_1 ^ ... ^ dz_n` for a polynomial exponent `h`. Then
//! `|Omega|` fixes `psi = Re h / n`, which is pluriharmonic, so the Ricci form
//! `0 = lambda * omega + n dd^c psi` holds with `lambda = 0`.
//!
//! Sign conventions: `J(d/dx_k) = d/dy_k`, `omega = sum dx_k ^ dy_k`,
//! `g(JX, Y) = omega(X, Y)` and `d^c psi (X) = -d psi (J X)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{apply_j, dot, Pt, MAX_AMBIENT, MAX_DIM, ZERO};

/// `coefficient * z_1^{p_1} ... z_n^{p_n}`
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub powers: [u32; MAX_DIM],
    pub coefficient: Complex64,
}

/// Polynomial exponent `h: C^n -> C` of the holomorphic volume form.
#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphicExponent {
    n: usize,
    terms: Vec<Monomial>,
}

fn check_dimension(n: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("complex dimension must be 1..=3, got {n}")))
    }
}

impl HolomorphicExponent {
    /// Builds `h` from `(multi-index, coefficient)` pairs.
    pub fn new(n: usize, terms: impl IntoIterator<Item = (Vec<u32>, Complex64)>) -> Result<Self> {
        check_dimension(n)?;
        let mut out = Vec::new();
        for (index, coefficient) in terms {
            if index.len() != n {
                return Err(Error::InvalidInput(format!("multi-index {index:?} does not have length n = {n}")));
            }
            if !(coefficient.re.is_finite() && coefficient.im.is_finite()) {
                return Err(Error::InvalidInput("non-finite coefficient".into()));
            }
            let mut powers = [0; MAX_DIM];
            powers[..n].copy_from_slice(&index);
            out.push(Monomial { powers, coefficient });
        }
        Ok(Self { n, terms: out })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    /// `h(z) = sum_k c_k z_k`
    pub fn linear(coefficients: &[Complex64]) -> Result<Self> {
        let n = coefficients.len();
        Self::new(
            n,
            coefficients.iter().enumerate().map(|(k, &c)| {
                let mut idx = vec![0; n];
                idx[k] = 1;
                (idx, c)
            }),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient == Complex64::new(0.0, 0.0))
    }

    pub fn eval(&self, z: &[Complex64; MAX_DIM]) -> Complex64 {
        self.terms.iter().map(|t| (0..self.n).fold(t.coefficient, |acc, k| acc * z[k].powu(t.powers[k]))).sum()
    }

    /// Complex gradient `(dh/dz_1, ..., dh/dz_n)`.
    pub fn gradient(&self, z: &[Complex64; MAX_DIM]) -> [Complex64; MAX_DIM] {
        let mut out = [Complex64::new(0.0, 0.0); MAX_DIM];
        for t in &self.terms {
            for (j, slot) in out.iter_mut().enumerate().take(self.n) {
                let pj = t.powers[j];
                if pj == 0 {
                    continue;
                }
                let mut v = t.coefficient * f64::from(pj);
                for k in 0..self.n {
                    let p = if k == j { pj - 1 } else { t.powers[k] };
                    v *= z[k].powu(p);
                }
                *slot += v;
            }
        }
        out
    }

    /// Complex Hessian `d^2 h / dz_j dz_k`.
    pub fn hessian(&self, z: &[Complex64; MAX_DIM]) -> [[Complex64; MAX_DIM]; MAX_DIM] {
        let mut out = [[Complex64::new(0.0, 0.0); MAX_DIM]; MAX_DIM];
        for t in &self.terms {
            for j in 0..self.n {
                for l in 0..self.n {
                    let mut p = t.powers;
                    let mut c = t.coefficient;
                    if p[j] == 0 {
                        continue;
                    }
                    c *= f64::from(p[j]);
                    p[j] -= 1;
                    if p[l] == 0 {
                        continue;
                    }
                    c *= f64::from(p[l]);
                    p[l] -= 1;
                    let v = (0..self.n).fold(c, |acc, k| acc * z[k].powu(p[k]));
                    out[j][l] += v;
                }
            }
        }
        out
    }
}

/// Interprets an interleaved real point as `(z_1, ..., z_n)`.
pub fn to_complex(p: &Pt) -> [Complex64; MAX_DIM] {
    std::array::from_fn(|k| Complex64::new(p[2 * k], p[2 * k + 1]))
}

/// Built-in non-pluriharmonic potentials for negative-control runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeControl {
    /// `psi = |p|^2 / 4`, so `dd^c psi = omega`.
    RadialQuadratic,
    /// `psi = cos(x_1) / 2`; `dd^c psi = -cos(x_1)/2 dx_1 ^ dy_1` is not a
    /// multiple of the Kähler form when `n >= 2`.
    CosX1,
}

impl NegativeControl {
    pub const CATALOG: [NegativeControl; 2] = [Self::RadialQuadratic, Self::CosX1];

    pub fn name(self) -> &'static str {
        match self {
            Self::RadialQuadratic => "radial_quadratic",
            Self::CosX1 => "cos_x1",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::CATALOG.into_iter().find(|c| c.name() == name)
    }

    fn psi(self, p: &Pt) -> f64 {
        match self {
            Self::RadialQuadratic => 0.25 * dot(p, p),
            Self::CosX1 => 0.5 * p[0].cos(),
        }
    }

    fn grad(self, p: &Pt) -> Pt {
        match self {
            Self::RadialQuadratic => std::array::from_fn(|k| 0.5 * p[k]),
            Self::CosX1 => {
                let mut g = ZERO;
                g[0] = -0.5 * p[0].sin();
                g
            }
        }
    }
}

/// Which conformally rescaled ambient metric to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConformalMetric {
    /// The flat metric itself.
    Bar,
    /// `e^{2 psi} g`
    Tilde,
    /// `e^{2n/(n+2) psi} g`
    Hat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbientStructure {
    n: usize,
    exponent: HolomorphicExponent,
    lambda: f64,
    control: Option<NegativeControl>,
}

impl AmbientStructure {
    pub fn new(exponent: HolomorphicExponent) -> Self {
        Self { n: exponent.n(), exponent, lambda: 0.0, control: None }
    }

    /// `Omega = dz_1 ^ ... ^ dz_n`, so `psi = 0`.
    pub fn calabi_yau(n: usize) -> Result<Self> {
        Ok(Self::new(HolomorphicExponent::zero(n)?))
    }

    /// An ambient whose `psi` is replaced by a non-pluriharmonic function.
    /// The exponent still supplies the phase `Im h` of the Lagrangian angle.
    pub fn negative_control(exponent: HolomorphicExponent, control: NegativeControl) -> Self {
        Self { n: exponent.n(), exponent, lambda: 0.0, control: Some(control) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn exponent(&self) -> &HolomorphicExponent {
        &self.exponent
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn control(&self) -> Option<NegativeControl> {
        self.control
    }

    pub fn is_admissible(&self) -> bool {
        self.control.is_none()
    }

    /// `psi = Re h / n`, or the negative-control function.
    pub fn psi(&self, p: &Pt) -> f64 {
        match self.control {
            Some(c) => c.psi(p),
            None => self.exponent.eval(&to_complex(p)).re / self.n as f64,
        }
    }

    /// Flat-metric gradient of `psi`. For `Re h` the gradient in the
    /// `(x_k, y_k)` slots is `(Re h'_k, -Im h'_k)`.
    pub fn grad_psi(&self, p: &Pt) -> Pt {
        if let Some(c) = self.control {
            return c.grad(p);
        }
        let dh = self.exponent.gradient(&to_complex(p));
        let inv_n = 1.0 / self.n as f64;
        let mut g = ZERO;
        for k in 0..self.n {
            g[2 * k] = dh[k].re * inv_n;
            g[2 * k + 1] = -dh[k].im * inv_n;
        }
        g
    }

    /// `d^c psi (X) = -<grad psi, J X>`
    pub fn dc_psi(&self, p: &Pt, x: &Pt) -> f64 {
        -dot(&self.grad_psi(p), &apply_j(x))
    }

    /// `Im h`, the phase contribution of `Omega` to the Lagrangian angle.
    pub fn phase(&self, p: &Pt) -> f64 {
        self.exponent.eval(&to_complex(p)).im
    }

    /// Finite-difference estimate of `max |(dd^c psi)_{ab}|` at `p`.
    ///
    /// With `H` the real Hessian of `psi` and `J` the matrix of the complex
    /// structure, `(dd^c psi)_{ab} = (H J)_{ba} - (H J)_{ab}`.
    pub fn ddc_psi_residual(&self, p: &Pt, step: f64) -> f64 {
        let dim = 2 * self.n;
        let f = |q: &Pt| self.psi(q);
        let mut hess = [[0.0; MAX_AMBIENT]; MAX_AMBIENT];
        let f0 = f(p);
        for a in 0..dim {
            for b in a..dim {
                let v = if a == b {
                    let mut qp = *p;
                    let mut qm = *p;
                    qp[a] += step;
                    qm[a] -= step;
                    (f(&qp) - 2.0 * f0 + f(&qm)) / (step * step)
                } else {
                    let mut s = 0.0;
                    for (sa, sb, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                        let mut q = *p;
                        q[a] += sa * step;
                        q[b] += sb * step;
                        s += w * f(&q);
                    }
                    s / (4.0 * step * step)
                };
                hess[a][b] = v;
                hess[b][a] = v;
            }
        }
        // J as a matrix: column c is J(e_c).
        let j_col = |c: usize| {
            let mut e = ZERO;
            e[c] = 1.0;
            apply_j(&e)
        };
        let mut hj = [[0.0; MAX_AMBIENT]; MAX_AMBIENT];
        for (a, row) in hj.iter_mut().enumerate().take(dim) {
            for (b, slot) in row.iter_mut().enumerate().take(dim) {
                let jb = j_col(b);
                *slot = (0..dim).map(|c| hess[a][c] * jb[c]).sum();
            }
        }
        let mut worst = 0.0f64;
        for a in 0..dim {
            for b in 0..dim {
                worst = worst.max((hj[b][a] - hj[a][b]).abs());
            }
        }
        worst
    }

    pub fn conformal_factor(&self, p: &Pt, which: ConformalMetric) -> f64 {
        let n = self.n as f64;
        match which {
            ConformalMetric::Bar => 1.0,
            ConformalMetric::Tilde => (2.0 * self.psi(p)).exp(),
            ConformalMetric::Hat => (2.0 * n / (n + 2.0) * self.psi(p)).exp(),
        }
    }

    /// Weight turning `dV_g` into the volume form induced by `which` on an
    /// `n`-dimensional submanifold: `1`, `e^{n psi}` or `e^{n^2/(n+2) psi}`.
    pub fn volume_weight(&self, p: &Pt, which: ConformalMetric) -> f64 {
        let n = self.n as f64;
        match which {
            ConformalMetric::Bar => 1.0,
            ConformalMetric::Tilde => (n * self.psi(p)).exp(),
            ConformalMetric::Hat => (n * n / (n + 2.0) * self.psi(p)).exp(),
        }
    }
}
