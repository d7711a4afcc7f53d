//! Two-component parabolic solver on a truncated, recentred window.
//!
//! Each step treats diffusion with Crank–Nicolson (coefficient taken at the
//! half step) and the reaction with Heun's method, as a predictor–corrector
//! pair sharing one tridiagonal factorization:
//!
//! ```text
//! (I − δL) v*     = (I + δL) vⁿ + dt·R(tₙ, vⁿ)
//! (I − δL) vⁿ⁺¹   = (I + δL) vⁿ + dt/2·(R(tₙ, vⁿ) + R(tₙ₊₁, v*))
//! ```
//!
//! with `δ = d·dt/(2h²)` and `L` the three-point Laplacian. Boundary nodes are
//! pinned to the states the wave connects.

use crate::kinetics::Kinetic;
use serde::Serialize;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PdeError {
    #[error("solver blow-up at t = {t} (step {step}): non-finite state")]
    Blowup { t: f64, step: u64 },
    #[error("front lost: v1 does not cross 1/2")]
    FrontLost,
    #[error("non-monotone front: crossings at {0} and {1}")]
    NonMonotoneFront(f64, f64),
    #[error("bad grid: {0}")]
    BadGrid(String),
}

/// State on `x_j = −L + j·h`, `j = 0..=N`, in the moving frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveField {
    pub half_width: f64,
    pub n: usize,
    pub h: f64,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub t: f64,
    /// Cumulative frame shift: absolute position = window position + shift.
    pub shift: f64,
    pub steps: u64,
    pub left: [f64; 2],
    pub right: [f64; 2],
}

/// Initial data for [`initialize_front`].
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSource {
    /// `½(1 − tanh(x/width))` in both components.
    Tanh { width: f64 },
    /// Resampled by linear interpolation; values outside the sampled range take the end values.
    Samples {
        x: Vec<f64>,
        v1: Vec<f64>,
        v2: Vec<f64>,
    },
}

fn lerp_table(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let j = xs.partition_point(|&p| p <= x);
    let t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    ys[j - 1] + t * (ys[j] - ys[j - 1])
}

/// Monotone front from `(1,1)` at the left to `(0,0)` at the right.
pub fn initialize_front(half_width: f64, n: usize, source: &ProfileSource) -> Result<WaveField, PdeError> {
    if !(half_width > 0.0) || n < 8 {
        return Err(PdeError::BadGrid(format!("L = {half_width}, N = {n}")));
    }
    let h = 2.0 * half_width / n as f64;
    let xs: Vec<f64> = (0..=n).map(|j| -half_width + j as f64 * h).collect();
    let (mut v1, mut v2): (Vec<f64>, Vec<f64>) = match source {
        ProfileSource::Tanh { width } => xs
            .iter()
            .map(|&x| {
                let v = 0.5 * (1.0 - (x / width).tanh());
                (v, v)
            })
            .unzip(),
        ProfileSource::Samples { x, v1, v2 } => xs
            .iter()
            .map(|&p| (lerp_table(x, v1, p), lerp_table(x, v2, p)))
            .unzip(),
    };
    v1[0] = 1.0;
    v2[0] = 1.0;
    v1[n] = 0.0;
    v2[n] = 0.0;
    Ok(WaveField {
        half_width,
        n,
        h,
        v1,
        v2,
        t: 0.0,
        shift: 0.0,
        steps: 0,
        left: [1.0, 1.0],
        right: [0.0, 0.0],
    })
}

/// Spatially constant field pinned to that state at both ends.
pub fn uniform_field(half_width: f64, n: usize, v: [f64; 2]) -> WaveField {
    WaveField {
        half_width,
        n,
        h: 2.0 * half_width / n as f64,
        v1: vec![v[0]; n + 1],
        v2: vec![v[1]; n + 1],
        t: 0.0,
        shift: 0.0,
        steps: 0,
        left: v,
        right: v,
    }
}

impl WaveField {
    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.h
    }

    /// Window coordinate where `v1` crosses 1/2 (first bracketing pair from the left).
    pub fn crossing(&self) -> Result<f64, PdeError> {
        let v = &self.v1;
        let mut first: Option<f64> = None;
        for j in 0..self.n {
            let (a, b) = (v[j], v[j + 1]);
            if (a >= 0.5 && b < 0.5) || (a < 0.5 && b >= 0.5) {
                let x = self.x(j) + self.h * (a - 0.5) / (a - b);
                match first {
                    None => first = Some(x),
                    Some(x0) => {
                        if (x - x0).abs() > 2.0 * self.h {
                            return Err(PdeError::NonMonotoneFront(x0 + self.shift, x + self.shift));
                        }
                    }
                }
            }
        }
        first.ok_or(PdeError::FrontLost)
    }

    /// Largest increase of `v1` between neighbouring nodes (0 for a monotone profile).
    pub fn monotonicity_defect(&self) -> f64 {
        self.v1
            .windows(2)
            .chain(self.v2.windows(2))
            .fold(0.0_f64, |m, w| m.max(w[1] - w[0]))
    }

    /// Smallest and largest nodal values over both components.
    pub fn range(&self) -> (f64, f64) {
        self.v1
            .iter()
            .chain(&self.v2)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Shifts the window by `k` cells (positive: window moves right), filling with the pins.
    pub fn shift_cells(&mut self, k: isize) {
        if k == 0 {
            return;
        }
        let n = self.n as isize;
        let src1 = self.v1.clone();
        let src2 = self.v2.clone();
        for j in 0..=n {
            let from = j + k;
            let (a, b) = if from < 0 {
                (self.left[0], self.left[1])
            } else if from > n {
                (self.right[0], self.right[1])
            } else {
                (src1[from as usize], src2[from as usize])
            };
            self.v1[j as usize] = a;
            self.v2[j as usize] = b;
        }
        self.v1[0] = self.left[0];
        self.v2[0] = self.left[1];
        self.v1[self.n] = self.right[0];
        self.v2[self.n] = self.right[1];
        self.shift += k as f64 * self.h;
    }

    /// Recentres when the front is more than L/4 from the window centre. Returns the cell shift.
    pub fn recenter(&mut self) -> Result<isize, PdeError> {
        let xf = self.crossing()?;
        if xf.abs() <= 0.25 * self.half_width {
            return Ok(0);
        }
        let k = (xf / self.h).round() as isize;
        self.shift_cells(k);
        Ok(k)
    }

    /// Rows `(absolute x, v1, v2)`.
    pub fn snapshot(&self) -> Vec<[f64; 3]> {
        (0..=self.n)
            .map(|j| [self.x(j) + self.shift, self.v1[j], self.v2[j]])
            .collect()
    }
}

struct Factor {
    delta: f64,
    cp: Vec<f64>,
    inv: Vec<f64>,
}

impl Factor {
    fn new(delta: f64, len: usize) -> Self {
        let b = 1.0 + 2.0 * delta;
        let mut cp = vec![0.0; len];
        let mut inv = vec![0.0; len];
        inv[0] = 1.0 / b;
        cp[0] = -delta * inv[0];
        for i in 1..len {
            inv[i] = 1.0 / (b + delta * cp[i - 1]);
            cp[i] = -delta * inv[i];
        }
        Self { delta, cp, inv }
    }

    /// Solves `(1+2δ) x_i − δ(x_{i−1} + x_{i+1}) = d_i` in place.
    fn solve(&self, d: &mut [f64]) {
        let n = d.len();
        d[0] *= self.inv[0];
        for i in 1..n {
            d[i] = (d[i] + self.delta * d[i - 1]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.cp[i] * d[i + 1];
        }
    }
}

/// Reusable stepping workspace for a fixed `dt`.
pub struct Stepper {
    pub dt: f64,
    factors: [Option<Factor>; 2],
    expl: [Vec<f64>; 2],
    r0: [Vec<f64>; 2],
    buf: [Vec<f64>; 2],
}

impl Stepper {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            factors: [None, None],
            expl: [Vec::new(), Vec::new()],
            r0: [Vec::new(), Vec::new()],
            buf: [Vec::new(), Vec::new()],
        }
    }

    fn factor(&mut self, i: usize, delta: f64, len: usize) {
        let stale = match &self.factors[i] {
            Some(f) => f.delta != delta || f.cp.len() != len,
            None => true,
        };
        if stale {
            self.factors[i] = Some(Factor::new(delta, len));
        }
    }

    /// Advances `field` by one step of size `self.dt`.
    pub fn step(&mut self, field: &mut WaveField, model: &impl Kinetic) -> Result<(), PdeError> {
        let dt = self.dt;
        let n = field.n;
        let len = n - 1;
        let t = field.t;
        let mid = model.local(t + 0.5 * dt);
        let loc0 = model.local(t);
        let loc1 = model.local(t + dt);
        let h2 = field.h * field.h;
        let delta = [mid.c.d[0] * dt / (2.0 * h2), mid.c.d[1] * dt / (2.0 * h2)];
        for i in 0..2 {
            self.factor(i, delta[i], len);
            self.expl[i].resize(len, 0.0);
            self.r0[i].resize(len, 0.0);
            self.buf[i].resize(len, 0.0);
        }
        let pins = [[field.left[0], field.right[0]], [field.left[1], field.right[1]]];
        for (i, v) in [&field.v1, &field.v2].into_iter().enumerate() {
            let d = delta[i];
            let e = &mut self.expl[i];
            for j in 1..n {
                e[j - 1] = v[j] + d * (v[j - 1] - 2.0 * v[j] + v[j + 1]);
            }
            // implicit-side boundary contributions
            e[0] += d * pins[i][0];
            e[len - 1] += d * pins[i][1];
        }
        for j in 1..n {
            let g = loc0.g([field.v1[j], field.v2[j]]);
            self.r0[0][j - 1] = g[0];
            self.r0[1][j - 1] = g[1];
        }
        // predictor
        for i in 0..2 {
            let (e, r0, b) = (&self.expl[i], &self.r0[i], &mut self.buf[i]);
            for j in 0..len {
                b[j] = e[j] + dt * r0[j];
            }
            self.factors[i].as_ref().unwrap().solve(b);
        }
        // corrector
        for j in 0..len {
            let g = loc1.g([self.buf[0][j], self.buf[1][j]]);
            self.buf[0][j] = self.expl[0][j] + 0.5 * dt * (self.r0[0][j] + g[0]);
            self.buf[1][j] = self.expl[1][j] + 0.5 * dt * (self.r0[1][j] + g[1]);
        }
        for i in 0..2 {
            self.factors[i].as_ref().unwrap().solve(&mut self.buf[i]);
        }
        let mut finite = true;
        for j in 1..n {
            let (a, b) = (self.buf[0][j - 1], self.buf[1][j - 1]);
            finite &= a.is_finite() && b.is_finite();
            field.v1[j] = a;
            field.v2[j] = b;
        }
        field.v1[0] = field.left[0];
        field.v2[0] = field.left[1];
        field.v1[n] = field.right[0];
        field.v2[n] = field.right[1];
        field.steps += 1;
        field.t = t + dt;
        if !finite {
            return Err(PdeError::Blowup {
                t: field.t,
                step: field.steps,
            });
        }
        Ok(())
    }

    /// `steps` consecutive steps; the clock is reset to `t0 + steps·dt` to avoid drift.
    pub fn advance(&mut self, field: &mut WaveField, model: &impl Kinetic, steps: usize) -> Result<(), PdeError> {
        let t0 = field.t;
        for _ in 0..steps {
            self.step(field, model)?;
        }
        field.t = t0 + steps as f64 * self.dt;
        Ok(())
    }
}

/// One step of size `dt`.
pub fn step(field: &mut WaveField, model: &impl Kinetic, dt: f64) -> Result<(), PdeError> {
    Stepper::new(dt).step(field, model)
}

/// Steps per interval of length `tau` so that `dt ≤ dt_max` and `dt·Lipschitz ≤ 0.5`.
pub fn steps_per_interval(tau: f64, dt_max: f64, lipschitz: f64, m_min: usize) -> usize {
    let by_dt = (tau / dt_max).ceil() as usize;
    let by_lip = (tau * lipschitz / 0.5).ceil() as usize;
    m_min.max(by_dt).max(by_lip).max(1)
}
