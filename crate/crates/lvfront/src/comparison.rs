//! Comparison-principle ingredients: decay exponents at the two stable
//! states, their periodic eigenfunctions, the cutoff ρ, homogenization
//! correctors, drift functions, and a residual checker for candidate
//! super/sub-solutions.

use crate::kinetics::{Kinetic, PeriodicSystem};
use crate::periodic_fn::{check_a2, SystemConfig};
use crate::quadrature::{periodic_breaks, pieces, Rule};
use crate::wavespeed::{capture_wave, PeriodicWave, SpeedSettings};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ComparisonError {
    #[error("decay exponents not all positive: {0:?}")]
    NotStable([f64; 4]),
    #[error("invalid mu: {0}")]
    BadMu(f64),
    #[error("nonpositive constant {name} = {value}")]
    BadConstant { name: &'static str, value: f64 },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("wave capture failed: {0}")]
    Speed(String),
}

/// `−` refers to the state `0`, `+` to the state `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Minus,
    Plus,
}

/// `∂_{v_i} g_i` at `0` (minus) or `1` (plus).
pub fn diagonal_rate(loc: &crate::kinetics::Local, i: usize, side: Side) -> f64 {
    let v = match side {
        Side::Minus => [0.0, 0.0],
        Side::Plus => [1.0, 1.0],
    };
    loc.jac(v)[i][i]
}

fn quad_grid(model: &PeriodicSystem) -> (Vec<f64>, Vec<f64>) {
    let t = model.period();
    let m = model.p1.m().max(model.p2.m());
    let grid: Vec<f64> = (0..=m).map(|j| t * j as f64 / m as f64).collect();
    let unit: Vec<f64> = model.sys.breakpoints();
    let breaks: Vec<f64> = periodic_breaks(&unit, 0.0, 1.0).into_iter().map(|s| s * t).collect();
    (grid, breaks)
}

fn cumulative_of<F: Fn(f64) -> f64 + Sync>(grid: &[f64], breaks: &[f64], f: F) -> Vec<f64> {
    let rule = Rule::new(6);
    let parts: Vec<f64> = grid
        .par_windows(2)
        .map(|w| rule.integrate_split(w[0], w[1], breaks, &f))
        .collect();
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(0.0);
    for p in parts {
        acc += p;
        out.push(acc);
    }
    out
}

/// `(λ₁⁻, λ₂⁻, λ₁⁺, λ₂⁺)` as period means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lambdas {
    pub minus: [f64; 2],
    pub plus: [f64; 2],
}

impl Lambdas {
    pub fn all(&self) -> [f64; 4] {
        [self.minus[0], self.minus[1], self.plus[0], self.plus[1]]
    }

    pub fn get(&self, i: usize, side: Side) -> f64 {
        match side {
            Side::Minus => self.minus[i],
            Side::Plus => self.plus[i],
        }
    }
}

fn rate_integral(model: &PeriodicSystem, i: usize, side: Side) -> (Vec<f64>, Vec<f64>) {
    let (grid, breaks) = quad_grid(model);
    let cum = cumulative_of(&grid, &breaks, |t| diagonal_rate(&model.local(t), i, side));
    (grid, cum)
}

pub fn lambdas(model: &PeriodicSystem) -> Lambdas {
    let t = model.period();
    let lam = |i, side| -rate_integral(model, i, side).1.last().copied().unwrap() / t;
    Lambdas {
        minus: [lam(0, Side::Minus), lam(1, Side::Minus)],
        plus: [lam(0, Side::Plus), lam(1, Side::Plus)],
    }
}

/// `μ = 0.9·min λ/2`.
pub fn choose_mu(l: &Lambdas) -> Result<f64, ComparisonError> {
    let all = l.all();
    if all.iter().any(|&x| !(x > 0.0)) {
        return Err(ComparisonError::NotStable(all));
    }
    Ok(0.9 * all.iter().fold(f64::INFINITY, |m, &x| m.min(x / 2.0)))
}

/// Sampled periodic eigenfunction with a cubic Hermite interpolant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    pub species: usize,
    pub side: Side,
    pub lambda: f64,
    pub period: f64,
    pub values: Vec<f64>,
    /// Exact derivatives `(λ + ∂g)ψ` at the samples.
    pub derivs: Vec<f64>,
    /// Factor applied to the `ψ(0) = 1` solution.
    pub scale: f64,
}

impl EigenPair {
    pub fn m(&self) -> usize {
        self.values.len() - 1
    }

    pub fn value(&self, t: f64) -> f64 {
        let m = self.m();
        let dt = self.period / m as f64;
        let x = (t / self.period).rem_euclid(1.0) * m as f64;
        let j = (x.floor() as usize).min(m - 1);
        let u = x - j as f64;
        let (p0, p1) = (self.values[j], self.values[j + 1]);
        let (d0, d1) = (self.derivs[j] * dt, self.derivs[j + 1] * dt);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * d0 + (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * d1
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v))
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn periodicity_defect(&self) -> f64 {
        (self.values[self.m()] - self.values[0]).abs()
    }

    fn rescaled(mut self, c: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= c);
        self.derivs.iter_mut().for_each(|v| *v *= c);
        self.scale *= c;
        self
    }

    /// `max |ψ′ − ∂g·ψ − λψ|` with `ψ′` from a fourth-order periodic central difference of the samples.
    pub fn ode_residual(&self, model: &PeriodicSystem) -> f64 {
        let m = self.m();
        let dt = self.period / m as f64;
        let at = |j: isize| self.values[j.rem_euclid(m as isize) as usize];
        (0..m)
            .map(|j| {
                let j = j as isize;
                let d = (at(j - 2) - 8.0 * at(j - 1) + 8.0 * at(j + 1) - at(j + 2)) / (12.0 * dt);
                let t = j as f64 * dt;
                let rate = diagonal_rate(&model.local(t), self.species, self.side);
                (d - (rate + self.lambda) * at(j)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `ψ(t) = exp ∫₀ᵗ (λ + ∂g)` with `ψ(0) = 1`.
pub fn eigenfunction(model: &PeriodicSystem, i: usize, side: Side) -> EigenPair {
    let (grid, cum) = rate_integral(model, i, side);
    let t = model.period();
    let lambda = -cum.last().copied().unwrap() / t;
    let values: Vec<f64> = grid.iter().zip(&cum).map(|(&s, &c)| (lambda * s + c).exp()).collect();
    let derivs = grid
        .iter()
        .zip(&values)
        .map(|(&s, &v)| (lambda + diagonal_rate(&model.local(s), i, side)) * v)
        .collect();
    EigenPair {
        species: i,
        side,
        lambda,
        period: t,
        values,
        derivs,
        scale: 1.0,
    }
}

/// The four eigenfunctions under the normalization
/// `‖ψ₁⁺‖ = ‖ψ₂⁻‖ = 1`, `‖k₁p₂ψ₂⁺/ψ₁⁺‖ = ‖k₂p₁ψ₁⁻/ψ₂⁻‖ = μ/4`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSet {
    pub mu: f64,
    pub minus: [EigenPair; 2],
    pub plus: [EigenPair; 2],
}

impl EigenSet {
    pub fn get(&self, i: usize, side: Side) -> &EigenPair {
        match side {
            Side::Minus => &self.minus[i],
            Side::Plus => &self.plus[i],
        }
    }

    /// `(‖ψ₁⁺‖, ‖ψ₂⁻‖, ‖k₁p₂ψ₂⁺/ψ₁⁺‖, ‖k₂p₁ψ₁⁻/ψ₂⁻‖)` over the samples.
    pub fn identities(&self, model: &PeriodicSystem) -> [f64; 4] {
        let (r1, r2) = ratio_norms(model, &self.plus, &self.minus);
        [self.plus[0].sup(), self.minus[1].sup(), r1, r2]
    }

    /// `(ν₋, ν₊)`: bounds of all four eigenfunctions.
    pub fn bounds(&self) -> (f64, f64) {
        self.minus.iter().chain(&self.plus).fold((f64::INFINITY, 0.0), |(lo, hi), e| {
            (lo.min(e.inf()), hi.max(e.sup()))
        })
    }
}

fn ratio_norms(model: &PeriodicSystem, plus: &[EigenPair; 2], minus: &[EigenPair; 2]) -> (f64, f64) {
    let m = plus[0].m();
    let t = model.period();
    let mut r1: f64 = 0.0;
    let mut r2: f64 = 0.0;
    for j in 0..=m {
        let s = t * j as f64 / m as f64;
        let loc = model.local(s);
        r1 = r1.max(loc.c.k[0] * loc.p[1] * plus[1].values[j] / plus[0].values[j]);
        r2 = r2.max(loc.c.k[1] * loc.p[0] * minus[0].values[j] / minus[1].values[j]);
    }
    (r1, r2)
}

pub fn normalized_eigenfunctions(model: &PeriodicSystem, mu: f64) -> Result<EigenSet, ComparisonError> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(ComparisonError::BadMu(mu));
    }
    let p1 = eigenfunction(model, 0, Side::Plus);
    let p1 = {
        let s = p1.sup();
        p1.rescaled(1.0 / s)
    };
    let m2 = eigenfunction(model, 1, Side::Minus);
    let m2 = {
        let s = m2.sup();
        m2.rescaled(1.0 / s)
    };
    let plus = [p1, eigenfunction(model, 1, Side::Plus)];
    let minus = [eigenfunction(model, 0, Side::Minus), m2];
    let (r1, r2) = ratio_norms(model, &plus, &minus);
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(ComparisonError::BadMu(mu));
    }
    let [pa, pb] = plus;
    let [ma, mb] = minus;
    Ok(EigenSet {
        mu,
        plus: [pa, pb.rescaled(0.25 * mu / r1)],
        minus: [ma.rescaled(0.25 * mu / r2), mb],
    })
}

/// Quintic bridge from 1 on `(−∞, 0]` to 0 on `[2, ∞)`: value, first and second derivative.
pub fn rho(xi: f64) -> (f64, f64, f64) {
    if xi <= 0.0 {
        return (1.0, 0.0, 0.0);
    }
    if xi >= 2.0 {
        return (0.0, 0.0, 0.0);
    }
    let u = 0.5 * xi;
    let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    let ds = 30.0 * u * u * (1.0 - u) * (1.0 - u);
    let dds = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
    (1.0 - s, -0.5 * ds, -0.25 * dds)
}

/// Homogenization correctors `D_{i,T}(t)` and the pieces of `G_{i,T}(t, v)`.
///
/// `G₁ = v₁(1−v₁)·A₁ − v₁(1−v₂)·B₁` and `G₂ = −v₂(1−v₂)·A₂ + v₁(1−v₂)·B₂`, with
/// `A_i = ∫(a_i p_{i,T} − r̄_i)` and `B_i = ∫(k_i p_{j,T} − k̄_i p̄_j)` over `[0, t/T]`.
#[derive(Debug, Clone, Serialize)]
pub struct Correctors {
    pub period: f64,
    grid: Vec<f64>,
    /// Cumulative tables for `D₁, D₂, A₁, A₂, B₁, B₂`.
    tables: [Vec<f64>; 6],
    #[serde(skip)]
    model: PeriodicSystem,
    breaks: Vec<f64>,
    means: [f64; 6],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectorValues {
    pub d: [f64; 2],
    pub g: [f64; 2],
}

impl Correctors {
    pub fn new(model: &PeriodicSystem) -> Self {
        let t = model.period();
        let (grid, breaks) = quad_grid(model);
        let mean = model.sys.means();
        let pbar = mean.p();
        let means = [
            mean.d[0],
            mean.d[1],
            mean.r[0],
            mean.r[1],
            mean.k[0] * pbar[1],
            mean.k[1] * pbar[0],
        ];
        let tables = std::array::from_fn(|q| {
            let f = |s: f64| Self::integrand(model, q, s) - means[q];
            // dτ = ds/T
            cumulative_of(&grid, &breaks, f).into_iter().map(|v| v / t).collect()
        });
        Self {
            period: t,
            grid,
            tables,
            model: model.clone(),
            breaks,
            means,
        }
    }

    fn integrand(model: &PeriodicSystem, q: usize, s: f64) -> f64 {
        let loc = model.local(s);
        match q {
            0 => loc.c.d[0],
            1 => loc.c.d[1],
            2 => loc.c.a[0] * loc.p[0],
            3 => loc.c.a[1] * loc.p[1],
            4 => loc.c.k[0] * loc.p[1],
            _ => loc.c.k[1] * loc.p[0],
        }
    }

    fn table_at(&self, q: usize, t: f64) -> f64 {
        let tp = self.period;
        let cycles = (t / tp).floor();
        let r = t - cycles * tp;
        let m = self.grid.len() - 1;
        let j = ((r / tp * m as f64).floor() as usize).min(m - 1);
        let full = self.tables[q][m];
        let rule = Rule::new(6);
        let part = rule.integrate_split(self.grid[j], r, &self.breaks, |s| {
            Self::integrand(&self.model, q, s) - self.means[q]
        }) / tp;
        cycles * full + self.tables[q][j] + part
    }

    /// `(D₁, D₂, G₁, G₂)` at `(t, v)`.
    pub fn eval(&self, t: f64, v: [f64; 2]) -> CorrectorValues {
        let [d1, d2, a1, a2, b1, b2] = std::array::from_fn(|q| self.table_at(q, t));
        CorrectorValues {
            d: [d1, d2],
            g: [
                v[0] * (1.0 - v[0]) * a1 - v[0] * (1.0 - v[1]) * b1,
                -v[1] * (1.0 - v[1]) * a2 + v[0] * (1.0 - v[1]) * b2,
            ],
        }
    }

    /// Largest `|D(T)|, |A(T)|, |B(T)|`: zero exactly when the correctors are T-periodic.
    pub fn periodicity_defect(&self) -> f64 {
        let m = self.grid.len() - 1;
        self.tables.iter().fold(0.0, |acc, tab| acc.max(tab[m].abs()))
    }
}

pub fn correctors_dg(c: &Correctors, t: f64, v: [f64; 2]) -> CorrectorValues {
    c.eval(t, v)
}

fn positive(name: &'static str, value: f64) -> Result<f64, ComparisonError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ComparisonError::BadConstant { name, value })
    }
}

/// Small-period drifts `q_T` and `η_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallPeriodDrift {
    pub eps: f64,
    pub mu: f64,
    pub nu_minus: f64,
    pub nu_plus: f64,
    pub l0: f64,
    pub b0: f64,
    pub beta0: f64,
    pub period: f64,
}

impl SmallPeriodDrift {
    pub fn new(eps: f64, mu: f64, nu: (f64, f64), l0: f64, b0: f64, beta0: f64, period: f64) -> Result<Self, ComparisonError> {
        let d = Self {
            eps: positive("eps", eps)?,
            mu: positive("mu", mu)?,
            nu_minus: positive("nu_minus", nu.0)?,
            nu_plus: positive("nu_plus", nu.1)?,
            l0: positive("L0", l0)?,
            b0: positive("B0", b0)?,
            beta0: positive("beta0", beta0)?,
            period: positive("T", period)?,
        };
        if d.floor() >= eps {
            return Err(ComparisonError::BadConstant {
                name: "T (must be below eps·mu·nu_minus/L0)",
                value: period,
            });
        }
        Ok(d)
    }

    fn rate(&self) -> f64 {
        self.mu * self.nu_minus / self.nu_plus
    }

    fn floor(&self) -> f64 {
        self.l0 * self.period / (self.mu * self.nu_minus)
    }

    pub fn q(&self, t: f64) -> f64 {
        self.floor() + (self.eps - self.floor()) * (-self.rate() * t).exp()
    }

    pub fn dq(&self, t: f64) -> f64 {
        -self.rate() * (self.eps - self.floor()) * (-self.rate() * t).exp()
    }

    pub fn eta(&self, t: f64) -> f64 {
        let f = self.floor();
        -2.0 * (self.b0 + self.mu * self.nu_minus) / self.beta0
            * (f * t + (self.eps - f) / self.rate() * (1.0 - (-self.rate() * t).exp()))
    }

    pub fn deta(&self, t: f64) -> f64 {
        -2.0 * (self.b0 + self.mu * self.nu_minus) / self.beta0 * self.q(t)
    }
}

/// Large-period drifts `q_T` and `κ_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargePeriodDrift {
    pub eps: f64,
    pub gamma0: f64,
    pub c5: f64,
    pub k2: f64,
    pub period: f64,
}

impl LargePeriodDrift {
    pub fn new(eps: f64, gamma0: f64, c5: f64, k2: f64, period: f64) -> Result<Self, ComparisonError> {
        let d = Self {
            eps: positive("eps", eps)?,
            gamma0: positive("gamma0", gamma0)?,
            c5: positive("C5", c5)?,
            k2: positive("K2", k2)?,
            period: positive("T", period)?,
        };
        if d.floor() >= eps {
            return Err(ComparisonError::BadConstant {
                name: "T (must exceed 2·C5/(eps·gamma0))",
                value: period,
            });
        }
        Ok(d)
    }

    fn floor(&self) -> f64 {
        2.0 * self.c5 / (self.period * self.gamma0)
    }

    pub fn q(&self, t: f64) -> f64 {
        self.floor() + (self.eps - self.floor()) * (-0.5 * self.gamma0 * t).exp()
    }

    pub fn dq(&self, t: f64) -> f64 {
        -0.5 * self.gamma0 * (self.eps - self.floor()) * (-0.5 * self.gamma0 * t).exp()
    }

    pub fn kappa(&self, t: f64) -> f64 {
        let f = self.floor();
        -self.k2 * (f * t + 2.0 / self.gamma0 * (self.eps - f) * (1.0 - (-0.5 * self.gamma0 * t).exp()))
    }

    pub fn dkappa(&self, t: f64) -> f64 {
        -self.k2 * self.q(t)
    }
}

/// `X_T(t) = ∫₀ᵗ c(τ/T) dτ` for a 1-periodic `c` with kinks at `unit_breaks`.
pub fn frozen_drift<F: Fn(f64) -> f64>(c: F, unit_breaks: &[f64], period: f64, t: f64) -> f64 {
    let rule = Rule::new(16);
    let s_end = t / period;
    let full = s_end.floor();
    let one: f64 = pieces(0.0, 1.0, unit_breaks)
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], &c))
        .sum();
    let rest: f64 = pieces(0.0, s_end - full, unit_breaks)
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], &c))
        .sum();
    period * (full * one + rest)
}

/// Candidate fields on a uniform space-time grid: `v[n][j]` at `(t0 + n·dt, x0 + j·h)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceTimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub x0: f64,
    pub h: f64,
    pub v1: Vec<Vec<f64>>,
    pub v2: Vec<Vec<f64>>,
}

impl SpaceTimeGrid {
    /// Samples `f(t, x)` on the grid.
    pub fn sample<F: Fn(f64, f64) -> [f64; 2] + Sync>(t0: f64, dt: f64, nt: usize, x0: f64, h: f64, nx: usize, f: F) -> Self {
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..nt)
            .into_par_iter()
            .map(|n| {
                let t = t0 + n as f64 * dt;
                (0..nx).map(|j| f(t, x0 + j as f64 * h)).map(|v| (v[0], v[1])).unzip()
            })
            .collect();
        let (v1, v2) = rows.into_iter().unzip();
        Self { t0, dt, x0, h, v1, v2 }
    }

    pub fn nt(&self) -> usize {
        self.v1.len()
    }

    pub fn nx(&self) -> usize {
        self.v1.first().map_or(0, |r| r.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub min: [f64; 2],
    pub max: [f64; 2],
    /// Richardson estimate of the finite-difference truncation error.
    pub truncation: f64,
    pub tol: f64,
    /// Super-solution verdict: both minima above `−tol`.
    pub pass: bool,
    /// Sub-solution verdict: both maxima below `tol`.
    pub sub_pass: bool,
}

/// `L_i = ∂_t v_i − d_i ∂_xx v_i − g_i` by central differences with stride `k`.
fn residual_at(grid: &SpaceTimeGrid, model: &impl Kinetic, n: usize, j: usize, k: usize) -> [f64; 2] {
    let t = grid.t0 + n as f64 * grid.dt;
    let loc = model.local(t);
    let kd = k as f64;
    let v = [grid.v1[n][j], grid.v2[n][j]];
    let g = loc.g(v);
    let mut out = [0.0; 2];
    for (i, f) in [&grid.v1, &grid.v2].into_iter().enumerate() {
        let vt = (f[n + k][j] - f[n - k][j]) / (2.0 * kd * grid.dt);
        let vxx = (f[n][j - k] - 2.0 * f[n][j] + f[n][j + k]) / (kd * kd * grid.h * grid.h);
        out[i] = vt - loc.c.d[i] * vxx - g[i];
    }
    out
}

/// Super-solution test on sampled fields: passes iff both residuals stay above `−tol`.
pub fn residual_check(grid: &SpaceTimeGrid, model: &impl Kinetic, tol: f64) -> Result<ResidualReport, ComparisonError> {
    let (nt, nx) = (grid.nt(), grid.nx());
    if nt < 5 || nx < 5 || grid.v2.len() != nt {
        return Err(ComparisonError::BadGrid(format!("{nt} x {nx}")));
    }
    let period = if model.is_autonomous() { 1.0 } else { model.period() };
    if grid.h > 0.05 + 1e-12 || grid.dt > 1e-3 * period * (1.0 + 1e-9) {
        return Err(ComparisonError::GridTooCoarse(format!(
            "need h <= 0.05 and dt <= 1e-3*T, got h = {}, dt = {}",
            grid.h, grid.dt
        )));
    }
    let rows: Vec<([f64; 2], [f64; 2], f64)> = (1..nt - 1)
        .into_par_iter()
        .map(|n| {
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            let mut tr: f64 = 0.0;
            for j in 1..nx - 1 {
                let r = residual_at(grid, model, n, j, 1);
                for i in 0..2 {
                    lo[i] = lo[i].min(r[i]);
                    hi[i] = hi[i].max(r[i]);
                }
                if n >= 2 && n + 2 < nt && j >= 2 && j + 2 < nx {
                    let r2 = residual_at(grid, model, n, j, 2);
                    tr = tr.max((r[0] - r2[0]).abs().max((r[1] - r2[1]).abs()) / 3.0);
                }
            }
            (lo, hi, tr)
        })
        .collect();
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    let mut truncation: f64 = 0.0;
    for (lo, hi, tr) in rows {
        for i in 0..2 {
            min[i] = min[i].min(lo[i]);
            max[i] = max[i].max(hi[i]);
        }
        truncation = truncation.max(tr);
    }
    if truncation > 0.5 * tol {
        return Err(ComparisonError::GridTooCoarse(format!(
            "estimated truncation {truncation:.3e} exceeds tol/2 = {:.3e}",
            0.5 * tol
        )));
    }
    Ok(ResidualReport {
        min,
        max,
        truncation,
        tol,
        pass: min[0] >= -tol && min[1] >= -tol,
        sub_pass: max[0] <= tol && max[1] <= tol,
    })
}

/// Spatially constant barrier `ε(C₁, C₂)e^{−γ₀t/2}` near `0` for long periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayBarrier {
    pub eps: f64,
    pub gamma0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl DecayBarrier {
    pub fn value(&self, t: f64) -> [f64; 2] {
        let e = self.eps * (-0.5 * self.gamma0 * t).exp();
        [e * self.c1, e * self.c2]
    }

    /// Exact residual `v′ − g(t, v)`.
    pub fn residual(&self, model: &impl Kinetic, t: f64) -> [f64; 2] {
        let v = self.value(t);
        let g = model.local(t).g(v);
        [-0.5 * self.gamma0 * v[0] - g[0], -0.5 * self.gamma0 * v[1] - g[1]]
    }
}

/// `C₂ = γ₀/(8θ₊γ₊)`, `C₁ = γ₀C₂/(4θ₊γ₊)`, with `γ₀` from the pointwise bistability margin.
pub fn large_period_barrier(sys: &SystemConfig, eps: f64) -> Result<DecayBarrier, ComparisonError> {
    let a2 = check_a2(sys, 1024);
    let gamma0 = positive("gamma0", a2.gamma0)?;
    let theta = positive("theta+", sys.theta_bounds().1)?;
    let gamma_plus = positive("gamma+", sys.gamma_bounds(0).1.max(sys.gamma_bounds(1).1))?;
    let c2 = gamma0 / (8.0 * theta * gamma_plus);
    Ok(DecayBarrier {
        eps: positive("eps", eps)?,
        gamma0,
        c1: gamma0 * c2 / (4.0 * theta * gamma_plus),
        c2,
    })
}

/// Minimum over `[0, horizon]` of each residual divided by the barrier value (the sign is what matters).
pub fn barrier_margin(barrier: &DecayBarrier, model: &impl Kinetic, horizon: f64, samples: usize) -> [f64; 2] {
    (0..=samples)
        .map(|n| {
            let t = horizon * n as f64 / samples as f64;
            let r = barrier.residual(model, t);
            let v = barrier.value(t);
            [r[0] / v[0], r[1] / v[1]]
        })
        .fold([f64::INFINITY; 2], |m, r| [m[0].min(r[0]), m[1].min(r[1])])
}

/// Parameters of the fixed-period barrier built from a wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveBarrier {
    pub eps: f64,
    pub k: f64,
    pub xi0: f64,
    /// `+1` for the super-solution, `−1` for the sub-solution.
    pub sign: f64,
}

/// `φ(ξ±, t) ± εe^{−μt}(ρ(ξ±)ψ⁺(t) + (1 − ρ(ξ±))ψ⁻(t))` with `ξ± = x − ct + ξ₀ ± εK(e^{−μt} − 1)`.
pub fn wave_barrier(wave: &PeriodicWave, eig: &EigenSet, b: &WaveBarrier, t: f64, x: f64) -> [f64; 2] {
    let decay = (-eig.mu * t).exp();
    let xi = x - wave.speed * t + b.xi0 + b.sign * b.eps * b.k * (decay - 1.0);
    let phi = wave.phi(xi, t);
    let (r, _, _) = rho(xi);
    std::array::from_fn(|i| {
        let mix = r * eig.plus[i].value(t) + (1.0 - r) * eig.minus[i].value(t);
        phi[i] + b.sign * b.eps * decay * mix
    })
}

/// Residuals of a captured wave and of the barriers built from it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveResidual {
    pub speed: f64,
    pub eps: f64,
    pub k: f64,
    pub wave: ResidualReport,
    pub super_barrier: ResidualReport,
    pub sub_barrier: ResidualReport,
}

/// Records per period of the captured wave; the check grid uses the same time step.
const RECORDS: usize = 1000;

/// Converges a wave with `settings`, then checks it over one period on
/// `|x| ≤ L/2`, and its barriers (`ξ0 = 0`, shift gain `k`) over three.
pub fn capture_wave_residual(
    model: &PeriodicSystem,
    settings: &SpeedSettings,
    eps: f64,
    k: f64,
    tol: f64,
) -> Result<WaveResidual, ComparisonError> {
    let mu = choose_mu(&lambdas(model))?;
    let eig = normalized_eigenfunctions(model, mu)?;
    let wave = capture_wave(model, model.max_lipschitz(), settings, RECORDS)
        .map_err(|e| ComparisonError::Speed(e.to_string()))?;
    let h = settings.h.min(0.05);
    let half = 0.5 * settings.half_width;
    let nx = (2.0 * half / h).round() as usize + 1;
    let dt = wave.period / RECORDS as f64;
    let grid = SpaceTimeGrid::sample(0.0, dt, RECORDS + 1, -half, h, nx, |t, x| wave.phi(x - wave.speed * t, t));
    let wave_report = residual_check(&grid, model, tol)?;
    let barrier = |sign: f64| {
        let b = WaveBarrier { eps, k, xi0: 0.0, sign };
        let g = SpaceTimeGrid::sample(0.0, dt, 3 * RECORDS + 1, -half, h, nx, |t, x| wave_barrier(&wave, &eig, &b, t, x));
        residual_check(&g, model, tol)
    };
    Ok(WaveResidual {
        speed: wave.speed,
        eps,
        k,
        wave: wave_report,
        super_barrier: barrier(1.0)?,
        sub_barrier: barrier(-1.0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic_fn::{example_family, Coeffs, PeriodicFn};
    use approx::assert_abs_diff_eq;

    fn trig_system(period: f64) -> SystemConfig {
        let one = PeriodicFn::constant(1.0);
        SystemConfig {
            d1: one.clone(),
            d2: PeriodicFn::trig(1.0, vec![0.2], vec![]).unwrap(),
            r1: PeriodicFn::trig(1.0, vec![0.3], vec![0.1]).unwrap(),
            r2: PeriodicFn::trig(1.2, vec![], vec![0.4]).unwrap(),
            a1: one.clone(),
            a2: PeriodicFn::trig(1.0, vec![0.1], vec![]).unwrap(),
            k1: PeriodicFn::trig(2.0, vec![], vec![0.5]).unwrap(),
            k2: PeriodicFn::constant(2.5),
            period,
        }
    }

    #[test]
    fn constant_lambdas() {
        let c = Coeffs {
            d: [1.0, 1.0],
            r: [1.0, 2.0],
            a: [1.0, 1.0],
            k: [2.0, 1.5],
        };
        let model = PeriodicSystem::new(&SystemConfig::constant(c, 1.0), 256).unwrap();
        let l = lambdas(&model);
        assert_abs_diff_eq!(l.plus[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.minus[0], 2.0 * 2.0 - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.minus[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.plus[1], 1.5 - 2.0, epsilon = 1e-12);
        let e = eigenfunction(&model, 0, Side::Minus);
        assert!(e.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn mu_arithmetic() {
        let l = Lambdas {
            minus: [2.0, 2.0],
            plus: [2.0, 2.0],
        };
        assert_abs_diff_eq!(choose_mu(&l).unwrap(), 0.9, epsilon = 1e-15);
        let l = Lambdas {
            minus: [1.0, 4.0],
            plus: [4.0, 4.0],
        };
        assert_abs_diff_eq!(choose_mu(&l).unwrap(), 0.45, epsilon = 1e-15);
        let l = Lambdas {
            minus: [-1.0, 4.0],
            plus: [4.0, 4.0],
        };
        assert!(choose_mu(&l).is_err());
    }

    #[test]
    fn eigenfunctions_on_trig_family() {
        for period in [1.0, 10.0] {
            let model = PeriodicSystem::new(&trig_system(period), 4096).unwrap();
            let l = lambdas(&model);
            let mu = choose_mu(&l).unwrap();
            let set = normalized_eigenfunctions(&model, mu).unwrap();
            for e in set.minus.iter().chain(&set.plus) {
                assert!(e.periodicity_defect() <= 1e-10 * e.sup());
                assert!(e.inf() > 0.0);
                assert_abs_diff_eq!(e.lambda, l.get(e.species, e.side), epsilon = 1e-12);
                let r = e.ode_residual(&model);
                assert!(r <= 1e-8, "T = {period}: residual {r}");
            }
            let id = set.identities(&model);
            for (got, want) in id.iter().zip([1.0, 1.0, 0.25 * mu, 0.25 * mu]) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn rho_shape() {
        assert_eq!(rho(-1.0), (1.0, 0.0, 0.0));
        assert_eq!(rho(3.0).0, 0.0);
        let mut min_d: f64 = 0.0;
        let mut max_dd: f64 = 0.0;
        for k in 0..=10_000 {
            let (_, d, dd) = rho(2.0 * k as f64 / 10_000.0);
            min_d = min_d.min(d);
            max_dd = max_dd.max(dd.abs());
        }
        assert!(min_d >= -1.0);
        // the C² bridge over a length-2 interval cannot reach |ρ″| ≤ 1; this is its exact maximum
        assert_abs_diff_eq!(max_dd, 10.0 * 3f64.sqrt() / 12.0, epsilon = 1e-6);
    }

    #[test]
    fn correctors_vanish_at_period_ends() {
        let model = PeriodicSystem::new(&example_family(3.5, 12.0, 0.02, 0.2).unwrap(), 2048).unwrap();
        let c = Correctors::new(&model);
        assert!(c.periodicity_defect() < 1e-10, "{}", c.periodicity_defect());
        let z = c.eval(0.0, [0.3, 0.7]);
        assert_eq!(z.g, [0.0, 0.0]);
        let w = c.eval(0.2, [0.3, 0.7]);
        assert!(w.d[0].abs() < 1e-12 && w.g[0].abs() < 1e-10 && w.g[1].abs() < 1e-10);
        let a = c.eval(0.05, [0.3, 0.7]);
        let b = c.eval(0.25, [0.3, 0.7]);
        assert_abs_diff_eq!(a.g[1], b.g[1], epsilon = 1e-10);
        let flat = PeriodicSystem::frozen(&example_family(3.5, 12.0, 0.02, 1.0).unwrap(), 0.4);
        let cf = Correctors::new(&flat);
        let v = cf.eval(0.37, [0.2, 0.9]);
        assert!(v.d.iter().chain(&v.g).all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn drifts() {
        let s = SmallPeriodDrift::new(0.1, 0.5, (0.5, 2.0), 1.0, 3.0, 0.2, 0.01).unwrap();
        assert_eq!(s.q(0.0), 0.1);
        assert_eq!(s.eta(0.0), 0.0);
        for k in 1..10_000 {
            let t = k as f64 * 0.01;
            assert!(s.dq(t) < 0.0 && s.deta(t) < 0.0);
            assert!(s.q(t) < s.q(t - 0.01) && s.eta(t) < s.eta(t - 0.01));
        }
        assert!(SmallPeriodDrift::new(0.1, 0.5, (0.5, 2.0), 1.0, 3.0, 0.2, 1.0).is_err());
        assert!(SmallPeriodDrift::new(0.1, -0.5, (0.5, 2.0), 1.0, 3.0, 0.2, 0.01).is_err());
        let l = LargePeriodDrift::new(0.05, 0.15, 0.2, 4.0, 200.0).unwrap();
        assert_eq!(l.q(0.0), 0.05);
        assert_eq!(l.kappa(0.0), 0.0);
        for k in 1..10_000 {
            let t = k as f64 * 0.05;
            assert!(l.dq(t) < 0.0 && l.dkappa(t) < 0.0);
        }
    }

    #[test]
    fn drift_mean_speed() {
        let sharp = example_family(3.5, 12.0, 0.0, 1.0).unwrap();
        let c = |s: f64| crate::wavespeed::exact_speed(sharp.r2.value(s)).unwrap();
        let cstar = 2f64.sqrt() / 6.0 - 5.0 * 21f64.sqrt() / 63.0;
        let t = 3.0;
        let x = frozen_drift(c, &sharp.breakpoints(), t, 1000.0 * t);
        assert!(((x / (1000.0 * t)) - cstar).abs() / cstar.abs() < 1e-3);
        assert_eq!(frozen_drift(c, &sharp.breakpoints(), t, 0.0), 0.0);
    }

    #[test]
    fn decay_barrier_is_strict() {
        let sys = example_family(3.5, 12.0, 0.02, 50.0).unwrap();
        let model = PeriodicSystem::new(&sys, 8192).unwrap();
        let b = large_period_barrier(&sys, 0.5).unwrap();
        let m = barrier_margin(&b, &model, 2.0 * sys.period, 20_000);
        assert!(m[0] > 0.0 && m[1] > 0.0, "{m:?}");
    }
}
