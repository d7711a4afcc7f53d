//! Kinetics of the cooperative system.
//!
//! With `v1 = u1/p1`, `v2 = (p2 − u2)/p2` the competition system becomes
//! order preserving between `0 = (0,0)` and `1 = (1,1)`:
//!
//! ```text
//! g1 =  a1 p1 (1 − v1) v1 − k1 p2 v1 (1 − v2)
//! g2 = −a2 p2 (1 − v2) v2 + k2 p1 v1 (1 − v2)
//! ```
//!
//! This module holds the reaction terms, the RK4 flow together with its
//! variational equation, the Poincaré map and its interior fixed points,
//! Floquet multipliers, and the phase plane of the frozen (autonomous) system.

use crate::logistic::{periodic_logistic_closed_form, LogisticError, PeriodicState};
use crate::periodic_fn::{check_a2, Coeffs, SystemConfig};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KineticsError {
    #[error("state left [-0.1, 1.1]^2 at t = {t}; step too coarse (m = {m})")]
    Unstable { t: f64, m: usize },
    #[error("no interior fixed point: {0}")]
    NoInteriorFixedPoint(String),
    #[error("pointwise bistability fails at s = {0}")]
    NotBistable(f64),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Logistic(#[from] LogisticError),
}

/// Coefficients and semi-trivial states at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Local {
    pub c: Coeffs,
    pub p: [f64; 2],
}

impl Local {
    /// Frozen system: the semi-trivial states are `r_i / a_i`.
    pub fn frozen(c: Coeffs) -> Self {
        Self { c, p: c.p() }
    }

    pub fn g(&self, v: [f64; 2]) -> [f64; 2] {
        let Coeffs { a, k, .. } = self.c;
        let p = self.p;
        [
            a[0] * p[0] * (1.0 - v[0]) * v[0] - k[0] * p[1] * v[0] * (1.0 - v[1]),
            -a[1] * p[1] * (1.0 - v[1]) * v[1] + k[1] * p[0] * v[0] * (1.0 - v[1]),
        ]
    }

    /// Jacobian of `g` at `v`.
    pub fn jac(&self, v: [f64; 2]) -> Mat2 {
        let Coeffs { a, k, .. } = self.c;
        let p = self.p;
        [
            [
                a[0] * p[0] * (1.0 - 2.0 * v[0]) - k[0] * p[1] * (1.0 - v[1]),
                k[0] * p[1] * v[0],
            ],
            [
                k[1] * p[0] * (1.0 - v[1]),
                -a[1] * p[1] * (1.0 - 2.0 * v[1]) - k[1] * p[0] * v[0],
            ],
        ]
    }

    /// Bound on the row-sum norm of the Jacobian over `[0,1]^2`.
    pub fn lipschitz(&self) -> f64 {
        let Coeffs { a, k, .. } = self.c;
        let p = self.p;
        let row1 = a[0] * p[0] + 2.0 * k[0] * p[1];
        let row2 = a[1] * p[1] + 2.0 * k[1] * p[0];
        row1.max(row2)
    }

    /// Interior zero of `g` (the coexistence equilibrium of the instantaneous kinetics).
    pub fn interior_equilibrium(&self) -> Option<[f64; 2]> {
        let Coeffs { a, k, .. } = self.c;
        let p = self.p;
        let (b1, c1) = (a[0] * p[0], k[0] * p[1]);
        let (b2, c2) = (a[1] * p[1], k[1] * p[0]);
        // b1 (1 − v1) = c1 (1 − v2),  b2 v2 = c2 v1
        let den = c1 * c2 / b2 - b1;
        if den.abs() < 1e-300 {
            return None;
        }
        let v1 = (c1 - b1) / den;
        let v2 = c2 * v1 / b2;
        (v1 > 0.0 && v1 < 1.0 && v2 > 0.0 && v2 < 1.0).then_some([v1, v2])
    }
}

/// A source of instantaneous coefficients.
pub trait Kinetic: Sync {
    fn local(&self, t: f64) -> Local;
    fn period(&self) -> f64;
    fn is_autonomous(&self) -> bool;
}

/// A system together with its two semi-trivial periodic states.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodicSystem {
    pub sys: SystemConfig,
    pub p1: PeriodicState,
    pub p2: PeriodicState,
    autonomous: bool,
}

impl PeriodicSystem {
    /// Builds `p_{1,T}`, `p_{2,T}` with `m` samples per period.
    pub fn new(sys: &SystemConfig, m: usize) -> Result<Self, KineticsError> {
        sys.validate()
            .map_err(|e| KineticsError::BadInput(e.to_string()))?;
        let t = sys.period;
        let autonomous = sys.is_autonomous();
        let (p1, p2) = if autonomous {
            let p = sys.at(0.0).p();
            (
                PeriodicState::constant(p[0], t, 0),
                PeriodicState::constant(p[1], t, 1),
            )
        } else {
            (
                periodic_logistic_closed_form(&sys.r1, &sys.a1, t, m)?.with_species(0),
                periodic_logistic_closed_form(&sys.r2, &sys.a2, t, m)?.with_species(1),
            )
        };
        Ok(Self {
            sys: sys.clone(),
            p1,
            p2,
            autonomous,
        })
    }

    /// The autonomous system frozen at phase `s`.
    pub fn frozen(sys: &SystemConfig, s: f64) -> Self {
        Self::new(&sys.frozen(s), 256).expect("frozen system is valid")
    }

    /// Largest reaction Lipschitz bound over a period (sampled).
    pub fn max_lipschitz(&self) -> f64 {
        if self.autonomous {
            return self.local(0.0).lipschitz();
        }
        let t = self.period();
        (0..=512)
            .map(|j| self.local(t * j as f64 / 512.0).lipschitz())
            .fold(0.0, f64::max)
    }
}

impl Kinetic for PeriodicSystem {
    fn local(&self, t: f64) -> Local {
        let s = t / self.sys.period;
        Local {
            c: self.sys.at(s),
            p: [self.p1.value(t), self.p2.value(t)],
        }
    }

    fn period(&self) -> f64 {
        self.sys.period
    }

    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

/// Reaction terms at time `t`.
pub fn cooperative_g(ps: &impl Kinetic, t: f64, v1: f64, v2: f64) -> (f64, f64) {
    let g = ps.local(t).g([v1, v2]);
    (g[0], g[1])
}

/// `(u1, u2) ↦ (v1, v2)` at time `t`.
pub fn transform_to_cooperative(ps: &PeriodicSystem, t: f64, u: [f64; 2]) -> [f64; 2] {
    let p = [ps.p1.value(t), ps.p2.value(t)];
    [u[0] / p[0], (p[1] - u[1]) / p[1]]
}

/// Inverse of [`transform_to_cooperative`].
pub fn transform_from_cooperative(ps: &PeriodicSystem, t: f64, v: [f64; 2]) -> [f64; 2] {
    let p = [ps.p1.value(t), ps.p2.value(t)];
    [v[0] * p[0], p[1] * (1.0 - v[1])]
}

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

#[derive(Clone, Copy)]
struct Aug {
    v: [f64; 2],
    phi: Mat2,
    tr: f64,
}

impl Aug {
    fn axpy(&self, h: f64, d: &Aug) -> Aug {
        let mut out = *self;
        for i in 0..2 {
            out.v[i] += h * d.v[i];
            for j in 0..2 {
                out.phi[i][j] += h * d.phi[i][j];
            }
        }
        out.tr += h * d.tr;
        out
    }
}

fn aug_rhs(model: &impl Kinetic, t: f64, y: &Aug) -> Aug {
    let loc = model.local(t);
    let a = loc.jac(y.v);
    Aug {
        v: loc.g(y.v),
        phi: matmul(&a, &y.phi),
        tr: a[0][0] + a[1][1],
    }
}

fn rk4_aug(model: &impl Kinetic, t: f64, y: &Aug, h: f64) -> Aug {
    let k1 = aug_rhs(model, t, y);
    let k2 = aug_rhs(model, t + 0.5 * h, &y.axpy(0.5 * h, &k1));
    let k3 = aug_rhs(model, t + 0.5 * h, &y.axpy(0.5 * h, &k2));
    let k4 = aug_rhs(model, t + h, &y.axpy(h, &k3));
    let mut out = *y;
    out = out.axpy(h / 6.0, &k1);
    out = out.axpy(h / 3.0, &k2);
    out = out.axpy(h / 3.0, &k3);
    out.axpy(h / 6.0, &k4)
}

/// Solution of the kinetic system with its linearization along the way.
#[derive(Debug, Clone, Serialize)]
pub struct KineticTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 2]>,
    /// Fundamental matrix `Φ(t)` with `Φ(t0) = I`.
    pub fundamental: Vec<Mat2>,
    pub monodromy: Mat2,
    /// `det M`, accumulated segment by segment.
    pub det: f64,
    /// `∫ trace A(v(t)) dt` over the trajectory.
    pub trace_integral: f64,
}

impl KineticTrajectory {
    pub fn end(&self) -> [f64; 2] {
        *self.states.last().unwrap()
    }
}

fn out_of_box(v: [f64; 2], lo: f64, hi: f64) -> bool {
    !(v[0] >= lo && v[0] <= hi && v[1] >= lo && v[1] <= hi)
}

/// RK4 over `[t0, t0 + steps·h]` starting from `v0`.
pub fn integrate(
    model: &impl Kinetic,
    t0: f64,
    v0: [f64; 2],
    h: f64,
    steps: usize,
    keep: bool,
) -> Result<KineticTrajectory, KineticsError> {
    let mut y = Aug {
        v: v0,
        phi: IDENTITY,
        tr: 0.0,
    };
    let cap = if keep { steps + 1 } else { 1 };
    let mut traj = KineticTrajectory {
        times: Vec::with_capacity(cap),
        states: Vec::with_capacity(cap),
        fundamental: Vec::with_capacity(cap),
        monodromy: IDENTITY,
        det: 1.0,
        trace_integral: 0.0,
    };
    traj.times.push(t0);
    traj.states.push(v0);
    traj.fundamental.push(IDENTITY);
    for n in 0..steps {
        let t = t0 + n as f64 * h;
        y = rk4_aug(model, t, &y, h);
        if out_of_box(y.v, -0.1, 1.1) || !y.v.iter().all(|x| x.is_finite()) {
            return Err(KineticsError::Unstable { t: t + h, m: steps });
        }
        if keep {
            traj.times.push(t + h);
            traj.states.push(y.v);
            traj.fundamental.push(y.phi);
        }
    }
    if !keep {
        traj.times[0] = t0 + steps as f64 * h;
        traj.states[0] = y.v;
        traj.fundamental[0] = y.phi;
    }
    traj.monodromy = y.phi;
    traj.det = det2(&y.phi);
    traj.trace_integral = y.tr;
    Ok(traj)
}

fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Default steps per period for the kinetic flow.
pub const DEFAULT_M: usize = 4096;

/// Steps per period keeping the RK4 step at or below 2.5e-3 time units.
pub fn steps_for_period(period: f64) -> usize {
    DEFAULT_M.max((period / 2.5e-3).ceil() as usize)
}

/// Time-`T` map `Q_T(v0)` and its monodromy.
pub fn poincare_map(
    model: &impl Kinetic,
    v0: [f64; 2],
    m: usize,
) -> Result<([f64; 2], Mat2), KineticsError> {
    if m < 1024 {
        return Err(KineticsError::BadInput(format!("m = {m} < 1024")));
    }
    let t = model.period();
    let tr = integrate(model, 0.0, v0, t / m as f64, m, false)?;
    Ok((tr.end(), tr.monodromy))
}

/// Number of shooting segments: one unless the worst-case linear growth over a
/// period would exceed `e^16`, which happens for long periods.
fn segment_count(model: &impl Kinetic) -> usize {
    let t = model.period();
    let lip = (0..=256)
        .map(|j| model.local(t * j as f64 / 256.0).lipschitz())
        .fold(0.0, f64::max);
    ((t * lip / 16.0).ceil() as usize).max(1)
}

/// Interior T-periodic solution through a fixed point of `Q_T`.
///
/// Newton on `Q_T(x) − x` with Jacobian `M − I`. For long periods the map
/// is split into segments (multiple shooting) seeded with the instantaneous
/// coexistence equilibrium; with a single segment this is plain shooting
/// from `seed`.
pub fn find_interior_fixed_point(
    model: &impl Kinetic,
    seed: [f64; 2],
    m: usize,
) -> Result<KineticTrajectory, KineticsError> {
    if !(seed.iter().all(|&x| x > 0.0 && x < 1.0)) {
        return Err(KineticsError::BadInput("seed must lie in (0,1)^2".into()));
    }
    if m < 1024 {
        return Err(KineticsError::BadInput(format!("m = {m} < 1024")));
    }
    let period = model.period();
    let k = segment_count(model);
    let spk = m.div_ceil(k);
    let h = period / (k * spk) as f64;
    let seg_t0 = |j: usize| j as f64 * spk as f64 * h;
    let mut x: Vec<[f64; 2]> = (0..k)
        .map(|j| {
            if j == 0 || k == 1 {
                seed
            } else {
                model.local(seg_t0(j)).interior_equilibrium().unwrap_or(seed)
            }
        })
        .collect();

    let n = 2 * k;
    const MAX_IT: usize = 50;
    for _ in 0..MAX_IT {
        let segs: Vec<KineticTrajectory> = x
            .iter()
            .enumerate()
            .map(|(j, &xj)| integrate(model, seg_t0(j), xj, h, spk, false))
            .collect::<Result<_, _>>()?;
        let mut f = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..k {
            let next = (j + 1) % k;
            let end = segs[j].end();
            let mj = segs[j].monodromy;
            for r in 0..2 {
                f[2 * j + r] = end[r] - x[next][r];
                for c in 0..2 {
                    jac[(2 * j + r, 2 * j + c)] += mj[r][c];
                }
                jac[(2 * j + r, 2 * next + r)] -= 1.0;
            }
        }
        let res = f.amax();
        if res < 1e-12 {
            return assemble(model, &x, h, spk, k);
        }
        let dx = jac
            .lu()
            .solve(&(-&f))
            .ok_or_else(|| KineticsError::NoInteriorFixedPoint("singular Newton matrix".into()))?;
        let mut lam = 1.0;
        let mut trial;
        loop {
            trial = x.clone();
            for j in 0..k {
                for r in 0..2 {
                    trial[j][r] += lam * dx[2 * j + r];
                }
            }
            if trial.iter().all(|v| !out_of_box(*v, 0.0, 1.0)) || lam < 1e-3 {
                break;
            }
            lam *= 0.5;
        }
        if trial.iter().any(|v| out_of_box(*v, 0.0, 1.0)) {
            return Err(KineticsError::NoInteriorFixedPoint(
                "Newton iteration left [0,1]^2".into(),
            ));
        }
        x = trial;
        if dx.amax() * lam < 1e-14 {
            return assemble(model, &x, h, spk, k);
        }
    }
    Err(KineticsError::NoInteriorFixedPoint(format!(
        "no convergence after {MAX_IT} Newton steps"
    )))
}

fn assemble(
    model: &impl Kinetic,
    x: &[[f64; 2]],
    h: f64,
    spk: usize,
    k: usize,
) -> Result<KineticTrajectory, KineticsError> {
    let mut out: Option<KineticTrajectory> = None;
    for (j, &xj) in x.iter().enumerate() {
        let seg = integrate(model, j as f64 * spk as f64 * h, xj, h, spk, true)?;
        out = Some(match out {
            None => seg,
            Some(mut acc) => {
                let base = acc.monodromy;
                for ((t, v), phi) in seg
                    .times
                    .iter()
                    .zip(&seg.states)
                    .zip(&seg.fundamental)
                    .skip(1)
                {
                    acc.times.push(*t);
                    acc.states.push(*v);
                    acc.fundamental.push(matmul(phi, &base));
                }
                acc.monodromy = matmul(&seg.monodromy, &base);
                acc.det *= seg.det;
                acc.trace_integral += seg.trace_integral;
                acc
            }
        });
    }
    let traj = out.expect("at least one segment");
    let _ = k;
    let interior = traj
        .states
        .iter()
        .all(|v| v.iter().all(|&c| c > 1e-8 && c < 1.0 - 1e-8));
    if !interior {
        return Err(KineticsError::NoInteriorFixedPoint(
            "iteration converged to a boundary state".into(),
        ));
    }
    Ok(traj)
}

/// Floquet data of a periodic trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct FloquetReport {
    /// `(re, im)` pairs, principal first.
    pub multipliers: [(f64, f64); 2],
    /// `−ln(ρ₁)/T`; `None` when no real positive principal multiplier exists.
    pub lambda: Option<f64>,
    /// Principal eigen-direction propagated along the trajectory, unit length.
    pub principal_direction: Option<Vec<[f64; 2]>>,
    /// Multipliers of equal modulus (within 1e-12 relative): no principal one.
    pub degenerate: bool,
}

/// Eigen-decomposition of the monodromy, using the separately accumulated
/// determinant for the small multiplier.
pub fn floquet(period: f64, traj: &KineticTrajectory) -> FloquetReport {
    let m = traj.monodromy;
    let tr = m[0][0] + m[1][1];
    let det = traj.det;
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        let re = 0.5 * tr;
        let im = 0.5 * (-disc).sqrt();
        return FloquetReport {
            multipliers: [(re, im), (re, -im)],
            lambda: None,
            principal_direction: None,
            degenerate: true,
        };
    }
    let sq = disc.sqrt();
    let rho1 = 0.5 * (tr + tr.signum() * sq);
    let rho2 = if rho1 != 0.0 { det / rho1 } else { 0.0 };
    let degenerate = (rho1.abs() - rho2.abs()).abs() <= 1e-12 * rho1.abs().max(1e-300);
    let lambda = (rho1 > 0.0).then(|| -rho1.ln() / period);
    let principal_direction = if degenerate {
        None
    } else {
        let a = [m[0][1], rho1 - m[0][0]];
        let b = [rho1 - m[1][1], m[1][0]];
        let w = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
        let nw = w[0].hypot(w[1]);
        if nw == 0.0 {
            None
        } else {
            let sign = if w[0] + w[1] < 0.0 { -1.0 } else { 1.0 };
            let w = [sign * w[0] / nw, sign * w[1] / nw];
            Some(
                traj.fundamental
                    .iter()
                    .map(|phi| {
                        let d = [
                            phi[0][0] * w[0] + phi[0][1] * w[1],
                            phi[1][0] * w[0] + phi[1][1] * w[1],
                        ];
                        let n = d[0].hypot(d[1]);
                        [d[0] / n, d[1] / n]
                    })
                    .collect(),
            )
        }
    };
    FloquetReport {
        multipliers: [(rho1, 0.0), (rho2, 0.0)],
        lambda,
        principal_direction,
        degenerate,
    }
}

/// Periodic trajectory sitting at a constant equilibrium `v` (for 0, 1, e₀).
pub fn equilibrium_trajectory(
    model: &impl Kinetic,
    v: [f64; 2],
    m: usize,
) -> Result<KineticTrajectory, KineticsError> {
    let t = model.period();
    integrate(model, 0.0, v, t / m as f64, m, true)
}

/// An equilibrium of the frozen kinetics with its Jacobian eigen-pairs.
#[derive(Debug, Clone, Serialize)]
pub struct Equilibrium {
    pub name: &'static str,
    pub v: [f64; 2],
    pub eigenvalues: [f64; 2],
    /// Unit eigenvectors matching `eigenvalues`; the stable one has a positive first component.
    pub eigenvectors: [[f64; 2]; 2],
}

fn real_eigen(a: &Mat2) -> Option<([f64; 2], [[f64; 2]; 2])> {
    let tr = a[0][0] + a[1][1];
    let det = det2(a);
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let l = [0.5 * (tr + sq), 0.5 * (tr - sq)];
    let mut vecs = [[0.0; 2]; 2];
    for (i, &lam) in l.iter().enumerate() {
        let c1 = [a[0][1], lam - a[0][0]];
        let c2 = [lam - a[1][1], a[1][0]];
        let mut w = if c1[0].hypot(c1[1]) >= c2[0].hypot(c2[1]) { c1 } else { c2 };
        if w[0] == 0.0 && w[1] == 0.0 {
            w = if i == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
        }
        let n = w[0].hypot(w[1]);
        let s = if w[0] < 0.0 || (w[0] == 0.0 && w[1] < 0.0) { -1.0 } else { 1.0 };
        vecs[i] = [s * w[0] / n, s * w[1] / n];
    }
    Some((l, vecs))
}

/// The four equilibria `0, 1, e₀, e*_s` of the system frozen at phase `s`.
pub fn frozen_equilibria(sys: &SystemConfig, s: f64) -> Result<Vec<Equilibrium>, KineticsError> {
    let frozen = sys.frozen(s);
    if !check_a2(&frozen, 64).holds {
        return Err(KineticsError::NotBistable(s));
    }
    let loc = Local::frozen(sys.at(s));
    let star = loc
        .interior_equilibrium()
        .ok_or(KineticsError::NotBistable(s))?;
    let mut out = Vec::new();
    for (name, v) in [
        ("0", [0.0, 0.0]),
        ("1", [1.0, 1.0]),
        ("e0", [0.0, 1.0]),
        ("e*", star),
    ] {
        let (l, vecs) = real_eigen(&loc.jac(v)).ok_or(KineticsError::NotBistable(s))?;
        out.push(Equilibrium {
            name,
            v,
            eigenvalues: l,
            eigenvectors: vecs,
        });
    }
    let saddle = &out[3];
    if !(saddle.eigenvalues[0] > 0.0 && saddle.eigenvalues[1] < 0.0) {
        return Err(KineticsError::NotBistable(s));
    }
    Ok(out)
}

/// Forward limit of the frozen kinetics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Limit {
    Zero,
    One,
    Saddle,
}

/// Separatrix `v2 = h(v1)` of the frozen kinetics through the saddle.
#[derive(Debug, Clone, Serialize)]
pub struct Separatrix {
    pub s: f64,
    pub saddle: [f64; 2],
    /// Samples ordered by increasing `v1`.
    pub points: Vec<[f64; 2]>,
    /// The right branch left `[-0.5, 1.5]^2` through the bottom edge.
    pub exits_below: bool,
    /// Some branch stopped at the box boundary instead of converging.
    pub truncated: bool,
    local: Local,
}

impl Separatrix {
    /// `h(v1)` by linear interpolation.
    pub fn h(&self, x: f64) -> f64 {
        let pts = &self.points;
        if x <= pts[0][0] {
            return pts[0][1];
        }
        let last = pts[pts.len() - 1];
        if x >= last[0] {
            return if self.exits_below { f64::NEG_INFINITY } else { last[1] };
        }
        let j = pts.partition_point(|p| p[0] <= x);
        let (a, b) = (pts[j - 1], pts[j]);
        a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0])
    }

    pub fn is_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1][0] > w[0][0] && w[1][1] < w[0][1])
    }

    /// Curve-side prediction of the forward limit.
    pub fn side(&self, v: [f64; 2]) -> Limit {
        let h = self.h(v[0]);
        if v[1] < h {
            Limit::Zero
        } else if v[1] > h {
            Limit::One
        } else {
            Limit::Saddle
        }
    }

    /// Forward integration for up to `t_max`, returning the nearest limit.
    pub fn classify(&self, v0: [f64; 2], t_max: f64) -> Limit {
        let dt = 0.01;
        let mut v = v0;
        let steps = (t_max / dt).ceil() as usize;
        for _ in 0..steps {
            v = rk4_frozen(&self.local, v, dt);
            if v[0].hypot(v[1]) < 1e-4 {
                return Limit::Zero;
            }
            if (v[0] - 1.0).hypot(v[1] - 1.0) < 1e-4 {
                return Limit::One;
            }
        }
        let d0 = v[0].hypot(v[1]);
        let d1 = (v[0] - 1.0).hypot(v[1] - 1.0);
        let ds = (v[0] - self.saddle[0]).hypot(v[1] - self.saddle[1]);
        if ds <= d0 && ds <= d1 {
            Limit::Saddle
        } else if d0 < d1 {
            Limit::Zero
        } else {
            Limit::One
        }
    }

    /// Forward trajectory of the frozen kinetics sampled every `dt`.
    pub fn orbit(&self, v0: [f64; 2], dt: f64, steps: usize) -> Vec<[f64; 2]> {
        let mut v = v0;
        let mut out = vec![v];
        for _ in 0..steps {
            v = rk4_frozen(&self.local, v, dt);
            out.push(v);
        }
        out
    }

    /// `n` samples evenly spaced in `v1` over the sampled range inside `[0,1]^2`.
    pub fn resample(&self, n: usize) -> Vec<[f64; 2]> {
        let lo = self.points[0][0].max(0.0);
        let hi = self
            .points
            .iter()
            .filter(|p| p[1] >= 0.0 && p[0] <= 1.0)
            .map(|p| p[0])
            .fold(lo, f64::max);
        (0..n)
            .map(|j| {
                let x = lo + (hi - lo) * j as f64 / (n.max(2) - 1) as f64;
                [x, self.h(x)]
            })
            .collect()
    }
}

fn rk4_frozen(loc: &Local, v: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], s: f64, b: [f64; 2]| [a[0] + s * b[0], a[1] + s * b[1]];
    let k1 = loc.g(v);
    let k2 = loc.g(add(v, 0.5 * h, k1));
    let k3 = loc.g(add(v, 0.5 * h, k2));
    let k4 = loc.g(add(v, h, k3));
    [
        v[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        v[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Stable manifold of the frozen saddle, traced backward in time from
/// `e*_s ± 1e-6·w_s`. `n_points` controls the backward step (`≈ 1/n_points`
/// time units, capped at 0.01).
pub fn separatrix(sys: &SystemConfig, s: f64, n_points: usize) -> Result<Separatrix, KineticsError> {
    let eq = frozen_equilibria(sys, s)?;
    let saddle = eq[3].v;
    let ws = eq[3].eigenvectors[1];
    let loc = Local::frozen(sys.at(s));
    let dt = (1.0 / n_points.max(1) as f64).min(0.01);
    let delta = 1e-6;
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut truncated = false;
    let mut exits_below = false;
    for (sign, branch) in [(-1.0, &mut left), (1.0, &mut right)] {
        let mut v = [saddle[0] + sign * delta * ws[0], saddle[1] + sign * delta * ws[1]];
        branch.push(v);
        let max_steps = (400.0 / dt) as usize;
        for _ in 0..max_steps {
            v = rk4_frozen(&loc, v, -dt);
            if out_of_box(v, -0.5, 1.5) {
                truncated = true;
                if sign > 0.0 && v[1] < -0.5 {
                    exits_below = true;
                }
                break;
            }
            branch.push(v);
            if v[0].hypot(v[1] - 1.0) < 1e-9 || 1.0 - v[1] < 1e-12 {
                break;
            }
        }
    }
    // The left branch runs toward e₀ = (0, 1); only the right one may leave the box legitimately.
    let mut points: Vec<[f64; 2]> = left.into_iter().rev().collect();
    points.push(saddle);
    points.extend(right);
    points.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
    points.dedup_by(|a, b| a[0] == b[0]);
    Ok(Separatrix {
        s,
        saddle,
        points,
        exits_below,
        truncated,
        local: loc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic_fn::example_family;
    use approx::assert_abs_diff_eq;

    fn consts(r: [f64; 2], k: [f64; 2]) -> SystemConfig {
        SystemConfig::constant(
            Coeffs {
                d: [1.0; 2],
                r,
                a: [1.0; 2],
                k,
            },
            1.0,
        )
    }

    fn homogenized_example() -> PeriodicSystem {
        let sys = example_family(3.5, 12.0, 0.02, 1.0).unwrap().homogenized();
        PeriodicSystem::new(&sys, 256).unwrap()
    }

    #[test]
    fn boundary_states_are_equilibria() {
        let ex = example_family(3.5, 12.0, 0.02, 2.0).unwrap();
        let ps = PeriodicSystem::new(&ex, 512).unwrap();
        for v in [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]] {
            for t in [0.0, 0.7, 1.5] {
                let g = cooperative_g(&ps, t, v[0], v[1]);
                assert_eq!(g, (0.0, 0.0));
            }
        }
    }

    #[test]
    fn transform_round_trip() {
        let ex = example_family(3.5, 12.0, 0.02, 2.0).unwrap();
        let ps = PeriodicSystem::new(&ex, 512).unwrap();
        let t = 0.9;
        let (p1, p2) = (ps.p1.value(t), ps.p2.value(t));
        assert_eq!(transform_to_cooperative(&ps, t, [p1, 0.0]), [1.0, 1.0]);
        assert_eq!(transform_to_cooperative(&ps, t, [0.0, p2]), [0.0, 0.0]);
        for u in [[0.3, 4.0], [0.9, 0.1], [1.0, 11.0]] {
            let back = transform_from_cooperative(&ps, t, transform_to_cooperative(&ps, t, u));
            assert_abs_diff_eq!(back[0], u[0], epsilon = 1e-14);
            assert_abs_diff_eq!(back[1], u[1], epsilon = 1e-14 * u[1].max(1.0));
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let loc = Local::frozen(example_family(3.5, 12.0, 0.02, 1.0).unwrap().at(0.8));
        let v = [0.3, 0.6];
        let a = loc.jac(v);
        let h = 1e-6;
        for j in 0..2 {
            let mut vp = v;
            let mut vm = v;
            vp[j] += h;
            vm[j] -= h;
            let (gp, gm) = (loc.g(vp), loc.g(vm));
            for i in 0..2 {
                assert_abs_diff_eq!((gp[i] - gm[i]) / (2.0 * h), a[i][j], epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn poincare_fixed_points() {
        let ps = homogenized_example();
        for v in [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]] {
            let (q, _) = poincare_map(&ps, v, 4096).unwrap();
            assert!((q[0] - v[0]).abs() < 1e-10 && (q[1] - v[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn poincare_richardson() {
        let ps = homogenized_example();
        let v0 = [0.4, 0.5];
        let (a, _) = poincare_map(&ps, v0, 4096).unwrap();
        let (b, _) = poincare_map(&ps, v0, 8192).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
    }

    #[test]
    fn homogenized_fixed_point_is_e_star() {
        let ps = homogenized_example();
        let m = ps.sys.means();
        let (a1, a2, r1, r2, k1, k2) = (m.a[0], m.a[1], m.r[0], m.r[1], m.k[0], m.k[1]);
        let den = a1 * a2 - k1 * k2;
        let v1 = (a1 * a2 - a1 * k1 * r2 / r1) / den;
        let v2 = (a2 * k2 * r1 / r2 - k1 * k2) / den;
        let traj = find_interior_fixed_point(&ps, [0.3, 0.3], 4096).unwrap();
        assert_abs_diff_eq!(traj.states[0][0], v1, epsilon = 1e-10);
        assert_abs_diff_eq!(traj.states[0][1], v2, epsilon = 1e-10);
        let fl = floquet(ps.period(), &traj);
        assert!(fl.lambda.unwrap() < 0.0);
    }

    #[test]
    fn boundary_seed_is_not_reported_as_interior() {
        let ps = homogenized_example();
        match find_interior_fixed_point(&ps, [0.001, 0.001], 4096) {
            Ok(tr) => assert!(tr.states.iter().all(|v| v[0] > 1e-8 && v[1] > 1e-8)),
            Err(KineticsError::NoInteriorFixedPoint(_)) => {}
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn floquet_at_e0() {
        let sys = consts([2.0, 1.0], [3.0, 3.0]);
        let ps = PeriodicSystem::new(&sys, 256).unwrap();
        let tr = equilibrium_trajectory(&ps, [0.0, 1.0], 4096).unwrap();
        let fl = floquet(1.0, &tr);
        assert_abs_diff_eq!(fl.multipliers[0].0, 2.0_f64.exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(fl.multipliers[1].0, 1.0_f64.exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(fl.lambda.unwrap(), -2.0, epsilon = 1e-10);
    }

    #[test]
    fn floquet_identity_family() {
        let tr = KineticTrajectory {
            times: vec![0.0],
            states: vec![[0.5, 0.5]],
            fundamental: vec![IDENTITY],
            monodromy: IDENTITY,
            det: 1.0,
            trace_integral: 0.0,
        };
        let fl = floquet(1.0, &tr);
        assert_eq!(fl.multipliers[0].0, 1.0);
        assert_eq!(fl.multipliers[1].0, 1.0);
        assert!(fl.degenerate);
    }

    #[test]
    fn frozen_saddles() {
        let ex = example_family(3.5, 12.0, 0.02, 1.0).unwrap();
        let hi = frozen_equilibria(&ex, 0.9).unwrap();
        assert_abs_diff_eq!(hi[3].v[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(hi[3].v[1], 0.9, epsilon = 1e-12);
        let lo = frozen_equilibria(&ex, 0.3).unwrap();
        assert_abs_diff_eq!(lo[3].v[0], 3.0 / 22.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lo[3].v[1], 20.0 / 77.0, epsilon = 1e-12);
        let loc = Local::frozen(ex.at(0.3));
        for e in &lo {
            let g = loc.g(e.v);
            assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
        }
        assert!(frozen_equilibria(&consts([1.0, 1.0], [1.0, 1.0]), 0.0).is_err());
    }

    #[test]
    fn separatrix_shape() {
        let ex = example_family(3.5, 12.0, 0.02, 1.0).unwrap();
        for s in [0.3, 0.9] {
            let sep = separatrix(&ex, s, 200).unwrap();
            assert!(sep.is_decreasing(), "s = {s}");
            assert_abs_diff_eq!(sep.h(sep.saddle[0]), sep.saddle[1], epsilon = 1e-9);
            assert!(sep.h(1e-6) > 0.99);
        }
    }
}
