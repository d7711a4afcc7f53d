//! Semi-trivial periodic states: the positive T-periodic solution of
//! `p' = p (r(t/T) − a(t/T) p)`.
//!
//! Two independent constructions are provided. The closed form writes the
//! solution through cumulative integrals of `r` and `a`; past `T·max r = 30`
//! it switches to a form in which every exponent is non-positive. The ODE
//! oracle integrates the equation with RK4 from the fixed point of the
//! period map.

use crate::periodic_fn::PeriodicFn;
use crate::quadrature::{pieces, Rule};
use serde::Serialize;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LogisticError {
    #[error("need T > 0 and m >= 256 (got T = {period}, m = {m})")]
    BadInput { period: f64, m: usize },
    #[error("period-map Newton did not converge after {0} iterations")]
    NewtonFailed(usize),
}

/// Samples of `p_{i,T}` on `t_j = jT/m` with a cubic Hermite interpolant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicState {
    pub species: usize,
    pub period: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl PeriodicState {
    fn from_values(r: &PeriodicFn, a: &PeriodicFn, period: f64, values: Vec<f64>) -> Self {
        let m = values.len() - 1;
        let derivs = values
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let s = j as f64 / m as f64;
                p * (r.value(s) - a.value(s) * p)
            })
            .collect();
        Self {
            species: 0,
            period,
            values,
            derivs,
        }
    }

    pub fn with_species(mut self, i: usize) -> Self {
        self.species = i;
        self
    }

    pub fn m(&self) -> usize {
        self.values.len() - 1
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    pub fn times(&self) -> Vec<f64> {
        let m = self.m();
        (0..=m).map(|j| self.period * j as f64 / m as f64).collect()
    }

    /// `p_{i,T}(t)` for any real `t`.
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
        (2.0 * u3 - 3.0 * u2 + 1.0) * p0
            + (u3 - 2.0 * u2 + u) * d0
            + (-2.0 * u3 + 3.0 * u2) * p1
            + (u3 - u2) * d1
    }

    /// Constant state `value` (used by frozen and homogenized systems).
    pub fn constant(value: f64, period: f64, species: usize) -> Self {
        Self {
            species,
            period,
            values: vec![value; 257],
            derivs: vec![0.0; 257],
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

fn check_input(period: f64, m: usize) -> Result<(), LogisticError> {
    if !(period > 0.0 && period.is_finite()) || m < 256 {
        return Err(LogisticError::BadInput { period, m });
    }
    Ok(())
}

/// Threshold on `T·max r` above which the closed form is evaluated in log space.
pub const LOG_SPACE_THRESHOLD: f64 = 30.0;

/// Closed-form periodic state. Evaluation path chosen by [`LOG_SPACE_THRESHOLD`].
pub fn periodic_logistic_closed_form(
    r: &PeriodicFn,
    a: &PeriodicFn,
    period: f64,
    m: usize,
) -> Result<PeriodicState, LogisticError> {
    let log_space = period * r.bounds().1 > LOG_SPACE_THRESHOLD;
    closed_form_path(r, a, period, m, log_space)
}

/// Closed form with an explicit choice of evaluation path (the direct path is
/// only valid while `T·max r` stays well below the overflow limit).
pub fn closed_form_path(
    r: &PeriodicFn,
    a: &PeriodicFn,
    period: f64,
    m: usize,
    log_space: bool,
) -> Result<PeriodicState, LogisticError> {
    check_input(period, m)?;
    assert!(
        log_space || period * r.bounds().1 <= 700.0,
        "direct closed form would overflow"
    );
    let rule = Rule::new(8);
    let mut breaks = r.breakpoints();
    breaks.extend(a.breakpoints());
    let t = period;

    // e[j] = T∫_0^{s_j} r ; jl[j] = ∫_0^{s_j} e^{E(τ)−E(s_j)} a ; kd[j] = ∫_0^{s_j} e^{E(τ)} a
    let mut e = vec![0.0; m + 1];
    let mut jl = vec![0.0; m + 1];
    let mut kd = vec![0.0; m + 1];
    let (mut e_cur, mut j_cur, mut k_cur) = (0.0, 0.0, 0.0);
    for j in 0..m {
        let s0 = j as f64 / m as f64;
        let s1 = (j + 1) as f64 / m as f64;
        for w in pieces(s0, s1, &breaks).windows(2) {
            let (alpha, beta) = (w[0], w[1]);
            let e_beta = e_cur + t * rule.integrate(alpha, beta, |x| r.value(x));
            let mut inc_log = 0.0;
            let mut inc_dir = 0.0;
            for (tau, wt) in rule.mapped(alpha, beta) {
                let e_tau = e_cur + t * rule.integrate(alpha, tau, |x| r.value(x));
                let av = a.value(tau);
                inc_log += wt * (e_tau - e_beta).exp() * av;
                if !log_space {
                    inc_dir += wt * e_tau.exp() * av;
                }
            }
            j_cur = (e_cur - e_beta).exp() * j_cur + inc_log;
            k_cur += inc_dir;
            e_cur = e_beta;
        }
        e[j + 1] = e_cur;
        jl[j + 1] = j_cur;
        kd[j + 1] = k_cur;
    }
    let values: Vec<f64> = if log_space {
        let inv_p0 = t * jl[m] / (-(-e[m]).exp_m1());
        (0..=m)
            .map(|j| 1.0 / ((-e[j]).exp() * inv_p0 + t * jl[j]))
            .collect()
    } else {
        let p0 = e[m].exp_m1() / (t * kd[m]);
        (0..=m)
            .map(|j| p0 * e[j].exp() / (1.0 + p0 * t * kd[j]))
            .collect()
    };
    Ok(PeriodicState::from_values(r, a, period, values))
}

fn rk4_logistic(r: &PeriodicFn, a: &PeriodicFn, period: f64, t0: f64, p: f64, y: f64, h: f64) -> (f64, f64) {
    let f = |t: f64, p: f64, y: f64| {
        let s = t / period;
        let (rv, av) = (r.value(s), a.value(s));
        (p * (rv - av * p), (rv - 2.0 * av * p) * y)
    };
    let (k1p, k1y) = f(t0, p, y);
    let (k2p, k2y) = f(t0 + 0.5 * h, p + 0.5 * h * k1p, y + 0.5 * h * k1y);
    let (k3p, k3y) = f(t0 + 0.5 * h, p + 0.5 * h * k2p, y + 0.5 * h * k2y);
    let (k4p, k4y) = f(t0 + h, p + h * k3p, y + h * k3y);
    (
        p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
    )
}

/// ODE oracle. Output on the same `m+1` grid as the closed form; each output
/// interval is subdivided so that the RK4 step times `max r` stays below 0.02.
pub fn periodic_logistic_ode(
    r: &PeriodicFn,
    a: &PeriodicFn,
    period: f64,
    m: usize,
) -> Result<PeriodicState, LogisticError> {
    check_input(period, m)?;
    let dt = period / m as f64;
    let sub = ((dt * r.bounds().1) / 0.02).ceil().max(1.0) as usize;
    let h = dt / sub as f64;
    let flow = |p0: f64, keep: bool| {
        let (mut p, mut y) = (p0, 1.0);
        let mut out = Vec::with_capacity(if keep { m + 1 } else { 0 });
        if keep {
            out.push(p);
        }
        for j in 0..m {
            for k in 0..sub {
                let t0 = j as f64 * dt + k as f64 * h;
                (p, y) = rk4_logistic(r, a, period, t0, p, y, h);
            }
            if keep {
                out.push(p);
            }
        }
        (p, y, out)
    };
    let mut p0 = r.mean() / a.mean();
    const MAX_IT: usize = 50;
    let mut converged = false;
    for _ in 0..MAX_IT {
        let (pt, yt, _) = flow(p0, false);
        let step = (pt - p0) / (yt - 1.0);
        let mut next = p0 - step;
        if next <= 0.0 {
            next = 0.5 * p0;
        }
        let done = (next - p0).abs() <= 1e-12 * p0.max(1.0);
        p0 = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LogisticError::NewtonFailed(MAX_IT));
    }
    let (_, _, mut values) = flow(p0, true);
    values[m] = values[0];
    Ok(PeriodicState::from_values(r, a, period, values))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    pub period: f64,
    /// `sup_s |p_T(sT) − reference(s)|`.
    pub deviation: f64,
    /// `deviation` divided by `T` (small-T table) or multiplied by `T` (large-T table).
    pub scaled: f64,
}

/// Deviation from the mean-ratio limit `r̄/ā` along a decreasing list of small periods.
pub fn small_period_limit_check(
    r: &PeriodicFn,
    a: &PeriodicFn,
    periods: &[f64],
    m: usize,
) -> Result<Vec<LimitRow>, LogisticError> {
    let target = r.mean() / a.mean();
    periods
        .iter()
        .map(|&t| {
            let p = periodic_logistic_closed_form(r, a, t, m)?;
            let dev = p.samples().iter().fold(0.0_f64, |d, v| d.max((v - target).abs()));
            Ok(LimitRow {
                period: t,
                deviation: dev,
                scaled: dev / t,
            })
        })
        .collect()
}

/// `T · sup_s |p_T(sT) − r(s)/a(s)|` along an increasing list of large periods.
pub fn large_period_rate_check(
    r: &PeriodicFn,
    a: &PeriodicFn,
    periods: &[f64],
    m: usize,
) -> Result<Vec<LimitRow>, LogisticError> {
    periods
        .iter()
        .map(|&t| {
            let p = periodic_logistic_closed_form(r, a, t, m)?;
            let dev = p.samples().iter().enumerate().fold(0.0_f64, |d, (j, v)| {
                let s = j as f64 / m as f64;
                d.max((v - r.value(s) / a.value(s)).abs())
            });
            Ok(LimitRow {
                period: t,
                deviation: dev,
                scaled: dev * t,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn trig_r() -> PeriodicFn {
        PeriodicFn::trig(1.0, vec![], vec![0.5]).unwrap()
    }

    fn sup_diff(a: &PeriodicState, b: &PeriodicState) -> f64 {
        a.samples()
            .iter()
            .zip(b.samples())
            .fold(0.0_f64, |d, (x, y)| d.max((x - y).abs()))
    }

    #[test]
    fn constant_states() {
        let c = PeriodicFn::constant;
        for t in [0.05, 1.0, 100.0] {
            let p = periodic_logistic_closed_form(&c(2.0), &c(1.0), t, 256).unwrap();
            assert!(p.samples().iter().all(|v| (v - 2.0).abs() < 1e-12));
            let q = periodic_logistic_closed_form(&c(1.0), &c(1.0), t, 256).unwrap();
            assert!(q.samples().iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
        let o = periodic_logistic_ode(&c(3.0), &c(1.5), 1.0, 256).unwrap();
        assert!(o.samples().iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn paths_agree_at_moderate_period() {
        let r = trig_r();
        let a = PeriodicFn::trig(1.0, vec![0.3], vec![]).unwrap();
        for t in [0.5, 5.0, 20.0] {
            let d = closed_form_path(&r, &a, t, 512, false).unwrap();
            let l = closed_form_path(&r, &a, t, 512, true).unwrap();
            assert!(sup_diff(&d, &l) < 1e-12, "T = {t}");
        }
    }

    #[test]
    fn oracle_agrees_with_closed_form() {
        let r = trig_r();
        let a = PeriodicFn::constant(1.0);
        for t in [0.1, 1.0, 10.0] {
            let c = periodic_logistic_closed_form(&r, &a, t, 2048).unwrap();
            let o = periodic_logistic_ode(&r, &a, t, 2048).unwrap();
            assert!(sup_diff(&c, &o) < 1e-8, "T = {t}");
        }
    }

    #[test]
    fn periodic_and_bounded() {
        let r = trig_r();
        let a = PeriodicFn::constant(1.0);
        let p = periodic_logistic_closed_form(&r, &a, 3.0, 1024).unwrap();
        let s = p.samples();
        assert_abs_diff_eq!(s[0], s[s.len() - 1], epsilon = 1e-10);
        let (lo, hi) = p.min_max();
        assert!(lo >= 0.5 - 1e-12 && hi <= 1.5 + 1e-12);
    }

    #[test]
    fn interpolant_hits_samples_and_wraps() {
        let p = periodic_logistic_closed_form(&trig_r(), &PeriodicFn::constant(1.0), 2.0, 256).unwrap();
        let times = p.times();
        assert_abs_diff_eq!(p.value(times[17]), p.samples()[17], epsilon = 1e-14);
        assert_abs_diff_eq!(p.value(0.3), p.value(0.3 + 2.0), epsilon = 1e-12);
        assert_abs_diff_eq!(p.value(-0.3), p.value(1.7), epsilon = 1e-12);
    }

    #[test]
    fn rejects_small_m() {
        let c = PeriodicFn::constant(1.0);
        assert!(periodic_logistic_closed_form(&c, &c, 1.0, 100).is_err());
    }

    #[test]
    fn limit_tables() {
        let c = PeriodicFn::constant(1.0);
        let rows = small_period_limit_check(&c, &c, &[0.4, 0.1], 256).unwrap();
        assert!(rows.iter().all(|r| r.deviation < 1e-12));
        let rows = large_period_rate_check(&c, &c, &[10.0, 20.0], 256).unwrap();
        assert!(rows.iter().all(|r| r.scaled < 1e-10));
    }
}
