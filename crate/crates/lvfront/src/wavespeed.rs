//! Front tracking, speed regression, and the speed quantities built on it.

use crate::interp::UniformSpline;
use crate::kinetics::{Kinetic, KineticsError, PeriodicSystem};
use crate::pde::{initialize_front, steps_per_interval, PdeError, ProfileSource, Stepper, WaveField};
use crate::periodic_fn::{matches_example_family, SystemConfig};
use crate::quadrature::{pieces, Rule};
use crate::stats::fit_line;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SpeedError {
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
    #[error("speed not converged: residual {rms:.3e} exceeds {limit:.3e}", rms = .0.residual_rms, limit = .0.residual_limit)]
    Unconverged(Box<SpeedEstimate>),
    #[error("exact speed needs r > 3, got {0}")]
    Domain(f64),
    #[error("bad settings: {0}")]
    BadSettings(String),
    #[error("frozen speed failed at s = {s}: {source}")]
    Node {
        s: f64,
        #[source]
        source: Box<SpeedError>,
    },
}

/// Grid, step and sampling settings for one speed measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeedSettings {
    pub half_width: f64,
    pub h: f64,
    /// Upper bound on the time step.
    pub dt_max: f64,
    /// Minimum steps per period (periodic systems only).
    pub m_min: usize,
    /// Width of the tanh initial profile.
    pub width: f64,
    /// Explicit sample counts; when absent they follow from the time horizons below.
    pub run_periods: Option<usize>,
    pub discard_periods: Option<usize>,
    pub discard_time: f64,
    pub sample_time: f64,
    /// Reject estimates whose residual exceeds `0.05·h + 1e-6`.
    pub enforce_residual: bool,
}

impl Default for SpeedSettings {
    fn default() -> Self {
        Self {
            half_width: 150.0,
            h: 0.1,
            dt_max: 0.01,
            m_min: 1024,
            width: 5.0,
            run_periods: None,
            discard_periods: None,
            discard_time: 40.0,
            sample_time: 40.0,
            enforce_residual: true,
        }
    }
}

/// Resolved sampling plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    /// Time between front samples.
    pub interval: f64,
    pub steps_per_interval: usize,
    pub dt: f64,
    pub run: usize,
    pub discard: usize,
}

impl SpeedSettings {
    pub fn nodes(&self) -> usize {
        (2.0 * self.half_width / self.h).round() as usize
    }

    pub fn schedule(&self, model: &impl Kinetic, lipschitz: f64) -> Result<Schedule, SpeedError> {
        let (interval, m_min, discard_floor) = if model.is_autonomous() {
            (1.0, 1, 20)
        } else {
            let t = model.period();
            (t, self.m_min, if t < 1.0 { 20 } else { 5 })
        };
        let discard = self
            .discard_periods
            .unwrap_or_else(|| discard_floor.max((self.discard_time / interval).ceil() as usize));
        let run = self.run_periods.unwrap_or_else(|| {
            discard + 20usize.max((self.sample_time / interval).ceil() as usize)
        });
        if run < discard + 10 {
            return Err(SpeedError::BadSettings(format!(
                "run periods {run} must exceed discard {discard} by at least 10"
            )));
        }
        let m = steps_per_interval(interval, self.dt_max, lipschitz, m_min);
        Ok(Schedule {
            interval,
            steps_per_interval: m,
            dt: interval / m as f64,
            run,
            discard,
        })
    }

    pub fn residual_limit(&self) -> f64 {
        0.05 * self.h + 1e-6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedEstimate {
    pub speed: f64,
    /// Half-width of the slope confidence interval (2 standard errors).
    pub ci: f64,
    pub residual_rms: f64,
    pub residual_limit: f64,
    /// `(time, absolute front position)` at every sample, transient included.
    pub positions: Vec<(f64, f64)>,
    pub discarded: usize,
    pub h: f64,
    pub dt: f64,
    /// Largest increase of a component between neighbouring nodes at the final sample.
    pub monotonicity_defect: f64,
    /// Closest approach of the front to either window edge, relative to L.
    pub min_edge_clearance: f64,
}

/// Absolute position of the `v1 = 1/2` crossing.
pub fn front_position(field: &WaveField) -> Result<f64, PdeError> {
    Ok(field.crossing()? + field.shift)
}

/// Evolves `field` and regresses the front position on the sample times.
pub fn track(
    model: &impl Kinetic,
    mut field: WaveField,
    sched: &Schedule,
    residual_limit: f64,
    enforce: bool,
) -> Result<(SpeedEstimate, WaveField), SpeedError> {
    let mut stepper = Stepper::new(sched.dt);
    let mut positions = vec![(field.t, front_position(&field)?)];
    let mut clearance = f64::INFINITY;
    for n in 1..=sched.run {
        // long periods: recentre at least once per time unit
        let chunk = ((1.0 / sched.dt).ceil() as usize).clamp(1, sched.steps_per_interval);
        let mut done = 0;
        while done < sched.steps_per_interval {
            let k = chunk.min(sched.steps_per_interval - done);
            stepper.advance(&mut field, model, k)?;
            done += k;
            let xf = field.crossing()?;
            clearance = clearance.min((field.half_width - xf.abs()) / field.half_width);
            if done < sched.steps_per_interval {
                field.recenter()?;
            }
        }
        field.t = n as f64 * sched.interval;
        positions.push((field.t, front_position(&field)?));
        field.recenter()?;
    }
    let tail = &positions[sched.discard..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail.iter().copied().unzip();
    let fit = fit_line(&xs, &ys).ok_or_else(|| SpeedError::BadSettings("too few samples".into()))?;
    let est = SpeedEstimate {
        speed: fit.slope,
        ci: 2.0 * fit.slope_se,
        residual_rms: fit.residual_rms,
        residual_limit,
        positions,
        discarded: sched.discard,
        h: field.h,
        dt: sched.dt,
        monotonicity_defect: field.monotonicity_defect(),
        min_edge_clearance: clearance,
    };
    if enforce && est.residual_rms > residual_limit {
        return Err(SpeedError::Unconverged(Box::new(est)));
    }
    Ok((est, field))
}

/// Speed of the wave for a prepared model, starting from tanh data.
pub fn measure_speed_model(model: &impl Kinetic, lipschitz: f64, settings: &SpeedSettings) -> Result<SpeedEstimate, SpeedError> {
    let sched = settings.schedule(model, lipschitz)?;
    let field = initialize_front(
        settings.half_width,
        settings.nodes(),
        &ProfileSource::Tanh { width: settings.width },
    )?;
    let limit = settings.residual_limit();
    track(model, field, &sched, limit, settings.enforce_residual).map(|(e, _)| e)
}

/// Speed of the wave of `sys` (period taken from the config).
pub fn measure_speed(sys: &SystemConfig, settings: &SpeedSettings) -> Result<SpeedEstimate, SpeedError> {
    let m = settings.m_min.max((sys.period / settings.dt_max).ceil() as usize);
    let model = PeriodicSystem::new(sys, m.min(1 << 16))?;
    measure_speed_model(&model, model.max_lipschitz(), settings)
}

/// Exact frozen speed `(−2 + r/3)·(2r/3)^{−1/2}` of the example family.
pub fn exact_speed(r2: f64) -> Result<f64, SpeedError> {
    if !(r2 > 3.0) {
        return Err(SpeedError::Domain(r2));
    }
    Ok((-2.0 + r2 / 3.0) / (2.0 * r2 / 3.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogenizedSpeed {
    pub estimate: SpeedEstimate,
    pub closed_form: Option<f64>,
}

/// Speed of the mean-coefficient system, with the closed form when it applies.
pub fn homogenized_speed(sys: &SystemConfig, settings: &SpeedSettings) -> Result<HomogenizedSpeed, SpeedError> {
    let hom = sys.homogenized();
    let closed_form = if matches_example_family(sys) {
        Some(exact_speed(sys.r2.mean())?)
    } else {
        None
    };
    Ok(HomogenizedSpeed {
        estimate: measure_speed(&hom, settings)?,
        closed_form,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedPath {
    Exact,
    Pde,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub nodes_per_piece: usize,
    /// Doubling stops once successive means differ by less than this (exact path).
    pub tol: f64,
    pub max_nodes_per_piece: usize,
    /// Use front tracking even when the exact formula applies.
    pub force_pde: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes_per_piece: 16,
            tol: 1e-3,
            max_nodes_per_piece: 1024,
            force_pde: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeSpeed {
    pub s: f64,
    pub weight: f64,
    pub speed: f64,
    pub ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanSpeed {
    pub c_star: f64,
    /// Propagated half-width from the per-node intervals (0 on the exact path).
    pub ci: f64,
    pub nodes: Vec<NodeSpeed>,
    pub nodes_per_piece: usize,
    pub path: SpeedPath,
}

fn quadrature_nodes(sys: &SystemConfig, order: usize) -> Vec<(f64, f64)> {
    let rule = Rule::new(order);
    let edges = pieces(0.0, 1.0, &sys.breakpoints());
    edges
        .windows(2)
        .flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>())
        .collect()
}

/// `c* = ∫₀¹ c(s) ds` by composite Gauss–Legendre over the smooth pieces.
pub fn mean_frozen_speed(
    sys: &SystemConfig,
    spec: &QuadratureSpec,
    settings: &SpeedSettings,
) -> Result<MeanSpeed, SpeedError> {
    if matches_example_family(sys) && !spec.force_pde {
        let eval = |n: usize| -> Result<MeanSpeed, SpeedError> {
            let nodes = quadrature_nodes(sys, n)
                .into_iter()
                .map(|(s, w)| {
                    Ok(NodeSpeed {
                        s,
                        weight: w,
                        speed: exact_speed(sys.r2.value(s))?,
                        ci: 0.0,
                    })
                })
                .collect::<Result<Vec<_>, SpeedError>>()?;
            Ok(MeanSpeed {
                c_star: nodes.iter().map(|n| n.weight * n.speed).sum(),
                ci: 0.0,
                nodes,
                nodes_per_piece: n,
                path: SpeedPath::Exact,
            })
        };
        let mut n = spec.nodes_per_piece.max(1);
        let mut cur = eval(n)?;
        while 2 * n <= spec.max_nodes_per_piece {
            let next = eval(2 * n)?;
            let done = (next.c_star - cur.c_star).abs() < spec.tol;
            cur = next;
            n *= 2;
            if done {
                break;
            }
        }
        return Ok(cur);
    }
    let nodes = quadrature_nodes(sys, spec.nodes_per_piece.max(1));
    let speeds: Vec<Result<NodeSpeed, SpeedError>> = nodes
        .par_iter()
        .map(|&(s, w)| {
            measure_speed(&sys.frozen(s), settings)
                .map(|e| NodeSpeed {
                    s,
                    weight: w,
                    speed: e.speed,
                    ci: e.ci,
                })
                .map_err(|e| SpeedError::Node { s, source: Box::new(e) })
        })
        .collect();
    let nodes = speeds.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(MeanSpeed {
        c_star: nodes.iter().map(|n| n.weight * n.speed).sum(),
        ci: nodes.iter().map(|n| n.weight * n.ci).sum(),
        nodes,
        nodes_per_piece: spec.nodes_per_piece,
        path: SpeedPath::Pde,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    Positive,
    Negative,
    Zero,
    Indeterminate,
}

/// Three-way sign with tolerance `tol`, using the interval `speed ± ci`.
pub fn sign_classify(speed: f64, ci: f64, tol: f64) -> SignClass {
    let (lo, hi) = (speed - ci, speed + ci);
    if lo > tol {
        SignClass::Positive
    } else if hi < -tol {
        SignClass::Negative
    } else if lo >= -tol && hi <= tol {
        SignClass::Zero
    } else {
        SignClass::Indeterminate
    }
}

/// A converged periodic wave `φ(ξ, t)` sampled over one period, with
/// `φ1(0, 0) = 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicWave {
    pub period: f64,
    pub speed: f64,
    pub h: f64,
    /// Profile `n` is sampled at `t_n = n·period/records`, `n = 0..records`.
    pub records: usize,
    profiles: Vec<[UniformSpline; 2]>,
}

impl PeriodicWave {
    /// `φ(ξ, t)`, linear in time between records and periodic in `t`.
    pub fn phi(&self, xi: f64, t: f64) -> [f64; 2] {
        let u = (t / self.period).rem_euclid(1.0) * self.records as f64;
        let n = (u.floor() as usize).min(self.records - 1);
        let w = u - n as f64;
        let a = &self.profiles[n];
        let b = &self.profiles[n + 1];
        let at = |k: usize| {
            let lo = a[k].eval(xi);
            if w == 0.0 {
                lo
            } else {
                (1.0 - w) * lo + w * b[k].eval(xi)
            }
        };
        [at(0), at(1)]
    }
}

/// Runs to convergence, then records one more period of the moving-frame profile.
pub fn capture_wave(model: &impl Kinetic, lipschitz: f64, settings: &SpeedSettings, records: usize) -> Result<PeriodicWave, SpeedError> {
    let mut sched = settings.schedule(model, lipschitz)?;
    let stride = sched.steps_per_interval.div_ceil(records);
    sched.steps_per_interval = stride * records;
    sched.dt = sched.interval / sched.steps_per_interval as f64;
    let field = initialize_front(
        settings.half_width,
        settings.nodes(),
        &ProfileSource::Tanh { width: settings.width },
    )?;
    let (est, mut field) = track(model, field, &sched, settings.residual_limit(), settings.enforce_residual)?;
    let c = est.speed;
    let t0 = field.t;
    let x0 = front_position(&field)?;
    let mut stepper = Stepper::new(sched.dt);
    let mut profiles = Vec::with_capacity(records + 1);
    for n in 0..=records {
        if n > 0 {
            stepper.advance(&mut field, model, stride)?;
        }
        let t = n as f64 * sched.interval / records as f64;
        field.t = t0 + t;
        // window node j sits at ξ = x_j + shift − x0 − c·t
        let xi0 = field.x(0) + field.shift - x0 - c * t;
        profiles.push([
            UniformSpline::new(xi0, field.h, field.v1.clone()),
            UniformSpline::new(xi0, field.h, field.v2.clone()),
        ]);
        field.recenter()?;
    }
    Ok(PeriodicWave {
        period: sched.interval,
        speed: c,
        h: field.h,
        records,
        profiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic_fn::example_family;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_values() {
        assert_abs_diff_eq!(exact_speed(12.0).unwrap(), 0.5_f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(exact_speed(3.5).unwrap(), -5.0 * 21f64.sqrt() / 42.0, epsilon = 1e-15);
        assert_eq!(exact_speed(6.0).unwrap(), 0.0);
        assert!(matches!(exact_speed(3.0), Err(SpeedError::Domain(_))));
        assert_abs_diff_eq!(exact_speed(19.0 / 3.0).unwrap(), 38f64.sqrt() / 114.0, epsilon = 1e-15);
    }

    #[test]
    fn sharp_mean_is_exact() {
        let sys = example_family(3.5, 12.0, 0.0, 1.0).unwrap();
        let m = mean_frozen_speed(&sys, &QuadratureSpec::default(), &SpeedSettings::default()).unwrap();
        let expect = 2f64.sqrt() / 6.0 - 5.0 * 21f64.sqrt() / 63.0;
        assert_abs_diff_eq!(m.c_star, expect, epsilon = 1e-12);
        for n in &m.nodes {
            assert_eq!(n.speed.signum(), (sys.r2.value(n.s) - 6.0).signum());
        }
    }

    #[test]
    fn classification() {
        assert_eq!(sign_classify(0.054, 0.002, 1e-3), SignClass::Positive);
        assert_eq!(sign_classify(2e-4, 1e-4, 1e-3), SignClass::Zero);
        assert_eq!(sign_classify(-0.128, 0.003, 1e-3), SignClass::Negative);
        assert_eq!(sign_classify(1e-3, 5e-3, 1e-3), SignClass::Indeterminate);
    }

    #[test]
    fn schedules() {
        let s = SpeedSettings::default();
        let auto = PeriodicSystem::frozen(&example_family(3.5, 12.0, 0.02, 1.0).unwrap(), 0.9);
        let a = s.schedule(&auto, 48.0).unwrap();
        assert_eq!((a.interval, a.steps_per_interval, a.discard, a.run), (1.0, 100, 40, 80));
        let bad = SpeedSettings {
            run_periods: Some(25),
            discard_periods: Some(20),
            ..s
        };
        assert!(bad.schedule(&auto, 1.0).is_err());
    }
}
