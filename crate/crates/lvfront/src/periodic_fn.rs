//! 1-periodic coefficient functions, the two-species system built from them,
//! and the structural assumption checks on that system.
//!
//! Three parametric families are supported: constants, trigonometric
//! polynomials and mollified steps. A mollified step switches between
//! plateau values through a quintic smoothstep of half-width `delta`
//! centred on each transition point; `delta = 0` gives the sharp step,
//! which is only meaningful for quadrature.

use crate::quadrature::Rule;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CoeffError {
    #[error("invalid coefficient family: {0}")]
    Invalid(String),
    #[error("coefficient not positive: min value {min} at s = {at}")]
    NotPositive { min: f64, at: f64 },
    #[error("period must be positive, got {0}")]
    BadPeriod(f64),
}

/// Parameters of a coefficient family, as written in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Constant {
        value: f64,
    },
    /// `mean + Σ_k cos[k-1]·cos(2πks) + sin[k-1]·sin(2πks)`.
    Trig {
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// Plateau `j` occupies `(centers[j], centers[j+1])` cyclically.
    Step {
        plateaus: Vec<f64>,
        centers: Vec<f64>,
        #[serde(default)]
        delta: f64,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FnSpec {
    Value(f64),
    Family(Family),
}

impl TryFrom<FnSpec> for PeriodicFn {
    type Error = CoeffError;
    fn try_from(spec: FnSpec) -> Result<Self, Self::Error> {
        match spec {
            FnSpec::Value(v) => PeriodicFn::new(Family::Constant { value: v }),
            FnSpec::Family(f) => PeriodicFn::new(f),
        }
    }
}

impl From<PeriodicFn> for Family {
    fn from(f: PeriodicFn) -> Self {
        f.family
    }
}

/// A validated 1-periodic coefficient with its cached mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FnSpec", into = "Family")]
pub struct PeriodicFn {
    family: Family,
    mean: f64,
}

fn smoothstep(u: f64) -> [f64; 3] {
    let u = u.clamp(0.0, 1.0);
    let u2 = u * u;
    [
        u2 * u * (10.0 - 15.0 * u + 6.0 * u2),
        30.0 * u2 * (1.0 - u) * (1.0 - u),
        60.0 * u * (1.0 - u) * (1.0 - 2.0 * u),
    ]
}

fn wrap_half(x: f64) -> f64 {
    x - x.round()
}

impl PeriodicFn {
    pub fn new(family: Family) -> Result<Self, CoeffError> {
        match &family {
            Family::Constant { value } => {
                if !value.is_finite() {
                    return Err(CoeffError::Invalid("non-finite constant".into()));
                }
            }
            Family::Trig { mean, cos, sin } => {
                if !mean.is_finite() || cos.iter().chain(sin).any(|c| !c.is_finite()) {
                    return Err(CoeffError::Invalid("non-finite trig coefficient".into()));
                }
            }
            Family::Step {
                plateaus,
                centers,
                delta,
            } => {
                if plateaus.is_empty() || plateaus.len() != centers.len() {
                    return Err(CoeffError::Invalid(
                        "step needs as many plateaus as centers (at least one)".into(),
                    ));
                }
                if !(*delta >= 0.0 && *delta < 0.5) {
                    return Err(CoeffError::Invalid(format!("bad smoothing half-width {delta}")));
                }
                if centers.iter().any(|c| !(0.0..1.0).contains(c)) {
                    return Err(CoeffError::Invalid("centers must lie in [0, 1)".into()));
                }
                let n = centers.len();
                for j in 0..n {
                    let next = if j + 1 < n { centers[j + 1] } else { centers[0] + 1.0 };
                    if next - centers[j] <= 2.0 * delta && n > 1 {
                        return Err(CoeffError::Invalid(
                            "centers must increase and transitions must not overlap".into(),
                        ));
                    }
                }
            }
        }
        let mut f = PeriodicFn { family, mean: 0.0 };
        let rule = Rule::new(16);
        f.mean = rule.integrate_split(0.0, 1.0, &f.breakpoints(), |s| f.value(s));
        let (min, at) = f.sampled_min();
        if !(min > 0.0) {
            return Err(CoeffError::NotPositive { min, at });
        }
        Ok(f)
    }

    pub fn constant(value: f64) -> Self {
        Self::new(Family::Constant { value }).expect("positive constant")
    }

    pub fn trig(mean: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self, CoeffError> {
        Self::new(Family::Trig { mean, cos, sin })
    }

    pub fn step(plateaus: Vec<f64>, centers: Vec<f64>, delta: f64) -> Result<Self, CoeffError> {
        Self::new(Family::Step {
            plateaus,
            centers,
            delta,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn is_constant(&self) -> bool {
        match &self.family {
            Family::Constant { .. } => true,
            Family::Trig { cos, sin, .. } => cos.iter().chain(sin).all(|&c| c == 0.0),
            Family::Step { plateaus, .. } => plateaus.iter().all(|&p| p == plateaus[0]),
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.eval(s, 0)
    }

    pub fn deriv(&self, s: f64) -> f64 {
        self.eval(s, 1)
    }

    pub fn deriv2(&self, s: f64) -> f64 {
        self.eval(s, 2)
    }

    fn eval(&self, s: f64, order: u8) -> f64 {
        match &self.family {
            Family::Constant { value } => {
                if order == 0 {
                    *value
                } else {
                    0.0
                }
            }
            Family::Trig { mean, cos, sin } => {
                let mut v = if order == 0 { *mean } else { 0.0 };
                let n = cos.len().max(sin.len());
                for k in 1..=n {
                    let w = TAU * k as f64;
                    let (sn, cs) = (w * s).sin_cos();
                    let a = cos.get(k - 1).copied().unwrap_or(0.0);
                    let b = sin.get(k - 1).copied().unwrap_or(0.0);
                    v += match order {
                        0 => a * cs + b * sn,
                        1 => w * (-a * sn + b * cs),
                        _ => -w * w * (a * cs + b * sn),
                    };
                }
                v
            }
            Family::Step {
                plateaus,
                centers,
                delta,
            } => {
                let n = centers.len();
                if *delta > 0.0 {
                    for j in 0..n {
                        let d = wrap_half(s - centers[j]);
                        if d.abs() < *delta {
                            let from = plateaus[(j + n - 1) % n];
                            let jump = plateaus[j] - from;
                            let sm = smoothstep((d + delta) / (2.0 * delta));
                            return match order {
                                0 => from + jump * sm[0],
                                1 => jump * sm[1] / (2.0 * delta),
                                _ => jump * sm[2] / (4.0 * delta * delta),
                            };
                        }
                    }
                }
                if order > 0 {
                    return 0.0;
                }
                let u = (s - centers[0]).rem_euclid(1.0);
                let mut idx = 0;
                for (j, c) in centers.iter().enumerate().skip(1) {
                    if c - centers[0] <= u {
                        idx = j;
                    }
                }
                plateaus[idx]
            }
        }
    }

    /// Points in [0, 1] where the function may lose smoothness (always includes 0 and 1).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![0.0, 1.0];
        if let Family::Step { centers, delta, .. } = &self.family {
            for &c in centers {
                if *delta > 0.0 {
                    b.push((c - delta).rem_euclid(1.0));
                    b.push((c + delta).rem_euclid(1.0));
                } else {
                    b.push(c);
                }
            }
        }
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        b
    }

    /// Sample points used by the checks: a uniform grid plus transition centers.
    pub fn sample_points(&self, n: usize) -> Vec<f64> {
        let mut pts: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
        if let Family::Step { centers, .. } = &self.family {
            pts.extend(centers.iter().copied());
        }
        pts
    }

    fn sampled_min(&self) -> (f64, f64) {
        self.sample_points(1024)
            .into_iter()
            .map(|s| (self.value(s), s))
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a })
    }

    /// Sampled (min, max).
    pub fn bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in self.sample_points(1024) {
            let v = self.value(s);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// `c·f`, same family.
    pub fn scaled(&self, c: f64) -> Result<Self, CoeffError> {
        let fam = match &self.family {
            Family::Constant { value } => Family::Constant { value: c * value },
            Family::Trig { mean, cos, sin } => Family::Trig {
                mean: c * mean,
                cos: cos.iter().map(|x| c * x).collect(),
                sin: sin.iter().map(|x| c * x).collect(),
            },
            Family::Step {
                plateaus,
                centers,
                delta,
            } => Family::Step {
                plateaus: plateaus.iter().map(|x| c * x).collect(),
                centers: centers.clone(),
                delta: *delta,
            },
        };
        Self::new(fam)
    }
}

/// Values of the eight coefficients at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coeffs {
    pub d: [f64; 2],
    pub r: [f64; 2],
    pub a: [f64; 2],
    pub k: [f64; 2],
}

impl Coeffs {
    /// Limiting logistic states `r_i / a_i`.
    pub fn p(&self) -> [f64; 2] {
        [self.r[0] / self.a[0], self.r[1] / self.a[1]]
    }

    /// `[r1 - k1 p2, r2 - k2 p1]`, both negative under the pointwise bistability condition.
    pub fn growth_margins(&self) -> [f64; 2] {
        let p = self.p();
        [self.r[0] - self.k[0] * p[1], self.r[1] - self.k[1] * p[0]]
    }
}

/// The eight coefficient functions and the period `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub d1: PeriodicFn,
    pub d2: PeriodicFn,
    pub r1: PeriodicFn,
    pub r2: PeriodicFn,
    pub a1: PeriodicFn,
    pub a2: PeriodicFn,
    pub k1: PeriodicFn,
    pub k2: PeriodicFn,
    pub period: f64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), CoeffError> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(CoeffError::BadPeriod(self.period));
        }
        Ok(())
    }

    /// All constant coefficients.
    pub fn constant(c: Coeffs, period: f64) -> Self {
        let f = PeriodicFn::constant;
        Self {
            d1: f(c.d[0]),
            d2: f(c.d[1]),
            r1: f(c.r[0]),
            r2: f(c.r[1]),
            a1: f(c.a[0]),
            a2: f(c.a[1]),
            k1: f(c.k[0]),
            k2: f(c.k[1]),
            period,
        }
    }

    pub fn fns(&self) -> [&PeriodicFn; 8] {
        [
            &self.d1, &self.d2, &self.r1, &self.r2, &self.a1, &self.a2, &self.k1, &self.k2,
        ]
    }

    /// Coefficients at unit-period phase `s` (i.e. at time `sT`).
    pub fn at(&self, s: f64) -> Coeffs {
        Coeffs {
            d: [self.d1.value(s), self.d2.value(s)],
            r: [self.r1.value(s), self.r2.value(s)],
            a: [self.a1.value(s), self.a2.value(s)],
            k: [self.k1.value(s), self.k2.value(s)],
        }
    }

    pub fn means(&self) -> Coeffs {
        Coeffs {
            d: [self.d1.mean(), self.d2.mean()],
            r: [self.r1.mean(), self.r2.mean()],
            a: [self.a1.mean(), self.a2.mean()],
            k: [self.k1.mean(), self.k2.mean()],
        }
    }

    pub fn is_autonomous(&self) -> bool {
        self.fns().iter().all(|f| f.is_constant())
    }

    pub fn with_period(&self, period: f64) -> Self {
        Self {
            period,
            ..self.clone()
        }
    }

    /// The autonomous system with every coefficient replaced by its mean.
    pub fn homogenized(&self) -> Self {
        Self::constant(self.means(), self.period)
    }

    /// The autonomous system with coefficients frozen at phase `s`.
    pub fn frozen(&self, s: f64) -> Self {
        Self::constant(self.at(s), self.period)
    }

    /// Species 1 and 2 exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            d1: self.d2.clone(),
            d2: self.d1.clone(),
            r1: self.r2.clone(),
            r2: self.r1.clone(),
            a1: self.a2.clone(),
            a2: self.a1.clone(),
            k1: self.k2.clone(),
            k2: self.k1.clone(),
            period: self.period,
        }
    }

    /// Union of all coefficient breakpoints in [0, 1].
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.fns().iter().flat_map(|f| f.breakpoints()).collect();
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        b
    }

    pub fn sample_points(&self, n: usize) -> Vec<f64> {
        let mut pts: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
        for f in self.fns() {
            if let Family::Step { centers, .. } = f.family() {
                pts.extend(centers.iter().copied());
            }
        }
        pts
    }

    /// `(θ₋, θ₊)`: sampled bounds over all eight coefficients.
    pub fn theta_bounds(&self) -> (f64, f64) {
        self.fns().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| {
            let (a, b) = f.bounds();
            (lo.min(a), hi.max(b))
        })
    }

    /// `(γ₋, γ₊)` for species `i`: `min r / max a` and `max r / min a`.
    pub fn gamma_bounds(&self, i: usize) -> (f64, f64) {
        let (r, a) = if i == 0 { (&self.r1, &self.a1) } else { (&self.r2, &self.a2) };
        let (rlo, rhi) = r.bounds();
        let (alo, ahi) = a.bounds();
        (rlo / ahi, rhi / alo)
    }
}

const STRICT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A1Report {
    pub holds: bool,
    /// `[k̄1 r̄2 − r̄1 ā2, k̄2 r̄1 − r̄2 ā1]`; both positive when the condition holds.
    pub margins: [f64; 2],
    /// `[r̄1 − k̄1 p̄2, r̄2 − k̄2 p̄1]` with `p̄i = r̄i / āi`.
    pub growth_margins: [f64; 2],
}

/// Mean-value bistability condition.
pub fn check_a1(sys: &SystemConfig) -> A1Report {
    let m = sys.means();
    let margins = [
        m.k[0] * m.r[1] - m.r[0] * m.a[1],
        m.k[1] * m.r[0] - m.r[1] * m.a[0],
    ];
    A1Report {
        holds: margins.iter().all(|&x| x > STRICT),
        margins,
        growth_margins: m.growth_margins(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A2Report {
    pub holds: bool,
    /// Smallest pointwise margin `min(k1 r2 − r1 a2, k2 r1 − r2 a1)` and where it occurs.
    pub worst_margin: f64,
    pub worst_s: f64,
    /// Observed `min_s min(−(r1 − k1 p2), −(r2 − k2 p1), r1, r2)`.
    pub gamma0_observed: f64,
    /// `0.9 ·` the observed value.
    pub gamma0: f64,
}

/// Pointwise bistability condition, sampled.
pub fn check_a2(sys: &SystemConfig, sample_count: usize) -> A2Report {
    let mut worst = (f64::INFINITY, 0.0);
    let mut g0 = f64::INFINITY;
    for s in sys.sample_points(sample_count.max(64)) {
        let c = sys.at(s);
        let m = (c.k[0] * c.r[1] - c.r[0] * c.a[1]).min(c.k[1] * c.r[0] - c.r[1] * c.a[0]);
        if m < worst.0 {
            worst = (m, s);
        }
        let gm = c.growth_margins();
        g0 = g0.min(-gm[0]).min(-gm[1]).min(c.r[0]).min(c.r[1]);
    }
    A2Report {
        holds: worst.0 > STRICT,
        worst_margin: worst.0,
        worst_s: worst.1,
        gamma0_observed: g0,
        gamma0: 0.9 * g0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WangReport {
    pub a2_cond: bool,
    pub a3_cond: bool,
    /// `[min(k1/a2) r̄2 − r̄1, min(k2/a1) r̄1 − r̄2]`.
    pub a2_margins: [f64; 2],
    /// `[r̄1 + r̄2 − max(k2/a1) r̄1, r̄1 + r̄2 − max(k1/a2) r̄2]`.
    pub a3_margins: [f64; 2],
}

/// Earlier-literature hypotheses, for comparison only.
pub fn check_wang_conditions(sys: &SystemConfig) -> WangReport {
    let m = sys.means();
    let (mut min12, mut min21) = (f64::INFINITY, f64::INFINITY);
    let (mut max12, mut max21) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for s in sys.sample_points(1024) {
        let c = sys.at(s);
        let q12 = c.k[0] / c.a[1];
        let q21 = c.k[1] / c.a[0];
        min12 = min12.min(q12);
        max12 = max12.max(q12);
        min21 = min21.min(q21);
        max21 = max21.max(q21);
    }
    let a2_margins = [min12 * m.r[1] - m.r[0], min21 * m.r[0] - m.r[1]];
    let a3_margins = [m.r[0] + m.r[1] - max21 * m.r[0], m.r[0] + m.r[1] - max12 * m.r[1]];
    WangReport {
        a2_cond: a2_margins.iter().all(|&x| x > STRICT),
        a3_cond: a3_margins.iter().all(|&x| x > STRICT),
        a2_margins,
        a3_margins,
    }
}

/// The sign-change example family: `d ≡ a ≡ r1 ≡ 1`, `k1 ≡ 1/3`, `r2` a
/// (mollified) step between `lo` on `(0, 2/3]` and `hi` on `(2/3, 1]`, `k2 = 2 + (4/3) r2`.
pub fn example_family(lo: f64, hi: f64, delta: f64, period: f64) -> Result<SystemConfig, CoeffError> {
    let centers = vec![0.0, 2.0 / 3.0];
    let r2 = PeriodicFn::step(vec![lo, hi], centers.clone(), delta)?;
    let k2 = PeriodicFn::step(
        vec![2.0 + 4.0 / 3.0 * lo, 2.0 + 4.0 / 3.0 * hi],
        centers,
        delta,
    )?;
    let one = PeriodicFn::constant(1.0);
    Ok(SystemConfig {
        d1: one.clone(),
        d2: one.clone(),
        r1: one.clone(),
        r2,
        a1: one.clone(),
        a2: one,
        k1: PeriodicFn::constant(1.0 / 3.0),
        k2,
        period,
    })
}

/// True when the system has the example-family shape, so the exact frozen speed applies.
pub fn matches_example_family(sys: &SystemConfig) -> bool {
    let unit = [&sys.d1, &sys.d2, &sys.r1, &sys.a1, &sys.a2];
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + y.abs());
    sys.sample_points(256).into_iter().all(|s| {
        unit.iter().all(|f| close(f.value(s), 1.0))
            && close(sys.k1.value(s), 1.0 / 3.0)
            && close(sys.k2.value(s), 2.0 + 4.0 / 3.0 * sys.r2.value(s))
            && sys.r2.value(s) > 3.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn trig() -> PeriodicFn {
        PeriodicFn::trig(1.0, vec![0.2, 0.05], vec![0.5]).unwrap()
    }

    fn unit_system(k1: f64, k2: f64) -> SystemConfig {
        SystemConfig::constant(
            Coeffs {
                d: [1.0; 2],
                r: [1.0; 2],
                a: [1.0; 2],
                k: [k1, k2],
            },
            1.0,
        )
    }

    #[test]
    fn means_of_families() {
        assert_eq!(PeriodicFn::constant(3.0).mean(), 3.0);
        let sine = PeriodicFn::trig(1.0, vec![], vec![0.5]).unwrap();
        assert_abs_diff_eq!(sine.mean(), 1.0, epsilon = 1e-14);
        let step = PeriodicFn::step(vec![3.5, 12.0], vec![0.0, 2.0 / 3.0], 0.02).unwrap();
        assert_abs_diff_eq!(step.mean(), 19.0 / 3.0, epsilon = 1e-12);
        let sharp = PeriodicFn::step(vec![3.5, 12.0], vec![0.0, 2.0 / 3.0], 0.0).unwrap();
        assert_abs_diff_eq!(sharp.mean(), 19.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn step_plateaus_and_transitions() {
        let f = PeriodicFn::step(vec![3.5, 12.0], vec![0.0, 2.0 / 3.0], 0.02).unwrap();
        assert_eq!(f.value(0.3), 3.5);
        assert_eq!(f.value(0.9), 12.0);
        assert_abs_diff_eq!(f.value(2.0 / 3.0), 7.75, epsilon = 1e-12);
        assert_abs_diff_eq!(f.value(0.0), 7.75, epsilon = 1e-12);
        assert_abs_diff_eq!(f.value(1.3), f.value(0.3), epsilon = 1e-12);
        assert_eq!(f.deriv(0.5), 0.0);
        assert!(f.deriv(2.0 / 3.0) > 0.0 && f.deriv(0.0) < 0.0);
    }

    #[test]
    fn periodicity_and_positivity() {
        for f in [trig(), PeriodicFn::step(vec![3.5, 12.0], vec![0.0, 2.0 / 3.0], 0.02).unwrap()] {
            for j in 0..200 {
                let s = j as f64 / 137.0;
                assert_abs_diff_eq!(f.value(s), f.value(s + 1.0), epsilon = 1e-12);
                assert!(f.value(s) > 0.0);
            }
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        // Relative to the sup norm of the derivative: pointwise relative error
        // is meaningless where the derivative vanishes.
        let h = 1e-5;
        let fams = [trig(), PeriodicFn::step(vec![3.5, 12.0], vec![0.0, 2.0 / 3.0], 0.02).unwrap()];
        for f in fams {
            let pts: Vec<f64> = (0..256).map(|j| (j as f64 + 0.5) / 256.0).collect();
            let sup1 = pts.iter().fold(0.0_f64, |m, &s| m.max(f.deriv(s).abs()));
            let sup2 = pts.iter().fold(0.0_f64, |m, &s| m.max(f.deriv2(s).abs()));
            for &s in &pts {
                let fd1 = (f.value(s + h) - f.value(s - h)) / (2.0 * h);
                let fd2 = (f.deriv(s + h) - f.deriv(s - h)) / (2.0 * h);
                assert!((fd1 - f.deriv(s)).abs() <= 1e-6 * sup1, "d1 at {s}");
                assert!((fd2 - f.deriv2(s)).abs() <= 1e-6 * sup2, "d2 at {s}");
            }
        }
    }

    #[test]
    fn mean_is_linear() {
        let f = trig();
        let g = f.scaled(2.5).unwrap();
        assert_abs_diff_eq!(g.mean(), 2.5 * f.mean(), epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PeriodicFn::new(Family::Constant { value: -1.0 }).is_err());
        assert!(PeriodicFn::trig(0.1, vec![0.5], vec![]).is_err());
        assert!(PeriodicFn::step(vec![1.0, 2.0], vec![0.5, 0.2], 0.01).is_err());
        assert!(PeriodicFn::step(vec![1.0, 2.0], vec![0.0, 0.01], 0.02).is_err());
    }

    #[test]
    fn a1_examples() {
        let ex = example_family(3.5, 12.0, 0.02, 1.0).unwrap();
        let rep = check_a1(&ex);
        assert!(rep.holds);
        assert_abs_diff_eq!(rep.growth_margins[0], -10.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.growth_margins[1], -37.0 / 9.0, epsilon = 1e-12);
        assert!(!check_a1(&unit_system(1.0, 1.0)).holds);
        assert!(check_a1(&unit_system(2.0, 2.0)).holds);
    }

    #[test]
    fn a2_examples() {
        let ex = example_family(3.5, 12.0, 0.02, 1.0).unwrap();
        let rep = check_a2(&ex, 1024);
        assert!(rep.holds);
        assert_abs_diff_eq!(rep.gamma0_observed, 1.0 / 6.0, epsilon = 1e-12);
        assert!(!check_a2(&unit_system(1.0, 1.0), 1024).holds);
        assert!(check_a2(&unit_system(10.0, 10.0), 1024).holds);
    }

    #[test]
    fn a2_implies_a1_for_equal_a() {
        let r1 = PeriodicFn::trig(1.2, vec![], vec![0.1]).unwrap();
        let mut sys = unit_system(2.0, 2.5);
        sys.r1 = r1;
        assert!(check_a2(&sys, 1024).holds);
        assert!(check_a1(&sys).holds);
    }

    #[test]
    fn wang_example() {
        let rep = check_wang_conditions(&unit_system(2.0, 2.0));
        assert!(rep.a2_cond);
        assert!(!rep.a3_cond);
        assert_abs_diff_eq!(rep.a3_margins[0], 0.0, epsilon = 1e-14);
        assert!(!check_wang_conditions(&unit_system(1.0, 1.0)).a2_cond);
        let ex = example_family(3.5, 12.0, 0.02, 1.0).unwrap();
        let _ = check_wang_conditions(&ex);
    }

    #[test]
    fn example_family_detection() {
        let ex = example_family(3.5, 12.0, 0.02, 1.0).unwrap();
        assert!(matches_example_family(&ex));
        assert!(matches_example_family(&ex.frozen(0.9)));
        assert!(!matches_example_family(&unit_system(2.0, 2.0)));
    }

    #[test]
    fn config_roundtrip() {
        let ex = example_family(3.5, 12.0, 0.02, 1.0).unwrap();
        let text = toml::to_string(&ex).unwrap();
        let back: SystemConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, ex);
        let plain: SystemConfig = toml::from_str(
            "period = 2.0\nd1 = 1.0\nd2 = 1.0\nr1 = 1.0\nr2 = 1.0\na1 = 1.0\na2 = 1.0\nk1 = 2.0\n\
             k2 = { family = \"trig\", mean = 2.0, sin = [0.1] }\n",
        )
        .unwrap();
        assert_abs_diff_eq!(plain.k2.value(0.25), 2.1, epsilon = 1e-14);
    }
}
