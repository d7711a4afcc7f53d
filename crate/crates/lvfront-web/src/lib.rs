//! wasm-bindgen bindings for the static page in `www/`.
//!
//! Everything crosses the boundary as flat `f64` arrays. The work happens in
//! [`compute`], which also builds natively; the exported wrappers only turn
//! errors into JavaScript exceptions.

use wasm_bindgen::prelude::*;

pub mod compute {
    use lvfront::kinetics::separatrix;
    use lvfront::logistic::periodic_logistic_closed_form;
    use lvfront::periodic_fn::{example_family, PeriodicFn};
    use lvfront::wavespeed::{exact_speed, mean_frozen_speed, QuadratureSpec, SpeedSettings};

    fn s(e: impl std::fmt::Display) -> String {
        e.to_string()
    }

    /// `[r, c, r, c, ...]` at `n` values of `r2` in `[lo, hi]`.
    pub fn speed_curve(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, String> {
        if !(lo > 3.0 && hi > lo && n >= 2) {
            return Err("need 3 < lo < hi and n >= 2".into());
        }
        let mut out = Vec::with_capacity(2 * n);
        for j in 0..n {
            let r = lo + (hi - lo) * j as f64 / (n - 1) as f64;
            out.push(r);
            out.push(exact_speed(r).map_err(s)?);
        }
        Ok(out)
    }

    /// `[c(lo), c(hi), c at mean r2, phase-averaged c]`.
    pub fn family_speeds(lo: f64, hi: f64, delta: f64) -> Result<Vec<f64>, String> {
        let sys = example_family(lo, hi, delta, 1.0).map_err(s)?;
        if !(lo > 3.0 && hi > 3.0) {
            return Err("plateaus must exceed 3".into());
        }
        let mean = mean_frozen_speed(&sys, &QuadratureSpec::default(), &SpeedSettings::default()).map_err(s)?;
        Ok(vec![
            exact_speed(lo).map_err(s)?,
            exact_speed(hi).map_err(s)?,
            exact_speed(sys.r2.mean()).map_err(s)?,
            mean.c_star,
        ])
    }

    /// `[t, p, t, p, ...]` over one period, `r(s) = mean + amp·sin(2πs)`.
    pub fn logistic_state(mean: f64, amp: f64, a: f64, period: f64, m: usize) -> Result<Vec<f64>, String> {
        let r = PeriodicFn::trig(mean, vec![], vec![amp]).map_err(s)?;
        let a = PeriodicFn::constant(a);
        let p = periodic_logistic_closed_form(&r, &a, period, m.max(256)).map_err(s)?;
        Ok(p.times().into_iter().zip(p.samples()).flat_map(|(t, v)| [t, *v]).collect())
    }

    /// Saddle followed by `n` separatrix points, flattened.
    pub fn separatrix_points(r2: f64, n: usize) -> Result<Vec<f64>, String> {
        let sys = example_family(r2, r2, 0.0, 1.0).map_err(s)?;
        let sep = separatrix(&sys, 0.0, 200).map_err(s)?;
        let mut out = vec![sep.saddle[0], sep.saddle[1]];
        for p in sep.resample(n.max(2)) {
            out.extend(p);
        }
        Ok(out)
    }
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Closed-form frozen speed of the step family as a function of `r2`.
#[wasm_bindgen]
pub fn speed_curve(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
    js(compute::speed_curve(lo, hi, n))
}

/// Plateau speeds, the speed at the mean of `r2`, and the phase average.
#[wasm_bindgen]
pub fn family_speeds(lo: f64, hi: f64, delta: f64) -> Result<Vec<f64>, JsError> {
    js(compute::family_speeds(lo, hi, delta))
}

/// Periodic logistic state for a sinusoidal growth rate.
#[wasm_bindgen]
pub fn logistic_state(mean: f64, amp: f64, a: f64, period: f64, m: usize) -> Result<Vec<f64>, JsError> {
    js(compute::logistic_state(mean, amp, a, period, m))
}

/// Separatrix of the step family frozen on the plateau `r2`.
#[wasm_bindgen]
pub fn separatrix_points(r2: f64, n: usize) -> Result<Vec<f64>, JsError> {
    js(compute::separatrix_points(r2, n))
}
