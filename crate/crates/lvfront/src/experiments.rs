//! The runnable operations behind the command-line verbs.
//!
//! Every operation takes a resolved [`ExperimentFile`] and returns a
//! [`Report`]; solver failures end up in the report with status `error`.

use crate::comparison::{
    barrier_margin, capture_wave_residual, choose_mu, lambdas, large_period_barrier, normalized_eigenfunctions, Side,
};
use crate::config::{CaseKind, ExperimentFile, SignCase, Tag};
use crate::kinetics::{
    equilibrium_trajectory, find_interior_fixed_point, floquet, separatrix, steps_for_period, Local,
    PeriodicSystem,
};
use crate::logistic::{periodic_logistic_closed_form, periodic_logistic_ode};
use crate::pde::{initialize_front, ProfileSource, Stepper};
use crate::periodic_fn::{check_a1, check_a2, check_wang_conditions, matches_example_family, SystemConfig};
use crate::report::{num, Check, Report, Table};
use crate::stats::{band_ratio, fit_line, strictly_decreasing};
use crate::wavespeed::{
    exact_speed, front_position, homogenized_speed, mean_frozen_speed, measure_speed, sign_classify, SignClass,
    SpeedEstimate, SpeedSettings,
};
use rayon::prelude::*;
use serde_json::json;

/// Deviation allowed when the coefficients do not oscillate at all.
const AUTONOMOUS_NOISE: f64 = 2e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operation {
    CheckAssumptions,
    Logistic,
    Kinetics,
    Simulate,
    Speed,
    LimitsSmall,
    LimitsLarge,
    SignCriteria,
    SignChange,
    Residuals,
}

impl Operation {
    pub fn verb(&self) -> &'static str {
        match self {
            Operation::CheckAssumptions => "check-assumptions",
            Operation::Logistic => "logistic",
            Operation::Kinetics => "kinetics",
            Operation::Simulate => "simulate",
            Operation::Speed => "speed",
            Operation::LimitsSmall => "limits-small",
            Operation::LimitsLarge => "limits-large",
            Operation::SignCriteria => "sign-criteria",
            Operation::SignChange => "sign-change",
            Operation::Residuals => "residuals",
        }
    }

    /// The experiment tag a config must carry for this verb, if any.
    pub fn tag(&self) -> Option<Tag> {
        match self {
            Operation::Kinetics => Some(Tag::KineticsReport),
            Operation::Speed => Some(Tag::SpeedSweep),
            Operation::LimitsSmall => Some(Tag::LimitsSmall),
            Operation::LimitsLarge => Some(Tag::LimitsLarge),
            Operation::SignCriteria => Some(Tag::SignCriteria),
            Operation::SignChange => Some(Tag::SignChangeExample),
            Operation::Residuals => Some(Tag::ResidualCheck),
            _ => None,
        }
    }
}

type Outcome = Result<(), String>;

/// Runs `op` on a worker pool of `cfg.experiment.threads` threads.
pub fn run(op: Operation, cfg: &ExperimentFile) -> Report {
    let report = Report::new(op.verb(), cfg);
    if let Some(tag) = op.tag() {
        if cfg.experiment.tag != tag {
            return report.failed(format!(
                "`{}` needs an experiment tagged `{}`, got `{}`",
                op.verb(),
                tag.as_str(),
                cfg.experiment.tag.as_str()
            ));
        }
    }
    if let Err(e) = cfg.validate() {
        return report.failed(e);
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.experiment.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => return report.failed(e),
    };
    pool.install(move || {
        let mut report = report;
        let f = match op {
            Operation::CheckAssumptions => check_assumptions,
            Operation::Logistic => logistic_report,
            Operation::Kinetics => run_kinetics_report,
            Operation::Simulate => simulate,
            Operation::Speed => run_speed_sweep,
            Operation::LimitsSmall => run_limits_small,
            Operation::LimitsLarge => run_limits_large,
            Operation::SignCriteria => run_sign_criteria,
            Operation::SignChange => run_sign_change,
            Operation::Residuals => run_residual_check,
        };
        match f(cfg, &mut report) {
            Ok(()) => report.finish(),
            Err(e) => report.failed(e),
        }
    })
}

fn system(cfg: &ExperimentFile) -> Result<SystemConfig, String> {
    cfg.system().map_err(|e| e.to_string())
}

fn kinetic_m(cfg: &ExperimentFile, period: f64) -> usize {
    cfg.experiment.m.unwrap_or_else(|| steps_for_period(period))
}

fn periods_or_own(cfg: &ExperimentFile, sys: &SystemConfig) -> Vec<f64> {
    if cfg.experiment.periods.is_empty() {
        vec![sys.period]
    } else {
        cfg.experiment.periods.clone()
    }
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn class_name(c: SignClass) -> &'static str {
    match c {
        SignClass::Positive => "positive",
        SignClass::Negative => "negative",
        SignClass::Zero => "zero",
        SignClass::Indeterminate => "indeterminate",
    }
}

/// Speeds for a list of periods, in parallel; the first failure names its period.
fn speeds_for(sys: &SystemConfig, periods: &[f64], settings: &SpeedSettings) -> Result<Vec<SpeedEstimate>, String> {
    periods
        .par_iter()
        .map(|&t| measure_speed(&sys.with_period(t), settings).map_err(|e| format!("T = {t}: {e}")))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Mean-value and pointwise bistability, stable diagonals, earlier-literature conditions.
pub fn check_assumptions(cfg: &ExperimentFile, rep: &mut Report) -> Outcome {
    let sys = system(cfg)?;
    let a1 = check_a1(&sys);
    let a2 = check_a2(&sys, 1024);
    let wang = check_wang_conditions(&sys);
    let model = PeriodicSystem::new(&sys, kinetic_m(cfg, sys.period)).map_err(|e| e.to_string())?;
    let lam = lambdas(&model);
    let min_lambda = lam.all().into_iter().fold(f64::INFINITY, f64::min);
    rep.check(Check::new("mean-value bistability", a1.holds, format!("margins {:?}", a1.margins)));
    rep.check(Check::new(
        "pointwise bistability",
        a2.holds,
        format!("worst margin {:.6e} at s = {:.4}", a2.worst_margin, a2.worst_s),
    ));
    rep.check(Check::new(
        "stable boundary diagonals",
        min_lambda > 0.0,
        format!("lambda-, lambda+ = {:?}", lam.all()),
    ));
    let mut t = Table::new("means", &["coefficient", "mean", "min", "max"]);
    let names = ["d1", "d2", "r1", "r2", "a1", "a2", "k1", "k2"];
    for (n, f) in names.iter().zip(sys.fns()) {
        let (lo, hi) = f.bounds();
        t.push(vec![n.to_string(), num(f.mean()), num(lo), num(hi)]);
    }
    rep.table(t);
    rep.result("a1", &a1);
    rep.result("a2", &a2);
    rep.result("earlier_conditions", &wang);
    rep.result("lambdas", json!({"minus": lam.minus, "plus": lam.plus}));
    rep.result("example_family", matches_example_family(&sys));
    Ok(())
}

/// Periodic logistic states, closed form against the ODE oracle, and their period limits.
pub fn logistic_report(cfg: &ExperimentFile, rep: &mut Report) -> Outcome {
    let sys = system(cfg)?;
    let m = cfg.experiment.m.unwrap_or(2048);
    let pairs = [(&sys.r1, &sys.a1), (&sys.r2, &sys.a2)];
    let mut states = Vec::new();
    let mut worst: f64 = 0.0;
    for (r, a) in pairs {
        let cf = periodic_logistic_closed_form(r, a, sys.period, m).map_err(|e| e.to_string())?;
        let ode = periodic_logistic_ode(r, a, sys.period, m).map_err(|e| e.to_string())?;
        let d = cf
            .samples()
            .iter()
            .zip(ode.samples())
            .fold(0.0_f64, |d, (x, y)| d.max((x - y).abs()));
        worst = worst.max(d);
        states.push(cf);
    }
    rep.check(Check::new(
        "closed form matches ODE oracle",
        worst <= 1e-8,
        format!("sup difference {worst:.3e}"),
    ));
    let mut t = Table::new("logistic_states", &["t", "p1", "p2"]);
    for (j, time) in states[0].times().into_iter().enumerate() {
        t.push_nums(&[time, states[0].samples()[j], states[1].samples()[j]]);
    }
    rep.table(t);
    if !cfg.experiment.periods.is_empty() {
        let mut lim = Table::new(
            "logistic_limits",
            &["T", "species", "dev_mean", "dev_mean_over_T", "dev_frozen", "T_dev_frozen"],
        );
        for &period in &cfg.experiment.periods {
            for (i, (r, a)) in pairs.iter().enumerate() {
                let p = periodic_logistic_closed_form(r, a, period, m).map_err(|e| e.to_string())?;
                let target = r.mean() / a.mean();
                let (mut dm, mut df) = (0.0_f64, 0.0_f64);
                for (j, v) in p.samples().iter().enumerate() {
                    let s = j as f64 / m as f64;
                    dm = dm.max((v - target).abs());
                    df = df.max((v - r.value(s) / a.value(s)).abs());
                }
                lim.push_nums(&[period, (i + 1) as f64, dm, dm / period, df, df * period]);
            }
        }
        rep.table(lim);
    }
    Ok(())
}

/// Coexistence orbits and their Floquet exponents, stability of 0 and 1, frozen separatrices.
pub fn run_kinetics_report(cfg: &ExperimentFile, rep: &mut Report) -> Outcome {
    let base = system(cfg)?;
    if !(check_a1(&base).holds || check_a2(&base, 1024).holds) {
        return Err("neither bistability condition holds".into());
    }
    let mut fixed = Table::new(
        "fixed_points",
        &["T", "seed_v1", "seed_v2", "v1", "v2", "lambda", "mult1", "mult2"],
    );
    let mut boundary = Table::new("boundary_states", &["T", "state", "mult1", "mult2", "stable"]);
    let mut found = Vec::new();
    for period in periods_or_own(cfg, &base) {
        let sys = base.with_period(period);
        let model = PeriodicSystem::new(&sys, kinetic_m(cfg, period)).map_err(|e| e.to_string())?;
        let m = kinetic_m(cfg, period);
        let seeds = if cfg.experiment.seeds.is_empty() {
            default_seeds(&sys)
        } else {
            cfg.experiment.seeds.clone()
        };
        let mut hit = None;
        for seed in &seeds {
            if let Ok(traj) = find_interior_fixed_point(&model, *seed, m) {
                let fl = floquet(period, &traj);
                hit = Some((*seed, traj.states[0], fl));
                break;
            }
        }
        match &hit {
            Some((seed, v, fl)) => {
                let lambda = fl.lambda.unwrap_or(f64::NAN);
                fixed.push_nums(&[
                    period,
                    seed[0],
                    seed[1],
                    v[0],
                    v[1],
                    lambda,
                    fl.multipliers[0].0,
                    fl.multipliers[1].0,
                ]);
                rep.check(Check::new(
                    format!("coexistence unstable at T = {period}"),
                    lambda < -1e-6,
                    format!("lambda_T = {lambda:.6e}"),
                ));
            }
            None => rep.check(Check::new(
                format!("coexistence found at T = {period}"),
                false,
                format!("no interior fixed point from {} seeds", seeds.len()),
            )),
        }
        found.push(json!({
            "period": period,
            "coexistence": hit.as_ref().map(|(s, v, fl)| json!({"seed": s, "v0": v, "floquet": fl})),
        }));
        for (name, v) in [("0", [0.0, 0.0]), ("1", [1.0, 1.0])] {
            let traj = equilibrium_trajectory(&model, v, m).map_err(|e| e.to_string())?;
            let fl = floquet(period, &traj);
            let radius = fl.multipliers.iter().map(|z| z.0.hypot(z.1)).fold(0.0, f64::max);
            boundary.push(vec![
                num(period),
                name.into(),
                num(fl.multipliers[0].0),
                num(fl.multipliers[1].0),
                (radius < 1.0).to_string(),
            ]);
            rep.check(Check::new(
                format!("state {name} stable at T = {period}"),
                radius < 1.0,
                format!("spectral radius {radius:.6e}"),
            ));
        }
    }
    rep.table(fixed);
    rep.table(boundary);
    let sections = if cfg.experiment.sections.is_empty() {
        vec![0.125, 0.375, 0.625, 0.875]
    } else {
        cfg.experiment.sections.clone()
    };
    let mut absent = Vec::new();
    for s in sections {
        match separatrix(&base, s, 200) {
            Ok(sep) => {
                let mut t = Table::new(&format!("separatrix_s{s}"), &["v1", "v2"]);
                for p in sep.resample(64) {
                    t.push_nums(&p);
                }
                rep.table(t);
            }
            Err(e) => absent.push(json!({"s": s, "reason": e.to_string()})),
        }
    }
    rep.result("periods", found);
    rep.result("separatrix_absent", absent);
    Ok(())
}

/// Averaged-system saddle, then the frozen saddles at a few phases.
pub fn default_seeds(sys: &SystemConfig) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    let mut push = |c| {
        if let Some(v) = Local::frozen(c).interior_equilibrium() {
            out.push(v);
        }
    };
    push(sys.means());
    for s in [0.0, 0.25, 0.5, 0.75] {
        push(sys.at(s));
    }
    out
}

/// Plain simulation from tanh data with snapshots and the front trajectory.
pub fn simulate(cfg: &ExperimentFile, rep: &mut Report) -> Outcome {
    let sys = system(cfg)?;
    let st = &cfg.speed;
    let model = PeriodicSystem::new(&sys, kinetic_m(cfg, sys.period)).map_err(|e| e.to_string())?;
    let sched = st.schedule(&model, model.max_lipschitz()).map_err(|e| e.to_string())?;
    let mut field = initialize_front(st.half_width, st.nodes(), &ProfileSource::Tanh { width: st.width })
        .map_err(|e| e.to_string())?;
    let intervals = cfg.experiment.horizon.ceil().max(1.0) as usize;
    let every = (intervals / cfg.experiment.snapshots.max(1)).max(1);
    let mut stepper = Stepper::new(sched.dt);
    let mut profiles = Table::new("profiles", &["t", "x", "v1", "v2"]);
    let mut front = Table::new("front", &["t", "x_front"]);
    let mut times = Vec::new();
    let mut xs = Vec::new();
    for n in 0..=intervals {
        if n > 0 {
            stepper
                .advance(&mut field, &model, sched.steps_per_interval)
                .map_err(|e| e.to_string())?;
        }
        let xf = front_position(&field).map_err(|e| e.to_string())?;
        front.push_nums(&[field.t, xf]);
        times.push(field.t);
        xs.push(xf);
        if n % every == 0 || n == intervals {
            for row in field.snapshot() {
                profiles.push_nums(&[field.t, row[0] + field.shift, row[1], row[2]]);
            }
        }
        field.recenter().map_err(|e| e.to_string())?;
    }
    let half = times.len() / 2;
    let fit = fit_line(&times[half..], &xs[half..]);
    rep.result("schedule", sched);
    rep.result("late_speed", fit.map(|f| f.slope));
    rep.result("monotonicity_defect", field.monotonicity_defect());
    rep.table(profiles);
    rep.table(front);
    Ok(())
}

fn speed_row(t: &mut Table, period: f64, e: &SpeedEstimate, extra: &[f64]) {
    let mut row = vec![period, e.speed, e.ci, e.residual_rms];
    row.extend_from_slice(extra);
    t.push_nums(&row);
}

/// `c_T` for every period in the list.
pub fn run_speed_sweep(cfg: &ExperimentFile, rep: &mut Report) -> Outcome {
    let sys = system(cfg)?;
    let est = speeds_for(&sys, &cfg.experiment.periods, &cfg.speed)?;
    let mut t = Table::new("speeds", &["T", "c_T", "ci", "residual_rms", "class"]);
    for (&p, e) in cfg.experiment.periods.iter().zip(&est) {
        let class = sign_classify(e.speed, e.ci, cfg.experiment.tol);
        t.push(vec![
            num(p),
            num(e.speed),
            num(e.ci),
            num(e.residual_rms),
            class_name(class).into(),
        ]);
    }
    rep.table(t);
    rep.check(Check::new("all speeds converged", true, format!("{} periods", est.len())));
    Ok(())
}

/// Small-period limit: deviation from the homogenized speed along decreasing periods.
pub fn run_limits_small(cfg: &ExperimentFile, rep: &mut Report) -> Outcome {
    let sys = system(cfg)?;
    if !check_a1(&sys).holds {
        return Err("mean-value bistability does not hold".into());
    }
    let c0 = homogenized_speed(&sys, &cfg.speed).map_err(|e| format!("homogenized: {e}"))?;
    let periods = &cfg.experiment.periods;
    let est = speeds_for(&sys, periods, &cfg.speed)?;
    let mut t = Table::new("limits_small", &["T", "c_T", "ci", "residual_rms", "dev", "dev_over_T", "dev_over_T2"]);
    let mut devs = Vec::new();
    let mut scaled = Vec::new();
    let mut scaled2 = Vec::new();
    for (&p, e) in periods.iter().zip(&est) {
        let d = (e.speed - c0.estimate.speed).abs();
        devs.push(d);
        scaled.push(d / p);
        scaled2.push(d / (p * p));
        speed_row(&mut t, p, e, &[d, d / p, d / (p * p)]);
    }
    rep.table(t);
    let band = band_ratio(&scaled);
    if sys.is_autonomous() {
        let worst = devs.iter().fold(0.0_f64, |m, d| m.max(*d));
        rep.check(Check::new(
            "constant coefficients: c_T = c0",
            worst <= AUTONOMOUS_NOISE,
            format!("max deviation {worst:.3e}"),
        ));
    } else {
        rep.check(Check::new(
            "deviations strictly decreasing",
            strictly_decreasing(&devs),
            sci(&devs),
        ));
        rep.check(Check::new(
            "dev/T within band",
            band <= cfg.experiment.band,
            format!("max/min = {band:.3} (limit {})", cfg.experiment.band),
        ));
    }
    rep.result("c0", c0.estimate.speed);
    rep.result("c0_ci", c0.estimate.ci);
    rep.result("c0_closed_form", c0.closed_form);
    rep.result("band_ratio", band);
    rep.result("band_ratio_T2", band_ratio(&scaled2));
    Ok(())
}

/// Large-period limit: deviation from the mean frozen speed along increasing periods.
pub fn run_limits_large(cfg: &ExperimentFile, rep: &mut Report) -> Outcome {
    let sys = system(cfg)?;
    if !check_a2(&sys, 1024).holds {
        return Err("pointwise bistability does not hold".into());
    }
    let cs = mean_frozen_speed(&sys, &cfg.quadrature, &cfg.speed).map_err(|e| format!("mean frozen speed: {e}"))?;
    let periods = &cfg.experiment.periods;
    let est = speeds_for(&sys, periods, &cfg.speed)?;
    let mut t = Table::new("limits_large", &["T", "c_T", "ci", "residual_rms", "dev", "T_dev"]);
    let mut devs = Vec::new();
    let mut scaled = Vec::new();
    for (&p, e) in periods.iter().zip(&est) {
        let d = (e.speed - cs.c_star).abs();
        devs.push(d);
        scaled.push(d * p);
        speed_row(&mut t, p, e, &[d, d * p]);
    }
    rep.table(t);
    let mut nodes = Table::new("frozen_nodes", &["s", "weight", "c_s", "ci"]);
    for n in &cs.nodes {
        nodes.push_nums(&[n.s, n.weight, n.speed, n.ci]);
    }
    rep.table(nodes);
    let band = band_ratio(&scaled);
    if sys.is_autonomous() {
        let worst = devs.iter().fold(0.0_f64, |m, d| m.max(*d));
        rep.check(Check::new(
            "constant coefficients: c_T = c*",
            worst <= AUTONOMOUS_NOISE,
            format!("max deviation {worst:.3e}"),
        ));
    } else {
        rep.check(Check::new(
            "T*dev within band",
            band <= cfg.experiment.band,
            format!("max/min = {band:.3} (limit {})", cfg.experiment.band),
        ));
    }
    rep.result("c_star", cs.c_star);
    rep.result("c_star_ci", cs.ci);
    rep.result("c_star_path", cs.path);
    rep.result("band_ratio", band);
    Ok(())
}

/// Opposite limits, then one small and one large period with opposite signs.
pub fn run_sign_change(cfg: &ExperimentFile, rep: &mut Report) -> Outcome {
    let sys = system(cfg)?;
    if !matches_example_family(&sys) {
        return Err("sign-change needs the step example family".into());
    }
    let tol = cfg.experiment.tol;
    let c0 = exact_speed(sys.r2.mean()).map_err(|e| e.to_string())?;
    let mut exact = cfg.quadrature;
    exact.force_pde = false;
    let cs = mean_frozen_speed(&sys, &exact, &cfg.speed).map_err(|e| e.to_string())?;
    rep.check(Check::new("c0 > 0", c0 > 0.0, format!("c0 = {c0:.10}")));
    rep.check(Check::new("c* < 0", cs.c_star < 0.0, format!("c* = {:.10}", cs.c_star)));
    let (t1, t2) = (cfg.experiment.periods[0], cfg.experiment.periods[1]);
    let est = speeds_for(&sys, &[t1, t2], &cfg.speed)?;
    let classes: Vec<SignClass> = est.iter().map(|e| sign_classify(e.speed, e.ci, tol)).collect();
    let mut t = Table::new("sign_change", &["T", "c_T", "ci", "residual_rms", "class"]);
    for (p, (e, c)) in [t1, t2].iter().zip(est.iter().zip(&classes)) {
        t.push(vec![
            num(*p),
            num(e.speed),
            num(e.ci),
            num(e.residual_rms),
            class_name(*c).into(),
        ]);
    }
    rep.table(t);
    for (p, e, c, want) in [
        (t1, &est[0], classes[0], SignClass::Positive),
        (t2, &est[1], classes[1], SignClass::Negative),
    ] {
        rep.check(Check::new(
            format!("T = {p} classified {}", class_name(want)),
            c == want,
            format!("c_T = {:.6} +- {:.2e}: {}", e.speed, e.ci, class_name(c)),
        ));
    }
    let opposite = matches!(
        (classes[0], classes[1]),
        (SignClass::Positive, SignClass::Negative) | (SignClass::Negative, SignClass::Positive)
    );
    rep.result("c0_formula", c0);
    rep.result("c_star_formula", cs.c_star);
    rep.result("opposite_signs", opposite);
    Ok(())
}

const SAME: f64 = 1e-12;

fn same_fn(f: &crate::periodic_fn::PeriodicFn, g: &crate::periodic_fn::PeriodicFn, pts: &[f64]) -> bool {
    pts.iter().all(|&s| (f.value(s) - g.value(s)).abs() <= SAME)
}

/// Rejects a case whose hypotheses fail; returns whether strict sign is predicted.
pub fn validate_sign_case(case: &SignCase, sys: &SystemConfig) -> Result<bool, String> {
    let pts = sys.sample_points(1024);
    if !(same_fn(&sys.d1, &sys.d2, &pts) && same_fn(&sys.a1, &sys.a2, &pts)) {
        return Err(format!("case {}: needs d1 = d2 and a1 = a2", case.name));
    }
    let model = PeriodicSystem::new(sys, steps_for_period(sys.period)).map_err(|e| e.to_string())?;
    let lam = lambdas(&model).all();
    if lam.iter().any(|&l| l <= 0.0) {
        return Err(format!("case {}: boundary states not strongly stable, lambdas {lam:?}", case.name));
    }
    let at: Vec<_> = pts.iter().map(|&s| sys.at(s)).collect();
    let holds = |f: &dyn Fn(&crate::periodic_fn::Coeffs) -> bool| at.iter().all(f);
    let ok = match case.kind {
        CaseKind::I => holds(&|c| c.k[0] <= c.k[1] + SAME && c.r[0] >= c.r[1] - SAME),
        CaseKind::Ii => holds(&|c| c.k[0] >= c.k[1] - SAME && c.r[0] <= c.r[1] + SAME),
        CaseKind::Symmetric => holds(&|c| (c.k[0] - c.k[1]).abs() <= SAME && (c.r[0] - c.r[1]).abs() <= SAME),
    };
    if !ok {
        return Err(format!("case {}: coefficient ordering of kind {:?} fails", case.name, case.kind));
    }
    let strict = at.iter().any(|c| (c.r[0] / c.k[0] - c.r[1] / c.k[1]).abs() > 1e-9);
    Ok(strict)
}

fn expected(kind: CaseKind, strict: bool) -> &'static [SignClass] {
    match (kind, strict) {
        (CaseKind::I, true) => &[SignClass::Positive],
        (CaseKind::I, false) => &[SignClass::Positive, SignClass::Zero],
        (CaseKind::Ii, true) => &[SignClass::Negative],
        (CaseKind::Ii, false) => &[SignClass::Negative, SignClass::Zero],
        (CaseKind::Symmetric, _) => &[SignClass::Zero],
    }
}

/// Sign of `c_T` under ordered coefficients, and the swap antisymmetry.
pub fn run_sign_criteria(cfg: &ExperimentFile, rep: &mut Report) -> Outcome {
    let tol = cfg.experiment.tol;
    let mut jobs = Vec::new();
    for case in &cfg.cases {
        let sys = case.system.resolve().map_err(|e| e.to_string())?;
        let strict = validate_sign_case(case, &sys)?;
        jobs.push((case, sys, strict));
    }
    let runs: Vec<Result<(SpeedEstimate, Option<SpeedEstimate>), String>> = jobs
        .par_iter()
        .map(|(case, sys, _)| {
            let fail = |e: crate::wavespeed::SpeedError| format!("case {}: {e}", case.name);
            let e = measure_speed(sys, &cfg.speed).map_err(fail)?;
            let sw = if case.swap {
                Some(measure_speed(&sys.swapped(), &cfg.speed).map_err(fail)?)
            } else {
                None
            };
            Ok((e, sw))
        })
        .collect();
    let mut t = Table::new("sign_criteria", &["case", "kind", "T", "c_T", "ci", "class", "expected"]);
    let mut out = Vec::new();
    for ((case, sys, strict), run) in jobs.iter().zip(runs) {
        let (e, sw) = run?;
        let class = sign_classify(e.speed, e.ci, tol);
        let want = expected(case.kind, *strict);
        let want_s = want.iter().map(|c| class_name(*c)).collect::<Vec<_>>().join("|");
        t.push(vec![
            case.name.clone(),
            format!("{:?}", case.kind).to_lowercase(),
            num(sys.period),
            num(e.speed),
            num(e.ci),
            class_name(class).into(),
            want_s.clone(),
        ]);
        rep.check(Check::new(
            format!("{}: sign", case.name),
            want.contains(&class),
            format!("c_T = {:.6} +- {:.2e}: {} (expected {want_s})", e.speed, e.ci, class_name(class)),
        ));
        if case.kind == CaseKind::Symmetric {
            rep.check(Check::new(
                format!("{}: |c_T| <= tol", case.name),
                e.speed.abs() <= tol,
                format!("|c_T| = {:.3e}", e.speed.abs()),
            ));
        }
        if let Some(s) = &sw {
            let gap = (e.speed + s.speed).abs();
            let allowed = 2.0 * e.ci.max(s.ci) + SAME;
            t.push(vec![
                format!("{}-swapped", case.name),
                "swapped".into(),
                num(sys.period),
                num(s.speed),
                num(s.ci),
                class_name(sign_classify(s.speed, s.ci, tol)).into(),
                String::new(),
            ]);
            rep.check(Check::new(
                format!("{}: swap negates speed", case.name),
                gap <= allowed,
                format!("|c + c_swapped| = {gap:.3e}, allowed {allowed:.3e}"),
            ));
        }
        out.push(json!({"case": case.name, "strict": strict, "speed": e.speed, "ci": e.ci,
            "swapped": sw.as_ref().map(|s| s.speed)}));
    }
    rep.table(t);
    rep.result("cases", out);
    Ok(())
}

/// Eigenfunction identities, the long-period decay barrier, and the
/// residual of a converged wave and of its barriers.
pub fn run_residual_check(cfg: &ExperimentFile, rep: &mut Report) -> Outcome {
    let sys = system(cfg)?;
    let tol = cfg.experiment.tol;
    let model = PeriodicSystem::new(&sys, kinetic_m(cfg, sys.period)).map_err(|e| e.to_string())?;
    let lam = lambdas(&model);
    let mu = choose_mu(&lam).map_err(|e| e.to_string())?;
    let eig = normalized_eigenfunctions(&model, mu).map_err(|e| e.to_string())?;
    let mut worst_ode: f64 = 0.0;
    for i in 0..2 {
        for side in [Side::Minus, Side::Plus] {
            worst_ode = worst_ode.max(eig.get(i, side).ode_residual(&model));
        }
    }
    let ids = eig.identities(&model);
    let targets = [1.0, 1.0, 0.25 * mu, 0.25 * mu];
    let worst_id = ids.iter().zip(targets).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    rep.check(Check::new("eigenfunction ODE residual", worst_ode <= 1e-8, format!("{worst_ode:.3e}")));
    rep.check(Check::new(
        "normalization identities",
        worst_id <= 1e-8,
        format!("{} against [1, 1, mu/4, mu/4], mu = {mu:.6}", sci(&ids)),
    ));
    let mut tab = Table::new("eigenfunctions", &["t", "psi1_minus", "psi2_minus", "psi1_plus", "psi2_plus"]);
    let m = eig.plus[0].m();
    for j in 0..=m {
        let t = sys.period * j as f64 / m as f64;
        tab.push_nums(&[t, eig.minus[0].values[j], eig.minus[1].values[j], eig.plus[0].values[j], eig.plus[1].values[j]]);
    }
    rep.table(tab);
    if check_a2(&sys, 1024).holds {
        let b = large_period_barrier(&sys, cfg.experiment.eps).map_err(|e| e.to_string())?;
        let margin = barrier_margin(&b, &model, 2.0 * sys.period, 20_000);
        rep.check(Check::new(
            "decay barrier is a strict super-solution",
            margin.iter().all(|&x| x > 1e-6),
            format!("min relative residual {}", sci(&margin)),
        ));
        rep.result("decay_barrier", b);
    }
    let w = capture_wave_residual(&model, &cfg.speed, cfg.experiment.eps, cfg.experiment.barrier_k, tol).map_err(|e| e.to_string())?;
    rep.check(Check::new(
        "converged wave residual ~ 0",
        w.wave.pass && w.wave.sub_pass,
        format!("min {}, max {}, truncation {:.2e}", sci(&w.wave.min), sci(&w.wave.max), w.wave.truncation),
    ));
    rep.check(Check::new(
        "wave super-barrier",
        w.super_barrier.pass,
        format!("min residual {}", sci(&w.super_barrier.min)),
    ));
    rep.check(Check::new(
        "wave sub-barrier",
        w.sub_barrier.sub_pass,
        format!("max residual {}", sci(&w.sub_barrier.max)),
    ));
    rep.result("mu", mu);
    rep.result("lambdas", json!({"minus": lam.minus, "plus": lam.plus}));
    rep.result("wave", &w);
    Ok(())
}
