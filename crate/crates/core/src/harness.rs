//! Closed-loop runs `u = e - F(y)` around a realized plant, the energy bound
//! chains for each realness grade, and the convergence verdict.
//!
//! The chains compare the supplied energy against lower bounds built from
//! the input. They hold for a plant started at rest, so they are evaluated
//! on the zero-state leg: `y_zs` is the plant's response to the recorded
//! input `u` from `x = 0`, and `E_zs(t) = <u, y_zs>_t`. The free response
//! `y - y_zs` is a property of the initial state, not of the operator.
//! Seen from the zero-state plant, the loop closes through `-u`, whose
//! tightest Popov constant on the record is `max(0, sup_t E_zs(t))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feedback::{
    device_popov_audit, DeclaredPopov, DevicePopovStatus, DeviceSpec, FeedbackError,
};
use crate::lti::{realize, simulate_forced_with, Hold, LtiError};
use crate::ratfun::RationalFunction;
use crate::realness::{classify_pr, FrequencyGrid, Grade, PrClassification};
use crate::signal::{energy_trace, input_integral, EnergyTrace, Signal, SignalError};
use crate::taxonomy::popov_audit;
use crate::tol::OVERFLOW_GUARD;
use crate::trace::{Trace, TraceError};

pub const CONV_TOL: f64 = 1e-3;
pub const BOUND_FACTOR: f64 = 10.0;
/// Fraction of the horizon used for the initial and final windows.
pub const WINDOW_FRACTION: f64 = 0.05;
pub const NEWTON_MAX_ITER: usize = 50;
pub const LOOP_RESIDUAL_TOL: f64 = 1e-12;
/// At most this many violations are stored; all are counted.
pub const MAX_RECORDED_VIOLATIONS: usize = 100;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("algebraic loop did not converge at step {step} (residual {residual:e})")]
    AlgebraicLoopNoConvergence { step: usize, residual: f64 },
    #[error("no bound chain for grade {grade}: {reason}")]
    GradeUnsupported { grade: Grade, reason: String },
    #[error(transparent)]
    Device(#[from] FeedbackError),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub amplitude: f64,
    pub duration: f64,
}

impl Pulse {
    fn at(&self, t: f64) -> f64 {
        if t < self.duration {
            self.amplitude
        } else {
            0.0
        }
    }
}

fn default_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub plant: RationalFunction,
    pub device: DeviceSpec,
    /// Initial state of the controllable canonical realization; empty means
    /// the origin.
    #[serde(default)]
    pub x0: Vec<f64>,
    #[serde(default)]
    pub excitation: Option<Pulse>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub horizon: f64,
    #[serde(default)]
    pub hold: Hold,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidScenario(msg));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !self.horizon.is_finite() || self.horizon < 100.0 * self.dt {
            return bad(format!("horizon {} must be at least 100 dt", self.horizon));
        }
        let n = self.plant.order();
        if !self.x0.is_empty() && self.x0.len() != n {
            return bad(format!(
                "x0 has {} entries, the plant has order {n}",
                self.x0.len()
            ));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return bad("x0 must be finite".into());
        }
        if let Some(p) = &self.excitation {
            if !p.amplitude.is_finite() || !p.duration.is_finite() || p.duration < 0.0 {
                return bad("excitation needs finite amplitude and nonnegative duration".into());
            }
        }
        let excited = self
            .excitation
            .is_some_and(|p| p.amplitude != 0.0 && p.duration > 0.0);
        let displaced = self.x0.iter().any(|&v| v != 0.0);
        let self_driven =
            matches!(self.device, DeviceSpec::RegenerativePulse { rate, .. } if rate != 0.0);
        if !excited && !displaced && !self_driven {
            return bad(
                "the run would be identically zero: set a nonzero x0 or an excitation".into(),
            );
        }
        self.device.validate()?;
        Ok(())
    }

    fn initial_state(&self) -> Vec<f64> {
        if self.x0.is_empty() {
            vec![0.0; self.plant.order()]
        } else {
            self.x0.clone()
        }
    }

    fn excitation_at(&self, t: f64) -> f64 {
        self.excitation.map_or(0.0, |p| p.at(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    AsymptoticallyHyperstableEvidence,
    HyperstableEvidence,
    Diverged,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::AsymptoticallyHyperstableEvidence => "AsymptoticallyHyperstableEvidence",
            Verdict::HyperstableEvidence => "HyperstableEvidence",
            Verdict::Diverged => "Diverged",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chain {
    /// `gamma0^2 >= E >= d int u^2 > 0` and `E >= d_inv int y^2`.
    Sspr,
    /// `gamma0^2 >= E >= d0 int delta^2` with the plain input integral.
    Wspr,
    /// `E >= d1 int delta_abs |u|` for a single pole at the origin.
    OriginPole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Inequality {
    /// `gamma0^2 >= E(t)`.
    PopovUpper,
    /// `E(t) >= d int u^2`.
    InputLower,
    /// `d int u^2 > 0` for `t > 0`.
    StrictPositivity,
    /// `E(t) >= d_inv int y^2`.
    OutputLower,
    /// `E(t) >= d0 int delta^2`.
    IntegralLower,
    /// `E(t) >= d1 int delta_abs |u|`.
    OriginLower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub inequality: Inequality,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundChainAudit {
    pub chain: Chain,
    /// Loop-level Popov constant, `max(0, sup_t E_zs(t))`.
    pub gamma0_sq: f64,
    /// The device's own constant from `<v, y>`.
    pub device_gamma0_sq: f64,
    pub tol_bound: f64,
    pub d_lower: Option<Vec<f64>>,
    pub d_inv_lower: Option<Vec<f64>>,
    pub d0_lower: Option<Vec<f64>>,
    pub d1_lower: Option<Vec<f64>>,
    pub violations: Vec<Violation>,
    pub violation_count: usize,
}

impl BoundChainAudit {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub scenario: Scenario,
    pub e: Signal,
    pub u: Signal,
    pub y: Signal,
    pub v: Signal,
    /// Plant response to `u` from the zero state.
    pub y_zs: Signal,
    /// `<u, y>_t` on the actual run.
    pub energy: EnergyTrace,
    /// `<u, y_zs>_t`, the energy the chains bound.
    pub energy_zs: EnergyTrace,
    pub classification: PrClassification,
    /// Margin of `1/g` when the plant is SSPR.
    pub inverse_margin: Option<f64>,
    pub device_status: DevicePopovStatus,
    pub bound_audit: Option<BoundChainAudit>,
    pub chain_unsupported: Option<String>,
    pub diverged_at: Option<f64>,
    /// Steps where the loop equation had no root and the output was held on
    /// the device's discontinuity.
    pub sliding_steps: usize,
    pub warnings: Vec<String>,
    pub verdict: Verdict,
}

/// Solves `y = base + gain (e - F(y, t))` for `y` and returns `(y, v)`.
///
/// Newton with a numerical derivative is tried first; when it stalls, a
/// bracket is grown geometrically around the guess and bisected. If the
/// bracket shrinks to a point without the residual vanishing, `F` jumps
/// across the root (a relay at zero); the output then sits on the jump and
/// `v` is whatever keeps the loop equation exact.
fn solve_loop(
    device: &DeviceSpec,
    base: f64,
    gain: f64,
    e: f64,
    t: f64,
    guess: f64,
    step: usize,
) -> Result<(f64, f64, bool), HarnessError> {
    if gain == 0.0 {
        return Ok((base, device.eval(base, t), false));
    }
    let r = |y: f64| y - base - gain * (e - device.eval(y, t));
    let tol = |y: f64| LOOP_RESIDUAL_TOL * (1.0 + y.abs());
    // a root within a hair of a jump in F is the jump itself
    let finish = |y: f64| {
        let spread = |h: f64| (device.eval(y + h, t) - device.eval(y - h, t)).abs();
        let h = 1e-9 * (1.0 + y.abs());
        let (wide, narrow) = (spread(h), spread(h / 1024.0));
        // a continuous F shrinks with the interval, a jump does not
        if gain.abs() * narrow > tol(y) && narrow > 0.5 * wide {
            (y, e - (y - base) / gain, true)
        } else {
            (y, device.eval(y, t), false)
        }
    };

    let mut y = guess;
    let mut ry = r(y);
    for _ in 0..NEWTON_MAX_ITER {
        if !ry.is_finite() {
            break;
        }
        if ry.abs() <= tol(y) {
            return Ok(finish(y));
        }
        let h = 1e-7 * y.abs().max(1.0);
        let slope = (r(y + h) - r(y - h)) / (2.0 * h);
        if !slope.is_finite() || slope == 0.0 {
            break;
        }
        let mut step_len = -ry / slope;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = y + step_len;
            let rc = r(cand);
            if rc.is_finite() && rc.abs() < ry.abs() {
                y = cand;
                ry = rc;
                accepted = true;
                break;
            }
            step_len *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let center = if guess.is_finite() { guess } else { base };
    let mut width = 1e-3 * center.abs().max(1.0);
    let mut bracket = None;
    for _ in 0..400 {
        let (lo, hi) = (center - width, center + width);
        let (rl, rh) = (r(lo), r(hi));
        if rl.is_finite() && rh.is_finite() && rl.signum() != rh.signum() {
            bracket = Some((lo, hi, rl));
            break;
        }
        width *= 2.0;
        if !width.is_finite() {
            break;
        }
    }
    let Some((mut lo, mut hi, mut rl)) = bracket else {
        return Err(HarnessError::AlgebraicLoopNoConvergence {
            step,
            residual: ry.abs(),
        });
    };
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        let rm = r(mid);
        if rm.abs() <= tol(mid) {
            return Ok(finish(mid));
        }
        if mid <= lo || mid >= hi {
            // the residual changes sign across adjacent floats: a jump in F
            let u = (mid - base) / gain;
            return Ok((mid, e - u, true));
        }
        if rm.signum() == rl.signum() {
            lo = mid;
            rl = rm;
        } else {
            hi = mid;
        }
    }
    Err(HarnessError::AlgebraicLoopNoConvergence {
        step,
        residual: r(0.5 * (lo + hi)).abs(),
    })
}

pub fn run_closed_loop(sc: &Scenario) -> Result<SimulationRun, HarnessError> {
    sc.validate()?;
    let ss = realize(&sc.plant);
    let disc = ss.discretize(sc.dt, sc.hold);
    let steps = (sc.horizon / sc.dt).round() as usize;
    let time = |k: usize| k as f64 * sc.dt;

    let mut x = nalgebra::DVector::from_vec(sc.initial_state());
    let mut es = Vec::with_capacity(steps + 1);
    let mut us = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    let mut vs = Vec::with_capacity(steps + 1);
    let mut sliding_steps = 0;
    let mut diverged_at = None;

    let e0 = sc.excitation_at(0.0);
    let base0 = (&ss.c * &x)[0];
    let (y0, v0, slid) = solve_loop(&sc.device, base0, ss.d, e0, 0.0, base0, 0)?;
    sliding_steps += slid as usize;
    es.push(e0);
    us.push(e0 - v0);
    ys.push(y0);
    vs.push(v0);

    for k in 1..=steps {
        let t = time(k);
        let e = sc.excitation_at(t);
        let u_prev = us[k - 1];
        let (base, gain) = disc.next_output_affine(&x, u_prev);
        let (y, v, slid) = solve_loop(&sc.device, base, gain, e, t, ys[k - 1], k)?;
        let u = e - v;
        if ![y, u, v]
            .iter()
            .all(|w| w.is_finite() && w.abs() <= OVERFLOW_GUARD)
        {
            diverged_at = Some(t);
            break;
        }
        sliding_steps += slid as usize;
        x = disc.step(&x, u_prev, u);
        es.push(e);
        us.push(u);
        ys.push(y);
        vs.push(v);
    }
    if ys.len() < 2 {
        return Err(HarnessError::InvalidScenario(
            "the run overflowed on its first step".into(),
        ));
    }

    let e = Signal::new(sc.dt, es)?;
    let u = Signal::new(sc.dt, us)?;
    let y = Signal::new(sc.dt, ys)?;
    let v = Signal::new(sc.dt, vs)?;
    let y_zs = simulate_forced_with(&ss, &u, &vec![0.0; ss.order()], sc.hold)?;
    let energy = energy_trace(&u, &y)?;
    let energy_zs = energy_trace(&u, &y_zs)?;

    let grid = FrequencyGrid::default();
    let classification = classify_pr(&sc.plant, &grid);
    let inverse_margin = (classification.grade == Grade::Sspr)
        .then(|| sc.plant.inverse().ok().map(|gi| classify_pr(&gi, &grid).d))
        .flatten();
    let device_status = device_popov_audit(&sc.device, &v, &y)?;

    let mut warnings = Vec::new();
    if device_status.declared == DeclaredPopov::MayViolate {
        warnings.push(format!(
            "NonPopovDeviceWarning: {} may violate the Popov inequality; hyperstability claims are capped",
            sc.device.kind()
        ));
    }

    let mut run = SimulationRun {
        scenario: sc.clone(),
        e,
        u,
        y,
        v,
        y_zs,
        energy,
        energy_zs,
        classification,
        inverse_margin,
        device_status,
        bound_audit: None,
        chain_unsupported: None,
        diverged_at,
        sliding_steps,
        warnings,
        verdict: Verdict::Inconclusive,
    };
    if diverged_at.is_none() {
        match verify_bound_chain(&run) {
            Ok(audit) => run.bound_audit = Some(audit),
            Err(HarnessError::GradeUnsupported { reason, .. }) => {
                run.chain_unsupported = Some(reason)
            }
            Err(err) => return Err(err),
        }
    } else {
        run.chain_unsupported = Some("run diverged".into());
    }
    run.verdict = convergence_verdict(&run);
    Ok(run)
}

struct Checker {
    tol: f64,
    violations: Vec<Violation>,
    count: usize,
}

impl Checker {
    /// Records a violation of `lhs >= rhs`.
    fn at_least(&mut self, t: f64, inequality: Inequality, lhs: f64, rhs: f64) {
        if lhs < rhs - self.tol {
            self.record(t, inequality, lhs, rhs);
        }
    }

    fn record(&mut self, t: f64, inequality: Inequality, lhs: f64, rhs: f64) {
        self.count += 1;
        if self.violations.len() < MAX_RECORDED_VIOLATIONS {
            self.violations.push(Violation {
                t,
                inequality,
                lhs,
                rhs,
            });
        }
    }
}

fn scaled_running_integral(
    integrand: &[f64],
    dt: f64,
    scale: f64,
) -> Result<Vec<f64>, SignalError> {
    let s = Signal::new(dt, integrand.to_vec())?;
    Ok(input_integral(&s, false)
        .values()
        .iter()
        .map(|v| scale * v)
        .collect())
}

/// Checks the chain that applies to the plant's grade at every grid time,
/// with slack `tol_bound = 1e-6 (1 + |E(T)|)`.
pub fn verify_bound_chain(run: &SimulationRun) -> Result<BoundChainAudit, HarnessError> {
    let c = &run.classification;
    let chain = match c.grade {
        Grade::Sspr => Chain::Sspr,
        Grade::Wspr => Chain::Wspr,
        Grade::Pr if c.single_pole_at_origin && c.g1_grade == Some(Grade::Sspr) => {
            Chain::OriginPole
        }
        grade => {
            let reason = match grade {
                Grade::NotPr => "the plant is not positive real".to_string(),
                _ => "a merely positive real plant needs a single origin pole with s g(s) SSPR"
                    .to_string(),
            };
            return Err(HarnessError::GradeUnsupported { grade, reason });
        }
    };
    if run.diverged_at.is_some() {
        return Err(HarnessError::GradeUnsupported {
            grade: c.grade,
            reason: "run diverged".into(),
        });
    }

    let dt = run.u.dt();
    let energy = run.energy_zs.values();
    let gamma0_sq = popov_audit(&run.u.map(|w| -w), &run.y_zs)?.gamma0_sq;
    let device_gamma0_sq = popov_audit(&run.v, &run.y)?.gamma0_sq;
    let tol = 1e-6 * (1.0 + run.energy_zs.final_value().abs());
    let mut check = Checker {
        tol,
        violations: Vec::new(),
        count: 0,
    };
    let uv = run.u.values();
    let times: Vec<f64> = run.u.times().collect();

    let mut audit = BoundChainAudit {
        chain,
        gamma0_sq,
        device_gamma0_sq,
        tol_bound: tol,
        d_lower: None,
        d_inv_lower: None,
        d0_lower: None,
        d1_lower: None,
        violations: Vec::new(),
        violation_count: 0,
    };

    if matches!(chain, Chain::Sspr | Chain::Wspr) {
        for (k, &t) in times.iter().enumerate() {
            check.at_least(t, Inequality::PopovUpper, gamma0_sq, energy[k]);
        }
    }
    match chain {
        Chain::Sspr => {
            let sq: Vec<f64> = uv.iter().map(|w| w * w).collect();
            let lower = scaled_running_integral(&sq, dt, c.d)?;
            let d_inv = run.inverse_margin.unwrap_or(0.0);
            let ysq: Vec<f64> = run.y_zs.values().iter().map(|w| w * w).collect();
            let out_lower = scaled_running_integral(&ysq, dt, d_inv)?;
            for (k, &t) in times.iter().enumerate() {
                check.at_least(t, Inequality::InputLower, energy[k], lower[k]);
                check.at_least(t, Inequality::OutputLower, energy[k], out_lower[k]);
                if k > 0 && !(lower[k] > 0.0) {
                    check.record(t, Inequality::StrictPositivity, lower[k], 0.0);
                }
            }
            audit.d_lower = Some(lower);
            audit.d_inv_lower = Some(out_lower);
        }
        Chain::Wspr => {
            let delta = input_integral(&run.u, false);
            let sq: Vec<f64> = delta.values().iter().map(|w| w * w).collect();
            let lower = scaled_running_integral(&sq, dt, c.d0)?;
            for (k, &t) in times.iter().enumerate() {
                check.at_least(t, Inequality::IntegralLower, energy[k], lower[k]);
            }
            audit.d0_lower = Some(lower);
        }
        Chain::OriginPole => {
            let delta = input_integral(&run.u, true);
            let integrand: Vec<f64> = delta
                .values()
                .iter()
                .zip(uv)
                .map(|(a, w)| a * w.abs())
                .collect();
            let lower = scaled_running_integral(&integrand, dt, c.d1)?;
            for (k, &t) in times.iter().enumerate() {
                check.at_least(t, Inequality::OriginLower, energy[k], lower[k]);
            }
            audit.d1_lower = Some(lower);
        }
    }
    audit.violations = check.violations;
    audit.violation_count = check.count;
    Ok(audit)
}

/// Peaks of `max(|u|, |y|)` over the first window, the last window and the
/// whole record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peaks {
    pub initial: f64,
    pub last: f64,
    pub overall: f64,
}

pub fn peaks(run: &SimulationRun) -> Peaks {
    let n = run.y.len();
    let window = ((WINDOW_FRACTION * n as f64).ceil() as usize).clamp(1, n);
    let mag = |k: usize| run.u.values()[k].abs().max(run.y.values()[k].abs());
    let max_over = |r: std::ops::Range<usize>| r.map(mag).fold(0.0, f64::max);
    Peaks {
        initial: max_over(0..window),
        last: max_over(n - window..n),
        overall: max_over(0..n),
    }
}

pub fn convergence_verdict(run: &SimulationRun) -> Verdict {
    if run.diverged_at.is_some() {
        return Verdict::Diverged;
    }
    let p = peaks(run);
    if !(p.initial > 0.0) {
        return Verdict::Inconclusive;
    }
    let converged = p.last <= CONV_TOL * p.initial;
    let bounded = p.overall <= BOUND_FACTOR * p.initial;
    let popov_ok = run.device_status.declared != DeclaredPopov::MayViolate;
    let chain_ok = run
        .bound_audit
        .as_ref()
        .is_some_and(BoundChainAudit::passed);
    if !popov_ok {
        Verdict::Inconclusive
    } else if converged && chain_ok {
        Verdict::AsymptoticallyHyperstableEvidence
    } else if bounded && !converged {
        Verdict::HyperstableEvidence
    } else {
        Verdict::Inconclusive
    }
}

/// Least-squares slope of `ln |y|` over the second half of the record.
pub fn growth_rate(y: &Signal) -> Option<f64> {
    let n = y.len();
    let pts: Vec<(f64, f64)> = (n / 2..n)
        .filter(|&k| y.values()[k] != 0.0)
        .map(|k| (y.time(k), y.values()[k].abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (st, sl) = pts.iter().fold((0.0, 0.0), |(a, b), (t, l)| (a + t, b + l));
    let (tm, lm) = (st / m, sl / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (t, l)| {
        (a + (t - tm) * (l - lm), b + (t - tm).powi(2))
    });
    (den > 0.0).then(|| num / den)
}

/// Runs scenarios in parallel; the output order matches the input.
pub fn batch_run(scenarios: &[Scenario]) -> Vec<Result<SimulationRun, HarnessError>> {
    scenarios.par_iter().map(run_closed_loop).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub classification: PrClassification,
    pub inverse_margin: Option<f64>,
    pub chain: Option<Chain>,
    pub chain_unsupported: Option<String>,
    pub gamma0_sq: Option<f64>,
    pub device_gamma0_sq: f64,
    pub device_status: DevicePopovStatus,
    pub tol_bound: Option<f64>,
    pub bound_violations: Vec<Violation>,
    pub violation_count: usize,
    pub verdict: Verdict,
    pub peaks: Peaks,
    pub energy_final: f64,
    pub energy_zs_final: f64,
    pub diverged_at: Option<f64>,
    pub growth_rate: Option<f64>,
    pub sliding_steps: usize,
    pub samples: usize,
    pub warnings: Vec<String>,
}

impl SimulationRun {
    pub fn report(&self) -> RunReport {
        let audit = self.bound_audit.as_ref();
        RunReport {
            name: self.scenario.name.clone(),
            classification: self.classification.clone(),
            inverse_margin: self.inverse_margin,
            chain: audit.map(|a| a.chain),
            chain_unsupported: self.chain_unsupported.clone(),
            gamma0_sq: audit.map(|a| a.gamma0_sq),
            device_gamma0_sq: self.device_status.measured_gamma0_sq,
            device_status: self.device_status,
            tol_bound: audit.map(|a| a.tol_bound),
            bound_violations: audit.map(|a| a.violations.clone()).unwrap_or_default(),
            violation_count: audit.map_or(0, |a| a.violation_count),
            verdict: self.verdict,
            peaks: peaks(self),
            energy_final: self.energy.final_value(),
            energy_zs_final: self.energy_zs.final_value(),
            diverged_at: self.diverged_at,
            growth_rate: growth_rate(&self.y),
            sliding_steps: self.sliding_steps,
            samples: self.y.len(),
            warnings: self.warnings.clone(),
        }
    }

    /// Columns `t,u,y,v,e,y_zs,E,E_zs`.
    pub fn trace(&self) -> Result<Trace, TraceError> {
        Trace::from_signals(&self.u, &self.y)
            .with("v", self.v.values().to_vec())?
            .with("e", self.e.values().to_vec())?
            .with("y_zs", self.y_zs.values().to_vec())?
            .with("E", self.energy.values().to_vec())?
            .with("E_zs", self.energy_zs.values().to_vec())
    }
}
