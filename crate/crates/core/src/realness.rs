//! Positive-realness grading of rational transfer functions.
//!
//! The classifier works on the imaginary axis only. For a rational `g` with
//! no poles in the open right half-plane, `Re g` is harmonic there, so by the
//! maximum (minimum) principle its infimum over `Re s >= 0` is attained on the
//! boundary: the `jw` axis together with the point at infinity. Stability
//! plus a boundary sweep is therefore equivalent to the half-plane condition,
//! and the sweep is what gets implemented.
//!
//! Grades, weakest to strongest:
//!
//! * `PR`:   (at most critically) stable, simple axis poles with real
//!   nonnegative residues, relative degree 0 or 1, `Re g(jw) >= 0`.
//! * `WSPR`: strictly stable, `Re g(jw) > 0` for finite `w`, and
//!   `w^2 Re g(jw) -> d0 > 0`.
//! * `SSPR`: strictly stable, relative degree 0, `Re g(jw) >= d > 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::PolyError;
use crate::ratfun::{RationalFunction, StabilityClass};
use crate::tol::{POLE_EXCLUSION, TOL_AXIS, TOL_MARGIN};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RealnessError {
    #[error("grid frequency {omega} rad/s lands on a pole")]
    PoleOnGrid { omega: f64 },
    #[error("precondition failed: {0}")]
    PreconditionNotPR(String),
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Grade {
    #[serde(rename = "NotPR")]
    NotPr,
    #[serde(rename = "PR")]
    Pr,
    #[serde(rename = "WSPR")]
    Wspr,
    #[serde(rename = "SSPR")]
    Sspr,
}

impl Grade {
    pub fn as_str(self) -> &'static str {
        match self {
            Grade::NotPr => "NotPR",
            Grade::Pr => "PR",
            Grade::Wspr => "WSPR",
            Grade::Sspr => "SSPR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "NotPR" => Some(Grade::NotPr),
            "PR" => Some(Grade::Pr),
            "WSPR" => Some(Grade::Wspr),
            "SSPR" => Some(Grade::Sspr),
            _ => None,
        }
    }
}

impl std::fmt::Display for Grade {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Logarithmically spaced sweep `[omega_min, omega_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    omega_min: f64,
    omega_max: f64,
    points: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self {
            omega_min: 1e-4,
            omega_max: 1e6,
            points: 4096,
        }
    }
}

impl FrequencyGrid {
    pub const MIN_POINTS: usize = 64;

    pub fn new(omega_min: f64, omega_max: f64, points: usize) -> Result<Self, RealnessError> {
        if !(omega_min > 0.0) || !omega_min.is_finite() {
            return Err(RealnessError::InvalidGrid(format!(
                "omega_min must be positive, got {omega_min}"
            )));
        }
        if !(omega_max > omega_min) || !omega_max.is_finite() {
            return Err(RealnessError::InvalidGrid(format!(
                "omega_max ({omega_max}) must exceed omega_min ({omega_min})"
            )));
        }
        if points < Self::MIN_POINTS {
            return Err(RealnessError::InvalidGrid(format!(
                "at least {} points required, got {points}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self {
            omega_min,
            omega_max,
            points,
        })
    }

    pub fn with_points(self, points: usize) -> Result<Self, RealnessError> {
        Self::new(self.omega_min, self.omega_max, points)
    }

    pub fn omega_min(&self) -> f64 {
        self.omega_min
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn omegas(&self) -> Vec<f64> {
        let (a, b) = (self.omega_min.ln(), self.omega_max.ln());
        let n = self.points - 1;
        (0..self.points)
            .map(|i| {
                if i == n {
                    self.omega_max
                } else {
                    (a + (b - a) * i as f64 / n as f64).exp()
                }
            })
            .collect()
    }
}

/// Frequency response sampled on a grid, minus the neighbourhoods of
/// imaginary-axis poles.
struct Sweep {
    omegas: Vec<f64>,
    values: Vec<Complex64>,
}

fn axis_pole_frequencies(g: &RationalFunction) -> Vec<f64> {
    g.poles()
        .iter()
        .filter(|p| p.location.re.abs() <= TOL_AXIS)
        .map(|p| p.location.im.abs())
        .collect()
}

fn sweep(g: &RationalFunction, grid: &FrequencyGrid) -> Result<Sweep, RealnessError> {
    let excluded = axis_pole_frequencies(g);
    let mut omegas = Vec::with_capacity(grid.points());
    let mut values = Vec::with_capacity(grid.points());
    for w in grid.omegas() {
        if excluded.iter().any(|p| (w - p).abs() <= POLE_EXCLUSION) {
            continue;
        }
        let v = g.freq_response(w).map_err(|e| match e {
            PolyError::EvaluationAtPole { omega } => RealnessError::PoleOnGrid { omega },
            _ => RealnessError::PoleOnGrid { omega: w },
        })?;
        omegas.push(w);
        values.push(v);
    }
    Ok(Sweep { omegas, values })
}

/// `Re g(0)`, unless the origin is a pole.
fn dc_real_part(g: &RationalFunction) -> Option<f64> {
    g.freq_response(0.0).ok().map(|v| v.re)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// Infimum of `Re g(jw)` over `w >= 0`: the grid minimum refined by a
/// golden-section search on its bracket, `w = 0`, and the limit at infinity.
/// Negative frequencies are redundant because `Re g` is even in `w`.
pub fn real_part_margin(g: &RationalFunction, grid: &FrequencyGrid) -> Result<f64, RealnessError> {
    let sw = sweep(g, grid)?;
    let mut best = g.feedthrough();
    if let Some(r0) = dc_real_part(g) {
        best = best.min(r0);
    }
    if let Some((i, v)) = sw
        .values
        .iter()
        .map(|v| v.re)
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
    {
        best = best.min(v);
        let lo = sw.omegas[i.saturating_sub(1)].ln();
        let hi = sw.omegas[(i + 1).min(sw.omegas.len() - 1)].ln();
        if hi > lo {
            let refined = golden_min(
                |x| {
                    g.freq_response(x.exp())
                        .map(|z| z.re)
                        .unwrap_or(f64::INFINITY)
                },
                lo,
                hi,
            );
            best = best.min(refined);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrClassification {
    pub grade: Grade,
    /// `inf Re g(jw)`, clamped at zero.
    pub d: f64,
    /// `lim w^2 Re g(jw)` for strictly proper functions, clamped at zero.
    pub d0: f64,
    /// Margin `d` of `s g(s)` when `g` has a single pole at the origin.
    pub d1: f64,
    pub single_pole_at_origin: bool,
    pub g1_grade: Option<Grade>,
    pub diagnostics: Vec<String>,
}

impl PrClassification {
    fn not_pr(diagnostics: Vec<String>) -> Self {
        Self {
            grade: Grade::NotPr,
            d: 0.0,
            d0: 0.0,
            d1: 0.0,
            single_pole_at_origin: false,
            g1_grade: None,
            diagnostics,
        }
    }
}

/// Grades `g` by the decision procedure in the module docs. Failed checks
/// are listed in `diagnostics`.
pub fn classify_pr(g: &RationalFunction, grid: &FrequencyGrid) -> PrClassification {
    let mut diag = Vec::new();

    let stability = g.stability_class();
    if stability == StabilityClass::Unstable {
        let worst = g
            .poles()
            .iter()
            .filter(|p| {
                p.location.re > TOL_AXIS || (p.location.re.abs() <= TOL_AXIS && p.multiplicity > 1)
            })
            .map(|p| format!("{} (multiplicity {})", p.location, p.multiplicity))
            .collect::<Vec<_>>()
            .join(", ");
        diag.push(format!(
            "unstable: right half-plane or repeated axis poles {worst}"
        ));
        return PrClassification::not_pr(diag);
    }

    match g.imaginary_axis_residues() {
        Err(e) => {
            diag.push(e.to_string());
            return PrClassification::not_pr(diag);
        }
        Ok(axis) => {
            for p in axis {
                let r = p.residue.unwrap_or_default();
                let real = r.im.abs() <= TOL_MARGIN * r.norm().max(1.0);
                if !real || r.re < -TOL_MARGIN {
                    diag.push(format!(
                        "axis pole {} has residue {} (must be real and nonnegative)",
                        p.location, r
                    ));
                }
            }
            if !diag.is_empty() {
                return PrClassification::not_pr(diag);
            }
        }
    }

    let rel = g.relative_degree();
    if rel > 1 {
        diag.push(format!("relative degree {rel} exceeds 1"));
        return PrClassification::not_pr(diag);
    }

    let sw = match sweep(g, grid) {
        Ok(sw) => sw,
        Err(e) => {
            diag.push(e.to_string());
            return PrClassification::not_pr(diag);
        }
    };
    let margin = match real_part_margin(g, grid) {
        Ok(m) => m,
        Err(e) => {
            diag.push(e.to_string());
            return PrClassification::not_pr(diag);
        }
    };
    let curvature = g.high_frequency_curvature();
    let d0 = curvature.unwrap_or(0.0).max(0.0);

    if stability == StabilityClass::StrictlyStable && rel == 0 && margin > TOL_MARGIN {
        return PrClassification {
            grade: Grade::Sspr,
            d: margin,
            d0: 0.0,
            d1: 0.0,
            single_pole_at_origin: false,
            g1_grade: None,
            diagnostics: diag,
        };
    }

    if stability == StabilityClass::StrictlyStable && rel == 1 {
        // (1 + w^2) Re g(jw) is continuous on [0, inf] with limit d0, so a
        // positive minimum is exactly "Re g > 0 for finite w and d0 > 0".
        let scaled_min = sw
            .omegas
            .iter()
            .zip(&sw.values)
            .map(|(w, v)| (1.0 + w * w) * v.re)
            .chain(dc_real_part(g))
            .fold(f64::INFINITY, f64::min);
        let limit = curvature.unwrap_or(0.0);
        if scaled_min > TOL_MARGIN && limit > TOL_MARGIN {
            let top_decade = grid.omega_max() / 10.0;
            let tail_min = sw
                .omegas
                .iter()
                .zip(&sw.values)
                .filter(|(w, _)| **w >= top_decade)
                .map(|(w, v)| w * w * v.re)
                .fold(f64::INFINITY, f64::min);
            if tail_min.is_finite() && (tail_min - limit).abs() > 1e-3 * limit {
                diag.push(format!(
                    "top-decade w^2 Re g = {tail_min} has not settled on the limit {limit}"
                ));
            }
            return PrClassification {
                grade: Grade::Wspr,
                d: margin.max(0.0),
                d0: limit,
                d1: 0.0,
                single_pole_at_origin: false,
                g1_grade: None,
                diagnostics: diag,
            };
        }
        if limit <= TOL_MARGIN {
            diag.push(format!(
                "w^2 Re g(jw) tends to {limit}, not to a positive d0"
            ));
        }
    }

    if margin < -TOL_MARGIN {
        diag.push(format!("Re g(jw) reaches {margin} < 0"));
        return PrClassification::not_pr(diag);
    }

    if stability == StabilityClass::CriticallyStable {
        diag.push("critically stable: strict grades need strictly stable poles".into());
    } else if rel == 0 {
        diag.push(format!("margin d = {margin} is not positive"));
    }

    let single_pole_at_origin = g.origin_pole_multiplicity() == 1;
    let (g1_grade, d1) = if single_pole_at_origin {
        match g.times_s() {
            Ok(g1) => {
                let c1 = classify_pr(&g1, grid);
                (Some(c1.grade), c1.d)
            }
            Err(e) => {
                diag.push(format!("s*g(s) is not admissible: {e}"));
                (Some(Grade::NotPr), 0.0)
            }
        }
    } else {
        (None, 0.0)
    };

    PrClassification {
        grade: Grade::Pr,
        d: margin.max(0.0),
        d0,
        d1,
        single_pole_at_origin,
        g1_grade,
        diagnostics: diag,
    }
}

/// Largest `|arg g(jw)|` over the grid, in degrees. The phase is unwrapped
/// along each contiguous stretch of the sweep, so relative degrees above one
/// show up as deviations past 180 degrees rather than wrapping around.
pub fn phase_deviation(g: &RationalFunction, grid: &FrequencyGrid) -> Result<f64, RealnessError> {
    let sw = sweep(g, grid)?;
    let excluded = axis_pole_frequencies(g);
    let mut worst: f64 = 0.0;
    let mut prev: Option<(f64, f64)> =
        dc_real_part(g).and_then(|_| g.freq_response(0.0).ok().map(|v| (0.0, v.arg())));
    if let Some((_, p)) = prev {
        worst = p.abs();
    }
    for (w, v) in sw.omegas.iter().zip(&sw.values) {
        let raw = v.arg();
        let phase = match prev {
            Some((pw, pp)) if !excluded.iter().any(|p| *p > pw && *p < *w) => {
                let mut delta = raw - pp;
                delta -= (delta / std::f64::consts::TAU).round() * std::f64::consts::TAU;
                pp + delta
            }
            _ => raw,
        };
        worst = worst.max(phase.abs());
        prev = Some((*w, phase));
    }
    Ok(worst.to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tangency {
    None,
    Finite { omega: f64 },
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantReport {
    /// `Re g(jw) >= 0` on the whole sweep.
    pub confined: bool,
    pub first_violation: Option<f64>,
    /// Where the hodograph first touches the imaginary axis.
    pub tangency: Tangency,
    pub never_tangent: bool,
}

/// First/third-quadrant confinement of the hodograph. For `w >= 0` that is
/// `Re g >= 0`; the mirror image for `w < 0` follows from conjugate symmetry.
/// Finite-frequency tangency is tested on `(1 + w^2) Re g` so that the
/// natural `1/w^2` roll-off of a strictly proper function is not mistaken
/// for touching the axis.
pub fn hodograph_quadrant_check(
    g: &RationalFunction,
    grid: &FrequencyGrid,
) -> Result<QuadrantReport, RealnessError> {
    let sw = sweep(g, grid)?;
    let points = g
        .freq_response(0.0)
        .ok()
        .map(|v| (0.0, v))
        .into_iter()
        .chain(sw.omegas.iter().copied().zip(sw.values.iter().copied()));
    let mut first_violation = None;
    let mut tangency = Tangency::None;
    for (w, v) in points {
        if v.re < -TOL_MARGIN && first_violation.is_none() {
            first_violation = Some(w);
        }
        if tangency == Tangency::None && ((1.0 + w * w) * v.re).abs() <= TOL_MARGIN {
            tangency = Tangency::Finite { omega: w };
        }
    }
    if tangency == Tangency::None && g.feedthrough() <= TOL_MARGIN {
        tangency = Tangency::Infinite;
    }
    let confined = first_violation.is_none();
    Ok(QuadrantReport {
        confined,
        first_violation,
        tangency,
        never_tangent: confined && tangency == Tangency::None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CrossRelation {
    /// `Re g(jw) = Im g1(jw) / w`
    RealOfG,
    /// `Re g1(jw) = -w Im g(jw)`
    RealOfG1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SignCondition {
    /// `Im g(jw) <= 0`
    ImagOfG,
    /// `Im g1(jw) <= 0`
    ImagOfG1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationViolation {
    pub omega: f64,
    pub relation: CrossRelation,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignViolation {
    pub omega: f64,
    pub condition: SignCondition,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRelationReport {
    pub points: usize,
    pub max_residual_real_g: f64,
    pub max_residual_real_g1: f64,
    pub relation_violations: Vec<RelationViolation>,
    pub sign_violations: Vec<SignViolation>,
}

const CROSS_REL_TOL: f64 = 1e-9;

/// Checks the real/imaginary cross relations between `g` and `g1 = s g`
/// for a PR function with a single pole at the origin, plus the two sign
/// conditions `Im g <= 0` and `Im g1 <= 0` for `w > 0`. `g1` is evaluated
/// from its own cancelled coefficients, not from `g`.
pub fn spc_cross_relations(
    g: &RationalFunction,
    grid: &FrequencyGrid,
) -> Result<CrossRelationReport, RealnessError> {
    let class = classify_pr(g, grid);
    if class.grade == Grade::NotPr {
        return Err(RealnessError::PreconditionNotPR(format!(
            "g is not positive real: {}",
            class.diagnostics.join("; ")
        )));
    }
    if !class.single_pole_at_origin {
        return Err(RealnessError::PreconditionNotPR(
            "g does not have a single simple pole at the origin".into(),
        ));
    }
    let g1 = g
        .times_s()
        .map_err(|e| RealnessError::PreconditionNotPR(format!("s*g(s): {e}")))?;
    let sw = sweep(g, grid)?;
    let mut report = CrossRelationReport {
        points: sw.omegas.len(),
        max_residual_real_g: 0.0,
        max_residual_real_g1: 0.0,
        relation_violations: Vec::new(),
        sign_violations: Vec::new(),
    };
    let rel = |a: f64, b: f64| {
        let s = a.abs().max(b.abs());
        if s == 0.0 {
            0.0
        } else {
            (a - b).abs() / s
        }
    };
    for (&w, &gv) in sw.omegas.iter().zip(&sw.values) {
        let g1v = g1
            .freq_response(w)
            .map_err(|_| RealnessError::PoleOnGrid { omega: w })?;
        let roundoff = 8.0 * f64::EPSILON * (gv.norm() + g1v.norm() / w);
        let pairs = [
            (CrossRelation::RealOfG, gv.re, g1v.im / w),
            (CrossRelation::RealOfG1, g1v.re / w, -gv.im),
        ];
        for (relation, lhs, rhs) in pairs {
            let r = rel(lhs, rhs);
            match relation {
                CrossRelation::RealOfG => {
                    report.max_residual_real_g = report.max_residual_real_g.max(r)
                }
                CrossRelation::RealOfG1 => {
                    report.max_residual_real_g1 = report.max_residual_real_g1.max(r)
                }
            }
            if (lhs - rhs).abs() > CROSS_REL_TOL * lhs.abs().max(rhs.abs()) + roundoff {
                let (lhs, rhs) = match relation {
                    CrossRelation::RealOfG => (lhs, rhs),
                    CrossRelation::RealOfG1 => (lhs * w, rhs * w),
                };
                report.relation_violations.push(RelationViolation {
                    omega: w,
                    relation,
                    lhs,
                    rhs,
                });
            }
        }
        for (condition, value, scale) in [
            (SignCondition::ImagOfG, gv.im, gv.norm()),
            (SignCondition::ImagOfG1, g1v.im, g1v.norm()),
        ] {
            if value > TOL_MARGIN * scale.max(1.0) {
                report.sign_violations.push(SignViolation {
                    omega: w,
                    condition,
                    value,
                });
            }
        }
    }
    Ok(report)
}

/// Everything the `classify` command reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealnessReport {
    pub grade: Grade,
    pub d: f64,
    pub d0: f64,
    pub d1: f64,
    pub single_pole_at_origin: bool,
    pub g1_grade: Option<Grade>,
    pub phase_deviation_deg: Option<f64>,
    pub quadrant_ok: Option<bool>,
    pub diagnostics: Vec<String>,
}

pub fn realness_report(g: &RationalFunction, grid: &FrequencyGrid) -> RealnessReport {
    let c = classify_pr(g, grid);
    RealnessReport {
        grade: c.grade,
        d: c.d,
        d0: c.d0,
        d1: c.d1,
        single_pole_at_origin: c.single_pole_at_origin,
        g1_grade: c.g1_grade,
        phase_deviation_deg: phase_deviation(g, grid).ok(),
        quadrant_ok: hodograph_quadrant_check(g, grid).ok().map(|q| q.confined),
        diagnostics: c.diagnostics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(num: &[f64], den: &[f64]) -> RationalFunction {
        RationalFunction::new(num, den).unwrap()
    }

    fn grid() -> FrequencyGrid {
        FrequencyGrid::default()
    }

    #[test]
    fn grid_validation() {
        assert!(FrequencyGrid::new(0.0, 1.0, 100).is_err());
        assert!(FrequencyGrid::new(1.0, 1.0, 100).is_err());
        assert!(FrequencyGrid::new(1.0, 10.0, 63).is_err());
        let g = FrequencyGrid::new(1.0, 100.0, 64).unwrap();
        let w = g.omegas();
        assert_eq!(w.len(), 64);
        assert_eq!(w[0], 1.0);
        assert_eq!(w[63], 100.0);
    }

    #[test]
    fn margin_examples() {
        assert_eq!(real_part_margin(&tf(&[1.0], &[1.0]), &grid()).unwrap(), 1.0);
        // Re (jw+2)/(jw+1) = (w^2+2)/(w^2+1): infimum 1 at infinity
        let d = real_part_margin(&tf(&[2.0, 1.0], &[1.0, 1.0]), &grid()).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        // Re (jw-1)/(jw+1) = (w^2-1)/(w^2+1): -1 at w = 0
        let d = real_part_margin(&tf(&[-1.0, 1.0], &[1.0, 1.0]), &grid()).unwrap();
        assert!((d + 1.0).abs() < 1e-12);
    }

    #[test]
    fn margin_refines_interior_minimum() {
        // Re of (s^2+2s+2)/(s^2+3s+2) is 1 - 3x/(x^2+5x+4), x = w^2;
        // minimized at x = 2 with value 2/3.
        let d = real_part_margin(&tf(&[2.0, 2.0, 1.0], &[2.0, 3.0, 1.0]), &grid()).unwrap();
        assert!((d - 2.0 / 3.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn classify_examples() {
        let c = classify_pr(&tf(&[2.0, 1.0], &[1.0, 1.0]), &grid());
        assert_eq!(c.grade, Grade::Sspr);
        assert!((c.d - 1.0).abs() < 1e-12);

        let c = classify_pr(&tf(&[1.0], &[1.0, 1.0]), &grid());
        assert_eq!(c.grade, Grade::Wspr);
        assert_eq!(c.d, 0.0);
        assert_eq!(c.d0, 1.0);

        let c = classify_pr(&tf(&[1.0], &[0.0, 1.0]), &grid());
        assert_eq!(c.grade, Grade::Pr);
        assert!(c.single_pole_at_origin);
        assert_eq!(c.g1_grade, Some(Grade::Sspr));
        assert_eq!(c.d1, 1.0);

        let c = classify_pr(&tf(&[1.0], &[-1.0, 1.0]), &grid());
        assert_eq!(c.grade, Grade::NotPr);
        assert!(!c.diagnostics.is_empty());

        let c = classify_pr(&tf(&[-1.0, 1.0], &[1.0, 1.0]), &grid());
        assert_eq!(c.grade, Grade::NotPr);
        assert!(c.diagnostics.iter().any(|d| d.contains("Re g")));
    }

    #[test]
    fn residue_sign_decides() {
        let c = classify_pr(&tf(&[-1.0], &[0.0, 1.0]), &grid());
        assert_eq!(c.grade, Grade::NotPr);
        // Lossless s/(s^2+1): residues 1/2 at +-j
        let c = classify_pr(&tf(&[0.0, 1.0], &[1.0, 0.0, 1.0]), &grid());
        assert_eq!(c.grade, Grade::Pr);
        assert!(!c.single_pole_at_origin);
        // 1/(s^2+1): imaginary residues
        assert_eq!(
            classify_pr(&tf(&[1.0], &[1.0, 0.0, 1.0]), &grid()).grade,
            Grade::NotPr
        );
    }

    #[test]
    fn zero_curvature_limit_is_pr_only() {
        // (s+1)/(s^2+s+1): Re = 1/|den|^2 > 0 but w^2 Re -> 0
        let c = classify_pr(&tf(&[1.0, 1.0], &[1.0, 1.0, 1.0]), &grid());
        assert_eq!(c.grade, Grade::Pr);
        assert!(c.diagnostics.iter().any(|d| d.contains("w^2 Re")));
    }

    #[test]
    fn relative_degree_two_rejected() {
        let c = classify_pr(&tf(&[1.0], &[2.0, 3.0, 1.0]), &grid());
        assert_eq!(c.grade, Grade::NotPr);
    }

    #[test]
    fn phase_examples() {
        assert_eq!(phase_deviation(&tf(&[1.0], &[1.0]), &grid()).unwrap(), 0.0);
        let p = phase_deviation(&tf(&[1.0], &[1.0, 1.0]), &grid()).unwrap();
        assert!(p < 90.0 && p > 89.99, "{p}");
        let p = phase_deviation(&tf(&[1.0], &[1.0, 2.0, 1.0]), &grid()).unwrap();
        assert!(p > 179.9 && p < 180.0, "{p}");
        // third order keeps unwinding past 180
        let p = phase_deviation(&tf(&[1.0], &[1.0, 3.0, 3.0, 1.0]), &grid()).unwrap();
        assert!(p > 269.0, "{p}");
        // lossless: +-90 on either side of the pole, no spurious unwrap
        let p = phase_deviation(&tf(&[0.0, 1.0], &[1.0, 0.0, 1.0]), &grid()).unwrap();
        assert!((p - 90.0).abs() < 1e-6, "{p}");
    }

    #[test]
    fn quadrant_examples() {
        let q = hodograph_quadrant_check(&tf(&[2.0, 1.0], &[1.0, 1.0]), &grid()).unwrap();
        assert!(q.confined && q.never_tangent);
        assert_eq!(q.tangency, Tangency::None);

        let q = hodograph_quadrant_check(&tf(&[1.0], &[1.0, 1.0]), &grid()).unwrap();
        assert!(q.confined && !q.never_tangent);
        assert_eq!(q.tangency, Tangency::Infinite);

        let q = hodograph_quadrant_check(&tf(&[-1.0, 1.0], &[1.0, 1.0]), &grid()).unwrap();
        assert!(!q.confined);
        assert_eq!(q.first_violation, Some(0.0));
    }

    #[test]
    fn cross_relations_integrator() {
        let r = spc_cross_relations(&tf(&[1.0], &[0.0, 1.0]), &grid()).unwrap();
        assert!(r.relation_violations.is_empty());
        assert!(r.sign_violations.is_empty());
        assert_eq!(r.max_residual_real_g, 0.0);
    }

    #[test]
    fn cross_relations_by_hand_at_unit_frequency() {
        // g = (s+1)/(s(s+2)): g(j) = (1-3j)/5, g1(j) = (3+j)/5
        let g = tf(&[1.0, 1.0], &[0.0, 2.0, 1.0]);
        let gv = g.freq_response(1.0).unwrap();
        let g1v = g.times_s().unwrap().freq_response(1.0).unwrap();
        assert!((gv - Complex64::new(0.2, -0.6)).norm() < 1e-15);
        assert!((g1v - Complex64::new(0.6, 0.2)).norm() < 1e-15);
        let r = spc_cross_relations(&g, &grid()).unwrap();
        assert!(
            r.relation_violations.is_empty(),
            "{:?}",
            &r.relation_violations[..1]
        );
        // Im g1 = w Re g > 0, so the stated Im g1 <= 0 condition fails everywhere.
        assert!(r
            .sign_violations
            .iter()
            .all(|v| v.condition == SignCondition::ImagOfG1));
        assert_eq!(r.sign_violations.len(), r.points);
    }

    #[test]
    fn cross_relations_precondition() {
        assert!(matches!(
            spc_cross_relations(&tf(&[1.0], &[1.0, 1.0]), &grid()),
            Err(RealnessError::PreconditionNotPR(_))
        ));
    }

    #[test]
    fn report_serializes_expected_fields() {
        let r = realness_report(&tf(&[2.0, 1.0], &[1.0, 1.0]), &grid());
        let v = serde_json::to_value(&r).unwrap();
        for key in [
            "grade",
            "d",
            "d0",
            "d1",
            "single_pole_at_origin",
            "g1_grade",
            "phase_deviation_deg",
            "quadrant_ok",
            "diagnostics",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["grade"], "SSPR");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn coarse() -> FrequencyGrid {
            FrequencyGrid::new(1e-3, 1e4, 256).unwrap()
        }

        fn first_order_lead_lag() -> impl Strategy<Value = RationalFunction> {
            // (s + z)/(s + p) with z, p > 0 is SSPR with d = min(1, z/p).
            (0.1f64..10.0, 0.1f64..10.0).prop_filter_map("distinct", |(z, p)| {
                ((z - p).abs() > 1e-3).then(|| RationalFunction::new(&[z, 1.0], &[p, 1.0]).unwrap())
            })
        }

        proptest! {
            #[test]
            fn sspr_inverse_closure(g in first_order_lead_lag()) {
                prop_assert_eq!(classify_pr(&g, &coarse()).grade, Grade::Sspr);
                prop_assert_eq!(classify_pr(&g.inverse().unwrap(), &coarse()).grade, Grade::Sspr);
            }

            #[test]
            fn positive_scaling(g in first_order_lead_lag(), alpha in 0.01f64..100.0) {
                let a = classify_pr(&g, &coarse());
                let b = classify_pr(&g.scaled(alpha).unwrap(), &coarse());
                prop_assert_eq!(a.grade, b.grade);
                prop_assert!((b.d - alpha * a.d).abs() <= 1e-9 * (alpha * a.d).max(1.0));
            }

            #[test]
            fn pr_or_better_has_bounded_phase(
                poles in proptest::collection::vec(0.1f64..10.0, 1..4),
                k in 0.1f64..5.0,
                shift in 0.0f64..3.0,
            ) {
                // Partial-fraction sums of k/(s+p) with positive k are PR; adding a
                // nonnegative constant keeps them PR.
                let mut g = RationalFunction::constant(shift);
                for p in poles {
                    let term = RationalFunction::new(&[k], &[p, 1.0]).unwrap();
                    let num = g.num().mul(term.den()).sub(&term.num().mul(g.den()).scaled(-1.0));
                    g = RationalFunction::from_polys(num, g.den().mul(term.den())).unwrap();
                }
                let c = classify_pr(&g, &coarse());
                prop_assert!(c.grade >= Grade::Pr, "{:?}", c);
                prop_assert!(phase_deviation(&g, &coarse()).unwrap() <= 90.0 + 1e-9);
                prop_assert!(c.grade != Grade::Sspr || g.relative_degree() == 0);
            }
        }
    }
}
