//! Feedback devices `F: y -> v` for the loop `u = e - F(y)`, with their
//! declared and measured Popov status.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{energy_trace, Signal, SignalError};
use crate::taxonomy::popov_audit;

/// Measured `gamma0^2` above this contradicts a zero-gamma declaration.
pub const POPOV_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeedbackError {
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),
    #[error("device declared {declared:?} but measured gamma0^2 = {measured}")]
    DeclarationViolated {
        declared: DeclaredPopov,
        measured: f64,
    },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Slope `k(y)` of a sector device, evaluated on `|y|` and clamped to the
/// sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape")]
pub enum Slope {
    Constant {
        value: f64,
    },
    /// `k(y) = sum c_i |y|^i`.
    EvenPolynomial {
        coeffs: Vec<f64>,
    },
    /// Output magnitude capped at `limit`: `k(y) = min(k2, limit / |y|)`.
    Saturation {
        limit: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum DeviceSpec {
    StaticSector {
        k1: f64,
        k2: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slope: Option<Slope>,
    },
    CubicOddPower {
        p: u32,
    },
    TimeVaryingGain {
        /// `k(j dt)`, linearly interpolated and held after the last sample.
        samples: Vec<f64>,
        dt: f64,
    },
    Relay {
        amplitude: f64,
    },
    /// Drives `v = -rate` on `[start, end)` whatever the input.
    RegenerativePulse {
        start: f64,
        #[serde(default)]
        end: Option<f64>,
        rate: f64,
    },
    DeadzoneSector {
        k1: f64,
        k2: f64,
        deadzone: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slope: Option<Slope>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeclaredPopov {
    AlwaysPopovWithZeroGamma,
    PopovWithFiniteGamma,
    MayViolate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevicePopovStatus {
    pub declared: DeclaredPopov,
    pub measured_gamma0_sq: f64,
    /// For a regenerative pulse that opposes a positive or negative output
    /// throughout its interval: whether `<v,y>` dropped during injection.
    pub injection_energy_negative: Option<bool>,
}

/// Reserved for devices with memory; all current kinds are static.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeviceState;

fn finite(name: &str, x: f64) -> Result<(), FeedbackError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(FeedbackError::InvalidParams(format!(
            "{name} must be finite"
        )))
    }
}

fn check_sector(k1: f64, k2: f64, slope: &Option<Slope>) -> Result<(), FeedbackError> {
    finite("k1", k1)?;
    finite("k2", k2)?;
    if !(0.0 <= k1 && k1 <= k2) {
        return Err(FeedbackError::InvalidParams(format!(
            "sector needs 0 <= k1 <= k2, got k1 = {k1}, k2 = {k2}"
        )));
    }
    match slope {
        Some(Slope::Constant { value }) => finite("slope value", *value),
        Some(Slope::EvenPolynomial { coeffs }) => {
            if coeffs.iter().all(|c| c.is_finite()) {
                Ok(())
            } else {
                Err(FeedbackError::InvalidParams(
                    "slope coefficients must be finite".into(),
                ))
            }
        }
        Some(Slope::Saturation { limit }) => {
            finite("saturation limit", *limit)?;
            if *limit < 0.0 {
                return Err(FeedbackError::InvalidParams(
                    "saturation limit must be >= 0".into(),
                ));
            }
            Ok(())
        }
        None => Ok(()),
    }
}

fn sector_gain(k1: f64, k2: f64, slope: &Option<Slope>, y: f64) -> f64 {
    let a = y.abs();
    let k = match slope {
        None => 0.5 * (k1 + k2),
        Some(Slope::Constant { value }) => *value,
        Some(Slope::EvenPolynomial { coeffs }) => {
            coeffs.iter().rev().fold(0.0, |acc, c| acc * a + c)
        }
        Some(Slope::Saturation { limit }) => {
            if a * k2 <= *limit {
                k2
            } else {
                limit / a
            }
        }
    };
    k.clamp(k1, k2)
}

impl DeviceSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            DeviceSpec::StaticSector { .. } => "StaticSector",
            DeviceSpec::CubicOddPower { .. } => "CubicOddPower",
            DeviceSpec::TimeVaryingGain { .. } => "TimeVaryingGain",
            DeviceSpec::Relay { .. } => "Relay",
            DeviceSpec::RegenerativePulse { .. } => "RegenerativePulse",
            DeviceSpec::DeadzoneSector { .. } => "DeadzoneSector",
        }
    }

    pub fn validate(&self) -> Result<(), FeedbackError> {
        match self {
            DeviceSpec::StaticSector { k1, k2, slope } => check_sector(*k1, *k2, slope),
            DeviceSpec::DeadzoneSector {
                k1,
                k2,
                deadzone,
                slope,
            } => {
                check_sector(*k1, *k2, slope)?;
                finite("deadzone", *deadzone)?;
                if *deadzone < 0.0 {
                    return Err(FeedbackError::InvalidParams("deadzone must be >= 0".into()));
                }
                Ok(())
            }
            DeviceSpec::CubicOddPower { p } => {
                if *p % 2 == 1 {
                    Ok(())
                } else {
                    Err(FeedbackError::InvalidParams(format!(
                        "exponent must be odd and >= 1, got {p}"
                    )))
                }
            }
            DeviceSpec::TimeVaryingGain { samples, dt } => {
                if !(*dt > 0.0) || !dt.is_finite() {
                    return Err(FeedbackError::InvalidParams(
                        "gain sample step must be positive".into(),
                    ));
                }
                if samples.is_empty() {
                    return Err(FeedbackError::InvalidParams(
                        "gain needs at least one sample".into(),
                    ));
                }
                if samples.iter().any(|k| !k.is_finite() || *k < 0.0) {
                    return Err(FeedbackError::InvalidParams(
                        "gain samples must be finite and >= 0".into(),
                    ));
                }
                Ok(())
            }
            DeviceSpec::Relay { amplitude } => {
                finite("amplitude", *amplitude)?;
                if *amplitude < 0.0 {
                    return Err(FeedbackError::InvalidParams(
                        "relay amplitude must be >= 0".into(),
                    ));
                }
                Ok(())
            }
            DeviceSpec::RegenerativePulse { start, end, rate } => {
                finite("start", *start)?;
                finite("rate", *rate)?;
                if let Some(end) = end {
                    finite("end", *end)?;
                    if end < start {
                        return Err(FeedbackError::InvalidParams(
                            "pulse must end after it starts".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// Device output; assumes [`DeviceSpec::validate`] passed.
    pub fn eval(&self, y: f64, t: f64) -> f64 {
        match self {
            DeviceSpec::StaticSector { k1, k2, slope } => sector_gain(*k1, *k2, slope, y) * y,
            DeviceSpec::CubicOddPower { p } => y.powi(*p as i32),
            DeviceSpec::TimeVaryingGain { samples, dt } => {
                let x = (t / dt).max(0.0);
                let k = x.floor() as usize;
                let gain = if k + 1 >= samples.len() {
                    samples[samples.len() - 1]
                } else {
                    let frac = x - k as f64;
                    samples[k] + frac * (samples[k + 1] - samples[k])
                };
                gain * y
            }
            DeviceSpec::Relay { amplitude } => {
                if y > 0.0 {
                    *amplitude
                } else if y < 0.0 {
                    -amplitude
                } else {
                    0.0
                }
            }
            DeviceSpec::RegenerativePulse { start, end, rate } => {
                let active = t >= *start && end.is_none_or(|e| t < e);
                if active {
                    -rate
                } else {
                    0.0
                }
            }
            DeviceSpec::DeadzoneSector {
                k1,
                k2,
                deadzone,
                slope,
            } => {
                if y.abs() <= *deadzone {
                    0.0
                } else {
                    sector_gain(*k1, *k2, slope, y) * (y - deadzone.copysign(y))
                }
            }
        }
    }

    pub fn declared_popov(&self) -> DeclaredPopov {
        match self {
            DeviceSpec::RegenerativePulse { end: Some(_), .. } => {
                DeclaredPopov::PopovWithFiniteGamma
            }
            DeviceSpec::RegenerativePulse {
                end: None, rate, ..
            } if *rate != 0.0 => DeclaredPopov::MayViolate,
            DeviceSpec::RegenerativePulse { .. } => DeclaredPopov::AlwaysPopovWithZeroGamma,
            _ => DeclaredPopov::AlwaysPopovWithZeroGamma,
        }
    }

    /// Whether `v(t) y(t) >= 0` holds pointwise by construction.
    pub fn is_quadrant(&self) -> bool {
        !matches!(self, DeviceSpec::RegenerativePulse { .. })
    }
}

pub fn apply_device(
    spec: &DeviceSpec,
    y: f64,
    t: f64,
    state: DeviceState,
) -> Result<(f64, DeviceState), FeedbackError> {
    spec.validate()?;
    Ok((spec.eval(y, t), state))
}

pub fn device_popov_audit(
    spec: &DeviceSpec,
    v: &Signal,
    y: &Signal,
) -> Result<DevicePopovStatus, FeedbackError> {
    let audit = popov_audit(v, y)?;
    let declared = spec.declared_popov();
    if declared == DeclaredPopov::AlwaysPopovWithZeroGamma && audit.gamma0_sq > POPOV_TOL {
        return Err(FeedbackError::DeclarationViolated {
            declared,
            measured: audit.gamma0_sq,
        });
    }
    let injection_energy_negative = match spec {
        DeviceSpec::RegenerativePulse { start, end, rate } if *rate != 0.0 => {
            injection_check(v, y, *start, end.unwrap_or(f64::INFINITY), *rate)?
        }
        _ => None,
    };
    Ok(DevicePopovStatus {
        declared,
        measured_gamma0_sq: audit.gamma0_sq,
        injection_energy_negative,
    })
}

/// On the grid points inside the pulse, checks that `<v,y>` has dropped
/// below its value at the pulse start whenever the pulse opposes `y`
/// (`v y < 0` at every point of the interval).
fn injection_check(
    v: &Signal,
    y: &Signal,
    start: f64,
    end: f64,
    rate: f64,
) -> Result<Option<bool>, SignalError> {
    let e = energy_trace(v, y)?;
    let inside: Vec<usize> = (0..y.len())
        .filter(|&k| {
            let t = y.time(k);
            t >= start && t < end
        })
        .collect();
    let (Some(&first), Some(&last)) = (inside.first(), inside.last()) else {
        return Ok(None);
    };
    let opposes = inside.iter().all(|&k| -rate * y.values()[k] < 0.0);
    if !opposes || last == first {
        return Ok(None);
    }
    let base = e.values()[first];
    Ok(Some(inside[1..].iter().all(|&k| e.values()[k] < base)))
}
