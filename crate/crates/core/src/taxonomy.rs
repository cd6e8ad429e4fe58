//! Power and energy balance residuals, the passivity taxonomy and the Popov
//! auditor.

use serde::{Deserialize, Serialize};

use crate::signal::{check_grid, energy_trace, inner_product, Signal, SignalError};

/// Tolerance for the sign tests of the taxonomy.
pub const TAXONOMY_TOL: f64 = 1e-9;

/// Isolated grid points allowed to violate a strict inequality. Strictness
/// "except on a set of zero measure" becomes this many non-adjacent samples.
pub const MEASURE_ZERO_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Regenerative,
    Passive,
    StrictlyPassive,
    WeaklyPassive,
    WeaklyStrictlyPassive,
    StronglyStrictlyPassive,
    Conservative,
    PopovSatisfied,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Regenerative => "Regenerative",
            Label::Passive => "Passive",
            Label::StrictlyPassive => "StrictlyPassive",
            Label::WeaklyPassive => "WeaklyPassive",
            Label::WeaklyStrictlyPassive => "WeaklyStrictlyPassive",
            Label::StronglyStrictlyPassive => "StronglyStrictlyPassive",
            Label::Conservative => "Conservative",
            Label::PopovSatisfied => "PopovSatisfied",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyVerdict {
    pub labels: Vec<Label>,
    /// `min_t S(t) - S(0)`, only with a storage record.
    pub beta: Option<f64>,
    /// Coercivity constant `min_t <u,y>_t / <u,u>_t`.
    pub beta_s: Option<f64>,
    pub gamma0_sq: f64,
    /// `max |u y - dS/dt - dD/dt|`, only when both S and D are given.
    pub residual_max: Option<f64>,
}

impl TaxonomyVerdict {
    pub fn has(&self, label: Label) -> bool {
        self.labels.contains(&label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopovAudit {
    pub satisfied: bool,
    pub gamma0_sq: f64,
    /// Always set: a record can only estimate the constant, never prove it
    /// for all time.
    pub finite_horizon_estimate: bool,
}

/// `r(t) = u y - dS/dt - dD/dt`.
pub fn power_balance_residual(
    u: &Signal,
    y: &Signal,
    storage: &Signal,
    dissipation: &Signal,
) -> Result<Signal, SignalError> {
    check_grid(u, y)?;
    check_grid(u, storage)?;
    check_grid(u, dissipation)?;
    let ds = storage.derivative();
    let dd = dissipation.derivative();
    let values = (0..u.len())
        .map(|k| u.values()[k] * y.values()[k] - ds.values()[k] - dd.values()[k])
        .collect();
    Signal::new(u.dt(), values)
}

/// `<u,y>_t - [S(t) + D(t) - S(0) - D(0)]`.
pub fn energy_balance_residual(
    u: &Signal,
    y: &Signal,
    storage: &Signal,
    dissipation: &Signal,
    t: f64,
) -> Result<f64, SignalError> {
    check_grid(u, y)?;
    check_grid(u, storage)?;
    check_grid(u, dissipation)?;
    let supplied = inner_product(u, y, t)?;
    let stored = storage.value_at(t)? - storage.values()[0];
    let lost = dissipation.value_at(t)? - dissipation.values()[0];
    Ok(supplied - stored - lost)
}

fn strictly_positive_almost_everywhere(values: &[f64]) -> bool {
    let failures: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| !(v > 0.0))
        .map(|(k, _)| k)
        .collect();
    failures.len() <= MEASURE_ZERO_POINTS && failures.windows(2).all(|w| w[1] - w[0] > 1)
}

pub fn classify_taxonomy(
    u: &Signal,
    y: &Signal,
    storage: Option<&Signal>,
    dissipation: Option<&Signal>,
) -> Result<TaxonomyVerdict, SignalError> {
    let tol = TAXONOMY_TOL;
    let e = energy_trace(u, y)?;
    let uu = energy_trace(u, u)?;
    for s in storage.into_iter().chain(dissipation) {
        check_grid(u, s)?;
    }

    let mut labels = Vec::new();
    let mut beta = None;

    if let Some(d) = dissipation {
        let dd = d.derivative();
        if dd.values().iter().all(|&v| v < 0.0) {
            labels.push(Label::Regenerative);
        }
        if dd.values().iter().all(|&v| v >= -tol) {
            labels.push(Label::Passive);
            if strictly_positive_almost_everywhere(dd.values()) {
                labels.push(Label::StrictlyPassive);
            }
        }
    }
    if let Some(s) = storage {
        let s0 = s.values()[0];
        beta = Some(s.values().iter().fold(f64::INFINITY, |m, &v| m.min(v)) - s0);
        if s.derivative().values().iter().all(|v| v.abs() <= tol) {
            labels.push(Label::Conservative);
        }
    }

    let weakly = e.values().iter().all(|&v| v >= -tol);
    let weakly_strict = weakly && e.values()[1..].iter().all(|&v| v > 0.0);
    let beta_s = e
        .values()
        .iter()
        .zip(uu.values())
        .filter(|(_, &w)| w > tol)
        .map(|(&v, &w)| v / w)
        .reduce(f64::min);
    if weakly {
        labels.push(Label::WeaklyPassive);
    }
    if weakly_strict {
        labels.push(Label::WeaklyStrictlyPassive);
        if beta_s.is_some_and(|b| b > tol) {
            labels.push(Label::StronglyStrictlyPassive);
        }
    }
    labels.push(Label::PopovSatisfied);
    labels.sort();

    let residual_max = match (storage, dissipation) {
        (Some(s), Some(d)) => Some(power_balance_residual(u, y, s, d)?.max_abs()),
        _ => None,
    };

    Ok(TaxonomyVerdict {
        labels,
        beta,
        beta_s,
        gamma0_sq: (-e.min()).max(0.0),
        residual_max,
    })
}

/// Tightest `gamma0^2` with `<v,y>_t >= -gamma0^2` on every grid time.
pub fn popov_audit(v: &Signal, y: &Signal) -> Result<PopovAudit, SignalError> {
    let e = energy_trace(v, y)?;
    Ok(PopovAudit {
        satisfied: true,
        gamma0_sq: (-e.min()).max(0.0),
        finite_horizon_estimate: true,
    })
}
