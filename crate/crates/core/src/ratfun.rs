//! Proper rational transfer functions `g(s) = num(s) / den(s)`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::poly::{PolyError, Polynomial, RootCluster};
use crate::tol::{ROOT_MATCH_TOL, TOL_AXIS};

/// Coprime, proper, real-coefficient rational function with a monic
/// denominator. Poles and zeros are computed once at construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawTransferFunction", into = "RawTransferFunction")]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
    poles: Vec<RootCluster>,
    zeros: Vec<RootCluster>,
}

/// Exact coefficient equality; poles and zeros follow from the coefficients.
impl PartialEq for RationalFunction {
    fn eq(&self, other: &Self) -> bool {
        self.num == other.num && self.den == other.den
    }
}

/// Wire form: ascending-power coefficient arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawTransferFunction {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl TryFrom<RawTransferFunction> for RationalFunction {
    type Error = PolyError;

    fn try_from(raw: RawTransferFunction) -> Result<Self, Self::Error> {
        RationalFunction::new(&raw.num, &raw.den)
    }
}

impl From<RationalFunction> for RawTransferFunction {
    fn from(g: RationalFunction) -> Self {
        RawTransferFunction {
            num: g.num.coeffs().to_vec(),
            den: g.den.coeffs().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityClass {
    StrictlyStable,
    CriticallyStable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleInfo {
    pub location: Complex64,
    pub multiplicity: usize,
    /// `num(p) / den'(p)`; only defined for simple poles.
    pub residue: Option<Complex64>,
}

impl RationalFunction {
    /// Builds `num/den` from ascending-power coefficients, cancelling common
    /// factors and normalizing the denominator to be monic.
    pub fn new(num: &[f64], den: &[f64]) -> Result<Self, PolyError> {
        Self::from_polys(
            Polynomial::new(num.to_vec())?,
            Polynomial::new(den.to_vec())?,
        )
    }

    pub fn from_polys(num: Polynomial, den: Polynomial) -> Result<Self, PolyError> {
        if den.is_zero() {
            return Err(PolyError::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(Self {
                num,
                den: Polynomial::constant(1.0),
                poles: Vec::new(),
                zeros: Vec::new(),
            });
        }
        let (dn, dd) = (num.degree().unwrap_or(0), den.degree().unwrap_or(0));
        if dn > dd {
            return Err(PolyError::ImproperTransferFunction { num: dn, den: dd });
        }
        let (num, den) = cancel_common_factors(num, den)?;
        let lead = den.leading();
        let num = num.scaled(1.0 / lead);
        let mut den_coeffs = den.scaled(1.0 / lead).coeffs().to_vec();
        if let Some(last) = den_coeffs.last_mut() {
            *last = 1.0;
        }
        let den = Polynomial::from_raw(den_coeffs);
        let poles = clusters_or_empty(&den)?;
        let zeros = clusters_or_empty(&num)?;
        Ok(Self {
            num,
            den,
            poles,
            zeros,
        })
    }

    /// The constant function `k`.
    pub fn constant(k: f64) -> Self {
        Self::new(&[k], &[1.0]).expect("constant transfer function")
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn poles(&self) -> &[RootCluster] {
        &self.poles
    }

    pub fn zeros(&self) -> &[RootCluster] {
        &self.zeros
    }

    pub fn order(&self) -> usize {
        self.den.degree().unwrap_or(0)
    }

    pub fn relative_degree(&self) -> usize {
        match self.num.degree() {
            None => 0,
            Some(dn) => self.order() - dn,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Leading-coefficient ratio: `g(s) -> feedthrough()` as `|s| -> inf`.
    pub fn feedthrough(&self) -> f64 {
        if self.relative_degree() == 0 {
            self.num.leading()
        } else {
            0.0
        }
    }

    fn axis_pole_hit(&self, omega: f64) -> bool {
        self.poles.iter().any(|p| {
            p.location.re.abs() <= TOL_AXIS
                && (p.location.im - omega).abs() <= TOL_AXIS * omega.abs().max(1.0)
        })
    }

    /// `g(jw)`.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64, PolyError> {
        if self.axis_pole_hit(omega) {
            return Err(PolyError::EvaluationAtPole { omega });
        }
        let s = Complex64::new(0.0, omega);
        let d = self.den.eval_complex(s);
        if d.norm() == 0.0 {
            return Err(PolyError::EvaluationAtPole { omega });
        }
        Ok(self.num.eval_complex(s) / d)
    }

    /// Evaluates at an arbitrary complex point.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    pub fn stability_class(&self) -> StabilityClass {
        let mut on_axis = false;
        for p in &self.poles {
            if p.location.re > TOL_AXIS {
                return StabilityClass::Unstable;
            }
            if p.location.re.abs() <= TOL_AXIS {
                if p.multiplicity > 1 {
                    return StabilityClass::Unstable;
                }
                on_axis = true;
            }
        }
        if on_axis {
            StabilityClass::CriticallyStable
        } else {
            StabilityClass::StrictlyStable
        }
    }

    pub fn pole_info(&self) -> Vec<PoleInfo> {
        let dden = self.den.derivative();
        self.poles
            .iter()
            .map(|p| PoleInfo {
                location: p.location,
                multiplicity: p.multiplicity,
                residue: (p.multiplicity == 1)
                    .then(|| self.num.eval_complex(p.location) / dden.eval_complex(p.location)),
            })
            .collect()
    }

    /// Residues at every pole with `|Re p| <= TOL_AXIS`.
    pub fn imaginary_axis_residues(&self) -> Result<Vec<PoleInfo>, PolyError> {
        let mut out = Vec::new();
        for info in self.pole_info() {
            if info.location.re.abs() > TOL_AXIS {
                continue;
            }
            if info.multiplicity > 1 {
                return Err(PolyError::RepeatedAxisPole {
                    location: info.location,
                    multiplicity: info.multiplicity,
                });
            }
            out.push(info);
        }
        Ok(out)
    }

    /// Number of poles at the origin (counted with multiplicity).
    pub fn origin_pole_multiplicity(&self) -> usize {
        self.poles
            .iter()
            .filter(|p| p.location.norm() <= TOL_AXIS)
            .map(|p| p.multiplicity)
            .sum()
    }

    /// `s * g(s)`.
    pub fn times_s(&self) -> Result<Self, PolyError> {
        Self::from_polys(self.num.shifted(1), self.den.clone())
    }

    /// `g(s) / s`.
    pub fn divide_by_s(&self) -> Result<Self, PolyError> {
        Self::from_polys(self.num.clone(), self.den.shifted(1))
    }

    /// `1 / g(s)`.
    pub fn inverse(&self) -> Result<Self, PolyError> {
        if self.num.is_zero() {
            return Err(PolyError::ZeroNumerator);
        }
        Self::from_polys(self.den.clone(), self.num.clone())
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self, PolyError> {
        Self::from_polys(self.num.scaled(alpha), self.den.clone())
    }

    /// Leading coefficients `c_0, c_1, ...` of the expansion
    /// `g(s) = sum_k c_k s^-k` about `s = inf`.
    pub fn expansion_at_infinity(&self, terms: usize) -> Vec<f64> {
        let mut out = vec![0.0; terms];
        if self.num.is_zero() {
            return out;
        }
        let r = self.relative_degree();
        let b: Vec<f64> = self.num.coeffs().iter().rev().copied().collect();
        let a: Vec<f64> = self.den.coeffs().iter().rev().copied().collect();
        let mut q: Vec<f64> = Vec::with_capacity(terms);
        for i in 0..terms.saturating_sub(r) {
            let mut acc = b.get(i).copied().unwrap_or(0.0);
            for j in 1..=i.min(a.len() - 1) {
                acc -= a[j] * q[i - j];
            }
            q.push(acc / a[0]);
        }
        for (k, v) in q.into_iter().enumerate() {
            out[k + r] = v;
        }
        out
    }

    /// `lim w^2 Re g(jw)` as `w -> inf` for a strictly proper function, from
    /// the `s^-2` coefficient of the expansion at infinity. Relative degree
    /// zero has no finite limit and yields `None`.
    pub fn high_frequency_curvature(&self) -> Option<f64> {
        if self.relative_degree() == 0 && !self.is_zero() {
            return None;
        }
        Some(-self.expansion_at_infinity(3)[2])
    }

    /// Coefficient-wise comparison after normalization.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        fn close(a: &Polynomial, b: &Polynomial, tol: f64) -> bool {
            a.coeffs().len() == b.coeffs().len()
                && a.coeffs()
                    .iter()
                    .zip(b.coeffs())
                    .all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
        }
        close(&self.num, &other.num, tol) && close(&self.den, &other.den, tol)
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} / {:?}", self.num.coeffs(), self.den.coeffs())
    }
}

fn clusters_or_empty(p: &Polynomial) -> Result<Vec<RootCluster>, PolyError> {
    match p.degree() {
        None | Some(0) => Ok(Vec::new()),
        Some(_) => p.root_clusters(),
    }
}

fn cancel_common_factors(
    num: Polynomial,
    den: Polynomial,
) -> Result<(Polynomial, Polynomial), PolyError> {
    let k = num.origin_multiplicity().min(den.origin_multiplicity());
    let mut num = num.unshifted(k);
    let mut den = den.unshifted(k);
    if num.degree().unwrap_or(0) == 0 || den.degree().unwrap_or(0) == 0 {
        return Ok((num, den));
    }
    let zn = num.root_clusters()?;
    let zd = den.root_clusters()?;
    for cn in &zn {
        let scale = cn.location.norm().max(1.0);
        let is_real = cn.location.im.abs() <= ROOT_MATCH_TOL * scale;
        if !is_real && cn.location.im < 0.0 {
            continue;
        }
        let Some(cd) = zd
            .iter()
            .find(|cd| (cd.location - cn.location).norm() <= ROOT_MATCH_TOL * scale)
        else {
            continue;
        };
        let shared = (cn.location + cd.location) / 2.0;
        for _ in 0..cn.multiplicity.min(cd.multiplicity) {
            num = num.deflate(shared, is_real);
            den = den.deflate(shared, is_real);
        }
    }
    Ok((num, den))
}
