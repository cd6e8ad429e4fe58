//! Real polynomials in ascending-power form and their complex roots.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tol::{MAX_DEGREE, ROOT_CLUSTER_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,
    #[error("numerator is the zero polynomial")]
    ZeroNumerator,
    #[error("improper transfer function: numerator degree {num} exceeds denominator degree {den}")]
    ImproperTransferFunction { num: usize, den: usize },
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
    #[error("degree {0} exceeds the supported maximum of {MAX_DEGREE}")]
    DegreeTooLarge(usize),
    #[error("cannot extract roots of a zero or constant polynomial")]
    DegenerateInput,
    #[error("frequency {omega} rad/s coincides with a pole")]
    EvaluationAtPole { omega: f64 },
    #[error("imaginary-axis pole at {location} has multiplicity {multiplicity}")]
    RepeatedAxisPole {
        location: Complex64,
        multiplicity: usize,
    },
}

/// Polynomial with real coefficients stored lowest power first.
///
/// Trailing (highest-power) zeros are trimmed, so the zero polynomial has no
/// coefficients at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Polynomial {
    type Error = PolyError;

    fn try_from(coeffs: Vec<f64>) -> Result<Self, Self::Error> {
        Polynomial::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

/// A distinct root together with how many times it repeats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootCluster {
    pub location: Complex64,
    pub multiplicity: usize,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self, PolyError> {
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(PolyError::NonFinite { index });
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.len() > MAX_DEGREE + 1 {
            return Err(PolyError::DegreeTooLarge(coeffs.len() - 1));
        }
        Ok(Self { coeffs })
    }

    /// Builds without validation; callers guarantee finite coefficients.
    pub(crate) fn from_raw(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_raw(vec![c])
    }

    /// Monic polynomial with the given roots. Complex roots must come in
    /// conjugate pairs for the result to be real; the imaginary residue is
    /// dropped.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, c) in acc.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            acc = next;
        }
        Self::from_raw(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Sum of absolute coefficient values.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        Self::from_raw(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self::from_raw(self.coeffs.iter().map(|c| c * alpha).collect())
    }

    /// Multiplies by `s^k`.
    pub fn shifted(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![0.0; k];
        coeffs.extend_from_slice(&self.coeffs);
        Self { coeffs }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::from_raw(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let out = (0..n)
            .map(|i| {
                self.coeffs.get(i).copied().unwrap_or(0.0)
                    - other.coeffs.get(i).copied().unwrap_or(0.0)
            })
            .collect();
        Self::from_raw(out)
    }

    /// Number of exact zero roots (lowest-order zero coefficients).
    pub fn origin_multiplicity(&self) -> usize {
        self.coeffs.iter().take_while(|&&c| c == 0.0).count()
    }

    /// Divides out `s^k`; the caller guarantees `k <= origin_multiplicity()`.
    pub(crate) fn unshifted(&self, k: usize) -> Self {
        Self::from_raw(self.coeffs[k..].to_vec())
    }

    /// Removes one factor `(s - r)` for a real root, or the real quadratic
    /// `(s - r)(s - conj r)` for a complex one. The remainder is discarded.
    pub(crate) fn deflate(&self, root: Complex64, treat_as_real: bool) -> Self {
        if treat_as_real {
            synthetic_division(&self.coeffs, &[-root.re, 1.0])
        } else {
            synthetic_division(&self.coeffs, &[root.norm_sqr(), -2.0 * root.re, 1.0])
        }
    }

    /// All roots repeated according to multiplicity.
    ///
    /// Exact zero roots are split off first; the remainder goes through the
    /// eigenvalues of the companion matrix. Eigenvalues closer than the
    /// clustering tolerance are merged and replaced by their centroid, which
    /// is far more accurate than the individual eigenvalues of a multiple
    /// root. Isolated roots get a guarded Newton polish.
    pub fn roots(&self) -> Result<Vec<Complex64>, PolyError> {
        let degree = match self.degree() {
            None | Some(0) => return Err(PolyError::DegenerateInput),
            Some(d) => d,
        };
        let k = self.origin_multiplicity();
        let mut roots = vec![Complex64::new(0.0, 0.0); k];
        let rest = &self.coeffs[k..];
        let n = degree - k;
        if n == 0 {
            return Ok(roots);
        }
        let lead = rest[n];
        if n == 1 {
            roots.push(Complex64::new(-rest[0] / lead, 0.0));
            return Ok(roots);
        }
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            companion[(i, n - 1)] = -rest[i] / lead;
        }
        let reduced = Polynomial::from_raw(rest.to_vec());
        let deriv = reduced.derivative();
        let raw: Vec<Complex64> = companion.complex_eigenvalues().iter().copied().collect();
        for c in cluster_roots(&raw) {
            if c.multiplicity == 1 {
                roots.push(polish(&reduced, &deriv, c.location));
            } else {
                roots.extend(std::iter::repeat_n(c.location, c.multiplicity));
            }
        }
        Ok(roots)
    }

    /// Distinct roots with multiplicities.
    pub fn root_clusters(&self) -> Result<Vec<RootCluster>, PolyError> {
        Ok(cluster_roots(&self.roots()?))
    }
}

fn polish(p: &Polynomial, dp: &Polynomial, mut z: Complex64) -> Complex64 {
    let mut fz = p.eval_complex(z).norm();
    for _ in 0..8 {
        let d = dp.eval_complex(z);
        if d.norm() == 0.0 {
            break;
        }
        let candidate = z - p.eval_complex(z) / d;
        let fc = p.eval_complex(candidate).norm();
        if !(fc < fz) {
            break;
        }
        z = candidate;
        fz = fc;
    }
    z
}

pub(crate) fn cluster_roots(roots: &[Complex64]) -> Vec<RootCluster> {
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![roots[i]];
        // Grow transitively so that a spread-out multiple root ends up in one cluster.
        let mut grew = true;
        while grew {
            grew = false;
            for j in 0..roots.len() {
                if used[j] {
                    continue;
                }
                let close = members
                    .iter()
                    .any(|m| (roots[j] - m).norm() <= ROOT_CLUSTER_TOL * m.norm().max(1.0));
                if close {
                    used[j] = true;
                    members.push(roots[j]);
                    grew = true;
                }
            }
        }
        let centroid = members.iter().sum::<Complex64>() / members.len() as f64;
        out.push(RootCluster {
            location: centroid,
            multiplicity: members.len(),
        });
    }
    out
}

fn synthetic_division(coeffs: &[f64], divisor: &[f64]) -> Polynomial {
    let dn = divisor.len() - 1;
    if coeffs.len() <= dn {
        return Polynomial::zero();
    }
    let mut rem = coeffs.to_vec();
    let qn = coeffs.len() - dn;
    let mut q = vec![0.0; qn];
    let lead = divisor[dn];
    for i in (0..qn).rev() {
        let c = rem[i + dn] / lead;
        q[i] = c;
        for (j, d) in divisor.iter().enumerate() {
            rem[i + j] -= c * d;
        }
    }
    Polynomial::from_raw(q)
}
