//! State-space realization, matrix exponential, impulse and forced responses.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::PolyError;
use crate::ratfun::RationalFunction;
use crate::signal::{check_grid, Signal, SignalError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LtiError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("state vector has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid horizon: T = {horizon}, dt = {dt}")]
    InvalidHorizon { horizon: f64, dt: f64 },
}

/// `x' = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    pub d: f64,
}

/// Controllable canonical form. The denominator of `g` is already monic.
pub fn realize(g: &RationalFunction) -> StateSpace {
    let den = g.den().coeffs();
    let n = den.len() - 1;
    let lead = den[n];
    let num = g.num().coeffs();
    let d = if num.len() == den.len() {
        num[n] / lead
    } else {
        0.0
    };
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = -den[j] / lead;
    }
    let mut b = DVector::zeros(n);
    if n > 0 {
        b[n - 1] = 1.0;
    }
    let c = RowDVector::from_iterator(
        n,
        (0..n).map(|j| (num.get(j).copied().unwrap_or(0.0) - d * den[j]) / lead),
    );
    StateSpace { a, b, c, d }
}

impl StateSpace {
    pub fn order(&self) -> usize {
        self.b.len()
    }

    /// `C (jw I - A)^-1 B + D`.
    pub fn freq_response(&self, omega: f64) -> Complex64 {
        let n = self.order();
        if n == 0 {
            return Complex64::new(self.d, 0.0);
        }
        let jw = Complex64::new(0.0, omega);
        let m = DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { jw } else { Complex64::new(0.0, 0.0) };
            diag - Complex64::new(self.a[(i, j)], 0.0)
        });
        let rhs = self.b.map(|v| Complex64::new(v, 0.0));
        let x = m
            .lu()
            .solve(&rhs)
            .unwrap_or_else(|| DVector::from_element(n, Complex64::new(f64::NAN, f64::NAN)));
        let mut acc = Complex64::new(self.d, 0.0);
        for j in 0..n {
            acc += self.c[j] * x[j];
        }
        acc
    }

    pub fn discretize(&self, dt: f64, hold: Hold) -> Discretization {
        Discretization::new(self, dt, hold)
    }
}

/// Matrix exponential by scaling and squaring with a degree-6 Pade
/// approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    const C: [f64; 7] = [
        1.0,
        1.0 / 2.0,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = a / 2f64.powi(squarings);
    let id = DMatrix::<f64>::identity(n, n);
    let mut power = id.clone();
    let mut even = id.clone() * C[0];
    let mut odd = DMatrix::zeros(n, n);
    for (k, &c) in C.iter().enumerate().skip(1) {
        power = &power * &x;
        if k % 2 == 0 {
            even += &power * c;
        } else {
            odd += &power * c;
        }
    }
    let numer = &even + &odd;
    let denom = &even - &odd;
    let mut r = denom
        .lu()
        .solve(&numer)
        .expect("Pade denominator is nonsingular for a scaled argument");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Input reconstruction between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Hold {
    /// Piecewise-constant input.
    Zoh,
    /// Piecewise-linear input, consistent with trapezoidal energy integrals.
    #[default]
    Foh,
}

/// Exact one-step map for a sampled input:
/// `x+ = Phi x + Gamma0 u_k + Gamma1 (u_{k+1} - u_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub phi: DMatrix<f64>,
    pub gamma0: DVector<f64>,
    pub gamma1: DVector<f64>,
    pub c: RowDVector<f64>,
    pub d: f64,
    pub hold: Hold,
}

impl Discretization {
    fn new(ss: &StateSpace, dt: f64, hold: Hold) -> Self {
        let n = ss.order();
        let mut m = DMatrix::zeros(n + 2, n + 2);
        m.view_mut((0, 0), (n, n)).copy_from(&(&ss.a * dt));
        m.view_mut((0, n), (n, 1)).copy_from(&(&ss.b * dt));
        m[(n, n + 1)] = 1.0;
        let e = expm(&m);
        let phi = e.view((0, 0), (n, n)).into_owned();
        let gamma0 = e.view((0, n), (n, 1)).column(0).into_owned();
        let gamma1 = match hold {
            Hold::Foh => e.view((0, n + 1), (n, 1)).column(0).into_owned(),
            Hold::Zoh => DVector::zeros(n),
        };
        Self {
            phi,
            gamma0,
            gamma1,
            c: ss.c.clone(),
            d: ss.d,
            hold,
        }
    }

    pub fn order(&self) -> usize {
        self.gamma0.len()
    }

    pub fn step(&self, x: &DVector<f64>, u: f64, u_next: f64) -> DVector<f64> {
        &self.phi * x + &self.gamma0 * u + &self.gamma1 * (u_next - u)
    }

    pub fn output(&self, x: &DVector<f64>, u: f64) -> f64 {
        (&self.c * x)[0] + self.d * u
    }

    /// Output at the next sample written as `base + gain * u_next`, which is
    /// what a closed loop needs to solve for `u_next`.
    pub fn next_output_affine(&self, x: &DVector<f64>, u: f64) -> (f64, f64) {
        let free = &self.phi * x + (&self.gamma0 - &self.gamma1) * u;
        let base = (&self.c * free)[0];
        let gain = (&self.c * &self.gamma1)[0] + self.d;
        (base, gain)
    }
}

fn check_state(ss: &StateSpace, x0: &[f64]) -> Result<DVector<f64>, LtiError> {
    if x0.len() != ss.order() {
        return Err(LtiError::DimensionMismatch {
            expected: ss.order(),
            got: x0.len(),
        });
    }
    Ok(DVector::from_column_slice(x0))
}

/// Forced response with a first-order hold on `u`.
pub fn simulate_forced(ss: &StateSpace, u: &Signal, x0: &[f64]) -> Result<Signal, LtiError> {
    simulate_forced_with(ss, u, x0, Hold::Foh)
}

pub fn simulate_forced_with(
    ss: &StateSpace,
    u: &Signal,
    x0: &[f64],
    hold: Hold,
) -> Result<Signal, LtiError> {
    let mut x = check_state(ss, x0)?;
    let disc = ss.discretize(u.dt(), hold);
    let uv = u.values();
    let mut y = Vec::with_capacity(uv.len());
    for k in 0..uv.len() {
        y.push(disc.output(&x, uv[k]));
        if k + 1 < uv.len() {
            x = disc.step(&x, uv[k], uv[k + 1]);
        }
    }
    Ok(Signal::new(u.dt(), y)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    /// Regular part of the impulse response.
    pub g: Signal,
    /// Weight of the Dirac component at `t = 0`.
    pub direct_delta_weight: f64,
}

pub fn impulse_response(
    g: &RationalFunction,
    horizon: f64,
    dt: f64,
) -> Result<ImpulseResponse, LtiError> {
    if !(dt > 0.0) || !(horizon >= dt) || !horizon.is_finite() {
        return Err(LtiError::InvalidHorizon { horizon, dt });
    }
    let ss = realize(g);
    let steps = (horizon / dt).round() as usize;
    let phi = expm(&(&ss.a * dt));
    let mut x = ss.b.clone();
    let mut values = Vec::with_capacity(steps + 1);
    for _ in 0..=steps {
        values.push(if ss.order() == 0 {
            0.0
        } else {
            (&ss.c * &x)[0]
        });
        x = &phi * x;
    }
    Ok(ImpulseResponse {
        g: Signal::new(dt, values)?,
        direct_delta_weight: ss.d,
    })
}

/// `y(t) = int_0^t g(tau) u(t - tau) dtau + D u(t)`, trapezoidal rule.
pub fn convolve(ir: &ImpulseResponse, u: &Signal) -> Result<Signal, LtiError> {
    check_grid(&ir.g, u)?;
    let g = ir.g.values();
    let uv = u.values();
    let dt = u.dt();
    let y = (0..uv.len())
        .map(|k| {
            let mut acc = 0.0;
            if k > 0 {
                acc = 0.5 * (g[0] * uv[k] + g[k] * uv[0]);
                for j in 1..k {
                    acc += g[j] * uv[k - j];
                }
            }
            acc * dt + ir.direct_delta_weight * uv[k]
        })
        .collect();
    Ok(Signal::new(dt, y)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImpulseSign {
    StrictlyPositive,
    Nonnegative,
    SignChanging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub sign: ImpulseSign,
    pub max_abs: f64,
    /// `|g(T)|` is below a thousandth of the peak.
    pub decays: bool,
}

/// Sign pattern of `g(t)` for `t > 0`. The threshold scales with the peak so
/// that a decaying tail is not mistaken for a sign change. A positive response
/// that does not decay within the horizon (the integrator) is only reported
/// as nonnegative.
pub fn impulse_positivity_check(ir: &ImpulseResponse) -> PositivityReport {
    let g = ir.g.values();
    let max_abs = ir.g.max_abs();
    let tol = 1e-12 * max_abs;
    let tail = &g[1..];
    let decays = g[g.len() - 1].abs() <= 1e-3 * max_abs;
    let sign = if decays && tail.iter().all(|&v| v > tol) {
        ImpulseSign::StrictlyPositive
    } else if tail.iter().all(|&v| v >= -tol) {
        ImpulseSign::Nonnegative
    } else {
        ImpulseSign::SignChanging
    };
    PositivityReport {
        sign,
        max_abs,
        decays,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realness::FrequencyGrid;

    fn tf(num: &[f64], den: &[f64]) -> RationalFunction {
        RationalFunction::new(num, den).unwrap()
    }

    #[test]
    fn realize_examples() {
        let ss = realize(&tf(&[1.0], &[1.0, 1.0]));
        assert_eq!(ss.a, DMatrix::from_element(1, 1, -1.0));
        assert_eq!(ss.b[0], 1.0);
        assert_eq!(ss.c[0], 1.0);
        assert_eq!(ss.d, 0.0);

        let ss = realize(&tf(&[2.0, 1.0], &[1.0, 1.0]));
        assert_eq!(ss.d, 1.0);
        assert_eq!(ss.c[0], 1.0);
        assert_eq!(ss.a[(0, 0)], -1.0);

        let ss = realize(&RationalFunction::constant(1.0));
        assert_eq!(ss.order(), 0);
        assert_eq!(ss.d, 1.0);
    }

    #[test]
    fn realization_round_trip() {
        let cases = [
            tf(&[1.0], &[1.0, 1.0]),
            tf(&[2.0, 3.0, 1.0], &[2.0, 2.0, 1.0]),
            tf(&[1.0, 1.0], &[0.0, 2.0, 1.0]),
            tf(&[0.0, 1.0], &[1.0, 0.0, 1.0]),
            tf(&[1.0], &[1.0, 3.0, 3.0, 1.0]),
        ];
        let grid = FrequencyGrid::default();
        for g in &cases {
            let ss = realize(g);
            for w in grid.omegas() {
                let Ok(exact) = g.freq_response(w) else {
                    continue;
                };
                let got = ss.freq_response(w);
                assert!(
                    (got - exact).norm() <= 1e-8 * exact.norm().max(1e-300),
                    "{g} at {w}"
                );
            }
        }
    }

    #[test]
    fn expm_matches_closed_forms() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = expm(&(a * 3.0));
        let expected =
            DMatrix::from_row_slice(2, 2, &[3f64.cos(), 3f64.sin(), -3f64.sin(), 3f64.cos()]);
        assert!((e - expected).amax() < 1e-13);

        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let t: f64 = 5.0;
        let e = expm(&(a * t));
        let expected =
            DMatrix::from_row_slice(2, 2, &[(-t).exp(), t * (-t).exp(), 0.0, (-t).exp()]);
        assert!((e - expected).amax() < 1e-14);
    }

    #[test]
    fn expm_matches_eigen_oracle() {
        let a = DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.5, 0.3, -4.0, 2.0, 0.0, -1.5, -0.7]);
        let ours = expm(&a);
        let reference = a.exp();
        assert!((ours - reference).amax() < 1e-12);
    }

    #[test]
    fn impulse_response_examples() {
        let ir = impulse_response(&tf(&[1.0], &[1.0, 1.0]), 5.0, 1e-3).unwrap();
        for (t, v) in ir.g.times().zip(ir.g.values()) {
            assert!((v - (-t).exp()).abs() < 1e-12);
        }
        let ir = impulse_response(&tf(&[1.0], &[0.0, 1.0]), 2.0, 1e-2).unwrap();
        assert!(ir.g.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let ir = impulse_response(&tf(&[1.0], &[2.0, 3.0, 1.0]), 5.0, 1e-3).unwrap();
        for (t, v) in ir.g.times().zip(ir.g.values()) {
            assert!((v - ((-t).exp() - (-2.0 * t).exp())).abs() < 1e-12);
        }
        let ir = impulse_response(&tf(&[2.0, 1.0], &[1.0, 1.0]), 1.0, 1e-2).unwrap();
        assert_eq!(ir.direct_delta_weight, 1.0);
        assert!(impulse_response(&tf(&[1.0], &[1.0, 1.0]), 0.0, 1e-2).is_err());
    }

    #[test]
    fn simulate_examples() {
        let ss = realize(&tf(&[1.0], &[1.0, 1.0]));
        let zero = Signal::constant(5.0, 1e-3, 0.0).unwrap();
        let y = simulate_forced(&ss, &zero, &[1.0]).unwrap();
        for (t, v) in y.times().zip(y.values()) {
            assert!((v - (-t).exp()).abs() < 1e-12);
        }
        let y = simulate_forced(&ss, &zero, &[0.0]).unwrap();
        assert!(y.values().iter().all(|&v| v == 0.0));
        let one = Signal::constant(5.0, 1e-3, 1.0).unwrap();
        for hold in [Hold::Foh, Hold::Zoh] {
            let y = simulate_forced_with(&ss, &one, &[0.0], hold).unwrap();
            for (t, v) in y.times().zip(y.values()) {
                assert!((v - (1.0 - (-t).exp())).abs() < 1e-8);
            }
        }
        assert!(matches!(
            simulate_forced(&ss, &one, &[0.0, 1.0]),
            Err(LtiError::DimensionMismatch {
                expected: 1,
                got: 2
            })
        ));
    }

    #[test]
    fn foh_is_exact_for_ramps() {
        let ss = realize(&tf(&[1.0], &[1.0, 1.0]));
        let ramp = Signal::sample(4.0, 0.1, |t| t).unwrap();
        let y = simulate_forced(&ss, &ramp, &[0.0]).unwrap();
        for (t, v) in y.times().zip(y.values()) {
            assert!((v - (t - 1.0 + (-t).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn convolve_examples() {
        let ir = impulse_response(&tf(&[1.0], &[1.0, 1.0]), 5.0, 1e-3).unwrap();
        let one = Signal::constant(5.0, 1e-3, 1.0).unwrap();
        let y = convolve(&ir, &one).unwrap();
        for (t, v) in y.times().zip(y.values()) {
            assert!((v - (1.0 - (-t).exp())).abs() < 1e-6);
        }
        let zero = one.map(|_| 0.0);
        assert!(convolve(&ir, &zero)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));

        let identity = ImpulseResponse {
            g: zero.clone(),
            direct_delta_weight: 1.0,
        };
        let u = Signal::sample(5.0, 1e-3, f64::sin).unwrap();
        assert_eq!(convolve(&identity, &u).unwrap(), u);
    }

    #[test]
    fn convolution_matches_state_space() {
        let cases = [
            tf(&[1.0], &[1.0, 1.0]),
            tf(&[2.0, 1.0], &[1.0, 1.0]),
            tf(&[1.0, 1.0], &[0.0, 2.0, 1.0]),
            tf(&[2.0, 3.0, 1.0], &[2.0, 2.0, 1.0]),
        ];
        let u = Signal::sample(6.0, 1e-3, |t| (1.3 * t).sin() + 0.5 * (0.4 * t).cos()).unwrap();
        for g in &cases {
            let ir = impulse_response(g, 6.0, 1e-3).unwrap();
            let a = convolve(&ir, &u).unwrap();
            let ss = realize(g);
            let b = simulate_forced(&ss, &u, &vec![0.0; ss.order()]).unwrap();
            let rms = (a
                .values()
                .iter()
                .zip(b.values())
                .map(|(p, q)| (p - q).powi(2))
                .sum::<f64>()
                / a.len() as f64)
                .sqrt();
            assert!(rms < 1e-6, "{g}: {rms}");
        }
    }

    #[test]
    fn positivity_examples() {
        let r = impulse_positivity_check(
            &impulse_response(&tf(&[1.0], &[1.0, 1.0]), 10.0, 1e-2).unwrap(),
        );
        assert_eq!(r.sign, ImpulseSign::StrictlyPositive);
        assert!(r.decays);
        let r = impulse_positivity_check(
            &impulse_response(&tf(&[1.0], &[0.0, 1.0]), 10.0, 1e-2).unwrap(),
        );
        assert_eq!(r.sign, ImpulseSign::Nonnegative);
        assert!(!r.decays);
        let r = impulse_positivity_check(
            &impulse_response(&tf(&[1.0], &[2.0, 2.0, 1.0]), 10.0, 1e-2).unwrap(),
        );
        assert_eq!(r.sign, ImpulseSign::SignChanging);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn superposition(a in proptest::collection::vec(-2.0f64..2.0, 50),
                             b in proptest::collection::vec(-2.0f64..2.0, 50),
                             alpha in -3.0f64..3.0) {
                let ss = realize(&tf(&[3.0, 1.0], &[2.0, 3.0, 1.0]));
                let u1 = Signal::new(0.05, a).unwrap();
                let u2 = Signal::new(0.05, b).unwrap();
                let mix = u1.zip_with(&u2, |p, q| alpha * p + q).unwrap();
                let y1 = simulate_forced(&ss, &u1, &[0.0, 0.0]).unwrap();
                let y2 = simulate_forced(&ss, &u2, &[0.0, 0.0]).unwrap();
                let ym = simulate_forced(&ss, &mix, &[0.0, 0.0]).unwrap();
                for k in 0..ym.len() {
                    let expect = alpha * y1.values()[k] + y2.values()[k];
                    prop_assert!((ym.values()[k] - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
                }
            }

            #[test]
            fn time_invariance(mut a in proptest::collection::vec(-2.0f64..2.0, 40), shift in 1usize..20) {
                // the interpolated input only matches its shifted copy when it starts at rest
                a[0] = 0.0;
                let ss = realize(&tf(&[3.0, 1.0], &[2.0, 2.0, 1.0]));
                let mut padded = vec![0.0; shift];
                padded.extend(&a);
                let u = Signal::new(0.05, a).unwrap();
                let us = Signal::new(0.05, padded).unwrap();
                let y = simulate_forced(&ss, &u, &[0.0, 0.0]).unwrap();
                let ys = simulate_forced(&ss, &us, &[0.0, 0.0]).unwrap();
                for k in 0..y.len() {
                    prop_assert!((ys.values()[k + shift] - y.values()[k]).abs() <= 1e-10);
                }
            }
        }
    }
}
