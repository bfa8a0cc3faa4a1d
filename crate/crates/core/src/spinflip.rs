//! Spin-flip (kink) relaxation of tagged spins against a stationary mean
//! field rotating at the mean frequency.
//!
//! A single spin at angle `phi` from the field obeys
//! `phi' = omega - Omega - lambda|J| sin(phi)`. It leaves the anti-aligned
//! equilibrium (`cos < 0`) and relaxes onto the aligned one (`cos > 0`) as
//! `delta(t) = 2 atan(tan(delta0/2) exp(-L t))`, with rate
//! `L = sqrt((lambda|J|)^2 - (omega - Omega)^2)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dynamics::{integrate, IntegratorConfig, Method, Model, OdeSystem};
use crate::error::{Error, Result};

/// Offset from the unstable equilibrium used to start a flip.
pub const UNSTABLE_SEED: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinkParams {
    /// Frequency of the flipping spin.
    pub omega: f64,
    /// Mean frequency of the background.
    pub mean_omega: f64,
    /// `lambda |J|`.
    pub lambda_j: f64,
}

impl KinkParams {
    pub fn new(omega: f64, mean_omega: f64, lambda_j: f64) -> Result<Self> {
        if !(lambda_j > 0.0 && lambda_j.is_finite()) {
            return Err(Error::InvalidParameter { field: "lambda_j", reason: format!("must be > 0, got {lambda_j}") });
        }
        Ok(Self { omega, mean_omega, lambda_j })
    }

    pub fn detuning(&self) -> f64 {
        self.omega - self.mean_omega
    }

    /// Aligned equilibrium `phi_0` (`cos phi_0 > 0`).
    pub fn stable_phase(&self) -> Result<f64> {
        relaxation_rate(self)?;
        Ok((self.detuning() / self.lambda_j).asin())
    }

    /// Anti-aligned equilibrium `phi_*` (`cos phi_* < 0`).
    pub fn unstable_phase(&self) -> Result<f64> {
        Ok(PI - self.stable_phase()?)
    }
}

pub fn kink_rhs(p: &KinkParams, phi: f64) -> f64 {
    p.detuning() - p.lambda_j * phi.sin()
}

pub fn relaxation_rate(p: &KinkParams) -> Result<f64> {
    let d = p.detuning();
    let s = p.lambda_j * p.lambda_j - d * d;
    if s < 0.0 {
        return Err(Error::ImaginaryRate { lambda_j: p.lambda_j, detuning: d });
    }
    Ok(s.sqrt())
}

/// `2 atan(tan(delta0/2) exp(-rate t))`.
pub fn kink_profile(rate: f64, delta0: f64, t: f64) -> f64 {
    2.0 * ((delta0 / 2.0).tan() * (-rate * t).exp()).atan()
}

/// Kink solution for the relaxation rate of `p`. Requires `|delta0| < pi`.
pub fn kink_analytic(p: &KinkParams, delta0: f64, t: f64) -> Result<f64> {
    if delta0.abs() >= PI {
        return Err(Error::InvalidParameter { field: "delta0", reason: format!("|{delta0}| must be < pi") });
    }
    Ok(kink_profile(relaxation_rate(p)?, delta0, t))
}

/// Two tagged spins on a background of `n - 2` others.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSpinParams {
    pub omega1: f64,
    pub omega2: f64,
    pub mean_omega: f64,
    pub lambda: f64,
    /// Background field magnitude, already rescaled by `(n - 2)/n`.
    pub j: f64,
    pub n: usize,
}

impl TwoSpinParams {
    pub fn new(omega1: f64, omega2: f64, mean_omega: f64, lambda: f64, j: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter { field: "n", reason: "two tagged spins need a background (n >= 3)".into() });
        }
        Ok(Self { omega1, omega2, mean_omega, lambda, j, n })
    }

    /// Takes the magnitude of the mean of the other `n - 2` spins and
    /// rescales it by `(n - 2)/n`.
    pub fn from_background(
        omega1: f64,
        omega2: f64,
        mean_omega: f64,
        lambda: f64,
        background_mean: f64,
        n: usize,
    ) -> Result<Self> {
        let j = background_mean * (n as f64 - 2.0) / n as f64;
        Self::new(omega1, omega2, mean_omega, lambda, j, n)
    }

    fn lambda_j(&self) -> f64 {
        self.lambda * self.j
    }
}

pub fn two_spin_rhs(p: &TwoSpinParams, phis: (f64, f64)) -> (f64, f64) {
    let (a, b) = phis;
    let pair = p.lambda / p.n as f64;
    (
        p.omega1 - p.mean_omega - p.lambda_j() * a.sin() - pair * (a - b).sin(),
        p.omega2 - p.mean_omega - p.lambda_j() * b.sin() - pair * (b - a).sin(),
    )
}

/// The same system in `sigma = (phi1 + phi2)/2`, `delta = (phi1 - phi2)/2`.
pub fn sigma_delta_rhs(p: &TwoSpinParams, sigma: f64, delta: f64) -> (f64, f64) {
    let lj = p.lambda_j();
    let (sd, cd) = delta.sin_cos();
    let (ss, cs) = sigma.sin_cos();
    (
        (p.omega1 + p.omega2) / 2.0 - p.mean_omega - lj * cd * ss,
        (p.omega1 - p.omega2) / 2.0 - lj * sd * cs - p.lambda / p.n as f64 * (2.0 * delta).sin(),
    )
}

/// Linearized steady state `(sigma, delta)` for large `n`.
pub fn two_spin_asymptotic(p: &TwoSpinParams) -> Result<(f64, f64)> {
    let lj = p.lambda_j();
    let mean_detuning = (p.omega1 + p.omega2) / 2.0 - p.mean_omega;
    let s = lj * lj - mean_detuning * mean_detuning;
    if !(s > 0.0) {
        return Err(Error::ImaginaryRate { lambda_j: lj, detuning: mean_detuning });
    }
    Ok((mean_detuning / lj, (p.omega1 - p.omega2) / (2.0 * s.sqrt())))
}

/// Single-spin ODE in the deviation `delta = phi - phi_ref`.
pub struct KinkSystem {
    pub params: KinkParams,
    pub phi_ref: f64,
}

impl OdeSystem for KinkSystem {
    fn dim(&self) -> usize {
        1
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = kink_rhs(&self.params, self.phi_ref + y[0]);
    }
}

impl Model for KinkSystem {
    type State = f64;

    fn encode(&self, s: &f64) -> Vec<f64> {
        vec![*s]
    }

    fn decode(&self, y: &[f64]) -> f64 {
        y[0]
    }
}

/// The reduced relaxation law `delta' = -rate sin(delta)`.
pub struct ReducedKink {
    pub rate: f64,
}

impl OdeSystem for ReducedKink {
    fn dim(&self) -> usize {
        1
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = -self.rate * y[0].sin();
    }
}

impl Model for ReducedKink {
    type State = f64;

    fn encode(&self, s: &f64) -> Vec<f64> {
        vec![*s]
    }

    fn decode(&self, y: &[f64]) -> f64 {
        y[0]
    }
}

pub struct TwoSpinSystem {
    pub params: TwoSpinParams,
}

impl OdeSystem for TwoSpinSystem {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let (a, b) = two_spin_rhs(&self.params, (y[0], y[1]));
        dy[0] = a;
        dy[1] = b;
    }
}

impl Model for TwoSpinSystem {
    type State = (f64, f64);

    fn encode(&self, s: &(f64, f64)) -> Vec<f64> {
        vec![s.0, s.1]
    }

    fn decode(&self, y: &[f64]) -> (f64, f64) {
        (y[0], y[1])
    }
}

/// Least-squares slope of `-ln|delta|` against time over samples with
/// `lo <= |delta| <= hi`.
pub fn fit_decay_rate(times: &[f64], deltas: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(deltas)
        .filter(|(_, d)| (lo..=hi).contains(&d.abs()))
        .map(|(&t, d)| (t, d.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} samples in the fitting band", pts.len())));
    }
    let n = pts.len() as f64;
    let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(sxy, sxx), (t, y)| (sxy + (t - mt) * (y - my), sxx + (t - mt).powi(2)));
    Ok(-sxy / sxx)
}

/// Integrates the full single-spin equation from `phi_0 + delta0` and fits
/// the exponential tail of the deviation for `1e-9 <= |delta| <= 1e-4`.
pub fn measure_relaxation_rate(p: &KinkParams, delta0: f64) -> Result<f64> {
    let rate = relaxation_rate(p)?;
    let phi0 = p.stable_phase()?;
    let t_end = 30.0 / rate;
    let cfg = IntegratorConfig {
        t_end,
        sample_dt: Some(t_end / 3000.0),
        method: Method::Adaptive { rtol: 1e-13, atol: 1e-16 },
        ..IntegratorConfig::default()
    };
    let traj = integrate(&KinkSystem { params: *p, phi_ref: phi0 }, &delta0, &cfg, &[])?;
    fit_decay_rate(traj.times(), traj.states(), 1e-9, 1e-4)
}
