//! Synchronization analytics: coupling bounds, locking detection and
//! residuals, the self-consistent order-parameter equation and its
//! large-coupling expansion, and classification of order-parameter series.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::PI;

use crate::algebra::antisym_form;
use crate::dynamics::ModelParams;
use crate::error::{check_len, Error, Result};
use crate::state::{FrequencySpec, PhaseState};
use crate::trajectory::Trajectory;

/// Necessary-condition bounds on the coupling: below `lambda_c` no pair can
/// lock, above `lambda_s` every pair may.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingBounds {
    pub lambda_c: f64,
    pub lambda_s: f64,
}

/// `N/(2(N-1))` times the smallest and largest pairwise frequency gaps.
pub fn coupling_bounds(freqs: &FrequencySpec) -> CouplingBounds {
    let w = freqs.omegas();
    let n = w.len();
    if n < 2 {
        return CouplingBounds { lambda_c: 0.0, lambda_s: 0.0 };
    }
    let mut sorted = w.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min_gap = sorted.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
    let max_gap = sorted[n - 1] - sorted[0];
    let scale = n as f64 / (2.0 * (n as f64 - 1.0));
    CouplingBounds { lambda_c: scale * min_gap, lambda_s: scale * max_gap }
}

/// Pairs `(i, j)`, `i < j`, whose unwrapped phase difference varies by less
/// than `tol` over the trailing `window` of the trajectory.
pub fn detect_locking(
    traj: &Trajectory<PhaseState>,
    window: f64,
    tol: f64,
) -> Result<BTreeSet<(usize, usize)>> {
    let range = traj.trailing_window(window)?;
    let states = &traj.states()[range];
    if states.len() < 2 {
        return Err(Error::InsufficientData("window holds fewer than two samples".into()));
    }
    let n = states[0].len();
    let mut locked = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            let (lo, hi) = states.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                let d = s.thetas[i] - s.thetas[j];
                (lo.min(d), hi.max(d))
            });
            if hi - lo < tol {
                locked.insert((i, j));
            }
        }
    }
    Ok(locked)
}

/// `[z_j - z_k, r] - (omega_j - omega_k)/lambda`; zero for a locked pair.
pub fn pair_lock_residual(
    z: &[Complex64],
    r: Complex64,
    j: usize,
    k: usize,
    params: &ModelParams,
) -> Result<f64> {
    check_len(params.n(), z.len())?;
    if params.lambda <= 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let w = params.omegas();
    Ok(antisym_form(z[j] - z[k], r) - (w[j] - w[k]) / params.lambda)
}

/// Cyclic sum `(w_k - w_l) sin p_j + (w_l - w_j) sin p_k + (w_j - w_k) sin p_l`.
pub fn triple_lock_residual(phis: [f64; 3], omegas: [f64; 3]) -> f64 {
    let [pj, pk, pl] = phis;
    let [wj, wk, wl] = omegas;
    (wk - wl) * pj.sin() + (wl - wj) * pk.sin() + (wj - wk) * pl.sin()
}

/// A synchronized equilibrium: `sin phi_j = (omega_j - Omega)/(lambda |J|)`
/// with `sign(cos phi_j) = epsilon_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncSolution {
    pub j_mod: f64,
    pub epsilons: Vec<i8>,
    pub phis: Vec<f64>,
}

impl SyncSolution {
    /// Phases relative to the mean field, which points along angle 0.
    pub fn to_phase_state(&self) -> PhaseState {
        PhaseState::new(self.phis.clone())
    }
}

/// Damping factor of the fixed-point iteration.
pub const FIXED_POINT_DAMPING: f64 = 0.5;

fn check_epsilons(n: usize, epsilons: &[i8]) -> Result<()> {
    check_len(n, epsilons.len())?;
    if epsilons.iter().any(|e| *e != 1 && *e != -1) {
        return Err(Error::InvalidParameter { field: "epsilons", reason: "entries must be +1 or -1".into() });
    }
    Ok(())
}

/// `J0 = (N+ - N-)/N`.
pub fn sector_limit(epsilons: &[i8]) -> f64 {
    epsilons.iter().map(|&e| e as f64).sum::<f64>() / epsilons.len() as f64
}

/// Solves `|J| = (1/N) sum_j eps_j sqrt(1 - (omega_j - Omega)^2/(lambda |J|)^2)`
/// on the feasible interval `lambda |J| >= max_j |omega_j - Omega|`.
///
/// Damped fixed-point iteration from `J0` first; if it leaves the feasible
/// interval or stalls, bisection on the sign change of `F(J) = J - RHS(J)`
/// nearest to `|J| = 1`.
pub fn solve_self_consistent_j(freqs: &FrequencySpec, lambda: f64, epsilons: &[i8]) -> Result<SyncSolution> {
    check_epsilons(freqs.len(), epsilons)?;
    if !(lambda > 0.0) {
        return Err(Error::ZeroCoupling);
    }
    let dev = freqs.deviations();
    let n = dev.len() as f64;
    let j_min = freqs.max_abs_deviation() / lambda;
    if j_min > 1.0 {
        return Err(Error::NoSolution(format!(
            "lambda = {lambda} is below the largest detuning {}",
            j_min * lambda
        )));
    }
    let rhs = |j: f64| -> f64 {
        dev.iter()
            .zip(epsilons)
            .map(|(d, &e)| {
                let x = d / (lambda * j);
                e as f64 * (1.0 - x * x).max(0.0).sqrt()
            })
            .sum::<f64>()
            / n
    };
    let f = |j: f64| j - rhs(j);
    let feasible = |j: f64| j > 0.0 && j >= j_min && j <= 1.0;

    let mut root = None;
    let mut j = sector_limit(epsilons).clamp(j_min, 1.0);
    if j > 0.0 {
        for _ in 0..10_000 {
            let next = (1.0 - FIXED_POINT_DAMPING) * j + FIXED_POINT_DAMPING * rhs(j);
            if !feasible(next) {
                break;
            }
            let step = (next - j).abs();
            j = next;
            if step < 1e-16 {
                break;
            }
        }
        if feasible(j) && f(j).abs() < 1e-13 {
            root = Some(j);
        }
    }

    if root.is_none() {
        root = bisect_from_top(&f, j_min.max(1e-12), 1.0);
    }

    let j_mod = root.ok_or_else(|| {
        Error::NoSolution(format!("no root of J = RHS(J) in [{j_min}, 1] for this sector"))
    })?;
    let phis = dev
        .iter()
        .zip(epsilons)
        .map(|(d, &e)| {
            let s = (d / (lambda * j_mod)).clamp(-1.0, 1.0).asin();
            if e > 0 {
                s
            } else {
                PI - s
            }
        })
        .collect();
    Ok(SyncSolution { j_mod, epsilons: epsilons.to_vec(), phis })
}

fn bisect_from_top(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Option<f64> {
    const GRID: usize = 2000;
    let mut b = hi;
    let mut fb = f(b);
    if fb == 0.0 {
        return Some(b);
    }
    for k in 1..=GRID {
        let a = hi - (hi - lo) * k as f64 / GRID as f64;
        let fa = f(a);
        if fa == 0.0 {
            return Some(a);
        }
        if fa.signum() != fb.signum() {
            let (mut a, mut b, mut fa_) = (a, b, fa);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 || (b - a) < 1e-16 {
                    return Some(m);
                }
                if fm.signum() == fa_.signum() {
                    a = m;
                    fa_ = fm;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        b = a;
        fb = fa;
    }
    None
}

/// Two-term large-coupling expansion
/// `J0 - E[eps_j (omega_j - Omega)^2] / (2 lambda^2 J0^2)`.
pub fn asymptotic_j(freqs: &FrequencySpec, lambda: f64, epsilons: &[i8]) -> f64 {
    let j0 = sector_limit(epsilons);
    let dev = freqs.deviations();
    let weighted = dev.iter().zip(epsilons).map(|(d, &e)| e as f64 * d * d).sum::<f64>() / dev.len() as f64;
    j0 - weighted / (2.0 * lambda * lambda * j0 * j0)
}

/// `lambda |J| - sum (omega_j - Omega) sin phi_j / sum sin^2 phi_j` with
/// `phi_j` measured from the order-parameter phase.
pub fn global_sync_residual(state: &PhaseState, params: &ModelParams) -> Result<f64> {
    check_len(params.n(), state.len())?;
    let op = state.order_parameter();
    let dev = params.freqs.deviations();
    let (num, den) = state.thetas.iter().zip(&dev).fold((0.0, 0.0), |(num, den), (t, d)| {
        let s = (t - op.theta0).sin();
        (num + d * s, den + s * s)
    });
    if den < 1e-14 {
        return Err(Error::DegenerateDenominator(den));
    }
    Ok(params.lambda * op.modulus - num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncClass {
    Unsynchronized,
    PartiallySynchronized,
    FullySynchronized,
    Nonstationary,
}

impl SyncClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SyncClass::Unsynchronized => "unsynchronized",
            SyncClass::PartiallySynchronized => "partially_synchronized",
            SyncClass::FullySynchronized => "fully_synchronized",
            SyncClass::Nonstationary => "nonstationary",
        }
    }
}

/// Thresholds for [`classify`]. `incoherent_mean` catches finite-N
/// incoherent states whose `|r|` fluctuates around small values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyThresholds {
    pub constancy_tol: f64,
    pub zero_one_tol: f64,
    pub incoherent_mean: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self { constancy_tol: 1e-5, zero_one_tol: 1e-3, incoherent_mean: 0.2 }
    }
}

/// Classifies a trailing window of `|r|` samples.
pub fn classify(modulus_series: &[f64], th: &ClassifyThresholds) -> Result<SyncClass> {
    if modulus_series.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "classification needs >= 2 samples, got {}",
            modulus_series.len()
        )));
    }
    let (lo, hi) = modulus_series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let mean = modulus_series.iter().sum::<f64>() / modulus_series.len() as f64;
    if hi < th.zero_one_tol {
        return Ok(SyncClass::Unsynchronized);
    }
    if hi - lo < th.constancy_tol {
        return Ok(if mean > 1.0 - th.zero_one_tol {
            SyncClass::FullySynchronized
        } else {
            SyncClass::PartiallySynchronized
        });
    }
    Ok(if mean < th.incoherent_mean { SyncClass::Unsynchronized } else { SyncClass::Nonstationary })
}
