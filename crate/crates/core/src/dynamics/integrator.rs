//! Explicit Runge-Kutta integrators on flat `f64` state vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A first-order autonomous-or-not ODE `y' = f(t, y)` on `R^dim`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
    /// Optional projection applied after each accepted step.
    fn project(&self, _y: &mut [f64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// Classical fixed-step RK4 with step `dt`.
    Rk4,
    /// Dormand-Prince 5(4) with per-component scale `atol + rtol |y|`.
    Adaptive { rtol: f64, atol: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Fixed step for RK4; initial step for the adaptive method.
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
    /// Project spins back to unit norm after every step.
    pub renormalize: bool,
    /// Output interval; defaults to `dt`.
    pub sample_dt: Option<f64>,
    /// Smallest step the adaptive controller may take.
    pub min_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_end: 10.0,
            method: Method::Adaptive { rtol: 1e-9, atol: 1e-9 },
            renormalize: false,
            sample_dt: None,
            min_step: 1e-13,
        }
    }
}

impl IntegratorConfig {
    pub fn adaptive(t_end: f64, sample_dt: f64) -> Self {
        Self { t_end, sample_dt: Some(sample_dt), ..Self::default() }
    }

    pub fn rk4(dt: f64, t_end: f64, sample_dt: f64) -> Self {
        Self { dt, t_end, method: Method::Rk4, sample_dt: Some(sample_dt), ..Self::default() }
    }

    pub fn with_tolerance(mut self, rtol: f64) -> Self {
        self.method = Method::Adaptive { rtol, atol: rtol };
        self
    }

    pub fn with_renormalize(mut self, on: bool) -> Self {
        self.renormalize = on;
        self
    }

    pub fn sample_interval(&self) -> f64 {
        self.sample_dt.unwrap_or(self.dt)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| Err(Error::InvalidParameter { field, reason: reason.into() });
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", "must be positive and finite");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end", "must be non-negative and finite");
        }
        if !(self.sample_interval() > 0.0) {
            return bad("sample_dt", "must be positive");
        }
        if let Method::Adaptive { rtol, atol } = self.method {
            if !(rtol > 0.0 && rtol <= 1e-3) {
                return bad("rtol", "must lie in (0, 1e-3]");
            }
            if !(atol > 0.0) {
                return bad("atol", "must be positive");
            }
        }
        Ok(())
    }

    /// Output times `0, s, 2s, ..., t_end` (the last one always `t_end`).
    pub fn sample_times(&self) -> Vec<f64> {
        let s = self.sample_interval();
        let n = (self.t_end / s + 1e-9).floor() as usize;
        let mut out: Vec<f64> = (0..=n).map(|k| k as f64 * s).collect();
        let last = *out.last().unwrap();
        if self.t_end - last > 1e-9 * s {
            out.push(self.t_end);
        } else if let Some(l) = out.last_mut() {
            *l = self.t_end;
        }
        out
    }
}

/// Advances by one classical RK4 step.
pub fn rk4_step<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &mut [f64], h: f64, work: &mut Rk4Work) {
    let n = y.len();
    work.ensure(n);
    let Rk4Work { k1, k2, k3, k4, tmp } = work;
    sys.rhs(t, y, k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    sys.rhs(t + 0.5 * h, tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    sys.rhs(t + 0.5 * h, tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    sys.rhs(t + h, tmp, k4);
    for i in 0..n {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

#[derive(Default)]
pub struct Rk4Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Work {
    fn ensure(&mut self, n: usize) {
        for v in [&mut self.k1, &mut self.k2, &mut self.k3, &mut self.k4, &mut self.tmp] {
            v.resize(n, 0.0);
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (error weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive Dormand-Prince stepper with FSAL reuse.
pub struct DormandPrince {
    rtol: f64,
    atol: f64,
    h_min: f64,
    h: f64,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    fsal_valid: bool,
}

impl DormandPrince {
    pub fn new(dim: usize, rtol: f64, atol: f64, h0: f64, h_min: f64) -> Self {
        Self {
            rtol,
            atol,
            h_min,
            h: h0,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            y_new: vec![0.0; dim],
            fsal_valid: false,
        }
    }

    /// Integrates from `t` to exactly `t_target`, applying the system's
    /// projection after each accepted step when `project` is set.
    pub fn advance<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        t: &mut f64,
        y: &mut [f64],
        t_target: f64,
        project: bool,
    ) -> Result<()> {
        while *t < t_target {
            let remaining = t_target - *t;
            let last = self.h >= remaining * (1.0 - 1e-12);
            let h = if last { remaining } else { self.h };
            if h < self.h_min && !last {
                return Err(Error::StepFailure { t: *t, h, h_min: self.h_min });
            }
            if !self.fsal_valid {
                sys.rhs(*t, y, &mut self.k[0]);
                self.fsal_valid = true;
            }
            let err = self.trial(sys, *t, y, h);
            if !err.is_finite() {
                self.h = h * 0.2;
                if self.h < self.h_min {
                    return Err(Error::StepFailure { t: *t, h: self.h, h_min: self.h_min });
                }
                continue;
            }
            if err <= 1.0 {
                *t = if last { t_target } else { *t + h };
                y.copy_from_slice(&self.y_new);
                if project {
                    sys.project(y);
                    self.fsal_valid = false;
                } else {
                    let (first, rest) = self.k.split_at_mut(1);
                    first[0].copy_from_slice(&rest[5]);
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a truncated final step says nothing about the natural size
                if !last || fac < 1.0 {
                    self.h = h * fac;
                }
            } else {
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                if self.h < self.h_min {
                    return Err(Error::StepFailure { t: *t, h: self.h, h_min: self.h_min });
                }
            }
        }
        Ok(())
    }

    fn trial<S: OdeSystem + ?Sized>(&mut self, sys: &S, t: f64, y: &[f64], h: f64) -> f64 {
        let n = y.len();
        let (k0, rest) = self.k.split_at_mut(1);
        let k1 = &k0[0];
        let [k2, k3, k4, k5, k6, k7] = rest else { unreachable!() };
        let tmp = &mut self.tmp;

        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        sys.rhs(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.rhs(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.rhs(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.rhs(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.rhs(t + h, tmp, k6);
        for i in 0..n {
            self.y_new[i] = y[i]
                + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        sys.rhs(t + h, &self.y_new, k7);

        let mut err = 0.0f64;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.atol + self.rtol * y[i].abs().max(self.y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        err
    }
}

/// Integrates `sys` from `y0` and calls `sample(t, y)` at every output time
/// of `cfg`, starting with `t = 0`.
pub fn solve<S, F>(sys: &S, y0: &[f64], cfg: &IntegratorConfig, mut sample: F) -> Result<()>
where
    S: OdeSystem + ?Sized,
    F: FnMut(f64, &[f64]) -> Result<()>,
{
    cfg.validate()?;
    crate::error::check_len(sys.dim(), y0.len())?;
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let times = cfg.sample_times();
    sample(t, &y)?;
    match cfg.method {
        Method::Rk4 => {
            let mut work = Rk4Work::default();
            let mut steps_taken: u64 = 0;
            for &target in &times[1..] {
                // steps land on the grid k*dt; the final partial step hits target
                loop {
                    let next = (steps_taken + 1) as f64 * cfg.dt;
                    if next > target * (1.0 + 1e-12) + 1e-15 {
                        break;
                    }
                    rk4_step(sys, t, &mut y, next - t, &mut work);
                    if cfg.renormalize {
                        sys.project(&mut y);
                    }
                    t = next;
                    steps_taken += 1;
                }
                if target - t > 1e-12 * cfg.dt {
                    rk4_step(sys, t, &mut y, target - t, &mut work);
                    if cfg.renormalize {
                        sys.project(&mut y);
                    }
                    t = target;
                }
                sample(target, &y)?;
            }
        }
        Method::Adaptive { rtol, atol } => {
            let mut dp = DormandPrince::new(y.len(), rtol, atol, cfg.dt, cfg.min_step);
            for &target in &times[1..] {
                dp.advance(sys, &mut t, &mut y, target, cfg.renormalize)?;
                sample(target, &y)?;
            }
        }
    }
    Ok(())
}
