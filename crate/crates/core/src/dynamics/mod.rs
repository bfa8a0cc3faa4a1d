//! Equations of motion for the angular, complex and spin forms of the
//! model, and their time integration.
//!
//! The angular form is `theta_j' = omega_j + (lambda/N) sum_k sin(theta_k - theta_j)`.
//! The complex form is `z_j' = i z_j (omega_j + lambda [r, z_j])` with `r`
//! the complex order parameter. The spin form
//! `S_j' = omega_j e3 x S_j + lambda S_j x (J x S_j)` reduces to the other two
//! for unit spins in the plane perpendicular to `e3`.

pub mod integrator;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::antisym_form;
use crate::error::{check_len, Error, Result};
use crate::state::{complex_mean, e3, mean_field, FrequencySpec, OrderParameter, PhaseState, SpinConfiguration, Vec3};
use crate::trajectory::{Trajectory, Value};

pub use integrator::{IntegratorConfig, Method, OdeSystem};

/// Frequencies and coupling constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub freqs: FrequencySpec,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(freqs: FrequencySpec, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "lambda",
                reason: format!("coupling must be finite and >= 0, got {lambda}"),
            });
        }
        Ok(Self { freqs, lambda })
    }

    /// Shorthand for tests and examples.
    pub fn from_omegas(omegas: Vec<f64>, lambda: f64) -> Result<Self> {
        Self::new(FrequencySpec::new(omegas)?, lambda)
    }

    pub fn n(&self) -> usize {
        self.freqs.len()
    }

    pub fn omegas(&self) -> &[f64] {
        self.freqs.omegas()
    }
}

/// Angular velocities of the original model.
pub fn kuramoto_rhs(params: &ModelParams, state: &PhaseState) -> Result<Vec<f64>> {
    check_len(params.n(), state.len())?;
    let mut out = vec![0.0; state.len()];
    angular_rhs_into(params, &state.thetas, &mut out);
    Ok(out)
}

fn angular_rhs_into(params: &ModelParams, thetas: &[f64], out: &mut [f64]) {
    let n = thetas.len() as f64;
    let (s, c) = thetas
        .iter()
        .fold((0.0, 0.0), |(s, c), t| (s + t.sin(), c + t.cos()));
    let k = params.lambda / n;
    for ((o, &t), &w) in out.iter_mut().zip(thetas).zip(params.omegas()) {
        let (sj, cj) = t.sin_cos();
        // sum_k sin(theta_k - theta_j) = S cos(theta_j) - C sin(theta_j)
        *o = w + k * (s * cj - c * sj);
    }
}

/// Complex velocities `z_j' = i z_j (omega_j + lambda [r, z_j])`.
pub fn kuramoto_rhs_complex(params: &ModelParams, z: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(params.n(), z.len())?;
    for (index, zj) in z.iter().enumerate() {
        let modulus = zj.norm();
        if (modulus - 1.0).abs() > 1e-9 {
            return Err(Error::NonUnimodularInput { index, modulus });
        }
    }
    Ok(complex_rhs_unchecked(params, z))
}

fn complex_rhs_unchecked(params: &ModelParams, z: &[Complex64]) -> Vec<Complex64> {
    let r = complex_mean(z);
    z.iter()
        .zip(params.omegas())
        .map(|(&zj, &w)| Complex64::i() * zj * (w + params.lambda * antisym_form(r, zj)))
        .collect()
}

/// Spin velocities `omega_j e3 x S_j + lambda S_j x (J x S_j)`.
pub fn spin_rhs(params: &ModelParams, state: &SpinConfiguration) -> Result<Vec<Vec3>> {
    check_len(params.n(), state.len())?;
    let j = state.mean_field();
    Ok(spin_rhs_with_field(params, &state.spins, &j))
}

pub(crate) fn spin_rhs_with_field(params: &ModelParams, spins: &[Vec3], j: &Vec3) -> Vec<Vec3> {
    let e = e3();
    spins
        .iter()
        .zip(params.omegas())
        .map(|(s, &w)| w * e.cross(s) + params.lambda * s.cross(&j.cross(s)))
        .collect()
}

/// A dynamical system together with its state encoding.
pub trait Model: OdeSystem {
    type State: Clone;
    fn encode(&self, state: &Self::State) -> Vec<f64>;
    fn decode(&self, y: &[f64]) -> Self::State;
}

pub struct AngularSystem<'a> {
    pub params: &'a ModelParams,
}

impl OdeSystem for AngularSystem<'_> {
    fn dim(&self) -> usize {
        self.params.n()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        angular_rhs_into(self.params, y, dy);
    }
}

impl Model for AngularSystem<'_> {
    type State = PhaseState;

    fn encode(&self, state: &PhaseState) -> Vec<f64> {
        state.thetas.clone()
    }

    fn decode(&self, y: &[f64]) -> PhaseState {
        PhaseState::new(y.to_vec())
    }
}

/// Complex form, stored as interleaved `(re, im)` pairs.
pub struct ComplexSystem<'a> {
    pub params: &'a ModelParams,
}

impl OdeSystem for ComplexSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.params.n()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let z = unpack_complex(y);
        for (k, v) in complex_rhs_unchecked(self.params, &z).into_iter().enumerate() {
            dy[2 * k] = v.re;
            dy[2 * k + 1] = v.im;
        }
    }

    fn project(&self, y: &mut [f64]) {
        for c in y.chunks_exact_mut(2) {
            let m = c[0].hypot(c[1]);
            c[0] /= m;
            c[1] /= m;
        }
    }
}

impl Model for ComplexSystem<'_> {
    type State = Vec<Complex64>;

    fn encode(&self, z: &Vec<Complex64>) -> Vec<f64> {
        z.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    fn decode(&self, y: &[f64]) -> Vec<Complex64> {
        unpack_complex(y)
    }
}

fn unpack_complex(y: &[f64]) -> Vec<Complex64> {
    y.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

/// Spin form, stored as consecutive `(x, y, z)` triples. Decoded states
/// carry dual momenta `P_j = S_j x e3` when `with_momenta` is set.
pub struct SpinSystem<'a> {
    pub params: &'a ModelParams,
    pub with_momenta: bool,
}

impl OdeSystem for SpinSystem<'_> {
    fn dim(&self) -> usize {
        3 * self.params.n()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let spins = unpack_spins(y);
        let j = mean_field(&spins);
        for (k, v) in spin_rhs_with_field(self.params, &spins, &j).into_iter().enumerate() {
            dy[3 * k..3 * k + 3].copy_from_slice(v.as_slice());
        }
    }

    fn project(&self, y: &mut [f64]) {
        for c in y.chunks_exact_mut(3) {
            let m = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            c.iter_mut().for_each(|x| *x /= m);
        }
    }
}

impl Model for SpinSystem<'_> {
    type State = SpinConfiguration;

    fn encode(&self, state: &SpinConfiguration) -> Vec<f64> {
        state.spins.iter().flat_map(|s| [s.x, s.y, s.z]).collect()
    }

    fn decode(&self, y: &[f64]) -> SpinConfiguration {
        let c = SpinConfiguration::from_raw(unpack_spins(y));
        if self.with_momenta {
            c.with_dual_momenta()
        } else {
            c
        }
    }
}

fn unpack_spins(y: &[f64]) -> Vec<Vec3> {
    y.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
}

type ObserverFn<S> = dyn Fn(&S) -> Value + Send + Sync;

/// A named function of the state recorded at every sample.
pub struct Observer<S> {
    name: String,
    f: Box<ObserverFn<S>>,
}

impl<S> Observer<S> {
    pub fn new(name: impl Into<String>, f: impl Fn(&S) -> Value + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Box::new(f) }
    }

    pub fn real(name: impl Into<String>, f: impl Fn(&S) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(name, move |s| Value::Real(f(s)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, s: &S) -> Value {
        (self.f)(s)
    }
}

/// States that define an order parameter.
pub trait HasOrderParameter {
    fn order_parameter(&self) -> OrderParameter;
}

impl HasOrderParameter for PhaseState {
    fn order_parameter(&self) -> OrderParameter {
        PhaseState::order_parameter(self)
    }
}

impl HasOrderParameter for SpinConfiguration {
    fn order_parameter(&self) -> OrderParameter {
        SpinConfiguration::order_parameter(self)
    }
}

impl HasOrderParameter for Vec<Complex64> {
    fn order_parameter(&self) -> OrderParameter {
        OrderParameter::from_complex(complex_mean(self))
    }
}

/// Order parameter from any supported state.
pub fn order_parameter<S: HasOrderParameter>(state: &S) -> OrderParameter {
    state.order_parameter()
}

pub mod observers {
    use super::*;

    pub fn order_modulus<S: HasOrderParameter>() -> Observer<S> {
        Observer::real("r_mod", |s: &S| s.order_parameter().modulus)
    }

    pub fn order_phase<S: HasOrderParameter>() -> Observer<S> {
        Observer::real("theta0", |s: &S| s.order_parameter().theta0)
    }

    pub fn order_complex<S: HasOrderParameter>() -> Observer<S> {
        Observer::new("r", |s: &S| Value::Complex(s.order_parameter().r_complex))
    }

    /// Unwrapped `theta_i - theta_j`.
    pub fn phase_difference(i: usize, j: usize) -> Observer<PhaseState> {
        Observer::real(format!("delta_{i}_{j}"), move |s: &PhaseState| s.thetas[i] - s.thetas[j])
    }

    /// Energy of the planar embedding (Hamiltonian with dual momenta).
    pub fn phase_energy(params: &ModelParams) -> Observer<PhaseState> {
        let p = params.clone();
        Observer::real("energy", move |s: &PhaseState| {
            crate::variational::hamiltonian_of_spins(&p, &s.to_spin()).unwrap_or(f64::NAN)
        })
    }

    pub fn spin_energy(params: &ModelParams) -> Observer<SpinConfiguration> {
        let p = params.clone();
        Observer::real("energy", move |s: &SpinConfiguration| {
            crate::variational::hamiltonian_of_spins(&p, s).unwrap_or(f64::NAN)
        })
    }

    pub fn max_norm_defect() -> Observer<SpinConfiguration> {
        Observer::real("norm_defect", |s: &SpinConfiguration| s.max_norm_defect())
    }

    pub fn max_out_of_plane() -> Observer<SpinConfiguration> {
        Observer::real("out_of_plane", |s: &SpinConfiguration| s.max_out_of_plane())
    }
}

/// Integrates any model, sampling states and observables on the output grid.
pub fn integrate<M: Model>(
    model: &M,
    init: &M::State,
    cfg: &IntegratorConfig,
    observers: &[Observer<M::State>],
) -> Result<Trajectory<M::State>> {
    let y0 = model.encode(init);
    let mut traj = Trajectory::new();
    integrator::solve(model, &y0, cfg, |t, y| {
        let state = model.decode(y);
        let values: Vec<(&str, Value)> =
            observers.iter().map(|o| (o.name(), o.eval(&state))).collect();
        traj.push(t, state, &values)
    })?;
    Ok(traj)
}

pub fn integrate_phases(
    params: &ModelParams,
    init: &PhaseState,
    cfg: &IntegratorConfig,
    observers: &[Observer<PhaseState>],
) -> Result<Trajectory<PhaseState>> {
    check_len(params.n(), init.len())?;
    integrate(&AngularSystem { params }, init, cfg, observers)
}

pub fn integrate_complex(
    params: &ModelParams,
    init: &[Complex64],
    cfg: &IntegratorConfig,
    observers: &[Observer<Vec<Complex64>>],
) -> Result<Trajectory<Vec<Complex64>>> {
    check_len(params.n(), init.len())?;
    integrate(&ComplexSystem { params }, &init.to_vec(), cfg, observers)
}

pub fn integrate_spins(
    params: &ModelParams,
    init: &SpinConfiguration,
    cfg: &IntegratorConfig,
    observers: &[Observer<SpinConfiguration>],
) -> Result<Trajectory<SpinConfiguration>> {
    check_len(params.n(), init.len())?;
    let model = SpinSystem { params, with_momenta: init.momenta.is_some() };
    integrate(&model, init, cfg, observers)
}

/// `max_j |theta_j' - mean(theta')|`.
pub fn frequency_spread(params: &ModelParams, state: &PhaseState) -> Result<f64> {
    let v = kuramoto_rhs(params, state)?;
    let m = v.iter().sum::<f64>() / v.len() as f64;
    Ok(v.iter().fold(0.0, |a, x| a.max((x - m).abs())))
}

/// Windowed equilibrium test: the frequency spread stays below `tol` over
/// the last `window` samples.
pub fn is_converged(
    params: &ModelParams,
    traj: &Trajectory<PhaseState>,
    window: usize,
    tol: f64,
) -> Result<bool> {
    if traj.len() < window {
        return Err(Error::InsufficientData(format!(
            "need {window} samples, trajectory has {}",
            traj.len()
        )));
    }
    for s in &traj.states()[traj.len() - window..] {
        if frequency_spread(params, s)? >= tol {
            return Ok(false);
        }
    }
    Ok(true)
}

pub const DEFAULT_CONVERGENCE_WINDOW: usize = 10;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-8;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn brute_rhs(omegas: &[f64], lambda: f64, thetas: &[f64]) -> Vec<f64> {
        let n = thetas.len() as f64;
        thetas
            .iter()
            .zip(omegas)
            .map(|(tj, w)| w + lambda / n * thetas.iter().map(|tk| (tk - tj).sin()).sum::<f64>())
            .collect()
    }

    #[test]
    fn angular_examples() {
        let p = ModelParams::from_omegas(vec![2.0], 3.0).unwrap();
        assert_eq!(kuramoto_rhs(&p, &PhaseState::new(vec![0.7])).unwrap(), vec![2.0]);

        let p = ModelParams::from_omegas(vec![0.0, 0.0], 2.0).unwrap();
        let v = kuramoto_rhs(&p, &PhaseState::new(vec![0.0, PI / 2.0])).unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], -1.0, epsilon = 1e-15);

        let p = ModelParams::from_omegas(vec![0.3, -1.0, 2.5], 4.0).unwrap();
        let v = kuramoto_rhs(&p, &PhaseState::new(vec![1.1; 3])).unwrap();
        for (a, b) in v.iter().zip(p.omegas()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }

        assert!(matches!(
            kuramoto_rhs(&p, &PhaseState::new(vec![0.0; 2])),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn angular_matches_pairwise_sum() {
        let omegas = [0.1, -0.4, 0.9, 1.3, -2.0];
        let thetas = [0.2, 2.4, -1.1, 5.0, 3.3];
        let p = ModelParams::from_omegas(omegas.to_vec(), 1.7).unwrap();
        let fast = kuramoto_rhs(&p, &PhaseState::new(thetas.to_vec())).unwrap();
        for (a, b) in fast.iter().zip(brute_rhs(&omegas, 1.7, &thetas)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn complex_examples() {
        let p = ModelParams::from_omegas(vec![1.5], 2.0).unwrap();
        let z = [Complex64::from_polar(1.0, 0.4)];
        let v = kuramoto_rhs_complex(&p, &z).unwrap();
        assert_abs_diff_eq!((v[0] - Complex64::i() * 1.5 * z[0]).norm(), 0.0, epsilon = 1e-15);

        let p = ModelParams::from_omegas(vec![0.5, 1.0, -2.0], 0.0).unwrap();
        let z: Vec<_> = [0.1, 2.0, -0.7].iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        let v = kuramoto_rhs_complex(&p, &z).unwrap();
        for ((vj, zj), w) in v.iter().zip(&z).zip(p.omegas()) {
            assert_eq!(*vj, Complex64::i() * zj * w);
        }

        let bad = [Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(matches!(kuramoto_rhs_complex(&p, &bad), Err(Error::NonUnimodularInput { index: 0, .. })));
    }

    #[test]
    fn complex_matches_angular() {
        let omegas = vec![0.3, -0.8, 1.4, 0.0, 2.2];
        let thetas = vec![0.5, -2.0, 1.0, 3.0, 4.5];
        let p = ModelParams::from_omegas(omegas, 1.3).unwrap();
        let state = PhaseState::new(thetas);
        let ang = kuramoto_rhs(&p, &state).unwrap();
        let z = state.to_complex();
        let cplx = kuramoto_rhs_complex(&p, &z).unwrap();
        for ((c, a), zj) in cplx.iter().zip(&ang).zip(&z) {
            assert!((c - Complex64::i() * zj * a).norm() < 1e-10);
        }
    }

    #[test]
    fn spin_examples() {
        let p = ModelParams::from_omegas(vec![0.5, -1.0, 2.0], 1.5).unwrap();
        let poles = SpinConfiguration::from_vectors(vec![e3(); 3]).unwrap();
        for v in spin_rhs(&p, &poles).unwrap() {
            assert_eq!(v.norm(), 0.0);
        }

        let planar = PhaseState::new(vec![0.3, 1.9, -2.5]).to_spin();
        let v = spin_rhs(&p, &planar).unwrap();
        for (vj, sj) in v.iter().zip(&planar.spins) {
            assert_eq!(vj.z, 0.0);
            assert!(vj.dot(sj).abs() < 1e-12);
        }

        // projection onto e3 x S_j gives the angular speed
        let p = ModelParams::from_omegas(vec![0.0, 0.0], 2.0).unwrap();
        let s = PhaseState::new(vec![0.0, PI / 2.0]).to_spin();
        let v = spin_rhs(&p, &s).unwrap();
        let speeds: Vec<f64> = v.iter().zip(&s.spins).map(|(vj, sj)| vj.dot(&e3().cross(sj))).collect();
        assert_abs_diff_eq!(speeds[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(speeds[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn free_rotation() {
        let p = ModelParams::from_omegas(vec![0.3, -1.1, 2.0], 0.0).unwrap();
        let init = PhaseState::new(vec![0.1, 0.2, 0.3]);
        let cfg = IntegratorConfig::adaptive(10.0, 1.0);
        let traj = integrate_phases(&p, &init, &cfg, &[]).unwrap();
        let (t, last) = traj.last().unwrap();
        for ((th, th0), w) in last.thetas.iter().zip(&init.thetas).zip(p.omegas()) {
            assert_abs_diff_eq!(*th, th0 + w * t, epsilon = 1e-9);
        }
    }

    #[test]
    fn two_oscillators_lock_at_arcsin() {
        let p = ModelParams::from_omegas(vec![0.5, -0.5], 2.0).unwrap();
        let cfg = IntegratorConfig::adaptive(40.0, 0.5).with_tolerance(1e-11);
        let traj = integrate_phases(&p, &PhaseState::new(vec![0.0, 0.0]), &cfg, &[observers::phase_difference(0, 1)])
            .unwrap();
        let d = *traj.real("delta_0_1").unwrap().last().unwrap();
        assert_abs_diff_eq!(d, 0.5f64.asin(), epsilon = 1e-8);
        assert!(is_converged(&p, &traj, DEFAULT_CONVERGENCE_WINDOW, DEFAULT_CONVERGENCE_TOL).unwrap());
    }

    #[test]
    fn identical_frequencies_monotone_order() {
        let p = ModelParams::from_omegas(vec![1.0; 6], 0.8).unwrap();
        let init = PhaseState::new(vec![0.0, 1.0, 2.1, 3.5, 4.0, 5.9]);
        let cfg = IntegratorConfig::adaptive(40.0, 0.1);
        let traj = integrate_phases(&p, &init, &cfg, &[observers::order_modulus()]).unwrap();
        let r = traj.real("r_mod").unwrap();
        for w in r.windows(2) {
            assert!(w[1] >= w[0] - 1e-8);
        }
    }

    #[test]
    fn renormalized_spins_stay_unit() {
        let p = ModelParams::from_omegas(vec![0.4, -0.2, 1.0], 1.0).unwrap();
        let init = SpinConfiguration::from_vectors(vec![
            Vec3::new(1.0, 0.2, 0.5),
            Vec3::new(-0.3, 1.0, -0.4),
            Vec3::new(0.1, -0.2, 1.0),
        ])
        .unwrap();
        let cfg = IntegratorConfig::rk4(0.05, 20.0, 1.0).with_renormalize(true);
        let traj = integrate_spins(&p, &init, &cfg, &[observers::max_norm_defect()]).unwrap();
        assert!(traj.real("norm_defect").unwrap().iter().all(|d| *d < 1e-14));
    }
}
