//! Perturbations around synchronized states: the planar Heisenberg-type
//! perturbation energy, the halved Pauli algebra, and the semiclassical
//! first-order Hamiltonian
//! `H1 = sum_j 2 eps_j t_j^(3) - g |J^-|^2`, `J^- = sum_j (t_j^(1), t_j^(2), 0)`,
//! which is the classical limit of the Richardson-Gaudin pairing model with
//! spectrum `eps_j = omega_j - Omega` and coupling `g = lambda/N`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::analysis::SyncSolution;
use crate::dynamics::ModelParams;
use crate::error::{check_len, Error, Result};
use crate::state::{e3, mean_field, Vec3};

pub const PSEUDO_SPIN_RADIUS: f64 = 0.5;

/// Pseudo-spins of radius one half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoSpinConfig {
    taus: Vec<Vec3>,
}

impl PseudoSpinConfig {
    pub fn new(taus: Vec<Vec3>) -> Result<Self> {
        for (i, t) in taus.iter().enumerate() {
            if (t.norm() - PSEUDO_SPIN_RADIUS).abs() > 1e-12 {
                return Err(Error::InvalidParameter {
                    field: "taus",
                    reason: format!("|t_{i}| = {} is not 1/2", t.norm()),
                });
            }
        }
        Ok(Self { taus })
    }

    /// Scales arbitrary nonzero vectors onto the radius-1/2 sphere.
    pub fn from_directions(dirs: &[Vec3]) -> Result<Self> {
        Self::new(dirs.iter().map(|d| d.normalize() * PSEUDO_SPIN_RADIUS).collect())
    }

    /// From polar angles (from `e3`) and azimuths.
    pub fn from_angles(polar: &[f64], azimuth: &[f64]) -> Result<Self> {
        check_len(polar.len(), azimuth.len())?;
        Self::new(
            polar
                .iter()
                .zip(azimuth)
                .map(|(th, ph)| {
                    PSEUDO_SPIN_RADIUS * Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos())
                })
                .collect(),
        )
    }

    pub fn taus(&self) -> &[Vec3] {
        &self.taus
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// `J^- = sum_j (t^(1), t^(2), 0)`.
    pub fn planar_sum(&self) -> Vec3 {
        self.taus.iter().fold(Vec3::zeros(), |a, t| a + Vec3::new(t.x, t.y, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichardsonParams {
    pub epsilons: Vec<f64>,
    pub g: f64,
}

impl RichardsonParams {
    pub fn new(epsilons: Vec<f64>, g: f64) -> Result<Self> {
        let sum: f64 = epsilons.iter().sum();
        let scale = epsilons.iter().map(|e| e.abs()).sum::<f64>().max(1.0);
        if sum.abs() > 1e-12 * scale {
            return Err(Error::InvalidParameter { field: "epsilons", reason: format!("spectrum sums to {sum}, not 0") });
        }
        Ok(Self { epsilons, g })
    }

    pub fn n(&self) -> usize {
        self.epsilons.len()
    }
}

/// `eps_j = omega_j - Omega`, `g = lambda/N`.
pub fn richardson_map(params: &ModelParams) -> RichardsonParams {
    RichardsonParams { epsilons: params.freqs.deviations(), g: params.lambda / params.n() as f64 }
}

/// `h = -lambda sum_j J . sigma*_j` for in-plane perturbations
/// `sigma_j = a_j S_j x e3` of the base state `S_j = (cos phi_j, sin phi_j, 0)`.
/// The dual pseudo-spin `sigma*_j = e3 x sigma_j = a_j S_j` inverts the
/// spin-to-momentum map. Amplitudes `a_j` are signed.
pub fn heisenberg_perturbation(params: &ModelParams, base: &SyncSolution, amplitudes: &[f64]) -> Result<f64> {
    check_len(params.n(), base.phis.len())?;
    check_len(base.phis.len(), amplitudes.len())?;
    let e = e3();
    let spins: Vec<Vec3> = base.phis.iter().map(|p| Vec3::new(p.cos(), p.sin(), 0.0)).collect();
    let j = mean_field(&spins);
    Ok(-params.lambda
        * spins
            .iter()
            .zip(amplitudes)
            .map(|(s, &a)| {
                let sigma = a * s.cross(&e);
                j.dot(&e.cross(&sigma))
            })
            .sum::<f64>())
}

/// Halved Pauli matrices `sigma_a / 2`.
pub fn spin_half_matrices() -> [Matrix2<Complex64>; 3] {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let z = c(0.0, 0.0);
    [
        Matrix2::new(z, c(0.5, 0.0), c(0.5, 0.0), z),
        Matrix2::new(z, c(0.0, -0.5), c(0.0, 0.5), z),
        Matrix2::new(c(0.5, 0.0), z, z, c(-0.5, 0.0)),
    ]
}

fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Largest elementwise deviation from
/// `s_a s_b = (1/4) delta_ab I + (i/2) eps_abc s_c` and
/// `[s_a, s_b] = i eps_abc s_c` over all index pairs.
pub fn pauli_structure_check() -> f64 {
    let s = spin_half_matrices();
    let id = Matrix2::<Complex64>::identity();
    let i = Complex64::i();
    let mut worst = 0.0f64;
    for a in 0..3 {
        for b in 0..3 {
            let mut product = id * Complex64::new(if a == b { 0.25 } else { 0.0 }, 0.0);
            let mut commutator = Matrix2::<Complex64>::zeros();
            for c in 0..3 {
                let e = levi_civita(a, b, c);
                product += s[c] * (i * 0.5 * e);
                commutator += s[c] * (i * e);
            }
            let d1 = s[a] * s[b] - product;
            let d2 = s[a] * s[b] - s[b] * s[a] - commutator;
            for v in d1.iter().chain(d2.iter()) {
                worst = worst.max(v.norm());
            }
        }
    }
    worst
}

pub fn gaudin_h1(rp: &RichardsonParams, config: &PseudoSpinConfig) -> Result<f64> {
    check_len(rp.n(), config.len())?;
    let tilt: f64 = rp.epsilons.iter().zip(config.taus()).map(|(e, t)| 2.0 * e * t.z).sum();
    Ok(tilt - rp.g * config.planar_sum().norm_squared())
}

/// Gradient of `H1` with respect to each `t_j` in the ambient space.
pub fn gaudin_gradient(rp: &RichardsonParams, config: &PseudoSpinConfig) -> Result<Vec<Vec3>> {
    check_len(rp.n(), config.len())?;
    let jm = config.planar_sum();
    Ok(rp.epsilons.iter().map(|e| 2.0 * e * e3() - 2.0 * rp.g * jm).collect())
}

/// Energy of the all-planar aligned ansatz, `-g N^2 / 4`.
pub fn planar_ansatz_energy(rp: &RichardsonParams) -> f64 {
    let n = rp.n() as f64;
    -rp.g * n * n / 4.0
}

pub const DEFAULT_RESTARTS: usize = 32;
pub const DEFAULT_STEPS: usize = 1000;

/// Projected gradient descent on the product of radius-1/2 spheres with
/// random restarts; returns the lowest configuration found. The step is
/// unbounded when `g >= 0`. Restarts run concurrently with independent
/// streams derived from `seed`.
pub fn minimize_h1(rp: &RichardsonParams, restarts: usize, steps: usize, seed: u64) -> Result<(PseudoSpinConfig, f64)> {
    if restarts == 0 || steps == 0 {
        return Err(Error::InvalidParameter { field: "restarts/steps", reason: "must be >= 1".into() });
    }
    if rp.n() == 0 {
        return Err(Error::InsufficientData("empty spectrum".into()));
    }
    let results = crate::par::map_indexed(restarts, |k| descend(rp, steps, seed, k as u64));
    results
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::InsufficientData("no restarts".into()))
}

fn descend(rp: &RichardsonParams, steps: usize, seed: u64, stream: u64) -> Result<(PseudoSpinConfig, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let dirs: Vec<Vec3> = (0..rp.n())
        .map(|_| loop {
            let v = Vec3::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            );
            if v.norm() > 1e-8 {
                break v;
            }
        })
        .collect();
    let mut config = PseudoSpinConfig::from_directions(&dirs)?;
    let max_eps = rp.epsilons.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let eta = 0.25 / (2.0 * max_eps + rp.g.abs() * rp.n() as f64 + 1e-12);
    for _ in 0..steps {
        let grad = gaudin_gradient(rp, &config)?;
        let taus: Vec<Vec3> = config
            .taus()
            .iter()
            .zip(&grad)
            .map(|(t, gr)| {
                // H1 is concave for g >= 0: the infinite-step limit
                // `t -> -r grad/|grad|` minimizes its linearization and
                // never raises the energy.
                let next = if rp.g >= 0.0 {
                    if gr.norm() < 1e-300 {
                        return *t;
                    }
                    -gr
                } else {
                    let radial = t * (gr.dot(t) / t.norm_squared());
                    t - eta * (gr - radial)
                };
                next / next.norm() * PSEUDO_SPIN_RADIUS
            })
            .collect();
        let moved = taus.iter().zip(config.taus()).fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
        config = PseudoSpinConfig { taus };
        if moved == 0.0 {
            break;
        }
    }
    let energy = gaudin_h1(rp, &config)?;
    Ok((config, energy))
}
