//! Domain types: natural frequencies, angular states, spin configurations
//! and the order parameter, together with the planar embedding that maps
//! phases onto unit spins in the plane perpendicular to `e3`.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Tolerance used for planarity and unit-norm preconditions.
pub const GEOMETRY_TOL: f64 = 1e-9;

#[inline]
pub fn e3() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

/// Wraps an angle to `(-pi, pi]`.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Natural frequencies of the oscillators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySpec {
    omegas: Vec<f64>,
}

impl FrequencySpec {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidParameter {
                field: "omegas",
                reason: "at least one oscillator is required".into(),
            });
        }
        if let Some(bad) = omegas.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "omegas",
                reason: format!("non-finite frequency {bad}"),
            });
        }
        Ok(Self { omegas })
    }

    /// `n` oscillators sharing the frequency `omega`.
    pub fn identical(n: usize, omega: f64) -> Result<Self> {
        Self::new(vec![omega; n])
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Mean frequency `Omega`.
    pub fn mean(&self) -> f64 {
        self.omegas.iter().sum::<f64>() / self.len() as f64
    }

    /// Population variance `(1/N) sum (omega_j - Omega)^2`.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.omegas.iter().map(|w| (w - m).powi(2)).sum::<f64>() / self.len() as f64
    }

    /// Detunings `omega_j - Omega`.
    pub fn deviations(&self) -> Vec<f64> {
        let m = self.mean();
        self.omegas.iter().map(|w| w - m).collect()
    }

    pub fn max_abs_deviation(&self) -> f64 {
        self.deviations().iter().fold(0.0, |a, d| a.max(d.abs()))
    }
}

/// Oscillator phases, stored unwrapped on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub thetas: Vec<f64>,
}

impl PhaseState {
    pub fn new(thetas: Vec<f64>) -> Self {
        Self { thetas }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn wrapped(&self) -> Vec<f64> {
        self.thetas.iter().map(|&t| wrap_angle(t)).collect()
    }

    /// `z_j = exp(i theta_j)`.
    pub fn to_complex(&self) -> Vec<Complex64> {
        self.thetas.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
    }

    pub fn order_parameter(&self) -> OrderParameter {
        OrderParameter::from_complex(complex_mean(&self.to_complex()))
    }

    /// Planar embedding `S_j = (cos theta_j, sin theta_j, 0)` with dual
    /// momenta `P_j = S_j x e3`.
    pub fn to_spin(&self) -> SpinConfiguration {
        SpinConfiguration::planar(&self.thetas)
    }
}

/// Mean of a slice of complex numbers.
pub fn complex_mean(z: &[Complex64]) -> Complex64 {
    z.iter().sum::<Complex64>() / z.len() as f64
}

/// Classical spins with optional dual momenta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinConfiguration {
    pub spins: Vec<Vec3>,
    pub momenta: Option<Vec<Vec3>>,
}

impl SpinConfiguration {
    /// Normalizes every input vector onto the unit sphere.
    pub fn from_vectors(vectors: Vec<Vec3>) -> Result<Self> {
        let spins = vectors
            .into_iter()
            .enumerate()
            .map(|(index, v)| {
                let norm = v.norm();
                if !(norm.is_finite() && norm > 0.0) {
                    Err(Error::NonUnitSpin { index, norm })
                } else {
                    Ok(v / norm)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spins, momenta: None })
    }

    /// Takes the vectors as given, without normalization.
    pub fn from_raw(spins: Vec<Vec3>) -> Self {
        Self { spins, momenta: None }
    }

    pub fn planar(thetas: &[f64]) -> Self {
        let spins: Vec<Vec3> = thetas
            .iter()
            .map(|&t| Vec3::new(t.cos(), t.sin(), 0.0))
            .collect();
        let momenta = spins.iter().map(dual_momentum).collect();
        Self { spins, momenta: Some(momenta) }
    }

    /// Attaches `P_j = S_j x e3` to every spin.
    pub fn with_dual_momenta(mut self) -> Self {
        self.momenta = Some(self.spins.iter().map(dual_momentum).collect());
        self
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// Mean field `J = (1/N) sum S_k`.
    pub fn mean_field(&self) -> Vec3 {
        mean_field(&self.spins)
    }

    pub fn order_parameter(&self) -> OrderParameter {
        OrderParameter::from_vector(self.mean_field())
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.spins.iter().fold(0.0, |a, s| a.max((s.norm() - 1.0).abs()))
    }

    pub fn max_out_of_plane(&self) -> f64 {
        self.spins.iter().fold(0.0, |a, s| a.max(s.z.abs()))
    }

    pub fn is_planar(&self) -> bool {
        self.max_out_of_plane() < GEOMETRY_TOL
    }

    /// Planar angles of the spins. Fails when any spin leaves the plane or
    /// the unit sphere.
    pub fn to_phase(&self) -> Result<PhaseState> {
        let thetas = self
            .spins
            .iter()
            .enumerate()
            .map(|(index, s)| {
                if s.z.abs() >= GEOMETRY_TOL {
                    return Err(Error::NonPlanarInput { index, z: s.z });
                }
                let norm = s.norm();
                if (norm - 1.0).abs() >= GEOMETRY_TOL {
                    return Err(Error::NonUnitSpin { index, norm });
                }
                Ok(s.y.atan2(s.x))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PhaseState::new(thetas))
    }
}

pub fn mean_field(spins: &[Vec3]) -> Vec3 {
    spins.iter().fold(Vec3::zeros(), |a, s| a + s) / spins.len() as f64
}

#[inline]
pub fn dual_momentum(s: &Vec3) -> Vec3 {
    s.cross(&e3())
}

/// Complex order parameter `r = |r| exp(i theta0)` and its spin analogue `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderParameter {
    pub r_complex: Complex64,
    pub j_vector: Vec3,
    pub modulus: f64,
    pub theta0: f64,
}

impl OrderParameter {
    pub fn from_complex(r: Complex64) -> Self {
        Self {
            r_complex: r,
            j_vector: Vec3::new(r.re, r.im, 0.0),
            modulus: r.norm(),
            theta0: r.arg(),
        }
    }

    /// The in-plane components give `r`; the modulus is the full `|J|`.
    pub fn from_vector(j: Vec3) -> Self {
        let r = Complex64::new(j.x, j.y);
        Self { r_complex: r, j_vector: j, modulus: j.norm(), theta0: r.arg() }
    }
}
