//! Lagrangian and Hamiltonian structures of the spin model, their
//! equations of motion, and the mixed-partial test for a potential of the
//! original angular second-order system.

use crate::dynamics::ModelParams;
use crate::error::{check_len, Error, Result};
use crate::state::{dual_momentum, e3, mean_field, SpinConfiguration, Vec3};

/// Spins and their conjugate momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpacePoint {
    pub spins: Vec<Vec3>,
    pub momenta: Vec<Vec3>,
}

impl PhaseSpacePoint {
    pub fn new(spins: Vec<Vec3>, momenta: Vec<Vec3>) -> Result<Self> {
        check_len(spins.len(), momenta.len())?;
        Ok(Self { spins, momenta })
    }

    /// Planar unit spins with `P_j = S_j x e3`.
    pub fn planar(thetas: &[f64]) -> Self {
        Self::from_spins(SpinConfiguration::planar(thetas).spins)
    }

    /// Attaches dual momenta to arbitrary spins.
    pub fn from_spins(spins: Vec<Vec3>) -> Self {
        let momenta = spins.iter().map(dual_momentum).collect();
        Self { spins, momenta }
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }
}

/// `L = sum_j { e3.(S_j' x S_j) - omega_j |S_j|^2 + lambda (e3 x [(J x S_j) x S_j]).S_j }`.
pub fn lagrangian(params: &ModelParams, spins: &[Vec3], spin_rates: &[Vec3]) -> Result<f64> {
    check_len(params.n(), spins.len())?;
    check_len(spins.len(), spin_rates.len())?;
    let e = e3();
    let j = mean_field(spins);
    Ok(spins
        .iter()
        .zip(spin_rates)
        .zip(params.omegas())
        .map(|((s, v), &w)| {
            let kinetic = e.dot(&v.cross(s));
            let potential = -w * s.norm_squared();
            let interaction = params.lambda * e.cross(&j.cross(s).cross(s)).dot(s);
            kinetic + potential + interaction
        })
        .sum())
}

/// Residual of the stationarity condition of the action,
/// `S' - P3 S' - omega e3 x S - lambda S x [P3 (J x S)]`, per spin.
/// `P3` projects onto `e3`.
pub fn euler_lagrange_residual(
    params: &ModelParams,
    spins: &[Vec3],
    spin_rates: &[Vec3],
) -> Result<Vec<Vec3>> {
    check_len(params.n(), spins.len())?;
    check_len(spins.len(), spin_rates.len())?;
    let e = e3();
    let proj = |v: &Vec3| e * e.dot(v);
    let j = mean_field(spins);
    Ok(spins
        .iter()
        .zip(spin_rates)
        .zip(params.omegas())
        .map(|((s, v), &w)| {
            v - proj(v) - w * e.cross(s) - params.lambda * s.cross(&proj(&j.cross(s)))
        })
        .collect())
}

/// Time derivatives of sampled spins by fourth-order central differences
/// on a uniform grid. The two samples at each end use second-order
/// one-sided stencils.
pub fn spin_rates_from_samples(dt: f64, samples: &[Vec<Vec3>]) -> Result<Vec<Vec<Vec3>>> {
    let m = samples.len();
    if m < 5 {
        return Err(Error::InsufficientData(format!("need >= 5 samples, got {m}")));
    }
    let n = samples[0].len();
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let rate = (0..n)
            .map(|i| {
                let s = |d: isize| samples[(k as isize + d) as usize][i];
                if k >= 2 && k + 2 < m {
                    (s(-2) - 8.0 * s(-1) + 8.0 * s(1) - s(2)) / (12.0 * dt)
                } else if k < 2 {
                    (-3.0 * s(0) + 4.0 * s(1) - s(2)) / (2.0 * dt)
                } else {
                    (3.0 * s(0) - 4.0 * s(-1) + s(-2)) / (2.0 * dt)
                }
            })
            .collect();
        out.push(rate);
    }
    Ok(out)
}

/// `H = sum_j { -(omega_j/2)(|S_j|^2 + |P_j|^2) + lambda (J x S_j).(P_j x S_j) }`.
pub fn hamiltonian(params: &ModelParams, point: &PhaseSpacePoint) -> Result<f64> {
    check_len(params.n(), point.len())?;
    check_len(point.spins.len(), point.momenta.len())?;
    let j = mean_field(&point.spins);
    Ok(point
        .spins
        .iter()
        .zip(&point.momenta)
        .zip(params.omegas())
        .map(|((s, p), &w)| {
            -0.5 * w * (s.norm_squared() + p.norm_squared())
                + params.lambda * j.cross(s).dot(&p.cross(s))
        })
        .sum())
}

/// Hamiltonian of a spin configuration, using its momenta when present and
/// the dual momenta `S_j x e3` otherwise.
pub fn hamiltonian_of_spins(params: &ModelParams, config: &SpinConfiguration) -> Result<f64> {
    let momenta = match &config.momenta {
        Some(m) => m.clone(),
        None => config.spins.iter().map(dual_momentum).collect(),
    };
    hamiltonian(params, &PhaseSpacePoint::new(config.spins.clone(), momenta)?)
}

/// Analytic partial derivatives `(dH/dS_j, dH/dP_j)`. The dependence of
/// `J` on every spin, including the `1/N` self term, is kept exactly.
pub fn hamiltonian_gradients(
    params: &ModelParams,
    point: &PhaseSpacePoint,
) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    check_len(params.n(), point.len())?;
    check_len(point.spins.len(), point.momenta.len())?;
    let n = point.len() as f64;
    let lambda = params.lambda;
    let j = mean_field(&point.spins);
    // derivative through J: (1/N) sum_k S_k x (P_k x S_k)
    let field_term = point
        .spins
        .iter()
        .zip(&point.momenta)
        .fold(Vec3::zeros(), |a, (s, p)| a + s.cross(&p.cross(s)))
        / n;
    let mut d_s = Vec::with_capacity(point.len());
    let mut d_p = Vec::with_capacity(point.len());
    for ((s, p), &w) in point.spins.iter().zip(&point.momenta).zip(params.omegas()) {
        d_s.push(
            -w * s + lambda * (p.cross(s).cross(&j) + j.cross(s).cross(p)) + lambda * field_term,
        );
        d_p.push(-w * p + lambda * s.cross(&j.cross(s)));
    }
    Ok((d_s, d_p))
}

/// Hamilton's equations `S' = dH/dP`, `P' = -dH/dS`.
pub fn hamilton_rhs(params: &ModelParams, point: &PhaseSpacePoint) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    let (d_s, d_p) = hamiltonian_gradients(params, point)?;
    Ok((d_p, d_s.into_iter().map(|v| -v).collect()))
}

/// `sum_j S_j . (e3 x S_j)`, identically zero.
pub fn self_dual_sum(spins: &[Vec3]) -> f64 {
    let e = e3();
    spins.iter().map(|s| s.dot(&e.cross(s))).sum()
}

/// Maximum deviation between analytic and finite-difference gradients of
/// `H`, per block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_err_spins: f64,
    pub max_err_momenta: f64,
}

impl GradientCheck {
    pub fn max(&self) -> f64 {
        self.max_err_spins.max(self.max_err_momenta)
    }
}

/// Compares `hamiltonian_gradients` against central differences of
/// `hamiltonian`, refined by one Richardson extrapolation step when
/// `richardson` is set.
pub fn gradient_check(
    params: &ModelParams,
    point: &PhaseSpacePoint,
    h: f64,
    richardson: bool,
) -> Result<GradientCheck> {
    let (d_s, d_p) = hamiltonian_gradients(params, point)?;
    let central = |which: usize, i: usize, c: usize, h: f64| -> Result<f64> {
        let mut plus = point.clone();
        let mut minus = point.clone();
        let (vp, vm) = if which == 0 {
            (&mut plus.spins[i], &mut minus.spins[i])
        } else {
            (&mut plus.momenta[i], &mut minus.momenta[i])
        };
        vp[c] += h;
        vm[c] -= h;
        Ok((hamiltonian(params, &plus)? - hamiltonian(params, &minus)?) / (2.0 * h))
    };
    let numeric = |which, i, c| -> Result<f64> {
        let d1 = central(which, i, c, h)?;
        if richardson {
            let d2 = central(which, i, c, h / 2.0)?;
            Ok((4.0 * d2 - d1) / 3.0)
        } else {
            Ok(d1)
        }
    };
    let mut out = GradientCheck { max_err_spins: 0.0, max_err_momenta: 0.0 };
    for i in 0..point.len() {
        for c in 0..3 {
            out.max_err_spins = out.max_err_spins.max((numeric(0, i, c)? - d_s[i][c]).abs());
            out.max_err_momenta = out.max_err_momenta.max((numeric(1, i, c)? - d_p[i][c]).abs());
        }
    }
    Ok(out)
}

/// The field a potential `Phi(theta)` would need as its gradient for the
/// differentiated angular equations to be Euler-Lagrange equations:
/// `(lambda/N) sum_k cos(D_kj)[omega_k - omega_j + (lambda/N) sum_l (sin D_lk - sin D_lj)]`
/// with `D_ab = theta_a - theta_b`.
pub fn candidate_potential_gradient(params: &ModelParams, thetas: &[f64], j: usize) -> Result<f64> {
    check_len(params.n(), thetas.len())?;
    let n = thetas.len();
    let k_n = params.lambda / n as f64;
    let w = params.omegas();
    let sum_sin_from = |a: usize| -> f64 { thetas.iter().map(|tl| (tl - thetas[a]).sin()).sum() };
    let s_j = sum_sin_from(j);
    Ok(k_n
        * (0..n)
            .map(|k| (thetas[k] - thetas[j]).cos() * (w[k] - w[j] + k_n * (sum_sin_from(k) - s_j)))
            .sum::<f64>())
}

fn check_pair(n: usize, j: usize, q: usize) -> Result<()> {
    if j == q {
        return Err(Error::SameIndex(j));
    }
    for idx in [j, q] {
        if idx >= n {
            return Err(Error::InvalidParameter {
                field: "index",
                reason: format!("{idx} out of range for N = {n}"),
            });
        }
    }
    Ok(())
}

/// Closed-form mixed-partial asymmetry
/// `(lambda/N)^2 cos(D_qj) sum_k [cos(D_kj) - cos(D_kq)]`.
pub fn curl_mismatch_closed_form(params: &ModelParams, thetas: &[f64], j: usize, q: usize) -> Result<f64> {
    check_len(params.n(), thetas.len())?;
    check_pair(thetas.len(), j, q)?;
    let k_n = params.lambda / thetas.len() as f64;
    let bracket: f64 = thetas
        .iter()
        .map(|tk| (tk - thetas[j]).cos() - (tk - thetas[q]).cos())
        .sum();
    Ok(k_n * k_n * (thetas[q] - thetas[j]).cos() * bracket)
}

/// Central-difference estimate of `d_q G_j - d_j G_q` for the candidate
/// gradient `G` of [`candidate_potential_gradient`].
pub fn curl_mismatch_numeric(params: &ModelParams, thetas: &[f64], j: usize, q: usize, h: f64) -> Result<f64> {
    check_len(params.n(), thetas.len())?;
    check_pair(thetas.len(), j, q)?;
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::InvalidParameter { field: "h", reason: format!("{h} outside [1e-6, 1e-3]") });
    }
    let partial = |component: usize, wrt: usize| -> Result<f64> {
        let mut plus = thetas.to_vec();
        let mut minus = thetas.to_vec();
        plus[wrt] += h;
        minus[wrt] -= h;
        Ok((candidate_potential_gradient(params, &plus, component)?
            - candidate_potential_gradient(params, &minus, component)?)
            / (2.0 * h))
    };
    Ok(partial(j, q)? - partial(q, j)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::spin_rhs;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn params(omegas: &[f64], lambda: f64) -> ModelParams {
        ModelParams::from_omegas(omegas.to_vec(), lambda).unwrap()
    }

    #[test]
    fn lagrangian_examples() {
        let p = params(&[0.5, 1.5, -0.25], 2.0);
        let poles = vec![e3(); 3];
        let rest = vec![Vec3::zeros(); 3];
        assert_abs_diff_eq!(lagrangian(&p, &poles, &rest).unwrap(), -1.75, epsilon = 1e-15);

        let p0 = params(&[0.5, 1.5, -0.25], 0.0);
        let planar = PhaseSpacePoint::planar(&[0.1, 2.0, -1.0]).spins;
        assert_abs_diff_eq!(lagrangian(&p0, &planar, &rest).unwrap(), -1.75, epsilon = 1e-15);

        // kinetic term is linear in the rates
        let rates: Vec<Vec3> = vec![Vec3::new(0.3, -0.1, 0.2), Vec3::new(-1.0, 0.5, 0.0), Vec3::new(0.0, 0.7, 1.0)];
        let doubled: Vec<Vec3> = rates.iter().map(|v| 2.0 * v).collect();
        let base = lagrangian(&p, &planar, &rest).unwrap();
        let l1 = lagrangian(&p, &planar, &rates).unwrap() - base;
        let l2 = lagrangian(&p, &planar, &doubled).unwrap() - base;
        assert_abs_diff_eq!(l2, 2.0 * l1, epsilon = 1e-14);
        assert!(lagrangian(&p, &planar[..2], &rest[..2]).is_err());
    }

    #[test]
    fn residual_vanishes_on_equations_of_motion() {
        let p = params(&[0.4, -0.3, 1.0, 0.2], 1.3);
        let point = PhaseSpacePoint::planar(&[0.2, 1.5, -2.0, 3.0]);
        let cfg = SpinConfiguration::from_raw(point.spins.clone());
        let rates = spin_rhs(&p, &cfg).unwrap();
        for r in euler_lagrange_residual(&p, &point.spins, &rates).unwrap() {
            assert!(r.norm() < 1e-14);
        }
        // aligned equal-frequency state in the co-rotating frame
        let p = params(&[0.0; 3], 1.0);
        let aligned = vec![Vec3::x(); 3];
        for r in euler_lagrange_residual(&p, &aligned, &vec![Vec3::zeros(); 3]).unwrap() {
            assert_eq!(r.norm(), 0.0);
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let p = params(&[0.5, -1.0, 2.0], 1.7);
        let point = PhaseSpacePoint::planar(&[0.3, 2.0, -1.1]);
        assert_abs_diff_eq!(hamiltonian(&p, &point).unwrap(), -1.5, epsilon = 1e-14);

        let p1 = params(&[0.8], 3.0);
        assert_abs_diff_eq!(hamiltonian(&p1, &PhaseSpacePoint::planar(&[1.0])).unwrap(), -0.8, epsilon = 1e-15);

        assert!(PhaseSpacePoint::new(vec![Vec3::x()], vec![]).is_err());
    }

    #[test]
    fn hamilton_matches_spin_equations_on_planar_points() {
        let p = params(&[0.4, -0.3, 1.0, 0.2, -1.5], 0.9);
        let point = PhaseSpacePoint::planar(&[0.2, 1.5, -2.0, 3.0, 0.7]);
        let (s_dot, _) = hamilton_rhs(&p, &point).unwrap();
        let cfg = SpinConfiguration::from_raw(point.spins.clone());
        for (a, b) in s_dot.iter().zip(spin_rhs(&p, &cfg).unwrap()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn pole_spins_keep_free_momentum_term() {
        let p = params(&[0.7, -0.4], 2.0);
        let point = PhaseSpacePoint::new(vec![e3(); 2], vec![Vec3::x(), Vec3::y()]).unwrap();
        let (_, d_p) = hamiltonian_gradients(&p, &point).unwrap();
        assert_abs_diff_eq!((d_p[0] + 0.7 * Vec3::x()).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((d_p[1] - 0.4 * Vec3::y()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = params(&[0.4, -0.3, 1.0], 1.1);
        let point = PhaseSpacePoint::new(
            vec![Vec3::new(0.3, -0.5, 0.8), Vec3::new(1.0, 0.2, -0.1), Vec3::new(-0.4, 0.9, 0.3)],
            vec![Vec3::new(0.2, 0.1, -0.7), Vec3::new(0.0, -1.0, 0.4), Vec3::new(0.6, 0.3, 0.2)],
        )
        .unwrap();
        assert!(gradient_check(&p, &point, 1e-5, true).unwrap().max() < 1e-8);
    }

    #[test]
    fn closed_form_examples() {
        let p = params(&[0.0; 3], 1.0);
        let v = curl_mismatch_closed_form(&p, &[0.0, PI / 3.0, PI], 0, 1).unwrap();
        assert_abs_diff_eq!(v, -1.0 / 36.0, epsilon = 1e-15);

        let v = curl_mismatch_closed_form(&p, &[0.0, PI / 2.0, 1.0], 0, 1).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-16);

        assert_eq!(curl_mismatch_closed_form(&p, &[0.4; 3], 0, 2).unwrap(), 0.0);
        assert_eq!(curl_mismatch_closed_form(&p, &[0.4; 3], 1, 1), Err(Error::SameIndex(1)));
        assert!(curl_mismatch_numeric(&p, &[0.4; 3], 0, 1, 1e-2).is_err());
        assert_eq!(curl_mismatch_numeric(&p, &[0.4; 3], 2, 2, 1e-4), Err(Error::SameIndex(2)));
    }

    #[test]
    fn dual_sum_vanishes() {
        let spins = vec![Vec3::new(0.3, -2.0, 1.0), Vec3::new(5.0, 0.1, -0.2)];
        assert_eq!(self_dual_sum(&spins), 0.0);
    }
}
