//! Invariant suites behind `kuramoto verify`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use kuramoto_core::algebra::{antisym_form, antisym_with_real, jacobi_sum, sym_form};
use kuramoto_core::analysis::{asymptotic_j, coupling_bounds, solve_self_consistent_j};
use kuramoto_core::dynamics::{integrate_phases, integrate_spins, observers};
use kuramoto_core::gaudin::{gaudin_h1, minimize_h1, pauli_structure_check, PseudoSpinConfig, RichardsonParams};
use kuramoto_core::random::{random_phases, rng, uniform_frequencies, SimRng};
use kuramoto_core::spinflip::{kink_analytic, measure_relaxation_rate, relaxation_rate, KinkParams, ReducedKink};
use kuramoto_core::state::wrap_angle;
use kuramoto_core::variational::{curl_mismatch_closed_form, curl_mismatch_numeric};
use kuramoto_core::{par, FrequencySpec, IntegratorConfig, Method, ModelParams, PhaseState, SpinConfiguration};

use crate::output::{Cell, Table};

pub const SUITES: &[&str] = &["algebra", "dynamics", "energy", "curl", "solver", "kink", "gaudin"];

pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub value: f64,
    /// `<= threshold` passes, or `>= threshold` when `at_least` is set.
    pub threshold: f64,
    pub at_least: bool,
}

impl Check {
    fn at_most(suite: &'static str, name: &'static str, value: f64, threshold: f64) -> Self {
        Self { suite, name, value, threshold, at_least: false }
    }

    fn at_least(suite: &'static str, name: &'static str, value: f64, threshold: f64) -> Self {
        Self { suite, name, value, threshold, at_least: true }
    }

    pub fn passed(&self) -> bool {
        if self.at_least {
            self.value >= self.threshold
        } else {
            self.value <= self.threshold
        }
    }
}

fn suite_rng(seed: u64, suite: usize) -> SimRng {
    let mut g = rng(seed);
    g.set_stream(16 + suite as u64);
    g
}

fn complex(g: &mut SimRng) -> Complex64 {
    Complex64::new(g.random_range(-1.0..1.0), g.random_range(-1.0..1.0))
}

fn tight(t_end: f64, sample_dt: f64) -> IntegratorConfig {
    let mut cfg = IntegratorConfig::adaptive(t_end, sample_dt);
    cfg.method = Method::Adaptive { rtol: 1e-12, atol: 1e-12 };
    cfg
}

fn algebra(g: &mut SimRng, samples: usize) -> Vec<Check> {
    let (mut anti, mut jac, mut hom, mut sym) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let (u, v, w) = (complex(g), complex(g), complex(g));
        let c: f64 = g.random_range(-2.0..2.0);
        anti = anti.max((antisym_form(u, v) + antisym_form(v, u)).abs());
        sym = sym.max((sym_form(u, v) - sym_form(v, u)).abs());
        jac = jac.max(jacobi_sum(u, v, w).abs());
        hom = hom.max((antisym_form(u * c, v) - c * antisym_form(u, v)).abs());
        hom = hom.max((antisym_with_real(u, c) - c * antisym_with_real(u, 1.0)).abs());
    }
    vec![
        Check::at_most("algebra", "antisymmetry", anti, 1e-12),
        Check::at_most("algebra", "symmetry", sym, 1e-12),
        Check::at_most("algebra", "jacobi", jac, 1e-10),
        Check::at_most("algebra", "homogeneity", hom, 1e-12),
        Check::at_most("algebra", "pauli_structure", pauli_structure_check(), 1e-15),
    ]
}

fn dynamics(g: &mut SimRng) -> Vec<Check> {
    let params = ModelParams::from_omegas(vec![0.5, -0.5], 2.0).expect("valid");
    let traj = integrate_phases(&params, &PhaseState::new(vec![0.0, 0.0]), &tight(60.0, 1.0), &[]).expect("runs");
    let last = &traj.last().expect("samples").1.thetas;
    let lock_err = (wrap_angle(last[0] - last[1]) - 0.5f64.asin()).abs();

    let mut worst_drop = 0.0f64;
    for _ in 0..10 {
        let n = g.random_range(2..12);
        let params = ModelParams::new(FrequencySpec::identical(n, 0.3).expect("n > 0"), g.random_range(0.2..3.0))
            .expect("valid");
        let traj = integrate_phases(&params, &random_phases(g, n), &tight(30.0, 0.1), &[observers::order_modulus()])
            .expect("runs");
        let r = traj.real("r_mod").expect("recorded");
        worst_drop = r.windows(2).fold(worst_drop, |a, w| a.max(w[0] - w[1]));
    }
    vec![
        Check::at_most("dynamics", "two_oscillator_lock_error", lock_err, 1e-6),
        Check::at_most("dynamics", "equal_frequency_r_decrease", worst_drop, 1e-8),
    ]
}

fn energy(g: &mut SimRng) -> Vec<Check> {
    let (mut e_err, mut norm, mut plane) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..5 {
        let n = g.random_range(2..10);
        let params =
            ModelParams::new(uniform_frequencies(g, n, -1.0, 1.0).expect("n > 0"), g.random_range(0.1..3.0))
                .expect("valid");
        let init = SpinConfiguration::planar(&random_phases(g, n).thetas);
        let obs = [observers::spin_energy(&params), observers::max_norm_defect(), observers::max_out_of_plane()];
        let traj = integrate_spins(&params, &init, &tight(100.0, 1.0), &obs).expect("runs");
        let total: f64 = params.omegas().iter().sum();
        e_err = traj.real("energy").expect("recorded").iter().fold(e_err, |a, h| a.max((h + total).abs()));
        norm = traj.real("norm_defect").expect("recorded").iter().fold(norm, |a, x| a.max(*x));
        plane = traj.real("out_of_plane").expect("recorded").iter().fold(plane, |a, x| a.max(*x));
    }
    vec![
        Check::at_most("energy", "max_abs_H_plus_sum_omega", e_err, 1e-8),
        Check::at_most("energy", "max_norm_drift", norm, 1e-8),
        Check::at_most("energy", "max_out_of_plane", plane, 1e-8),
    ]
}

/// The closed form is generically nonzero, but the candidate field is the
/// gradient of half the squared angular velocity, so the finite-difference
/// curl vanishes and the agreement check fails.
fn curl(g: &mut SimRng, samples: usize) -> Vec<Check> {
    let (mut nonzero, mut disagree, mut numeric_max) = (0usize, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let n = g.random_range(3..9);
        let params =
            ModelParams::new(uniform_frequencies(g, n, -1.0, 1.0).expect("n > 0"), g.random_range(0.5..2.0))
                .expect("valid");
        let thetas = random_phases(g, n).thetas;
        let j = g.random_range(0..n);
        let q = (j + g.random_range(1..n)) % n;
        let closed = curl_mismatch_closed_form(&params, &thetas, j, q).expect("valid pair");
        let numeric = curl_mismatch_numeric(&params, &thetas, j, q, 1e-4).expect("valid pair");
        if closed.abs() > 1e-6 {
            nonzero += 1;
        }
        disagree = disagree.max((closed - numeric).abs());
        numeric_max = numeric_max.max(numeric.abs());
    }
    let reference = ModelParams::from_omegas(vec![0.0; 3], 1.0).expect("valid");
    let value = curl_mismatch_closed_form(&reference, &[0.0, PI / 3.0, PI], 0, 1).expect("valid pair");
    vec![
        Check::at_least("curl", "closed_form_nonzero_fraction", nonzero as f64 / samples.max(1) as f64, 0.99),
        Check::at_most("curl", "reference_minus_one_over_36", (value + 1.0 / 36.0).abs(), 1e-9),
        Check::at_most("curl", "closed_form_vs_finite_difference", disagree, 1e-6),
        Check::at_most("curl", "finite_difference_max", numeric_max, 1e-6),
    ]
}

fn solver(g: &mut SimRng) -> Vec<Check> {
    let (mut sim_err, mut min_order) = (0.0f64, f64::INFINITY);
    for _ in 0..5 {
        let n = g.random_range(3..12);
        let freqs = uniform_frequencies(g, n, -1.0, 1.0).expect("n > 0");
        let ones = vec![1i8; n];
        let base = 2.0 * coupling_bounds(&freqs).lambda_s;
        // an unsolvable sector counts as an infinite error
        let j_of = |l: f64| solve_self_consistent_j(&freqs, l, &ones).map_or(f64::INFINITY, |s| s.j_mod);
        let params = ModelParams::new(freqs.clone(), base).expect("valid");
        let cfg = IntegratorConfig::adaptive(200.0, 10.0);
        let traj = integrate_phases(&params, &PhaseState::new(vec![0.0; n]), &cfg, &[observers::order_modulus()])
            .expect("runs");
        let r = *traj.real("r_mod").expect("recorded").last().expect("samples");
        sim_err = sim_err.max((r - j_of(base)).abs());
        let e = |l: f64| (asymptotic_j(&freqs, l, &ones) - j_of(l)).abs();
        let order = (e(4.0 * base) / e(8.0 * base)).log2();
        min_order = if order.is_nan() { f64::NEG_INFINITY } else { min_order.min(order) };
    }
    vec![
        Check::at_most("solver", "solver_vs_simulation", sim_err, 1e-3),
        Check::at_least("solver", "expansion_order", min_order, 3.0),
    ]
}

fn kink() -> Vec<Check> {
    let mut rate_err = 0.0f64;
    let mut profile_err = 0.0f64;
    for lj in [1.0, 3.0] {
        for frac in [0.0, 0.6] {
            let p = KinkParams::new(frac * lj, 0.0, lj).expect("valid");
            let exact = relaxation_rate(&p).expect("real rate");
            let fitted = measure_relaxation_rate(&p, 1e-3).expect("fits");
            rate_err = rate_err.max((fitted / exact - 1.0).abs());
            let mut cfg = IntegratorConfig::adaptive(10.0 / exact, 0.05 / exact);
            cfg.method = Method::Adaptive { rtol: 1e-13, atol: 1e-15 };
            let traj = kuramoto_core::dynamics::integrate(&ReducedKink { rate: exact }, &2.5, &cfg, &[]).expect("runs");
            for (t, d) in traj.times().iter().zip(traj.states()) {
                profile_err = profile_err.max((kink_analytic(&p, 2.5, *t).expect("|delta0| < pi") - d).abs());
            }
        }
    }
    vec![
        Check::at_most("kink", "relative_rate_error", rate_err, 0.01),
        Check::at_most("kink", "analytic_vs_ode", profile_err, 1e-8),
    ]
}

fn gaudin(g: &mut SimRng, samples: usize, seed: u64) -> Vec<Check> {
    let mut rot = 0.0f64;
    for _ in 0..samples {
        let n = g.random_range(2..9);
        let raw: Vec<f64> = (0..n).map(|_| g.random_range(-1.0..1.0)).collect();
        let m = raw.iter().sum::<f64>() / n as f64;
        let rp = RichardsonParams::new(raw.iter().map(|x| x - m).collect(), g.random_range(0.0..2.0)).expect("centered");
        let polar: Vec<f64> = (0..n).map(|_| g.random_range(0.0..PI)).collect();
        let az: Vec<f64> = (0..n).map(|_| g.random_range(0.0..2.0 * PI)).collect();
        let shift = g.random_range(0.0..2.0 * PI);
        let turned: Vec<f64> = az.iter().map(|a| a + shift).collect();
        let a = gaudin_h1(&rp, &PseudoSpinConfig::from_angles(&polar, &az).expect("valid")).expect("sizes");
        let b = gaudin_h1(&rp, &PseudoSpinConfig::from_angles(&polar, &turned).expect("valid")).expect("sizes");
        rot = rot.max((a - b).abs());
    }
    let eps = vec![-0.7, -0.2, 0.05, 0.35, 0.5];
    let rp = RichardsonParams::new(eps.clone(), 0.0).expect("centered");
    let (_, e0) = minimize_h1(&rp, 4, 200, seed).expect("runs");
    let exact: f64 = -eps.iter().map(|e| e.abs()).sum::<f64>();
    vec![
        Check::at_most("gaudin", "rotational_invariance", rot, 1e-12),
        Check::at_most("gaudin", "decoupled_minimum_error", (e0 - exact).abs(), 1e-12),
    ]
}

/// Runs the selected suites concurrently; unknown names are rejected.
pub fn run(selected: &[String], samples: usize, seed: u64) -> Result<Vec<Check>, String> {
    let names: Vec<&'static str> = if selected.is_empty() || selected.iter().any(|s| s == "all") {
        SUITES.to_vec()
    } else {
        selected
            .iter()
            .map(|s| SUITES.iter().copied().find(|k| *k == s).ok_or_else(|| format!("unknown suite `{s}`; expected one of {SUITES:?} or all")))
            .collect::<Result<_, _>>()?
    };
    let results = par::map(&names, |name| {
        let idx = SUITES.iter().position(|k| k == name).expect("known");
        let mut g = suite_rng(seed, idx);
        match *name {
            "algebra" => algebra(&mut g, samples.max(10_000)),
            "dynamics" => dynamics(&mut g),
            "energy" => energy(&mut g),
            "curl" => curl(&mut g, samples),
            "solver" => solver(&mut g),
            "kink" => kink(),
            "gaudin" => gaudin(&mut g, samples, seed),
            _ => unreachable!(),
        }
    });
    Ok(results.into_iter().flatten().collect())
}

pub fn table(checks: &[Check]) -> Table {
    let mut t = Table::new(vec![
        ("suite".into(), "suite name".into()),
        ("check".into(), "check name".into()),
        ("value".into(), "measured value".into()),
        ("bound".into(), "'<= x' or '>= x'".into()),
        ("pass".into(), "whether the value satisfies the bound".into()),
    ]);
    for c in checks {
        let bound = format!("{} {:?}", if c.at_least { ">=" } else { "<=" }, c.threshold);
        t.push(vec![c.suite.into(), c.name.into(), c.value.into(), Cell::Text(bound), c.passed().into()]);
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    t.summary.insert("checks".into(), checks.len().into());
    t.summary.insert("failed".into(), failed.into());
    t
}
