//! The `simulate`, `sweep`, `kink` and `gaudin` experiments.

use serde_json::json;

use kuramoto_core::analysis::{
    asymptotic_j, classify, coupling_bounds, detect_locking, solve_self_consistent_j, ClassifyThresholds,
};
use kuramoto_core::dynamics::{integrate, integrate_phases, integrate_spins, observers, Observer};
use kuramoto_core::gaudin::{minimize_h1, planar_ansatz_energy, richardson_map};
use kuramoto_core::random::{random_phases, random_spins, rng};
use kuramoto_core::spinflip::{
    kink_analytic, measure_relaxation_rate, relaxation_rate, KinkParams, KinkSystem, ReducedKink,
};
use kuramoto_core::state::wrap_angle;
use kuramoto_core::{par, FrequencySpec, ModelParams, PhaseState, SpinConfiguration, Vec3};

use crate::config::{ConfigError, Dynamics, InitialCondition, Loaded};
use crate::output::{Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] kuramoto_core::Error),
}

pub type RunResult<T> = Result<T, RunError>;

fn col(name: impl Into<String>, desc: impl Into<String>) -> (String, String) {
    (name.into(), desc.into())
}

enum Initial {
    Phase(PhaseState),
    Spin(SpinConfiguration),
}

/// Initial state; random sources draw from stream 1 of `seed`.
fn initial_state(cfg: &Loaded, seed: u64, n: usize) -> RunResult<Initial> {
    let mut g = rng(seed);
    g.set_stream(1);
    let wants_spin = cfg.model()?.dynamics == Dynamics::Spin;
    let init = match &cfg.config.initial {
        InitialCondition::Aligned => Initial::Phase(PhaseState::new(vec![0.0; n])),
        InitialCondition::RandomPlanar => Initial::Phase(random_phases(&mut g, n)),
        InitialCondition::Random3d => Initial::Spin(random_spins(&mut g, n)),
        InitialCondition::Explicit { thetas: Some(t), .. } => Initial::Phase(PhaseState::new(t.clone())),
        InitialCondition::Explicit { spins: Some(s), .. } => {
            let v = s.iter().map(|a| Vec3::new(a[0], a[1], a[2])).collect();
            Initial::Spin(SpinConfiguration::from_vectors(v)?)
        }
        InitialCondition::Explicit { .. } => return Err(cfg.invalid("initial", "no thetas or spins").into()),
    };
    let len = match &init {
        Initial::Phase(p) => p.len(),
        Initial::Spin(s) => s.len(),
    };
    if len != n {
        return Err(cfg.invalid("initial", format!("{len} oscillators, model has {n}")).into());
    }
    Ok(match init {
        Initial::Phase(p) if wants_spin => Initial::Spin(SpinConfiguration::from_raw(p.to_spin().spins)),
        Initial::Spin(_) if !wants_spin => {
            return Err(cfg
                .invalid("model.dynamics", "three-dimensional initial spins need dynamics = \"spin\"")
                .into())
        }
        other => other,
    })
}

fn delta_pairs(cfg: &Loaded, n: usize) -> RunResult<Vec<(usize, usize)>> {
    if let Some(pairs) = &cfg.config.observables.pairs {
        for [i, j] in pairs {
            if i == j || *i >= n || *j >= n {
                return Err(cfg.invalid("observables.pairs", format!("bad pair ({i}, {j}) for N = {n}")).into());
            }
        }
        return Ok(pairs.iter().map(|p| (p[0], p[1])).collect());
    }
    Ok(if n <= 8 {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    } else {
        (0..n - 1).map(|i| (i, i + 1)).collect()
    })
}

fn in_plane_angle(s: &Vec3) -> f64 {
    s.y.atan2(s.x)
}

/// Sampled observable columns with their descriptions.
struct Recorded {
    times: Vec<f64>,
    columns: Vec<(String, String)>,
    data: Vec<Vec<f64>>,
    phases: Option<kuramoto_core::Trajectory<PhaseState>>,
}

fn record(cfg: &Loaded, params: &ModelParams, init: &Initial, names: &[String]) -> RunResult<Recorded> {
    let icfg = cfg.config.integrator.to_core();
    let n = params.n();
    let pairs = delta_pairs(cfg, n)?;
    let mut columns = Vec::new();
    for name in names {
        match name.as_str() {
            "r_mod" => columns.push(col("r_mod", "order parameter modulus |r|")),
            "theta0" => columns.push(col("theta0", "order parameter phase")),
            "delta" => {
                for (i, j) in &pairs {
                    columns.push(col(format!("delta_{i}_{j}"), format!("phase difference theta_{i} - theta_{j} in (-pi, pi]")));
                }
            }
            "energy" => columns.push(col("energy", "Hamiltonian of the spin embedding")),
            "norm_defect" => columns.push(col("norm_defect", "max_j ||S_j| - 1|")),
            "out_of_plane" => columns.push(col("out_of_plane", "max_j |e3 . S_j|")),
            _ => unreachable!("validated"),
        }
    }
    let names_only: Vec<String> = columns.iter().map(|c| c.0.clone()).collect();
    let (times, data, phases) = match init {
        Initial::Phase(p) => {
            let mut obs: Vec<Observer<PhaseState>> = Vec::new();
            for name in names {
                match name.as_str() {
                    "r_mod" => obs.push(observers::order_modulus()),
                    "theta0" => obs.push(observers::order_phase()),
                    "delta" => {
                        for &(i, j) in &pairs {
                            obs.push(Observer::real(format!("delta_{i}_{j}"), move |s: &PhaseState| {
                                wrap_angle(s.thetas[i] - s.thetas[j])
                            }));
                        }
                    }
                    "energy" => obs.push(observers::phase_energy(params)),
                    other => {
                        return Err(cfg
                            .invalid("observables.columns", format!("`{other}` needs dynamics = \"spin\""))
                            .into())
                    }
                }
            }
            let traj = integrate_phases(params, p, &icfg, &obs)?;
            let data = names_only.iter().map(|c| traj.real(c).expect("recorded").to_vec()).collect();
            (traj.times().to_vec(), data, Some(traj))
        }
        Initial::Spin(s) => {
            let mut obs: Vec<Observer<SpinConfiguration>> = Vec::new();
            for name in names {
                match name.as_str() {
                    "r_mod" => obs.push(observers::order_modulus()),
                    "theta0" => obs.push(observers::order_phase()),
                    "delta" => {
                        for &(i, j) in &pairs {
                            obs.push(Observer::real(format!("delta_{i}_{j}"), move |c: &SpinConfiguration| {
                                wrap_angle(in_plane_angle(&c.spins[i]) - in_plane_angle(&c.spins[j]))
                            }));
                        }
                    }
                    "energy" => obs.push(observers::spin_energy(params)),
                    "norm_defect" => obs.push(observers::max_norm_defect()),
                    "out_of_plane" => obs.push(observers::max_out_of_plane()),
                    _ => unreachable!("validated"),
                }
            }
            let traj = integrate_spins(params, s, &icfg, &obs)?;
            let data = names_only.iter().map(|c| traj.real(c).expect("recorded").to_vec()).collect();
            (traj.times().to_vec(), data, None)
        }
    };
    Ok(Recorded { times, columns, data, phases })
}

pub fn simulate(cfg: &Loaded, seed: u64) -> RunResult<Table> {
    let freqs = cfg.frequencies(seed)?;
    let params = ModelParams::new(freqs, cfg.lambda()?)?;
    let init = initial_state(cfg, seed, params.n())?;
    let rec = record(cfg, &params, &init, &cfg.config.observables.columns)?;
    let mut columns = vec![col("t", "time")];
    columns.extend(rec.columns);
    let mut table = Table::new(columns);
    for (k, t) in rec.times.iter().enumerate() {
        let mut row = vec![Cell::Num(*t)];
        row.extend(rec.data.iter().map(|c| Cell::Num(c[k])));
        table.push(row);
    }
    table.summary.insert("n".into(), json!(params.n()));
    table.summary.insert("omegas".into(), json!(params.omegas()));
    Ok(table)
}

struct SweepRow {
    lambda: f64,
    r_sim: f64,
    r_min: f64,
    r_max: f64,
    class: &'static str,
    locked: Option<usize>,
    j_solver: Option<f64>,
    j_asym: Option<f64>,
    r_global: Option<f64>,
}

fn sweep_point(cfg: &Loaded, freqs: &FrequencySpec, init: &Initial, lambda: f64) -> RunResult<SweepRow> {
    let params = ModelParams::new(freqs.clone(), lambda)?;
    let rec = record(cfg, &params, init, &["r_mod".to_string()])?;
    let window = cfg.config.sweep.window;
    let t_last = *rec.times.last().expect("at least one sample");
    let start = rec.times.partition_point(|t| *t < t_last - window);
    let tail = &rec.data[0][start..];
    if tail.len() < 2 {
        return Err(cfg.invalid("sweep.window", "window holds fewer than two samples").into());
    }
    let r_sim = tail.iter().sum::<f64>() / tail.len() as f64;
    let (r_min, r_max) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    let class = classify(tail, &ClassifyThresholds::default())?.as_str();
    let locked = match &rec.phases {
        Some(traj) => Some(detect_locking(traj, window, cfg.config.sweep.lock_tol)?.len()),
        None => None,
    };
    let n = freqs.len();
    let ones = vec![1i8; n];
    let (j_solver, j_asym) = if lambda > 0.0 {
        (solve_self_consistent_j(freqs, lambda, &ones).ok().map(|s| s.j_mod), Some(asymptotic_j(freqs, lambda, &ones)))
    } else {
        (None, None)
    };
    let g = 1.0 - freqs.variance() / (lambda * lambda);
    let r_global = (lambda > 0.0 && g >= 0.0).then(|| g.sqrt());
    Ok(SweepRow { lambda, r_sim, r_min, r_max, class, locked, j_solver, j_asym, r_global })
}

pub fn sweep(cfg: &Loaded, seed: u64) -> RunResult<Table> {
    let freqs = cfg.frequencies(seed)?;
    let grid = cfg.lambda_grid()?;
    let init = initial_state(cfg, seed, freqs.len())?;
    let rows = par::map(&grid, |&l| sweep_point(cfg, &freqs, &init, l));
    let mut table = Table::new(vec![
        col("lambda", "coupling constant"),
        col("r_sim", "mean simulated |r| over the trailing window"),
        col("r_min", "minimum simulated |r| over the trailing window"),
        col("r_max", "maximum simulated |r| over the trailing window"),
        col("class", "synchronization class of the trailing window"),
        col("locked_pairs", "pairs whose phase difference is constant over the trailing window"),
        col("j_solver", "self-consistent |J| with all oscillators aligned (empty: no solution)"),
        col("j_asymptotic", "two-term large-coupling expansion of |J|"),
        col("r_global", "complete-synchronization approximation sqrt(1 - Var(omega)/lambda^2)"),
    ]);
    for row in rows {
        let r = row?;
        table.push(vec![
            r.lambda.into(),
            r.r_sim.into(),
            r.r_min.into(),
            r.r_max.into(),
            r.class.into(),
            r.locked.map_or(Cell::Missing, Cell::from),
            r.j_solver.into(),
            r.j_asym.into(),
            r.r_global.into(),
        ]);
    }
    let b = coupling_bounds(&freqs);
    table.summary.insert("lambda_c".into(), json!(b.lambda_c));
    table.summary.insert("lambda_s".into(), json!(b.lambda_s));
    table.summary.insert("omegas".into(), json!(freqs.omegas()));
    Ok(table)
}

fn kink_params(cfg: &Loaded, seed: u64) -> RunResult<KinkParams> {
    let k = &cfg.config.kink;
    if let (Some(w), Some(m), Some(lj)) = (k.omega, k.mean_omega, k.lambda_j) {
        return Ok(KinkParams::new(w, m, lj)?);
    }
    let freqs = cfg.frequencies(seed)?;
    if k.spin >= freqs.len() {
        return Err(cfg.invalid("kink.spin", format!("index {} out of range", k.spin)).into());
    }
    let omega = k.omega.unwrap_or(freqs.omegas()[k.spin]);
    let mean = k.mean_omega.unwrap_or(freqs.mean());
    let lambda_j = match k.lambda_j {
        Some(v) => v,
        None => {
            let lambda = cfg.lambda()?;
            lambda * solve_self_consistent_j(&freqs, lambda, &vec![1; freqs.len()])?.j_mod
        }
    };
    Ok(KinkParams::new(omega, mean, lambda_j)?)
}

pub fn kink(cfg: &Loaded, seed: u64) -> RunResult<Table> {
    let k = &cfg.config.kink;
    let p = kink_params(cfg, seed)?;
    let rate = relaxation_rate(&p)?;
    let phi0 = p.stable_phase()?;
    let mut icfg = cfg.config.integrator.to_core();
    icfg.t_end = k.t_end.unwrap_or(10.0 / rate);
    icfg.sample_dt = Some(icfg.t_end / k.samples as f64);
    icfg.dt = icfg.dt.min(icfg.t_end / k.samples as f64);
    let full = integrate(&KinkSystem { params: p, phi_ref: phi0 }, &k.delta0, &icfg, &[])?;
    let reduced = integrate(&ReducedKink { rate }, &k.delta0, &icfg, &[])?;
    let mut table = Table::new(vec![
        col("t", "time"),
        col("phi", "phase of the flipping spin relative to the mean field"),
        col("delta", "phi - phi_0 from the full single-spin equation"),
        col("delta_reduced", "deviation from the reduced law delta' = -rate sin(delta)"),
        col("delta_analytic", "kink solution 2 atan(tan(delta0/2) exp(-rate t))"),
    ]);
    let mut worst = 0.0f64;
    for ((t, d), dr) in full.times().iter().zip(full.states()).zip(reduced.states()) {
        let a = kink_analytic(&p, k.delta0, *t)?;
        worst = worst.max((a - dr).abs());
        table.push(vec![(*t).into(), (phi0 + d).into(), (*d).into(), (*dr).into(), a.into()]);
    }
    let s = &mut table.summary;
    s.insert("omega".into(), json!(p.omega));
    s.insert("mean_omega".into(), json!(p.mean_omega));
    s.insert("lambda_j".into(), json!(p.lambda_j));
    s.insert("rate".into(), json!(rate));
    s.insert("fitted_rate".into(), json!(measure_relaxation_rate(&p, 1e-3)?));
    s.insert("stable_phase".into(), json!(phi0));
    s.insert("unstable_phase".into(), json!(p.unstable_phase()?));
    s.insert("max_analytic_error".into(), json!(worst));
    Ok(table)
}

pub fn gaudin(cfg: &Loaded, seed: u64) -> RunResult<Table> {
    let params = ModelParams::new(cfg.frequencies(seed)?, cfg.lambda()?)?;
    let rp = richardson_map(&params);
    let g = &cfg.config.gaudin;
    let (config, energy) = minimize_h1(&rp, g.restarts, g.steps, seed)?;
    let mut table = Table::new(vec![
        col("j", "pseudo-spin index"),
        col("epsilon", "single-particle level omega_j - Omega"),
        col("t1", "pseudo-spin x component"),
        col("t2", "pseudo-spin y component"),
        col("t3", "pseudo-spin z component"),
    ]);
    for (j, (e, t)) in rp.epsilons.iter().zip(config.taus()).enumerate() {
        table.push(vec![j.into(), (*e).into(), t.x.into(), t.y.into(), t.z.into()]);
    }
    let s = &mut table.summary;
    s.insert("g".into(), json!(rp.g));
    s.insert("energy".into(), json!(energy));
    s.insert("planar_ansatz_energy".into(), json!(planar_ansatz_energy(&rp)));
    s.insert("decoupled_energy".into(), json!(-rp.epsilons.iter().map(|e| e.abs()).sum::<f64>()));
    s.insert("planar_sum_norm".into(), json!(config.planar_sum().norm()));
    Ok(table)
}
