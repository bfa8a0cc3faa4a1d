//! Experiment configuration: TOML schema, defaults and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use kuramoto_core::random::{normal_frequencies, rng, uniform_frequencies};
use kuramoto_core::{FrequencySpec, IntegratorConfig, Method};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: cannot read config: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: invalid `{field}`{}: {reason}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Invalid { path: String, field: String, line: Option<usize>, reason: String },
    #[error("{path}: missing `{field}`")]
    Missing { path: String, field: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; `--seed` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub observables: ObservablesSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub kink: KinkSection,
    #[serde(default)]
    pub gaudin: GaudinSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    #[default]
    Phase,
    Spin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Required for sampled frequencies; checked against explicit lists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub omega: OmegaSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_range: Option<LambdaRange>,
    #[serde(default)]
    pub dynamics: Dynamics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaSource {
    Explicit { values: Vec<f64> },
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std_dev: f64 },
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        thetas: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spins: Option<Vec<[f64; 3]>>,
    },
    #[default]
    RandomPlanar,
    Random3d,
    Aligned,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Rk4,
    #[default]
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub method: MethodName,
    pub dt: f64,
    pub t_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_dt: Option<f64>,
    pub rtol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    pub min_step: f64,
    pub renormalize: bool,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self {
            method: MethodName::Adaptive,
            dt: d.dt,
            t_end: 100.0,
            sample_dt: Some(0.1),
            rtol: 1e-9,
            atol: None,
            min_step: d.min_step,
            renormalize: false,
        }
    }
}

impl IntegratorSection {
    pub fn to_core(&self) -> IntegratorConfig {
        let method = match self.method {
            MethodName::Rk4 => Method::Rk4,
            MethodName::Adaptive => Method::Adaptive { rtol: self.rtol, atol: self.atol.unwrap_or(self.rtol) },
        };
        IntegratorConfig {
            dt: self.dt,
            t_end: self.t_end,
            method,
            renormalize: self.renormalize,
            sample_dt: self.sample_dt,
            min_step: self.min_step,
        }
    }
}

pub const ALL_OBSERVABLES: &[&str] = &["r_mod", "theta0", "delta", "energy", "norm_defect", "out_of_plane"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservablesSection {
    pub columns: Vec<String>,
    /// Pairs for `delta`; all pairs when `N <= 8`, neighbours otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[usize; 2]>>,
}

impl Default for ObservablesSection {
    fn default() -> Self {
        Self { columns: ["r_mod", "theta0", "delta", "energy"].map(String::from).to_vec(), pairs: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Trailing window (time units) for the long-time average and classification.
    pub window: f64,
    /// Phase-difference spread below which a pair counts as locked.
    pub lock_tol: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { window: 20.0, lock_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KinkSection {
    /// Oscillator whose frequency is used when `omega` is absent.
    pub spin: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_omega: Option<f64>,
    /// `lambda |J|`; solved from the model when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_j: Option<f64>,
    /// Initial deviation from the stable phase, `|delta0| < pi`.
    pub delta0: f64,
    /// Defaults to ten relaxation times.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    pub samples: usize,
}

impl Default for KinkSection {
    fn default() -> Self {
        Self { spin: 0, omega: None, mean_omega: None, lambda_j: None, delta0: 3.0, t_end: None, samples: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaudinSection {
    pub restarts: usize,
    pub steps: usize,
}

impl Default for GaudinSection {
    fn default() -> Self {
        Self { restarts: kuramoto_core::gaudin::DEFAULT_RESTARTS, steps: kuramoto_core::gaudin::DEFAULT_STEPS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub suites: Vec<String>,
    /// Random configurations per sampled check.
    pub samples: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { suites: vec!["all".into()], samples: 1000 }
    }
}

/// Loaded config plus the text it came from, for line lookups.
pub struct Loaded {
    pub config: ExperimentConfig,
    pub path: String,
    text: Option<String>,
}

impl Loaded {
    pub fn default_config() -> Self {
        Self { config: ExperimentConfig::default(), path: "<defaults>".into(), text: None }
    }

    pub fn invalid(&self, field: &str, reason: impl Into<String>) -> ConfigError {
        let key = field.rsplit('.').next().unwrap_or(field);
        let line = self.text.as_deref().and_then(|t| find_key_line(t, key));
        ConfigError::Invalid { path: self.path.clone(), field: field.into(), line, reason: reason.into() }
    }

    pub fn missing(&self, field: &str) -> ConfigError {
        ConfigError::Missing { path: self.path.clone(), field: field.into() }
    }

    pub fn model(&self) -> Result<&ModelSection, ConfigError> {
        self.config.model.as_ref().ok_or_else(|| self.missing("model"))
    }
}

fn find_key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

/// Reads a TOML config, or the manifest embedded in a previous CSV/JSON output.
pub fn load(path: &Path) -> Result<Loaded, ConfigError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
    let parse_err = |message: String| ConfigError::Parse { path: shown.clone(), message };
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let config = match ext {
        "json" => {
            let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
            let cfg = doc
                .pointer("/manifest/config")
                .ok_or_else(|| parse_err("no manifest.config in JSON output".into()))?;
            serde_json::from_value(cfg.clone()).map_err(|e| parse_err(e.to_string()))?
        }
        "csv" => {
            let line = text
                .lines()
                .find_map(|l| l.strip_prefix(crate::output::MANIFEST_PREFIX))
                .ok_or_else(|| parse_err("no manifest line in CSV output".into()))?;
            let doc: serde_json::Value = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            let cfg = doc.get("config").ok_or_else(|| parse_err("manifest has no config".into()))?;
            serde_json::from_value(cfg.clone()).map_err(|e| parse_err(e.to_string()))?
        }
        _ => toml::from_str(&text).map_err(|e| parse_err(e.to_string().trim_end().to_string()))?,
    };
    Ok(Loaded { config, path: shown, text: Some(text) })
}

impl Loaded {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.config;
        if let Some(m) = &c.model {
            match &m.omega {
                OmegaSource::Explicit { values } => {
                    if values.is_empty() {
                        return Err(self.invalid("model.omega.values", "must be nonempty"));
                    }
                    if let Some(n) = m.n {
                        if n != values.len() {
                            return Err(self.invalid("model.n", format!("{n} but omega has {} values", values.len())));
                        }
                    }
                }
                OmegaSource::Uniform { low, high } => {
                    if !(low <= high) {
                        return Err(self.invalid("model.omega.high", format!("{high} < low {low}")));
                    }
                }
                OmegaSource::Normal { std_dev, .. } => {
                    if !(*std_dev >= 0.0) {
                        return Err(self.invalid("model.omega.std_dev", "must be >= 0"));
                    }
                }
            }
            if !matches!(m.omega, OmegaSource::Explicit { .. }) && m.n.unwrap_or(0) == 0 {
                return Err(self.invalid("model.n", "sampled frequencies need n >= 1"));
            }
            if let Some(l) = m.lambda {
                if !(l >= 0.0 && l.is_finite()) {
                    return Err(self.invalid("model.lambda", format!("must be finite and >= 0, got {l}")));
                }
            }
            if let Some(grid) = &m.lambda_grid {
                if grid.is_empty() {
                    return Err(self.invalid("model.lambda_grid", "must be nonempty"));
                }
                if grid.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
                    return Err(self.invalid("model.lambda_grid", "entries must be finite and >= 0"));
                }
                if grid.windows(2).any(|w| w[0] > w[1]) {
                    return Err(self.invalid("model.lambda_grid", "must be sorted ascending"));
                }
            }
            if let Some(r) = &m.lambda_range {
                if r.count == 0 || !(r.start >= 0.0 && r.start <= r.stop && r.stop.is_finite()) {
                    return Err(self.invalid("model.lambda_range", "need 0 <= start <= stop and count >= 1"));
                }
            }
        }
        if let InitialCondition::Explicit { thetas, spins } = &c.initial {
            if thetas.is_some() == spins.is_some() {
                return Err(self.invalid("initial", "explicit initial conditions need exactly one of thetas, spins"));
            }
        }
        c.integrator.to_core().validate().map_err(|e| self.invalid("integrator", e.to_string()))?;
        for col in &c.observables.columns {
            if !ALL_OBSERVABLES.contains(&col.as_str()) {
                return Err(self.invalid(
                    "observables.columns",
                    format!("unknown observable `{col}`; expected one of {ALL_OBSERVABLES:?}"),
                ));
            }
        }
        if !(c.sweep.window > 0.0) {
            return Err(self.invalid("sweep.window", "must be > 0"));
        }
        if !(c.kink.delta0.abs() < std::f64::consts::PI) {
            return Err(self.invalid("kink.delta0", "|delta0| must be < pi"));
        }
        if c.kink.samples == 0 {
            return Err(self.invalid("kink.samples", "must be >= 1"));
        }
        if c.gaudin.restarts == 0 || c.gaudin.steps == 0 {
            return Err(self.invalid("gaudin", "restarts and steps must be >= 1"));
        }
        Ok(())
    }

    /// Frequencies from the model section; samplers draw from stream 0 of `seed`.
    pub fn frequencies(&self, seed: u64) -> Result<FrequencySpec, ConfigError> {
        let m = self.model()?;
        let mut g = rng(seed);
        g.set_stream(0);
        let n = m.n.unwrap_or(0);
        let spec = match &m.omega {
            OmegaSource::Explicit { values } => FrequencySpec::new(values.clone()),
            OmegaSource::Uniform { low, high } => uniform_frequencies(&mut g, n, *low, *high),
            OmegaSource::Normal { mean, std_dev } => normal_frequencies(&mut g, n, *mean, *std_dev),
        };
        spec.map_err(|e| self.invalid("model.omega", e.to_string()))
    }

    pub fn lambda(&self) -> Result<f64, ConfigError> {
        self.model()?.lambda.ok_or_else(|| self.missing("model.lambda"))
    }

    pub fn lambda_grid(&self) -> Result<Vec<f64>, ConfigError> {
        let m = self.model()?;
        if let Some(grid) = &m.lambda_grid {
            return Ok(grid.clone());
        }
        if let Some(r) = &m.lambda_range {
            if r.count == 1 {
                return Ok(vec![r.start]);
            }
            let step = (r.stop - r.start) / (r.count - 1) as f64;
            return Ok((0..r.count).map(|k| r.start + step * k as f64).collect());
        }
        Err(self.missing("model.lambda_grid"))
    }
}
