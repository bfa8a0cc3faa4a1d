use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A recorded observable time series.
#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Series {
    pub fn len(&self) -> usize {
        match self {
            Series::Real(v) => v.len(),
            Series::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Real(f64),
    Complex(Complex64),
}

/// Time-stamped states and named observables sampled at the same times.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    times: Vec<f64>,
    states: Vec<S>,
    observables: BTreeMap<String, Series>,
}

impl<S> Default for Trajectory<S> {
    fn default() -> Self {
        Self { times: Vec::new(), states: Vec::new(), observables: BTreeMap::new() }
    }
}

impl<S> Trajectory<S> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a sample. Times must be strictly increasing.
    pub fn push(&mut self, t: f64, state: S, values: &[(&str, Value)]) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::InvalidParameter {
                    field: "t",
                    reason: format!("sample time {t} does not exceed previous {last}"),
                });
            }
        }
        let n = self.times.len();
        for (name, value) in values {
            let entry = self.observables.entry((*name).to_string()).or_insert_with(|| match value {
                Value::Real(_) => Series::Real(Vec::with_capacity(n + 1)),
                Value::Complex(_) => Series::Complex(Vec::with_capacity(n + 1)),
            });
            if entry.len() != n {
                return Err(Error::InsufficientData(format!(
                    "observable `{name}` has {} samples, expected {n}",
                    entry.len()
                )));
            }
            match (entry, value) {
                (Series::Real(v), Value::Real(x)) => v.push(*x),
                (Series::Complex(v), Value::Complex(x)) => v.push(*x),
                _ => {
                    return Err(Error::InvalidParameter {
                        field: "observable",
                        reason: format!("`{name}` changed kind between samples"),
                    })
                }
            }
        }
        self.times.push(t);
        self.states.push(state);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &S)> {
        self.times.last().copied().zip(self.states.last())
    }

    pub fn observable(&self, name: &str) -> Option<&Series> {
        self.observables.get(name)
    }

    pub fn real(&self, name: &str) -> Option<&[f64]> {
        match self.observables.get(name)? {
            Series::Real(v) => Some(v),
            Series::Complex(_) => None,
        }
    }

    pub fn complex(&self, name: &str) -> Option<&[Complex64]> {
        match self.observables.get(name)? {
            Series::Complex(v) => Some(v),
            Series::Real(_) => None,
        }
    }

    pub fn observable_names(&self) -> impl Iterator<Item = &str> {
        self.observables.keys().map(String::as_str)
    }

    /// Index of the first sample with `t >= t_start`.
    pub fn index_at(&self, t_start: f64) -> usize {
        self.times.partition_point(|&t| t < t_start)
    }

    /// Index range covering the trailing `window` of time. Errors when the
    /// trajectory is shorter than the window.
    pub fn trailing_window(&self, window: f64) -> Result<std::ops::Range<usize>> {
        let (first, last) = match (self.times.first(), self.times.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::InsufficientData("empty trajectory".into())),
        };
        if last - first < window * (1.0 - 1e-12) {
            return Err(Error::InsufficientData(format!(
                "trajectory spans {} time units, window needs {window}",
                last - first
            )));
        }
        let start = self.index_at(last - window * (1.0 + 1e-12));
        Ok(start..self.times.len())
    }

    /// Samples with `t0 <= t <= t1`, observables included.
    pub fn slice_time(&self, t0: f64, t1: f64) -> Self
    where
        S: Clone,
    {
        let a = self.index_at(t0);
        let b = self.times.partition_point(|&t| t <= t1);
        let observables = self
            .observables
            .iter()
            .map(|(k, s)| {
                let s = match s {
                    Series::Real(v) => Series::Real(v[a..b].to_vec()),
                    Series::Complex(v) => Series::Complex(v[a..b].to_vec()),
                };
                (k.clone(), s)
            })
            .collect();
        Self {
            times: self.times[a..b].to_vec(),
            states: self.states[a..b].to_vec(),
            observables,
        }
    }
}
