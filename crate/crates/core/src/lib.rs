//! Numerics for the Kuramoto oscillator model and its mean-field spin
//! generalization on the sphere.
//!
//! * [`state`] and [`algebra`]: domain types, order parameters and the
//!   real bilinear forms on complex numbers.
//! * [`dynamics`]: angular, complex and spin equations of motion with
//!   fixed-step and adaptive Runge-Kutta integration.
//! * [`analysis`]: coupling bounds, locking, the self-consistent order
//!   parameter and state classification.
//! * [`variational`]: Lagrangian, Hamiltonian and their checks.
//! * [`spinflip`]: kink relaxation of tagged spins.
//! * [`gaudin`]: perturbations around synchronized states and the
//!   semiclassical pairing Hamiltonian.
//! * [`par`]: data-parallel helpers (rayon behind the `parallel` feature).

pub mod algebra;
pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod gaudin;
pub mod par;
pub mod random;
pub mod spinflip;
pub mod state;
pub mod trajectory;
pub mod variational;

pub use error::{Error, Result};
pub use state::{FrequencySpec, OrderParameter, PhaseState, SpinConfiguration, Vec3};
pub use dynamics::{IntegratorConfig, Method, ModelParams};
pub use trajectory::Trajectory;
