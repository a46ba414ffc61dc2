//! Optimal-control pulse synthesis and evaluation for excitation transfer
//! across boundary-controlled XX spin chains.
//!
//! The crate works entirely in the one-excitation sector, where an N-site
//! chain is an N×N real tridiagonal Hamiltonian. Modules:
//!
//! - [`model`]: chain specs, static coupling disorder, Hamiltonian and
//!   boundary control operators.
//! - [`propagate`]: RK4 propagation under sampled pulses, the exact
//!   eigendecomposition propagator, and free-evolution peak search.
//! - [`oct`]: the forward-backward control iteration for one or two
//!   actuators.
//! - [`experiments`]: disorder averages and parameter sweeps.

pub mod error;
pub mod experiments;
pub mod model;
pub mod oct;
pub mod propagate;

pub use error::{Error, Result};
pub use model::{ChainSpec, ControlOperator, DisorderRealization, DisorderScope, Side, SingleExcHamiltonian, StateVector};
pub use oct::{optimize, Actuators, InitialGuess, JValues, OctProblem, OctResult};
pub use propagate::{free_peak, optimal_alpha, FreePeak, Pulse, TimeGrid, Trajectory};
