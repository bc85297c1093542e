//! Simulation of deterministic state transfer and entanglement generation in
//! driven three-level (lambda) systems coupled to a cavity, under pure dephasing
//! of the excited level.
//!
//! The protocol drives a counterintuitive-ordered Raman passage |1> -> |0>
//! through the instantaneous dark state of
//!
//! ```text
//!   H(t) = g (|1><e| + |e><1|) + (Delta(t)/2) (|e><0| + |0><e|),
//!   Delta(t) = Delta cos^2(a t),   0 <= t <= T = pi/(2a),
//! ```
//!
//! and the library works in the superadiabatic frame where that passage is
//! exactly diagonal to first order in the sweep rate. In that frame the only
//! error channel at order gamma is a single collective dephasing operator, which
//! makes the master equation cheap (diagonal Hamiltonian + rank-1 jump operator)
//! and makes the infidelity analytically estimable.
//!
//! Modules, bottom of the stack first:
//!
//! * [`model`] - parameters, bases, bare Hamiltonians (rotating and lab frame).
//! * [`frames`] - adiabatic/superadiabatic eigensystem, the sweep coupling x(t),
//!   the collective dephasing vector, and excited-population formulas.
//! * [`dynamics`] - Lindblad integrator (RK4 with step-doubling control),
//!   single-node transfer runs, perturbative fidelity estimates and bounds.
//! * [`network`] - two-node joint space, Bell-state generation, photon loss and
//!   two-copy distillation bookkeeping.
//! * [`harness`] - experiment configs (TOML), sweeps, CSV/plot-data emitters;
//!   backs the `stirap` binary.

pub mod error;
mod linalg;
pub mod model;
pub mod frames;
pub mod dynamics;
pub mod network;
pub mod harness;

pub use error::{Error, Result};
pub use model::{BasisTag, Frame, NoiseModel, Operator, SystemParams};
pub use dynamics::{DensityOperator, IntegratorConfig, Trajectory};
