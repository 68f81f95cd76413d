//! Classical correlation and quantum discord of two-qubit states.
//!
//! The central object is the quantum steering ellipsoid: the set of Bloch
//! vectors that Alice's qubit can be steered to when Bob measures his qubit.
//! Minimizing the average postmeasurement entropy over that body yields the
//! classical correlation `C` and the discord `Q = I - C`.
//!
//! Modules:
//! - [`qstate`]: density matrices, Pauli expansion, partial traces, entropies.
//! - [`steering`]: steering ellipsoids, including closed forms for X states
//!   and the degenerate (singular correlation matrix) cases.
//! - [`discord`]: closed-form and brute-force minimal average entropy, and
//!   full correlation reports.
//! - [`dynamics`]: local decoherence channels and correlation trajectories.
//! - [`conjectures`]: state families whose optimal ensembles are tested
//!   numerically (mixtures of product states, general correlation matrices).

pub mod conjectures;
pub mod discord;
pub mod dynamics;
mod error;
pub mod qstate;
pub mod steering;

pub use error::{Error, Result};

/// Complex scalar used for all density matrices.
pub type C64 = nalgebra::Complex<f64>;
