//! Simulation and pulse optimization of a fast tunable-coupler CZ gate.
//!
//! The library models a transmon and an inductively shunted transmon (IST)
//! coupled through a flux-tunable transmon coupler, propagates the system
//! under flat-top frequency pulses, scores the resulting two-qubit gate, and
//! optimizes the pulse parameters with a bounded Nelder-Mead search.
//!
//! Unit conventions: all stored frequencies, anharmonicities, and coupling
//! strengths are linear frequencies in GHz (h = 1); times are in ns.
//! Hamiltonian matrices carry angular units (rad/ns), i.e. builders multiply
//! by 2*pi internally.

pub mod control;
pub mod dynamics;
pub mod eigh;
pub mod error;
pub mod experiments;
pub mod gateval;
pub mod model;
pub mod optimizer;
pub mod quantize;

pub use error::CzError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CzError>;

pub const TWO_PI: f64 = std::f64::consts::TAU;
