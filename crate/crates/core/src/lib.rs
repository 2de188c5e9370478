//! Exact open-system dynamics of two (and N) two-level atoms in a lossy
//! resonant cavity, with time-local decay rates and weighted, regularized
//! non-Markovianity measures as functions of interatomic distance,
//! observation window and atom number.
//!
//! The dynamics lives in the single-excitation sector: the symmetric and
//! antisymmetric amplitudes obey decoupled Volterra integro-differential
//! equations whose kernels are closed-form for a Lorentzian cavity line. From
//! the solved amplitudes the crate builds the time-local master-equation
//! coefficients, Choi matrices of the dynamical map, the log-fidelity weight,
//! and the root-power-regularized non-Markovianity measure, together with
//! distance sweeps and critical-point finders.
//!
//! Entry points:
//! - [`pipeline::evaluate`] runs one configuration end to end;
//! - [`scan`] sweeps distances and locates critical points;
//! - [`cli`] implements the `cavitynm` command-line tool.

pub mod choi;
pub mod cli;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod measure;
pub mod model;
pub mod pipeline;
pub mod rates;
pub mod scan;
pub mod validate;
pub mod volterra;

pub use error::{Error, Result};
pub use kernels::Channel;
pub use model::{CavityParams, Distance, RegOrder, TimeGrid};
pub use volterra::Scheme;
