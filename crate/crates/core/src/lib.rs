//! Forward-backward stochastic phase-space simulation of quadrature
//! measurement modelled as amplification.
//!
//! The measured quadrature `x` is amplified by a squeezing interaction and
//! solved *backward* in time from a sample of the future-boundary marginal,
//! while the conjugate quadrature `p` is solved *forward* from an initial
//! conditional distribution. The instantaneous joint density of the paired
//! trajectories reproduces the Husimi Q function of the evolved state, which
//! is what the validation battery and the acceptance suite check against an
//! independent truncated-Fock-space oracle.
//!
//! Module map:
//! - [`states`]: declarative state preparations and closed-form Q evaluators.
//! - [`dynamics`]: time grids and exact Ornstein-Uhlenbeck integrators.
//! - [`boundary`]: samplers realizing the temporal boundary conditions.
//! - [`oracle`]: truncated Fock-space reference (tests and boundary tables).
//! - [`stats`]: estimators and hypothesis tests.
//! - [`experiments`]: end-to-end scenario runners producing reports.

pub mod boundary;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod numeric;
pub mod oracle;
pub mod states;
pub mod stats;

pub use error::CoreError;
