//! Box-ball system: dynamics, soliton decomposition, seat-number
//! linearization, skip maps, invariant measures and tagged-soliton
//! statistics.

pub mod audit;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod qstat;
pub mod sampler;
pub mod scalar;
pub mod seat;
pub mod skip;
pub mod stats;
pub mod soliton;
pub mod tagged;

pub use error::{Error, Result};
pub use lattice::{CarrierProfile, Configuration, Excursion, RecordIndex};
pub use qstat::QParams;
pub use scalar::Scalar;
