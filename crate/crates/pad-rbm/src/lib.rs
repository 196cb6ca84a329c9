//! Maximum-likelihood training of binary restricted Boltzmann machines with
//! perturb-and-descend negative-phase sampling, alongside CD/PCD baselines,
//! plus exact-enumeration oracles that keep every probabilistic claim
//! testable at desk scale.

// Explicit i/j index loops over (visible, hidden) pairs mirror the update
// formulas; iterator rewrites obscure them.
#![allow(clippy::needless_range_loop)]

pub mod checks;
pub mod data;
pub mod descend;
pub mod error;
pub mod matching;
pub mod model;
pub mod noise;
pub mod perturb;
pub mod samplers;
pub mod training;

pub use error::{RbmError, Result};
pub use model::{BinaryState, Dataset, ModelParams};
pub use noise::NoiseSource;
pub use perturb::{PerturbOrder, PerturbedParams};
pub use training::{Algorithm, TrainConfig};
