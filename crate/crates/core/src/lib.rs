//! Benchmark toolkit for sampling from Restricted Boltzmann Machines.
//!
//! Trains RBMs classically with CD-k, samples from them with several engines
//! (block Gibbs, simulated annealing, and path-integral simulated quantum
//! annealing as a software stand-in for annealer hardware), and quantifies
//! sampling quality by which local valleys of the energy landscape a sample
//! reaches, how the valley sets of two samplers overlap, and how the
//! local-minimum energies distribute.
//!
//! All numeric code is generic over the scalar type via [`Real`]
//! (`f32`/`f64`); concrete `f64` aliases live at the crate root.

pub mod bits;
pub mod embedding;
pub mod error;
pub mod inference;
pub mod lv;
pub mod model;
pub mod real;
pub mod rng;
pub mod samplers;
pub mod training;

pub use bits::{BitVec, Configuration};
pub use error::{Error, Result};
pub use real::Real;

/// Concrete aliases for the common double-precision instantiation.
pub type RbmModel64 = model::RbmModel<f64>;
pub type BoltzmannOracle64 = model::BoltzmannOracle<f64>;
pub type QuboProblem64 = embedding::QuboProblem<f64>;
pub type IsingProblem64 = embedding::IsingProblem<f64>;
pub type AnnealSchedule64 = samplers::AnnealSchedule<f64>;
pub type LvCatalog64 = lv::LvCatalog<f64>;

/// Single-precision aliases.
pub type RbmModel32 = model::RbmModel<f32>;
pub type IsingProblem32 = embedding::IsingProblem<f32>;
