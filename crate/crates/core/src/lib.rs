//! Lenia with intrinsic evolution.
//!
//! Every pixel carries its own genome (the genospace `P`) next to the three
//! state channels (the phenospace `A`). Kernels are rebuilt per pixel from
//! ring convolutions, genes diffuse with the creatures that carry them, and
//! mutation and penalization events act on the genospace every step.
//!
//! ```no_run
//! use lenia_evo::engine::{SimConfig, Simulation};
//!
//! let mut sim = Simulation::new(SimConfig::with_size(256, 256), &[lenia_evo::smoke::seed()]).unwrap();
//! sim.run(100).unwrap();
//! println!("{:?}", sim.stats());
//! ```

pub mod dynamics;
pub mod engine;
mod error;
pub mod evolution;
pub mod field;
pub mod gateway;
pub mod genome;
pub mod smoke;

pub use error::{Error, Result};
