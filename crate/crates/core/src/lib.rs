//! Lattice-protein folding instances as pseudo-Boolean energies, quadratized to Ising
//! models, embedded on Chimera graphs, and solved classically or simulated under a
//! quantum annealing schedule.

pub mod chimera;
pub mod dynamics;
pub mod embedding;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod ising;
pub mod lattice;
pub mod pipeline;
pub mod poly;
pub mod quadratize;
pub mod rational;
pub mod solvers;

pub use error::{Error, Result};
pub use rational::Rational;
