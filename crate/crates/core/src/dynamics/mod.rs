//! Transverse-field annealing of an Ising model: instantaneous spectra, closed
//! Schrodinger evolution and an open-system master equation with a flux-noise bath.

pub mod bath;
pub mod closed;
pub mod eigen;
pub mod hamiltonian;
pub mod krylov;
pub mod open;
pub mod result;
pub mod schedule;
pub mod spectrum;
pub mod units;

pub use bath::BathParams;
pub use closed::{evolve_closed, ClosedOptions};
pub use eigen::eigh_lowest;
pub use hamiltonian::{build_hamiltonian, AnnealOperator, DENSE_MAX_QUBITS};
pub use open::{evolve_open, gibbs_distribution, rate_matrix, stationary_distribution, OpenOptions};
pub use result::{EvolutionMeta, EvolutionResult};
pub use schedule::AnnealSchedule;
pub use spectrum::{instantaneous_spectrum, SpectrumReport};
