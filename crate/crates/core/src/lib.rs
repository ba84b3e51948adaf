pub mod ansatz;
pub mod checks;
pub mod cli;
pub mod config;
pub mod diagrams;
pub mod error;
pub mod hierarchy;
pub mod pauli;
pub mod perturbation;
pub mod simulator;
pub mod vqe;

pub use error::{Error, Result};
