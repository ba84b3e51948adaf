use std::fmt;

use crate::pauli::BasisState;

/// Everything that can go wrong in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("qubit count mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("register must hold between 1 and {max} qubits, got {n}")]
    RegisterSize { n: usize, max: usize },

    #[error("{what} index {index} out of range (length {len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("cannot parse Pauli string {input:?}: {reason}")]
    ParsePauli { input: String, reason: String },

    #[error("degenerate unperturbed level: state {0} has the same energy as the reference")]
    Degenerate(BasisState),

    #[error("dimension 2^{n} exceeds the cap of 2^{cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid ansatz: {0}")]
    Ansatz(String),

    #[error("ansatz is not generating: no unit for slot {0}")]
    MissingSlot(SlotKey),

    #[error("ansatz is not matched: {0}")]
    NotMatched(String),

    #[error("symmetry cannot be enforced: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("priority list exhausted: {available} generators, {requested} requested")]
    Exhausted { available: usize, requested: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Generator slot identifier: target basis state and Hermitian parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotKey {
    pub s: BasisState,
    pub a: u8,
}

impl fmt::Display for SlotKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(s={}, a={})", self.s, self.a)
    }
}
