use thiserror::Error;

use crate::spacetime::Party;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("register capacity exceeded: {requested} qubits requested, at most {max} supported")]
    Capacity { requested: usize, max: usize },

    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("two-qubit operation needs distinct qubits, got {0} twice")]
    SameQubit(usize),

    #[error("sampled a branch with zero probability ({0})")]
    ZeroProbability(String),

    #[error("unknown qubit {0}")]
    UnknownQubit(u32),

    #[error("qubit {0} already belongs to a live pair")]
    QubitInUse(u32),

    #[error("qubits {0} and {1} belong to the same pair; measure the pair directly")]
    DegeneratePair(u32, u32),

    #[error("pair {0} has already been consumed")]
    PairConsumed(usize),

    #[error("{party} does not hold qubit {qubit}")]
    NotOwner { party: Party, qubit: u32 },

    #[error("unknown party {0}")]
    UnknownParty(Party),

    #[error("operation not supported by the {backend} backend: {op}")]
    Unsupported { backend: &'static str, op: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
