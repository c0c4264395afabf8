use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("atom {0} is not ordered by the red/black order")]
    UnorderedAtom(String),

    #[error("position {position} out of range for a sequence of {len} cards")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("position {0} listed twice")]
    DuplicatePosition(usize),

    #[error("card identity {0} appears twice in one sequence")]
    DuplicateCardId(u32),

    #[error("degree mismatch: expected {expected}, got {actual}")]
    DegreeMismatch { expected: usize, actual: usize },

    #[error("not a permutation: {0}")]
    InvalidPermutation(String),

    #[error("cycle notation parse error: {0}")]
    CycleParse(String),

    #[error("invalid shuffle: {0}")]
    InvalidShuffle(String),

    #[error("invalid random flip: {0}")]
    InvalidRFlip(String),

    #[error("invalid protocol machine: {0}")]
    InvalidMachine(String),

    #[error("enumeration needs {needed} branches, cap is {cap}")]
    CapExceeded { needed: u128, cap: u64 },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph file line {line}: {message}")]
    GraphParse { line: usize, message: String },

    #[error("automorphism group larger than {limit} elements")]
    GroupTooLarge { limit: u64 },

    #[error("brute-force oracle limited to {limit} vertices, graph has {n}")]
    OracleTooLarge { n: usize, limit: usize },

    #[error("protocol input invalid: {0}")]
    InvalidInput(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("opened pairs do not form a single cycle: {0}")]
    BrokenChain(String),

    #[error("verification error: {0}")]
    Verify(String),
}
