use alloc::string::String;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("residue field size {0} is not a prime")]
    NotPrime(u32),
    #[error("digit {digit} is out of range for residue field of size {ell}")]
    DigitOutOfRange { digit: u32, ell: u32 },
    #[error("working depth {depth} is not valid here (needs more than {floor})")]
    BadDepth { depth: i64, floor: i64 },
    #[error("operands belong to different rings")]
    RingMismatch,
    #[error("element has negative valuation {0} and does not lie in the ring of integers")]
    NegativeValuation(i64),
    #[error("insufficient input depth: {required} digits required, {available} available")]
    InsufficientDepth { required: i64, available: i64 },
    #[error("index {0} is out of range (must be at least 1)")]
    BadIndex(u64),
    #[error("value {0} is not supported on the degree window of S_{1}")]
    NotInSk(String, u64),
    #[error("jacobian dy is rank deficient at this point")]
    RankDeficient,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid family dimensions p={p}, q={q}, d={d}, n={n}")]
    BadDimensions {
        p: usize,
        q: usize,
        d: usize,
        n: usize,
    },
    #[error("cell count {0} does not fit in a machine word")]
    IndexOverflow(String),
    #[error("budget exceeded: {cells} cells (budget {cell_budget}), {pairs} enumerated pairs (budget {pair_budget})")]
    BudgetExceeded {
        cells: String,
        cell_budget: u64,
        pairs: String,
        pair_budget: u64,
    },
    #[error("cannot parse digit string {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("{0}")]
    Unsupported(String),
}
