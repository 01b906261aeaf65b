use thiserror::Error;

/// Everything that can go wrong inside the core crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("range {start}..{end} out of bounds for {len}-bit string")]
    OutOfRange {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("window of {count} bits does not fit in a {modulus}-bit region")]
    WindowTooLarge { count: usize, modulus: usize },

    #[error("invalid hex string: {0}")]
    InvalidHex(&'static str),

    #[error("master key must be 1..=256 octets, got {0}")]
    InvalidMasterKey(usize),

    #[error("invalid cipher parameters: {0}")]
    InvalidSpec(&'static str),

    #[error("unsupported message length {len}: must exceed the {block}-bit base block")]
    UnsupportedLength { len: usize, block: usize },

    #[error("level {requested} out of range for level-{max} cipher")]
    LevelOutOfRange { requested: u32, max: u32 },

    #[error("key material exhausted: needed {needed} bits, {remaining} remaining")]
    KeyUnderrun { needed: usize, remaining: usize },

    #[error("expanded key has {actual} bits, parameters require {expected}")]
    KeyLengthMismatch { expected: usize, actual: usize },

    #[error("exhaustive enumeration over {bits} free bits refused (limit {limit})")]
    CostGuard { bits: usize, limit: usize },

    #[error("bad argument: {0}")]
    BadArgument(&'static str),

    #[error("reduction failed at round {round}: oracle returned no candidate")]
    ReductionFailed { round: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
