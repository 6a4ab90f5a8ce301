use thiserror::Error;

use crate::lattice::MultiIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("lattice dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("axis {axis} out of range 1..={m}")]
    AxisOutOfRange { axis: usize, m: usize },
    #[error("integer overflow in lattice arithmetic")]
    Overflow,
    #[error("{from} <= {to} does not hold")]
    NotComparable { from: MultiIndex, to: MultiIndex },
    #[error("{count} monotone paths exceed the cap of {cap}")]
    PathCapExceeded { count: String, cap: usize },
    #[error("box volume {volume} exceeds the cap of {cap}")]
    VolumeCapExceeded { volume: String, cap: u64 },
    #[error("exponent {exponent} exceeds the cap of {cap}")]
    ExponentCapExceeded { exponent: String, cap: u64 },

    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("invalid monoid: {0}")]
    InvalidMonoid(String),
    #[error("state {state} is outside {space}")]
    StateOutsideDomain { state: String, space: String },
    #[error("maps act on different state spaces ({left} vs {right})")]
    DomainMismatch { left: String, right: String },
    #[error(
        "cannot decide equality of these rule families on an infinite domain without a sample"
    )]
    IncomparableRules,

    #[error("map is not bijective: {0}")]
    NotBijective(String),
    #[error("map is not surjective: {0} has no preimage")]
    NotSurjective(String),
    #[error("bijectivity of this map is undecided")]
    Undecided,
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("element {0} is not invertible in its monoid")]
    NotInvertible(String),
    #[error("negative coefficient in a monoid that is not a group")]
    NegativeInNonGroup,
    #[error("state space is infinite; exhaustive search refused")]
    InfiniteStateSpace,

    #[error("system is incompatible: G_{alpha} and G_{beta} disagree at {state}")]
    Incompatible {
        alpha: usize,
        beta: usize,
        state: String,
    },
    #[error("matrices {alpha} and {beta} do not commute: products differ at entry ({row},{col})")]
    NonCommuting {
        alpha: usize,
        beta: usize,
        row: usize,
        col: usize,
    },

    #[error("time {time} is below the threshold {t1}")]
    BelowThreshold { time: MultiIndex, t1: MultiIndex },
    #[error("time {0} is outside the rule's time window")]
    TimeOutsideWindow(MultiIndex),
    #[error("time component mismatch at {at}: expected {expected}, found {found}")]
    TimeComponentMismatch {
        at: MultiIndex,
        expected: MultiIndex,
        found: MultiIndex,
    },
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}
