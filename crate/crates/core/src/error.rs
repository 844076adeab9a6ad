use thiserror::Error;

use crate::io::Diagnostic;
use crate::network::Violation;
use crate::rank::Rank;

#[derive(Debug, Error)]
pub enum Error {
    #[error("incoherent conditioning: cannot subtract {subtrahend} from {minuend}")]
    IncoherentConditioning { minuend: Rank, subtrahend: Rank },

    #[error("malformed rank {0:?}")]
    MalformedRank(String),

    #[error("evidence is impossible (rank inf)")]
    Inconsistent,

    #[error("{} worlds exceed the limit of {limit}", worlds.map_or("too many".to_string(), |w| w.to_string()))]
    TooLarge { worlds: Option<usize>, limit: usize },

    #[error("table has {found} entries, frame has {expected:?} worlds")]
    TableShape { expected: Option<usize>, found: usize },

    #[error("exhaustive search exceeded its budget of {0} steps")]
    SearchBudget(u64),

    #[error("invalid network:{}", fmt_list(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("unknown variable or node {0:?}")]
    UnknownNode(String),

    #[error("{node} has no value {value:?}")]
    UnknownValue { node: String, value: String },

    #[error("node {0:?} already exists")]
    NodeExists(String),

    #[error("{0} is not binary; the suppressor model needs a two-valued child")]
    NonBinary(String),

    #[error("{0} is not controllable")]
    NotControllable(String),

    #[error("{0} already has an action node")]
    AlreadyAugmented(String),

    #[error("horizon must be at least 1, got {0}")]
    InvalidHorizon(u32),

    #[error("time {time} is outside the horizon 0..={horizon}")]
    TimeOutOfRange { time: u32, horizon: u32 },

    #[error("no action nodes exist at slice 0 (actions_at_slice0 is off)")]
    NoActionAtSliceZero,

    #[error("malformed node id {0:?}")]
    MalformedNodeId(String),

    #[error("conflicting assertions for {node}: {first:?} vs {second:?}")]
    ConflictingEvidence {
        node: String,
        first: String,
        second: String,
    },

    #[error("parse failed:{}", fmt_list(.0))]
    Parse(Vec<Diagnostic>),
}

fn fmt_list<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| format!("\n  {i}")).collect()
}

pub type Result<T> = std::result::Result<T, Error>;
