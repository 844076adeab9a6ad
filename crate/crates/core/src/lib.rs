//! Action networks: κ-ranked causal networks whose persistent variables are
//! expanded into the suppressor model, unfolded over time, augmented with
//! intervention nodes and queried by exact min-sum inference.
//!
//! ```
//! use anet_core::{fixtures, unfold, Engine, Evidence};
//!
//! let tn = unfold(&fixtures::engine(), 2).unwrap();
//! let engine = Engine::new(tn.network()).unwrap();
//! let ev: Evidence = [("turn_key@0", "true")].into_iter().collect();
//! let p = engine.posterior(&ev, "engine_running@1").unwrap();
//! assert_eq!(p.believed().map(|(v, _)| v), Some("true"));
//! ```

pub mod action;
pub mod error;
pub mod expansion;
pub mod fixtures;
pub mod inference;
pub mod io;
pub mod network;
pub mod rank;
pub mod scenario;
pub mod temporal;

pub use action::{augment_all, augment_with_action};
pub use error::{Error, Result};
pub use expansion::{expand_family, expand_network, verify_marginals, ExpandedFamily};
pub use inference::{
    eliminate, enumerate_rank, most_surprising_explanations, whatif, Engine, Evidence, Explanation, Hint,
    Posterior, RankShift, WhatIf,
};
pub use io::{parse_network, serialize_network, Diagnostic};
pub use network::{Control, Family, Kind, Network, Variable, Violation, ViolationKind};
pub use rank::{Formula, Rank, RankingTable};
pub use scenario::{parse_scenario, serialize_scenario, Assertion, NodeRef, Report, Scenario};
pub use temporal::{unfold, unfold_with, NodeId, Role, TemporalNetwork, UnfoldOptions};
