//! Unfolding a static action network over a finite horizon.
//!
//! Every slice `t ∈ 0..=T` receives a copy of the static structure:
//!
//! * an event `e` becomes `e@t` with the same κ-matrix over same-slice parents;
//! * a persistence `e` becomes the deterministic `e@t` over
//!   `π(e)@t ∪ {S(e)@t, I(e)@t}`. Suppressors persist through
//!   `κ(ω^i@t+1 | ω^j@t) = |j − i|` and the inertia node follows the previous
//!   state, `κ(I(e)@t+1 = y | e@t = x) = p` for `x ≠ y` and 0 otherwise;
//! * a controllable `e` gets a fresh action node `do_e@t`.
//!
//! The only edges between slices are `S(e)@t → S(e)@t+1` and
//! `e@t → I(e)@t+1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::action::augment_node;
use crate::error::{Error, Result};
use crate::expansion::{functional_rows, suppressor_label, suppressor_values};
use crate::network::{is_plain_name, Family, Kind, Network, Variable};
use crate::rank::Rank;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    State,
    Suppressor,
    Inertia,
    Action,
}

impl Role {
    pub fn is_auxiliary(self) -> bool {
        self != Role::State
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Role> {
        match s {
            "state" => Ok(Role::State),
            "suppressor" => Ok(Role::Suppressor),
            "inertia" => Ok(Role::Inertia),
            "action" => Ok(Role::Action),
            other => Err(Error::MalformedNodeId(other.to_string())),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::State => "state",
            Role::Suppressor => "suppressor",
            Role::Inertia => "inertia",
            Role::Action => "action",
        })
    }
}

/// Structured node name: `var`, `S(var)`, `I(var)` or `do_var`, optionally
/// suffixed by `@t`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    pub var: String,
    pub role: Role,
    pub time: Option<u32>,
}

impl NodeId {
    pub fn new(var: impl Into<String>, role: Role, time: Option<u32>) -> NodeId {
        NodeId {
            var: var.into(),
            role,
            time,
        }
    }

    pub fn at(var: impl Into<String>, role: Role, time: u32) -> NodeId {
        NodeId::new(var, role, Some(time))
    }

    pub fn state(var: impl Into<String>, time: u32) -> NodeId {
        NodeId::at(var, Role::State, time)
    }

    pub fn action(var: impl Into<String>, time: u32) -> NodeId {
        NodeId::at(var, Role::Action, time)
    }

    /// The id without its time suffix.
    pub fn base(&self) -> String {
        NodeId::new(self.var.clone(), self.role, None).to_string()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.role {
            Role::State => write!(f, "{}", self.var)?,
            Role::Suppressor => write!(f, "S({})", self.var)?,
            Role::Inertia => write!(f, "I({})", self.var)?,
            Role::Action => write!(f, "do_{}", self.var)?,
        }
        if let Some(t) = self.time {
            write!(f, "@{t}")?;
        }
        Ok(())
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<NodeId> {
        let malformed = || Error::MalformedNodeId(s.to_string());
        let (base, time) = match s.rsplit_once('@') {
            Some((base, t)) => {
                if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(malformed());
                }
                (base, Some(t.parse::<u32>().map_err(|_| malformed())?))
            }
            None => (s, None),
        };
        let wrapped = |prefix: &str| {
            base.strip_prefix(prefix)
                .and_then(|rest| rest.strip_suffix(')'))
        };
        let (var, role) = if let Some(v) = wrapped("S(") {
            (v, Role::Suppressor)
        } else if let Some(v) = wrapped("I(") {
            (v, Role::Inertia)
        } else if let Some(v) = base.strip_prefix("do_") {
            (v, Role::Action)
        } else {
            (base, Role::State)
        };
        if !is_plain_name(var) {
            return Err(malformed());
        }
        Ok(NodeId::new(var, role, time))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnfoldOptions {
    /// Whether slice 0 receives action nodes. Later slices always do.
    pub actions_at_slice0: bool,
}

impl Default for UnfoldOptions {
    fn default() -> Self {
        UnfoldOptions {
            actions_at_slice0: true,
        }
    }
}

/// A static network compiled over slices `0..=horizon`.
#[derive(Clone, Debug)]
pub struct TemporalNetwork {
    base: Network,
    horizon: u32,
    options: UnfoldOptions,
    network: Network,
    slices: BTreeMap<String, u32>,
}

impl TemporalNetwork {
    pub fn base(&self) -> &Network {
        &self.base
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn options(&self) -> UnfoldOptions {
        self.options
    }

    /// The unfolded plain network.
    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn into_network(self) -> Network {
        self.network
    }

    pub fn slice_of(&self, node: &str) -> Option<u32> {
        self.slices.get(node).copied()
    }

    /// Unfolded nodes of slice `t`, by name.
    pub fn slice(&self, t: u32) -> impl Iterator<Item = &str> {
        self.slices
            .iter()
            .filter(move |(_, &s)| s == t)
            .map(|(n, _)| n.as_str())
    }

    fn check_time(&self, time: u32) -> Result<()> {
        if time > self.horizon {
            return Err(Error::TimeOutOfRange {
                time,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Name of an existing unfolded node.
    pub fn node(&self, var: &str, role: Role, time: u32) -> Result<String> {
        self.check_time(time)?;
        let id = NodeId::at(var, role, time).to_string();
        if self.network.variable(&id).is_none() {
            return Err(match role {
                Role::Action if self.base.variable(var).is_some_and(|v| v.is_controllable()) => {
                    Error::NoActionAtSliceZero
                }
                Role::Action if self.base.variable(var).is_some() => {
                    Error::NotControllable(var.to_string())
                }
                _ => Error::UnknownNode(id),
            });
        }
        Ok(id)
    }

    pub fn state(&self, var: &str, time: u32) -> Result<String> {
        self.node(var, Role::State, time)
    }

    pub fn action(&self, var: &str, time: u32) -> Result<String> {
        self.node(var, Role::Action, time)
    }
}

pub fn unfold(net: &Network, horizon: u32) -> Result<TemporalNetwork> {
    unfold_with(net, horizon, UnfoldOptions::default())
}

pub fn unfold_with(net: &Network, horizon: u32, options: UnfoldOptions) -> Result<TemporalNetwork> {
    net.ensure_valid()?;
    if horizon < 1 {
        return Err(Error::InvalidHorizon(horizon));
    }
    for var in net.variables() {
        if !is_plain_name(&var.name) {
            return Err(Error::MalformedNodeId(var.name.clone()));
        }
    }

    let mut out = Network::new();
    let mut slices = BTreeMap::new();
    let record = |out: &mut Network, slices: &mut BTreeMap<String, u32>, var: Variable, family: Family, t: u32| {
        slices.insert(var.name.clone(), t);
        out.add_variable(var);
        out.set_family(family);
    };

    for t in 0..=horizon {
        for var in net.variables() {
            let family = net.family(&var.name).expect("validated network");
            let node = NodeId::state(&var.name, t).to_string();
            let mut parents: Vec<String> = family
                .parents
                .iter()
                .map(|p| NodeId::state(p, t).to_string())
                .collect();

            match var.kind {
                Kind::Event => {
                    record(
                        &mut out,
                        &mut slices,
                        Variable::event(&node, var.values.clone()),
                        Family::new(&node, parents, family.rows.clone()),
                        t,
                    );
                }
                Kind::Persistence { flip_surprise } => {
                    let strengths = suppressor_values(family);
                    let s_node = NodeId::at(&var.name, Role::Suppressor, t).to_string();
                    let i_node = NodeId::at(&var.name, Role::Inertia, t).to_string();

                    let s_family = if t == 0 {
                        Family::prior(&s_node, strengths.clone())
                    } else {
                        Family::new(
                            &s_node,
                            vec![NodeId::at(&var.name, Role::Suppressor, t - 1).to_string()],
                            suppressor_transition(&strengths),
                        )
                    };
                    record(
                        &mut out,
                        &mut slices,
                        Variable::event(&s_node, strengths.iter().map(|&s| suppressor_label(s)).collect()),
                        s_family,
                        t,
                    );

                    let i_family = if t == 0 {
                        Family::prior(&i_node, vec![Rank::ZERO; var.values.len()])
                    } else {
                        Family::new(
                            &i_node,
                            vec![NodeId::state(&var.name, t - 1).to_string()],
                            inertia_transition(var.values.len(), flip_surprise),
                        )
                    };
                    record(&mut out, &mut slices, Variable::event(&i_node, var.values.clone()), i_family, t);

                    let rows = functional_rows(family, &strengths);
                    parents.push(s_node);
                    parents.push(i_node);
                    record(
                        &mut out,
                        &mut slices,
                        Variable::event(&node, var.values.clone()),
                        Family::new(&node, parents, rows),
                        t,
                    );
                }
            }
        }

        if t > 0 || options.actions_at_slice0 {
            for var in net.variables() {
                let Some(control) = &var.control else { continue };
                let node = NodeId::state(&var.name, t).to_string();
                let action = NodeId::action(&var.name, t).to_string();
                let pre: Vec<(String, String)> = control
                    .preconditions
                    .iter()
                    .map(|(p, v)| (NodeId::state(p, t).to_string(), v.clone()))
                    .collect();
                augment_node(&mut out, &node, &action, &pre, control.action_surprise)?;
                slices.insert(action, t);
            }
        }
    }

    debug_assert!(out.validate().is_empty(), "{:?}", out.validate());
    Ok(TemporalNetwork {
        base: net.clone(),
        horizon,
        options,
        network: out,
        slices,
    })
}

/// `κ(ω^i@t+1 | ω^j@t) = |j − i|`, rows indexed by the previous strength.
pub fn suppressor_transition(strengths: &[Rank]) -> Vec<Vec<Rank>> {
    let finite = |r: Rank| r.value().expect("suppressor strengths are finite");
    strengths
        .iter()
        .map(|&j| {
            strengths
                .iter()
                .map(|&i| Rank::finite(finite(j).abs_diff(finite(i))))
                .collect()
        })
        .collect()
}

/// `κ(I@t+1 = y | e@t = x)`: 0 when `y = x`, `p` otherwise.
pub fn inertia_transition(values: usize, flip_surprise: Rank) -> Vec<Vec<Rank>> {
    (0..values)
        .map(|x| {
            (0..values)
                .map(|y| if x == y { Rank::ZERO } else { flip_surprise })
                .collect()
        })
        .collect()
}
