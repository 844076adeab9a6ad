//! Static action networks: variables, κ-matrix families and the stratified
//! joint ranking they induce.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::rank::{Frame, Rank, RankingTable, World};
use crate::temporal::{NodeId, Role};

/// Value labels of a proposition, in declaration order (`e⁻` first).
pub const BOOLEAN: [&str; 2] = ["false", "true"];

/// Reserved value of an action node meaning "no intervention".
pub const IDLE: &str = "idle";

pub fn boolean_values() -> Vec<String> {
    BOOLEAN.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Does not persist across time slices.
    Event,
    /// Persists through the suppressor model; `flip_surprise` is the rank of
    /// a non-causal change of state between consecutive slices.
    Persistence { flip_surprise: Rank },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Control {
    /// Conjunctive: the action is effective iff every listed variable has the
    /// listed value.
    pub preconditions: BTreeMap<String, String>,
    /// Rank of performing any non-idle action.
    pub action_surprise: Rank,
}

impl Default for Control {
    fn default() -> Self {
        Control {
            preconditions: BTreeMap::new(),
            action_surprise: Rank::ONE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub values: Vec<String>,
    pub kind: Kind,
    pub control: Option<Control>,
}

impl Variable {
    pub fn event(name: impl Into<String>, values: Vec<String>) -> Variable {
        Variable {
            name: name.into(),
            values,
            kind: Kind::Event,
            control: None,
        }
    }

    pub fn binary_event(name: impl Into<String>) -> Variable {
        Variable::event(name, boolean_values())
    }

    pub fn binary_persistence(name: impl Into<String>, flip_surprise: Rank) -> Variable {
        Variable {
            name: name.into(),
            values: boolean_values(),
            kind: Kind::Persistence { flip_surprise },
            control: None,
        }
    }

    pub fn controllable(mut self, control: Control) -> Variable {
        self.control = Some(control);
        self
    }

    pub fn is_persistence(&self) -> bool {
        matches!(self.kind, Kind::Persistence { .. })
    }

    pub fn is_controllable(&self) -> bool {
        self.control.is_some()
    }

    pub fn flip_surprise(&self) -> Option<Rank> {
        match self.kind {
            Kind::Persistence { flip_surprise } => Some(flip_surprise),
            Kind::Event => None,
        }
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }
}

/// `κ(child | parents)`: one row per parent instantiation, one column per
/// child value. Rows are indexed in mixed radix over the parents' value
/// orders, first parent most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    pub child: String,
    pub parents: Vec<String>,
    pub rows: Vec<Vec<Rank>>,
}

impl Family {
    pub fn new(child: impl Into<String>, parents: Vec<String>, rows: Vec<Vec<Rank>>) -> Family {
        Family {
            child: child.into(),
            parents,
            rows,
        }
    }

    /// Root family with a single prior row.
    pub fn prior(child: impl Into<String>, ranks: Vec<Rank>) -> Family {
        Family::new(child, Vec::new(), vec![ranks])
    }

    pub fn entry(&self, row: usize, value: usize) -> Rank {
        self.rows[row][value]
    }

    /// Distinct finite ranks appearing anywhere in the matrix, ascending.
    pub fn finite_ranks(&self) -> BTreeSet<Rank> {
        self.rows
            .iter()
            .flatten()
            .copied()
            .filter(|r| r.is_finite())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    TooFewValues,
    DuplicateValue(String),
    BadLabel(String),
    ReservedName,
    IdleValueOnControllable,
    NonBinaryPersistence,
    InfiniteSurprise(&'static str),
    MissingFamily,
    OrphanFamily,
    DanglingParent(String),
    DuplicateParent(String),
    DanglingPrecondition(String),
    SelfPrecondition,
    UnknownPreconditionValue { var: String, value: String },
    Cycle(Vec<String>),
    RowCount { expected: usize, found: usize },
    RowWidth { expected: usize, found: usize },
    NotNormalized { min: Rank },
    EntryTooLarge(Rank),
}

/// A broken well-formedness rule, located at a variable and optionally one
/// matrix row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub row: Option<String>,
    pub kind: ViolationKind,
}

impl Violation {
    fn new(subject: &str, kind: ViolationKind) -> Violation {
        Violation {
            subject: subject.to_string(),
            row: None,
            kind,
        }
    }

    fn at_row(subject: &str, row: String, kind: ViolationKind) -> Violation {
        Violation {
            subject: subject.to_string(),
            row: Some(row),
            kind,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.subject)?;
        if let Some(row) = &self.row {
            write!(f, " [row {row:?}]")?;
        }
        f.write_str(": ")?;
        match &self.kind {
            ViolationKind::TooFewValues => f.write_str("needs at least two values (one for a suppressor)"),
            ViolationKind::DuplicateValue(v) => write!(f, "value {v:?} declared twice"),
            ViolationKind::BadLabel(v) => write!(f, "label {v:?} contains a reserved character"),
            ViolationKind::ReservedName => f.write_str("not a well-formed node name"),
            ViolationKind::IdleValueOnControllable => {
                write!(f, "controllable variables may not use the value {IDLE:?}")
            }
            ViolationKind::NonBinaryPersistence => f.write_str("persistence variables must be binary"),
            ViolationKind::InfiniteSurprise(what) => write!(f, "{what} must be finite"),
            ViolationKind::MissingFamily => f.write_str("no family declared"),
            ViolationKind::OrphanFamily => f.write_str("family for an undeclared variable"),
            ViolationKind::DanglingParent(p) => write!(f, "parent {p:?} is not declared"),
            ViolationKind::DuplicateParent(p) => write!(f, "parent {p:?} listed twice"),
            ViolationKind::DanglingPrecondition(p) => write!(f, "precondition {p:?} is not declared"),
            ViolationKind::SelfPrecondition => f.write_str("a variable cannot be its own precondition"),
            ViolationKind::UnknownPreconditionValue { var, value } => {
                write!(f, "precondition {var} has no value {value:?}")
            }
            ViolationKind::Cycle(path) => write!(f, "parent cycle {}", path.join(" -> ")),
            ViolationKind::RowCount { expected, found } => {
                write!(f, "expected {expected} rows, found {found}")
            }
            ViolationKind::RowWidth { expected, found } => {
                write!(f, "expected {expected} entries, found {found}")
            }
            ViolationKind::NotNormalized { min } => write!(f, "row minimum is {min}, not 0"),
            ViolationKind::EntryTooLarge(r) => {
                write!(f, "rank {r} exceeds the maximum entry {}", Rank::MAX_ENTRY)
            }
        }
    }
}

pub(crate) fn is_plain_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with("do_")
        && !name.contains(['@', '(', ')', '=', ','])
}

/// Plain names plus the structured forms `S(x)`, `I(x)`, `do_x`, `x@t`.
fn is_node_name(name: &str) -> bool {
    name.parse::<NodeId>().is_ok_and(|id| id.to_string() == name)
}

fn is_suppressor(name: &str) -> bool {
    name.parse::<NodeId>().is_ok_and(|id| id.role == Role::Suppressor)
}

fn is_plain_label(label: &str) -> bool {
    !label.is_empty() && !label.contains(['=', ','])
}

/// A DAG of variables, each with exactly one κ-matrix family.
///
/// Variables and families are kept sorted by name, which fixes the world
/// order of [`Network::frame`] and makes structural equality order-free.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Network {
    pub description: Option<String>,
    variables: BTreeMap<String, Variable>,
    families: BTreeMap<String, Family>,
}

impl Network {
    pub fn new() -> Network {
        Network::default()
    }

    /// Adds or replaces a variable.
    pub fn add_variable(&mut self, var: Variable) -> &mut Self {
        self.variables.insert(var.name.clone(), var);
        self
    }

    /// Adds or replaces the family of `family.child`.
    pub fn set_family(&mut self, family: Family) -> &mut Self {
        self.families.insert(family.child.clone(), family);
        self
    }

    pub fn with(mut self, var: Variable, family: Family) -> Network {
        self.add_variable(var);
        self.set_family(family);
        self
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables.get(name)
    }

    pub fn family(&self, name: &str) -> Option<&Family> {
        self.families.get(name)
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.variables.values()
    }

    pub fn families(&self) -> impl Iterator<Item = &Family> {
        self.families.values()
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn require(&self, name: &str) -> Result<&Variable> {
        self.variable(name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    /// Human-readable label of a row, e.g. `turn_key=true,S(e)=ω^2`.
    pub fn row_label(&self, family: &Family, row: usize) -> String {
        let assignment = self.decode_row(family, row);
        family
            .parents
            .iter()
            .zip(assignment)
            .map(|(p, x)| {
                let label = self
                    .variable(p)
                    .and_then(|v| v.values.get(x))
                    .map(String::as_str)
                    .unwrap_or("?");
                format!("{p}={label}")
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parent value indices of row `row`.
    pub fn decode_row(&self, family: &Family, mut row: usize) -> Vec<usize> {
        let cards: Vec<usize> = family
            .parents
            .iter()
            .map(|p| self.variable(p).map_or(1, |v| v.values.len()))
            .collect();
        let mut out = vec![0; cards.len()];
        for i in (0..cards.len()).rev() {
            out[i] = row % cards[i];
            row /= cards[i];
        }
        out
    }

    /// Row index of a parent instantiation given as value indices.
    pub fn encode_row(&self, family: &Family, assignment: &[usize]) -> usize {
        family
            .parents
            .iter()
            .zip(assignment)
            .fold(0, |acc, (p, &x)| {
                acc * self.variable(p).map_or(1, |v| v.values.len()) + x
            })
    }

    pub fn row_count(&self, family: &Family) -> Option<usize> {
        family.parents.iter().try_fold(1usize, |acc, p| {
            acc.checked_mul(self.variable(p)?.values.len())
        })
    }

    /// Every well-formedness rule this network breaks; empty iff valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        for (name, var) in &self.variables {
            if !is_node_name(name) {
                out.push(Violation::new(name, ViolationKind::ReservedName));
            }
            // a suppressor over an all-zero matrix has the single value ω^0
            let min_values = if is_suppressor(name) { 1 } else { 2 };
            if var.values.len() < min_values {
                out.push(Violation::new(name, ViolationKind::TooFewValues));
            }
            let mut seen = BTreeSet::new();
            for v in &var.values {
                if !seen.insert(v) {
                    out.push(Violation::new(name, ViolationKind::DuplicateValue(v.clone())));
                }
                if !is_plain_label(v) {
                    out.push(Violation::new(name, ViolationKind::BadLabel(v.clone())));
                }
            }
            if let Kind::Persistence { flip_surprise } = var.kind {
                if var.values.len() != 2 {
                    out.push(Violation::new(name, ViolationKind::NonBinaryPersistence));
                }
                if flip_surprise.is_infinite() {
                    out.push(Violation::new(name, ViolationKind::InfiniteSurprise("flip_surprise")));
                }
            }
            if let Some(control) = &var.control {
                if var.values.iter().any(|v| v == IDLE) {
                    out.push(Violation::new(name, ViolationKind::IdleValueOnControllable));
                }
                if control.action_surprise.is_infinite() {
                    out.push(Violation::new(name, ViolationKind::InfiniteSurprise("action_surprise")));
                }
                for (pre, value) in &control.preconditions {
                    if pre == name {
                        out.push(Violation::new(name, ViolationKind::SelfPrecondition));
                        continue;
                    }
                    match self.variables.get(pre) {
                        None => out.push(Violation::new(
                            name,
                            ViolationKind::DanglingPrecondition(pre.clone()),
                        )),
                        Some(pv) if pv.value_index(value).is_none() => out.push(Violation::new(
                            name,
                            ViolationKind::UnknownPreconditionValue {
                                var: pre.clone(),
                                value: value.clone(),
                            },
                        )),
                        Some(_) => {}
                    }
                }
            }
            if !self.families.contains_key(name) {
                out.push(Violation::new(name, ViolationKind::MissingFamily));
            }
        }

        for (child, family) in &self.families {
            let Some(var) = self.variables.get(child) else {
                out.push(Violation::new(child, ViolationKind::OrphanFamily));
                continue;
            };
            let mut shape_ok = true;
            let mut seen = BTreeSet::new();
            for p in &family.parents {
                if !seen.insert(p) {
                    out.push(Violation::new(child, ViolationKind::DuplicateParent(p.clone())));
                }
                if !self.variables.contains_key(p) {
                    out.push(Violation::new(child, ViolationKind::DanglingParent(p.clone())));
                    shape_ok = false;
                }
            }
            if !shape_ok {
                continue;
            }
            let expected = self.row_count(family).unwrap_or(usize::MAX);
            if family.rows.len() != expected {
                out.push(Violation::new(
                    child,
                    ViolationKind::RowCount {
                        expected,
                        found: family.rows.len(),
                    },
                ));
                continue;
            }
            for (i, row) in family.rows.iter().enumerate() {
                if row.len() != var.values.len() {
                    out.push(Violation::at_row(
                        child,
                        self.row_label(family, i),
                        ViolationKind::RowWidth {
                            expected: var.values.len(),
                            found: row.len(),
                        },
                    ));
                    continue;
                }
                if let Some(&big) = row
                    .iter()
                    .find(|r| r.value().is_some_and(|k| k > Rank::MAX_ENTRY))
                {
                    out.push(Violation::at_row(
                        child,
                        self.row_label(family, i),
                        ViolationKind::EntryTooLarge(big),
                    ));
                }
                let min = row.iter().copied().min().unwrap_or(Rank::INFINITY);
                if min != Rank::ZERO {
                    out.push(Violation::at_row(
                        child,
                        self.row_label(family, i),
                        ViolationKind::NotNormalized { min },
                    ));
                }
            }
        }

        if let Err(cycle) = self.topo_sort() {
            out.push(Violation::new(&cycle[0].clone(), ViolationKind::Cycle(cycle)));
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidNetwork(violations))
        }
    }

    /// Variable names with every parent before its children; ties broken by
    /// name.
    pub fn topological_order(&self) -> Result<Vec<String>> {
        self.topo_sort().map_err(|cycle| {
            Error::InvalidNetwork(vec![Violation::new(&cycle[0].clone(), ViolationKind::Cycle(cycle))])
        })
    }

    fn topo_sort(&self) -> std::result::Result<Vec<String>, Vec<String>> {
        let parents_of = |name: &str| -> Vec<&str> {
            self.families
                .get(name)
                .map(|f| {
                    f.parents
                        .iter()
                        .filter(|p| self.variables.contains_key(*p))
                        .map(String::as_str)
                        .collect()
                })
                .unwrap_or_default()
        };
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        let mut order = Vec::with_capacity(self.variables.len());
        for root in self.variables.keys() {
            if state.get(root.as_str()).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(&str, usize)> = vec![(root.as_str(), 0)];
            state.insert(root, 1);
            while let Some(top) = stack.last_mut() {
                let (node, next) = *top;
                let ps = parents_of(node);
                if next < ps.len() {
                    top.1 += 1;
                    let p = ps[next];
                    match state.get(p).copied().unwrap_or(0) {
                        0 => {
                            state.insert(p, 1);
                            stack.push((p, 0));
                        }
                        1 => {
                            let start = stack.iter().position(|(n, _)| *n == p).unwrap_or(0);
                            let mut cycle: Vec<String> =
                                stack[start..].iter().map(|(n, _)| n.to_string()).collect();
                            cycle.push(p.to_string());
                            return Err(cycle);
                        }
                        _ => {}
                    }
                } else {
                    state.insert(node, 2);
                    order.push(node.to_string());
                    stack.pop();
                }
            }
        }
        Ok(order)
    }

    /// Variables in name order with their value labels.
    pub fn frame(&self) -> Frame {
        Frame::new(
            self.variables
                .values()
                .map(|v| (v.name.clone(), v.values.clone())),
        )
    }

    /// `κ(m) = Σ κ(e_i | π(e_i))` for a world over [`Network::frame`].
    pub fn joint_rank(&self, world: &World) -> Rank {
        let index: BTreeMap<&str, usize> = self
            .variables
            .keys()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        self.families
            .values()
            .map(|f| {
                let pa: Vec<usize> = f.parents.iter().map(|p| world.0[index[p.as_str()]]).collect();
                f.entry(self.encode_row(f, &pa), world.0[index[f.child.as_str()]])
            })
            .sum()
    }

    /// The full stratified ranking, one entry per world.
    pub fn ranking_of(&self) -> Result<RankingTable> {
        self.ensure_valid()?;
        let frame = self.frame();
        RankingTable::from_fn(frame, |w| self.joint_rank(w))
    }
}
