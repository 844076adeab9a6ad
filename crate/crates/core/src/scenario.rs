//! Scenarios: a horizon, timed observations and actions, and the questions
//! to ask about them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{Engine, Evidence, Explanation, Posterior, WhatIf};
use crate::io::{to_canonical, Diagnostic, FORMAT_VERSION};
use crate::network::{Network, IDLE};
use crate::temporal::{unfold_with, NodeId, Role, TemporalNetwork, UnfoldOptions};

/// `var = value` at slice `t`. For actions `value` may be `idle`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub t: u32,
    pub var: String,
    pub value: String,
}

impl Assertion {
    pub fn new(t: u32, var: impl Into<String>, value: impl Into<String>) -> Assertion {
        Assertion {
            t,
            var: var.into(),
            value: value.into(),
        }
    }
}

fn is_state(role: &Role) -> bool {
    *role == Role::State
}

/// A node of the unfolded network, by variable, slice and role.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRef {
    pub t: u32,
    pub var: String,
    #[serde(default, skip_serializing_if = "is_state")]
    pub role: Role,
}

impl NodeRef {
    pub fn state(t: u32, var: impl Into<String>) -> NodeRef {
        NodeRef {
            t,
            var: var.into(),
            role: Role::State,
        }
    }

    pub fn action(t: u32, var: impl Into<String>) -> NodeRef {
        NodeRef {
            t,
            var: var.into(),
            role: Role::Action,
        }
    }

    pub fn id(&self) -> NodeId {
        NodeId::at(&self.var, self.role, self.t)
    }

    /// Name of the referenced node in `tn`.
    pub fn resolve(&self, tn: &TemporalNetwork) -> Result<String> {
        tn.node(&self.var, self.role, self.t)
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.id().fmt(f)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplanationBlock {
    pub targets: Vec<NodeRef>,
}

/// Hypothetical assertions layered over the scenario's own.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfBlock {
    #[serde(default)]
    pub observations: Vec<Assertion>,
    #[serde(default)]
    pub actions: Vec<Assertion>,
    pub queries: Vec<NodeRef>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Network file, relative to the scenario file.
    pub network: String,
    pub horizon: u32,
    #[serde(default = "yes")]
    pub actions_at_slice0: bool,
    #[serde(default)]
    pub observations: Vec<Assertion>,
    #[serde(default)]
    pub actions: Vec<Assertion>,
    #[serde(default)]
    pub queries: Vec<NodeRef>,
    #[serde(default)]
    pub explanations: Vec<ExplanationBlock>,
    #[serde(default)]
    pub whatifs: Vec<WhatIfBlock>,
}

impl Scenario {
    pub fn new(network: impl Into<String>, horizon: u32) -> Scenario {
        Scenario {
            format_version: FORMAT_VERSION,
            description: None,
            network: network.into(),
            horizon,
            actions_at_slice0: true,
            observations: Vec::new(),
            actions: Vec::new(),
            queries: Vec::new(),
            explanations: Vec::new(),
            whatifs: Vec::new(),
        }
    }

    pub fn options(&self) -> UnfoldOptions {
        UnfoldOptions {
            actions_at_slice0: self.actions_at_slice0,
        }
    }

    pub fn unfold(&self, net: &Network) -> Result<TemporalNetwork> {
        unfold_with(net, self.horizon, self.options())
    }

    fn check_time(&self, t: u32) -> Result<()> {
        if t > self.horizon {
            return Err(Error::TimeOutOfRange {
                time: t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Records `var = value` at `t`, replacing any observation of the same
    /// variable and slice.
    pub fn observe(&mut self, net: &Network, t: u32, var: &str, value: &str) -> Result<()> {
        self.check_time(t)?;
        let v = net.require(var)?;
        if v.value_index(value).is_none() {
            return Err(unknown_value(var, value));
        }
        upsert(&mut self.observations, Assertion::new(t, var, value));
        Ok(())
    }

    /// Records the action `do_var = value` at `t` (`value` may be `idle`),
    /// replacing any action on the same variable and slice.
    pub fn assert_action(&mut self, net: &Network, t: u32, var: &str, value: &str) -> Result<()> {
        self.check_time(t)?;
        let v = net.require(var)?;
        if !v.is_controllable() {
            return Err(Error::NotControllable(var.to_string()));
        }
        if t == 0 && !self.actions_at_slice0 {
            return Err(Error::NoActionAtSliceZero);
        }
        if value != IDLE && v.value_index(value).is_none() {
            return Err(unknown_value(&format!("do_{var}"), value));
        }
        upsert(&mut self.actions, Assertion::new(t, var, value));
        Ok(())
    }

    pub fn retract_observation(&mut self, t: u32, var: &str) -> bool {
        retract(&mut self.observations, t, var)
    }

    pub fn retract_action(&mut self, t: u32, var: &str) -> bool {
        retract(&mut self.actions, t, var)
    }

    /// Every reference problem against `net`, located by document path.
    pub fn check(&self, net: &Network) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let tn = match self.unfold(net) {
            Ok(tn) => tn,
            Err(e) => return vec![Diagnostic::new("network", e.to_string())],
        };
        let mut report = |at: String, r: Result<()>| {
            if let Err(e) = r {
                diags.push(Diagnostic::new(at, e.to_string()));
            }
        };
        for (i, a) in self.observations.iter().enumerate() {
            report(format!("observations[{i}]"), observation_node(&tn, a).map(drop));
        }
        for (i, a) in self.actions.iter().enumerate() {
            report(format!("actions[{i}]"), action_node(&tn, a).map(drop));
        }
        for (i, q) in self.queries.iter().enumerate() {
            report(format!("queries[{i}]"), q.resolve(&tn).map(drop));
        }
        for (i, block) in self.explanations.iter().enumerate() {
            for (j, q) in block.targets.iter().enumerate() {
                report(format!("explanations[{i}].targets[{j}]"), q.resolve(&tn).map(drop));
            }
        }
        for (i, block) in self.whatifs.iter().enumerate() {
            for (j, a) in block.observations.iter().enumerate() {
                report(format!("whatifs[{i}].observations[{j}]"), observation_node(&tn, a).map(drop));
            }
            for (j, a) in block.actions.iter().enumerate() {
                report(format!("whatifs[{i}].actions[{j}]"), action_node(&tn, a).map(drop));
            }
            for (j, q) in block.queries.iter().enumerate() {
                report(format!("whatifs[{i}].queries[{j}]"), q.resolve(&tn).map(drop));
            }
        }
        if diags.is_empty() {
            if let Err(e) = self.evidence(&tn) {
                diags.push(Diagnostic::new("observations", e.to_string()));
            }
        }
        diags
    }

    /// Observations and actions as evidence on the unfolded network.
    pub fn evidence(&self, tn: &TemporalNetwork) -> Result<Evidence> {
        assertions_evidence(tn, &self.observations, &self.actions)
    }

    /// Unfolds `net` and answers every query, explanation and what-if block.
    pub fn run(&self, net: &Network) -> Result<Report> {
        let diags = self.check(net);
        if !diags.is_empty() {
            return Err(Error::Parse(diags));
        }
        let tn = self.unfold(net)?;
        let engine = Engine::new(tn.network())?;
        let ev = self.evidence(&tn)?;
        let names = |refs: &[NodeRef]| -> Result<Vec<String>> {
            refs.iter().map(|q| q.resolve(&tn)).collect()
        };

        let posteriors = engine.posteriors(&ev, &names(&self.queries)?)?;
        let explanations = self
            .explanations
            .iter()
            .map(|b| engine.explain(&ev, &names(&b.targets)?))
            .collect::<Result<_>>()?;
        let whatifs = self
            .whatifs
            .iter()
            .map(|b| {
                let delta = assertions_evidence(&tn, &b.observations, &b.actions)?;
                Ok(engine.whatif(&ev, &delta, &names(&b.queries)?))
            })
            .collect::<Result<_>>()?;
        Ok(Report {
            posteriors,
            explanations,
            whatifs,
        })
    }
}

fn unknown_value(node: &str, value: &str) -> Error {
    Error::UnknownValue {
        node: node.to_string(),
        value: value.to_string(),
    }
}

fn upsert(list: &mut Vec<Assertion>, a: Assertion) {
    list.retain(|x| !(x.t == a.t && x.var == a.var));
    list.push(a);
    list.sort();
}

fn retract(list: &mut Vec<Assertion>, t: u32, var: &str) -> bool {
    let before = list.len();
    list.retain(|x| !(x.t == t && x.var == var));
    list.len() != before
}

fn checked(tn: &TemporalNetwork, node: String, value: &str) -> Result<String> {
    let var = tn.network().require(&node)?;
    if var.value_index(value).is_none() {
        return Err(unknown_value(&node, value));
    }
    Ok(node)
}

fn observation_node(tn: &TemporalNetwork, a: &Assertion) -> Result<String> {
    checked(tn, tn.state(&a.var, a.t)?, &a.value)
}

fn action_node(tn: &TemporalNetwork, a: &Assertion) -> Result<String> {
    checked(tn, tn.action(&a.var, a.t)?, &a.value)
}

/// Evidence from observation and action lists; two different values for one
/// node is an error.
pub fn assertions_evidence(
    tn: &TemporalNetwork,
    observations: &[Assertion],
    actions: &[Assertion],
) -> Result<Evidence> {
    let mut ev = Evidence::new();
    for a in observations {
        ev.assert(observation_node(tn, a)?, a.value.as_str())?;
    }
    for a in actions {
        ev.assert(action_node(tn, a)?, a.value.as_str())?;
    }
    Ok(ev)
}

/// Answers to a scenario's question blocks, in document order.
#[derive(Debug)]
pub struct Report {
    pub posteriors: Vec<Posterior>,
    pub explanations: Vec<Explanation>,
    pub whatifs: Vec<WhatIf>,
}

fn write_posterior(f: &mut fmt::Formatter<'_>, p: &Posterior) -> fmt::Result {
    let cells: Vec<String> = p.ranks.iter().map(|(v, r)| format!("{v}:{r}")).collect();
    write!(f, "{:<28} {}", p.node, cells.join("  "))?;
    if let Some((v, degree)) = p.believed() {
        write!(f, "   believed {v} ({degree})")?;
    }
    writeln!(f)
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.posteriors {
            write_posterior(f, p)?;
        }
        for x in &self.explanations {
            writeln!(f, "\nexplain {}", x.targets.join(", "))?;
            for p in &x.posteriors {
                write_posterior(f, p)?;
            }
            for (values, rank) in &x.ranked {
                if rank.is_infinite() {
                    continue;
                }
                writeln!(f, "  {rank:>3}  {}", values.join(", "))?;
            }
        }
        for w in &self.whatifs {
            writeln!(f, "\nwhat-if")?;
            for (label, side) in [("base", &w.base), ("hypothetical", &w.hypothetical)] {
                writeln!(f, "  {label}:")?;
                match side {
                    Ok(ps) => {
                        for p in ps {
                            write!(f, "    ")?;
                            write_posterior(f, p)?;
                        }
                    }
                    Err(e) => writeln!(f, "    error: {e}")?,
                }
            }
            for d in &w.diffs {
                let cells: Vec<String> = d.shifts.iter().map(|(v, s)| format!("{v}:{s}")).collect();
                writeln!(f, "  shift {:<22} {}", d.node, cells.join("  "))?;
            }
        }
        Ok(())
    }
}

/// Parses a scenario document and checks what can be checked without the
/// network: version, horizon and slice ranges.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let sc: Scenario =
        serde_json::from_str(text).map_err(|e| Error::Parse(vec![Diagnostic::from_json(&e)]))?;
    let mut diags = Vec::new();
    if sc.format_version != FORMAT_VERSION {
        diags.push(Diagnostic::new(
            "format_version",
            format!("unsupported version {}, expected {FORMAT_VERSION}", sc.format_version),
        ));
    }
    if sc.horizon < 1 {
        diags.push(Diagnostic::new("horizon", "horizon must be at least 1"));
    }
    let mut times: Vec<(String, u32)> = Vec::new();
    let mut collect = |prefix: &str, ts: &mut dyn Iterator<Item = u32>| {
        for (i, t) in ts.enumerate() {
            times.push((format!("{prefix}[{i}].t"), t));
        }
    };
    collect("observations", &mut sc.observations.iter().map(|a| a.t));
    collect("actions", &mut sc.actions.iter().map(|a| a.t));
    collect("queries", &mut sc.queries.iter().map(|q| q.t));
    for (i, b) in sc.explanations.iter().enumerate() {
        collect(&format!("explanations[{i}].targets"), &mut b.targets.iter().map(|q| q.t));
    }
    for (i, b) in sc.whatifs.iter().enumerate() {
        collect(&format!("whatifs[{i}].observations"), &mut b.observations.iter().map(|a| a.t));
        collect(&format!("whatifs[{i}].actions"), &mut b.actions.iter().map(|a| a.t));
        collect(&format!("whatifs[{i}].queries"), &mut b.queries.iter().map(|q| q.t));
    }
    for (at, t) in times {
        if t > sc.horizon {
            diags.push(Diagnostic::new(at, format!("time {t} is outside the horizon 0..={}", sc.horizon)));
        }
    }
    if diags.is_empty() {
        Ok(sc)
    } else {
        Err(Error::Parse(diags))
    }
}

/// Canonical text of a scenario. Assertion lists are sorted by slice and
/// variable; query lists keep their order.
pub fn serialize_scenario(sc: &Scenario) -> String {
    let mut sc = sc.clone();
    sc.observations.sort();
    sc.actions.sort();
    for b in &mut sc.whatifs {
        b.observations.sort();
        b.actions.sort();
    }
    to_canonical(&serde_json::to_value(&sc).expect("documents are plain data"))
}
