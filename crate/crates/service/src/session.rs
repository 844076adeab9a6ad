//! Sessions: a network, a horizon and the assertions made so far, with the
//! unfolded network and its engine cached.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

use anet_core::scenario::assertions_evidence;
use anet_core::{
    Assertion, Diagnostic, Engine, Error as CoreError, Evidence, Hint, Network, NodeId, Posterior, Rank, RankShift,
    Role, Scenario, TemporalNetwork,
};
use serde::{Deserialize, Serialize, Serializer};
use tokio::sync::Mutex;
use uuid::Uuid;

#[derive(Debug)]
pub enum SessionError {
    NotFound(String),
    Invalid(Vec<Diagnostic>),
    /// The assertions would make the evidence impossible; `conflict` is a
    /// minimal subset that is already impossible on its own.
    Inconsistent { conflict: Vec<Conflict> },
}

impl SessionError {
    fn invalid(location: impl Into<String>, e: impl ToString) -> SessionError {
        SessionError::Invalid(vec![Diagnostic::new(location, e.to_string())])
    }
}

impl std::fmt::Display for SessionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SessionError::NotFound(what) => write!(f, "{what} not found"),
            SessionError::Invalid(diags) => {
                let parts: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
                write!(f, "invalid request: {}", parts.join("; "))
            }
            SessionError::Inconsistent { .. } => f.write_str("assertions are jointly impossible"),
        }
    }
}

impl std::error::Error for SessionError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssertionKind {
    Observation,
    Action,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub kind: AssertionKind,
    pub t: u32,
    pub var: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Slot {
    pub t: u32,
    pub var: String,
}

/// One `PUT /sessions/{id}/assertions` request. Retractions apply first,
/// then additions, each replacing any assertion on the same slot.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssertionBatch {
    #[serde(default)]
    pub observations: Vec<Assertion>,
    #[serde(default)]
    pub actions: Vec<Assertion>,
    #[serde(default)]
    pub retract_observations: Vec<Slot>,
    #[serde(default)]
    pub retract_actions: Vec<Slot>,
}

/// The unfolded network of a session and its compiled engine.
pub struct Compiled {
    pub tn: TemporalNetwork,
    pub engine: Engine,
}

fn compile(network: &Network, scenario: &Scenario) -> Result<Compiled, SessionError> {
    let tn = scenario.unfold(network).map_err(|e| SessionError::invalid("horizon", e))?;
    let engine = Engine::new(tn.network()).map_err(|e| SessionError::invalid("network", e))?;
    Ok(Compiled { tn, engine })
}

pub struct Session {
    pub id: Uuid,
    pub network_id: Uuid,
    network: Arc<Network>,
    scenario: Scenario,
    compiled: Arc<Compiled>,
}

impl Session {
    /// Opens a session on `scenario`'s horizon and assertions. Question
    /// blocks in the scenario are kept but not run.
    pub fn open(id: Uuid, network_id: Uuid, network: Arc<Network>, mut scenario: Scenario) -> Result<Session, SessionError> {
        scenario.network = network_id.to_string();
        let compiled = Arc::new(compile(&network, &scenario)?);
        let diags = scenario.check(&network);
        if !diags.is_empty() {
            return Err(SessionError::Invalid(diags));
        }
        ensure_consistent(&compiled, &scenario)?;
        Ok(Session {
            id,
            network_id,
            network,
            scenario,
            compiled,
        })
    }

    pub fn horizon(&self) -> u32 {
        self.scenario.horizon
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    /// The compiled network and current evidence, for querying outside the
    /// session lock.
    pub fn snapshot(&self) -> (Arc<Compiled>, Evidence) {
        let ev = self
            .scenario
            .evidence(&self.compiled.tn)
            .expect("session evidence is kept valid");
        (self.compiled.clone(), ev)
    }

    /// Applies a batch atomically: on any error the session is unchanged.
    pub fn apply(&mut self, batch: &AssertionBatch) -> Result<(), SessionError> {
        let mut next = self.scenario.clone();
        for s in &batch.retract_observations {
            next.retract_observation(s.t, &s.var);
        }
        for s in &batch.retract_actions {
            next.retract_action(s.t, &s.var);
        }
        let mut diags = Vec::new();
        for (i, a) in batch.observations.iter().enumerate() {
            if let Err(e) = next.observe(&self.network, a.t, &a.var, &a.value) {
                diags.push(Diagnostic::new(format!("observations[{i}]"), e.to_string()));
            }
        }
        for (i, a) in batch.actions.iter().enumerate() {
            if let Err(e) = next.assert_action(&self.network, a.t, &a.var, &a.value) {
                diags.push(Diagnostic::new(format!("actions[{i}]"), e.to_string()));
            }
        }
        if !diags.is_empty() {
            return Err(SessionError::Invalid(diags));
        }
        ensure_consistent(&self.compiled, &next)?;
        self.scenario = next;
        Ok(())
    }

    /// Changes the horizon, recompiling the cached network. Assertions
    /// beyond the new horizon make this fail.
    pub fn set_horizon(&mut self, horizon: u32) -> Result<(), SessionError> {
        let mut next = self.scenario.clone();
        next.horizon = horizon;
        let compiled = compile(&self.network, &next)?;
        let diags = next.check(&self.network);
        if !diags.is_empty() {
            return Err(SessionError::Invalid(diags));
        }
        ensure_consistent(&compiled, &next)?;
        self.scenario = next;
        self.compiled = Arc::new(compiled);
        Ok(())
    }
}

fn tagged(scenario: &Scenario) -> Vec<Conflict> {
    let tag = |kind, a: &Assertion| Conflict {
        kind,
        t: a.t,
        var: a.var.clone(),
        value: a.value.clone(),
    };
    scenario
        .observations
        .iter()
        .map(|a| tag(AssertionKind::Observation, a))
        .chain(scenario.actions.iter().map(|a| tag(AssertionKind::Action, a)))
        .collect()
}

fn rank_of(compiled: &Compiled, items: &[Conflict]) -> Result<Rank, SessionError> {
    let split = |kind| -> Vec<Assertion> {
        items
            .iter()
            .filter(|c| c.kind == kind)
            .map(|c| Assertion::new(c.t, &c.var, &c.value))
            .collect()
    };
    let ev = assertions_evidence(&compiled.tn, &split(AssertionKind::Observation), &split(AssertionKind::Action))
        .map_err(|e| SessionError::invalid("assertions", e))?;
    compiled
        .engine
        .evidence_rank(&ev)
        .map_err(|e| SessionError::invalid("assertions", e))
}

/// Fails with a minimal impossible subset if the scenario's assertions are
/// jointly impossible.
fn ensure_consistent(compiled: &Compiled, scenario: &Scenario) -> Result<(), SessionError> {
    let all = tagged(scenario);
    if rank_of(compiled, &all)?.is_finite() {
        return Ok(());
    }
    // deletion filter: drop every assertion the contradiction survives without
    let mut core = all;
    let mut i = 0;
    while i < core.len() {
        let mut without = core.clone();
        without.remove(i);
        if rank_of(compiled, &without)?.is_infinite() {
            core = without;
        } else {
            i += 1;
        }
    }
    Err(SessionError::Inconsistent { conflict: core })
}

#[derive(Clone, Debug, Serialize)]
pub struct ValueBelief {
    pub value: String,
    pub rank: Rank,
    pub hint: Hint,
}

/// Posterior of one unfolded node, with what the UI needs to draw it.
#[derive(Clone, Debug, Serialize)]
pub struct NodeBelief {
    pub node: String,
    pub var: String,
    pub role: Role,
    pub t: u32,
    pub values: Vec<ValueBelief>,
    pub believed: Option<String>,
    pub degree: Option<Rank>,
    pub asserted: Option<String>,
}

/// Resolves `vars` entries to unfolded nodes. A plain variable or a role
/// form such as `S(alive)` or `do_loaded_gun` covers every slice where the
/// node exists; a `@t` suffix picks one slice. No entries means every
/// variable's state.
pub fn select(tn: &TemporalNetwork, vars: &[String]) -> Result<Vec<String>, SessionError> {
    let defaults: Vec<String>;
    let vars = if vars.is_empty() {
        defaults = tn.base().variables().map(|v| v.name.clone()).collect();
        &defaults
    } else {
        vars
    };
    let mut out = Vec::new();
    for entry in vars {
        let id: NodeId = entry
            .trim()
            .parse()
            .map_err(|e| SessionError::invalid(format!("vars[{entry:?}]"), e))?;
        if tn.base().variable(&id.var).is_none() {
            return Err(SessionError::invalid(
                format!("vars[{entry:?}]"),
                CoreError::UnknownNode(id.var.clone()),
            ));
        }
        match id.time {
            Some(t) => out.push(
                tn.node(&id.var, id.role, t)
                    .map_err(|e| SessionError::invalid(format!("vars[{entry:?}]"), e))?,
            ),
            None => {
                let found: Vec<String> = (0..=tn.horizon())
                    .filter_map(|t| tn.node(&id.var, id.role, t).ok())
                    .collect();
                if found.is_empty() {
                    return Err(SessionError::invalid(
                        format!("vars[{entry:?}]"),
                        format!("no {} node for {}", id.role, id.var),
                    ));
                }
                out.extend(found);
            }
        }
    }
    let mut seen = BTreeSet::new();
    out.retain(|n| seen.insert(n.clone()));
    Ok(out)
}

fn node_belief(p: &Posterior, ev: &Evidence) -> NodeBelief {
    let id: NodeId = p.node.parse().expect("unfolded node ids parse");
    let believed = p.believed();
    NodeBelief {
        node: p.node.clone(),
        var: id.var,
        role: id.role,
        t: id.time.unwrap_or(0),
        values: p
            .ranks
            .iter()
            .map(|(v, r)| ValueBelief {
                value: v.clone(),
                rank: *r,
                hint: Hint::from(*r),
            })
            .collect(),
        believed: believed.map(|(v, _)| v.to_string()),
        degree: believed.map(|(_, d)| d),
        asserted: ev.get(&p.node).map(str::to_string),
    }
}

pub fn beliefs(compiled: &Compiled, ev: &Evidence, nodes: &[String]) -> Result<Vec<NodeBelief>, CoreError> {
    Ok(compiled
        .engine
        .posteriors(ev, nodes)?
        .iter()
        .map(|p| node_belief(p, ev))
        .collect())
}

/// Serialized as an integer, or `"+inf"` / `"-inf"` when a value becomes
/// impossible or possible.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shift(pub RankShift);

impl Serialize for Shift {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            RankShift::By(d) => s.serialize_i64(d),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValueShift {
    pub value: String,
    pub shift: Shift,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeDiff {
    pub node: String,
    pub shifts: Vec<ValueShift>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Branch {
    Beliefs { beliefs: Vec<NodeBelief> },
    Failed { error: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct WhatIfResult {
    pub base: Branch,
    pub hypothetical: Branch,
    pub diffs: Vec<NodeDiff>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    #[serde(default)]
    pub observations: Vec<Assertion>,
    #[serde(default)]
    pub actions: Vec<Assertion>,
    #[serde(default)]
    pub vars: Vec<String>,
}

/// Posteriors under `ev` and under `ev` overridden by the request's
/// assertions. Nothing is written back to the session.
pub fn whatif(compiled: &Compiled, ev: &Evidence, req: &WhatIfRequest) -> Result<WhatIfResult, SessionError> {
    let delta = assertions_evidence(&compiled.tn, &req.observations, &req.actions)
        .map_err(|e| SessionError::invalid("delta", e))?;
    let nodes = select(&compiled.tn, &req.vars)?;
    let hypothetical_ev = ev.overridden_by(&delta);
    let w = compiled.engine.whatif(ev, &delta, &nodes);
    let branch = |side: Result<Vec<Posterior>, CoreError>, ev: &Evidence| match side {
        Ok(ps) => Branch::Beliefs {
            beliefs: ps.iter().map(|p| node_belief(p, ev)).collect(),
        },
        Err(e) => Branch::Failed { error: e.to_string() },
    };
    Ok(WhatIfResult {
        base: branch(w.base, ev),
        hypothetical: branch(w.hypothetical, &hypothetical_ev),
        diffs: w
            .diffs
            .into_iter()
            .map(|d| NodeDiff {
                node: d.node,
                shifts: d
                    .shifts
                    .into_iter()
                    .map(|(value, s)| ValueShift { value, shift: Shift(s) })
                    .collect(),
            })
            .collect(),
    })
}

/// Networks and sessions held in memory.
#[derive(Clone, Default)]
pub struct Store {
    networks: Arc<RwLock<HashMap<Uuid, Arc<Network>>>>,
    sessions: Arc<RwLock<HashMap<Uuid, Arc<Mutex<Session>>>>>,
}

impl Store {
    pub fn add_network(&self, network: Network) -> Uuid {
        let id = Uuid::new_v4();
        self.networks.write().unwrap().insert(id, Arc::new(network));
        id
    }

    pub fn network(&self, id: Uuid) -> Result<Arc<Network>, SessionError> {
        self.networks
            .read()
            .unwrap()
            .get(&id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(format!("network {id}")))
    }

    pub fn open_session(&self, network_id: Uuid, scenario: Scenario) -> Result<Uuid, SessionError> {
        let network = self.network(network_id)?;
        let id = Uuid::new_v4();
        let session = Session::open(id, network_id, network, scenario)?;
        self.sessions
            .write()
            .unwrap()
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn session(&self, id: Uuid) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.sessions
            .read()
            .unwrap()
            .get(&id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(format!("session {id}")))
    }

    pub fn close_session(&self, id: Uuid) -> Result<(), SessionError> {
        self.sessions
            .write()
            .unwrap()
            .remove(&id)
            .map(drop)
            .ok_or_else(|| SessionError::NotFound(format!("session {id}")))
    }
}
