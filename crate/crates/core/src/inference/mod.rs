//! Exact κ-inference.
//!
//! [`Engine`] answers queries by min-sum variable elimination: factors are
//! combined with saturating `+` and variables eliminated with `min`, in a
//! min-fill order with ties broken by node name. Conditional ranks are the
//! difference of two passes, `κ(φ ∧ ev) − κ(ev)`.
//!
//! [`enumerate_rank`] is the reference: an exhaustive search over worlds
//! that applies the stratified joint ranking directly.

mod factor;
mod oracle;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::rank::Rank;

use factor::Factor;
pub use oracle::{enumerate_min, enumerate_rank, ORACLE_BUDGET};

/// Assertions `node = value`, observations and actions alike.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Evidence(BTreeMap<String, String>);

impl Evidence {
    pub fn new() -> Evidence {
        Evidence::default()
    }

    /// Adds an assertion; asserting a different value for the same node is
    /// an error.
    pub fn assert(&mut self, node: impl Into<String>, value: impl Into<String>) -> Result<()> {
        let node = node.into();
        let value = value.into();
        match self.0.get(&node) {
            Some(old) if *old != value => Err(Error::ConflictingEvidence {
                node,
                first: old.clone(),
                second: value,
            }),
            _ => {
                self.0.insert(node, value);
                Ok(())
            }
        }
    }

    /// Adds or replaces an assertion.
    pub fn set(&mut self, node: impl Into<String>, value: impl Into<String>) {
        self.0.insert(node.into(), value.into());
    }

    pub fn remove(&mut self, node: &str) -> Option<String> {
        self.0.remove(node)
    }

    pub fn get(&self, node: &str) -> Option<&str> {
        self.0.get(node).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(n, v)| (n.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self` with every assertion of `delta` taking precedence.
    pub fn overridden_by(&self, delta: &Evidence) -> Evidence {
        let mut out = self.clone();
        for (n, v) in delta.iter() {
            out.set(n, v);
        }
        out
    }
}

impl<N: Into<String>, V: Into<String>> FromIterator<(N, V)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (N, V)>>(iter: I) -> Evidence {
        Evidence(iter.into_iter().map(|(n, v)| (n.into(), v.into())).collect())
    }
}

/// Display bucket for a rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hint {
    Plausible,
    Surprising,
    VerySurprising,
    Impossible,
}

impl From<Rank> for Hint {
    fn from(r: Rank) -> Hint {
        match r.value() {
            None => Hint::Impossible,
            Some(0) => Hint::Plausible,
            Some(1..=2) => Hint::Surprising,
            Some(_) => Hint::VerySurprising,
        }
    }
}

impl fmt::Display for Hint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hint::Plausible => "plausible",
            Hint::Surprising => "surprising",
            Hint::VerySurprising => "very surprising",
            Hint::Impossible => "impossible",
        })
    }
}

/// `κ(node = v | evidence)` for every value `v`, in declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Posterior {
    pub node: String,
    pub ranks: Vec<(String, Rank)>,
}

impl Posterior {
    pub fn rank(&self, value: &str) -> Option<Rank> {
        self.ranks.iter().find(|(v, _)| v == value).map(|&(_, r)| r)
    }

    /// The value believed with positive degree, if any: every rival has a
    /// rank above zero.
    pub fn believed(&self) -> Option<(&str, Rank)> {
        let zeros: Vec<_> = self.ranks.iter().filter(|(_, r)| r.is_zero()).collect();
        if zeros.len() != 1 {
            return None;
        }
        let degree = self
            .ranks
            .iter()
            .filter(|(v, _)| *v != zeros[0].0)
            .map(|&(_, r)| r)
            .min()
            .unwrap_or(Rank::INFINITY);
        Some((zeros[0].0.as_str(), degree))
    }
}

/// Change of one value's rank between two posteriors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankShift {
    By(i64),
    BecameImpossible,
    BecamePossible,
}

impl RankShift {
    pub fn between(before: Rank, after: Rank) -> RankShift {
        match (before.value(), after.value()) {
            (Some(a), Some(b)) => RankShift::By(b as i64 - a as i64),
            (Some(_), None) => RankShift::BecameImpossible,
            (None, Some(_)) => RankShift::BecamePossible,
            (None, None) => RankShift::By(0),
        }
    }

    pub fn is_zero(self) -> bool {
        self == RankShift::By(0)
    }
}

impl fmt::Display for RankShift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankShift::By(d) => write!(f, "{d:+}"),
            RankShift::BecameImpossible => f.write_str("+inf"),
            RankShift::BecamePossible => f.write_str("-inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosteriorDiff {
    pub node: String,
    pub shifts: Vec<(String, RankShift)>,
}

/// Posteriors under a base evidence set and under base overridden by a delta.
/// Each branch fails independently.
#[derive(Debug)]
pub struct WhatIf {
    pub base: Result<Vec<Posterior>>,
    pub hypothetical: Result<Vec<Posterior>>,
    /// Per-node differences; empty unless both branches succeeded.
    pub diffs: Vec<PosteriorDiff>,
}

/// Result of an abduction query over a set of target nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Explanation {
    pub targets: Vec<String>,
    pub posteriors: Vec<Posterior>,
    /// Every joint target assignment with its conditional rank, ordered by
    /// rank then lexicographically by value labels.
    pub ranked: Vec<(Vec<String>, Rank)>,
    /// The rank-0 assignments, lexicographic.
    pub best: Vec<Vec<String>>,
    /// One most plausible complete world per entry of `best`.
    pub completions: Vec<BTreeMap<String, String>>,
}

/// Largest joint target space an explanation query enumerates.
pub const MAX_EXPLANATION_ASSIGNMENTS: usize = 1 << 16;

/// A network compiled for repeated queries.
#[derive(Clone, Debug)]
pub struct Engine {
    names: Vec<String>,
    index: HashMap<String, usize>,
    labels: Vec<Vec<String>>,
    parents: Vec<Vec<usize>>,
    /// Row multiplier of each parent, aligned with `parents`.
    multipliers: Vec<Vec<usize>>,
    /// Flattened κ-matrix: `row * card + value`.
    cpts: Vec<Vec<Rank>>,
    topo: Vec<usize>,
}

impl Engine {
    pub fn new(net: &Network) -> Result<Engine> {
        net.ensure_valid()?;
        let names: Vec<String> = net.variables().map(|v| v.name.clone()).collect();
        let index: HashMap<String, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let labels: Vec<Vec<String>> = net.variables().map(|v| v.values.clone()).collect();

        let mut parents = Vec::with_capacity(names.len());
        let mut multipliers = Vec::with_capacity(names.len());
        let mut cpts = Vec::with_capacity(names.len());
        for name in &names {
            let f = net.family(name).expect("validated");
            let ps: Vec<usize> = f.parents.iter().map(|p| index[p]).collect();
            let mut mult = vec![1usize; ps.len()];
            for k in (0..ps.len().saturating_sub(1)).rev() {
                mult[k] = mult[k + 1] * labels[ps[k + 1]].len();
            }
            parents.push(ps);
            multipliers.push(mult);
            cpts.push(f.rows.iter().flatten().copied().collect());
        }
        let topo = net
            .topological_order()?
            .iter()
            .map(|n| index[n])
            .collect();
        Ok(Engine {
            names,
            index,
            labels,
            parents,
            multipliers,
            cpts,
            topo,
        })
    }

    pub fn node_names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self, node: &str) -> Result<&[String]> {
        Ok(&self.labels[self.node_index(node)?])
    }

    fn node_index(&self, node: &str) -> Result<usize> {
        self.index
            .get(node)
            .copied()
            .ok_or_else(|| Error::UnknownNode(node.to_string()))
    }

    fn value_index(&self, node: usize, value: &str) -> Result<usize> {
        self.labels[node]
            .iter()
            .position(|v| v == value)
            .ok_or_else(|| Error::UnknownValue {
                node: self.names[node].clone(),
                value: value.to_string(),
            })
    }

    fn resolve(&self, ev: &Evidence) -> Result<Vec<Option<usize>>> {
        let mut out = vec![None; self.names.len()];
        for (node, value) in ev.iter() {
            let n = self.node_index(node)?;
            out[n] = Some(self.value_index(n, value)?);
        }
        Ok(out)
    }

    fn local_rank(&self, node: usize, value_of: impl Fn(usize) -> usize) -> Rank {
        let row: usize = self.parents[node]
            .iter()
            .zip(&self.multipliers[node])
            .map(|(&p, &m)| value_of(p) * m)
            .sum();
        self.cpts[node][row * self.labels[node].len() + value_of(node)]
    }

    /// Ancestors of the seeds, seeds included. Everything else is barren:
    /// with normalized rows it min-marginalizes to zero.
    fn relevant(&self, seeds: impl Iterator<Item = usize>) -> Vec<bool> {
        let mut mark = vec![false; self.names.len()];
        let mut stack: Vec<usize> = seeds.collect();
        while let Some(n) = stack.pop() {
            if !mark[n] {
                mark[n] = true;
                stack.extend(self.parents[n].iter().copied().filter(|&p| !mark[p]));
            }
        }
        mark
    }

    /// Min-sum elimination of everything except `keep` (which must not be
    /// evidence). Returns the factor over `keep` and, when `trace` is set,
    /// each eliminated variable with the factor it was minimized out of.
    fn min_sum(
        &self,
        ev: &[Option<usize>],
        keep: &[usize],
        trace: bool,
    ) -> (Factor, Vec<(usize, Factor)>, Vec<bool>) {
        let seeds = (0..self.names.len())
            .filter(|&n| ev[n].is_some())
            .chain(keep.iter().copied());
        let relevant = self.relevant(seeds);

        let mut factors: Vec<Factor> = Vec::new();
        for node in (0..self.names.len()).filter(|&n| relevant[n]) {
            let mut scope: Vec<usize> = self.parents[node]
                .iter()
                .copied()
                .chain(std::iter::once(node))
                .filter(|&v| ev[v].is_none())
                .collect();
            scope.sort_unstable();
            let cards: Vec<usize> = scope.iter().map(|&v| self.labels[v].len()).collect();
            let f = Factor::tabulate(scope.clone(), cards, |asg| {
                self.local_rank(node, |v| match ev[v] {
                    Some(x) => x,
                    None => asg[scope.binary_search(&v).expect("in scope")],
                })
            });
            if f.vars().is_empty() && f.table()[0].is_zero() {
                continue;
            }
            factors.push(f);
        }

        let keep_set: BTreeSet<usize> = keep.iter().copied().collect();
        let candidates: BTreeSet<usize> = (0..self.names.len())
            .filter(|&n| relevant[n] && ev[n].is_none() && !keep_set.contains(&n))
            .collect();
        let order = min_fill_order(&factors, candidates);

        let mut traced = Vec::new();
        for var in order {
            let (with, without): (Vec<Factor>, Vec<Factor>) =
                factors.into_iter().partition(|f| f.contains(var));
            factors = without;
            if with.is_empty() {
                continue;
            }
            let refs: Vec<&Factor> = with.iter().collect();
            let combined = Factor::combine(&refs);
            factors.push(combined.min_out(var));
            if trace {
                traced.push((var, combined));
            }
        }
        let refs: Vec<&Factor> = factors.iter().collect();
        let mut result = if refs.is_empty() {
            Factor::scalar(Rank::ZERO)
        } else {
            Factor::combine(&refs)
        };
        // keep variables absent from every factor are unconstrained
        for &k in keep {
            if !result.contains(k) {
                let unit = Factor::tabulate(vec![k], vec![self.labels[k].len()], |_| Rank::ZERO);
                result = Factor::combine(&[&result, &unit]);
            }
        }
        (result, traced, relevant)
    }

    /// Absolute `κ(ev)`: the minimum joint rank over worlds satisfying `ev`.
    pub fn evidence_rank(&self, ev: &Evidence) -> Result<Rank> {
        let ev = self.resolve(ev)?;
        Ok(self.min_sum(&ev, &[], false).0.min())
    }

    fn consistent(&self, ev: &[Option<usize>]) -> Result<Rank> {
        let base = self.min_sum(ev, &[], false).0.min();
        if base.is_infinite() {
            return Err(Error::Inconsistent);
        }
        Ok(base)
    }

    /// `κ(extra | ev)`, infinite when `extra` contradicts `ev`.
    pub fn conditional_rank(&self, ev: &Evidence, extra: &Evidence) -> Result<Rank> {
        let resolved = self.resolve(ev)?;
        let base = self.consistent(&resolved)?;
        let mut joint = resolved;
        for (node, value) in extra.iter() {
            let n = self.node_index(node)?;
            let x = self.value_index(n, value)?;
            match joint[n] {
                Some(old) if old != x => return Ok(Rank::INFINITY),
                _ => joint[n] = Some(x),
            }
        }
        let both = self.min_sum(&joint, &[], false).0.min();
        both.minus(base)
    }

    pub fn posterior(&self, ev: &Evidence, node: &str) -> Result<Posterior> {
        let resolved = self.resolve(ev)?;
        let n = self.node_index(node)?;
        self.posterior_resolved(&resolved, n)
    }

    fn posterior_resolved(&self, ev: &[Option<usize>], n: usize) -> Result<Posterior> {
        let ranks: Vec<Rank> = match ev[n] {
            Some(x) => {
                self.consistent(ev)?;
                (0..self.labels[n].len())
                    .map(|v| if v == x { Rank::ZERO } else { Rank::INFINITY })
                    .collect()
            }
            None => {
                let f = self.min_sum(ev, &[n], false).0;
                let base = f.min();
                if base.is_infinite() {
                    return Err(Error::Inconsistent);
                }
                f.table()
                    .iter()
                    .map(|r| r.minus(base).expect("min is a lower bound"))
                    .collect()
            }
        };
        Ok(Posterior {
            node: self.names[n].clone(),
            ranks: self.labels[n].iter().cloned().zip(ranks).collect(),
        })
    }

    pub fn posteriors<S: AsRef<str>>(&self, ev: &Evidence, nodes: &[S]) -> Result<Vec<Posterior>> {
        let resolved = self.resolve(ev)?;
        let idx: Vec<usize> = nodes
            .iter()
            .map(|n| self.node_index(n.as_ref()))
            .collect::<Result<_>>()?;
        self.consistent(&resolved)?;
        idx.into_iter()
            .map(|n| self.posterior_resolved(&resolved, n))
            .collect()
    }

    /// Conditional rank of every joint assignment of `targets` (value indices
    /// in the order of `targets`), lexicographic in value index.
    pub fn joint<S: AsRef<str>>(&self, ev: &Evidence, targets: &[S]) -> Result<Vec<(Vec<usize>, Rank)>> {
        let resolved = self.resolve(ev)?;
        let idx: Vec<usize> = targets
            .iter()
            .map(|n| self.node_index(n.as_ref()))
            .collect::<Result<_>>()?;
        let mut distinct = BTreeSet::new();
        for (&i, t) in idx.iter().zip(targets) {
            if !distinct.insert(i) {
                return Err(Error::ConflictingEvidence {
                    node: t.as_ref().to_string(),
                    first: "target".into(),
                    second: "target".into(),
                });
            }
        }
        let size = idx
            .iter()
            .try_fold(1usize, |acc, &i| acc.checked_mul(self.labels[i].len()))
            .filter(|&s| s <= MAX_EXPLANATION_ASSIGNMENTS)
            .ok_or(Error::TooLarge {
                worlds: None,
                limit: MAX_EXPLANATION_ASSIGNMENTS,
            })?;
        let free: Vec<usize> = idx.iter().copied().filter(|&i| resolved[i].is_none()).collect();
        let f = self.min_sum(&resolved, &free, false).0;
        let base = f.min();
        if base.is_infinite() {
            return Err(Error::Inconsistent);
        }

        let mut out = Vec::with_capacity(size);
        let mut asg = vec![0usize; idx.len()];
        for _ in 0..size {
            let fixed_ok = idx
                .iter()
                .zip(&asg)
                .all(|(&i, &x)| resolved[i].is_none_or(|e| e == x));
            let rank = if fixed_ok {
                let value_of = |v: usize| asg[idx.iter().position(|&i| i == v).expect("target")];
                f.at(value_of).minus(base).expect("min is a lower bound")
            } else {
                Rank::INFINITY
            };
            out.push((asg.clone(), rank));
            for k in (0..asg.len()).rev() {
                asg[k] += 1;
                if asg[k] < self.labels[idx[k]].len() {
                    break;
                }
                asg[k] = 0;
            }
        }
        Ok(out)
    }

    /// One complete world of minimal rank consistent with `ev`, with that
    /// rank. Ties resolve towards lower value indices.
    pub fn most_plausible_world(&self, ev: &Evidence) -> Result<(BTreeMap<String, String>, Rank)> {
        let resolved = self.resolve(ev)?;
        let (result, traced, relevant) = self.min_sum(&resolved, &[], true);
        let rank = result.min();
        if rank.is_infinite() {
            return Err(Error::Inconsistent);
        }
        let mut world: Vec<Option<usize>> = resolved.clone();
        for (var, f) in traced.iter().rev() {
            let mut best = (Rank::INFINITY, 0);
            for x in 0..self.labels[*var].len() {
                let r = f.at(|v| if v == *var { x } else { world[v].expect("assigned later") });
                if r < best.0 {
                    best = (r, x);
                }
            }
            world[*var] = Some(best.1);
        }
        // variables eliminated without any factor, then barren ones
        for &n in &self.topo {
            if world[n].is_some() {
                continue;
            }
            debug_assert!(!relevant[n] || self.parents[n].iter().all(|&p| world[p].is_some()));
            let choice = (0..self.labels[n].len())
                .find(|&x| {
                    self.local_rank(n, |v| if v == n { x } else { world[v].expect("topological") })
                        .is_zero()
                })
                .unwrap_or(0);
            world[n] = Some(choice);
        }
        let named = world
            .into_iter()
            .enumerate()
            .map(|(n, x)| (self.names[n].clone(), self.labels[n][x.expect("total")].clone()))
            .collect();
        Ok((named, rank))
    }

    /// Ranks joint assignments of `targets` under `ev` and reports the most
    /// plausible ones.
    pub fn explain<S: AsRef<str>>(&self, ev: &Evidence, targets: &[S]) -> Result<Explanation> {
        let joint = self.joint(ev, targets)?;
        let idx: Vec<usize> = targets
            .iter()
            .map(|t| self.node_index(t.as_ref()))
            .collect::<Result<_>>()?;
        let label = |asg: &[usize]| -> Vec<String> {
            idx.iter()
                .zip(asg)
                .map(|(&n, &x)| self.labels[n][x].clone())
                .collect()
        };
        let mut ranked: Vec<(Vec<String>, Rank)> =
            joint.iter().map(|(asg, r)| (label(asg), *r)).collect();
        ranked.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        let best: Vec<Vec<String>> = ranked
            .iter()
            .take_while(|(_, r)| r.is_zero())
            .map(|(l, _)| l.clone())
            .collect();

        let mut completions = Vec::with_capacity(best.len());
        for assignment in &best {
            let mut extended = ev.clone();
            for (t, v) in targets.iter().zip(assignment) {
                extended.set(t.as_ref(), v.clone());
            }
            completions.push(self.most_plausible_world(&extended)?.0);
        }
        Ok(Explanation {
            targets: targets.iter().map(|t| t.as_ref().to_string()).collect(),
            posteriors: self.posteriors(ev, targets)?,
            ranked,
            best,
            completions,
        })
    }

    /// Posteriors of `nodes` under `base` and under `base` overridden by
    /// `delta`.
    pub fn whatif<S: AsRef<str>>(&self, base: &Evidence, delta: &Evidence, nodes: &[S]) -> WhatIf {
        let before = self.posteriors(base, nodes);
        let after = self.posteriors(&base.overridden_by(delta), nodes);
        let diffs = match (&before, &after) {
            (Ok(b), Ok(a)) => b
                .iter()
                .zip(a)
                .map(|(pb, pa)| PosteriorDiff {
                    node: pb.node.clone(),
                    shifts: pb
                        .ranks
                        .iter()
                        .zip(&pa.ranks)
                        .map(|((v, rb), (_, ra))| (v.clone(), RankShift::between(*rb, *ra)))
                        .collect(),
                })
                .collect(),
            _ => Vec::new(),
        };
        WhatIf {
            base: before,
            hypothetical: after,
            diffs,
        }
    }
}

/// Greedy min-fill elimination order over `candidates`; ties go to the
/// lowest index, i.e. the lexicographically smallest node name.
fn min_fill_order(factors: &[Factor], mut candidates: BTreeSet<usize>) -> Vec<usize> {
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for f in factors {
        for &a in f.vars() {
            let entry = adj.entry(a).or_default();
            for &b in f.vars() {
                if a != b {
                    entry.insert(b);
                }
            }
        }
    }
    let fill = |adj: &BTreeMap<usize, BTreeSet<usize>>, v: usize| -> usize {
        let Some(ns) = adj.get(&v) else { return 0 };
        let ns: Vec<usize> = ns.iter().copied().collect();
        let mut missing = 0;
        for (i, &a) in ns.iter().enumerate() {
            for &b in &ns[i + 1..] {
                if !adj.get(&a).is_some_and(|s| s.contains(&b)) {
                    missing += 1;
                }
            }
        }
        missing
    };

    let mut order = Vec::with_capacity(candidates.len());
    while !candidates.is_empty() {
        let v = *candidates
            .iter()
            .min_by_key(|&&v| (fill(&adj, v), v))
            .expect("non-empty");
        candidates.remove(&v);
        let ns: Vec<usize> = adj.remove(&v).unwrap_or_default().into_iter().collect();
        for &a in &ns {
            let set = adj.entry(a).or_default();
            set.remove(&v);
            for &b in &ns {
                if a != b {
                    set.insert(b);
                }
            }
        }
        order.push(v);
    }
    order
}

/// Posteriors of `nodes` given `ev` by variable elimination.
pub fn eliminate<S: AsRef<str>>(net: &Network, ev: &Evidence, nodes: &[S]) -> Result<Vec<Posterior>> {
    Engine::new(net)?.posteriors(ev, nodes)
}

pub fn most_surprising_explanations<S: AsRef<str>>(
    net: &Network,
    ev: &Evidence,
    targets: &[S],
) -> Result<Explanation> {
    Engine::new(net)?.explain(ev, targets)
}

pub fn whatif<S: AsRef<str>>(net: &Network, base: &Evidence, delta: &Evidence, nodes: &[S]) -> Result<WhatIf> {
    Ok(Engine::new(net)?.whatif(base, delta, nodes))
}
