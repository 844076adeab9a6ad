//! Reference inference by exhaustive search over worlds.
//!
//! Worlds are built variable by variable in topological order, so every
//! family entry can be added as soon as its child is assigned. Since local
//! ranks are non-negative, a partial world whose running sum already
//! reaches the best complete world found so far cannot improve on it and is
//! cut; the result is still the exact minimum of the stratified joint.

use std::collections::HashMap;

use super::Evidence;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::rank::{Formula, Rank};

/// Default number of search steps before [`enumerate_min`] gives up.
pub const ORACLE_BUDGET: u64 = 200_000_000;

struct Search<'a> {
    order: Vec<usize>,
    names: Vec<&'a str>,
    labels: Vec<&'a [String]>,
    parents: Vec<Vec<usize>>,
    rows: Vec<&'a [Vec<Rank>]>,
    fixed: Vec<Option<usize>>,
    residual: Formula,
    world: Vec<usize>,
    best: Rank,
    steps: u64,
    budget: u64,
}

impl Search<'_> {
    fn local(&self, node: usize) -> Rank {
        let mut row = 0;
        for &p in &self.parents[node] {
            row = row * self.labels[p].len() + self.world[p];
        }
        self.rows[node][row][self.world[node]]
    }

    fn visit(&mut self, depth: usize, partial: Rank) -> Result<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(Error::SearchBudget(self.budget));
        }
        if depth == self.order.len() {
            let world = &self.world;
            let names = &self.names;
            let labels = &self.labels;
            let holds = self.residual.eval(&|var: &str| {
                names
                    .iter()
                    .position(|n| *n == var)
                    .map(|i| labels[i][world[i]].as_str())
            });
            if holds && partial < self.best {
                self.best = partial;
            }
            return Ok(());
        }
        let node = self.order[depth];
        let choices = match self.fixed[node] {
            Some(x) => x..x + 1,
            None => 0..self.labels[node].len(),
        };
        for x in choices {
            self.world[node] = x;
            let total = partial + self.local(node);
            if total.is_infinite() || total >= self.best {
                continue;
            }
            self.visit(depth + 1, total)?;
        }
        Ok(())
    }
}

/// Moves `var = value` atoms of a top-level conjunction into `fixed`;
/// returns the remaining formula, or `None` if an atom contradicts.
fn absorb(
    phi: &Formula,
    index: &HashMap<&str, usize>,
    labels: &[&[String]],
    fixed: &mut [Option<usize>],
) -> Result<Option<Formula>> {
    let parts: Vec<&Formula> = match phi {
        Formula::And(parts) => parts.iter().collect(),
        other => vec![other],
    };
    let mut rest = Vec::new();
    for part in parts {
        match part {
            Formula::True => {}
            Formula::False => return Ok(None),
            Formula::Is(var, value) => {
                let &n = index
                    .get(var.as_str())
                    .ok_or_else(|| Error::UnknownNode(var.clone()))?;
                let Some(x) = labels[n].iter().position(|v| v == value) else {
                    return Ok(None);
                };
                match fixed[n] {
                    Some(old) if old != x => return Ok(None),
                    _ => fixed[n] = Some(x),
                }
            }
            other => rest.push(other.clone()),
        }
    }
    Ok(Some(Formula::And(rest)))
}

/// Minimum joint rank over worlds satisfying `ev` and `phi`, searching at
/// most `budget` steps.
pub fn enumerate_min(net: &Network, ev: &Evidence, phi: &Formula, budget: u64) -> Result<Rank> {
    net.ensure_valid()?;
    let names: Vec<&str> = net.variables().map(|v| v.name.as_str()).collect();
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let labels: Vec<&[String]> = net.variables().map(|v| v.values.as_slice()).collect();
    let mut parents = Vec::with_capacity(names.len());
    let mut rows = Vec::with_capacity(names.len());
    for name in &names {
        let f = net.family(name).expect("validated");
        parents.push(f.parents.iter().map(|p| index[p.as_str()]).collect());
        rows.push(f.rows.as_slice());
    }
    let order = net
        .topological_order()?
        .iter()
        .map(|n| index[n.as_str()])
        .collect();

    let mut fixed = vec![None; names.len()];
    for (node, value) in ev.iter() {
        let &n = index
            .get(node)
            .ok_or_else(|| Error::UnknownNode(node.to_string()))?;
        let x = labels[n]
            .iter()
            .position(|v| v == value)
            .ok_or_else(|| Error::UnknownValue {
                node: node.to_string(),
                value: value.to_string(),
            })?;
        fixed[n] = Some(x);
    }
    let Some(residual) = absorb(phi, &index, &labels, &mut fixed)? else {
        return Ok(Rank::INFINITY);
    };

    let mut search = Search {
        order,
        world: vec![0; names.len()],
        names,
        labels,
        parents,
        rows,
        fixed,
        residual,
        best: Rank::INFINITY,
        steps: 0,
        budget,
    };
    search.visit(0, Rank::ZERO)?;
    Ok(search.best)
}

/// `κ(phi | ev)` by exhaustive search.
pub fn enumerate_rank(net: &Network, ev: &Evidence, phi: &Formula) -> Result<Rank> {
    let base = enumerate_min(net, ev, &Formula::True, ORACLE_BUDGET)?;
    if base.is_infinite() {
        return Err(Error::Inconsistent);
    }
    enumerate_min(net, ev, phi, ORACLE_BUDGET)?.minus(base)
}
