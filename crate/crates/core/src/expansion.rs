//! Suppressor-model functional expansion.
//!
//! A non-deterministic binary family `κ(e | π(e))` is rewritten into a
//! deterministic one over `π(e) ∪ {S(e), I(e)}`. The suppressor `S(e)` takes
//! strengths `ω^s`, with prior rank `s`; when the active suppressor is at
//! least as strong as the causal influence on `e`, the influence is
//! defeated and `e` copies the inertia node `I(e)`. Marginalizing `S(e)` and
//! `I(e)` back out recovers the original matrix exactly.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::network::{Family, Network, Variable};
use crate::rank::Rank;
use crate::temporal::{NodeId, Role};

/// Label of the suppressor value of strength `s`.
pub fn suppressor_label(strength: Rank) -> String {
    format!("ω^{strength}")
}

/// Parses `ω^k` back into its strength.
pub fn parse_suppressor_label(label: &str) -> Option<Rank> {
    let k = label.strip_prefix("ω^")?.parse::<u64>().ok()?;
    (k != u64::MAX).then(|| Rank::finite(k))
}

/// Suppressor strengths worth distinguishing for a family: every finite rank
/// in its matrix, plus `ω^0`, ascending.
pub fn suppressor_values(family: &Family) -> Vec<Rank> {
    let mut out: BTreeSet<Rank> = family.finite_ranks();
    out.insert(Rank::ZERO);
    out.into_iter().collect()
}

/// The deterministic choice of child value (an index) for one natural row,
/// one suppressor strength and one inertia value.
///
/// A value is forced when its rival is more surprising than the suppressor
/// strength; otherwise the inertia value passes through.
pub fn functional_value(row: &[Rank], strength: Rank, inertia: usize) -> usize {
    debug_assert_eq!(row.len(), 2);
    let forces_first = row[1] > strength;
    let forces_second = row[0] > strength;
    assert!(
        !(forces_first && forces_second),
        "row {row:?} is not normalized; both values cannot be forced"
    );
    if forces_first {
        0
    } else if forces_second {
        1
    } else {
        inertia
    }
}

/// 0/∞ matrix of the deterministic child, rows ordered by
/// (natural row, suppressor, inertia) with inertia varying fastest.
pub fn functional_rows(family: &Family, strengths: &[Rank]) -> Vec<Vec<Rank>> {
    let mut rows = Vec::with_capacity(family.rows.len() * strengths.len() * 2);
    for natural in &family.rows {
        for &s in strengths {
            for inertia in 0..2 {
                let chosen = functional_value(natural, s, inertia);
                rows.push(
                    (0..2)
                        .map(|v| if v == chosen { Rank::ZERO } else { Rank::INFINITY })
                        .collect(),
                );
            }
        }
    }
    rows
}

/// The three families replacing one expanded family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpandedFamily {
    /// Deterministic child over natural parents, `S(e)` and `I(e)`.
    pub child: Family,
    pub suppressor: Variable,
    /// `κ(ω^s) = s`.
    pub suppressor_prior: Family,
    pub inertia: Variable,
    /// All-zero ignorance prior over the child's values.
    pub inertia_prior: Family,
    /// Suppressor strengths, aligned with the suppressor's values.
    pub strengths: Vec<Rank>,
}

/// Expands the family of `child` in `net`, naming the new parents
/// `suppressor` and `inertia`.
pub(crate) fn expand_named(
    net: &Network,
    child: &str,
    suppressor: &str,
    inertia: &str,
) -> Result<ExpandedFamily> {
    let var = net.require(child)?;
    if var.values.len() != 2 {
        return Err(Error::NonBinary(child.to_string()));
    }
    let family = net
        .family(child)
        .ok_or_else(|| Error::UnknownNode(child.to_string()))?;
    let strengths = suppressor_values(family);

    let mut parents = family.parents.clone();
    parents.push(suppressor.to_string());
    parents.push(inertia.to_string());

    Ok(ExpandedFamily {
        child: Family::new(child, parents, functional_rows(family, &strengths)),
        suppressor: Variable::event(
            suppressor,
            strengths.iter().map(|&s| suppressor_label(s)).collect(),
        ),
        suppressor_prior: Family::prior(suppressor, strengths.clone()),
        inertia: Variable::event(inertia, var.values.clone()),
        inertia_prior: Family::prior(inertia, vec![Rank::ZERO; 2]),
        strengths,
    })
}

/// Expands the family of `child`, adding `S(child)` and `I(child)`.
pub fn expand_family(net: &Network, child: &str) -> Result<ExpandedFamily> {
    net.ensure_valid()?;
    expand_named(
        net,
        child,
        &NodeId::new(child, Role::Suppressor, None).to_string(),
        &NodeId::new(child, Role::Inertia, None).to_string(),
    )
}

/// True iff marginalizing the suppressor and inertia out of `expanded`
/// reproduces every entry of `original` exactly:
/// `min_{s,i} κ'(e | π, ω^s, i) + κ(ω^s) + κ(i) = κ(e | π)`.
pub fn marginals_match(original: &Family, expanded: &ExpandedFamily) -> bool {
    let s_prior = &expanded.suppressor_prior.rows[0];
    let i_prior = &expanded.inertia_prior.rows[0];
    let n_s = s_prior.len();
    let n_i = i_prior.len();
    if expanded.child.rows.len() != original.rows.len() * n_s * n_i {
        return false;
    }
    original.rows.iter().enumerate().all(|(r, natural)| {
        natural.iter().enumerate().all(|(value, &expected)| {
            let mut best = Rank::INFINITY;
            for (s, &ks) in s_prior.iter().enumerate() {
                for (i, &ki) in i_prior.iter().enumerate() {
                    let row = (r * n_s + s) * n_i + i;
                    best = best.min(expanded.child.rows[row][value] + ks + ki);
                }
            }
            best == expected
        })
    })
}

/// Expands the family of `child` and checks that its marginals are unchanged.
pub fn verify_marginals(net: &Network, child: &str) -> Result<bool> {
    let expanded = expand_family(net, child)?;
    let original = net
        .family(child)
        .ok_or_else(|| Error::UnknownNode(child.to_string()))?;
    Ok(marginals_match(original, &expanded))
}

/// Persistence variables, the default expansion targets.
pub fn persistence_targets(net: &Network) -> Vec<String> {
    net.variables()
        .filter(|v| v.is_persistence())
        .map(|v| v.name.clone())
        .collect()
}

/// Replaces each target family by its functional expansion; everything else
/// is copied unchanged.
pub fn expand_network<S: AsRef<str>>(net: &Network, targets: &[S]) -> Result<Network> {
    net.ensure_valid()?;
    let mut out = net.clone();
    for target in targets {
        let target = target.as_ref();
        let expanded = expand_named(
            net,
            target,
            &NodeId::new(target, Role::Suppressor, None).to_string(),
            &NodeId::new(target, Role::Inertia, None).to_string(),
        )?;
        for name in [&expanded.suppressor.name, &expanded.inertia.name] {
            if net.variable(name).is_some() {
                return Err(Error::NodeExists(name.clone()));
            }
        }
        out.set_family(expanded.child);
        out.add_variable(expanded.suppressor);
        out.set_family(expanded.suppressor_prior);
        out.add_variable(expanded.inertia);
        out.set_family(expanded.inertia_prior);
    }
    Ok(out)
}
