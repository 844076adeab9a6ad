//! Interventions on controllable variables.
//!
//! Declaring `e` controllable adds a root `do_e` taking `e`'s values plus
//! `idle`. When `do_e` is idle, or any precondition fails, `e` follows its
//! natural causes; otherwise the action sets `e` outright.

use crate::error::{Error, Result};
use crate::network::{Family, Network, Variable, IDLE};
use crate::rank::Rank;
use crate::temporal::{NodeId, Role};

/// Prior of an action node over `values ∪ {idle}`: idle is free, every
/// actual intervention costs `surprise`.
pub fn action_prior(values: usize, surprise: Rank) -> Vec<Rank> {
    let mut prior = vec![surprise; values];
    prior.push(Rank::ZERO);
    prior
}

/// Adds `action` as a new root and rewires the family of `target`.
///
/// `preconditions` are (node, required value) pairs; nodes that are not yet
/// parents of `target` become parents. The action node is the last parent.
pub(crate) fn augment_node(
    net: &mut Network,
    target: &str,
    action: &str,
    preconditions: &[(String, String)],
    surprise: Rank,
) -> Result<()> {
    if net.variable(action).is_some() {
        return Err(Error::AlreadyAugmented(target.to_string()));
    }
    let var = net.require(target)?.clone();
    let natural = net
        .family(target)
        .cloned()
        .ok_or_else(|| Error::UnknownNode(target.to_string()))?;

    let mut values = var.values.clone();
    values.push(IDLE.to_string());
    let idle = values.len() - 1;
    net.add_variable(Variable::event(action, values));
    net.set_family(Family::prior(action, action_prior(var.values.len(), surprise)));

    let mut parents = natural.parents.clone();
    let mut required = Vec::with_capacity(preconditions.len());
    for (node, value) in preconditions {
        let idx = net
            .require(node)?
            .value_index(value)
            .ok_or_else(|| Error::UnknownValue {
                node: node.clone(),
                value: value.clone(),
            })?;
        let pos = match parents.iter().position(|p| p == node) {
            Some(pos) => pos,
            None => {
                parents.push(node.clone());
                parents.len() - 1
            }
        };
        required.push((pos, idx));
    }
    parents.push(action.to_string());

    let shape = Family::new(target, parents, Vec::new());
    let count = net.row_count(&shape).expect("parents are declared");
    let mut rows = Vec::with_capacity(count);
    for row in 0..count {
        let assignment = net.decode_row(&shape, row);
        let act = *assignment.last().expect("action parent");
        let enabled = required.iter().all(|&(pos, idx)| assignment[pos] == idx);
        if act == idle || !enabled {
            let natural_row = net.encode_row(&natural, &assignment[..natural.parents.len()]);
            rows.push(natural.rows[natural_row].clone());
        } else {
            rows.push(
                (0..var.values.len())
                    .map(|v| if v == act { Rank::ZERO } else { Rank::INFINITY })
                    .collect(),
            );
        }
    }
    net.set_family(Family::new(target, shape.parents, rows));
    Ok(())
}

/// Adds `do_<var>` to a static network.
pub fn augment_with_action(net: &Network, var: &str) -> Result<Network> {
    net.ensure_valid()?;
    let control = net
        .require(var)?
        .control
        .clone()
        .ok_or_else(|| Error::NotControllable(var.to_string()))?;
    let action = NodeId::new(var, Role::Action, None).to_string();
    let pre: Vec<(String, String)> = control.preconditions.into_iter().collect();
    let mut out = net.clone();
    augment_node(&mut out, var, &action, &pre, control.action_surprise)?;
    Ok(out)
}

/// Augments every controllable variable.
pub fn augment_all(net: &Network) -> Result<Network> {
    let mut out = net.clone();
    for var in net.variables().filter(|v| v.is_controllable()) {
        out = augment_with_action(&out, &var.name)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{boolean_values, Control};
    use std::collections::BTreeMap;

    fn r(k: u64) -> Rank {
        Rank::finite(k)
    }

    const INF: Rank = Rank::INFINITY;

    /// Shooting fragment: fired_gun is controllable under holding_gun.
    fn shooting() -> Network {
        Network::new()
            .with(
                Variable::binary_event("holding_gun"),
                Family::prior("holding_gun", vec![r(2), r(0)]),
            )
            .with(
                Variable::binary_event("fired_gun").controllable(Control {
                    preconditions: BTreeMap::from([("holding_gun".into(), "true".into())]),
                    action_surprise: r(1),
                }),
                Family::prior("fired_gun", vec![r(0), r(0)]),
            )
    }

    #[test]
    fn action_prior_shape() {
        assert_eq!(action_prior(2, r(1)), vec![r(1), r(1), r(0)]);
    }

    #[test]
    fn augmented_matrix() {
        let net = augment_with_action(&shooting(), "fired_gun").unwrap();
        assert!(net.validate().is_empty(), "{:?}", net.validate());
        let do_var = net.variable("do_fired_gun").unwrap();
        assert_eq!(do_var.values, ["false", "true", "idle"]);
        assert_eq!(net.family("do_fired_gun").unwrap().rows, vec![vec![r(1), r(1), r(0)]]);

        let f = net.family("fired_gun").unwrap();
        assert_eq!(f.parents, ["holding_gun", "do_fired_gun"]);
        let row = |holding: usize, act: usize| &f.rows[net.encode_row(f, &[holding, act])];
        // idle: natural row verbatim
        assert_eq!(row(1, 2), &vec![r(0), r(0)]);
        assert_eq!(row(0, 2), &vec![r(0), r(0)]);
        // shoot while holding the gun
        assert_eq!(row(1, 1), &vec![INF, r(0)]);
        assert_eq!(row(1, 0), &vec![r(0), INF]);
        // not holding: natural causes decide
        assert_eq!(row(0, 1), &vec![r(0), r(0)]);
        assert_eq!(row(0, 0), &vec![r(0), r(0)]);
    }

    #[test]
    fn precondition_already_a_parent() {
        let net = Network::new()
            .with(Variable::binary_event("a"), Family::prior("a", vec![r(0), r(0)]))
            .with(
                Variable::binary_event("b").controllable(Control {
                    preconditions: BTreeMap::from([("a".into(), "false".into())]),
                    action_surprise: r(3),
                }),
                Family::new("b", vec!["a".into()], vec![vec![r(0), r(1)], vec![r(1), r(0)]]),
            );
        let aug = augment_with_action(&net, "b").unwrap();
        let f = aug.family("b").unwrap();
        assert_eq!(f.parents, ["a", "do_b"]);
        assert_eq!(f.rows[aug.encode_row(f, &[0, 1])], vec![INF, r(0)]);
        assert_eq!(f.rows[aug.encode_row(f, &[1, 0])], vec![r(1), r(0)]);
    }

    #[test]
    fn errors() {
        let net = shooting();
        assert!(matches!(
            augment_with_action(&net, "holding_gun"),
            Err(Error::NotControllable(_))
        ));
        let once = augment_with_action(&net, "fired_gun").unwrap();
        assert!(matches!(
            augment_with_action(&once, "fired_gun"),
            Err(Error::AlreadyAugmented(_))
        ));
        assert_eq!(boolean_values().len(), 2);
    }
}
