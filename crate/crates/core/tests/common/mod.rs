//! Random networks and evidence for property and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use anet_core::network::boolean_values;
use anet_core::{Control, Evidence, Family, Kind, Network, Rank, Variable};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub nodes: usize,
    pub max_parents: usize,
    pub max_rank: u64,
    /// Chance that a non-zero entry is ∞.
    pub infinity: f64,
    /// Chance that a node is a persistence variable.
    pub persistence: f64,
    /// Chance that a node is controllable.
    pub controllable: f64,
}

impl Shape {
    pub fn plain(nodes: usize) -> Shape {
        Shape {
            nodes,
            max_parents: 3,
            max_rank: 5,
            infinity: 0.1,
            persistence: 0.0,
            controllable: 0.0,
        }
    }
}

pub fn node_name(i: usize) -> String {
    format!("n{i:02}")
}

/// A normalized row over `width` values: one random position is 0.
pub fn random_row<R: Rng>(rng: &mut R, width: usize, max_rank: u64, infinity: f64) -> Vec<Rank> {
    let zero = rng.gen_range(0..width);
    (0..width)
        .map(|v| {
            if v == zero {
                Rank::ZERO
            } else if rng.gen_bool(infinity) {
                Rank::INFINITY
            } else {
                Rank::finite(rng.gen_range(0..=max_rank))
            }
        })
        .collect()
}

/// Binary nodes `n00..`, each drawing its parents from lower-numbered nodes.
pub fn random_network<R: Rng>(rng: &mut R, shape: Shape) -> Network {
    let mut net = Network::new();
    for i in 0..shape.nodes {
        let name = node_name(i);
        let mut earlier: Vec<usize> = (0..i).collect();
        earlier.shuffle(rng);
        let k = rng.gen_range(0..=shape.max_parents.min(i));
        let parents: Vec<String> = earlier[..k].iter().map(|&p| node_name(p)).collect();
        let rows = (0..1usize << k)
            .map(|_| random_row(rng, 2, shape.max_rank, shape.infinity))
            .collect();

        let mut var = Variable::binary_event(&name);
        if rng.gen_bool(shape.persistence) {
            var.kind = Kind::Persistence {
                flip_surprise: Rank::finite(rng.gen_range(1..=3)),
            };
        }
        if rng.gen_bool(shape.controllable) {
            let mut preconditions = BTreeMap::new();
            if i > 0 && rng.gen_bool(0.5) {
                let p = node_name(rng.gen_range(0..i));
                preconditions.insert(p, boolean_values()[rng.gen_range(0..2)].clone());
            }
            var = var.controllable(Control {
                preconditions,
                action_surprise: Rank::finite(rng.gen_range(1..=3)),
            });
        }
        net.add_variable(var);
        net.set_family(Family::new(&name, parents, rows));
    }
    net
}

/// A world of finite rank, sampled forward through the network.
pub fn sample_world<R: Rng>(rng: &mut R, net: &Network) -> BTreeMap<String, usize> {
    let mut world = BTreeMap::new();
    for name in net.topological_order().unwrap() {
        let f = net.family(&name).unwrap();
        let assignment: Vec<usize> = f.parents.iter().map(|p| world[p]).collect();
        let row = &f.rows[net.encode_row(f, &assignment)];
        let finite: Vec<usize> = (0..row.len()).filter(|&v| row[v].is_finite()).collect();
        world.insert(name, *finite.choose(rng).unwrap());
    }
    world
}

/// Observes a random subset of a sampled world, so the evidence is
/// consistent by construction.
pub fn random_evidence<R: Rng>(rng: &mut R, net: &Network, density: f64) -> Evidence {
    let world = sample_world(rng, net);
    let mut ev = Evidence::new();
    for (name, x) in world {
        if rng.gen_bool(density) {
            let value = net.variable(&name).unwrap().values[x].clone();
            ev.set(name, value);
        }
    }
    ev
}

/// All (node, value) pairs of a network.
pub fn all_atoms(net: &Network) -> Vec<(String, String)> {
    net.variables()
        .flat_map(|v| v.values.iter().map(move |x| (v.name.clone(), x.clone())))
        .collect()
}
