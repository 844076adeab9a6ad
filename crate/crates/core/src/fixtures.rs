//! The bundled example networks and scenarios.

use crate::io::parse_network;
use crate::network::Network;
use crate::scenario::{parse_scenario, Scenario};

/// Ignition key and engine, with an ignorance prior on the key.
pub const ENGINE: &str = include_str!("../fixtures/engine.annet");
/// Key turned at every slice but the engine seen off at 0..=2.
pub const ENGINE_STALLED: &str = include_str!("../fixtures/engine_stalled.anscn");
/// Key turned at slice 0 only.
pub const ENGINE_STARTED: &str = include_str!("../fixtures/engine_started.anscn");
/// The engine network with `engine_running` expanded into the suppressor model.
pub const ENGINE_EXPANDED: &str = include_str!("../fixtures/engine_expanded.annet");
/// Shooting domain: a loaded gun, a shot, and a victim.
pub const YSP: &str = include_str!("../fixtures/ysp.annet");
/// Alive and loaded at 0, shot at 2.
pub const YSP_PROJECTION: &str = include_str!("../fixtures/ysp_projection.anscn");
/// As the projection, but the victim is seen alive at 2.
pub const YSP_ABDUCTION: &str = include_str!("../fixtures/ysp_abduction.anscn");

pub fn engine() -> Network {
    parse_network(ENGINE).expect("bundled fixture")
}

pub fn ysp() -> Network {
    parse_network(YSP).expect("bundled fixture")
}

/// Parses a bundled scenario.
pub fn scenario(text: &str) -> Scenario {
    parse_scenario(text).expect("bundled fixture")
}
