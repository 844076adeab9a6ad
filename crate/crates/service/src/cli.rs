//! Command-line interface.

use std::fs;
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use anet_core::expansion::persistence_targets;
use anet_core::{
    expand_network, parse_network, parse_scenario, serialize_network, Error as CoreError, Network, Scenario,
};
use anyhow::Context;
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "anet", version, about = "Action networks: validate, expand, unfold, query and serve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a network document and report every problem found.
    Validate { network: PathBuf },
    /// Print the network with families expanded into the suppressor model.
    Expand {
        network: PathBuf,
        /// Families to expand, comma separated; defaults to every persistence
        /// variable, and an empty list expands nothing.
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<String>>,
    },
    /// Print the network unfolded over slices 0..=horizon.
    Unfold {
        network: PathBuf,
        #[arg(long)]
        horizon: u32,
        /// Leave slice 0 without action nodes.
        #[arg(long)]
        no_actions_at_slice0: bool,
    },
    /// Answer a scenario's queries against the given network.
    Query { network: PathBuf, scenario: PathBuf },
    /// Run every question block of a scenario; its network path is taken
    /// relative to the scenario file.
    Run { scenario: PathBuf },
    /// Start the HTTP session service.
    Serve {
        #[arg(long, env = "ANET_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

/// A domain failure with the diagnostics to print, one per line.
#[derive(Debug)]
pub struct Failure(pub Vec<String>);

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Failure {
        Failure(vec![format!("{e:#}")])
    }
}

fn located(file: &Path, e: CoreError) -> Failure {
    let file = file.display();
    match e {
        CoreError::Parse(diags) => Failure(diags.iter().map(|d| format!("{file}: {d}")).collect()),
        CoreError::InvalidNetwork(violations) => {
            Failure(violations.iter().map(|v| format!("{file}: {v}")).collect())
        }
        other => Failure(vec![format!("{file}: {other}")]),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    Ok(fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?)
}

fn load_network(path: &Path) -> Result<Network, Failure> {
    parse_network(&read(path)?).map_err(|e| located(path, e))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    parse_scenario(&read(path)?).map_err(|e| located(path, e))
}

/// Runs a non-serving command and returns what it prints on success.
pub fn execute(command: &Command) -> Result<String, Failure> {
    match command {
        Command::Validate { network } => {
            let net = load_network(network)?;
            Ok(format!("{}: ok, {} variables\n", network.display(), net.len()))
        }
        Command::Expand { network, targets } => {
            let net = load_network(network)?;
            let targets: Vec<String> = match targets {
                Some(list) => list.iter().filter(|t| !t.is_empty()).cloned().collect(),
                None => persistence_targets(&net),
            };
            let expanded = expand_network(&net, &targets).map_err(|e| located(network, e))?;
            Ok(serialize_network(&expanded))
        }
        Command::Unfold {
            network,
            horizon,
            no_actions_at_slice0,
        } => {
            let net = load_network(network)?;
            let mut sc = Scenario::new(network.display().to_string(), *horizon);
            sc.actions_at_slice0 = !no_actions_at_slice0;
            let tn = sc.unfold(&net).map_err(|e| located(network, e))?;
            Ok(serialize_network(tn.network()))
        }
        Command::Query { network, scenario } => {
            let net = load_network(network)?;
            let mut sc = load_scenario(scenario)?;
            sc.explanations.clear();
            sc.whatifs.clear();
            let report = sc.run(&net).map_err(|e| located(scenario, e))?;
            Ok(report.to_string())
        }
        Command::Run { scenario } => {
            let sc = load_scenario(scenario)?;
            let base = scenario.parent().unwrap_or(Path::new("."));
            let net = load_network(&base.join(&sc.network))?;
            let report = sc.run(&net).map_err(|e| located(scenario, e))?;
            Ok(report.to_string())
        }
        Command::Serve { .. } => Err(Failure(vec!["serve runs through the async entry point".into()])),
    }
}
