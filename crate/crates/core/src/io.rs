//! Text formats.
//!
//! Networks (`.annet`) and scenarios (`.anscn`) are JSON documents in a
//! canonical layout: object keys sorted, two-space indentation, arrays of
//! scalars and objects holding nothing deeper written on one line. Ranks are integers or
//! the string `"inf"`. Matrix rows are keyed by their parent instantiation,
//! `"p=v,q=w"`, with `""` for a prior.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::network::{boolean_values, Control, Family, Kind, Network, Variable, Violation};
use crate::rank::Rank;

pub const FORMAT_VERSION: u32 = 1;

/// A parse or validation problem and where it was found: `line L, column C`
/// for syntax, a dotted document path otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn from_json(err: &serde_json::Error) -> Diagnostic {
        let message = err.to_string();
        // serde_json appends " at line L column C"; keep only the reason
        let message = match message.rfind(" at line ") {
            Some(cut) => message[..cut].to_string(),
            None => message,
        };
        Diagnostic::new(format!("line {}, column {}", err.line(), err.column()), message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Writes `value` in the canonical layout, newline-terminated.
pub fn to_canonical(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn is_scalar(value: &Value) -> bool {
    !value.is_array() && !value.is_object()
}

/// Scalars, arrays of scalars, and objects whose values are either.
fn is_flat(value: &Value) -> bool {
    match value {
        Value::Array(items) => items.iter().all(is_scalar),
        Value::Object(map) => map
            .values()
            .all(|v| is_scalar(v) || v.as_array().is_some_and(|a| a.iter().all(is_scalar))),
        _ => true,
    }
}

fn sorted(map: &serde_json::Map<String, Value>) -> Vec<(&String, &Value)> {
    let mut entries: Vec<_> = map.iter().collect();
    entries.sort_by(|a, b| a.0.cmp(b.0));
    entries
}

fn write_inline(out: &mut String, value: &Value) {
    match value {
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_inline(out, v);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, v)) in sorted(map).into_iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_inline(out, v);
            }
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    let empty = match value {
        Value::Array(a) => a.is_empty(),
        Value::Object(o) => o.is_empty(),
        _ => true,
    };
    if empty || is_flat(value) {
        write_inline(out, value);
        return;
    }
    let pad = "  ".repeat(depth + 1);
    match value {
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, v) in items.iter().enumerate() {
                out.push_str(&pad);
                write_value(out, v, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
        }
        Value::Object(map) => {
            out.push_str("{\n");
            let entries = sorted(map);
            let n = entries.len();
            for (i, (k, v)) in entries.into_iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, v, depth + 1);
                out.push_str(if i + 1 < n { ",\n" } else { "\n" });
            }
        }
        _ => unreachable!("scalars are flat"),
    }
    out.push_str(&"  ".repeat(depth));
    out.push(if value.is_array() { ']' } else { '}' });
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindDoc {
    Event,
    Persistence,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    #[serde(default = "boolean_values")]
    values: Vec<String>,
    #[serde(default = "event_kind")]
    kind: KindDoc,
    #[serde(default)]
    controllable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preconditions: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flip_surprise: Option<Rank>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_surprise: Option<Rank>,
}

fn event_kind() -> KindDoc {
    KindDoc::Event
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyDoc {
    #[serde(default)]
    parents: Vec<String>,
    rows: BTreeMap<String, BTreeMap<String, Rank>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    variables: BTreeMap<String, VariableDoc>,
    families: BTreeMap<String, FamilyDoc>,
}

fn violation_location(v: &Violation) -> String {
    match &v.row {
        Some(row) => format!("families.{}.rows[{row:?}]", v.subject),
        None => format!("variables.{}", v.subject),
    }
}

/// Parses a network document. On failure every problem found is reported;
/// no partial network is returned.
pub fn parse_network(text: &str) -> Result<Network> {
    let doc: NetworkDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(vec![Diagnostic::from_json(&e)]))?;
    let mut diags = Vec::new();
    if doc.format_version != FORMAT_VERSION {
        diags.push(Diagnostic::new(
            "format_version",
            format!("unsupported version {}, expected {FORMAT_VERSION}", doc.format_version),
        ));
    }

    let mut net = Network::new();
    net.description = doc.description.clone();
    for (name, v) in &doc.variables {
        let at = format!("variables.{name}");
        let kind = match (v.kind, v.flip_surprise) {
            (KindDoc::Event, None) => Kind::Event,
            (KindDoc::Event, Some(_)) => {
                diags.push(Diagnostic::new(&at, "flip_surprise is only allowed on persistence variables"));
                Kind::Event
            }
            (KindDoc::Persistence, p) => Kind::Persistence {
                flip_surprise: p.unwrap_or(Rank::ONE),
            },
        };
        let control = if v.controllable {
            Some(Control {
                preconditions: v.preconditions.clone().unwrap_or_default(),
                action_surprise: v.action_surprise.unwrap_or(Rank::ONE),
            })
        } else {
            if v.preconditions.is_some() || v.action_surprise.is_some() {
                diags.push(Diagnostic::new(
                    &at,
                    "preconditions and action_surprise require controllable: true",
                ));
            }
            None
        };
        net.add_variable(Variable {
            name: name.clone(),
            values: v.values.clone(),
            kind,
            control,
        });
    }

    for (child, f) in &doc.families {
        let at = format!("families.{child}");
        let Some(var) = net.variable(child).cloned() else {
            diags.push(Diagnostic::new(&at, "family for an undeclared variable"));
            continue;
        };
        let undeclared: Vec<&String> = f.parents.iter().filter(|p| net.variable(p).is_none()).collect();
        if !undeclared.is_empty() {
            for p in undeclared {
                diags.push(Diagnostic::new(format!("{at}.parents"), format!("parent {p:?} is not declared")));
            }
            continue;
        }
        let shape = Family::new(child, f.parents.clone(), Vec::new());
        let Some(count) = net.row_count(&shape) else {
            diags.push(Diagnostic::new(&at, "too many parent instantiations"));
            continue;
        };
        let mut rows = Vec::with_capacity(count);
        let mut seen = BTreeSet::new();
        for row in 0..count {
            let key = net.row_label(&shape, row);
            let Some(entries) = f.rows.get(&key) else {
                diags.push(Diagnostic::new(format!("{at}.rows"), format!("missing row for instantiation {key:?}")));
                continue;
            };
            seen.insert(key.clone());
            let mut ranks = Vec::with_capacity(var.values.len());
            for value in &var.values {
                match entries.get(value) {
                    Some(&r) => ranks.push(r),
                    None => {
                        diags.push(Diagnostic::new(
                            format!("{at}.rows[{key:?}]"),
                            format!("missing rank for value {value:?}"),
                        ));
                    }
                }
            }
            for extra in entries.keys().filter(|k| !var.values.contains(k)) {
                diags.push(Diagnostic::new(
                    format!("{at}.rows[{key:?}]"),
                    format!("{child} has no value {extra:?}"),
                ));
            }
            rows.push(ranks);
        }
        for key in f.rows.keys().filter(|k| !seen.contains(*k)) {
            diags.push(Diagnostic::new(format!("{at}.rows"), format!("unknown instantiation {key:?}")));
        }
        net.set_family(Family::new(child, f.parents.clone(), rows));
    }
    for name in doc.variables.keys() {
        if !doc.families.contains_key(name) {
            diags.push(Diagnostic::new(format!("families.{name}"), "no family declared"));
        }
    }

    if diags.is_empty() {
        diags.extend(
            net.validate()
                .iter()
                .map(|v| Diagnostic::new(violation_location(v), v.to_string())),
        );
    }
    if diags.is_empty() {
        Ok(net)
    } else {
        Err(Error::Parse(diags))
    }
}

fn network_value(net: &Network) -> Value {
    let variables = net
        .variables()
        .map(|v| {
            let doc = VariableDoc {
                values: v.values.clone(),
                kind: if v.is_persistence() { KindDoc::Persistence } else { KindDoc::Event },
                controllable: v.is_controllable(),
                preconditions: v.control.as_ref().map(|c| c.preconditions.clone()),
                flip_surprise: v.flip_surprise(),
                action_surprise: v.control.as_ref().map(|c| c.action_surprise),
            };
            (v.name.clone(), doc)
        })
        .collect();
    let families = net
        .families()
        .map(|f| {
            let var = net.variable(&f.child).expect("valid network");
            let rows = f
                .rows
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    let entries = var.values.iter().cloned().zip(row.iter().copied()).collect();
                    (net.row_label(f, i), entries)
                })
                .collect();
            (
                f.child.clone(),
                FamilyDoc {
                    parents: f.parents.clone(),
                    rows,
                },
            )
        })
        .collect();
    let doc = NetworkDoc {
        format_version: FORMAT_VERSION,
        description: net.description.clone(),
        variables,
        families,
    };
    serde_json::to_value(doc).expect("documents are plain data")
}

/// Canonical text of a valid network.
pub fn serialize_network(net: &Network) -> String {
    to_canonical(&network_value(net))
}

pub use crate::scenario::{parse_scenario, serialize_scenario};
