//! Degrees of surprise and exhaustive ranking tables.
//!
//! A [`Rank`] is a natural number or infinity. Ranks combine with `min`
//! (disjunction of worlds) and saturating `+` (conjunction of independent
//! factors), forming the min-plus semiring every inference routine in this
//! crate works over.
//!
//! [`RankingTable`] is the explicit ranking over every world of a small
//! [`Frame`]. It is exponential in the number of variables and exists as the
//! semantic reference the compact network machinery is checked against.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Degree of surprise: a natural number, or [`Rank::INFINITY`] for an
/// impossibility.
///
/// Finite ranks are stored in a `u64`; `u64::MAX` is reserved for infinity.
/// Quantifications are capped at [`Rank::MAX_ENTRY`] per matrix entry so a
/// sum over any realistic number of families cannot overflow.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rank(u64);

impl Rank {
    pub const ZERO: Rank = Rank(0);
    pub const ONE: Rank = Rank(1);
    pub const INFINITY: Rank = Rank(u64::MAX);
    /// Largest finite rank accepted in a κ-matrix.
    pub const MAX_ENTRY: u64 = u32::MAX as u64;

    /// A finite rank. Panics on `u64::MAX`, which is the infinity sentinel.
    pub const fn finite(k: u64) -> Rank {
        assert!(k != u64::MAX, "u64::MAX is reserved for infinity");
        Rank(k)
    }

    pub fn is_infinite(self) -> bool {
        self.0 == u64::MAX
    }

    pub fn is_finite(self) -> bool {
        !self.is_infinite()
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// The finite value, or `None` for infinity.
    pub fn value(self) -> Option<u64> {
        if self.is_infinite() {
            None
        } else {
            Some(self.0)
        }
    }

    /// Conditional subtraction `κ(a ∧ b) − κ(b)`.
    ///
    /// Requires `other ≤ self` and `other < ∞`; `∞ − k = ∞`.
    pub fn minus(self, other: Rank) -> Result<Rank> {
        if other.is_infinite() {
            return Err(Error::IncoherentConditioning {
                minuend: self,
                subtrahend: other,
            });
        }
        if self.is_infinite() {
            return Ok(Rank::INFINITY);
        }
        if other.0 > self.0 {
            return Err(Error::IncoherentConditioning {
                minuend: self,
                subtrahend: other,
            });
        }
        Ok(Rank(self.0 - other.0))
    }

    pub fn min(self, other: Rank) -> Rank {
        std::cmp::min(self, other)
    }
}

impl Add for Rank {
    type Output = Rank;

    /// Saturating addition: `∞ + k = ∞`.
    fn add(self, rhs: Rank) -> Rank {
        if self.is_infinite() || rhs.is_infinite() {
            return Rank::INFINITY;
        }
        match self.0.checked_add(rhs.0) {
            Some(s) if s != u64::MAX => Rank(s),
            _ => panic!("finite rank overflow: {} + {}", self.0, rhs.0),
        }
    }
}

impl std::iter::Sum for Rank {
    fn sum<I: Iterator<Item = Rank>>(iter: I) -> Rank {
        iter.fold(Rank::ZERO, Add::add)
    }
}

impl From<u32> for Rank {
    fn from(k: u32) -> Rank {
        Rank(k as u64)
    }
}

impl fmt::Debug for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(k) => write!(f, "{k}"),
            None => f.write_str("inf"),
        }
    }
}

impl FromStr for Rank {
    type Err = Error;

    fn from_str(s: &str) -> Result<Rank> {
        let s = s.trim();
        if s == "inf" {
            return Ok(Rank::INFINITY);
        }
        match s.parse::<u64>() {
            Ok(k) if k != u64::MAX => Ok(Rank(k)),
            _ => Err(Error::MalformedRank(s.to_string())),
        }
    }
}

/// Ranks serialize as plain integers, with the string `"inf"` for infinity.
impl Serialize for Rank {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.value() {
            Some(k) => serializer.serialize_u64(k),
            None => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Rank {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Rank, D::Error> {
        struct RankVisitor;

        impl serde::de::Visitor<'_> for RankVisitor {
            type Value = Rank;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer rank or \"inf\"")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Rank, E> {
                if v == u64::MAX {
                    return Err(E::custom("rank too large"));
                }
                Ok(Rank(v))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Rank, E> {
                if v < 0 {
                    return Err(E::custom(format!("negative rank {v}")));
                }
                self.visit_u64(v as u64)
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Rank, E> {
                if v == "inf" {
                    Ok(Rank::INFINITY)
                } else {
                    Err(E::custom(format!("expected \"inf\", found {v:?}")))
                }
            }
        }

        deserializer.deserialize_any(RankVisitor)
    }
}

/// Variables and their value labels, in a fixed order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    names: Vec<String>,
    domains: Vec<Vec<String>>,
}

impl Frame {
    pub fn new<I, N, V>(vars: I) -> Frame
    where
        I: IntoIterator<Item = (N, Vec<V>)>,
        N: Into<String>,
        V: Into<String>,
    {
        let mut names = Vec::new();
        let mut domains = Vec::new();
        for (n, vs) in vars {
            names.push(n.into());
            domains.push(vs.into_iter().map(Into::into).collect());
        }
        Frame { names, domains }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domain(&self, var: usize) -> &[String] {
        &self.domains[var]
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Number of worlds, or `None` on overflow.
    pub fn world_count(&self) -> Option<usize> {
        self.domains
            .iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(d.len()))
    }

    /// Value label a world assigns to `name`.
    pub fn value_of<'a>(&'a self, world: &World, name: &str) -> Option<&'a str> {
        let i = self.position(name)?;
        Some(self.domains[i][world.0[i]].as_str())
    }
}

/// A total assignment: one value index per frame variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct World(pub Vec<usize>);

impl World {
    pub fn values(&self) -> &[usize] {
        &self.0
    }
}

/// Propositional formula over `variable = value` atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Is(String, String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn is(var: impl Into<String>, value: impl Into<String>) -> Formula {
        Formula::Is(var.into(), value.into())
    }

    pub fn negate(self) -> Formula {
        match self {
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn and(self, other: Formula) -> Formula {
        match self {
            Formula::And(mut parts) => {
                parts.push(other);
                Formula::And(parts)
            }
            first => Formula::And(vec![first, other]),
        }
    }

    /// Conjunction of atoms.
    pub fn conjunction<I, N, V>(atoms: I) -> Formula
    where
        I: IntoIterator<Item = (N, V)>,
        N: Into<String>,
        V: Into<String>,
    {
        Formula::And(
            atoms
                .into_iter()
                .map(|(n, v)| Formula::Is(n.into(), v.into()))
                .collect(),
        )
    }

    /// Truth value under `lookup`, which maps a variable name to its value.
    /// Atoms over variables `lookup` does not know are false.
    pub fn eval<'a, F>(&self, lookup: &F) -> bool
    where
        F: Fn(&str) -> Option<&'a str>,
    {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Is(var, value) => lookup(var) == Some(value.as_str()),
            Formula::Not(inner) => !inner.eval(lookup),
            Formula::And(parts) => parts.iter().all(|p| p.eval(lookup)),
            Formula::Or(parts) => parts.iter().any(|p| p.eval(lookup)),
        }
    }

    pub fn holds(&self, frame: &Frame, world: &World) -> bool {
        self.eval(&|name| frame.value_of(world, name))
    }
}

/// Outcome of a belief test: whether the formula is believed and how firmly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Belief {
    pub believed: bool,
    pub degree: Rank,
}

/// Explicit ranking over all worlds of a frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankingTable {
    frame: Frame,
    ranks: Vec<Rank>,
}

impl RankingTable {
    /// Upper bound on the number of worlds a table may hold.
    pub const MAX_WORLDS: usize = 1 << 20;

    /// Builds a table by evaluating `rank` on every world.
    pub fn from_fn<F>(frame: Frame, mut rank: F) -> Result<RankingTable>
    where
        F: FnMut(&World) -> Rank,
    {
        let count = match frame.world_count() {
            Some(n) if n <= Self::MAX_WORLDS => n,
            other => {
                return Err(Error::TooLarge {
                    worlds: other,
                    limit: Self::MAX_WORLDS,
                })
            }
        };
        let mut ranks = Vec::with_capacity(count);
        let mut world = World(vec![0; frame.len()]);
        for _ in 0..count {
            ranks.push(rank(&world));
            advance(&frame, &mut world);
        }
        Ok(RankingTable { frame, ranks })
    }

    /// Builds a table from ranks listed in world order (last variable varies
    /// fastest).
    pub fn from_ranks(frame: Frame, ranks: Vec<Rank>) -> Result<RankingTable> {
        if frame.world_count() != Some(ranks.len()) {
            return Err(Error::TableShape {
                expected: frame.world_count(),
                found: ranks.len(),
            });
        }
        if ranks.len() > Self::MAX_WORLDS {
            return Err(Error::TooLarge {
                worlds: Some(ranks.len()),
                limit: Self::MAX_WORLDS,
            });
        }
        Ok(RankingTable { frame, ranks })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn worlds(&self) -> impl Iterator<Item = (World, Rank)> + '_ {
        let mut world = World(vec![0; self.frame.len()]);
        self.ranks.iter().map(move |&r| {
            let current = world.clone();
            advance(&self.frame, &mut world);
            (current, r)
        })
    }

    pub fn rank_of(&self, world: &World) -> Rank {
        let mut idx = 0;
        for (v, &x) in world.0.iter().enumerate() {
            idx = idx * self.frame.domain(v).len() + x;
        }
        self.ranks[idx]
    }

    /// `κ(φ)`: minimum rank over worlds satisfying φ; infinity if none do.
    pub fn marginal_rank(&self, phi: &Formula) -> Rank {
        self.worlds()
            .filter(|(w, _)| phi.holds(&self.frame, w))
            .map(|(_, r)| r)
            .min()
            .unwrap_or(Rank::INFINITY)
    }

    /// Minimum over all worlds; zero for a normalized table.
    pub fn min_rank(&self) -> Rank {
        self.ranks.iter().copied().min().unwrap_or(Rank::INFINITY)
    }

    pub fn is_normalized(&self) -> bool {
        self.min_rank() == Rank::ZERO
    }

    /// `κ(m | e)`: shift worlds satisfying `e` down by `κ(e)`, rule out the rest.
    pub fn condition(&self, evidence: &Formula) -> Result<RankingTable> {
        let base = self.marginal_rank(evidence);
        if base.is_infinite() {
            return Err(Error::Inconsistent);
        }
        let mut ranks = Vec::with_capacity(self.ranks.len());
        for (w, r) in self.worlds() {
            ranks.push(if evidence.holds(&self.frame, &w) {
                r.minus(base)?
            } else {
                Rank::INFINITY
            });
        }
        Ok(RankingTable {
            frame: self.frame.clone(),
            ranks,
        })
    }

    /// φ is believed iff `κ(¬φ) > 0`, with degree `κ(¬φ)`.
    pub fn believed(&self, phi: &Formula) -> Belief {
        let against = self.marginal_rank(&phi.clone().negate());
        if against > Rank::ZERO {
            Belief {
                believed: true,
                degree: against,
            }
        } else {
            Belief {
                believed: false,
                degree: Rank::ZERO,
            }
        }
    }
}

/// Odometer increment, last variable fastest.
pub(crate) fn advance(frame: &Frame, world: &mut World) {
    for v in (0..frame.len()).rev() {
        world.0[v] += 1;
        if world.0[v] < frame.domain(v).len() {
            return;
        }
        world.0[v] = 0;
    }
}
