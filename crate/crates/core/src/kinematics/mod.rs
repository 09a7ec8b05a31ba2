//! Exact resolution of three-speed ballistic annihilation on unit-spaced
//! particles.
//!
//! Particle `a_i` starts at integer position `i` with a speed in
//! `{-1, 0, +1}`. Every meeting time and place is a half-integer, so all
//! kinematics is carried out on integers scaled by two (`time2`, `pos2`).
//!
//! Two engines live here:
//!
//! * [`run_ba`] repeatedly extracts the globally earliest collision among
//!   adjacent live particles. It is the reference implementation.
//! * [`Sweep`] reveals particles left to right and keeps only the profile
//!   that later particles can still interact with. It is what the
//!   enumeration, renewal and Monte-Carlo code run on, and the test suite
//!   checks it against [`run_ba`] event for event.

mod sweep;

pub use sweep::{Entry, Profile, Step, Sweep};

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KinematicsError {
    #[error("a configuration needs at least one particle")]
    Empty,
    #[error("invalid speed `{0}` (expected -1, 0 or 1)")]
    InvalidSpeed(String),
}

/// Speed of a particle, in positions per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Speed {
    MinusOne,
    Zero,
    PlusOne,
}

impl Speed {
    pub const ALL: [Speed; 3] = [Speed::MinusOne, Speed::Zero, Speed::PlusOne];

    pub fn value(self) -> i8 {
        match self {
            Speed::MinusOne => -1,
            Speed::Zero => 0,
            Speed::PlusOne => 1,
        }
    }

    pub fn from_value(v: i64) -> Option<Speed> {
        match v {
            -1 => Some(Speed::MinusOne),
            0 => Some(Speed::Zero),
            1 => Some(Speed::PlusOne),
            _ => None,
        }
    }

    pub fn negate(self) -> Speed {
        match self {
            Speed::MinusOne => Speed::PlusOne,
            Speed::Zero => Speed::Zero,
            Speed::PlusOne => Speed::MinusOne,
        }
    }

    pub fn is_inert(self) -> bool {
        self == Speed::Zero
    }
}

impl fmt::Display for Speed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl FromStr for Speed {
    type Err = KinematicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let t = t.strip_prefix('+').unwrap_or(t);
        t.parse::<i64>()
            .ok()
            .and_then(Speed::from_value)
            .ok_or_else(|| KinematicsError::InvalidSpeed(s.trim().to_string()))
    }
}

/// Speeds of particles `a_0, ..., a_n`; particle `a_i` starts at position `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    speeds: Vec<Speed>,
}

impl Configuration {
    pub fn new(speeds: Vec<Speed>) -> Result<Self, KinematicsError> {
        if speeds.is_empty() {
            return Err(KinematicsError::Empty);
        }
        Ok(Configuration { speeds })
    }

    /// Builds a configuration from numeric speeds. Panics on values outside
    /// `{-1, 0, 1}` or on an empty slice; meant for literals in tests.
    pub fn from_values(values: &[i64]) -> Self {
        let speeds = values
            .iter()
            .map(|&v| Speed::from_value(v).expect("speed must be -1, 0 or 1"))
            .collect();
        Configuration::new(speeds).expect("non-empty configuration")
    }

    /// Parses the comma-separated text form, e.g. `"0,1,-1"`.
    pub fn parse(text: &str) -> Result<Self, KinematicsError> {
        let speeds = text
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(Speed::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Configuration::new(speeds)
    }

    pub fn speeds(&self) -> &[Speed] {
        &self.speeds
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    /// Always false; configurations are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn speed(&self, i: usize) -> Speed {
        self.speeds[i]
    }

    /// Mirror image: index order reversed and every speed negated.
    pub fn reflect(&self) -> Configuration {
        Configuration {
            speeds: self.speeds.iter().rev().map(|s| s.negate()).collect(),
        }
    }

    /// The restriction `x[i..=j]`, re-indexed from zero.
    pub fn restrict(&self, i: usize, j: usize) -> Configuration {
        Configuration {
            speeds: self.speeds[i..=j].to_vec(),
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_joined(f, self.speeds.iter())
    }
}

impl FromStr for Configuration {
    type Err = KinematicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Configuration::parse(s)
    }
}

/// Free-function form of [`Configuration::reflect`].
pub fn reflect(config: &Configuration) -> Configuration {
    config.reflect()
}

/// A mutual annihilation of two or three particles.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CollisionEvent {
    /// Twice the collision time.
    pub time2: u64,
    /// Twice the collision position.
    pub pos2: i64,
    /// Participant indices in increasing order.
    pub participants: Vec<usize>,
}

impl CollisionEvent {
    pub fn is_triple(&self) -> bool {
        self.participants.len() == 3
    }
}

impl fmt::Display for CollisionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={} x={} {{",
            HalfInteger(self.time2 as i64),
            HalfInteger(self.pos2)
        )?;
        write_joined(f, self.participants.iter())?;
        write!(f, "}}")
    }
}

/// Formats a doubled quantity as `3`, `2.5`, `-0.5`.
struct HalfInteger(i64);

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            let sign = if self.0 < 0 { "-" } else { "" };
            write!(f, "{}{}.5", sign, self.0.abs() / 2)
        }
    }
}

fn write_joined<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    items: impl Iterator<Item = T>,
) -> fmt::Result {
    for (k, item) in items.enumerate() {
        if k > 0 {
            write!(f, ",")?;
        }
        write!(f, "{}", item)?;
    }
    Ok(())
}

/// Final state of one particle: its speed if it survives, or annihilated
/// (written `2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Xi {
    Survived(Speed),
    Annihilated,
}

impl Xi {
    pub fn value(self) -> i8 {
        match self {
            Xi::Survived(s) => s.value(),
            Xi::Annihilated => 2,
        }
    }

    pub fn is_surviving(self, speed: Speed) -> bool {
        self == Xi::Survived(speed)
    }
}

impl fmt::Display for Xi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Formats a xi vector as `0,2,2,1`.
pub fn format_xi(xi: &[Xi]) -> String {
    xi.iter()
        .map(|x| x.value().to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Per-particle fates and the full collision log of a finite configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOutcome {
    speeds: Vec<Speed>,
    xi: Vec<Xi>,
    events: Vec<CollisionEvent>,
    event_of: Vec<Option<u32>>,
}

impl SimOutcome {
    /// Assembles an outcome from a list of events; events are sorted by
    /// `(time2, pos2)`.
    pub(crate) fn from_events(speeds: Vec<Speed>, mut events: Vec<CollisionEvent>) -> Self {
        events.sort_by_key(|e| (e.time2, e.pos2));
        let mut event_of = vec![None; speeds.len()];
        for (k, e) in events.iter().enumerate() {
            for &i in &e.participants {
                debug_assert!(event_of[i].is_none(), "particle {i} annihilated twice");
                event_of[i] = Some(k as u32);
            }
        }
        let xi = speeds
            .iter()
            .zip(&event_of)
            .map(|(&s, e)| match e {
                Some(_) => Xi::Annihilated,
                None => Xi::Survived(s),
            })
            .collect();
        SimOutcome {
            speeds,
            xi,
            events,
            event_of,
        }
    }

    pub fn xi(&self) -> &[Xi] {
        &self.xi
    }

    pub fn events(&self) -> &[CollisionEvent] {
        &self.events
    }

    pub fn speeds(&self) -> &[Speed] {
        &self.speeds
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn survives(&self, i: usize) -> bool {
        self.event_of[i].is_none()
    }

    /// The event that annihilated `a_i`, if any.
    pub fn event_of(&self, i: usize) -> Option<&CollisionEvent> {
        self.event_of[i].map(|k| &self.events[k as usize])
    }

    /// Index of the particle that annihilated `a_i`. In a triple collision
    /// the larger of the two partner indices is reported, so a `+1` particle
    /// in a triple is always matched with the `-1` particle.
    pub fn destroyer_of(&self, i: usize) -> Option<usize> {
        self.event_of(i)
            .and_then(|e| e.participants.iter().copied().filter(|&j| j != i).max())
    }

    /// Number of surviving particles with the given speed.
    pub fn surviving(&self, speed: Speed) -> usize {
        self.xi.iter().filter(|x| x.is_surviving(speed)).count()
    }
}

/// Projection of the fate vector.
pub fn xi(outcome: &SimOutcome) -> Vec<Xi> {
    outcome.xi.clone()
}

/// Free-function form of [`SimOutcome::destroyer_of`].
pub fn destroyer_of(outcome: &SimOutcome, i: usize) -> Option<usize> {
    outcome.destroyer_of(i)
}

/// Doubled meeting time and position of two adjacent particles, if they
/// approach each other.
fn meeting(left: usize, vl: i8, right: usize, vr: i8) -> Option<(u64, i64)> {
    if vl <= vr {
        return None;
    }
    let gap = (right - left) as u64;
    let time2 = match vl - vr {
        2 => gap,
        _ => 2 * gap,
    };
    let pos2 = 2 * left as i64 + vl as i64 * time2 as i64;
    Some((time2, pos2))
}

/// Runs ballistic annihilation on a finite configuration until no further
/// collision is possible.
///
/// Collisions are resolved in time order; all particles that meet at the
/// same point at the same time annihilate together.
pub fn run_ba(config: &Configuration) -> SimOutcome {
    const NONE: usize = usize::MAX;
    let n = config.len();
    let v: Vec<i8> = config.speeds().iter().map(|s| s.value()).collect();
    let mut prev: Vec<usize> = (0..n).map(|i| i.wrapping_sub(1)).collect();
    prev[0] = NONE;
    let mut next: Vec<usize> = (1..=n).collect();
    next[n - 1] = NONE;
    let mut alive = vec![true; n];

    let mut heap = BinaryHeap::new();
    for i in 0..n.saturating_sub(1) {
        if let Some((t, x)) = meeting(i, v[i], i + 1, v[i + 1]) {
            heap.push(Reverse((t, x, i, i + 1)));
        }
    }

    let mut events = Vec::new();
    let mut batch: Vec<(i64, usize, usize)> = Vec::new();
    while let Some(&Reverse((t, _, _, _))) = heap.peek() {
        batch.clear();
        while let Some(&Reverse((t2, x, a, b))) = heap.peek() {
            if t2 != t {
                break;
            }
            heap.pop();
            if alive[a] && alive[b] && next[a] == b {
                batch.push((x, a, b));
            }
        }
        if batch.is_empty() {
            continue;
        }
        // Adjacent valid pairs sharing a position form one event; at most
        // three particles can meet since their speeds are distinct.
        batch.sort_unstable();
        // A pair can be queued twice when it becomes adjacent from both sides.
        batch.dedup();
        let mut groups: Vec<(i64, Vec<usize>)> = Vec::new();
        for &(x, a, b) in &batch {
            match groups.last_mut() {
                Some((gx, members)) if *gx == x && members.last() == Some(&a) => members.push(b),
                _ => groups.push((x, vec![a, b])),
            }
        }
        let mut left_of: Vec<usize> = Vec::with_capacity(groups.len());
        for (_, members) in &groups {
            left_of.push(prev[members[0]]);
            for &m in members {
                alive[m] = false;
                let (p, q) = (prev[m], next[m]);
                if p != NONE {
                    next[p] = q;
                }
                if q != NONE {
                    prev[q] = p;
                }
            }
        }
        for (x, members) in groups {
            debug_assert!(members.len() <= 3);
            events.push(CollisionEvent {
                time2: t,
                pos2: x,
                participants: members,
            });
        }
        for mut l in left_of {
            while l != NONE && !alive[l] {
                l = prev[l];
            }
            if l == NONE {
                continue;
            }
            let r = next[l];
            if r == NONE {
                continue;
            }
            if let Some((t2, x)) = meeting(l, v[l], r, v[r]) {
                debug_assert!(t2 > t);
                heap.push(Reverse((t2, x, l, r)));
            }
        }
    }
    SimOutcome::from_events(config.speeds().to_vec(), events)
}
