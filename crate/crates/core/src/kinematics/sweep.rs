//! Left-to-right incremental resolution.
//!
//! After particles `0..k` have been revealed, only a few things can still
//! interact with a particle added at index `k`:
//!
//! * surviving `+1` particles (they run into it),
//! * surviving inert particles,
//! * inert particles that a `+1` particle will hit, as long as a `-1`
//!   particle from index `k` can reach them first. For a `+1` at `j`
//!   hitting an inert at `i` this is the case exactly for `k < 2i - j`;
//!   at `k = 2i - j` the three meet, and beyond it the pair is settled.
//!
//! These form a stack ordered by position, with one exception: pairs that
//! lie inside a later pair sit directly below it. They are hidden from a
//! `-1` particle while the outer pair holds, and become reachable again if
//! a `-1` particle breaks the outer pair. A new `-1` particle therefore
//! meets the topmost entry once settled pairs have been discarded, and a
//! new inert particle is hit by the topmost surviving `+1`.

use super::{CollisionEvent, Configuration, SimOutcome, Speed};

/// One element of the right-visible profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Entry {
    /// A surviving `+1` particle.
    Right(u32),
    /// A surviving inert particle.
    Inert(u32),
    /// `+1` particle `right` has hit inert particle `inert`; a `-1` particle
    /// starting at or before [`Entry::window_end`] can still reach the inert
    /// particle first, or together with it.
    Pair { right: u32, inert: u32 },
}

impl Entry {
    /// Last index from which a `-1` particle can still reach the inert
    /// particle of a pair.
    pub fn window_end(&self) -> Option<u32> {
        match *self {
            Entry::Pair { right, inert } => Some(2 * inert - right),
            _ => None,
        }
    }
}

/// What happened to a newly revealed particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// A `+1` particle joins the survivors.
    Launched,
    /// An inert particle with no `+1` survivor to its left.
    Stood,
    /// An inert particle hit by the surviving `+1` particle `right`.
    Absorbed { right: u32 },
    /// A `-1` particle that nothing stops.
    Escaped,
    /// A `-1` particle annihilated with the surviving `+1` particle `right`.
    HitRight { right: u32 },
    /// A `-1` particle annihilated with the surviving inert particle `inert`.
    HitInert { inert: u32 },
    /// A `-1` particle reached `inert` before `right` did; `right` survives again.
    Freed { right: u32, inert: u32 },
    /// A `-1` particle met `inert` together with `right`.
    Triple { right: u32, inert: u32 },
}

/// The right-visible profile of a revealed prefix, without per-particle
/// bookkeeping. Cheap to clone; this is the state the enumerator walks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Profile {
    stack: Vec<Entry>,
    next: u32,
    rights: u32,
    inerts: u32,
    escaped: u32,
}

impl Profile {
    pub fn new() -> Self {
        Profile::default()
    }

    /// Number of particles revealed so far; the next one gets this index.
    pub fn len(&self) -> u32 {
        self.next
    }

    pub fn is_empty(&self) -> bool {
        self.next == 0
    }

    pub fn entries(&self) -> &[Entry] {
        &self.stack
    }

    /// Surviving `+1` particles.
    pub fn rights(&self) -> u32 {
        self.rights
    }

    /// Surviving inert particles.
    pub fn inerts(&self) -> u32 {
        self.inerts
    }

    /// Surviving `-1` particles.
    pub fn escaped(&self) -> u32 {
        self.escaped
    }

    /// Whether `entry` can still be changed by particles not yet revealed.
    pub fn is_open(&self, entry: &Entry) -> bool {
        match entry.window_end() {
            Some(end) => end >= self.next,
            None => true,
        }
    }

    /// Pairs that a future `-1` particle could still break or join.
    pub fn open_pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.stack.iter().filter_map(move |e| match *e {
            Entry::Pair { right, inert } if 2 * inert - right >= self.next => Some((right, inert)),
            _ => None,
        })
    }

    /// What a `-1` particle revealed next would do, without revealing it.
    pub fn peek_minus(&self) -> Step {
        let k = self.next;
        for e in self.stack.iter().rev() {
            match *e {
                Entry::Right(right) => return Step::HitRight { right },
                Entry::Inert(inert) => return Step::HitInert { inert },
                Entry::Pair { right, inert } => {
                    let end = 2 * inert - right;
                    if end < k {
                        continue;
                    }
                    return if end == k {
                        Step::Triple { right, inert }
                    } else {
                        Step::Freed { right, inert }
                    };
                }
            }
        }
        Step::Escaped
    }

    pub fn push(&mut self, speed: Speed) -> Step {
        let k = self.next;
        self.next += 1;
        match speed {
            Speed::PlusOne => {
                self.stack.push(Entry::Right(k));
                self.rights += 1;
                Step::Launched
            }
            Speed::Zero => {
                if self.rights == 0 {
                    self.stack.push(Entry::Inert(k));
                    self.inerts += 1;
                    return Step::Stood;
                }
                while matches!(self.stack.last(), Some(e) if e.window_end().is_some_and(|end| end < k)) {
                    self.stack.pop();
                }
                // The pairs above the topmost survivor end up nested inside
                // the new pair, which goes on top of them.
                let t = self
                    .stack
                    .iter()
                    .rposition(|e| matches!(e, Entry::Right(_)))
                    .expect("a +1 survivor exists");
                let Entry::Right(right) = self.stack.remove(t) else {
                    unreachable!()
                };
                self.rights -= 1;
                self.stack.push(Entry::Pair { right, inert: k });
                Step::Absorbed { right }
            }
            Speed::MinusOne => loop {
                match self.stack.last().copied() {
                    None => {
                        self.escaped += 1;
                        return Step::Escaped;
                    }
                    Some(Entry::Right(right)) => {
                        self.stack.pop();
                        self.rights -= 1;
                        return Step::HitRight { right };
                    }
                    Some(Entry::Inert(inert)) => {
                        self.stack.pop();
                        self.inerts -= 1;
                        return Step::HitInert { inert };
                    }
                    Some(Entry::Pair { right, inert }) => {
                        let end = 2 * inert - right;
                        if end < k {
                            self.stack.pop();
                            continue;
                        }
                        self.stack.pop();
                        if end == k {
                            return Step::Triple { right, inert };
                        }
                        // The freed particle goes back below the pairs that
                        // were nested inside its own.
                        let mut t = self.stack.len();
                        while t > 0 && matches!(self.stack[t - 1], Entry::Pair { right: r, .. } if r > right) {
                            t -= 1;
                        }
                        self.stack.insert(t, Entry::Right(right));
                        self.rights += 1;
                        return Step::Freed { right, inert };
                    }
                }
            },
        }
    }
}

/// A [`Profile`] that also records every particle's fate and the collision
/// log, so that it can produce a full [`SimOutcome`] at any point.
#[derive(Debug, Clone, Default)]
pub struct Sweep {
    profile: Profile,
    speeds: Vec<Speed>,
    fate: Vec<Option<u32>>,
    events: Vec<CollisionEvent>,
}

impl Sweep {
    pub fn new() -> Self {
        Sweep::default()
    }

    pub fn run(config: &Configuration) -> Self {
        let mut sweep = Sweep::new();
        for &s in config.speeds() {
            sweep.push(s);
        }
        sweep
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn speeds(&self) -> &[Speed] {
        &self.speeds
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    fn record(&mut self, time2: u64, pos2: i64, participants: &[u32]) -> u32 {
        let id = self.events.len() as u32;
        for &p in participants {
            self.fate[p as usize] = Some(id);
        }
        self.events.push(CollisionEvent {
            time2,
            pos2,
            participants: participants.iter().map(|&p| p as usize).collect(),
        });
        id
    }

    pub fn push(&mut self, speed: Speed) -> Step {
        let k = self.speeds.len() as u32;
        self.speeds.push(speed);
        self.fate.push(None);
        let step = self.profile.push(speed);
        let (ku, k2) = (k as u64, 2 * k as i64);
        match step {
            Step::Launched | Step::Stood | Step::Escaped => {}
            Step::Absorbed { right } => {
                self.record(2 * (ku - right as u64), k2, &[right, k]);
            }
            Step::HitRight { right } => {
                self.record(ku - right as u64, k2 - (ku - right as u64) as i64, &[right, k]);
            }
            Step::HitInert { inert } => {
                self.record(2 * (ku - inert as u64), 2 * inert as i64, &[inert, k]);
            }
            Step::Triple { inert, .. } => {
                let id = self.fate[inert as usize].expect("pair recorded");
                self.events[id as usize].participants.push(k as usize);
                self.fate[k as usize] = Some(id);
            }
            Step::Freed { right, inert } => {
                let id = self.fate[inert as usize].expect("pair recorded") as usize;
                self.fate[right as usize] = None;
                self.fate[k as usize] = Some(id as u32);
                self.events[id] = CollisionEvent {
                    time2: 2 * (ku - inert as u64),
                    pos2: 2 * inert as i64,
                    participants: vec![inert as usize, k as usize],
                };
            }
        }
        step
    }

    /// Whether `a_i` is alive in the prefix revealed so far.
    pub fn is_alive(&self, i: usize) -> bool {
        self.fate[i].is_none()
    }

    /// Whether `a_i` is annihilated in a way no further particle can change.
    pub fn is_settled(&self, i: usize) -> bool {
        let Some(id) = self.fate[i] else {
            return false;
        };
        let e = &self.events[id as usize];
        match e.participants.as_slice() {
            &[a, b] if self.speeds[a] == Speed::PlusOne && self.speeds[b] == Speed::Zero => {
                // A pair is settled once its window has been revealed, or
                // once it has been discarded as unreachable.
                let end = 2 * b - a;
                end < self.len() || !self.profile.stack.contains(&Entry::Pair {
                    right: a as u32,
                    inert: b as u32,
                })
            }
            _ => true,
        }
    }

    /// Current destroyer of `a_i` in the revealed prefix, with the larger
    /// partner reported for a triple collision.
    pub fn destroyer_of(&self, i: usize) -> Option<usize> {
        self.fate[i].and_then(|id| {
            self.events[id as usize]
                .participants
                .iter()
                .copied()
                .filter(|&j| j != i)
                .max()
        })
    }

    /// Whether `a_i` is currently annihilated in a pure pair (no third particle).
    pub fn in_pair(&self, i: usize) -> bool {
        self.fate[i].is_some_and(|id| self.events[id as usize].participants.len() == 2)
    }

    /// Outcome of ballistic annihilation on the revealed prefix.
    pub fn outcome(&self) -> SimOutcome {
        SimOutcome::from_events(self.speeds.clone(), self.events.clone())
    }
}
