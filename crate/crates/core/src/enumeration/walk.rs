//! The pruned enumerator.
//!
//! Membership in `A_n` factors across the inert particle `a_n`. Its left
//! part `u = x_2..x_{n-1}` must leave `a_1` as the only surviving `+1`
//! particle (so `a_n` absorbs it), and its right part `v = x_{n+1}..x_{2n-1}`
//! run on its own must send no `-1` particle to the left (one would break or
//! join the pair). Nothing else crosses `a_n`: left `-1` particles never
//! reach it and right `+1` particles move away. The surviving inert
//! particles are the seed plus those of `v`, and `A'_n` asks in addition
//! that `v` end in `+1` and that the rest of `v` leave no active survivor.
//!
//! So two independent depth-first searches over [`Profile`]s suffice: one
//! over left parts, pruned once `a_1` is settled dead, and one over right
//! parts, pruned once a `-1` escapes.

use rayon::prelude::*;

use super::DistanceCounts;
use crate::kinematics::{Entry, Profile, Speed, Step};

/// Sequential levels expanded before the subtrees are handed to workers.
const SPLIT_LEVELS: usize = 4;

trait Search: Sync {
    type Acc: Send;
    fn fresh(&self) -> Self::Acc;
    /// Records a node; returns whether its subtree can contribute.
    fn visit(&self, acc: &mut Self::Acc, profile: &Profile, zeros: u32) -> bool;
    fn merge(&self, into: &mut Self::Acc, from: Self::Acc);
}

struct Tally<A> {
    acc: A,
    nodes: Vec<u64>,
}

fn descend<S: Search>(
    search: &S,
    tally: &mut Tally<S::Acc>,
    scratch: &mut Vec<Profile>,
    depth: usize,
    zeros: u32,
    max_len: u32,
) {
    let profile = &scratch[depth];
    tally.nodes[profile.len() as usize] += 1;
    if !search.visit(&mut tally.acc, profile, zeros) || profile.len() >= max_len {
        return;
    }
    if scratch.len() <= depth + 1 {
        scratch.push(Profile::new());
    }
    for speed in Speed::ALL {
        let (lo, hi) = scratch.split_at_mut(depth + 1);
        hi[0].clone_from(&lo[depth]);
        hi[0].push(speed);
        descend(search, tally, scratch, depth + 1, zeros + speed.is_inert() as u32, max_len);
    }
}

fn run<S: Search>(search: &S, root: Profile, max_len: u32) -> Tally<S::Acc> {
    let width = max_len as usize + 1;
    let mut tally = Tally {
        acc: search.fresh(),
        nodes: vec![0; width],
    };
    let mut frontier = vec![(root, 0u32)];
    for _ in 0..SPLIT_LEVELS {
        let mut next = Vec::with_capacity(frontier.len() * 3);
        for (profile, zeros) in frontier {
            tally.nodes[profile.len() as usize] += 1;
            if !search.visit(&mut tally.acc, &profile, zeros) || profile.len() >= max_len {
                continue;
            }
            for speed in Speed::ALL {
                let mut child = profile.clone();
                child.push(speed);
                next.push((child, zeros + speed.is_inert() as u32));
            }
        }
        frontier = next;
    }
    let rest = frontier
        .into_par_iter()
        .map(|(profile, zeros)| {
            let mut sub = Tally {
                acc: search.fresh(),
                nodes: vec![0; width],
            };
            let mut scratch = vec![profile];
            descend(search, &mut sub, &mut scratch, 0, zeros, max_len);
            sub
        })
        .reduce(
            || Tally {
                acc: search.fresh(),
                nodes: vec![0; width],
            },
            |mut a, b| {
                search.merge(&mut a.acc, b.acc);
                a.nodes.iter_mut().zip(b.nodes).for_each(|(x, y)| *x += y);
                a
            },
        );
    search.merge(&mut tally.acc, rest.acc);
    tally.nodes.iter_mut().zip(rest.nodes).for_each(|(x, y)| *x += y);
    tally
}

fn add_grid(into: &mut [Vec<u128>], from: &[Vec<u128>]) {
    for (a, b) in into.iter_mut().zip(from) {
        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    }
}

/// Left parts: the profile after `0, 1, u` has length `n`.
struct Left {
    depth: usize,
}

struct LeftAcc {
    /// `[n][zeros(u)]`: `a_1` is the only surviving `+1` particle.
    sole: Vec<Vec<u128>>,
    /// `[n][zeros(u)]`: a `-1` at index `n` would destroy `a_1`.
    gamma: Vec<Vec<u128>>,
}

impl Search for Left {
    type Acc = LeftAcc;

    fn fresh(&self) -> LeftAcc {
        let grid = vec![vec![0; self.depth + 1]; self.depth + 1];
        LeftAcc {
            sole: grid.clone(),
            gamma: grid,
        }
    }

    fn visit(&self, acc: &mut LeftAcc, profile: &Profile, zeros: u32) -> bool {
        let n = profile.len() as usize;
        let z = zeros as usize;
        let alive = profile.entries().get(1) == Some(&Entry::Right(1));
        if alive && profile.rights() == 1 {
            acc.sole[n][z] += 1;
        }
        if matches!(
            profile.peek_minus(),
            Step::HitRight { right: 1 } | Step::Triple { right: 1, .. }
        ) {
            acc.gamma[n][z] += 1;
        }
        // Once a_1's pair is settled no extension can change its destroyer.
        alive
            || profile
                .entries()
                .iter()
                .any(|e| matches!(e, Entry::Pair { right: 1, .. }) && profile.is_open(e))
    }

    fn merge(&self, into: &mut LeftAcc, from: LeftAcc) {
        add_grid(&mut into.sole, &from.sole);
        add_grid(&mut into.gamma, &from.gamma);
    }
}

/// Right parts, run on their own from an empty profile.
struct Right {
    max_len: usize,
}

struct RightAcc {
    /// `[len][zeros][surviving inerts]`: no `-1` escapes.
    closed: Vec<Vec<Vec<u128>>>,
    /// `[len][zeros]`: no active particle survives.
    quiet: Vec<Vec<u128>>,
}

impl Search for Right {
    type Acc = RightAcc;

    fn fresh(&self) -> RightAcc {
        let w = self.max_len + 1;
        RightAcc {
            closed: vec![vec![vec![0; w]; w]; w],
            quiet: vec![vec![0; w]; w],
        }
    }

    fn visit(&self, acc: &mut RightAcc, profile: &Profile, zeros: u32) -> bool {
        if profile.escaped() > 0 {
            return false;
        }
        let len = profile.len() as usize;
        acc.closed[len][zeros as usize][profile.inerts() as usize] += 1;
        if profile.rights() == 0 {
            acc.quiet[len][zeros as usize] += 1;
        }
        true
    }

    fn merge(&self, into: &mut RightAcc, from: RightAcc) {
        for (a, b) in into.closed.iter_mut().zip(&from.closed) {
            add_grid(a, b);
        }
        add_grid(&mut into.quiet, &from.quiet);
    }
}

pub(super) struct Raw {
    left: LeftAcc,
    right: RightAcc,
    pub nodes: u64,
    /// `(profile length, nodes)` over both searches.
    pub nodes_by_length: Vec<(usize, u64)>,
}

impl Raw {
    pub fn level(&self, n: usize) -> DistanceCounts {
        let mut out = DistanceCounts::empty(n);
        for (zu, &sole) in self.left.sole[n].iter().enumerate() {
            if sole == 0 {
                continue;
            }
            for (zv, by_inerts) in self.right.closed[n - 1].iter().enumerate() {
                for (inerts, &c) in by_inerts.iter().enumerate() {
                    if c > 0 {
                        let key = ((zu + 1 + zv) as u32, (1 + inerts) as u32);
                        *out.an.entry(key).or_default() += sole * c;
                    }
                }
            }
            for (zv, &c) in self.right.quiet[n - 2].iter().enumerate() {
                if c > 0 {
                    *out.aprime.entry((zu + 1 + zv) as u32).or_default() += sole * c;
                }
            }
        }
        for (zu, &c) in self.left.gamma[n].iter().enumerate() {
            if c > 0 {
                *out.gamma_minus.entry(zu as u32).or_default() += c;
            }
        }
        out
    }
}

pub(super) fn count(depth: usize) -> Raw {
    let mut root = Profile::new();
    root.push(Speed::Zero);
    root.push(Speed::PlusOne);
    let left = run(&Left { depth }, root, depth as u32);
    let right = run(&Right { max_len: depth - 1 }, Profile::new(), depth as u32 - 1);
    let mut by_len = left.nodes.clone();
    for (i, c) in right.nodes.iter().enumerate() {
        by_len[i] += c;
    }
    Raw {
        left: left.acc,
        right: right.acc,
        nodes: by_len.iter().sum(),
        nodes_by_length: by_len
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .collect(),
    }
}
