//! Renewal index `eta` and offspring count `Z` of the embedded branching
//! process, on lazily revealed random configurations.
//!
//! Speeds are revealed left to right, one index at a time, and every
//! decision depends only on what has been revealed. Consequently the
//! returned `(eta, Z)` is unchanged by rewriting speeds beyond `eta`, and
//! the speeds after `eta` are fresh i.i.d. draws for the next generation.

use std::collections::BTreeSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::kinematics::{Entry, Speed, Step, Sweep};

/// Default number of indices revealed before a sample is censored.
pub const DEFAULT_HORIZON: usize = 100_000;

/// A source of particle speeds by index. Index 0 is the seed and is never
/// queried.
pub trait SpeedSource {
    fn speed(&mut self, index: usize) -> Speed;
}

/// Speeds drawn i.i.d. from `((1-p)/2, p, (1-p)/2)` on demand.
///
/// Stream `s` of seed `x` is a fixed infinite sequence: the speed at index
/// `i >= 1` comes from the `(i-1)`-th output of ChaCha8 keyed by `x` on
/// stream `s`, however the indices are accessed.
#[derive(Debug, Clone)]
pub struct LazyConfiguration {
    seed: u64,
    stream: u64,
    p: f64,
    rng: ChaCha8Rng,
    revealed: Vec<Speed>,
}

impl LazyConfiguration {
    pub fn new(seed: u64, stream: u64, p: f64) -> Self {
        assert!((0.0..=1.0).contains(&p), "p = {p} is not a probability");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        LazyConfiguration {
            seed,
            stream,
            p,
            rng,
            revealed: vec![Speed::Zero],
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Speeds drawn so far, starting with the seed.
    pub fn revealed(&self) -> &[Speed] {
        &self.revealed
    }

    fn draw(&mut self) -> Speed {
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let q = (1.0 - self.p) / 2.0;
        if u < q {
            Speed::MinusOne
        } else if u < q + self.p {
            Speed::Zero
        } else {
            Speed::PlusOne
        }
    }
}

impl SpeedSource for LazyConfiguration {
    fn speed(&mut self, index: usize) -> Speed {
        while self.revealed.len() <= index {
            let s = self.draw();
            self.revealed.push(s);
        }
        self.revealed[index]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RenewalStatus {
    Renewed,
    Censored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenewalSample {
    pub status: RenewalStatus,
    /// Renewal index; `None` when censored.
    pub eta: Option<usize>,
    /// Surviving inert particles on `[0, eta]`; 0 when censored.
    pub z: u32,
    /// Surviving inert particles once the first window is revealed.
    pub z1: u32,
    /// Largest index whose speed was read.
    pub revealed_max: usize,
    pub horizon: usize,
}

impl RenewalSample {
    pub fn is_renewed(&self) -> bool {
        self.status == RenewalStatus::Renewed
    }
}

struct Censored;

struct Reveal<'a, S> {
    source: &'a mut S,
    sweep: Sweep,
    horizon: usize,
}

impl<S: SpeedSource> Reveal<'_, S> {
    fn last(&self) -> usize {
        self.sweep.len() - 1
    }

    fn next(&mut self) -> Result<Step, Censored> {
        let k = self.sweep.len();
        if k > self.horizon {
            return Err(Censored);
        }
        let s = self.source.speed(k);
        Ok(self.sweep.push(s))
    }

    fn through(&mut self, index: usize) -> Result<(), Censored> {
        while self.last() < index {
            self.next()?;
        }
        Ok(())
    }

    fn leftmost_right(&self) -> Option<usize> {
        self.sweep.profile().entries().iter().find_map(|e| match *e {
            Entry::Right(j) => Some(j as usize),
            _ => None,
        })
    }

    /// Runs the construction from a revealed `0, 1`; returns `eta` and `z1`.
    fn run(&mut self) -> Result<(usize, u32), Censored> {
        let mut kappa = 1;
        let mut z1 = None;
        loop {
            // Reveal until the current +1 particle's fate is final.
            while !self.sweep.is_settled(kappa) {
                self.next()?;
            }
            let g = self.sweep.destroyer_of(kappa).expect("settled particle was destroyed");
            // A -1 destroyer renews at once; an inert one opens a window of
            // dependence reaching 2g - kappa.
            let mut edge = match self.sweep.speeds()[g] {
                Speed::MinusOne => self.last(),
                _ => self.last().max(2 * g - kappa),
            };
            self.through(edge)?;
            z1.get_or_insert(self.sweep.profile().inerts());

            kappa = 'window: loop {
                if let Some(k) = self.leftmost_right() {
                    break 'window k;
                }
                // Pairs that a -1 from beyond the edge could still break.
                let open: Vec<(u32, u32)> = self.sweep.profile().open_pairs().collect();
                if open.is_empty() {
                    return Ok((edge, z1.unwrap()));
                }
                let reach = open.iter().map(|&(j, i)| (2 * i - j) as usize).max().unwrap();
                let rights: BTreeSet<u32> = open.iter().map(|&(j, _)| j).collect();
                while self.last() < reach {
                    if let Step::Freed { right, .. } = self.next()? {
                        if rights.contains(&right) {
                            break 'window right as usize;
                        }
                    }
                }
                edge = reach;
            };
        }
    }
}

/// Reads speeds from `source` until the renewal index is determined, or
/// until an index beyond `horizon` would be needed.
pub fn sample_renewal<S: SpeedSource>(source: &mut S, horizon: usize) -> RenewalSample {
    assert!(horizon >= 2, "horizon must be at least 2");
    let mut sweep = Sweep::new();
    sweep.push(Speed::Zero);
    let first = source.speed(1);
    sweep.push(first);
    let renewed = |eta: usize, z: u32, z1: u32| RenewalSample {
        status: RenewalStatus::Renewed,
        eta: Some(eta),
        z,
        z1,
        revealed_max: eta,
        horizon,
    };
    match first {
        Speed::MinusOne => return renewed(1, 0, 0),
        Speed::Zero => return renewed(1, 2, 2),
        Speed::PlusOne => {}
    }
    let mut walk = Reveal {
        source,
        sweep,
        horizon,
    };
    match walk.run() {
        Ok((eta, z1)) => {
            debug_assert_eq!(walk.last(), eta);
            renewed(eta, walk.sweep.profile().inerts(), z1)
        }
        Err(Censored) => RenewalSample {
            status: RenewalStatus::Censored,
            eta: None,
            z: 0,
            z1: 0,
            revealed_max: walk.last(),
            horizon,
        },
    }
}

/// Monte-Carlo lower estimate of `E Z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffspringEstimate {
    pub p: f64,
    pub horizon: usize,
    pub reps: u64,
    pub seed: u64,
    /// Mean of `Z` with censored samples counted as 0.
    pub mean_lower: f64,
    pub censor_rate: f64,
    /// Half-width of the normal-approximation 95% confidence interval.
    pub ci_halfwidth: f64,
}

#[derive(Default, Clone, Copy)]
struct Sums {
    z: u64,
    z2: u64,
    censored: u64,
}

/// Averages `Z` over `reps` samples; sample `r` reads stream `r` of `seed`.
pub fn estimate_offspring_mean(p: f64, horizon: usize, reps: u64, seed: u64) -> OffspringEstimate {
    assert!(reps >= 1, "reps must be positive");
    let sums = (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = sample_renewal(&mut LazyConfiguration::new(seed, r, p), horizon);
            let z = s.z as u64;
            Sums {
                z,
                z2: z * z,
                censored: !s.is_renewed() as u64,
            }
        })
        .reduce(Sums::default, |a, b| Sums {
            z: a.z + b.z,
            z2: a.z2 + b.z2,
            censored: a.censored + b.censored,
        });
    let n = reps as f64;
    let mean = sums.z as f64 / n;
    let var = if reps > 1 {
        ((sums.z2 as f64 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    OffspringEstimate {
        p,
        horizon,
        reps,
        seed,
        mean_lower: mean,
        censor_rate: sums.censored as f64 / n,
        ci_halfwidth: 1.96 * (var / n).sqrt(),
    }
}

/// Population sizes of the branching process generation by generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenerationTrace {
    pub extinct: bool,
    /// `sizes[0] = 1` is the seed.
    pub sizes: Vec<u64>,
    /// Individuals whose offspring sample was censored (counted as 0).
    pub censored: u64,
    /// Whether the run stopped because the population exceeded the cap.
    pub capped: bool,
}

/// Default population at which a run is declared surviving.
pub const DEFAULT_POPULATION_CAP: u64 = 1 << 16;

/// Runs the branching process with offspring law `Z`.
///
/// Each individual draws an independent sample on its own stream of `seed`.
/// Generations are processed in order, which gives the same sizes as the
/// depth-first order of the construction since individuals are i.i.d.
pub fn simulate_generations(
    p: f64,
    horizon: usize,
    max_generations: usize,
    seed: u64,
    cap: u64,
) -> GenerationTrace {
    assert!(max_generations >= 1, "need at least one generation");
    let mut sizes = vec![1u64];
    let mut censored = 0;
    let mut stream = 0u64;
    for _ in 0..max_generations {
        let current = *sizes.last().unwrap();
        if current == 0 {
            break;
        }
        if current > cap {
            return GenerationTrace {
                extinct: false,
                sizes,
                censored,
                capped: true,
            };
        }
        let mut next = 0;
        for _ in 0..current {
            let s = sample_renewal(&mut LazyConfiguration::new(seed, stream, p), horizon);
            stream += 1;
            censored += !s.is_renewed() as u64;
            next += s.z as u64;
        }
        sizes.push(next);
    }
    GenerationTrace {
        extinct: *sizes.last().unwrap() == 0,
        sizes,
        censored,
        capped: false,
    }
}

/// Extinction probability of a branching process whose offspring law is
/// the empirical distribution of `offspring` (smallest fixed point of the
/// generating function).
pub fn extinction_probability(offspring: &[u32]) -> f64 {
    if offspring.is_empty() {
        return 1.0;
    }
    let max = *offspring.iter().max().unwrap() as usize;
    let mut law = vec![0.0; max + 1];
    for &z in offspring {
        law[z as usize] += 1.0;
    }
    let n = offspring.len() as f64;
    law.iter_mut().for_each(|x| *x /= n);
    let pgf = |s: f64| law.iter().rev().fold(0.0, |acc, &c| acc * s + c);
    let mut s = 0.0;
    for _ in 0..100_000 {
        let t = pgf(s);
        if (t - s).abs() < 1e-15 {
            return t;
        }
        s = t;
    }
    s
}
