//! Randomized invariant checks shared by the property tests and the
//! acceptance suite. Each check returns a description of the first violation.

#![allow(dead_code)]

use ballistic::kinematics::{run_ba, Configuration, Speed, Sweep, Xi};
use ballistic::renewal::{sample_renewal, LazyConfiguration, RenewalSample, SpeedSource};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_FUZZ_LEN: usize = 64;

pub fn random_speeds(rng: &mut ChaCha8Rng, len: usize, p: f64) -> Vec<Speed> {
    (0..len)
        .map(|_| {
            let u: f64 = rng.gen();
            if u < p {
                Speed::Zero
            } else if u < p + (1.0 - p) / 2.0 {
                Speed::MinusOne
            } else {
                Speed::PlusOne
            }
        })
        .collect()
}

pub fn random_config(rng: &mut ChaCha8Rng) -> Configuration {
    let len = rng.gen_range(1..=MAX_FUZZ_LEN);
    let p = rng.gen::<f64>();
    Configuration::new(random_speeds(rng, len, p)).expect("non-empty")
}

/// Every event is a legal two- or three-body collision at a point both
/// trajectories pass through, and its participants were adjacent survivors.
pub fn check_cardinality(c: &Configuration) -> Result<(), String> {
    let out = run_ba(c);
    for e in out.events() {
        let speeds: Vec<i8> = e.participants.iter().map(|&i| c.speed(i).value()).collect();
        let legal = matches!(speeds.as_slice(), [1, 0] | [1, -1] | [0, -1] | [1, 0, -1]);
        if !legal {
            return Err(format!("{c}: illegal collision {e} with speeds {speeds:?}"));
        }
        for &i in &e.participants {
            let at = 2 * i as i64 + c.speed(i).value() as i64 * e.time2 as i64;
            if at != e.pos2 {
                return Err(format!("{c}: particle {i} is not at the site of {e}"));
            }
        }
        let (lo, hi) = (e.participants[0], *e.participants.last().unwrap());
        for k in lo + 1..hi {
            if e.participants.contains(&k) {
                continue;
            }
            let gone_earlier = out.event_of(k).is_some_and(|f| f.time2 < e.time2);
            if !gone_earlier {
                return Err(format!("{c}: particle {k} sits between the participants of {e}"));
            }
        }
    }
    Ok(())
}

/// Each particle is either a survivor or in exactly one event, and the
/// survivors can never meet.
pub fn check_conservation(c: &Configuration) -> Result<(), String> {
    let out = run_ba(c);
    let mut seen = vec![0u32; c.len()];
    for e in out.events() {
        for &i in &e.participants {
            seen[i] += 1;
        }
    }
    for (i, (&n, x)) in seen.iter().zip(out.xi()).enumerate() {
        let ok = match x {
            Xi::Annihilated => n == 1,
            Xi::Survived(s) => n == 0 && *s == c.speed(i),
        };
        if !ok {
            return Err(format!("{c}: particle {i} has fate {x} but {n} events"));
        }
    }
    let survivors: Vec<i8> = out
        .xi()
        .iter()
        .filter_map(|x| match x {
            Xi::Survived(s) => Some(s.value()),
            Xi::Annihilated => None,
        })
        .collect();
    if survivors.windows(2).any(|w| w[0] > w[1]) {
        return Err(format!("{c}: survivors {survivors:?} would still collide"));
    }
    let total: usize = Speed::ALL.iter().map(|&s| out.surviving(s)).sum();
    let destroyed: usize = out.events().iter().map(|e| e.participants.len()).sum();
    if total + destroyed != c.len() {
        return Err(format!("{c}: {total} survivors and {destroyed} destroyed"));
    }
    if let Some(e) = out.events().iter().find(|e| e.time2 > 2 * (c.len() as u64 - 1)) {
        return Err(format!("{c}: event {e} after the last possible meeting time"));
    }
    Ok(())
}

/// Reflecting the line maps the dynamics onto itself.
pub fn check_mirror(c: &Configuration) -> Result<(), String> {
    let n = c.len();
    let out = run_ba(c);
    let mirrored = run_ba(&c.reflect());
    for i in 0..n {
        let a = out.xi()[i];
        let b = mirrored.xi()[n - 1 - i];
        let expect = match a {
            Xi::Survived(s) => Xi::Survived(s.negate()),
            Xi::Annihilated => Xi::Annihilated,
        };
        if b != expect {
            return Err(format!("{c}: fate {a} of {i} mirrors to {b}"));
        }
        let partners = |o: &ballistic::kinematics::SimOutcome, k: usize| {
            o.event_of(k).map(|e| (e.time2, e.participants.clone()))
        };
        let here = partners(&out, i).map(|(t, mut ps)| {
            ps.iter_mut().for_each(|k| *k = n - 1 - *k);
            ps.sort_unstable();
            (t, ps)
        });
        if here != partners(&mirrored, n - 1 - i) {
            return Err(format!("{c}: event of {i} does not mirror"));
        }
    }
    Ok(())
}

/// The incremental sweep reproduces the event-driven simulation.
pub fn check_sweep(c: &Configuration) -> Result<(), String> {
    let a = run_ba(c);
    let b = Sweep::run(c).outcome();
    if a != b {
        return Err(format!("{c}: sweep and event simulation disagree"));
    }
    Ok(())
}

fn rewrite_after(rng: &mut ChaCha8Rng, c: &Configuration, cut: usize) -> Configuration {
    let mut speeds = c.speeds()[..=cut].to_vec();
    let extra = rng.gen_range(0..=MAX_FUZZ_LEN);
    let p = rng.gen::<f64>();
    speeds.extend(random_speeds(rng, extra, p));
    Configuration::new(speeds).expect("non-empty")
}

/// A particle destroyed by a `-1` particle at `j > i` keeps that fate under
/// any rewrite of the speeds beyond `j`, and a `+1` particle absorbed by an
/// inert particle at `j` keeps it under rewrites beyond `2j - i`.
pub fn check_locality(rng: &mut ChaCha8Rng, c: &Configuration) -> Result<(), String> {
    let out = run_ba(c);
    for i in 0..c.len() {
        let Some(j) = out.destroyer_of(i) else { continue };
        if j < i {
            continue;
        }
        let cut = match c.speed(j) {
            Speed::MinusOne => j,
            Speed::Zero => 2 * j - i,
            Speed::PlusOne => unreachable!("a +1 particle never destroys a particle to its left"),
        };
        if cut >= c.len() {
            continue;
        }
        let other = rewrite_after(rng, c, cut);
        let again = run_ba(&other);
        if again.event_of(i) != out.event_of(i) {
            return Err(format!(
                "{c}: fate of {i} (destroyed by {j}) changes to {:?} in {other}",
                again.event_of(i)
            ));
        }
    }
    Ok(())
}

pub fn check_configuration(rng: &mut ChaCha8Rng, c: &Configuration) -> Result<(), String> {
    check_cardinality(c)?;
    check_conservation(c)?;
    check_mirror(c)?;
    check_sweep(c)?;
    check_locality(rng, c)
}

pub fn fuzz_configurations(count: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let c = random_config(&mut rng);
        check_configuration(&mut rng, &c)?;
    }
    Ok(())
}

/// Speeds fixed up to `cut`, then read from an unrelated stream. Records the
/// largest index requested.
pub struct Spliced<'a> {
    pub prefix: &'a [Speed],
    pub cut: usize,
    pub tail: LazyConfiguration,
    pub max_index: usize,
}

impl SpeedSource for Spliced<'_> {
    fn speed(&mut self, index: usize) -> Speed {
        self.max_index = self.max_index.max(index);
        if index <= self.cut {
            self.prefix[index]
        } else {
            self.tail.speed(index)
        }
    }
}

/// Only inert particles survive on `[0, eta]`, `z` counts them, and the
/// seed is among them unless `a_1` destroyed it.
pub fn check_window(prefix: &[Speed], s: &RenewalSample) -> Result<(), String> {
    let eta = s.eta.expect("renewed");
    let c = Configuration::new(prefix[..=eta].to_vec()).expect("non-empty");
    let out = run_ba(&c);
    if let Some(i) = out
        .xi()
        .iter()
        .position(|x| !matches!(x, Xi::Annihilated | Xi::Survived(Speed::Zero)))
    {
        return Err(format!("{c}: active particle {i} survives up to the renewal index"));
    }
    if eta > 1 && !out.survives(0) {
        return Err(format!("{c}: the seed is destroyed inside its own window"));
    }
    if out.surviving(Speed::Zero) as u32 != s.z {
        return Err(format!("{c}: z = {} but {} inert survivors", s.z, out.surviving(Speed::Zero)));
    }
    Ok(())
}

pub struct RenewalTally {
    pub renewed: usize,
    pub censored: usize,
}

/// Draws renewal samples over a spread of densities, re-verifies each window,
/// and checks that rewriting every speed past the renewal index changes
/// nothing about the sample.
pub fn fuzz_renewals(count: usize, seed: u64, horizon: usize) -> Result<RenewalTally, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = RenewalTally { renewed: 0, censored: 0 };
    for r in 0..count as u64 {
        let p = rng.gen_range(0.05..0.95);
        let mut src = LazyConfiguration::new(seed, 2 * r, p);
        let s = sample_renewal(&mut src, horizon);
        let Some(eta) = s.eta else {
            if s.revealed_max < horizon {
                return Err(format!("censored at {} before the horizon {horizon}", s.revealed_max));
            }
            tally.censored += 1;
            continue;
        };
        tally.renewed += 1;
        let prefix = src.revealed().to_vec();
        if prefix.len() != eta + 1 {
            return Err(format!("seed {seed} stream {}: read {} speeds but eta = {eta}", 2 * r, prefix.len() - 1));
        }
        check_window(&prefix, &s)?;
        let tail_p = rng.gen_range(0.0..=1.0);
        let mut spliced = Spliced {
            prefix: &prefix,
            cut: eta,
            tail: LazyConfiguration::new(seed, 2 * r + 1, tail_p),
            max_index: 0,
        };
        let again = sample_renewal(&mut spliced, horizon);
        if again != s || spliced.max_index > eta {
            return Err(format!(
                "seed {seed} stream {}: rewrite beyond eta = {eta} changes {s:?} to {again:?}",
                2 * r
            ));
        }
    }
    Ok(tally)
}
