//! Exact count tables over the configurations in which the first `+1`
//! particle is destroyed at a given distance.
//!
//! For a configuration `x = (0, 1, x_2, ..., x_{2n-1})` write `I` for the
//! number of zeros among the free coordinates `x_2, ...`. The tables hold,
//! for every distance `n` up to the table depth:
//!
//! * `an[(I, z1)]`: configurations where `a_1` is destroyed by the inert
//!   particle `a_n` in a pure pair, with `z1` inert survivors on `[0, 2n-1]`;
//! * `aprime[I]`: the subset whose only surviving active particle is a `+1`
//!   at `2n-1`;
//! * `gamma_minus[I]`: configurations `(0, 1, x_2, ..., x_{n-1}, -1)` in
//!   which `a_1` is destroyed by `a_n` (possibly in a triple collision).
//!
//! A configuration of weight `I` over `m` free coordinates has probability
//! `p^I ((1-p)/2)^(m-I)`, so the tables evaluate any of these probabilities
//! at any `p`, in floating point or exactly.

mod io;
mod walk;

pub use io::{load_tables, save_tables, TableError, TABLE_VERSION};

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::kinematics::{run_ba, Configuration, Speed, Xi};
use crate::scalar::{powers, Scalar};

/// Largest supported depth; counts are accumulated in `u128`.
pub const MAX_DEPTH: usize = 40;

pub const GENERATOR: &str = concat!("ballistic-core ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumerationError {
    #[error("depth must be at least 2 (got {0})")]
    DepthTooSmall(usize),
    #[error("depth {0} exceeds the supported maximum of {MAX_DEPTH}")]
    DepthTooLarge(usize),
    #[error("expected a configuration 0,1,... of even length at least 4")]
    MalformedPrefix,
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

/// Counts for one destruction distance `n`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DistanceCounts {
    pub n: usize,
    /// `(I, z1) -> count`.
    pub an: BTreeMap<(u32, u32), BigUint>,
    /// `I -> count`.
    pub aprime: BTreeMap<u32, BigUint>,
    /// `I -> count`.
    pub gamma_minus: BTreeMap<u32, BigUint>,
}

impl DistanceCounts {
    fn empty(n: usize) -> Self {
        DistanceCounts {
            n,
            ..Default::default()
        }
    }

    /// Number of configurations in `A_n`.
    pub fn an_total(&self) -> BigUint {
        self.an.values().sum()
    }

    pub fn aprime_total(&self) -> BigUint {
        self.aprime.values().sum()
    }

    /// The `an` counts summed over `z1`, keyed by `I`.
    pub fn an_marginal(&self) -> BTreeMap<u32, BigUint> {
        let mut out: BTreeMap<u32, BigUint> = BTreeMap::new();
        for (&(i, _), c) in &self.an {
            *out.entry(i).or_default() += c;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TableMeta {
    pub generator: String,
    pub wall_time_secs: f64,
    /// Search nodes visited by the pruned enumerator (0 for the oracle).
    pub nodes: u64,
    /// `(prefix length, nodes)`; empty for the oracle and for loaded tables.
    pub nodes_by_length: Vec<(usize, u64)>,
}

/// Exact count tables up to some depth `N >= 2`.
#[derive(Debug, Clone)]
pub struct CountTables {
    depth: usize,
    levels: Vec<DistanceCounts>,
    pub meta: TableMeta,
}

impl PartialEq for CountTables {
    fn eq(&self, other: &Self) -> bool {
        self.depth == other.depth && self.levels == other.levels
    }
}

impl CountTables {
    pub fn new(levels: Vec<DistanceCounts>, meta: TableMeta) -> Result<Self, TableError> {
        let depth = levels.len() + 1;
        let tables = CountTables {
            depth,
            levels,
            meta,
        };
        tables.validate()?;
        Ok(tables)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Counts for distance `n`, `2 <= n <= depth`.
    pub fn level(&self, n: usize) -> &DistanceCounts {
        &self.levels[n - 2]
    }

    pub fn levels(&self) -> &[DistanceCounts] {
        &self.levels
    }

    /// The same tables cut down to a smaller depth.
    pub fn truncated(&self, depth: usize) -> CountTables {
        let depth = depth.clamp(2, self.depth);
        CountTables {
            depth,
            levels: self.levels[..depth - 1].to_vec(),
            meta: self.meta.clone(),
        }
    }

    /// Hex SHA-256 of the canonical serialized payload.
    pub fn checksum(&self) -> String {
        io::payload_checksum(self)
    }

    /// Checks the structural invariants of the tables.
    pub fn validate(&self) -> Result<(), TableError> {
        let bad = |msg: String| Err(TableError::Invalid(msg));
        if self.depth < 2 {
            return bad(format!("depth {} below 2", self.depth));
        }
        for (k, level) in self.levels.iter().enumerate() {
            let n = k + 2;
            if level.n != n {
                return bad(format!("level {k} is labelled n={} instead of {n}", level.n));
            }
            let n32 = n as u32;
            for &(i, z1) in level.an.keys() {
                if i > 2 * n32 - 2 || z1 < 1 || z1 > n32 {
                    return bad(format!("an key (I={i}, z1={z1}) out of range for n={n}"));
                }
            }
            for &i in level.gamma_minus.keys() {
                if i > n32 - 2 {
                    return bad(format!("gamma_minus key I={i} out of range for n={n}"));
                }
            }
            let marginal = level.an_marginal();
            for (i, c) in &level.aprime {
                if i > &(2 * n32 - 2) || marginal.get(i).is_none_or(|m| c > m) {
                    return bad(format!("aprime count at I={i} exceeds an for n={n}"));
                }
            }
            let cap = num_traits::pow(BigUint::from(3u32), 2 * n - 2);
            if level.an_total() > cap {
                return bad(format!("an total for n={n} exceeds 3^(2n-2)"));
            }
        }
        Ok(())
    }
}

/// Membership of a window configuration in `A_n` / `A'_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    NotInAn,
    /// In `A_n` but not in `A'_n`, with `z1` surviving inert particles.
    InAn { z1: u32 },
    /// In `A'_n` (and hence `A_n`).
    InAnPrime { z1: u32 },
}

impl Classification {
    pub fn is_in_an(&self) -> bool {
        !matches!(self, Classification::NotInAn)
    }

    pub fn is_in_aprime(&self) -> bool {
        matches!(self, Classification::InAnPrime { .. })
    }

    pub fn z1(&self) -> Option<u32> {
        match *self {
            Classification::NotInAn => None,
            Classification::InAn { z1 } | Classification::InAnPrime { z1 } => Some(z1),
        }
    }
}

/// Classifies a window `(0, 1, x_2, ..., x_{2n-1})` by running it to
/// completion.
pub fn classify(config: &Configuration) -> Result<Classification, EnumerationError> {
    let s = config.speeds();
    if s.len() < 4 || !s.len().is_multiple_of(2) || s[0] != Speed::Zero || s[1] != Speed::PlusOne {
        return Err(EnumerationError::MalformedPrefix);
    }
    let n = s.len() / 2;
    let out = run_ba(config);
    if s[n] != Speed::Zero || out.destroyer_of(1) != Some(n) {
        return Ok(Classification::NotInAn);
    }
    if out.event_of(1).is_some_and(|e| e.is_triple()) {
        return Ok(Classification::NotInAn);
    }
    let z1 = out.surviving(Speed::Zero) as u32;
    let xi = out.xi();
    let last = xi.len() - 1;
    let prime = xi[last] == Xi::Survived(Speed::PlusOne)
        && xi[..last]
            .iter()
            .all(|x| matches!(x, Xi::Annihilated | Xi::Survived(Speed::Zero)));
    Ok(if prime {
        Classification::InAnPrime { z1 }
    } else {
        Classification::InAn { z1 }
    })
}

fn check_depth(depth: usize) -> Result<(), EnumerationError> {
    if depth < 2 {
        return Err(EnumerationError::DepthTooSmall(depth));
    }
    if depth > MAX_DEPTH {
        return Err(EnumerationError::DepthTooLarge(depth));
    }
    Ok(())
}

/// Builds the tables with the pruned, factorized enumerator.
///
/// `threads = 0` uses one worker per logical core. The result does not
/// depend on the number of workers.
pub fn enumerate_tables(depth: usize, threads: usize) -> Result<CountTables, EnumerationError> {
    check_depth(depth)?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| EnumerationError::ThreadPool(e.to_string()))?;
    let raw = pool.install(|| walk::count(depth));
    let levels = (2..=depth).map(|n| raw.level(n)).collect();
    let meta = TableMeta {
        generator: GENERATOR.to_string(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        nodes: raw.nodes,
        nodes_by_length: raw.nodes_by_length.clone(),
    };
    Ok(CountTables::new(levels, meta).expect("enumerator produced invalid tables"))
}

fn suffixes(len: usize) -> impl Iterator<Item = Vec<Speed>> {
    let total = 3usize.pow(len as u32);
    (0..total).map(move |mut code| {
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            v.push(Speed::ALL[code % 3]);
            code /= 3;
        }
        v
    })
}

fn zeros(speeds: &[Speed]) -> u32 {
    speeds.iter().filter(|s| s.is_inert()).count() as u32
}

/// Reference tables: classify every configuration with [`run_ba`], with no
/// pruning. Exponential in `2 * depth`; only for small depths.
pub fn enumerate_naive(depth: usize) -> Result<CountTables, EnumerationError> {
    check_depth(depth)?;
    let start = Instant::now();
    let mut levels = Vec::new();
    for n in 2..=depth {
        let mut level = DistanceCounts::empty(n);
        for free in suffixes(2 * n - 2) {
            let i = zeros(&free);
            let mut speeds = vec![Speed::Zero, Speed::PlusOne];
            speeds.extend_from_slice(&free);
            let class = classify(&Configuration::new(speeds).expect("non-empty"))?;
            if let Some(z1) = class.z1() {
                *level.an.entry((i, z1)).or_default() += 1u32;
            }
            if class.is_in_aprime() {
                *level.aprime.entry(i).or_default() += 1u32;
            }
        }
        for free in suffixes(n - 2) {
            let mut speeds = vec![Speed::Zero, Speed::PlusOne];
            speeds.extend_from_slice(&free);
            speeds.push(Speed::MinusOne);
            let out = run_ba(&Configuration::new(speeds).expect("non-empty"));
            if out.destroyer_of(1) == Some(n) {
                *level.gamma_minus.entry(zeros(&free)).or_default() += 1u32;
            }
        }
        levels.push(level);
    }
    let meta = TableMeta {
        generator: format!("{GENERATOR} (oracle)"),
        wall_time_secs: start.elapsed().as_secs_f64(),
        nodes: 0,
        nodes_by_length: Vec::new(),
    };
    Ok(CountTables::new(levels, meta).expect("oracle produced invalid tables"))
}

/// `sum_I count_I * p^I * q^(free - I)` over one table row.
pub(crate) fn weighted<'a, T: Scalar>(
    rows: impl Iterator<Item = (u32, &'a BigUint)>,
    free: usize,
    ppow: &[T],
    qpow: &[T],
) -> T {
    rows.fold(T::zero(), |acc, (i, c)| {
        if c.is_zero() {
            return acc;
        }
        let i = i as usize;
        acc + T::from_count(c) * ppow[i].clone() * qpow[free - i].clone()
    })
}

/// Powers of `p` and `q = (1-p)/2` large enough for these tables.
pub(crate) fn weight_powers<T: Scalar>(tables: &CountTables, p: &T) -> (Vec<T>, Vec<T>) {
    let max = 2 * tables.depth();
    (powers(p, max), powers(&T::active_weight(p), max))
}

/// `P(gamma_1 <= depth)` given `X_1 = +1`.
pub fn gamma_tail<T: Scalar>(tables: &CountTables, p: &T) -> T {
    let (pp, qp) = weight_powers(tables, p);
    tables.levels().iter().fold(T::zero(), |acc, level| {
        let n = level.n;
        let minus = weighted(level.gamma_minus.iter().map(|(&i, c)| (i, c)), n - 1, &pp, &qp);
        let inert = weighted(level.an.iter().map(|(&(i, _), c)| (i, c)), 2 * n - 2, &pp, &qp);
        acc + minus + inert
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn big(n: u32) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn classify_examples() {
        let c = |v: &[i64]| classify(&Configuration::from_values(v)).unwrap();
        assert_eq!(c(&[0, 1, 0, 0]), Classification::InAn { z1: 2 });
        assert_eq!(c(&[0, 1, 0, 1]), Classification::InAnPrime { z1: 1 });
        assert_eq!(c(&[0, 1, 0, -1]), Classification::NotInAn);
        assert_eq!(c(&[0, 1, -1, 0]), Classification::NotInAn);
    }

    #[test]
    fn classify_figure_window() {
        let figure = [0, 1, 1, 0, 0, -1, 1, 0, -1, 0, 0, 1, 1, 1, 0, 0, 0, 1];
        let out = run_ba(&Configuration::from_values(&figure));
        let rights: Vec<usize> = (0..figure.len())
            .filter(|&i| out.xi()[i] == Xi::Survived(Speed::PlusOne))
            .collect();
        assert_eq!(rights, vec![17]);
        let class = classify(&Configuration::from_values(&figure)).unwrap();
        assert_eq!(class, Classification::InAnPrime { z1: 2 });
        assert!(class.is_in_an());
    }

    #[test]
    fn classify_rejects_malformed_prefix() {
        for v in [&[1, 1, 0, 0][..], &[0, 0, 0, 0], &[0, 1, 0], &[0, 1]] {
            assert_eq!(
                classify(&Configuration::from_values(v)),
                Err(EnumerationError::MalformedPrefix)
            );
        }
    }

    #[test]
    fn depth_two_by_hand() {
        let t = enumerate_tables(2, 1).unwrap();
        let l = t.level(2);
        assert_eq!(l.an, BTreeMap::from([((2, 2), big(1)), ((1, 1), big(1))]));
        assert_eq!(l.aprime, BTreeMap::from([(1, big(1))]));
        assert_eq!(l.gamma_minus, BTreeMap::from([(0, big(1))]));
        assert_eq!(t, enumerate_naive(2).unwrap());
    }

    #[test]
    fn pruned_matches_oracle_through_depth_six() {
        let pruned = enumerate_tables(6, 1).unwrap();
        let naive = enumerate_naive(6).unwrap();
        for n in 2..=6 {
            assert_eq!(pruned.level(n), naive.level(n), "n = {n}");
        }
    }

    #[test]
    fn depth_bounds() {
        assert_eq!(enumerate_tables(1, 1).unwrap_err(), EnumerationError::DepthTooSmall(1));
        assert_eq!(
            enumerate_tables(MAX_DEPTH + 1, 1).unwrap_err(),
            EnumerationError::DepthTooLarge(MAX_DEPTH + 1)
        );
    }

    #[test]
    fn gamma_tail_depth_two_is_q_plus_p2_plus_pq() {
        let t = enumerate_tables(2, 1).unwrap();
        for (a, b) in [(1, 10), (1, 4), (2, 5)] {
            let p = Rational::new(a.into(), b.into());
            let q = Rational::active_weight(&p);
            assert_eq!(gamma_tail(&t, &p), q.clone() + p.clone() * p.clone() + p * q);
        }
    }

    #[test]
    fn gamma_tail_is_monotone_in_depth() {
        let t = enumerate_tables(8, 1).unwrap();
        for p in [0.1, 0.287, 0.5, 0.9] {
            let tails: Vec<f64> = (2..=8).map(|d| gamma_tail(&t.truncated(d), &p)).collect();
            assert!(tails.windows(2).all(|w| w[0] <= w[1]), "{tails:?}");
            assert!(tails.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn validate_catches_bad_keys() {
        let mut t = enumerate_tables(3, 1).unwrap();
        t.levels[0].an.insert((0, 0), big(1));
        assert!(t.validate().is_err());
        let mut t = enumerate_tables(3, 1).unwrap();
        t.levels[1].aprime.insert(0, big(99));
        assert!(t.validate().is_err());
    }
}
