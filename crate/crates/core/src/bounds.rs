//! Lower bounds on the expected offspring count `E Z` and the critical
//! probabilities they certify.
//!
//! With `q = (1-p)/2`:
//!
//! * `L0 = 2p` (only `X_1 = 0` counted),
//! * `L1 = 2p + q` (a `+1` at index 1 leaves at least the seed),
//! * `L2 = 2p + q m(p)`,
//! * `L3 = 2p + q (m(p) + b(p)/(1-b(p)) (m(p)-1))`.
//!
//! `E Z > 1` implies the seed survives with positive probability, so the
//! smallest `p` with `L > 1` is an upper bound on the critical probability.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::enumeration::{weight_powers, weighted, CountTables};
use crate::scalar::{is_unit_interval, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundLevel {
    L0,
    L1,
    L2,
    L3,
}

impl BoundLevel {
    pub const ALL: [BoundLevel; 4] = [BoundLevel::L0, BoundLevel::L1, BoundLevel::L2, BoundLevel::L3];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn needs_tables(self) -> bool {
        self >= BoundLevel::L2
    }
}

impl fmt::Display for BoundLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl FromStr for BoundLevel {
    type Err = BoundError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let t = t.strip_prefix(['L', 'l']).unwrap_or(t);
        match t {
            "0" => Ok(BoundLevel::L0),
            "1" => Ok(BoundLevel::L1),
            "2" => Ok(BoundLevel::L2),
            "3" => Ok(BoundLevel::L3),
            _ => Err(BoundError::UnknownLevel(s.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("unknown bound level {0:?} (expected 0, 1, 2 or 3)")]
    UnknownLevel(String),
    #[error("level {0} needs count tables")]
    NeedsTables(BoundLevel),
    #[error("p = {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("b(p) = {0} is not below 1; the tables are corrupt")]
    BNotBelowOne(f64),
    #[error("tolerance must be positive (got {0})")]
    BadTolerance(f64),
    #[error("the bound never exceeds 1 on the scan grid")]
    NoCrossing,
    #[error("the bound crosses 1 more than once on the scan grid (near {0:?})")]
    MultipleCrossings(Vec<f64>),
    #[error("invalid range: {0}")]
    BadRange(String),
}

fn check_p<T: Scalar>(p: &T) -> Result<(), BoundError> {
    if is_unit_interval(p) {
        Ok(())
    } else {
        Err(BoundError::OutOfRange(p.to_f64()))
    }
}

/// `m(p) = 1 + sum_n sum_{A_n} q_n(x) (Z_1(x) - 1)`, truncated at the table depth.
pub fn eval_m<T: Scalar>(tables: &CountTables, p: &T) -> T {
    let (pp, qp) = weight_powers(tables, p);
    let mut total = T::one();
    for level in tables.levels() {
        let free = 2 * level.n - 2;
        for (&(i, z1), count) in &level.an {
            if z1 > 1 {
                let gain = T::from_count(&(count * (z1 - 1)));
                total = total + gain * pp[i as usize].clone() * qp[free - i as usize].clone();
            }
        }
    }
    total
}

/// `b(p)`: probability of a configuration in some `A'_n`, `n <= depth`.
pub fn eval_b<T: Scalar>(tables: &CountTables, p: &T) -> Result<T, BoundError> {
    let (pp, qp) = weight_powers(tables, p);
    let b = tables.levels().iter().fold(T::zero(), |acc, level| {
        acc + weighted(level.aprime.iter().map(|(&i, c)| (i, c)), 2 * level.n - 2, &pp, &qp)
    });
    if b >= T::one() {
        return Err(BoundError::BNotBelowOne(b.to_f64()));
    }
    Ok(b)
}

/// The lower bound on `E Z` at the given level.
pub fn bound<T: Scalar>(
    tables: Option<&CountTables>,
    p: &T,
    level: BoundLevel,
) -> Result<T, BoundError> {
    check_p(p)?;
    let two = T::from_ratio(2, 1);
    let base = two * p.clone();
    let q = T::active_weight(p);
    if level == BoundLevel::L0 {
        return Ok(base);
    }
    if level == BoundLevel::L1 {
        return Ok(base + q);
    }
    let tables = tables.ok_or(BoundError::NeedsTables(level))?;
    let m = eval_m(tables, p);
    if level == BoundLevel::L2 {
        return Ok(base + q * m);
    }
    let b = eval_b(tables, p)?;
    let boost = b.clone() / (T::one() - b) * (m.clone() - T::one());
    Ok(base + q * (m + boost))
}

/// Bound values sampled along a range of `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve<T> {
    pub level: BoundLevel,
    /// Table depth used; 0 for the levels that need no tables.
    pub depth: usize,
    pub samples: Vec<(T, T)>,
}

impl<T: Scalar> BoundCurve<T> {
    /// `steps + 1` evenly spaced points from `p0` to `p1` inclusive.
    pub fn sweep(
        tables: Option<&CountTables>,
        level: BoundLevel,
        p0: &T,
        p1: &T,
        steps: usize,
    ) -> Result<Self, BoundError> {
        check_p(p0)?;
        check_p(p1)?;
        if steps == 0 || p0 > p1 {
            return Err(BoundError::BadRange(format!(
                "need p0 <= p1 and at least one step (got {:?}:{:?}:{steps})",
                p0.to_f64(),
                p1.to_f64()
            )));
        }
        let width = (p1.clone() - p0.clone()) / T::from_ratio(steps as i64, 1);
        let mut samples = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let p = p0.clone() + width.clone() * T::from_ratio(k as i64, 1);
            let v = bound(tables, &p, level)?;
            samples.push((p, v));
        }
        let depth = if level.needs_tables() {
            tables.map_or(0, |t| t.depth())
        } else {
            0
        };
        Ok(BoundCurve {
            level,
            depth,
            samples,
        })
    }

    /// CSV with header `p,level,depth,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,level,depth,value\n");
        for (p, v) in &self.samples {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.to_f64(),
                self.level,
                self.depth,
                v.to_f64()
            ));
        }
        out
    }
}

/// Points of the coarse scan that precedes bisection.
pub const SCAN_POINTS: usize = 512;

/// Smallest `p` (to within `tol`) at which the bound exceeds 1.
///
/// The bound is scanned on a grid over `(0, 1)` first; a crossing that is
/// not unique on the grid is reported rather than bisected.
pub fn find_threshold(
    tables: Option<&CountTables>,
    level: BoundLevel,
    tol: f64,
) -> Result<f64, BoundError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(BoundError::BadTolerance(tol));
    }
    if level.needs_tables() && tables.is_none() {
        return Err(BoundError::NeedsTables(level));
    }
    let above = |p: f64| bound(tables, &p, level).map(|v| v > 1.0);
    let grid: Vec<f64> = (1..SCAN_POINTS).map(|k| k as f64 / SCAN_POINTS as f64).collect();
    let flags = grid.iter().map(|&p| above(p)).collect::<Result<Vec<_>, _>>()?;
    let switches: Vec<usize> = (1..flags.len()).filter(|&k| flags[k] != flags[k - 1]).collect();
    match switches.as_slice() {
        [] => Err(BoundError::NoCrossing),
        [k] if flags[*k] => {
            let (mut lo, mut hi) = (grid[k - 1], grid[*k]);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if above(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(hi)
        }
        _ => Err(BoundError::MultipleCrossings(
            switches.iter().map(|&k| grid[k]).collect(),
        )),
    }
}

/// Inert density after one time unit in the density-balance heuristic.
pub fn heuristic_w(p: f64) -> f64 {
    let q = (1.0 - p) / 2.0;
    p - 2.0 * p * q + p * q * q
}

/// Active density after one time unit in the density-balance heuristic.
pub fn heuristic_z(p: f64) -> f64 {
    let q = (1.0 - p) / 2.0;
    2.0 * (q - q * q - p * q)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root in `(0, 1/2)` of `w / (w + z) = 1/4`: the inert fraction after one
/// time unit equals the critical density.
pub fn heuristic_pc() -> f64 {
    bisect(
        |p| heuristic_w(p) / (heuristic_w(p) + heuristic_z(p)) - 0.25,
        0.0,
        0.5,
        1e-12,
    )
}

/// Root in `(0, 1/2)` of the literal equation `w = z / 4`.
pub fn heuristic_pc_literal() -> f64 {
    bisect(|p| heuristic_w(p) - heuristic_z(p) / 4.0, 0.0, 0.5, 1e-12)
}

/// Probability `p q^2` that three consecutive particles read `(1, 0, -1)`.
pub fn triple_collision_probability<T: Scalar>(p: &T) -> T {
    let q = T::active_weight(p);
    p.clone() * q.clone() * q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::enumerate_tables;
    use crate::Rational;

    fn rat(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    #[test]
    fn depth_two_closed_forms_are_exact() {
        let t = enumerate_tables(2, 1).unwrap();
        for p in [rat(1, 10), rat(1, 4), rat(2, 5)] {
            let q = Rational::active_weight(&p);
            assert_eq!(eval_m(&t, &p), rat(1, 1) + p.clone() * p.clone());
            assert_eq!(eval_b(&t, &p).unwrap(), p.clone() * q);
        }
    }

    #[test]
    fn simple_levels() {
        assert_eq!(bound(None, &rat(1, 3), BoundLevel::L1).unwrap(), rat(1, 1));
        assert_eq!(bound(None, &rat(1, 2), BoundLevel::L0).unwrap(), rat(1, 1));
        assert_eq!(bound(None, &0.3, BoundLevel::L2), Err(BoundError::NeedsTables(BoundLevel::L2)));
        assert_eq!(bound(None, &1.5, BoundLevel::L0), Err(BoundError::OutOfRange(1.5)));
    }

    #[test]
    fn table_free_thresholds() {
        let t0 = find_threshold(None, BoundLevel::L0, 1e-9).unwrap();
        let t1 = find_threshold(None, BoundLevel::L1, 1e-9).unwrap();
        assert!((t0 - 0.5).abs() < 1e-8, "{t0}");
        assert!((t1 - 1.0 / 3.0).abs() < 1e-8, "{t1}");
        assert!(t0 >= 0.5 && t1 > 1.0 / 3.0);
    }

    #[test]
    fn levels_are_ordered() {
        let t = enumerate_tables(7, 1).unwrap();
        for k in 1..100 {
            let p = k as f64 / 100.0;
            let v: Vec<f64> = BoundLevel::ALL.iter().map(|&l| bound(Some(&t), &p, l).unwrap()).collect();
            assert!(v.windows(2).all(|w| w[0] <= w[1] + 1e-15), "p={p}: {v:?}");
        }
    }

    #[test]
    fn thresholds_decrease_with_level_and_depth() {
        let deep = enumerate_tables(8, 1).unwrap();
        let mut last = 1.0;
        for d in 2..=8 {
            let t = deep.truncated(d);
            let t2 = find_threshold(Some(&t), BoundLevel::L2, 1e-7).unwrap();
            let t3 = find_threshold(Some(&t), BoundLevel::L3, 1e-7).unwrap();
            assert!(t3 <= t2 + 1e-7 && t2 < 1.0 / 3.0 && t2 <= last + 1e-7);
            last = t2;
        }
    }

    #[test]
    fn m_and_b_grow_with_depth() {
        let deep = enumerate_tables(8, 1).unwrap();
        for p in [0.05, 0.29, 0.6] {
            let ms: Vec<f64> = (2..=8).map(|d| eval_m(&deep.truncated(d), &p)).collect();
            let bs: Vec<f64> = (2..=8).map(|d| eval_b(&deep.truncated(d), &p).unwrap()).collect();
            assert!(ms.windows(2).all(|w| w[0] <= w[1]) && ms[0] >= 1.0);
            assert!(bs.windows(2).all(|w| w[0] <= w[1]) && bs[6] < 1.0);
        }
        assert!(eval_b(&deep, &1e-9).unwrap() < 1e-8);
    }

    #[test]
    fn exact_and_float_agree() {
        let t = enumerate_tables(6, 1).unwrap();
        let exact = bound(Some(&t), &rat(287, 1000), BoundLevel::L3).unwrap();
        let float = bound(Some(&t), &0.287, BoundLevel::L3).unwrap();
        assert!((exact.to_f64() - float).abs() < 1e-12);
    }

    #[test]
    fn sweep_csv() {
        let c = BoundCurve::sweep(None, BoundLevel::L1, &0.0, &1.0, 4).unwrap();
        assert_eq!(c.samples.len(), 5);
        assert_eq!(c.to_csv().lines().next(), Some("p,level,depth,value"));
        assert_eq!(c.to_csv().lines().nth(3), Some("0.5,1,0,1.25"));
        assert!(BoundCurve::sweep(None, BoundLevel::L1, &0.6, &0.2, 4).is_err());
    }

    #[test]
    fn heuristic_roots() {
        let pc = heuristic_pc();
        assert!((pc - 0.2450).abs() < 5e-4, "{pc}");
        let frac = heuristic_w(pc) / (heuristic_w(pc) + heuristic_z(pc));
        assert!((frac - 0.25).abs() < 1e-8);
        let lit = heuristic_pc_literal();
        assert!((lit - 0.2117).abs() < 1e-3, "{lit}");
        // w = p (1 - q)^2, so w(1/4) = (1/4)(5/8)^2.
        assert!((heuristic_w(0.25) - 25.0 / 64.0 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn triple_probability() {
        assert_eq!(triple_collision_probability(&rat(1, 4)), rat(9, 256));
        assert_eq!(triple_collision_probability(&0.0), 0.0);
        assert_eq!(triple_collision_probability(&1.0), 0.0);
    }

    #[test]
    fn level_parsing() {
        assert_eq!("2".parse::<BoundLevel>().unwrap(), BoundLevel::L2);
        assert_eq!("L3".parse::<BoundLevel>().unwrap(), BoundLevel::L3);
        assert!("4".parse::<BoundLevel>().is_err());
    }
}
