//! Monte-Carlo cross-checks of the count tables and finite-window estimates
//! of seed survival.
//!
//! Every repetition `r` reads stream `r` of the given seed, and totals are
//! integer sums, so results do not depend on how work is scheduled.

use rayon::prelude::*;
use serde::Serialize;

use crate::enumeration::{classify, weight_powers, CountTables};
use crate::kinematics::{Configuration, Entry, Profile, Speed};
use crate::renewal::{LazyConfiguration, SpeedSource};
use crate::scalar::Scalar;

/// Empirical against exact values of `P(A_n)` and `E[1{A_n} (Z_1 - 1)]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableCheck {
    pub n: usize,
    pub p: f64,
    pub reps: u64,
    pub seed: u64,
    pub p_an_exact: f64,
    /// `None` when `reps = 0`.
    pub p_an_mc: Option<f64>,
    /// Discrepancy in standard errors.
    pub p_an_sigma: Option<f64>,
    pub gain_exact: f64,
    pub gain_mc: Option<f64>,
    pub gain_sigma: Option<f64>,
}

impl TableCheck {
    /// Largest absolute discrepancy in standard errors (0 without samples).
    pub fn max_sigma(&self) -> f64 {
        [self.p_an_sigma, self.gain_sigma]
            .into_iter()
            .flatten()
            .fold(0.0, |a, s| a.max(s.abs()))
    }
}

#[derive(Default, Clone, Copy)]
struct Hits {
    an: u64,
    gain: u64,
    gain2: u64,
}

fn sigma(mc: f64, exact: f64, var: f64, reps: u64) -> f64 {
    let se = (var / reps as f64).sqrt();
    if se > 0.0 {
        (mc - exact) / se
    } else if (mc - exact).abs() < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Samples `reps` windows `(0, 1, x_2, ..., x_{2n-1})`, classifies each, and
/// compares against the exact table values at `p`.
pub fn mc_check_tables(tables: &CountTables, p: f64, n: usize, reps: u64, seed: u64) -> TableCheck {
    assert!(
        (2..=tables.depth()).contains(&n),
        "n = {n} outside the table range 2..={}",
        tables.depth()
    );
    let (pp, qp) = weight_powers(tables, &p);
    let free = 2 * n - 2;
    let (mut prob, mut gain, mut gain2) = (0.0, 0.0, 0.0);
    for (&(i, z1), c) in &tables.level(n).an {
        let w = f64::from_count(c) * pp[i as usize] * qp[free - i as usize];
        let g = (z1 - 1) as f64;
        prob += w;
        gain += w * g;
        gain2 += w * g * g;
    }
    let mut check = TableCheck {
        n,
        p,
        reps,
        seed,
        p_an_exact: prob,
        p_an_mc: None,
        p_an_sigma: None,
        gain_exact: gain,
        gain_mc: None,
        gain_sigma: None,
    };
    if reps == 0 {
        return check;
    }
    let hits = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut src = LazyConfiguration::new(seed, r, p);
            let mut speeds = vec![Speed::Zero, Speed::PlusOne];
            speeds.extend((2..2 * n).map(|i| src.speed(i)));
            let class = classify(&Configuration::new(speeds).expect("non-empty"))
                .expect("window has the required prefix");
            match class.z1() {
                Some(z1) => {
                    let g = (z1 - 1) as u64;
                    Hits { an: 1, gain: g, gain2: g * g }
                }
                None => Hits::default(),
            }
        })
        .reduce(Hits::default, |a, b| Hits {
            an: a.an + b.an,
            gain: a.gain + b.gain,
            gain2: a.gain2 + b.gain2,
        });
    let total = reps as f64;
    let p_mc = hits.an as f64 / total;
    let g_mc = hits.gain as f64 / total;
    check.p_an_mc = Some(p_mc);
    check.p_an_sigma = Some(sigma(p_mc, prob, prob * (1.0 - prob), reps));
    check.gain_mc = Some(g_mc);
    check.gain_sigma = Some(sigma(g_mc, gain, gain2 - gain * gain, reps));
    check
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub p: f64,
    pub window: usize,
    pub reps: u64,
    pub seed: u64,
    /// Fraction of runs in which the seed survives on `[0, window]`.
    pub fraction: f64,
    pub ci_halfwidth: f64,
}

/// Fraction of random configurations of length `window + 1` in which the
/// seed survives. Survival on a finite window only gets harder as the
/// window grows, so this overestimates the survival probability.
pub fn mc_seed_survival(p: f64, window: usize, reps: u64, seed: u64) -> SurvivalEstimate {
    assert!(window >= 1, "window must be positive");
    let alive: u64 = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut src = LazyConfiguration::new(seed, r, p);
            let mut profile = Profile::new();
            profile.push(Speed::Zero);
            for i in 1..=window {
                profile.push(src.speed(i));
                if profile.entries().first() != Some(&Entry::Inert(0)) {
                    return 0;
                }
            }
            1
        })
        .sum();
    let (fraction, ci_halfwidth) = if reps == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let f = alive as f64 / reps as f64;
        (f, 1.96 * (f * (1.0 - f) / reps as f64).sqrt())
    };
    SurvivalEstimate {
        p,
        window,
        reps,
        seed,
        fraction,
        ci_halfwidth,
    }
}
