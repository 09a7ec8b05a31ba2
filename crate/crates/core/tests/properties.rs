mod support;

use ballistic::enumeration::{classify, enumerate_tables, Classification};
use ballistic::kinematics::{run_ba, Configuration, Speed};
use ballistic::renewal::{sample_renewal, LazyConfiguration};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn speed() -> impl Strategy<Value = Speed> {
    prop_oneof![Just(Speed::MinusOne), Just(Speed::Zero), Just(Speed::PlusOne)]
}

fn config(max_len: usize) -> impl Strategy<Value = Configuration> {
    prop::collection::vec(speed(), 1..=max_len).prop_map(|s| Configuration::new(s).unwrap())
}

proptest! {
    #[test]
    fn collisions_are_legal(c in config(40)) {
        support::check_cardinality(&c).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn particles_are_conserved(c in config(40)) {
        support::check_conservation(&c).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn reflection_is_a_symmetry(c in config(40)) {
        support::check_mirror(&c).map_err(TestCaseError::fail)?;
        prop_assert_eq!(c.reflect().reflect(), c);
    }

    #[test]
    fn sweep_matches_event_simulation(c in config(40)) {
        support::check_sweep(&c).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn fates_are_local(c in config(40), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        support::check_locality(&mut rng, &c).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn simulation_is_deterministic(c in config(40)) {
        prop_assert_eq!(run_ba(&c), run_ba(&c.clone()));
    }

    #[test]
    fn renewal_sample_is_reproducible(seed in any::<u64>(), stream in 0u64..1000, p in 0.0f64..=1.0) {
        let a = sample_renewal(&mut LazyConfiguration::new(seed, stream, p), 2000);
        let b = sample_renewal(&mut LazyConfiguration::new(seed, stream, p), 2000);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn hundred_thousand_fuzzed_configurations() {
    support::fuzz_configurations(100_000, 11).unwrap();
}

#[test]
fn ten_thousand_renewal_samples() {
    let tally = support::fuzz_renewals(10_000, 12, 10_000).unwrap();
    assert!(tally.renewed > 9_000, "{} renewed", tally.renewed);
}

#[test]
fn all_inert_suffix_renews_immediately() {
    let mut src = LazyConfiguration::new(1, 0, 1.0);
    let s = sample_renewal(&mut src, 100);
    assert_eq!((s.eta, s.z), (Some(1), 2));
}

#[test]
fn thread_count_does_not_change_tables() {
    let one = enumerate_tables(10, 1).unwrap();
    let many = enumerate_tables(10, 8).unwrap();
    assert_eq!(one, many);
    assert_eq!(one.checksum(), many.checksum());
}

#[test]
fn truncating_deeper_tables_matches_a_shallow_run() {
    let deep = enumerate_tables(9, 2).unwrap();
    assert_eq!(deep.truncated(6), enumerate_tables(6, 1).unwrap());
}

#[test]
fn every_counted_window_classifies_as_counted() {
    // Depth 5 by brute force over all windows of distance 4.
    let tables = enumerate_tables(5, 1).unwrap();
    let n = 4;
    let free = 2 * n - 2;
    let mut an = 0u64;
    let mut aprime = 0u64;
    for code in 0..3u64.pow(free as u32) {
        let mut speeds = vec![Speed::Zero, Speed::PlusOne];
        let mut k = code;
        for _ in 0..free {
            speeds.push(Speed::ALL[(k % 3) as usize]);
            k /= 3;
        }
        match classify(&Configuration::new(speeds).unwrap()).unwrap() {
            Classification::InAnPrime { .. } => {
                an += 1;
                aprime += 1;
            }
            Classification::InAn { .. } => an += 1,
            Classification::NotInAn => {}
        }
    }
    let level = tables.level(n);
    assert_eq!(level.an_total(), an.into());
    assert_eq!(level.aprime_total(), aprime.into());
}
