use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use nnlab_core::oscillation::{accumulation_interval, oscillation_report, theoretical_range, ReportOptions};
use nnlab_core::simplex::{periodic_orbit_vector, point_mass_vector};
use nnlab_core::synthesizer::{synthesize, Schedule, Stage};
use nnlab_core::words::{basic_period, Block, Word};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn stream_strategy() -> impl Strategy<Value = Word> {
    // mix periodic stretches with noise so both ends of the range show up
    (prop::collection::vec(1u64..=3, 1..=4), prop::collection::vec(1u64..=3, 0..=60), 100usize..=400).prop_map(
        |(seed, noise, len)| {
            let mut digits = noise;
            while digits.len() < len {
                digits.extend_from_slice(&seed);
            }
            digits.truncate(len);
            Word::new(digits).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn observed_interval_within_range(
        w in stream_strategy(), b in prop::collection::vec(1u64..=3, 1..=3), r in 0usize..=3, n0 in 3usize..60,
    ) {
        let block = Block::new(b).unwrap();
        let e = accumulation_interval(&w, &block, r, n0, w.len()).unwrap();
        let (zero, top) = theoretical_range(&block);
        let slack = BigRational::new(BigInt::from(block.k() + basic_period(&block)), BigInt::from(n0));
        prop_assert!(e.lo >= zero && e.lo <= e.hi);
        prop_assert!(e.hi <= &top + &slack);
        // occurrences start at least p apart and no later than n - k, so
        // level 0 (and hence every level) never exceeds 1/p
        prop_assert!(e.hi <= top);
        prop_assert!(e.gap_bound_ok);
    }

    #[test]
    fn widening_the_window_widens_the_interval(
        w in stream_strategy(), d in 1u64..=3, r in 0usize..=2, a in 1usize..40, b in 0usize..40, c in 0usize..40,
    ) {
        let block = Block::new(vec![d]).unwrap();
        let n1 = w.len() - c;
        prop_assume!(a + b + 1 < n1);
        let narrow = accumulation_interval(&w, &block, r, a + b, n1).unwrap();
        let wide = accumulation_interval(&w, &block, r, a, w.len()).unwrap();
        prop_assert!(wide.lo <= narrow.lo && wide.hi >= narrow.hi);
    }
}

#[test]
fn periodic_continuation_keeps_the_range() {
    let mut blocks: Vec<Vec<u64>> = vec![vec![]];
    for _ in 0..5 {
        blocks = blocks.into_iter().flat_map(|b| (1..=3).map(move |d| [b.clone(), vec![d]].concat())).collect();
        for b in &blocks {
            let block = Block::new(b.clone()).unwrap();
            let p = basic_period(&block);
            let continued = Block::new([b.clone(), b[b.len() - p..].to_vec()].concat()).unwrap();
            assert_eq!(theoretical_range(&block), theoretical_range(&continued), "{block}");
        }
    }
}

#[test]
fn alternating_schedule_reaches_both_ends() {
    let h = 10;
    let b = Block::new(vec![1]).unwrap();
    let schedule = Schedule::new(
        20_000,
        vec![
            Stage::new(point_mass_vector(2, 1).unwrap(), 1, 1, h),
            Stage::new(periodic_orbit_vector(&b, 1).unwrap(), 1, 1, h),
            Stage::new(point_mass_vector(2, 1).unwrap(), 1, 1, h),
        ],
    );
    let synthesis = synthesize(&schedule).unwrap();
    let eps = rat(1, h as i64);
    let (_, top) = theoretical_range(&b);
    for verdict in &synthesis.verdicts {
        let w = verdict.witness().expect("every stage is witnessed");
        let e = accumulation_interval(&synthesis.stream, &b, 0, w.j as usize, w.window_end).unwrap();
        if w.stage % 2 == 0 {
            assert!(e.hi <= eps, "stage {}: frequency of 1 reaches {}", w.stage, e.hi);
        } else {
            assert!(e.lo >= &top - &eps, "stage {}: frequency of 1 drops to {}", w.stage, e.lo);
        }
    }
    let report = oscillation_report(&synthesis.stream, &[b], 0, &ReportOptions::for_epsilon(&eps).window(1, 20_000))
        .unwrap();
    assert!(report.realized, "{report:?}");
}
