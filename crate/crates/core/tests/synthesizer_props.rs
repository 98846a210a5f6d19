use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

use nnlab_core::simplex::{periodic_orbit_vector, point_mass_vector, SimplexVector};
use nnlab_core::synthesizer::{
    cesaro_lift_check, synthesize, verify_property_p, Schedule, Stage, StageVerdict, Witness,
};
use nnlab_core::wordfactory::eulerian_word;
use nnlab_core::words::{Block, Word};

fn orbit(b: &str, k: usize) -> SimplexVector {
    periodic_orbit_vector(&Block::parse(b).unwrap(), k).unwrap()
}

/// `sup` over `(j, hi]` of the level-0 distance to `q`, by direct counting.
fn brute_sup(stream: &[u64], q: &SimplexVector, j: usize, hi: usize) -> BigRational {
    let k = q.k();
    let mut counts: HashMap<Vec<u64>, i64> = HashMap::new();
    let mut sup = BigRational::zero();
    for n in 1..=hi {
        if n >= k {
            *counts.entry(stream[n - k..n].to_vec()).or_default() += 1;
        }
        if n <= j {
            continue;
        }
        let den = BigInt::from(n);
        let mut dist = BigRational::zero();
        let mut covered = 0i64;
        for (b, target) in q.entries() {
            let c = counts.get(b.digits()).copied().unwrap_or(0);
            covered += c;
            dist += (BigRational::new(c.into(), den.clone()) - target).abs();
        }
        let total: i64 = counts.values().sum();
        dist += BigRational::new((total - covered).into(), den);
        if dist > sup {
            sup = dist;
        }
    }
    sup
}

fn check_witness(stream: &Word, stage: &Stage, w: &Witness) {
    assert!(w.j >= stage.i);
    // j * 2^-j <= eps, cross-multiplied
    let lhs = BigInt::from(w.j) * BigInt::from(stage.h);
    assert!(lhs <= num_traits::pow(BigInt::from(2), w.j as usize), "j = {}", w.j);
    let sup = brute_sup(stream.digits(), &stage.q, w.j as usize, w.window_end);
    assert_eq!(sup, w.sup, "stage {}", w.stage);
    assert!(sup <= stage.epsilon());
}

fn corpus() -> Vec<Schedule> {
    let a = point_mass_vector(1, 1).unwrap();
    let b = orbit("12", 1);
    let mut explicit_end = Schedule::new(3000, vec![Stage::new(a.clone(), 1, 1, 4), Stage::new(b.clone(), 1, 1, 4)]);
    explicit_end.stages[0].end = Some(40);
    vec![
        Schedule::new(4000, vec![Stage::new(a.clone(), 1, 1, 4), Stage::new(b.clone(), 1, 1, 4)]),
        Schedule::new(
            20_000,
            vec![
                Stage::new(orbit("12", 2), 1, 1, 5),
                Stage::new(point_mass_vector(1, 2).unwrap(), 1, 3, 5),
                Stage::new(orbit("112", 2), 1, 1, 5),
            ],
        ),
        Schedule::new(10_000, vec![Stage::new(orbit("123", 3), 1, 20, 8)]),
        explicit_end,
    ]
}

#[test]
fn corpus_round_trips_with_independent_sups() {
    for schedule in corpus() {
        let synthesis = synthesize(&schedule).unwrap();
        assert_eq!(synthesis.stream.len(), schedule.max_length);
        let verdicts = verify_property_p(&synthesis.stream, &schedule, 0).unwrap();
        let mut prev_end = 0;
        for (stage, verdict) in schedule.stages.iter().zip(&verdicts) {
            let StageVerdict::Witnessed(w) = verdict else { panic!("{verdict:?}") };
            check_witness(&synthesis.stream, stage, w);
            // windows are disjoint and ordered
            assert!(w.j as usize >= prev_end, "window starts at {} before {}", w.j, prev_end);
            prev_end = w.window_end;
        }
        // synthesis additionally records padding data; the verified fields agree
        for (v, s) in verdicts.iter().zip(&synthesis.verdicts) {
            let (v, s) = (v.witness().unwrap(), s.witness().unwrap());
            assert_eq!((v.j, v.window_end, &v.sup), (s.j, s.window_end, &s.sup));
        }
    }
}

#[test]
fn foreign_stream_fails_verification() {
    let schedule = Schedule::new(2000, vec![Stage::new(point_mass_vector(2, 1).unwrap(), 1, 1, 4)]);
    let stream = Word::constant(1, 2000).unwrap();
    let verdicts = verify_property_p(&stream, &schedule, 0).unwrap();
    assert!(!verdicts[0].is_witnessed());
}

fn target_pool() -> Vec<SimplexVector> {
    vec![
        point_mass_vector(1, 1).unwrap(),
        orbit("12", 1),
        orbit("112", 1),
        orbit("12", 2),
        orbit("1123", 2),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Whenever the level-r precondition holds at eps/3 on (j', ...), level
    /// r+1 is within eps on (2^j', ...).
    #[test]
    fn lift_follows_from_its_precondition(
        prefix in prop::collection::vec(1u64..=3, 0..=6),
        idx in 0usize..5,
        h in 1u64..=2,
        j_prime in 3u64..=4,
        r in 0usize..=1,
        len in 200usize..=1500,
    ) {
        let q = target_pool()[idx].clone();
        let (cycle, _) = eulerian_word(&q).unwrap();
        let mut digits = prefix;
        while digits.len() < len {
            digits.extend_from_slice(cycle.digits());
        }
        digits.truncate(len);
        let stream = Word::new(digits).unwrap();
        let stage = Stage::new(q, 1, 1, h);
        let report = cesaro_lift_check(&stream, &stage, r, j_prime).unwrap();
        prop_assert!(!report.inconclusive);
        if report.precondition_met {
            prop_assert!(report.holds, "{:?}", report);
        }
    }
}

#[test]
fn lift_precondition_is_reachable() {
    // 2 then (12)^*: level 0 sits within 1/3 of (1/2, 1/2) from n = 4 on
    let mut digits = vec![2];
    digits.extend(std::iter::repeat_n([1, 2], 600).flatten());
    let stream = Word::new(digits).unwrap();
    let report = cesaro_lift_check(&stream, &Stage::new(orbit("12", 1), 1, 1, 1), 0, 4).unwrap();
    assert!(report.precondition_met && report.holds, "{report:?}");
}
