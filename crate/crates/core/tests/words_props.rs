use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

use nnlab_core::words::{basic_period, count_block, freq_vector, Block, Word};

fn word_strategy(max_len: usize, alphabet: u64) -> impl Strategy<Value = Word> {
    prop::collection::vec(1..=alphabet, 0..=max_len).prop_map(|d| Word::new(d).unwrap())
}

/// Starts among the first `n` positions whose block fits inside `w`.
fn naive_counts(w: &[u64], k: usize, n: usize) -> BTreeMap<Vec<u64>, u64> {
    let mut out = BTreeMap::new();
    for i in 0..n {
        if i + k <= w.len() {
            *out.entry(w[i..i + k].to_vec()).or_insert(0) += 1;
        }
    }
    out
}

/// Every word of length `len` over `{1..alphabet}`.
fn all_words(len: usize, alphabet: u64) -> Vec<Vec<u64>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|w| (1..=alphabet).map(move |d| [w.clone(), vec![d]].concat())).collect();
    }
    out
}

fn brute_period(b: &[u64]) -> usize {
    let len = b.len();
    (1..=len).find(|&p| (0..len - p).all(|j| b[j] == b[j + p])).unwrap()
}

proptest! {
    #[test]
    fn counts_stay_in_range(w in word_strategy(40, 3), k in 1usize..4, b in prop::collection::vec(1u64..=3, 1..4)) {
        prop_assume!(b.len() == k && w.len() >= k);
        let block = Block::new(b).unwrap();
        for n in k..=w.len() {
            // on the prefix of length n the block has n - k + 1 possible starts
            let prefix = w.prefix(n).unwrap();
            let c = count_block(&prefix, &block, n).unwrap();
            prop_assert!(c as usize <= n - k + 1);
            prop_assert!(count_block(&w, &block, n).unwrap() as usize <= n);
        }
    }

    #[test]
    fn mass_is_n_minus_k_plus_one_over_n(w in word_strategy(60, 4), k in 1usize..5) {
        prop_assume!(w.len() >= k);
        for n in k..=w.len() {
            let fv = freq_vector(&w.prefix(n).unwrap(), k, n).unwrap();
            prop_assert_eq!(fv.total(), BigRational::new(((n - k + 1) as i64).into(), (n as i64).into()));
        }
    }

    #[test]
    fn periodic_continuation_keeps_the_period(b in prop::collection::vec(1u64..=3, 1..=8)) {
        let k = b.len();
        let p = basic_period(&Block::new(b.clone()).unwrap());
        // continue b with its own period: append its last p digits
        let extended = [b.clone(), b[k - p..].to_vec()].concat();
        prop_assert_eq!(basic_period(&Block::new(extended.clone()).unwrap()), p);
        prop_assert_eq!(brute_period(&extended), p);
        // b b keeps it only when p divides |b|: 121 has period 2, 121121 period 3
        let doubled = [b.clone(), b.clone()].concat();
        prop_assert_eq!(basic_period(&Block::new(doubled.clone()).unwrap()), brute_period(&doubled));
        if k % p == 0 {
            prop_assert_eq!(brute_period(&doubled), p);
        }
    }
}

#[test]
fn period_matches_brute_force_exhaustively() {
    for len in 1..=8 {
        for b in all_words(len, 3) {
            assert_eq!(basic_period(&Block::new(b.clone()).unwrap()), brute_period(&b), "{b:?}");
        }
    }
}

#[test]
fn freq_vector_matches_naive_scan_exhaustively() {
    for len in 1..=12 {
        // every word up to length 8; a deterministic sample beyond that
        let words = if len <= 8 {
            all_words(len, 3)
        } else {
            all_words(8, 3).into_iter().step_by(7).map(|w| [w.clone(), w[..len - 8].to_vec()].concat()).collect()
        };
        for w in words {
            let word = Word::new(w.clone()).unwrap();
            for k in 1..=len.min(4) {
                for n in k..=len {
                    let fv = freq_vector(&word, k, n).unwrap();
                    let naive = naive_counts(&w, k, n);
                    assert_eq!(fv.len(), naive.len());
                    for (b, c) in naive {
                        let got = fv.get(&Block::new(b).unwrap()).cloned().unwrap_or_else(BigRational::zero);
                        assert_eq!(got, BigRational::new((c as i64).into(), (n as i64).into()));
                    }
                }
            }
        }
    }
}
