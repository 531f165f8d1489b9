mod common;

use asc_core::hangover::{hangover, HangoverParams, HangoverStream};
use common::reference_hangover as reference;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_stream(rng: &mut ChaCha8Rng, len: usize) -> Vec<bool> {
    let density = [0.02, 0.1, 0.3, 0.5, 0.8][rng.gen_range(0..5)];
    (0..len).map(|_| rng.gen_bool(density)).collect()
}

#[test]
fn matches_reference_on_random_streams() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..10_000 {
        let x = [1, 3, 5][rng.gen_range(0..3)];
        let k = rng.gen_range(x..=200);
        let input = random_stream(&mut rng, 2000);
        let got = hangover(&input, &HangoverParams::new(x, k).unwrap()).unwrap();
        let want = reference(&input, x, k);
        assert_eq!(got, want, "case {case}: X={x} k={k}");
    }
}

#[test]
fn matches_reference_on_short_streams() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5000 {
        let x = [1, 3, 5, 7][rng.gen_range(0..4)];
        let k = rng.gen_range(x..=12);
        let len = rng.gen_range(0..30);
        let input = random_stream(&mut rng, len);
        let got = hangover(&input, &HangoverParams::new(x, k).unwrap()).unwrap();
        assert_eq!(got, reference(&input, x, k), "X={x} k={k} {input:?}");
    }
}

#[test]
fn default_parameters_on_ten_minute_stream() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let input = random_stream(&mut rng, 60_001);
    let p = HangoverParams::default();
    let got = hangover(&input, &p).unwrap();
    assert_eq!(got.len(), 60_001);
    assert_eq!(got, reference(&input, p.buffer, p.extension));
}

#[test]
fn streaming_emissions_are_final() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let x = [1, 3, 5][rng.gen_range(0..3)];
        let k = rng.gen_range(x..=60);
        let input = random_stream(&mut rng, 700);
        let want = reference(&input, x, k);
        let mut s = HangoverStream::new(HangoverParams::new(x, k).unwrap()).unwrap();
        let mut got = Vec::new();
        for (i, &b) in input.iter().enumerate() {
            got.extend(s.push(b));
            // everything emitted so far already equals the batch result
            assert_eq!(&got[..], &want[..got.len()], "after input {i}");
        }
        got.extend(s.finish());
        assert_eq!(got, want);
    }
}

/// Streams in which no window of `x` ever holds a majority of ones.
fn sparse_stream(x: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(0usize..6, 0..60).prop_map(move |gaps| {
        let mut v = Vec::new();
        for g in gaps {
            v.extend(std::iter::repeat(false).take(x + g));
            v.push(true);
        }
        v
    })
}

proptest! {
    #[test]
    fn no_majority_means_identity(
        x in prop::sample::select(vec![3usize, 5, 7]),
        extra in 0usize..50,
        input in sparse_stream(7),
    ) {
        let out = hangover(&input, &HangoverParams::new(x, x + extra).unwrap()).unwrap();
        prop_assert_eq!(out, input);
    }

    #[test]
    fn short_burst_is_extended(
        x in prop::sample::select(vec![1usize, 3, 5]),
        extra in 0usize..150,
        lead in 0usize..40,
        burst_extra in 0usize..3,
    ) {
        let k = x + extra;
        let burst = (x + 1) / 2 + burst_extra;
        let s = x + lead;
        let len = s + burst + k + 2 * x + 10;
        let mut input = vec![false; len];
        input[s..s + burst].iter_mut().for_each(|b| *b = true);
        let out = hangover(&input, &HangoverParams::new(x, k).unwrap()).unwrap();
        // a run of at least k ones that starts no later than the burst
        let start = s - (x - 1) / 2;
        prop_assert!(out[start..start + k].iter().all(|&b| b), "{:?}", out);
        prop_assert!(out[..start].iter().all(|&b| !b));
        prop_assert_eq!(out.len(), input.len());
    }

    #[test]
    fn output_length_always_matches(
        x in prop::sample::select(vec![1usize, 3, 5]),
        extra in 0usize..30,
        input in prop::collection::vec(any::<bool>(), 0..300),
    ) {
        let out = hangover(&input, &HangoverParams::new(x, x + extra).unwrap()).unwrap();
        prop_assert_eq!(out.len(), input.len());
    }
}
