mod common;

use common::*;
use igdetect::{KernelConfig, ParallelCpuBackend, ReferenceBackend};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn running_example_oracle_values() {
    let o = oracle_outcome(&running_attack(), &running_normal(), &running_probes());
    assert_eq!(o.candidates_attack.len(), 6);
    assert_eq!(o.pure_attack.len(), 5);
    assert_eq!(o.pure_normal.len(), 3);
    assert!(!o.pure_attack.contains_key(&(A | B)));
    assert_eq!(o.pure_attack[&(A | C)], (2, 8));
    assert_eq!(o.pure_attack[&(A | B | C)], (1, 9));
    assert_eq!(o.pure_normal[&E], (2, 2));
    assert_eq!(o.pure_attack.values().map(|v| v.1).sum::<i64>(), 43);
    assert_eq!(o.abnormal, vec![25, 0, 0]);
    assert_eq!(o.normal, vec![11, 11, 0]);
}

#[test]
fn running_example_library_matches_oracle() {
    let (a, n, t) = (running_attack(), running_normal(), running_probes());
    let want = oracle_outcome(&a, &n, &t);
    let cfg = KernelConfig::default();
    assert_eq!(library_outcome(&a, &n, &t, 5, &ReferenceBackend, &cfg).unwrap(), want);
    let par = ParallelCpuBackend::new(2).unwrap();
    assert_eq!(library_outcome(&a, &n, &t, 5, &par, &cfg).unwrap(), want);
}

#[test]
fn duplicate_and_empty_rows() {
    let attack = vec![A | B, A | B, 0, A | B | C];
    let normal = vec![C | D, 0];
    let probes = vec![0, A | B | C | D, C];
    let want = oracle_outcome(&attack, &normal, &probes);
    assert_eq!(want.candidates_attack.len(), 2);
    assert_eq!(want.candidates_attack[&(A | B)], (3, 12));
    let got = library_outcome(&attack, &normal, &probes, 4, &ReferenceBackend, &KernelConfig::default()).unwrap();
    assert_eq!(got, want);
}

#[test]
fn words_beyond_the_first() {
    // bits on both sides of the 64-bit boundary
    let hi = |b: u32| 1u128 << b;
    let attack = vec![hi(1) | hi(63) | hi(64), hi(63) | hi(64) | hi(90), hi(1) | hi(90)];
    let normal = vec![hi(64) | hi(2), hi(2) | hi(95)];
    let probes = vec![hi(1) | hi(63) | hi(64) | hi(90), hi(2) | hi(64) | hi(95)];
    let want = oracle_outcome(&attack, &normal, &probes);
    let cfg = KernelConfig { pair_batch: 1, ..Default::default() };
    let par = ParallelCpuBackend::new(3).unwrap();
    assert_eq!(library_outcome(&attack, &normal, &probes, 96, &par, &cfg).unwrap(), want);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_datasets_match_oracle(
        seed in any::<u64>(),
        n_attack in 1usize..40,
        n_normal in 1usize..40,
        len in 1usize..=96,
        density in 0.05f64..0.7,
        pair_batch in 1usize..16,
        coverage_block in 1usize..16,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let attack = random_masks(&mut rng, n_attack, len, density);
        let normal = random_masks(&mut rng, n_normal, len, density);
        let probes = random_masks(&mut rng, 20, len, density);
        let want = oracle_outcome(&attack, &normal, &probes);
        let cfg = KernelConfig { pair_batch, coverage_block, ..Default::default() };
        let got = library_outcome(&attack, &normal, &probes, len, &ReferenceBackend, &cfg).unwrap();
        prop_assert_eq!(&got, &want);
        let par = ParallelCpuBackend::new(2).unwrap();
        let got = library_outcome(&attack, &normal, &probes, len, &par, &cfg).unwrap();
        prop_assert_eq!(&got, &want);
    }
}
