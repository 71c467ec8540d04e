// Copyright 2026 The qpdm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

mod common;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use proptest::prelude::*;
use qpdm::classical_baseline::{commutative_pow, sample_classical_key};
use qpdm::counting::{counting_distribution, CountingConfig, Schedule};
use qpdm::dataset::{
    exact_support, pad_to_power_of_two, rejoin, vertical_partition, Bits, ItemSet, Role, TransactionDatabase,
};
use qpdm::miner::{exact_mine, mine, ExactEstimator};
use qpdm::protocol::{make_key, reference_phase_oracle, setup_parties, KeyFamily, Oracle, Transcript};
use qpdm::qsim::{Register, RegisterLayout, SparseState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn db_strategy(max_rows: usize, k: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = TransactionDatabase> {
    k.prop_flat_map(move |k| {
        proptest::collection::vec(0..1u64 << k, 1..=max_rows).prop_map(move |rows| {
            let names = (1..=k).map(|i| format!("I{i}")).collect();
            TransactionDatabase::new(names, rows.into_iter().map(|v| Bits::new(v, k).unwrap()).collect()).unwrap()
        })
    })
}

fn itemset_strategy(k: usize) -> impl Strategy<Value = ItemSet> {
    (1..1u64 << k).prop_map(move |mask| ItemSet::new((0..k).filter(|i| mask >> i & 1 == 1).map(|i| i + 1)).unwrap())
}

fn db_and_itemset(max_rows: usize) -> impl Strategy<Value = (TransactionDatabase, ItemSet)> {
    db_strategy(max_rows, 2..=6).prop_flat_map(|db| {
        let k = db.n_items();
        (Just(db), itemset_strategy(k))
    })
}

fn swap_sides(db: &TransactionDatabase, split: usize) -> TransactionDatabase {
    let rows = db
        .rows()
        .iter()
        .map(|r| {
            let (left, right) = r.split_at(split);
            right.concat(&left)
        })
        .collect();
    TransactionDatabase::new(db.names().to_vec(), rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_then_rejoin_is_identity(db in db_strategy(16, 2..=6), split_seed in 0usize..100) {
        let split = 1 + split_seed % (db.n_items() - 1);
        let (alice, bob) = vertical_partition(&db, split).unwrap();
        prop_assert_eq!(alice.width() + bob.width(), db.n_items());
        prop_assert_eq!(rejoin(&alice, &bob).unwrap(), db.rows().to_vec());
    }

    #[test]
    fn support_ignores_row_order((db, z) in db_and_itemset(16), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..db.n_transactions()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled = db.permute_rows(&order).unwrap();
        prop_assert_eq!(exact_support(&db, &z).unwrap(), exact_support(&shuffled, &z).unwrap());
    }

    #[test]
    fn padding_keeps_support((db, z) in db_and_itemset(16)) {
        let padded = pad_to_power_of_two(&db);
        prop_assert!(padded.n_transactions().is_power_of_two());
        prop_assert_eq!(exact_support(&db, &z).unwrap(), exact_support(&padded, &z).unwrap());
    }

    #[test]
    fn support_is_antimonotone((db, z) in db_and_itemset(16)) {
        let supp = exact_support(&db, &z).unwrap().ratio();
        for sub in z.proper_subsets().into_iter().filter(|s| !s.is_empty()) {
            prop_assert!(exact_support(&db, &sub).unwrap().ratio() >= supp);
        }
    }

    #[test]
    fn keys_round_trip(n in 1usize..=8, family_index in 0usize..3, raw in any::<u64>(), j in any::<u64>()) {
        let family = KeyFamily::ALL[family_index];
        let key = make_key(family, raw % family.parameter_count(n), n).unwrap();
        let j = j & ((1 << n) - 1);
        prop_assert!(key.apply(j) < 1 << n);
        prop_assert_eq!(key.invert(key.apply(j)), j);
        prop_assert_eq!(key.apply(key.invert(j)), j);
    }

    #[test]
    fn gates_preserve_norm_and_invert(seed in any::<u64>(), width in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = RegisterLayout::new(width, 3, 1, 1).unwrap();
        let input = random_address_state(&mut rng, &layout, 0);
        let mut state = input.clone();
        state.apply_w(Register::Counting).unwrap();
        state.apply_w(Register::Address).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        state.apply_w(Register::Address).unwrap();
        state.apply_w(Register::Counting).unwrap();
        prop_assert!(state.max_deviation(&input) < 1e-12);

        let mut state = input.clone();
        state.apply_w(Register::Counting).unwrap();
        let before = state.clone();
        state.qft(Register::Counting).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        state.inverse_qft(Register::Counting).unwrap();
        prop_assert!(state.max_deviation(&before) < 1e-12);
    }

    #[test]
    fn grover_iteration_is_unitary((db, z) in db_and_itemset(16), seed in any::<u64>()) {
        let db = pad_to_power_of_two(&db);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut alice, mut bob) = setup_parties(&db, 1).unwrap();
        alice.resample_key(KeyFamily::ModularAdd, &mut rng);
        bob.resample_key(KeyFamily::ModularAdd, &mut rng);
        let layout = oracle_layout(&alice, &bob, &z, 0);
        let mut state = random_address_state(&mut rng, &layout, 0);
        let oracle = Oracle::new(&alice, &bob, &z).unwrap();
        for _ in 0..3 {
            oracle.grover(&mut state, &mut Transcript::new(), None).unwrap();
        }
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_matches_reference_on_padded_dbs((db, z) in db_and_itemset(16), split_seed in 0usize..100, key_seed in any::<u64>()) {
        let db = pad_to_power_of_two(&db);
        let split = 1 + split_seed % (db.n_items() - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(key_seed);
        let n = db.address_bits();
        let family = KeyFamily::ALL[(key_seed % 3) as usize];
        let key = make_key(family, key_seed % family.parameter_count(n), n).unwrap();
        let (alice, bob) = parties_with_bob_key(&db, split, key);
        let layout = oracle_layout(&alice, &bob, &z, 0);
        let input = random_address_state(&mut rng, &layout, 0);
        let signs = reference_phase_oracle(&db, &z, |j| key.apply(j)).unwrap();
        let mut state = input.clone();
        Oracle::new(&alice, &bob, &z).unwrap().apply(&mut state, &mut Transcript::new(), None).unwrap();
        for &(label, amp) in input.terms() {
            let j = layout.content(label, Register::Address) as usize;
            prop_assert_eq!(state.amplitude(label), amp * signs[j] as f64);
        }
    }

    #[test]
    fn classical_exponentiation_commutes(seed in any::<u64>(), x_raw in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = [11u64, 101, 257, 7919, 65537][(seed % 5) as usize];
        let (ka, kb) = (sample_classical_key(p, &mut rng).unwrap(), sample_classical_key(p, &mut rng).unwrap());
        let x = 1 + x_raw % (p - 1);
        let ab = commutative_pow(commutative_pow(x, &ka).unwrap(), &kb).unwrap();
        let ba = commutative_pow(commutative_pow(x, &kb).unwrap(), &ka).unwrap();
        prop_assert_eq!(ab, ba);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_apriori_matches_brute_force(db in db_strategy(16, 1..=6), s in 0.05f64..0.9, c in 0.05f64..1.0) {
        let mut estimator = ExactEstimator::new(&db);
        let report = mine(db.n_items(), s, c, &mut estimator).unwrap();
        let exact = exact_mine(&db, s, c).unwrap();
        prop_assert_eq!(report.itemsets(), exact.itemsets());
        prop_assert_eq!(report.rule_pairs(), exact.rule_pairs());
    }

    #[test]
    fn initiators_see_the_same_distribution((db, z) in db_and_itemset(8), split_seed in 0usize..100, p in 2usize..=4) {
        let db = pad_to_power_of_two(&db);
        let k = db.n_items();
        let split = 1 + split_seed % (k - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed as u64);
        let config = CountingConfig::new(p, 0.25).unwrap();

        let (mut alice, mut bob) = setup_parties(&db, split).unwrap();
        alice.resample_key(KeyFamily::BitFlip, &mut rng);
        bob.resample_key(KeyFamily::BitFlip, &mut rng);
        let by_alice = counting_distribution(Role::Alice, &alice, &bob, &z, &config, &mut Transcript::new()).unwrap();
        let by_bob = counting_distribution(Role::Bob, &alice, &bob, &z, &config, &mut Transcript::new()).unwrap();

        // Same data with the sides exchanged: Bob's items come first.
        let swapped = swap_sides(&db, split);
        let moved = ItemSet::new(z.items().iter().map(|&i| if i > split { i - split } else { i + k - split })).unwrap();
        let (mut alice2, mut bob2) = setup_parties(&swapped, k - split).unwrap();
        alice2.resample_key(KeyFamily::BitFlip, &mut rng);
        bob2.resample_key(KeyFamily::BitFlip, &mut rng);
        let mirrored = counting_distribution(Role::Bob, &alice2, &bob2, &moved, &config, &mut Transcript::new()).unwrap();

        for ((a, b), m) in by_alice.iter().zip(&by_bob).zip(&mirrored) {
            prop_assert!((a - b).abs() < 1e-12 && (a - m).abs() < 1e-12);
        }
    }

    #[test]
    fn schedules_give_identical_distributions((db, z) in db_and_itemset(8), p in 1usize..=4) {
        let db = pad_to_power_of_two(&db);
        let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
        let (mut alice, mut bob) = setup_parties(&db, 1).unwrap();
        alice.resample_key(KeyFamily::CyclicShift, &mut rng);
        bob.resample_key(KeyFamily::CyclicShift, &mut rng);
        let mut config = CountingConfig::new(p, 0.25).unwrap();
        config.schedule = Schedule::Circuit;
        let circuit = counting_distribution(Role::Alice, &alice, &bob, &z, &config, &mut Transcript::new()).unwrap();
        config.schedule = Schedule::PowerTable;
        let table = counting_distribution(Role::Alice, &alice, &bob, &z, &config, &mut Transcript::new()).unwrap();
        for (a, b) in circuit.iter().zip(&table) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn distribution_is_key_invariant_over_all_bitflip_keys() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..5 {
        let db = random_db(&mut rng, 8, 4);
        let z = ItemSet::new([2, 3]).unwrap();
        let config = CountingConfig::new(5, 0.25).unwrap();
        let dists: Vec<Vec<f64>> = (0..8)
            .map(|lambda| {
                let (alice, bob) = parties_with_bob_key(&db, 2, make_key(KeyFamily::BitFlip, lambda, 3).unwrap());
                counting_distribution(Role::Alice, &alice, &bob, &z, &config, &mut Transcript::new()).unwrap()
            })
            .collect();
        let worst = dists.iter().flat_map(|d| d.iter().zip(&dists[0]).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
        // The distributions agree up to summation-order rounding.
        assert!(worst < 1e-12, "{worst:e}");
    }
}

/// Matrix of the Grover iteration on the address register, column by column.
fn grover_matrix(db: &TransactionDatabase, z: &ItemSet, split: usize) -> DMatrix<f64> {
    let key = make_key(KeyFamily::BitFlip, 1, db.address_bits()).unwrap();
    let (alice, bob) = parties_with_bob_key(db, split, key);
    let layout = oracle_layout(&alice, &bob, z, 0);
    let size = db.n_transactions();
    let oracle = Oracle::new(&alice, &bob, z).unwrap();
    let mut g = DMatrix::zeros(size, size);
    for col in 0..size {
        let label = layout.with_content(0, Register::Address, col as u64);
        let mut state = SparseState::prepare_basis(&layout, label).unwrap();
        oracle.grover(&mut state, &mut Transcript::new(), None).unwrap();
        for &(l, a) in state.terms() {
            assert_eq!(a.im, 0.0);
            g[(layout.content(l, Register::Address) as usize, col)] = a.re;
        }
    }
    g
}

#[test]
fn grover_eigenphases_encode_the_marked_fraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut checked = 0;
    for n in 1..=4 {
        for _ in 0..6 {
            let db = random_db(&mut rng, 1 << n, 4);
            let z = ItemSet::new([1, 4]).unwrap();
            let t = (0..db.n_transactions()).filter(|&j| db.row_contains(j, &z)).count();
            if t == 0 || t == db.n_transactions() {
                continue;
            }
            let theta = (t as f64 / db.n_transactions() as f64).sqrt().asin();
            let eigenvalues = Schur::try_new(grover_matrix(&db, &z, 2), 1e-14, 10_000)
                .expect("Schur iteration converges")
                .complex_eigenvalues();
            for target in [Complex64::from_polar(1.0, 2.0 * theta), Complex64::from_polar(1.0, -2.0 * theta)] {
                assert!(
                    eigenvalues.iter().any(|e| (e - target).norm() < 1e-9),
                    "n={n} t={t}: e^(+-2i theta) missing from {eigenvalues:?}"
                );
            }
            assert!(eigenvalues.iter().all(|e| (e.norm() - 1.0).abs() < 1e-9));
            checked += 1;
        }
    }
    assert!(checked >= 10);
}
