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

#![allow(dead_code)]

use num_complex::Complex64;
use qpdm::dataset::{Bits, ItemSet, TransactionDatabase};
use qpdm::protocol::{make_key, setup_parties, EncryptionKey, KeyFamily, Oracle, PartyState};
use qpdm::qsim::{Register, RegisterLayout, SparseState};
use rand::Rng;

pub fn random_db<R: Rng>(rng: &mut R, rows: usize, k: usize) -> TransactionDatabase {
    let names = (1..=k).map(|i| format!("I{i}")).collect();
    let rows = (0..rows).map(|_| Bits::new(rng.gen_range(0..1u64 << k), k).unwrap()).collect();
    TransactionDatabase::new(names, rows).unwrap()
}

/// Every key of every family on `n` address bits.
pub fn all_keys(n: usize) -> Vec<EncryptionKey> {
    KeyFamily::ALL.iter().flat_map(|&f| (0..f.parameter_count(n)).map(move |p| make_key(f, p, n).unwrap())).collect()
}

pub fn parties_with_bob_key(db: &TransactionDatabase, split: usize, key: EncryptionKey) -> (PartyState, PartyState) {
    let (alice, mut bob) = setup_parties(db, split).unwrap();
    bob.install_key(key).unwrap();
    (alice, bob)
}

/// All non-empty itemsets over `k` items.
pub fn all_itemsets(k: usize) -> Vec<ItemSet> {
    (1..1u64 << k).map(|mask| ItemSet::new((0..k).filter(|i| mask >> i & 1 == 1).map(|i| i + 1)).unwrap()).collect()
}

/// Random normalized amplitudes on the address register, everything else zero.
pub fn random_address_state<R: Rng>(rng: &mut R, layout: &RegisterLayout, base: u64) -> SparseState {
    let size = 1u64 << layout.width(Register::Address);
    let amps: Vec<Complex64> =
        (0..size).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    SparseState::from_terms(
        layout,
        amps.iter().enumerate().map(|(j, a)| (layout.with_content(base, Register::Address, j as u64), a / norm)),
    )
    .unwrap()
}

pub fn oracle_layout(alice: &PartyState, bob: &PartyState, z: &ItemSet, counting: usize) -> RegisterLayout {
    Oracle::new(alice, bob, z).unwrap().layout(counting).unwrap()
}

/// Sixteen rows over four items; exactly rows 0, 5, 10 and 15 contain items 1 and 3.
pub const ROWS16: [&str; 16] = [
    "1111", "1100", "0110", "0011", "1001", "1010", "0101", "0000", "1101", "0111", "1110", "1000", "0010", "0100",
    "0001", "1011",
];
