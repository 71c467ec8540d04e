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

//! Classical support protocol with commutative exponentiation ciphers
//! `x -> x^e mod p`, its bit-level communication cost, and the exhaustive
//! exponent search that breaks it given exponential time.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::dataset::{membership_flag, ItemSet, PartitionedView};
use crate::error::{contract, Error, Result};
use crate::protocol::Direction;

/// Largest prime the exhaustive attack accepts.
pub const ATTACK_MAX_PRIME: u64 = 1_000_000;

/// Transaction indices as values in `[1, p - 1]`; index `j` is stored as `j + 1`.
pub type IndexSet = BTreeSet<u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassicalKey {
    p: u64,
    e: u64,
}

impl ClassicalKey {
    /// `p` prime, `e` odd in `3..=p-2` and coprime to `p - 1`.
    pub fn new(p: u64, e: u64) -> Result<Self> {
        if !is_prime(p) {
            return contract(format!("{p} is not prime"));
        }
        if !is_valid_exponent(p, e) {
            return contract(format!(
                "exponent {e} is not an odd value in 3..={} coprime to {}",
                p.saturating_sub(2),
                p - 1
            ));
        }
        Ok(ClassicalKey { p, e })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn exponent(&self) -> u64 {
        self.e
    }
}

fn is_valid_exponent(p: u64, e: u64) -> bool {
    e >= 3 && e + 2 <= p && e % 2 == 1 && gcd(e, p - 1) == 1
}

/// All admissible exponents for `p`, ascending.
pub fn valid_exponents(p: u64) -> impl Iterator<Item = u64> {
    (3..p.saturating_sub(1)).step_by(2).filter(move |&e| gcd(e, p - 1) == 1)
}

pub fn sample_classical_key<R: Rng + ?Sized>(p: u64, rng: &mut R) -> Result<ClassicalKey> {
    let choices: Vec<u64> = valid_exponents(p).collect();
    if !is_prime(p) || choices.is_empty() {
        return contract(format!("no valid exponent for modulus {p}"));
    }
    ClassicalKey::new(p, choices[rng.gen_range(0..choices.len())])
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest prime strictly above `n` that admits an exponent (at least 5).
pub fn prime_above(n: u64) -> u64 {
    let mut p = n.max(4) + 1;
    while !is_prime(p) {
        p += 1;
    }
    p
}

/// Square-and-multiply `base^exp mod modulus`.
pub fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut result: u128 = 1 % m;
    let mut b = base as u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    result as u64
}

pub fn commutative_pow(x: u64, key: &ClassicalKey) -> Result<u64> {
    if x == 0 || x >= key.p {
        return contract(format!("{x} outside 1..={}", key.p - 1));
    }
    Ok(mod_pow(x, key.e, key.p))
}

pub fn encrypt_set(set: &IndexSet, key: &ClassicalKey) -> Result<IndexSet> {
    set.iter().map(|&x| commutative_pow(x, key)).collect()
}

/// Indices (as `j + 1`) of the view's real rows containing the view's part of `z`.
pub fn party_index_set(view: &PartitionedView, z: &ItemSet) -> Result<IndexSet> {
    let part = view.own_part(z);
    let mut out = IndexSet::new();
    for (j, row) in view.rows()[..view.original_count()].iter().enumerate() {
        if membership_flag(row, &part, view.item_offset())? {
            out.insert(j as u64 + 1);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassicalMessage {
    pub dir: Direction,
    pub elements: usize,
    pub bits: usize,
}

/// Bits exchanged by the classical protocol; `ceil(log2 p)` bits per element.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BitLog {
    pub messages: Vec<ClassicalMessage>,
}

impl BitLog {
    pub fn total_bits(&self) -> usize {
        self.messages.iter().map(|m| m.bits).sum()
    }

    fn send(&mut self, dir: Direction, set: &IndexSet, p: u64) {
        let width = 64 - (p - 1).leading_zeros() as usize;
        self.messages.push(ClassicalMessage { dir, elements: set.len(), bits: set.len() * width });
    }
}

/// `|u_B(u_A(S1)) ∩ u_A(u_B(S2))| / N`.
pub fn classical_support(
    s1: &IndexSet,
    s2: &IndexSet,
    key_a: &ClassicalKey,
    key_b: &ClassicalKey,
    n: usize,
    log: &mut BitLog,
) -> Result<f64> {
    if key_a.p != key_b.p {
        return contract(format!("keys use different primes {} and {}", key_a.p, key_b.p));
    }
    let p = key_a.p;
    if n == 0 || p <= n as u64 {
        return contract(format!("prime {p} must exceed the transaction count {n}"));
    }
    if let Some(x) = s1.iter().chain(s2).find(|&&x| x == 0 || x > n as u64) {
        return contract(format!("index value {x} outside 1..={n}"));
    }

    let a1 = encrypt_set(s1, key_a)?;
    log.send(Direction::AliceToBob, &a1, p);
    let ba1 = encrypt_set(&a1, key_b)?;
    log.send(Direction::BobToAlice, &ba1, p);

    let b2 = encrypt_set(s2, key_b)?;
    log.send(Direction::BobToAlice, &b2, p);
    let ab2 = encrypt_set(&b2, key_a)?;
    log.send(Direction::AliceToBob, &ab2, p);

    Ok(ba1.intersection(&ab2).count() as f64 / n as f64)
}

/// Every admissible exponent `w` with `{x^w mod p : x in singly} = doubly`.
pub fn exhaustive_key_attack(p: u64, singly: &IndexSet, doubly: &IndexSet) -> Result<Vec<u64>> {
    if !is_prime(p) {
        return contract(format!("{p} is not prime"));
    }
    if p > ATTACK_MAX_PRIME {
        return contract(format!("attack limited to p <= {ATTACK_MAX_PRIME}"));
    }
    if let Some(x) = singly.iter().chain(doubly).find(|&&x| x == 0 || x >= p) {
        return contract(format!("value {x} outside 1..={}", p - 1));
    }
    let candidates: Vec<u64> = valid_exponents(p)
        .filter(|&w| singly.len() == doubly.len() && singly.iter().all(|&x| doubly.contains(&mod_pow(x, w, p))))
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoCandidate);
    }
    Ok(candidates)
}
