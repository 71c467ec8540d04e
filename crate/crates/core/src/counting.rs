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

//! Quantum counting over the two-party Grover iteration, the agreement rule
//! that turns two independent counts into one support estimate, and
//! confidence estimation from two supports.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{ItemSet, Role};
use crate::error::{contract, Error, Result};
use crate::protocol::{KeyFamily, Oracle, PartyState, Transcript};
use crate::qsim::{Register, SparseState};

/// How the controlled powers `|m>|psi> -> |m> G^m |psi>` are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Circuit while the joint counting/address space has at most
    /// [`CIRCUIT_LIMIT`] labels, power table beyond.
    #[default]
    Auto,
    /// Counting qubit `i` controls `2^i` Grover iterations on the full state.
    Circuit,
    /// `G^m |psi>` for `m = 0..P` by repeated uncontrolled iterations on the
    /// address state, then placed on the `|m>` branches. Same `P - 1` oracle
    /// calls, same final state.
    PowerTable,
}

pub const CIRCUIT_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingConfig {
    /// Counting register width; `P = 2^p`.
    pub p: usize,
    /// Preset support threshold.
    pub s: f64,
    /// Agreement half-width as a multiple of `s`.
    pub agreement_band: f64,
    pub max_rounds: usize,
    pub key_family: KeyFamily,
    pub schedule: Schedule,
}

pub const DEFAULT_AGREEMENT_BAND: f64 = 0.01;
pub const DEFAULT_MAX_ROUNDS: usize = 16;

/// `ceil(log2(2000 / s))`, the width giving `P >= 2000 / s`.
pub fn default_counting_width(s: f64) -> usize {
    (2000.0 / s).log2().ceil().max(1.0) as usize
}

impl CountingConfig {
    pub fn new(p: usize, s: f64) -> Result<Self> {
        let config = CountingConfig {
            p,
            s,
            agreement_band: DEFAULT_AGREEMENT_BAND,
            max_rounds: DEFAULT_MAX_ROUNDS,
            key_family: KeyFamily::BitFlip,
            schedule: Schedule::Auto,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn for_threshold(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return contract(format!("support threshold {s} outside (0, 1)"));
        }
        Self::new(default_counting_width(s), s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 || self.p > 24 {
            return contract(format!("counting width {} outside 1..=24", self.p));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return contract(format!("support threshold {} outside (0, 1)", self.s));
        }
        if self.agreement_band.is_nan() || self.agreement_band <= 0.0 {
            return contract("agreement band must be positive");
        }
        if self.max_rounds < 1 {
            return contract("at least one round is required");
        }
        Ok(())
    }

    /// `P = 2^p`.
    pub fn precision(&self) -> usize {
        1usize << self.p
    }

    /// Largest accepted `|s1 - s2|` (exclusive).
    pub fn agreement_width(&self) -> f64 {
        self.agreement_band * self.s
    }
}

/// `sin^2(pi f / P)`.
pub fn readout(f: u64, precision: usize) -> f64 {
    (PI * f as f64 / precision as f64).sin().powi(2)
}

/// `2 pi sqrt(v) / P + pi^2 / P^2`.
pub fn bht_error_bound(value: f64, precision: usize) -> f64 {
    let p = precision as f64;
    2.0 * PI * value.max(0.0).sqrt() / p + PI * PI / (p * p)
}

/// Factor from a fraction of the padded address space to a fraction of the
/// original rows.
pub fn rescale_factor(party: &PartyState) -> f64 {
    (1u64 << party.address_bits()) as f64 / party.original_count() as f64
}

fn check_parties(alice: &PartyState, bob: &PartyState) -> Result<()> {
    if alice.original_count() == 0 {
        return contract("database has no transactions");
    }
    if !alice.has_key() || !bob.has_key() {
        // only the responder's key is used, but both are set by joint_support
        if alice.has_key() == bob.has_key() {
            return contract("neither party holds an encryption key");
        }
    }
    Ok(())
}

/// The counting/address state just before the counting register is measured.
pub fn counting_state(
    initiator: Role,
    alice: &PartyState,
    bob: &PartyState,
    z: &ItemSet,
    config: &CountingConfig,
    transcript: &mut Transcript,
) -> Result<SparseState> {
    config.validate()?;
    check_parties(alice, bob)?;
    let oracle = Oracle::new(alice, bob, z)?.initiated_by(initiator);
    let layout = oracle.layout(config.p)?;
    let precision = config.precision();

    let circuit = match config.schedule {
        Schedule::Circuit => true,
        Schedule::PowerTable => false,
        Schedule::Auto => precision << oracle.address_bits() <= CIRCUIT_LIMIT,
    };

    let mut state = if circuit {
        let mut state = SparseState::prepare_basis(&layout, 0)?;
        state.apply_w(Register::Counting)?;
        state.apply_w(Register::Address)?;
        for i in 0..config.p {
            let control = layout.qubit(Register::Counting, i)?;
            for _ in 0..1u64 << i {
                oracle.grover(&mut state, transcript, Some(control))?;
            }
        }
        state
    } else {
        let mut psi = SparseState::prepare_basis(&layout, 0)?;
        psi.apply_w(Register::Address)?;
        let scale = 1.0 / (precision as f64).sqrt();
        let mut terms: Vec<(u64, Complex64)> = Vec::with_capacity(precision * psi.len());
        for m in 0..precision as u64 {
            if m > 0 {
                oracle.grover(&mut psi, transcript, None)?;
            }
            terms.extend(psi.shifted_terms(Register::Counting, m).map(|(l, a)| (l, a * scale)));
        }
        SparseState::from_raw_terms(&layout, terms)
    };
    state.inverse_qft(Register::Counting)?;
    state.check_norm(1e-9)?;
    Ok(state)
}

/// Exact distribution of the counting readout `f`, indexed by `f`.
pub fn counting_distribution(
    initiator: Role,
    alice: &PartyState,
    bob: &PartyState,
    z: &ItemSet,
    config: &CountingConfig,
    transcript: &mut Transcript,
) -> Result<Vec<f64>> {
    Ok(counting_state(initiator, alice, bob, z, config, transcript)?.marginal(Register::Counting))
}

/// One run of quantum counting; returns `sin^2(pi f / P)` rescaled to the
/// original row count (capped at 1). Uses the keys the parties hold.
pub fn quantum_count<R: Rng + ?Sized>(
    initiator: Role,
    alice: &PartyState,
    bob: &PartyState,
    z: &ItemSet,
    config: &CountingConfig,
    rng: &mut R,
    transcript: &mut Transcript,
) -> Result<f64> {
    let state = counting_state(initiator, alice, bob, z, config, transcript)?;
    let f = state.measure_register(Register::Counting, rng)?.value;
    Ok((readout(f, config.precision()) * rescale_factor(alice)).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub rounds_used: usize,
    pub s1: f64,
    pub s2: f64,
    pub accepted: bool,
    pub qubits_sent: usize,
}

impl SupportEstimate {
    /// An exact value, for injecting ground truth where an estimate is expected.
    pub fn exact(value: f64) -> Self {
        SupportEstimate {
            value,
            error_bound: 0.0,
            rounds_used: 0,
            s1: value,
            s2: value,
            accepted: true,
            qubits_sent: 0,
        }
    }
}

/// The round's acceptance rule: `|s1 - s2| < band * s`.
pub fn agreement(s1: f64, s2: f64, config: &CountingConfig) -> Option<f64> {
    ((s1 - s2).abs() < config.agreement_width()).then(|| (s1 + s2) / 2.0)
}

pub fn joint_support<R: Rng + ?Sized>(
    alice: &PartyState,
    bob: &PartyState,
    z: &ItemSet,
    config: &CountingConfig,
    rng: &mut R,
) -> Result<SupportEstimate> {
    joint_support_with_transcript(alice, bob, z, config, rng, &mut Transcript::new())
}

/// Alice counts with Bob's fresh key, Bob counts with Alice's fresh key;
/// repeat until the two results agree or `max_rounds` is spent.
pub fn joint_support_with_transcript<R: Rng + ?Sized>(
    alice: &PartyState,
    bob: &PartyState,
    z: &ItemSet,
    config: &CountingConfig,
    rng: &mut R,
    transcript: &mut Transcript,
) -> Result<SupportEstimate> {
    config.validate()?;
    let mut alice = alice.clone();
    let mut bob = bob.clone();
    let scale = rescale_factor(&alice);
    let precision = config.precision();
    let start_qubits = transcript.total_qubits();
    let (mut s1, mut s2) = (0.0, 0.0);

    for round in 1..=config.max_rounds {
        let mut round_rng = ChaCha8Rng::seed_from_u64(rng.gen());
        alice.resample_key(config.key_family, &mut round_rng);
        bob.resample_key(config.key_family, &mut round_rng);
        s1 = quantum_count(Role::Alice, &alice, &bob, z, config, &mut round_rng, transcript)?;
        s2 = quantum_count(Role::Bob, &alice, &bob, z, config, &mut round_rng, transcript)?;
        if let Some(value) = agreement(s1, s2, config) {
            return Ok(SupportEstimate {
                value,
                error_bound: scale * bht_error_bound(value / scale, precision),
                rounds_used: round,
                s1,
                s2,
                accepted: true,
                qubits_sent: transcript.total_qubits() - start_qubits,
            });
        }
    }
    let value = (s1 + s2) / 2.0;
    Ok(SupportEstimate {
        value,
        error_bound: scale * bht_error_bound(value / scale, precision),
        rounds_used: config.max_rounds,
        s1,
        s2,
        accepted: false,
        qubits_sent: transcript.total_qubits() - start_qubits,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceEstimate {
    pub value: f64,
    /// First-order quotient-rule propagation of the two support bounds.
    pub propagated_bound: f64,
    /// Plain sum of the two support bounds.
    pub summed_bound: f64,
    pub antecedent: SupportEstimate,
    pub joint: SupportEstimate,
}

pub fn confidence_bounds(joint: &SupportEstimate, antecedent: &SupportEstimate) -> (f64, f64) {
    let (vxy, vx) = (joint.value, antecedent.value);
    let propagated = joint.error_bound / vx + antecedent.error_bound * vxy / (vx * vx);
    (propagated, joint.error_bound + antecedent.error_bound)
}

pub fn estimate_confidence<R: Rng + ?Sized>(
    alice: &PartyState,
    bob: &PartyState,
    x: &ItemSet,
    y: &ItemSet,
    config: &CountingConfig,
    rng: &mut R,
) -> Result<ConfidenceEstimate> {
    if x.is_empty() || y.is_empty() {
        return contract("rule sides must be non-empty");
    }
    if !x.is_disjoint(y) {
        return contract(format!("antecedent {x} and consequent {y} overlap"));
    }
    let antecedent = joint_support(alice, bob, x, config, rng)?;
    if !antecedent.accepted {
        return Err(Error::NotAccepted { rounds: antecedent.rounds_used });
    }
    if antecedent.value <= antecedent.error_bound {
        return Err(Error::AntecedentTooRare { estimate: antecedent.value, bound: antecedent.error_bound });
    }
    let joint = joint_support(alice, bob, &x.union(y), config, rng)?;
    if !joint.accepted {
        return Err(Error::NotAccepted { rounds: joint.rounds_used });
    }
    let (propagated_bound, summed_bound) = confidence_bounds(&joint, &antecedent);
    Ok(ConfidenceEstimate { value: joint.value / antecedent.value, propagated_bound, summed_bound, antecedent, joint })
}
