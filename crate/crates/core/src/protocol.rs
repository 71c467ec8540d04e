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

//! The two-party oracle.
//!
//! The initiator holds the superposed address register and applies the phase;
//! the responder scrambles addresses with its secret bijection `u` before
//! touching its own QRAM. Both parties load their data by XOR queries and
//! erase it by repeating the same query, so every auxiliary register returns
//! to zero and only the phase `(-1)^{c(u(j))}` survives.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::dataset::{
    low_mask, pad_to_power_of_two, vertical_partition, Bits, ItemSet, PartitionedView, Role, TransactionDatabase,
};
use crate::error::{contract, Error, Result};
use crate::qsim::{Qubit, Register, RegisterLayout, SparseState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyFamily {
    /// `j ^ lambda`
    BitFlip,
    /// `j + lambda mod 2^n`
    ModularAdd,
    /// Left rotation of the `n`-bit string, `r` times.
    CyclicShift,
}

impl KeyFamily {
    pub const ALL: [KeyFamily; 3] = [KeyFamily::BitFlip, KeyFamily::ModularAdd, KeyFamily::CyclicShift];

    /// Number of admissible parameters for an `n`-qubit address space.
    pub fn parameter_count(self, n: usize) -> u64 {
        match self {
            KeyFamily::BitFlip | KeyFamily::ModularAdd => 1u64 << n,
            KeyFamily::CyclicShift => n.max(1) as u64,
        }
    }
}

impl FromStr for KeyFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bitflip" | "bit_flip" => Ok(KeyFamily::BitFlip),
            "modadd" | "modular_add" => Ok(KeyFamily::ModularAdd),
            "cyclic" | "cyclic_shift" => Ok(KeyFamily::CyclicShift),
            other => contract(format!("unknown key family {other:?} (bitflip, modadd, cyclic)")),
        }
    }
}

impl fmt::Display for KeyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KeyFamily::BitFlip => "bitflip",
            KeyFamily::ModularAdd => "modadd",
            KeyFamily::CyclicShift => "cyclic",
        })
    }
}

/// Secret bijection on `{0,1}^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncryptionKey {
    family: KeyFamily,
    parameter: u64,
    n: usize,
}

impl EncryptionKey {
    pub fn family(&self) -> KeyFamily {
        self.family
    }

    pub fn parameter(&self) -> u64 {
        self.parameter
    }

    pub fn width(&self) -> usize {
        self.n
    }

    pub fn apply(&self, j: u64) -> u64 {
        let mask = low_mask(self.n);
        match self.family {
            KeyFamily::BitFlip => j ^ self.parameter,
            KeyFamily::ModularAdd => j.wrapping_add(self.parameter) & mask,
            KeyFamily::CyclicShift => rotate_left(j, self.parameter as usize, self.n),
        }
    }

    pub fn invert(&self, j: u64) -> u64 {
        let mask = low_mask(self.n);
        match self.family {
            KeyFamily::BitFlip => j ^ self.parameter,
            KeyFamily::ModularAdd => j.wrapping_sub(self.parameter) & mask,
            KeyFamily::CyclicShift => rotate_left(j, (self.n - self.parameter as usize) % self.n.max(1), self.n),
        }
    }
}

/// `j_1 j_2 ... j_n -> j_2 ... j_n j_1` applied `r` times, `j_1` being the
/// most significant bit.
fn rotate_left(j: u64, r: usize, n: usize) -> u64 {
    if n == 0 || r.is_multiple_of(n) {
        return j;
    }
    let r = r % n;
    ((j << r) | (j >> (n - r))) & low_mask(n)
}

pub fn make_key(family: KeyFamily, parameter: u64, n: usize) -> Result<EncryptionKey> {
    if n > RegisterLayout::MAX_WIDTH {
        return contract(format!("address width {n} too large"));
    }
    if parameter >= family.parameter_count(n) {
        return contract(format!("{family} parameter {parameter} out of range for n = {n}"));
    }
    Ok(EncryptionKey { family, parameter, n })
}

/// Uniform parameter within `family`.
pub fn sample_key<R: Rng + ?Sized>(family: KeyFamily, n: usize, rng: &mut R) -> EncryptionKey {
    let parameter = rng.gen_range(0..family.parameter_count(n));
    EncryptionKey { family, parameter, n }
}

/// One party: its columns, the QRAM holding them, and (when acting as the
/// responder) its secret key. The key never leaves this module.
#[derive(Debug, Clone)]
pub struct PartyState {
    view: PartitionedView,
    n: usize,
    memory: Vec<Bits>,
    key: Option<EncryptionKey>,
}

pub fn build_qram(view: &PartitionedView, n: usize) -> Result<PartyState> {
    if n > RegisterLayout::MAX_WIDTH || view.rows().len() != 1usize << n {
        return contract(format!("{} rows cannot fill a {n}-qubit address space; pad first", view.rows().len()));
    }
    Ok(PartyState { view: view.clone(), n, memory: view.rows().to_vec(), key: None })
}

/// Pads `db`, splits it after item `split` and loads both QRAMs.
pub fn setup_parties(db: &TransactionDatabase, split: usize) -> Result<(PartyState, PartyState)> {
    let padded = pad_to_power_of_two(db);
    let n = padded.address_bits();
    let (alice, bob) = vertical_partition(&padded, split)?;
    Ok((build_qram(&alice, n)?, build_qram(&bob, n)?))
}

impl PartyState {
    pub fn role(&self) -> Role {
        self.view.role()
    }

    pub fn view(&self) -> &PartitionedView {
        &self.view
    }

    pub fn address_bits(&self) -> usize {
        self.n
    }

    pub fn memory(&self) -> &[Bits] {
        &self.memory
    }

    pub fn original_count(&self) -> usize {
        self.view.original_count()
    }

    pub fn has_key(&self) -> bool {
        self.key.is_some()
    }

    pub fn install_key(&mut self, key: EncryptionKey) -> Result<()> {
        if key.n != self.n {
            return contract(format!("key acts on {} qubits, address space has {}", key.n, self.n));
        }
        self.key = Some(key);
        Ok(())
    }

    pub fn resample_key<R: Rng + ?Sized>(&mut self, family: KeyFamily, rng: &mut R) {
        self.key = Some(sample_key(family, self.n, rng));
    }

    fn data_register(&self) -> Register {
        match self.role() {
            Role::Alice => Register::AliceData,
            Role::Bob => Register::BobData,
        }
    }

    fn flag_register(&self) -> Register {
        match self.role() {
            Role::Alice => Register::AFlag,
            Role::Bob => Register::BFlag,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AliceToBob,
    BobToAlice,
}

impl Direction {
    fn from_to(from: Role) -> Direction {
        match from {
            Role::Alice => Direction::AliceToBob,
            Role::Bob => Direction::BobToAlice,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepTag {
    Step1,
    Step3,
    Step6,
    Step7,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TransferEvent {
    pub dir: Direction,
    pub qubits: usize,
    pub step: StepTag,
}

/// Ordered log of register transfers between the parties.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    events: Vec<TransferEvent>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[TransferEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn push(&mut self, dir: Direction, qubits: usize, step: StepTag) {
        self.events.push(TransferEvent { dir, qubits, step });
    }

    pub fn total_qubits(&self) -> usize {
        self.events.iter().map(|e| e.qubits).sum()
    }

    /// JSON array of `{dir, qubits, step}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.events).expect("transfer events serialize")
    }
}

/// Total qubits sent, and the largest total of any single oracle call (four
/// consecutive events).
pub fn transcript_total(transcript: &Transcript) -> Result<(usize, usize)> {
    if !transcript.events.len().is_multiple_of(4) {
        return Err(Error::Accounting(format!("{} events do not form whole oracle calls", transcript.events.len())));
    }
    let per_call_max = transcript.events.chunks(4).map(|call| call.iter().map(|e| e.qubits).sum()).max().unwrap_or(0);
    Ok((transcript.total_qubits(), per_call_max))
}

/// Where the initiator's second (erasing) query happens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnqueryPlacement {
    /// Query, mark, unquery in step 3 and again in step 5.
    #[default]
    Immediate,
    /// Keep the data loaded from step 3 to step 5, saving two queries.
    Postponed,
}

/// Auxiliary registers that must be zero on entry and exit.
const AUXILIARY: [Register; 5] =
    [Register::BobData, Register::AliceData, Register::BFlag, Register::AFlag, Register::KickAncilla];

/// The jointly evaluated phase oracle `|j> -> (-1)^{c(u(j))} |j>` and the
/// Grover iteration built on it.
#[derive(Debug, Clone)]
pub struct Oracle<'a> {
    alice: &'a PartyState,
    bob: &'a PartyState,
    itemset: ItemSet,
    initiator: Role,
    placement: UnqueryPlacement,
}

impl<'a> Oracle<'a> {
    pub fn new(alice: &'a PartyState, bob: &'a PartyState, itemset: &ItemSet) -> Result<Self> {
        if alice.role() != Role::Alice || bob.role() != Role::Bob {
            return contract("parties passed in the wrong roles");
        }
        if alice.n != bob.n || alice.view.split() != bob.view.split() || alice.view.n_items() != bob.view.n_items() {
            return contract("parties do not share one partitioned database");
        }
        if itemset.is_empty() {
            return contract("the oracle needs a non-empty itemset");
        }
        if itemset.max_item().unwrap_or(0) > alice.view.n_items() {
            return contract(format!("itemset {itemset} names items beyond {}", alice.view.n_items()));
        }
        Ok(Oracle {
            alice,
            bob,
            itemset: itemset.clone(),
            initiator: Role::Alice,
            placement: UnqueryPlacement::Immediate,
        })
    }

    /// The party holding the address register and applying the phase. The
    /// other party must hold a key.
    pub fn initiated_by(mut self, role: Role) -> Self {
        self.initiator = role;
        self
    }

    pub fn with_placement(mut self, placement: UnqueryPlacement) -> Self {
        self.placement = placement;
        self
    }

    pub fn address_bits(&self) -> usize {
        self.alice.n
    }

    /// Register layout for this database with a counting register of
    /// `counting` qubits.
    pub fn layout(&self, counting: usize) -> Result<RegisterLayout> {
        RegisterLayout::new(counting, self.alice.n, self.bob.view.width(), self.alice.view.width())
    }

    fn party(&self, role: Role) -> &'a PartyState {
        match role {
            Role::Alice => self.alice,
            Role::Bob => self.bob,
        }
    }

    fn check_state(&self, state: &SparseState, control: Option<Qubit>) -> Result<()> {
        let layout = state.layout();
        if layout.width(Register::Address) != self.alice.n
            || layout.width(Register::AliceData) != self.alice.view.width()
            || layout.width(Register::BobData) != self.bob.view.width()
        {
            return contract("state layout does not match the parties' registers");
        }
        if let Some(q) = control {
            if q.position() >= layout.total_width()
                || layout.contains(Register::Address, q)
                || AUXILIARY.iter().any(|r| layout.contains(*r, q))
            {
                return contract("control qubit must lie outside the address and auxiliary registers");
            }
        }
        if let Some(r) = AUXILIARY.iter().find(|r| !state.register_is_zero(**r)) {
            return contract(format!("auxiliary register {r:?} is not zero"));
        }
        Ok(())
    }

    /// Query, mark the party's flag, query again.
    fn mark_and_erase(party: &PartyState, part: &ItemSet, state: &mut SparseState) -> Result<()> {
        let flag = state.layout().qubit(party.flag_register(), 0)?;
        state.qram_query(Register::Address, party.data_register(), &party.memory)?;
        state.apply_membership_mark(party.data_register(), flag, part, party.view.item_offset())?;
        state.qram_query(Register::Address, party.data_register(), &party.memory)
    }

    pub fn apply(&self, state: &mut SparseState, transcript: &mut Transcript, control: Option<Qubit>) -> Result<()> {
        self.apply_traced(state, transcript, control, |_, _| {})
    }

    /// Runs steps 1 to 7, calling `observer(step, state)` after each.
    pub fn apply_traced(
        &self,
        state: &mut SparseState,
        transcript: &mut Transcript,
        control: Option<Qubit>,
        mut observer: impl FnMut(u8, &SparseState),
    ) -> Result<()> {
        self.check_state(state, control)?;
        let initiator = self.party(self.initiator);
        let responder = self.party(self.initiator.other());
        let key =
            responder.key.ok_or_else(|| Error::Contract(format!("{:?} holds no encryption key", responder.role())))?;
        let n = self.alice.n;
        let initiator_part = initiator.view.own_part(&self.itemset);
        let responder_part = responder.view.own_part(&self.itemset);
        let out = Direction::from_to(initiator.role());
        let back = Direction::from_to(responder.role());

        // 1: address register travels to the responder, who encrypts it.
        transcript.push(out, n, StepTag::Step1);
        state.apply_permutation(Register::Address, |j| key.apply(j))?;
        observer(1, state);

        // 2: responder computes its flag on the encrypted address.
        Self::mark_and_erase(responder, &responder_part, state)?;
        observer(2, state);

        // 3: address and responder flag come back; initiator computes its flag.
        transcript.push(back, n + 1, StepTag::Step3);
        let init_flag = state.layout().qubit(initiator.flag_register(), 0)?;
        let resp_flag = state.layout().qubit(responder.flag_register(), 0)?;
        match self.placement {
            UnqueryPlacement::Immediate => Self::mark_and_erase(initiator, &initiator_part, state)?,
            UnqueryPlacement::Postponed => {
                state.qram_query(Register::Address, initiator.data_register(), &initiator.memory)?;
                state.apply_membership_mark(
                    initiator.data_register(),
                    init_flag,
                    &initiator_part,
                    initiator.view.item_offset(),
                )?;
            }
        }
        observer(3, state);

        // 4: phase (-1)^{a b}, under the control qubit when given.
        state.apply_phase_and(control, init_flag, resp_flag)?;
        observer(4, state);

        // 5: initiator erases its flag.
        match self.placement {
            UnqueryPlacement::Immediate => Self::mark_and_erase(initiator, &initiator_part, state)?,
            UnqueryPlacement::Postponed => {
                state.apply_membership_mark(
                    initiator.data_register(),
                    init_flag,
                    &initiator_part,
                    initiator.view.item_offset(),
                )?;
                state.qram_query(Register::Address, initiator.data_register(), &initiator.memory)?;
            }
        }
        observer(5, state);

        // 6: back to the responder, who erases its flag.
        transcript.push(out, n + 1, StepTag::Step6);
        Self::mark_and_erase(responder, &responder_part, state)?;
        observer(6, state);

        // 7: responder decrypts and returns the address register.
        state.apply_permutation(Register::Address, |j| key.invert(j))?;
        transcript.push(back, n, StepTag::Step7);
        observer(7, state);

        if let Some(r) = AUXILIARY.iter().find(|r| !state.register_is_zero(**r)) {
            return Err(Error::Internal(format!("auxiliary register {r:?} left entangled")));
        }
        Ok(())
    }

    /// `G = -W U0 W U` on the address register, applied on the `control = 1`
    /// branch only when a control is given.
    pub fn grover(&self, state: &mut SparseState, transcript: &mut Transcript, control: Option<Qubit>) -> Result<()> {
        self.apply(state, transcript, control)?;
        state.apply_controlled_w(Register::Address, control)?;
        state.apply_u0(Register::Address, control)?;
        state.apply_controlled_w(Register::Address, control)?;
        state.apply_sign(control)
    }
}

/// Alice-initiated oracle; Bob must hold a key.
pub fn run_oracle_u(
    state: &mut SparseState,
    alice: &PartyState,
    bob: &PartyState,
    z: &ItemSet,
    transcript: &mut Transcript,
    control: Option<Qubit>,
) -> Result<()> {
    Oracle::new(alice, bob, z)?.apply(state, transcript, control)
}

/// Alice-initiated Grover iteration controlled on `control`.
pub fn controlled_grover(
    state: &mut SparseState,
    alice: &PartyState,
    bob: &PartyState,
    z: &ItemSet,
    control: Qubit,
    transcript: &mut Transcript,
) -> Result<()> {
    Oracle::new(alice, bob, z)?.grover(state, transcript, Some(control))
}

/// Signs `(-1)^{c(u(j))}` computed straight from the joined database.
pub fn reference_phase_oracle(db: &TransactionDatabase, z: &ItemSet, u: impl Fn(u64) -> u64) -> Result<Vec<i8>> {
    if z.is_empty() {
        return contract("the oracle needs a non-empty itemset");
    }
    if !db.is_padded() {
        return contract("database must be padded to a power of two");
    }
    db.check_itemset(z)?;
    Ok((0..db.n_transactions() as u64).map(|j| if db.row_contains(u(j) as usize, z) { -1 } else { 1 }).collect())
}
