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

//! Sparse state-vector engine.
//!
//! A [`SparseState`] is a sorted list of `(label, amplitude)` pairs where the
//! label packs every register of a [`RegisterLayout`] into one integer. All
//! operations mutate the state in place. Everything except the Hadamard wall
//! and the Fourier transform is a signed permutation of basis labels, so the
//! number of stored terms only changes in those two places.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::dataset::{low_mask, membership_mask, Bits, ItemSet};
use crate::error::{contract, Error, Result};

/// Amplitudes below this magnitude are dropped.
pub const PRUNE_EPS: f64 = 1e-14;
/// Allowed drift of the squared norm away from one.
pub const NORM_EPS: f64 = 1e-10;
/// Measurement refuses states further than this from unit norm.
pub const MEASURE_NORM_EPS: f64 = 1e-8;

/// Registers in label order, most significant first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Register {
    Counting,
    Address,
    BobData,
    AliceData,
    BFlag,
    AFlag,
    KickAncilla,
}

impl Register {
    pub const ALL: [Register; 7] = [
        Register::Counting,
        Register::Address,
        Register::BobData,
        Register::AliceData,
        Register::BFlag,
        Register::AFlag,
        Register::KickAncilla,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

/// Absolute bit position of a qubit inside a composite label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Qubit(usize);

impl Qubit {
    pub fn position(self) -> usize {
        self.0
    }

    fn mask(self) -> u64 {
        1u64 << self.0
    }
}

/// Widths and bit offsets of the protocol registers. The label reads
/// `counting | address | bob_data | alice_data | b_flag | a_flag | kick_ancilla`
/// from the most significant bit down; within a register, qubit `i` carries
/// weight `2^i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    widths: [usize; 7],
    offsets: [usize; 7],
    total: usize,
}

impl RegisterLayout {
    pub const MAX_WIDTH: usize = 63;

    pub fn new(counting: usize, address: usize, bob_data: usize, alice_data: usize) -> Result<Self> {
        let widths = [counting, address, bob_data, alice_data, 1, 1, 1];
        let total: usize = widths.iter().sum();
        if total > Self::MAX_WIDTH {
            return contract(format!("layout needs {total} qubits, at most {} supported", Self::MAX_WIDTH));
        }
        let mut offsets = [0; 7];
        let mut next = 0;
        for r in Register::ALL.iter().rev() {
            offsets[r.index()] = next;
            next += widths[r.index()];
        }
        Ok(RegisterLayout { widths, offsets, total })
    }

    pub fn width(&self, reg: Register) -> usize {
        self.widths[reg.index()]
    }

    pub fn offset(&self, reg: Register) -> usize {
        self.offsets[reg.index()]
    }

    pub fn total_width(&self) -> usize {
        self.total
    }

    /// Mask of the register's bits in place.
    pub fn mask(&self, reg: Register) -> u64 {
        low_mask(self.width(reg)) << self.offset(reg)
    }

    pub fn content(&self, label: u64, reg: Register) -> u64 {
        (label >> self.offset(reg)) & low_mask(self.width(reg))
    }

    /// `label` with the register's content replaced by `value`.
    pub fn with_content(&self, label: u64, reg: Register, value: u64) -> u64 {
        (label & !self.mask(reg)) | ((value & low_mask(self.width(reg))) << self.offset(reg))
    }

    pub fn qubit(&self, reg: Register, i: usize) -> Result<Qubit> {
        if i >= self.width(reg) {
            return contract(format!("{reg:?} has no qubit {i}"));
        }
        Ok(Qubit(self.offset(reg) + i))
    }

    pub fn contains(&self, reg: Register, q: Qubit) -> bool {
        self.mask(reg) & q.mask() != 0
    }

    fn check_qubit(&self, q: Qubit) -> Result<()> {
        if q.0 >= self.total {
            return contract(format!("qubit {} outside a {}-qubit layout", q.0, self.total));
        }
        Ok(())
    }

    fn label_limit(&self) -> u64 {
        1u64 << self.total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    layout: RegisterLayout,
    /// Strictly increasing labels, no amplitude below [`PRUNE_EPS`].
    terms: Vec<(u64, Complex64)>,
}

#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub value: u64,
    pub probability: f64,
    pub post_state: SparseState,
}

impl SparseState {
    pub fn prepare_basis(layout: &RegisterLayout, label: u64) -> Result<Self> {
        if label >= layout.label_limit() {
            return contract(format!("label {label} outside a {}-qubit layout", layout.total));
        }
        Ok(SparseState { layout: layout.clone(), terms: vec![(label, Complex64::new(1.0, 0.0))] })
    }

    /// Builds a state from explicit terms. Duplicate labels are summed; the
    /// result must be normalized.
    pub fn from_terms(layout: &RegisterLayout, terms: impl IntoIterator<Item = (u64, Complex64)>) -> Result<Self> {
        let limit = layout.label_limit();
        let mut terms: Vec<(u64, Complex64)> = terms.into_iter().collect();
        if let Some((l, _)) = terms.iter().find(|(l, _)| *l >= limit) {
            return contract(format!("label {l} outside a {}-qubit layout", layout.total));
        }
        terms.sort_unstable_by_key(|t| t.0);
        let mut state = SparseState { layout: layout.clone(), terms: merge_sorted(terms) };
        state.prune();
        state.check_norm(NORM_EPS)?;
        Ok(state)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn terms(&self) -> &[(u64, Complex64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, label: u64) -> Complex64 {
        match self.terms.binary_search_by_key(&label, |t| t.0) {
            Ok(i) => self.terms[i].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Largest amplitude-wise difference to `other` over the union of labels.
    pub fn max_deviation(&self, other: &SparseState) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut worst: f64 = 0.0;
        let (a, b) = (&self.terms, &other.terms);
        while i < a.len() || j < b.len() {
            let d = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.0 == y.0 => {
                    i += 1;
                    j += 1;
                    (x.1 - y.1).norm()
                }
                (Some(x), Some(y)) if x.0 < y.0 => {
                    i += 1;
                    x.1.norm()
                }
                (Some(_), Some(y)) => {
                    j += 1;
                    y.1.norm()
                }
                (Some(x), None) => {
                    i += 1;
                    x.1.norm()
                }
                (None, Some(y)) => {
                    j += 1;
                    y.1.norm()
                }
                (None, None) => unreachable!(),
            };
            worst = worst.max(d);
        }
        worst
    }

    pub fn register_is_zero(&self, reg: Register) -> bool {
        let mask = self.layout.mask(reg);
        self.terms.iter().all(|(l, _)| l & mask == 0)
    }

    pub fn check_norm(&self, eps: f64) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > eps {
            return Err(Error::Internal(format!("squared norm {norm} deviates from 1")));
        }
        Ok(())
    }

    /// Hadamard on every qubit of `reg`.
    pub fn apply_w(&mut self, reg: Register) -> Result<()> {
        self.apply_controlled_w(reg, None)
    }

    /// Hadamard on every qubit of `reg`, only on the `control = 1` branch when
    /// a control is given. The other branch is left bit-for-bit unchanged.
    pub fn apply_controlled_w(&mut self, reg: Register, control: Option<Qubit>) -> Result<()> {
        let width = self.layout.width(reg);
        if width == 0 {
            return Ok(());
        }
        let control_mask = match control {
            Some(q) => {
                self.layout.check_qubit(q)?;
                if self.layout.contains(reg, q) {
                    return contract("control qubit lies inside the transformed register");
                }
                q.mask()
            }
            None => 0,
        };
        let scale = (0.5f64).powf(width as f64 / 2.0);
        self.transform_fibers(reg, control_mask, |fiber| {
            walsh_hadamard(fiber);
            fiber.iter_mut().for_each(|a| *a *= scale);
        });
        Ok(())
    }

    /// `I - 2|0><0|` on `reg`, applied only where `control` is 1 when given.
    pub fn apply_u0(&mut self, reg: Register, control: Option<Qubit>) -> Result<()> {
        let mask = self.layout.mask(reg);
        let control_mask = match control {
            Some(q) => {
                self.layout.check_qubit(q)?;
                if self.layout.contains(reg, q) {
                    return contract("control qubit lies inside the reflected register");
                }
                q.mask()
            }
            None => 0,
        };
        for (label, amp) in &mut self.terms {
            if *label & mask == 0 && *label & control_mask == control_mask {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// Replaces the content `j` of `reg` by `map(j)`. `map` must be a bijection
    /// on the register's values.
    pub fn apply_permutation(&mut self, reg: Register, map: impl Fn(u64) -> u64) -> Result<()> {
        let layout = &self.layout;
        for (label, _) in &mut self.terms {
            *label = layout.with_content(*label, reg, map(layout.content(*label, reg)));
        }
        self.resort();
        Ok(())
    }

    /// XORs `memory[address]` into the data register (controlled-NOT load).
    /// Applying it twice erases the loaded data.
    pub fn qram_query(&mut self, address: Register, data: Register, memory: &[Bits]) -> Result<()> {
        let expected = 1usize << self.layout.width(address);
        if memory.len() != expected {
            return contract(format!("memory has {} cells, address space has {expected}", memory.len()));
        }
        let width = self.layout.width(data);
        if let Some(cell) = memory.iter().find(|c| c.width() != width) {
            return contract(format!("memory cell width {} does not match data register width {width}", cell.width()));
        }
        let data_offset = self.layout.offset(data);
        for (label, _) in &mut self.terms {
            let j = self.layout.content(*label, address) as usize;
            *label ^= memory[j].value() << data_offset;
        }
        self.resort();
        Ok(())
    }

    /// XORs the membership flag of the data register content (for the item
    /// positions in `part`, shifted by `offset`) into `flag`.
    pub fn apply_membership_mark(&mut self, data: Register, flag: Qubit, part: &ItemSet, offset: usize) -> Result<()> {
        self.layout.check_qubit(flag)?;
        if self.layout.contains(data, flag) {
            return contract("flag qubit lies inside the data register");
        }
        let mask = membership_mask(self.layout.width(data), part, offset)?;
        for (label, _) in &mut self.terms {
            if self.layout.content(*label, data) & mask == mask {
                *label ^= flag.mask();
            }
        }
        self.resort();
        Ok(())
    }

    /// Multiplies each term by `(-1)^(a AND b)`, gated on `control` when given.
    /// This is the phase a Toffoli onto a `|->` ancilla kicks back.
    pub fn apply_phase_and(&mut self, control: Option<Qubit>, a: Qubit, b: Qubit) -> Result<()> {
        self.layout.check_qubit(a)?;
        self.layout.check_qubit(b)?;
        let mut mask = a.mask() | b.mask();
        if a == b {
            return contract("phase qubits must be distinct");
        }
        if let Some(q) = control {
            self.layout.check_qubit(q)?;
            if q == a || q == b {
                return contract("control coincides with a phase qubit");
            }
            mask |= q.mask();
        }
        self.negate_where(mask);
        Ok(())
    }

    /// `-1` on the `control = 1` branch, or a global `-1` without control.
    pub fn apply_sign(&mut self, control: Option<Qubit>) -> Result<()> {
        let mask = match control {
            Some(q) => {
                self.layout.check_qubit(q)?;
                q.mask()
            }
            None => 0,
        };
        self.negate_where(mask);
        Ok(())
    }

    fn negate_where(&mut self, mask: u64) {
        for (label, amp) in &mut self.terms {
            if *label & mask == mask {
                *amp = -*amp;
            }
        }
    }

    /// Adjoint of `|m> -> sum_f e^{2 pi i m f / P} |f> / sqrt(P)` on `reg`.
    pub fn inverse_qft(&mut self, reg: Register) -> Result<()> {
        self.fourier(reg, false)
    }

    /// `|m> -> sum_f e^{2 pi i m f / P} |f> / sqrt(P)` on `reg`.
    pub fn qft(&mut self, reg: Register) -> Result<()> {
        self.fourier(reg, true)
    }

    fn fourier(&mut self, reg: Register, forward_qft: bool) -> Result<()> {
        let width = self.layout.width(reg);
        if width == 0 {
            return Ok(());
        }
        let size = 1usize << width;
        let mut planner = FftPlanner::<f64>::new();
        // rustfft's forward transform uses e^{-2 pi i}, which is the inverse QFT.
        let fft = if forward_qft { planner.plan_fft_inverse(size) } else { planner.plan_fft_forward(size) };
        let scale = 1.0 / (size as f64).sqrt();
        self.transform_fibers(reg, 0, |fiber| {
            fft.process(fiber);
            fiber.iter_mut().for_each(|a| *a *= scale);
        });
        Ok(())
    }

    /// Applies a dense transform to every fiber of `reg` (all terms sharing the
    /// same content in the other registers).
    /// Applies `transform` to each fiber of `reg` whose remaining label has
    /// every bit of `active` set.
    fn transform_fibers(&mut self, reg: Register, active: u64, mut transform: impl FnMut(&mut [Complex64])) {
        let size = 1usize << self.layout.width(reg);
        let mask = self.layout.mask(reg);
        let layout = &self.layout;
        let mut keyed: Vec<(u64, u64, Complex64)> =
            self.terms.iter().map(|&(l, a)| (l & !mask, layout.content(l, reg), a)).collect();
        keyed.sort_unstable_by_key(|t| (t.0, t.1));

        let mut out = Vec::with_capacity(self.terms.len());
        let mut fiber = vec![Complex64::new(0.0, 0.0); size];
        let mut start = 0;
        while start < keyed.len() {
            let rest = keyed[start].0;
            let mut end = start;
            if rest & active != active {
                while end < keyed.len() && keyed[end].0 == rest {
                    out.push((layout.with_content(rest, reg, keyed[end].1), keyed[end].2));
                    end += 1;
                }
                start = end;
                continue;
            }
            fiber.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
            while end < keyed.len() && keyed[end].0 == rest {
                fiber[keyed[end].1 as usize] = keyed[end].2;
                end += 1;
            }
            transform(&mut fiber);
            for (value, amp) in fiber.iter().enumerate() {
                if amp.norm() >= PRUNE_EPS {
                    out.push((layout.with_content(rest, reg, value as u64), *amp));
                }
            }
            start = end;
        }
        out.sort_unstable_by_key(|t| t.0);
        self.terms = out;
    }

    /// Probability of each value of `reg`, indexed by value.
    pub fn marginal(&self, reg: Register) -> Vec<f64> {
        let mut probs = vec![0.0; 1usize << self.layout.width(reg)];
        for (label, amp) in &self.terms {
            probs[self.layout.content(*label, reg) as usize] += amp.norm_sqr();
        }
        probs
    }

    /// Samples `reg` in the computational basis and collapses the state.
    /// Consumes exactly one `f64` from `rng`.
    pub fn measure_register<R: Rng + ?Sized>(&self, reg: Register, rng: &mut R) -> Result<MeasurementOutcome> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > MEASURE_NORM_EPS {
            return Err(Error::Internal(format!("cannot measure a state with squared norm {norm}")));
        }
        let mut probs: Vec<(u64, f64)> =
            self.terms.iter().map(|(label, amp)| (self.layout.content(*label, reg), amp.norm_sqr())).collect();
        probs.sort_unstable_by_key(|p| p.0);
        let mut merged: Vec<(u64, f64)> = Vec::new();
        for (value, p) in probs {
            match merged.last_mut() {
                Some(last) if last.0 == value => last.1 += p,
                _ => merged.push((value, p)),
            }
        }

        let draw: f64 = rng.gen::<f64>() * norm;
        let mut acc = 0.0;
        let mut chosen = *merged.last().expect("normalized state has terms");
        for &(value, p) in &merged {
            acc += p;
            if draw < acc && p > 0.0 {
                chosen = (value, p);
                break;
            }
        }
        let (value, weight) = chosen;
        let scale = 1.0 / weight.sqrt();
        let terms = self
            .terms
            .iter()
            .filter(|(label, _)| self.layout.content(*label, reg) == value)
            .map(|&(label, amp)| (label, amp * scale))
            .collect();
        Ok(MeasurementOutcome {
            value,
            probability: weight / norm,
            post_state: SparseState { layout: self.layout.clone(), terms },
        })
    }

    /// One line per term: the label in binary grouped by register, then the
    /// real and imaginary parts with 17 significant digits.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (label, amp) in &self.terms {
            let groups: Vec<String> = Register::ALL
                .iter()
                .filter(|r| self.layout.width(**r) > 0)
                .map(|r| format!("{:0w$b}", self.layout.content(*label, *r), w = self.layout.width(*r)))
                .collect();
            let _ = writeln!(out, "{} {:.16e} {:.16e}", groups.join(" "), amp.re, amp.im);
        }
        out
    }

    /// Embeds this state as the `value` branch of `reg`, which must be zero.
    pub(crate) fn shifted_terms(&self, reg: Register, value: u64) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.terms.iter().map(move |&(l, a)| (self.layout.with_content(l, reg, value), a))
    }

    /// Assembles a state from pre-sorted-or-not terms without a norm check.
    pub(crate) fn from_raw_terms(layout: &RegisterLayout, mut terms: Vec<(u64, Complex64)>) -> Self {
        terms.sort_unstable_by_key(|t| t.0);
        let mut state = SparseState { layout: layout.clone(), terms: merge_sorted(terms) };
        state.prune();
        state
    }

    fn resort(&mut self) {
        self.terms.sort_unstable_by_key(|t| t.0);
        debug_assert!(self.terms.windows(2).all(|w| w[0].0 < w[1].0), "permutation produced duplicate labels");
    }

    fn prune(&mut self) {
        self.terms.retain(|(_, a)| a.norm() >= PRUNE_EPS);
    }
}

fn merge_sorted(terms: Vec<(u64, Complex64)>) -> Vec<(u64, Complex64)> {
    let mut merged: Vec<(u64, Complex64)> = Vec::with_capacity(terms.len());
    for (label, amp) in terms {
        match merged.last_mut() {
            Some(last) if last.0 == label => last.1 += amp,
            _ => merged.push((label, amp)),
        }
    }
    merged
}

/// In-place unnormalized fast Walsh-Hadamard transform.
fn walsh_hadamard(data: &mut [Complex64]) {
    let mut half = 1;
    while half < data.len() {
        for block in data.chunks_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        half *= 2;
    }
}
