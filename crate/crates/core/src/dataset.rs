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

//! Transaction databases, their vertical split between two parties, and the
//! exact support/confidence counts every simulated result is checked against.

use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{contract, Error, Result};

/// Fixed-width bit string. Character `i` (1-based, left to right) is stored at
/// bit `width - i`, so the string `110` has value 6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    value: u64,
    width: usize,
}

impl Bits {
    pub const MAX_WIDTH: usize = 63;

    pub fn new(value: u64, width: usize) -> Result<Self> {
        if width > Self::MAX_WIDTH {
            return contract(format!("bit string width {width} exceeds {}", Self::MAX_WIDTH));
        }
        if width < 64 && value >> width != 0 {
            return contract(format!("value {value} does not fit in {width} bits"));
        }
        Ok(Bits { value, width })
    }

    pub fn zeros(width: usize) -> Self {
        Bits { value: 0, width }
    }

    pub fn parse(text: &str) -> Option<Self> {
        if text.len() > Self::MAX_WIDTH {
            return None;
        }
        let mut value = 0u64;
        for c in text.chars() {
            value = (value << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return None,
                };
        }
        Some(Bits { value, width: text.len() })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Bit at 1-based position `pos`, counted from the left.
    pub fn get(&self, pos: usize) -> bool {
        debug_assert!(pos >= 1 && pos <= self.width);
        (self.value >> (self.width - pos)) & 1 == 1
    }

    /// Positions `1..=split` and `split+1..=width`.
    pub fn split_at(&self, split: usize) -> (Bits, Bits) {
        let right_width = self.width - split;
        let right = self.value & low_mask(right_width);
        (Bits { value: self.value >> right_width, width: split }, Bits { value: right, width: right_width })
    }

    pub fn concat(&self, right: &Bits) -> Bits {
        Bits { value: (self.value << right.width) | right.value, width: self.width + right.width }
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for pos in 1..=self.width {
            f.write_str(if self.get(pos) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub(crate) fn low_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Sorted set of distinct 1-based item indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
#[serde(transparent)]
pub struct ItemSet(Vec<usize>);

impl ItemSet {
    pub fn new(items: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut items: Vec<usize> = items.into_iter().collect();
        if items.contains(&0) {
            return contract("item indices are 1-based");
        }
        items.sort_unstable();
        let before = items.len();
        items.dedup();
        if items.len() != before {
            return contract("item indices must be distinct");
        }
        Ok(ItemSet(items))
    }

    pub fn empty() -> Self {
        ItemSet(Vec::new())
    }

    /// Parses `"1,3,4"`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return contract("empty item list");
        }
        let items = text
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| Error::Contract(format!("bad item index {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        ItemSet::new(items)
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    pub fn max_item(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn is_subset(&self, other: &ItemSet) -> bool {
        self.0.iter().all(|i| other.contains(*i))
    }

    pub fn is_disjoint(&self, other: &ItemSet) -> bool {
        self.0.iter().all(|i| !other.contains(*i))
    }

    pub fn union(&self, other: &ItemSet) -> ItemSet {
        let mut items = self.0.clone();
        items.extend(other.0.iter().copied());
        items.sort_unstable();
        items.dedup();
        ItemSet(items)
    }

    pub fn difference(&self, other: &ItemSet) -> ItemSet {
        ItemSet(self.0.iter().copied().filter(|i| !other.contains(*i)).collect())
    }

    /// Items `<= split` and items `> split`, both keeping global indices.
    pub fn split_at(&self, split: usize) -> (ItemSet, ItemSet) {
        let (left, right): (Vec<usize>, Vec<usize>) = self.0.iter().partition(|&&i| i <= split);
        (ItemSet(left), ItemSet(right))
    }

    /// All subsets with one item removed.
    pub fn drop_one(&self) -> impl Iterator<Item = ItemSet> + '_ {
        (0..self.0.len())
            .map(move |skip| ItemSet(self.0.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v).collect()))
    }

    /// Non-empty proper subsets, ordered by bitmask over the sorted items.
    pub fn proper_subsets(&self) -> Vec<ItemSet> {
        let m = self.0.len();
        if m < 2 {
            return Vec::new();
        }
        (1..(1u64 << m) - 1)
            .map(|mask| {
                ItemSet(self.0.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| *v).collect())
            })
            .collect()
    }
}

impl fmt::Display for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, item) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{item}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionDatabase {
    names: Vec<String>,
    rows: Vec<Bits>,
    original_count: usize,
}

impl TransactionDatabase {
    pub fn new(names: Vec<String>, rows: Vec<Bits>) -> Result<Self> {
        let k = names.len();
        if k == 0 || k > Bits::MAX_WIDTH {
            return contract(format!("item count must be in 1..={}", Bits::MAX_WIDTH));
        }
        if let Some(bad) = rows.iter().position(|r| r.width() != k) {
            return contract(format!("row {bad} does not have {k} bits"));
        }
        let original_count = rows.len();
        Ok(TransactionDatabase { names, rows, original_count })
    }

    /// Rows as bit strings, item names `I1..Ik`.
    pub fn from_rows(rows: &[&str]) -> Result<Self> {
        let parsed = rows
            .iter()
            .map(|r| Bits::parse(r).ok_or_else(|| Error::Contract(format!("bad row {r:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let k = parsed.first().map(Bits::width).unwrap_or(0);
        Self::new(default_names(k), parsed)
    }

    pub fn n_items(&self) -> usize {
        self.names.len()
    }

    pub fn n_transactions(&self) -> usize {
        self.rows.len()
    }

    pub fn original_count(&self) -> usize {
        self.original_count
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Bits] {
        &self.rows
    }

    /// Number of address qubits once padded: `log2` of the padded row count.
    pub fn address_bits(&self) -> usize {
        self.rows.len().max(1).next_power_of_two().trailing_zeros() as usize
    }

    pub fn is_padded(&self) -> bool {
        self.rows.len().is_power_of_two()
    }

    pub fn check_itemset(&self, z: &ItemSet) -> Result<()> {
        match z.max_item() {
            Some(m) if m > self.n_items() => contract(format!("item {m} out of range 1..={}", self.n_items())),
            _ => Ok(()),
        }
    }

    /// Whether non-padding row `j` contains every item of `z`.
    pub fn row_contains(&self, j: usize, z: &ItemSet) -> bool {
        let row = &self.rows[j];
        z.items().iter().all(|&i| row.get(i))
    }

    /// Every row permuted by `order` (row `i` of the result is row `order[i]`).
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.rows.len()];
        if order.len() != self.rows.len()
            || order.iter().any(|&i| i >= seen.len() || std::mem::replace(&mut seen[i], true))
        {
            return contract("row order is not a permutation");
        }
        let rows = order.iter().map(|&i| self.rows[i]).collect();
        Ok(TransactionDatabase { names: self.names.clone(), rows, original_count: self.original_count })
    }
}

pub(crate) fn default_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("I{i}")).collect()
}

/// Reads the CSV format (header of item names, then 0/1 cells) or the compact
/// format (one 0/1 string per line, no header).
pub fn parse_database(text: &str) -> Result<TransactionDatabase> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());

    let (first_no, first) = lines.next().ok_or(Error::Parse { line: 1, message: "empty input".into() })?;
    let compact = !first.contains(',') && first.chars().all(|c| c == '0' || c == '1');

    if compact {
        let k = first.len();
        if k > Bits::MAX_WIDTH {
            return Err(Error::Parse { line: first_no, message: format!("more than {} items", Bits::MAX_WIDTH) });
        }
        let mut rows = Vec::new();
        for (line, text) in std::iter::once((first_no, first)).chain(lines) {
            if text.len() != k {
                return Err(Error::Parse { line, message: format!("expected {k} cells, found {}", text.len()) });
            }
            let row =
                Bits::parse(text).ok_or_else(|| Error::Parse { line, message: format!("non-binary row {text:?}") })?;
            rows.push(row);
        }
        return TransactionDatabase::new(default_names(k), rows);
    }

    let names: Vec<String> = first.split(',').map(|s| s.trim().to_string()).collect();
    if names.iter().any(String::is_empty) {
        return Err(Error::Parse { line: first_no, message: "empty item name in header".into() });
    }
    if names.len() > Bits::MAX_WIDTH {
        return Err(Error::Parse { line: first_no, message: format!("more than {} items", Bits::MAX_WIDTH) });
    }
    let k = names.len();
    let mut rows = Vec::new();
    for (line, text) in lines {
        let cells: Vec<&str> = text.split(',').map(str::trim).collect();
        if cells.len() != k {
            return Err(Error::Parse { line, message: format!("expected {k} cells, found {}", cells.len()) });
        }
        let mut value = 0u64;
        for cell in cells {
            let bit = match cell {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::Parse { line, message: format!("non-binary cell {other:?}") }),
            };
            value = (value << 1) | bit;
        }
        rows.push(Bits { value, width: k });
    }
    TransactionDatabase::new(names, rows)
}

/// Appends all-zero rows up to the next power of two. `original_count` is kept.
pub fn pad_to_power_of_two(db: &TransactionDatabase) -> TransactionDatabase {
    let target = db.rows.len().max(1).next_power_of_two();
    let mut rows = db.rows.clone();
    rows.resize(target, Bits::zeros(db.n_items()));
    TransactionDatabase { names: db.names.clone(), rows, original_count: db.original_count }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Alice,
    Bob,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::Alice => Role::Bob,
            Role::Bob => Role::Alice,
        }
    }
}

/// One party's columns: items `1..=split` for Alice, `split+1..=k` for Bob.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionedView {
    role: Role,
    split: usize,
    n_items: usize,
    rows: Vec<Bits>,
    original_count: usize,
}

impl PartitionedView {
    pub fn role(&self) -> Role {
        self.role
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn rows(&self) -> &[Bits] {
        &self.rows
    }

    pub fn original_count(&self) -> usize {
        self.original_count
    }

    /// Width of each row held by this party.
    pub fn width(&self) -> usize {
        match self.role {
            Role::Alice => self.split,
            Role::Bob => self.n_items - self.split,
        }
    }

    /// Offset subtracted from a global item index to get a position in a row.
    pub fn item_offset(&self) -> usize {
        match self.role {
            Role::Alice => 0,
            Role::Bob => self.split,
        }
    }

    /// The part of `z` owned by this party.
    pub fn own_part(&self, z: &ItemSet) -> ItemSet {
        let (left, right) = z.split_at(self.split);
        match self.role {
            Role::Alice => left,
            Role::Bob => right,
        }
    }
}

pub fn vertical_partition(db: &TransactionDatabase, split: usize) -> Result<(PartitionedView, PartitionedView)> {
    let k = db.n_items();
    if split < 1 || split >= k {
        return contract(format!("split point {split} outside 1..{k}"));
    }
    let (left, right): (Vec<Bits>, Vec<Bits>) = db.rows.iter().map(|r| r.split_at(split)).unzip();
    let view = |role, rows| PartitionedView { role, split, n_items: k, rows, original_count: db.original_count };
    Ok((view(Role::Alice, left), view(Role::Bob, right)))
}

/// Row-wise concatenation of Alice's and Bob's views.
pub fn rejoin(alice: &PartitionedView, bob: &PartitionedView) -> Result<Vec<Bits>> {
    if alice.role != Role::Alice || bob.role != Role::Bob || alice.rows.len() != bob.rows.len() {
        return contract("views do not come from the same partition");
    }
    Ok(alice.rows.iter().zip(&bob.rows).map(|(a, b)| a.concat(b)).collect())
}

/// Exact support as `count / original_count`; padding rows never count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportValue {
    pub count: usize,
    pub total: usize,
}

impl SupportValue {
    pub fn as_f64(&self) -> f64 {
        self.count as f64 / self.total as f64
    }

    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.count as u64, self.total as u64)
    }

    /// Strictly above a floating threshold.
    pub fn exceeds(&self, threshold: f64) -> bool {
        self.as_f64() > threshold
    }
}

pub fn exact_support(db: &TransactionDatabase, z: &ItemSet) -> Result<SupportValue> {
    if z.is_empty() {
        return contract("support of the empty itemset is not defined here");
    }
    db.check_itemset(z)?;
    if db.original_count == 0 {
        return contract("database has no transactions");
    }
    let count = (0..db.original_count).filter(|&j| db.row_contains(j, z)).count();
    Ok(SupportValue { count, total: db.original_count })
}

pub fn exact_confidence(db: &TransactionDatabase, x: &ItemSet, y: &ItemSet) -> Result<Ratio<u64>> {
    if x.is_empty() || y.is_empty() {
        return contract("rule sides must be non-empty");
    }
    if !x.is_disjoint(y) {
        return contract(format!("antecedent {x} and consequent {y} overlap"));
    }
    let antecedent = exact_support(db, x)?;
    if antecedent.count == 0 {
        return contract(format!("antecedent {x} has zero support"));
    }
    let joint = exact_support(db, &x.union(y))?;
    Ok(joint.ratio() / antecedent.ratio())
}

/// `g_Z`/`f_Z`: 1 iff `x` has a 1 at every position of `part` (after
/// subtracting `offset`). The empty part is vacuously satisfied.
pub fn membership_flag(x: &Bits, part: &ItemSet, offset: usize) -> Result<bool> {
    let mask = membership_mask(x.width(), part, offset)?;
    Ok(x.value() & mask == mask)
}

/// Bit mask of the row positions named by `part`.
pub(crate) fn membership_mask(width: usize, part: &ItemSet, offset: usize) -> Result<u64> {
    let mut mask = 0u64;
    for &item in part.items() {
        let pos = item.checked_sub(offset).filter(|p| *p >= 1 && *p <= width);
        match pos {
            Some(p) => mask |= 1u64 << (width - p),
            None => return contract(format!("item {item} (offset {offset}) outside a {width}-bit row")),
        }
    }
    Ok(mask)
}
