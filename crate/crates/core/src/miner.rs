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

//! Level-wise Apriori over an injected support estimator, rule generation,
//! and brute-force mining as ground truth.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::counting::{confidence_bounds, joint_support, CountingConfig, SupportEstimate};
use crate::dataset::{exact_support, ItemSet, TransactionDatabase};
use crate::error::{contract, Result};
use crate::protocol::PartyState;

/// Largest item count [`exact_mine`] will enumerate.
pub const EXACT_MINE_MAX_ITEMS: usize = 20;

pub trait SupportEstimator {
    fn estimate(&mut self, z: &ItemSet) -> Result<SupportEstimate>;

    /// Estimates above `s - margin` count as frequent.
    fn decision_margin(&self, s: f64) -> f64;

    /// Qubits exchanged so far.
    fn qubits_sent(&self) -> usize {
        0
    }
}

pub struct ExactEstimator<'a> {
    db: &'a TransactionDatabase,
}

impl<'a> ExactEstimator<'a> {
    pub fn new(db: &'a TransactionDatabase) -> Self {
        ExactEstimator { db }
    }
}

impl SupportEstimator for ExactEstimator<'_> {
    fn estimate(&mut self, z: &ItemSet) -> Result<SupportEstimate> {
        Ok(SupportEstimate::exact(exact_support(self.db, z)?.as_f64()))
    }

    fn decision_margin(&self, _s: f64) -> f64 {
        0.0
    }
}

/// Two-party quantum estimates. Each itemset gets its own random stream
/// derived from `(seed, itemset)`, so results do not depend on the order in
/// which candidates are evaluated.
pub struct QuantumEstimator<'a> {
    alice: &'a PartyState,
    bob: &'a PartyState,
    config: CountingConfig,
    seed: u64,
    qubits: usize,
}

impl<'a> QuantumEstimator<'a> {
    pub fn new(alice: &'a PartyState, bob: &'a PartyState, config: CountingConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(QuantumEstimator { alice, bob, config, seed, qubits: 0 })
    }
}

impl SupportEstimator for QuantumEstimator<'_> {
    fn estimate(&mut self, z: &ItemSet) -> Result<SupportEstimate> {
        let mut rng = ChaCha8Rng::seed_from_u64(itemset_seed(self.seed, z));
        let est = joint_support(self.alice, self.bob, z, &self.config, &mut rng)?;
        self.qubits += est.qubits_sent;
        Ok(est)
    }

    fn decision_margin(&self, _s: f64) -> f64 {
        self.config.agreement_width()
    }

    fn qubits_sent(&self) -> usize {
        self.qubits
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn itemset_seed(seed: u64, z: &ItemSet) -> u64 {
    z.items().iter().fold(splitmix64(seed), |acc, &i| splitmix64(acc ^ i as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequentItemset {
    pub items: ItemSet,
    pub estimate: f64,
    pub error_bound: f64,
    pub rounds: usize,
    /// Estimate within the decision margin of the threshold.
    pub borderline: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FrequentLevels {
    /// `levels[m - 1]` holds the frequent `m`-itemsets in lexicographic order.
    pub levels: Vec<Vec<FrequentItemset>>,
    /// Candidates whose estimate was never accepted.
    pub undetermined: Vec<ItemSet>,
    pub total_rounds: usize,
}

impl FrequentLevels {
    pub fn itemsets(&self) -> impl Iterator<Item = &FrequentItemset> {
        self.levels.iter().flatten()
    }

    pub fn item_sets(&self) -> BTreeSet<ItemSet> {
        self.itemsets().map(|f| f.items.clone()).collect()
    }
}

pub fn apriori_frequent(n_items: usize, s: f64, estimator: &mut dyn SupportEstimator) -> Result<FrequentLevels> {
    if s.is_nan() || s < 0.0 {
        return contract(format!("support threshold {s} is negative"));
    }
    let margin = estimator.decision_margin(s);
    let mut out = FrequentLevels::default();
    let mut candidates: Vec<ItemSet> = (1..=n_items).map(|i| ItemSet::new([i])).collect::<Result<_>>()?;

    while !candidates.is_empty() {
        let mut level = Vec::new();
        for z in candidates {
            let est = estimator.estimate(&z)?;
            out.total_rounds += est.rounds_used;
            if !est.accepted {
                out.undetermined.push(z);
                continue;
            }
            if est.value > s - margin {
                level.push(FrequentItemset {
                    borderline: margin > 0.0 && (est.value - s).abs() <= margin,
                    items: z,
                    estimate: est.value,
                    error_bound: est.error_bound,
                    rounds: est.rounds_used,
                });
            }
        }
        if level.is_empty() {
            break;
        }
        candidates = join_candidates(&level);
        out.levels.push(level);
    }
    Ok(out)
}

/// Joins itemsets sharing all but their last item, dropping any candidate
/// with an infrequent subset.
fn join_candidates(level: &[FrequentItemset]) -> Vec<ItemSet> {
    let known: BTreeSet<&ItemSet> = level.iter().map(|f| &f.items).collect();
    let mut out = Vec::new();
    for (i, a) in level.iter().enumerate() {
        let a = a.items.items();
        for b in &level[i + 1..] {
            let b = b.items.items();
            let m = a.len();
            if a[..m - 1] != b[..m - 1] {
                continue;
            }
            let joined = ItemSet::new(a.iter().copied().chain(std::iter::once(b[m - 1]))).expect("distinct items");
            if joined.drop_one().all(|sub| known.contains(&sub)) {
                out.push(joined);
            }
        }
    }
    out.sort();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationRule {
    #[serde(rename = "X")]
    pub antecedent: ItemSet,
    #[serde(rename = "Y")]
    pub consequent: ItemSet,
    pub support: f64,
    pub confidence: f64,
    pub support_error_bound: f64,
    pub confidence_error_bound: f64,
}

/// Every split `X => Z \ X` of every frequent `Z` with confidence above `c`,
/// ordered by `(|Z|, Z, X)`. Antecedent supports come from `frequent` when
/// present and from `estimator` otherwise.
pub fn generate_rules(
    frequent: &FrequentLevels,
    c: f64,
    estimator: &mut dyn SupportEstimator,
) -> Result<Vec<AssociationRule>> {
    let mut known: HashMap<ItemSet, SupportEstimate> = frequent
        .itemsets()
        .map(|f| {
            let mut est = SupportEstimate::exact(f.estimate);
            est.error_bound = f.error_bound;
            (f.items.clone(), est)
        })
        .collect();

    let mut rules = Vec::new();
    for z in frequent.levels.iter().skip(1).flatten() {
        let joint = known[&z.items].clone();
        let mut antecedents = z.items.proper_subsets();
        antecedents.sort();
        for x in antecedents {
            let ante = match known.get(&x) {
                Some(e) => e.clone(),
                None => {
                    let e = estimator.estimate(&x)?;
                    known.insert(x.clone(), e.clone());
                    e
                }
            };
            if !ante.accepted || ante.value <= 0.0 {
                continue;
            }
            let confidence = joint.value / ante.value;
            if confidence > c {
                let (propagated, _) = confidence_bounds(&joint, &ante);
                rules.push(AssociationRule {
                    consequent: z.items.difference(&x),
                    antecedent: x,
                    support: joint.value,
                    confidence,
                    support_error_bound: joint.error_bound,
                    confidence_error_bound: propagated,
                });
            }
        }
    }
    Ok(rules)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonotonicityWarning {
    pub subset: ItemSet,
    pub superset: ItemSet,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Communication {
    pub total_qubits: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExactDiff {
    /// Frequent under exact counting, missing from the report.
    pub missing_itemsets: Vec<ItemSet>,
    /// Reported but not frequent under exact counting.
    pub extra_itemsets: Vec<ItemSet>,
    pub missing_rules: Vec<(ItemSet, ItemSet)>,
    pub extra_rules: Vec<(ItemSet, ItemSet)>,
    /// Largest `|estimate - exact|` over the reported itemsets.
    pub max_abs_support_error: f64,
}

impl ExactDiff {
    pub fn is_match(&self) -> bool {
        self.missing_itemsets.is_empty()
            && self.extra_itemsets.is_empty()
            && self.missing_rules.is_empty()
            && self.extra_rules.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MiningReport {
    pub frequent: Vec<FrequentItemset>,
    pub undetermined: Vec<ItemSet>,
    pub rules: Vec<AssociationRule>,
    pub total_rounds: usize,
    pub communication: Communication,
    pub monotonicity_warnings: Vec<MonotonicityWarning>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_diff: Option<ExactDiff>,
}

impl MiningReport {
    pub fn itemsets(&self) -> BTreeSet<ItemSet> {
        self.frequent.iter().map(|f| f.items.clone()).collect()
    }

    pub fn rule_pairs(&self) -> BTreeSet<(ItemSet, ItemSet)> {
        self.rules.iter().map(|r| (r.antecedent.clone(), r.consequent.clone())).collect()
    }
}

/// Apriori plus rule generation over `estimator`.
pub fn mine(n_items: usize, s: f64, c: f64, estimator: &mut dyn SupportEstimator) -> Result<MiningReport> {
    let levels = apriori_frequent(n_items, s, estimator)?;
    let rules = generate_rules(&levels, c, estimator)?;
    let estimates: BTreeMap<&ItemSet, &FrequentItemset> = levels.itemsets().map(|f| (&f.items, f)).collect();
    let mut warnings = Vec::new();
    for f in levels.itemsets().filter(|f| f.items.len() > 1) {
        for sub in f.items.drop_one() {
            if let Some(parent) = estimates.get(&sub) {
                if f.estimate > parent.estimate + f.error_bound + parent.error_bound {
                    warnings.push(MonotonicityWarning { subset: sub, superset: f.items.clone() });
                }
            }
        }
    }
    Ok(MiningReport {
        frequent: levels.itemsets().cloned().collect(),
        undetermined: levels.undetermined.clone(),
        rules,
        total_rounds: levels.total_rounds,
        communication: Communication { total_qubits: estimator.qubits_sent() },
        monotonicity_warnings: warnings,
        exact_diff: None,
    })
}

/// Brute force over all `2^k - 1` itemsets.
pub fn exact_mine(db: &TransactionDatabase, s: f64, c: f64) -> Result<MiningReport> {
    let k = db.n_items();
    if k > EXACT_MINE_MAX_ITEMS {
        return contract(format!(
            "exact mining enumerates 2^{k} itemsets; at most {EXACT_MINE_MAX_ITEMS} items allowed"
        ));
    }
    if db.original_count() == 0 {
        return contract("database has no transactions");
    }
    let rows = &db.rows()[..db.original_count()];
    let total = db.original_count() as f64;
    let mut levels: Vec<Vec<FrequentItemset>> = vec![Vec::new(); k];
    for mask in 1u64..1 << k {
        // item i sits at bit k - i of a row
        let row_mask = (1..=k).filter(|i| mask >> (i - 1) & 1 == 1).fold(0u64, |m, i| m | 1 << (k - i));
        let count = rows.iter().filter(|r| r.value() & row_mask == row_mask).count();
        let value = count as f64 / total;
        if value > s {
            let items = ItemSet::new((1..=k).filter(|i| mask >> (i - 1) & 1 == 1))?;
            levels[items.len() - 1].push(FrequentItemset {
                items,
                estimate: value,
                error_bound: 0.0,
                rounds: 0,
                borderline: false,
            });
        }
    }
    while levels.last().is_some_and(Vec::is_empty) {
        levels.pop();
    }
    for level in &mut levels {
        level.sort_by(|a, b| a.items.cmp(&b.items));
    }
    let frequent = FrequentLevels { levels, undetermined: Vec::new(), total_rounds: 0 };
    let rules = generate_rules(&frequent, c, &mut ExactEstimator::new(db))?;
    Ok(MiningReport { frequent: frequent.itemsets().cloned().collect(), rules, ..MiningReport::default() })
}

/// Set differences between `report` and exact mining at the same thresholds.
pub fn compare_with_exact(report: &MiningReport, db: &TransactionDatabase, s: f64, c: f64) -> Result<ExactDiff> {
    let exact = exact_mine(db, s, c)?;
    let (got, want) = (report.itemsets(), exact.itemsets());
    let (got_rules, want_rules) = (report.rule_pairs(), exact.rule_pairs());
    let mut max_err: f64 = 0.0;
    for f in &report.frequent {
        max_err = max_err.max((f.estimate - exact_support(db, &f.items)?.as_f64()).abs());
    }
    Ok(ExactDiff {
        missing_itemsets: want.difference(&got).cloned().collect(),
        extra_itemsets: got.difference(&want).cloned().collect(),
        missing_rules: want_rules.difference(&got_rules).cloned().collect(),
        extra_rules: got_rules.difference(&want_rules).cloned().collect(),
        max_abs_support_error: max_err,
    })
}
