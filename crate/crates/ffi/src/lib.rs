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

//! C ABI over the `qpdm` simulator.
//!
//! Every fallible function returns a [`QpdmStatus`]. On failure the message
//! is available from [`qpdm_last_error`] on the same thread until the next
//! call. Databases are opaque handles released with [`qpdm_database_free`];
//! strings returned by the library are released with [`qpdm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use qpdm::classical_baseline::{commutative_pow, exhaustive_key_attack, ClassicalKey, IndexSet};
use qpdm::counting::CountingConfig;
use qpdm::dataset::{exact_support, parse_database, ItemSet, TransactionDatabase};
use qpdm::miner::{mine, QuantumEstimator, SupportEstimator};
use qpdm::protocol::setup_parties;
use qpdm::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpdmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Contract = 4,
    Internal = 5,
    Accounting = 6,
    AntecedentTooRare = 7,
    NotAccepted = 8,
    NoCandidate = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Opaque transaction database.
pub struct QpdmDatabase {
    db: TransactionDatabase,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QpdmSupportEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub s1: f64,
    pub s2: f64,
    pub rounds_used: usize,
    pub qubits_sent: usize,
    pub accepted: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> QpdmStatus {
    match e {
        Error::Parse { .. } => QpdmStatus::Parse,
        Error::Contract(_) => QpdmStatus::Contract,
        Error::Internal(_) => QpdmStatus::Internal,
        Error::Accounting(_) => QpdmStatus::Accounting,
        Error::AntecedentTooRare { .. } => QpdmStatus::AntecedentTooRare,
        Error::NotAccepted { .. } => QpdmStatus::NotAccepted,
        Error::NoCandidate => QpdmStatus::NoCandidate,
    }
}

struct Fail(QpdmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QpdmStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, recording any error or panic as the thread's last error.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> QpdmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QpdmStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside qpdm");
            QpdmStatus::Panic
        }
    }
}

unsafe fn database<'a>(db: *const QpdmDatabase) -> Result<&'a TransactionDatabase, Fail> {
    db.as_ref().map(|h| &h.db).ok_or_else(|| null("database"))
}

unsafe fn array<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(data, len))
}

unsafe fn itemset(items: *const usize, len: usize) -> Result<ItemSet, Fail> {
    Ok(ItemSet::new(array(items, len, "items")?.iter().copied())?)
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from this thread.
#[no_mangle]
pub extern "C" fn qpdm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses database text (CSV with header or one 0/1 string per line).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qpdm_database_parse(text: *const c_char, out: *mut *mut QpdmDatabase) -> QpdmStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(text).to_str().map_err(|e| Fail(QpdmStatus::InvalidUtf8, e.to_string()))?;
        let db = parse_database(text)?;
        *out = Box::into_raw(Box::new(QpdmDatabase { db }));
        Ok(())
    })
}

/// # Safety
/// `db` must come from [`qpdm_database_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qpdm_database_free(db: *mut QpdmDatabase) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// Number of items, or 0 for a null handle.
///
/// # Safety
/// `db` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qpdm_database_n_items(db: *const QpdmDatabase) -> usize {
    db.as_ref().map_or(0, |h| h.db.n_items())
}

/// Number of transactions before padding, or 0 for a null handle.
///
/// # Safety
/// `db` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qpdm_database_n_transactions(db: *const QpdmDatabase) -> usize {
    db.as_ref().map_or(0, |h| h.db.original_count())
}

/// Exact support of the 1-based `items`.
///
/// # Safety
/// `items` must point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpdm_exact_support(
    db: *const QpdmDatabase,
    items: *const usize,
    len: usize,
    out: *mut f64,
) -> QpdmStatus {
    guard(|| {
        let db = database(db)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = exact_support(db, &itemset(items, len)?)?.as_f64();
        Ok(())
    })
}

/// Two-party quantum support estimate with bit-flip keys, agreement band
/// 0.01 and at most 16 rounds. Alice holds items `1..=split`.
///
/// # Safety
/// `items` must point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpdm_estimate_support(
    db: *const QpdmDatabase,
    split: usize,
    items: *const usize,
    len: usize,
    p: usize,
    s: f64,
    seed: u64,
    out: *mut QpdmSupportEstimate,
) -> QpdmStatus {
    guard(|| {
        let db = database(db)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let z = itemset(items, len)?;
        db.check_itemset(&z)?;
        let (alice, bob) = setup_parties(db, split)?;
        let mut estimator = QuantumEstimator::new(&alice, &bob, CountingConfig::new(p, s)?, seed)?;
        let est = estimator.estimate(&z)?;
        *out = QpdmSupportEstimate {
            value: est.value,
            error_bound: est.error_bound,
            s1: est.s1,
            s2: est.s2,
            rounds_used: est.rounds_used,
            qubits_sent: est.qubits_sent,
            accepted: est.accepted,
        };
        Ok(())
    })
}

/// Full mining run; writes a JSON report that must be released with
/// [`qpdm_string_free`].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpdm_mine_json(
    db: *const QpdmDatabase,
    split: usize,
    s: f64,
    c: f64,
    p: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> QpdmStatus {
    guard(|| {
        let db = database(db)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(c > 0.0 && c <= 1.0) {
            return Err(Fail(QpdmStatus::Contract, format!("confidence threshold {c} outside (0, 1]")));
        }
        let (alice, bob) = setup_parties(db, split)?;
        let mut estimator = QuantumEstimator::new(&alice, &bob, CountingConfig::new(p, s)?, seed)?;
        let report = mine(db.n_items(), s, c, &mut estimator)?;
        let json = serde_json::to_string(&report).map_err(|e| Fail(QpdmStatus::Internal, e.to_string()))?;
        *out = CString::new(json).map_err(|e| Fail(QpdmStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn qpdm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `x^e mod p` under a validated commutative key.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpdm_classical_pow(x: u64, p: u64, e: u64, out: *mut u64) -> QpdmStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = commutative_pow(x, &ClassicalKey::new(p, e)?)?;
        Ok(())
    })
}

/// Exhaustive exponent search. Writes up to `capacity` candidates and the
/// full count to `count`; returns `BufferTooSmall` when they do not fit.
///
/// # Safety
/// `singly`/`doubly` must point to their lengths in values, `candidates` to
/// `capacity` writable values, and `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpdm_key_attack(
    p: u64,
    singly: *const u64,
    singly_len: usize,
    doubly: *const u64,
    doubly_len: usize,
    candidates: *mut u64,
    capacity: usize,
    count: *mut usize,
) -> QpdmStatus {
    guard(|| {
        let count = count.as_mut().ok_or_else(|| null("count"))?;
        let singly: IndexSet = array(singly, singly_len, "singly")?.iter().copied().collect();
        let doubly: IndexSet = array(doubly, doubly_len, "doubly")?.iter().copied().collect();
        let found = exhaustive_key_attack(p, &singly, &doubly)?;
        *count = found.len();
        if found.len() > capacity {
            return Err(Fail(QpdmStatus::BufferTooSmall, format!("{} candidates, capacity {capacity}", found.len())));
        }
        if !found.is_empty() {
            if candidates.is_null() {
                return Err(null("candidates"));
            }
            slice::from_raw_parts_mut(candidates, found.len()).copy_from_slice(&found);
        }
        Ok(())
    })
}
