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

//! Simulator for two-party privacy-preserving association rule mining over a
//! vertically partitioned database, where the support of an itemset is
//! obtained by quantum counting on a Grover oracle that the two parties
//! evaluate jointly through QRAM queries. A classical commutative-encryption
//! protocol is included for comparison.

pub mod classical_baseline;
pub mod cli;
pub mod counting;
pub mod dataset;
pub mod error;
pub mod miner;
pub mod protocol;
pub mod qsim;

pub use error::{Error, Result};
