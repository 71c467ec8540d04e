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

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed database text. Lines are 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The simulated state drifted away from unit norm.
    #[error("internal consistency: {0}")]
    Internal(String),

    #[error("transcript accounting: {0}")]
    Accounting(String),

    /// The antecedent support estimate does not clear its own error bound.
    #[error("antecedent too rare: support estimate {estimate} is within its error bound {bound}")]
    AntecedentTooRare { estimate: f64, bound: f64 },

    /// A support estimate needed downstream was never accepted by both parties.
    #[error("support estimate not accepted after {rounds} rounds")]
    NotAccepted { rounds: usize },

    #[error("no key candidate reproduces the observed ciphertexts")]
    NoCandidate,
}

pub(crate) fn contract<T>(message: impl Into<String>) -> Result<T> {
    Err(Error::Contract(message.into()))
}
