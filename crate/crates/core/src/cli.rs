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

//! The `qpdm` command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit status.
//!
//! | status | meaning |
//! |---|---|
//! | 0 | success |
//! | 2 | a support estimate was not accepted within `--max-rounds` |
//! | 64 | bad flags or flag values |
//! | 65 | malformed or unusable data |
//! | 66 | input or output file error |
//! | 70 | internal consistency failure |

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::classical_baseline::{
    classical_support, commutative_pow, encrypt_set, exhaustive_key_attack, party_index_set, prime_above,
    sample_classical_key, BitLog, ClassicalKey, IndexSet,
};
use crate::counting::{joint_support_with_transcript, CountingConfig, DEFAULT_AGREEMENT_BAND, DEFAULT_MAX_ROUNDS};
use crate::dataset::{exact_support, parse_database, ItemSet, TransactionDatabase};
use crate::error::Error;
use crate::miner::{compare_with_exact, mine, QuantumEstimator};
use crate::protocol::{setup_parties, transcript_total, KeyFamily, Transcript, TransferEvent};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_ACCEPTED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_FILE: i32 = 66;
pub const EXIT_INTERNAL: i32 = 70;

#[derive(Debug, Parser)]
#[command(name = "qpdm", version, about = "Two-party quantum private association rule mining simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the joint support of one itemset.
    Estimate {
        #[command(flatten)]
        run: RunConfig,
        /// Comma-separated 1-based item indices.
        #[arg(long)]
        items: String,
        /// Include every qubit transfer in the report.
        #[arg(long)]
        transcript_dump: bool,
    },
    /// Mine frequent itemsets and association rules.
    Mine {
        #[command(flatten)]
        run: RunConfig,
        /// Confidence threshold.
        #[arg(long)]
        c: f64,
    },
    /// Compare quantum and classical communication for one itemset.
    Compare {
        #[command(flatten)]
        run: RunConfig,
        #[arg(long)]
        items: String,
        /// Prime modulus for the classical protocol; defaults to the smallest
        /// prime above the transaction count.
        #[arg(long)]
        classical_p: Option<u64>,
        #[arg(long)]
        transcript_dump: bool,
    },
    /// Recover a commutative-cipher exponent by exhaustive search.
    AttackDemo {
        #[arg(long)]
        p: u64,
        #[arg(long = "eA")]
        e_a: u64,
        #[arg(long = "eB")]
        e_b: u64,
        /// Comma-separated index values in 1..p.
        #[arg(long = "S1")]
        s1: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here (atomically) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reproducible mode: a seed is required and timing fields are omitted.
    #[arg(long)]
    pub ci: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Database file (CSV with header, or one 0/1 string per line).
    #[arg(long)]
    pub db: PathBuf,
    /// Alice holds items 1..=split, Bob the rest. Defaults to half the items.
    #[arg(long)]
    pub split: Option<usize>,
    /// Support threshold.
    #[arg(long, default_value_t = 0.25)]
    pub s: f64,
    /// Counting register width. Defaults to ceil(log2(2000 / s)).
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, env = "QPDM_SEED")]
    pub seed: Option<u64>,
    #[arg(long, default_value = "bitflip")]
    pub enc: KeyFamily,
    #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
    pub max_rounds: usize,
    /// Agreement half-width as a multiple of s.
    #[arg(long, default_value_t = DEFAULT_AGREEMENT_BAND)]
    pub band: f64,
    /// Also compute exact values and report the differences.
    #[arg(long)]
    pub with_exact_oracle: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    File(String),
    Internal(String),
}

impl Failure {
    fn status(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::File(_) => EXIT_FILE,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::File(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Contract(_) => Failure::Usage(msg),
            Error::Parse { .. } | Error::AntecedentTooRare { .. } | Error::NotAccepted { .. } | Error::NoCandidate => {
                Failure::Data(msg)
            }
            Error::Internal(_) | Error::Accounting(_) => Failure::Internal(msg),
        }
    }
}

/// A finished report: rendered text plus the status to exit with.
struct Outcome {
    text: String,
    status: i32,
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let out_path = match &cli.command {
        Command::Estimate { run, .. } | Command::Mine { run, .. } | Command::Compare { run, .. } => {
            run.output.out.clone()
        }
        Command::AttackDemo { output, .. } => output.out.clone(),
    };
    let result = execute(cli.command, stderr).and_then(|outcome| {
        match &out_path {
            Some(path) => write_atomic(path, &outcome.text)
                .map_err(|e| Failure::File(format!("cannot write {}: {e}", path.display())))?,
            None => stdout.write_all(outcome.text.as_bytes()).map_err(|e| Failure::File(e.to_string()))?,
        }
        Ok(outcome.status)
    });
    match result {
        Ok(status) => status,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.status()
        }
    }
}

fn execute(command: Command, stderr: &mut dyn Write) -> Result<Outcome, Failure> {
    match command {
        Command::Estimate { run, items, transcript_dump } => cmd_estimate(&run, &items, transcript_dump, stderr),
        Command::Mine { run, c } => cmd_mine(&run, c, stderr),
        Command::Compare { run, items, classical_p, transcript_dump } => {
            cmd_compare(&run, &items, classical_p, transcript_dump)
        }
        Command::AttackDemo { p, e_a, e_b, s1, output } => cmd_attack_demo(p, e_a, e_b, &s1, &output),
    }
}

/// Writes through a sibling temporary file and a rename, so a failed run never
/// leaves a truncated report behind.
pub fn write_atomic(path: &Path, text: &str) -> io::Result<()> {
    let name =
        path.file_name().ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = fs::write(&tmp, text).and_then(|()| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

struct Loaded {
    db: TransactionDatabase,
    split: usize,
    config: CountingConfig,
    seed: u64,
}

impl RunConfig {
    fn load(&self) -> Result<Loaded, Failure> {
        let seed = resolve_seed(self.seed, self.output.ci)?;
        let mut config = match self.p {
            Some(p) => CountingConfig::new(p, self.s)?,
            None => CountingConfig::for_threshold(self.s)?,
        };
        config.agreement_band = self.band;
        config.max_rounds = self.max_rounds;
        config.key_family = self.enc;
        config.validate()?;

        let text = fs::read_to_string(&self.db)
            .map_err(|e| Failure::File(format!("cannot read {}: {e}", self.db.display())))?;
        let db = parse_database(&text)?;
        if db.n_items() < 2 {
            return Err(Failure::Data("two parties need at least two items".into()));
        }
        let split = self.split.unwrap_or(db.n_items() / 2);
        Ok(Loaded { db, split, config, seed })
    }
}

fn resolve_seed(seed: Option<u64>, ci: bool) -> Result<u64, Failure> {
    match seed {
        Some(seed) => Ok(seed),
        None if ci => Err(Failure::Usage("--ci requires --seed or QPDM_SEED".into())),
        None => Ok(rand::random()),
    }
}

fn parse_items(text: &str, db: &TransactionDatabase) -> Result<ItemSet, Failure> {
    let z = ItemSet::parse(text)?;
    db.check_itemset(&z)?;
    Ok(z)
}

fn warn_if_half(stderr: &mut dyn Write, z: &ItemSet, exact: f64) {
    if exact >= 0.5 {
        let _ = writeln!(
            stderr,
            "warning: exact support of {z} is {exact}; counting cannot tell a support from its complement above 1/2"
        );
    }
}

fn status_for(accepted: bool) -> i32 {
    if accepted {
        EXIT_OK
    } else {
        EXIT_NOT_ACCEPTED
    }
}

#[derive(Serialize)]
struct EstimateReport {
    itemset: ItemSet,
    estimate: f64,
    error_bound: f64,
    rounds: usize,
    accepted: bool,
    qubits_sent: usize,
    s1: f64,
    s2: f64,
    p: usize,
    key_family: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    abs_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transcript: Option<Vec<TransferEvent>>,
}

fn cmd_estimate_value(
    run: &RunConfig,
    items: &str,
    transcript_dump: bool,
    stderr: &mut dyn Write,
) -> Result<(Value, bool), Failure> {
    let loaded = run.load()?;
    let z = parse_items(items, &loaded.db)?;
    let (alice, bob) = setup_parties(&loaded.db, loaded.split)?;
    let mut rng = ChaCha8Rng::seed_from_u64(loaded.seed);
    let mut transcript = Transcript::new();
    let est = joint_support_with_transcript(&alice, &bob, &z, &loaded.config, &mut rng, &mut transcript)?;
    transcript_total(&transcript)?;

    let exact = if run.with_exact_oracle {
        let exact = exact_support(&loaded.db, &z)?.as_f64();
        warn_if_half(stderr, &z, exact);
        Some(exact)
    } else {
        None
    };
    let report = EstimateReport {
        itemset: z,
        estimate: est.value,
        error_bound: est.error_bound,
        rounds: est.rounds_used,
        accepted: est.accepted,
        qubits_sent: est.qubits_sent,
        s1: est.s1,
        s2: est.s2,
        p: loaded.config.p,
        key_family: loaded.config.key_family.to_string(),
        seed: loaded.seed,
        exact,
        abs_error: exact.map(|e| (est.value - e).abs()),
        transcript: transcript_dump.then(|| transcript.events().to_vec()),
    };
    Ok((to_value(&report)?, est.accepted))
}

fn cmd_estimate(
    run: &RunConfig,
    items: &str,
    transcript_dump: bool,
    stderr: &mut dyn Write,
) -> Result<Outcome, Failure> {
    let (value, accepted) = cmd_estimate_value(run, items, transcript_dump, stderr)?;
    Ok(Outcome { text: render(&value, run.output.format, None), status: status_for(accepted) })
}

#[derive(Serialize)]
struct MineOutput<'a> {
    #[serde(flatten)]
    report: &'a crate::miner::MiningReport,
    s: f64,
    c: f64,
    p: usize,
    key_family: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_seconds: Option<f64>,
}

const RULE_COLUMNS: [&str; 6] = ["X", "Y", "support", "confidence", "support_error_bound", "confidence_error_bound"];

fn cmd_mine(run: &RunConfig, c: f64, stderr: &mut dyn Write) -> Result<Outcome, Failure> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Failure::Usage(format!("confidence threshold {c} outside (0, 1]")));
    }
    let started = Instant::now();
    let loaded = run.load()?;
    let (alice, bob) = setup_parties(&loaded.db, loaded.split)?;
    let mut estimator = QuantumEstimator::new(&alice, &bob, loaded.config.clone(), loaded.seed)?;
    let mut report = mine(loaded.db.n_items(), run.s, c, &mut estimator)?;
    if run.with_exact_oracle {
        for f in &report.frequent {
            warn_if_half(stderr, &f.items, exact_support(&loaded.db, &f.items)?.as_f64());
        }
        report.exact_diff = Some(compare_with_exact(&report, &loaded.db, run.s, c)?);
    }
    let output = MineOutput {
        report: &report,
        s: run.s,
        c,
        p: loaded.config.p,
        key_family: loaded.config.key_family.to_string(),
        seed: loaded.seed,
        elapsed_seconds: (!run.output.ci).then(|| started.elapsed().as_secs_f64()),
    };
    let value = to_value(&output)?;
    let text = render(&value, run.output.format, Some(("rules", &RULE_COLUMNS)));
    Ok(Outcome { text, status: status_for(report.undetermined.is_empty()) })
}

#[derive(Serialize)]
struct QuantumCost {
    estimate: f64,
    error_bound: f64,
    rounds: usize,
    accepted: bool,
    p: usize,
    address_bits: usize,
    counts: usize,
    qubits_per_call: usize,
    qubits_per_count: usize,
    qubits_sent: usize,
}

#[derive(Serialize)]
struct ClassicalCost {
    support: f64,
    prime: u64,
    s1_size: usize,
    s2_size: usize,
    bits_sent: usize,
}

#[derive(Serialize)]
struct CompareReport {
    itemset: ItemSet,
    exact_support: f64,
    n_transactions: usize,
    seed: u64,
    quantum: QuantumCost,
    classical: ClassicalCost,
    #[serde(skip_serializing_if = "Option::is_none")]
    transcript: Option<Vec<TransferEvent>>,
}

fn cmd_compare(
    run: &RunConfig,
    items: &str,
    classical_p: Option<u64>,
    transcript_dump: bool,
) -> Result<Outcome, Failure> {
    let loaded = run.load()?;
    let z = parse_items(items, &loaded.db)?;
    let (alice, bob) = setup_parties(&loaded.db, loaded.split)?;
    let mut rng = ChaCha8Rng::seed_from_u64(loaded.seed);

    let mut transcript = Transcript::new();
    let est = joint_support_with_transcript(&alice, &bob, &z, &loaded.config, &mut rng, &mut transcript)?;
    let (total, per_call) = transcript_total(&transcript)?;
    let counts = 2 * est.rounds_used;

    let n = loaded.db.original_count();
    let prime = classical_p.unwrap_or_else(|| prime_above(n as u64));
    let key_a = sample_classical_key(prime, &mut rng)?;
    let key_b = sample_classical_key(prime, &mut rng)?;
    let s1 = party_index_set(alice.view(), &z)?;
    let s2 = party_index_set(bob.view(), &z)?;
    let mut log = BitLog::default();
    let classical = classical_support(&s1, &s2, &key_a, &key_b, n, &mut log)?;

    let report = CompareReport {
        itemset: z.clone(),
        exact_support: exact_support(&loaded.db, &z)?.as_f64(),
        n_transactions: n,
        seed: loaded.seed,
        quantum: QuantumCost {
            estimate: est.value,
            error_bound: est.error_bound,
            rounds: est.rounds_used,
            accepted: est.accepted,
            p: loaded.config.p,
            address_bits: alice.address_bits(),
            counts,
            qubits_per_call: per_call,
            qubits_per_count: total / counts,
            qubits_sent: total,
        },
        classical: ClassicalCost {
            support: classical,
            prime,
            s1_size: s1.len(),
            s2_size: s2.len(),
            bits_sent: log.total_bits(),
        },
        transcript: transcript_dump.then(|| transcript.events().to_vec()),
    };
    Ok(Outcome { text: render(&to_value(&report)?, run.output.format, None), status: status_for(est.accepted) })
}

#[derive(Serialize)]
struct AttackReport {
    p: u64,
    singly: IndexSet,
    doubly: IndexSet,
    candidates: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed: Option<f64>,
}

fn cmd_attack_demo(p: u64, e_a: u64, e_b: u64, s1: &str, output: &OutputArgs) -> Result<Outcome, Failure> {
    let key_a = ClassicalKey::new(p, e_a)?;
    let key_b = ClassicalKey::new(p, e_b)?;
    let raw = s1
        .split(',')
        .map(|v| v.trim().parse::<u64>().map_err(|_| Failure::Usage(format!("bad index value {v:?}"))))
        .collect::<Result<IndexSet, _>>()?;
    for &x in &raw {
        commutative_pow(x, &key_a)?;
    }
    let singly = encrypt_set(&raw, &key_a)?;
    let doubly = encrypt_set(&singly, &key_b)?;
    let started = Instant::now();
    let candidates = exhaustive_key_attack(p, &singly, &doubly)?;
    let elapsed = (!output.ci).then(|| started.elapsed().as_secs_f64());
    let report = AttackReport { p, singly, doubly, candidates, elapsed };
    Ok(Outcome { text: render(&to_value(&report)?, output.format, None), status: EXIT_OK })
}

fn to_value<T: Serialize>(report: &T) -> Result<Value, Failure> {
    serde_json::to_value(report).map_err(|e| Failure::Internal(e.to_string()))
}

/// Renders the canonical JSON value as JSON, CSV or an aligned table. `grid`
/// names an array field that becomes the CSV rows, with its columns.
fn render(value: &Value, format: Format, grid: Option<(&str, &[&str])>) -> String {
    match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(value).expect("a JSON value always serializes");
            text.push('\n');
            text
        }
        Format::Csv => match grid {
            Some((field, columns)) => {
                let rows = value.get(field).and_then(Value::as_array).map(Vec::as_slice).unwrap_or(&[]);
                csv_grid(rows, columns)
            }
            None => {
                let mut pairs = Vec::new();
                flatten("", value, &mut pairs);
                let header: Vec<String> = pairs.iter().map(|(k, _)| csv_field(k)).collect();
                let row: Vec<String> = pairs.iter().map(|(_, v)| csv_field(v)).collect();
                format!("{}\n{}\n", header.join(","), row.join(","))
            }
        },
        Format::Table => {
            let mut out = String::new();
            table(&mut out, "", value);
            out
        }
    }
}

fn cell(value: &Value) -> String {
    match value {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Array(items) => format!("{{{}}}", items.iter().map(cell).collect::<Vec<_>>().join(",")),
        Value::Object(_) => value.to_string(),
        other => other.to_string(),
    }
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn is_table(value: &Value) -> bool {
    matches!(value, Value::Array(items) if items.iter().any(Value::is_object))
}

/// Scalar leaves as `(dotted.path, cell)`; arrays of objects are skipped.
fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    if let Value::Object(map) = value {
        for (k, v) in map {
            let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            match v {
                Value::Object(_) => flatten(&key, v, out),
                v if is_table(v) => {}
                v => out.push((key, cell(v))),
            }
        }
    }
}

fn csv_grid(rows: &[Value], columns: &[&str]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> =
            columns.iter().map(|c| csv_field(&cell(row.get(*c).unwrap_or(&Value::Null)))).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn table(out: &mut String, prefix: &str, value: &Value) {
    let Value::Object(map) = value else {
        out.push_str(&cell(value));
        out.push('\n');
        return;
    };
    let mut pairs = Vec::new();
    flatten(prefix, value, &mut pairs);
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in &pairs {
        out.push_str(&format!("{k:<width$}  {v}\n"));
    }
    for (k, v) in map {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        if let Value::Array(rows) = v {
            if is_table(v) {
                grid_table(out, &key, rows);
            }
        }
    }
}

fn grid_table(out: &mut String, title: &str, rows: &[Value]) {
    let mut columns: Vec<&str> = Vec::new();
    for row in rows {
        for k in row.as_object().into_iter().flat_map(|m| m.keys()) {
            if !columns.contains(&k.as_str()) {
                columns.push(k);
            }
        }
    }
    let cells: Vec<Vec<String>> =
        rows.iter().map(|r| columns.iter().map(|c| cell(r.get(*c).unwrap_or(&Value::Null))).collect()).collect();
    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| cells.iter().map(|r| r[i].len()).chain([c.len()]).max().unwrap_or(0))
        .collect();
    let line = |items: Vec<&str>| {
        let padded: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        format!("{}\n", padded.join("  ").trim_end())
    };
    out.push_str(&format!("\n{title}:\n"));
    out.push_str(&line(columns.clone()));
    for row in &cells {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
}
