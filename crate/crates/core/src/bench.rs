//! Timing harness: proof preparation versus verification across key sizes
//! and bid counts.
//!
//! Each cell runs a full seeded auction (two attributes, t = 16) on an
//! in-memory board. Proof preparation covers close plus open-and-prove;
//! verification is the best of three runs of the public verifier. Key
//! generation and bidding are not timed.

use std::fmt;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::protocol::simulate::{setup, SimulationConfig};
use crate::protocol::{verify_outcome, Failure, ProtocolError, Verdict};

pub const CSV_HEADER: &str = "key_bits,num_bids,phase,elapsed_ms";
pub const BENCH_ATTRIBUTES: usize = 2;
const VERIFY_RUNS: usize = 3;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("benchmark auction failed verification: {0}")]
    Verification(Failure),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    ProofPreparation,
    Verification,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::ProofPreparation => "proof_preparation",
            Phase::Verification => "verification",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchRecord {
    pub key_bits: u64,
    pub num_bids: usize,
    pub phase: Phase,
    pub elapsed_ms: u64,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.key_bits, self.num_bids, self.phase, self.elapsed_ms)
    }
}

fn millis(d: Duration) -> u64 {
    d.as_millis().try_into().unwrap_or(u64::MAX)
}

/// Runs one cell and returns its two records, preparation first.
pub fn run_cell(key_bits: u64, num_bids: usize, seed: u64) -> Result<[BenchRecord; 2], BenchError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(key_bits ^ ((num_bids as u64) << 32));
    let config = SimulationConfig::new(num_bids, BENCH_ATTRIBUTES, key_bits);
    let mut sim = setup(&config, &mut rng)?;

    let started = Instant::now();
    sim.open(&mut rng)?;
    let preparation = started.elapsed();

    let mut verification = Duration::MAX;
    for _ in 0..VERIFY_RUNS {
        let started = Instant::now();
        let verdict = verify_outcome(sim.board.entries());
        verification = verification.min(started.elapsed());
        if let Verdict::Invalid(failure) = verdict {
            return Err(BenchError::Verification(failure));
        }
    }

    let record = |phase, elapsed| BenchRecord {
        key_bits,
        num_bids,
        phase,
        elapsed_ms: millis(elapsed),
    };
    Ok([
        record(Phase::ProofPreparation, preparation),
        record(Phase::Verification, verification),
    ])
}

/// Every (key size, bid count) cell in order, two records per cell.
pub fn sweep(key_bits: &[u64], num_bids: &[usize], seed: u64) -> Result<Vec<BenchRecord>, BenchError> {
    let mut records = Vec::with_capacity(key_bits.len() * num_bids.len() * 2);
    for &bits in key_bits {
        for &bids in num_bids {
            records.extend(run_cell(bits, bids, seed)?);
        }
    }
    Ok(records)
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}
