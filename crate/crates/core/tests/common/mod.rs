//! Shared helpers: seeded simulations, an independent winner oracle and board
//! surgery that re-signs whatever it touches.

#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use sealbid::bulletin::{Author, BulletinEntry, EntryKind, GENESIS_HASH};
use sealbid::identity::{Pseudonym, SigningKeypair};
use sealbid::protocol::simulate::{run, Simulation, SimulationConfig};
use sealbid::protocol::{AuctionTerms, Outcome, ProofRecord};
use sealbid::scoring::Bid;

pub const SMALL_KEY_BITS: u64 = 128;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn simulate(bidders: usize, attributes: usize, seed: u64) -> (Simulation, Outcome) {
    let config = SimulationConfig::new(bidders, attributes, SMALL_KEY_BITS);
    run(&config, &mut rng(seed)).expect("simulation runs")
}

/// Every key that signed something on a simulated board.
pub struct Signers {
    pub auctioneer: SigningKeypair,
    pub bidders: HashMap<Pseudonym, SigningKeypair>,
}

impl Signers {
    pub fn of(sim: &Simulation) -> Self {
        Signers {
            auctioneer: sim.auctioneer.signing_key().clone(),
            bidders: sim
                .bidders
                .iter()
                .map(|b| (b.pseudonym(), b.signing_key().clone()))
                .collect(),
        }
    }

    fn key(&self, author: &Author) -> &SigningKeypair {
        match author {
            Author::Auctioneer => &self.auctioneer,
            Author::Bidder(p) => &self.bidders[p],
        }
    }
}

/// Renumbers, re-links and re-signs entries from `from` on, as a key holder
/// rewriting history would.
pub fn rechain(entries: &mut [BulletinEntry], from: usize, signers: &Signers) {
    for i in from..entries.len() {
        let prev = if i == 0 { GENESIS_HASH } else { entries[i - 1].hash() };
        let e = &mut entries[i];
        e.seq = i as u64;
        e.prev_hash = prev;
        e.signature = signers.key(&e.author).sign(&e.signing_bytes()).unwrap();
    }
}

pub fn outcome_index(entries: &[BulletinEntry]) -> usize {
    entries
        .iter()
        .rposition(|e| e.kind == EntryKind::Outcome)
        .expect("outcome posted")
}

/// Rewrites the outcome record and re-signs it.
pub fn edit_outcome(entries: &mut [BulletinEntry], signers: &Signers, edit: impl FnOnce(&mut Outcome)) {
    let i = outcome_index(entries);
    let mut outcome: Outcome = serde_json::from_value(entries[i].payload.clone()).unwrap();
    edit(&mut outcome);
    entries[i].payload = serde_json::to_value(&outcome).unwrap();
    rechain(entries, i, signers);
}

/// Rewrites the proof record at `index` and re-signs everything after it.
pub fn edit_proof(entries: &mut [BulletinEntry], index: usize, signers: &Signers, edit: impl FnOnce(&mut ProofRecord)) {
    let mut record: ProofRecord = serde_json::from_value(entries[index].payload.clone()).unwrap();
    edit(&mut record);
    entries[index].payload = serde_json::to_value(&record).unwrap();
    rechain(entries, index, signers);
}

fn interpolate(points: &[(BigRational, BigRational)], x: &BigRational) -> BigRational {
    let k = points.partition_point(|(xk, _)| xk < x);
    if k == 0 {
        assert_eq!(&points[0].0, x, "below the domain");
        return points[0].1.clone();
    }
    let (x0, f0) = &points[k - 1];
    let (x1, f1) = &points[k];
    (f0 * (x1 - x) + f1 * (x - x0)) / (x1 - x0)
}

/// Score code computed without the library's scoring module.
pub fn oracle_score(terms: &AuctionTerms, bid: &Bid) -> u64 {
    let scoring = &terms.scoring;
    let mut s = -(&bid.price / &scoring.price_ceiling);
    for (spec, x) in scoring.attributes.iter().zip(&bid.attribute_values) {
        s += &spec.weight * interpolate(&spec.breakpoints, x);
    }
    assert!(s.abs() <= BigRational::from_integer(1.into()));
    let (a, b) = (s.numer().clone(), s.denom().clone());
    let top = BigInt::from((1u64 << terms.t) - 1);
    let code = ((a + &b) * top + &b) / (BigInt::from(2) * b);
    assert!(!code.is_negative());
    code.to_u64().unwrap()
}

/// Index of the highest oracle score, first one on ties.
pub fn oracle_winner(terms: &AuctionTerms, bids: &[Bid]) -> usize {
    let scores: Vec<u64> = bids.iter().map(|b| oracle_score(terms, b)).collect();
    let best = *scores.iter().max().unwrap();
    scores.iter().position(|&s| s == best).unwrap()
}
