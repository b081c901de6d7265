//! Seeded end-to-end auctions on an in-memory board with a manual clock.
//!
//! The same seed always yields the same board, byte for byte.

use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{CryptoRng, Rng, RngCore};

use super::{AuctionTerms, Auctioneer, Bidder, Outcome, ProtocolError, WINNER_RULE};
use crate::bulletin::{BulletinBoard, ManualClock, Receipt};
use crate::identity::SigningKeypair;
use crate::paillier::{keygen, keygen_insecure, PaillierPrivateKey, PaillierPublicKey, PRODUCTION_KEY_BITS};
use crate::scoring::{AttributeSpec, Bid, Direction, EncodedScore, ScoringFunction, DEFAULT_SCORE_BITS};

pub const SIMULATION_START: &str = "2030-01-01T00:00:00Z";

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub auction_id: String,
    pub bidders: usize,
    pub attributes: usize,
    pub key_bits: u64,
    pub t: u32,
    pub value_scale: u64,
    /// Bidders (by index) whose score claim is off by one.
    pub forged_claims: Vec<usize>,
}

impl SimulationConfig {
    pub fn new(bidders: usize, attributes: usize, key_bits: u64) -> Self {
        SimulationConfig {
            auction_id: "sim".into(),
            bidders,
            attributes,
            key_bits,
            t: DEFAULT_SCORE_BITS,
            value_scale: 10,
            forged_claims: Vec::new(),
        }
    }
}

pub struct Simulation {
    pub clock: ManualClock,
    pub board: BulletinBoard,
    pub auctioneer: Auctioneer,
    pub bidders: Vec<Bidder>,
    /// Plaintext bids, aligned with `bidders`.
    pub bids: Vec<Bid>,
    pub bid_seqs: Vec<u64>,
    pub receipts: Vec<Receipt>,
}

impl Simulation {
    pub fn terms(&self) -> &AuctionTerms {
        self.auctioneer.terms()
    }

    pub fn open<R: RngCore + CryptoRng>(&mut self, rng: &mut R) -> Result<Outcome, ProtocolError> {
        self.auctioneer.open_and_prove(&mut self.board, rng)
    }
}

/// Production-size keys go through the checked generator, anything else
/// through the test-mode one.
pub fn auction_keys<R: RngCore + CryptoRng>(
    bits: u64,
    rng: &mut R,
) -> Result<(PaillierPublicKey, PaillierPrivateKey), ProtocolError> {
    if PRODUCTION_KEY_BITS.contains(&bits) {
        Ok(keygen(bits, rng)?)
    } else {
        Ok(keygen_insecure(bits, rng)?)
    }
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn random_attribute<R: Rng>(name: String, weight: BigRational, rng: &mut R) -> AttributeSpec {
    let min = rng.gen_range(0..=10i64);
    let width = rng.gen_range(1..=20i64);
    let interior = rng.gen_range(0..=2usize).min(width as usize - 1);
    let mut xs: Vec<i64> = rand::seq::index::sample(rng, (width - 1) as usize, interior)
        .into_iter()
        .map(|i| min + 1 + i as i64)
        .collect();
    xs.push(min);
    xs.push(min + width);
    xs.sort_unstable();
    let mut fs: Vec<i64> = (0..xs.len()).map(|_| rng.gen_range(0..=20)).collect();
    let direction = if rng.gen_bool(0.5) {
        fs.sort_unstable();
        Direction::Benefit
    } else {
        fs.sort_unstable_by(|a, b| b.cmp(a));
        Direction::Cost
    };
    AttributeSpec {
        name,
        weight,
        breakpoints: xs
            .into_iter()
            .zip(fs)
            .map(|(x, f)| (ratio(x, 1), ratio(f, 20)))
            .collect(),
        direction,
    }
}

/// Random but valid terms with `attributes` non-price attributes.
pub fn random_terms<R: Rng>(
    config: &SimulationConfig,
    public_key: PaillierPublicKey,
    deadline: DateTime<Utc>,
    rng: &mut R,
) -> AuctionTerms {
    let parts: Vec<i64> = (0..config.attributes).map(|_| rng.gen_range(0..=10)).collect();
    let total = (parts.iter().sum::<i64>() + rng.gen_range(0..=5)).max(1);
    let attributes = parts
        .iter()
        .enumerate()
        .map(|(r, &w)| random_attribute(format!("attr{r}"), ratio(w, total), rng))
        .collect();
    AuctionTerms {
        auction_id: config.auction_id.clone(),
        item: "simulated lot".into(),
        scoring: ScoringFunction {
            attributes,
            price_ceiling: ratio(rng.gen_range(10..=100), 1),
        },
        t: config.t,
        value_scale: config.value_scale,
        deadline,
        public_key,
        winner_rule: WINNER_RULE.into(),
    }
}

/// Uniform grid point per attribute, then a uniform grid price.
pub fn random_bid_values<R: Rng>(terms: &AuctionTerms, rng: &mut R) -> (Vec<BigRational>, BigRational) {
    let pick = |r: usize, rng: &mut R| {
        let grid = terms.grid(r);
        grid[rng.gen_range(0..grid.len())].clone()
    };
    let values = (0..terms.attribute_count()).map(|r| pick(r, rng)).collect();
    let price = pick(terms.attribute_count(), rng);
    (values, price)
}

/// Announces, registers every bidder and collects their bids, leaving the
/// clock at the deadline so the auctioneer can open.
pub fn setup<R: RngCore + CryptoRng>(config: &SimulationConfig, rng: &mut R) -> Result<Simulation, ProtocolError> {
    let start: DateTime<Utc> = SIMULATION_START.parse().expect("valid start time");
    let clock = ManualClock::new(start);
    let mut board = BulletinBoard::in_memory(Arc::new(clock.clone()));
    let tick = Duration::seconds(1);

    let (pk, sk) = auction_keys(config.key_bits, rng)?;
    let deadline = start + Duration::days(1);
    let terms = random_terms(config, pk, deadline, rng);
    let auctioneer = Auctioneer::new(SigningKeypair::generate(rng), sk, terms)?;
    auctioneer.announce(&mut board)?;

    let bidders: Vec<Bidder> = (0..config.bidders)
        .map(|_| Bidder::generate(&config.auction_id, rng))
        .collect();
    for bidder in &bidders {
        clock.advance(tick);
        bidder.register(&mut board)?;
    }

    let terms = auctioneer.terms().clone();
    let bound = 1u64 << terms.t;
    let mut bids = Vec::with_capacity(bidders.len());
    let mut bid_seqs = Vec::with_capacity(bidders.len());
    let mut receipts = Vec::with_capacity(bidders.len());
    for (i, bidder) in bidders.iter().enumerate() {
        clock.advance(tick);
        let (values, price) = random_bid_values(&terms, rng);
        let mut bid = bidder.prepare_bid(&terms, values, price)?;
        if config.forged_claims.contains(&i) {
            let claim = bid.score_claim.0;
            bid.score_claim = EncodedScore(if claim + 1 < bound { claim + 1 } else { claim - 1 });
        }
        let (_, receipt) = bidder.submit(&mut board, &bid, rng)?;
        bid_seqs.push(receipt.entry_seq);
        receipts.push(receipt);
        bids.push(bid);
    }
    clock.set(deadline);

    Ok(Simulation {
        clock,
        board,
        auctioneer,
        bidders,
        bids,
        bid_seqs,
        receipts,
    })
}

/// A full auction: setup, then open and prove.
pub fn run<R: RngCore + CryptoRng>(
    config: &SimulationConfig,
    rng: &mut R,
) -> Result<(Simulation, Outcome), ProtocolError> {
    let mut sim = setup(config, rng)?;
    let outcome = sim.open(rng)?;
    Ok((sim, outcome))
}
