//! The auction itself: announcement, bidding, opening with proofs, and
//! public verification, all over one bulletin board.
//!
//! Board layout for a finished auction:
//!
//! ```text
//! announce            terms, auctioneer key
//! register*           one per bidder
//! bid*                SealedBid, before the deadline
//! testset*            one range test set per bid score cipher (posted at close)
//! proof*              one range proof per valid bid
//! (testset, proof)*   one inequality proof per losing bid
//! outcome             winner opening plus references to every proof
//! appeal*             non-inclusion appeals, any time after the deadline
//! ```
//!
//! Proofs and test sets refer to bids by board sequence number; ciphertexts
//! are never repeated inline.

mod auctioneer;
mod bidder;
pub mod simulate;
mod verify;

use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bulletin::{Author, BoardError, BulletinEntry, EntryKind};
use crate::codec::timestamp;
use crate::identity::{IdentityError, Pseudonym};
use crate::paillier::{Ciphertext, HelpValue, PaillierError, PaillierPublicKey};
use crate::rangeproof::{bound_fits, RangeProof, RangeProofError, TestSet};
use crate::scoring::{check_score_bits, from_fixed_point, EncodedScore, ScoringError, ScoringFunction};

pub use auctioneer::Auctioneer;
pub use bidder::Bidder;
pub use verify::{verify_outcome, Failure, Verdict};

pub const WINNER_RULE: &str = "max-score, earliest-seq tie-break";

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid auction terms: {0}")]
    Terms(String),
    #[error("the board already holds an announcement")]
    AlreadyAnnounced,
    #[error("no auction has been announced on this board")]
    NotAnnounced,
    #[error("bidding closed at {0}")]
    BiddingClosed(String),
    #[error("bidding is open until {0}")]
    BiddingOpen(String),
    #[error("pseudonym {0} is not registered")]
    NotRegistered(Pseudonym),
    #[error("pseudonym {0} has already bid")]
    DuplicateBid(Pseudonym),
    #[error("the outcome has already been published")]
    AlreadyOpened,
    #[error("the Paillier private key does not match the announced public key")]
    KeyMismatch,
    #[error("bid value rejected: {0}")]
    BidValue(String),
    #[error("malformed board: {0}")]
    Malformed(String),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Paillier(#[from] PaillierError),
    #[error(transparent)]
    RangeProof(#[from] RangeProofError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Board(#[from] BoardError),
}

/// Everything the auctioneer publishes before bidding opens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuctionTerms {
    pub auction_id: String,
    pub item: String,
    pub scoring: ScoringFunction,
    /// Scores and every encoded bid value lie in [0, 2^t).
    pub t: u32,
    /// Attribute values and prices are multiples of `1 / value_scale`.
    pub value_scale: u64,
    #[serde(with = "timestamp")]
    pub deadline: DateTime<Utc>,
    pub public_key: PaillierPublicKey,
    pub winner_rule: String,
}

impl AuctionTerms {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |msg: String| Err(ProtocolError::Terms(msg));
        if self.auction_id.is_empty() {
            return bad("empty auction id".into());
        }
        if self.winner_rule != WINNER_RULE {
            return bad(format!("winner rule must be {WINNER_RULE:?}"));
        }
        self.scoring
            .validate()
            .map_err(|e| ProtocolError::Terms(e.to_string()))?;
        check_score_bits(self.t).map_err(|e| ProtocolError::Terms(e.to_string()))?;
        if !bound_fits(&self.public_key, self.t) {
            return bad(format!("2^{} is not below n/2", self.t));
        }
        if self.value_scale == 0 {
            return bad("value scale must be positive".into());
        }
        for (r, spec) in self.scoring.attributes.iter().enumerate() {
            let (min, max) = spec.domain();
            if self.max_code(min, max) >= self.bound() {
                return bad(format!("attribute {r} ({}) needs more than t bits", spec.name));
            }
        }
        if self.max_code(&BigRational::zero(), &self.scoring.price_ceiling) >= self.bound() {
            return bad("price ceiling needs more than t bits".into());
        }
        Ok(())
    }

    pub fn attribute_count(&self) -> usize {
        self.scoring.attribute_count()
    }

    /// `2^t`.
    pub fn bound(&self) -> BigUint {
        BigUint::one() << self.t as usize
    }

    fn scale(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.value_scale))
    }

    fn max_code(&self, min: &BigRational, max: &BigRational) -> BigUint {
        ((max - min) * self.scale())
            .floor()
            .to_integer()
            .to_biguint()
            .unwrap_or_default()
    }

    fn encode_on_grid(
        &self,
        value: &BigRational,
        min: &BigRational,
        max: &BigRational,
        what: &str,
    ) -> Result<BigUint, ProtocolError> {
        if value < min || value > max {
            return Err(ProtocolError::BidValue(format!(
                "{what} {value} outside [{min}, {max}]"
            )));
        }
        let code = (value - min) * self.scale();
        if !code.is_integer() {
            return Err(ProtocolError::BidValue(format!(
                "{what} {value} is not a multiple of 1/{}",
                self.value_scale
            )));
        }
        Ok(code.to_integer().to_biguint().expect("non-negative"))
    }

    /// Fixed-point plaintexts for a bid: one per attribute, then the price.
    pub fn encode_bid_values(
        &self,
        values: &[BigRational],
        price: &BigRational,
    ) -> Result<Vec<BigUint>, ProtocolError> {
        let k = self.attribute_count();
        if values.len() != k {
            return Err(ScoringError::AttributeCount {
                expected: k,
                actual: values.len(),
            }
            .into());
        }
        let mut codes = Vec::with_capacity(k + 1);
        for (spec, x) in self.scoring.attributes.iter().zip(values) {
            let (min, max) = spec.domain();
            codes.push(self.encode_on_grid(x, min, max, &spec.name)?);
        }
        codes.push(self.encode_on_grid(price, &BigRational::zero(), &self.scoring.price_ceiling, "price")?);
        Ok(codes)
    }

    /// Inverse of [`encode_bid_values`](Self::encode_bid_values); `None` if a
    /// code lies outside its published range.
    pub fn decode_bid_values(&self, codes: &[BigUint]) -> Option<(Vec<BigRational>, BigRational)> {
        let k = self.attribute_count();
        if codes.len() != k + 1 {
            return None;
        }
        let mut values = Vec::with_capacity(k);
        for (spec, code) in self.scoring.attributes.iter().zip(codes) {
            let (min, max) = spec.domain();
            let x = from_fixed_point(code, min, self.value_scale);
            if &x > max {
                return None;
            }
            values.push(x);
        }
        let price = from_fixed_point(&codes[k], &BigRational::zero(), self.value_scale);
        (price <= self.scoring.price_ceiling).then_some((values, price))
    }

    /// Every grid point of attribute `r`'s domain, or of the price range when `r == K`.
    pub fn grid(&self, r: usize) -> Vec<BigRational> {
        let (min, max) = if r < self.attribute_count() {
            let (min, max) = self.scoring.attributes[r].domain();
            (min.clone(), max.clone())
        } else {
            (BigRational::zero(), self.scoring.price_ceiling.clone())
        };
        let steps = self.max_code(&min, &max).to_u64().expect("grid fits in u64");
        (0..=steps)
            .map(|k| &min + BigRational::new(BigInt::from(k), BigInt::from(self.value_scale)))
            .collect()
    }
}

/// Payload of the `announce` entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Announcement {
    pub terms: AuctionTerms,
    #[serde(with = "crate::codec::hex_bytes")]
    pub auctioneer_vk: Vec<u8>,
    pub scheme: String,
}

/// Payload of a `bid` entry: K attribute ciphers, the price cipher, and the
/// bidder's own encryption of its score claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SealedBid {
    pub pseudonym: Pseudonym,
    pub attribute_ciphers: Vec<Ciphertext>,
    pub score_cipher: Ciphertext,
}

/// What a test set or proof entry is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Statement {
    /// The score cipher of bid `bid_seq` encrypts a value below 2^t.
    Range { bid_seq: u64 },
    /// Score of `minuend_seq` ≥ (or > when strict) score of `subtrahend_seq`.
    Geq {
        minuend_seq: u64,
        subtrahend_seq: u64,
        strict: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSetRecord {
    pub statement: Statement,
    pub testset: TestSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofRecord {
    pub statement: Statement,
    pub proof: RangeProof,
}

/// The winner's opening: anyone can re-encrypt and compare with the posted cipher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinnerRecord {
    pub pseudonym: Pseudonym,
    pub bid_seq: u64,
    pub score: EncodedScore,
    pub score_help: HelpValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofRef {
    pub pseudonym: Pseudonym,
    pub bid_seq: u64,
    pub testset_seq: u64,
    pub proof_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disqualification {
    pub pseudonym: Pseudonym,
    pub bid_seq: u64,
    pub reason: String,
}

/// Payload of the `outcome` entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    /// `None` when no bid survived the consistency check.
    pub winner: Option<WinnerRecord>,
    pub range_proofs: Vec<ProofRef>,
    pub loser_proofs: Vec<ProofRef>,
    pub disqualified: Vec<Disqualification>,
}

#[derive(Debug, Clone)]
pub struct PostedBid {
    pub seq: u64,
    pub timestamp: String,
    pub author: Pseudonym,
    pub bid: SealedBid,
}

/// A board parsed into protocol records. Parsing checks shapes only; the
/// chain, signatures and proofs are checked elsewhere.
#[derive(Debug, Clone)]
pub struct AuctionView {
    pub announcement: Announcement,
    pub bids: Vec<PostedBid>,
    pub testsets: BTreeMap<u64, TestSetRecord>,
    pub proofs: BTreeMap<u64, ProofRecord>,
    pub outcome: Option<(u64, Outcome)>,
}

impl AuctionView {
    pub fn parse(entries: &[BulletinEntry]) -> Result<Self, ProtocolError> {
        let malformed =
            |seq: u64, what: &str, e: serde_json::Error| ProtocolError::Malformed(format!("entry {seq}: {what}: {e}"));
        let first = entries.first().ok_or(ProtocolError::NotAnnounced)?;
        if first.kind != EntryKind::Announce {
            return Err(ProtocolError::NotAnnounced);
        }
        let announcement: Announcement =
            serde_json::from_value(first.payload.clone()).map_err(|e| malformed(0, "announcement", e))?;

        let mut view = AuctionView {
            announcement,
            bids: Vec::new(),
            testsets: BTreeMap::new(),
            proofs: BTreeMap::new(),
            outcome: None,
        };
        for entry in &entries[1..] {
            let seq = entry.seq;
            match entry.kind {
                EntryKind::Bid => {
                    let Author::Bidder(author) = entry.author else {
                        return Err(ProtocolError::Malformed(format!("entry {seq}: bid without a bidder")));
                    };
                    let bid = serde_json::from_value(entry.payload.clone()).map_err(|e| malformed(seq, "bid", e))?;
                    view.bids.push(PostedBid {
                        seq,
                        timestamp: entry.timestamp.clone(),
                        author,
                        bid,
                    });
                }
                EntryKind::Testset => {
                    let record =
                        serde_json::from_value(entry.payload.clone()).map_err(|e| malformed(seq, "test set", e))?;
                    view.testsets.insert(seq, record);
                }
                EntryKind::Proof => {
                    let record =
                        serde_json::from_value(entry.payload.clone()).map_err(|e| malformed(seq, "proof", e))?;
                    view.proofs.insert(seq, record);
                }
                EntryKind::Outcome => {
                    if view.outcome.is_some() {
                        return Err(ProtocolError::Malformed(format!("entry {seq}: second outcome")));
                    }
                    let outcome =
                        serde_json::from_value(entry.payload.clone()).map_err(|e| malformed(seq, "outcome", e))?;
                    view.outcome = Some((seq, outcome));
                }
                EntryKind::Announce | EntryKind::Register | EntryKind::Appeal => {}
            }
        }
        Ok(view)
    }

    pub fn terms(&self) -> &AuctionTerms {
        &self.announcement.terms
    }

    pub fn bid(&self, seq: u64) -> Option<&PostedBid> {
        self.bids.iter().find(|b| b.seq == seq)
    }

    /// Range test sets already posted, keyed by bid seq.
    pub fn range_testsets(&self) -> HashMap<u64, (u64, &TestSet)> {
        self.testsets
            .iter()
            .filter_map(|(&seq, record)| match record.statement {
                Statement::Range { bid_seq } => Some((bid_seq, (seq, &record.testset))),
                Statement::Geq { .. } => None,
            })
            .collect()
    }
}

/// Reads the announced terms off a board.
pub fn terms_from_board(entries: &[BulletinEntry]) -> Result<AuctionTerms, ProtocolError> {
    let first = entries.first().ok_or(ProtocolError::NotAnnounced)?;
    if first.kind != EntryKind::Announce {
        return Err(ProtocolError::NotAnnounced);
    }
    let announcement: Announcement = serde_json::from_value(first.payload.clone())
        .map_err(|e| ProtocolError::Malformed(format!("announcement: {e}")))?;
    Ok(announcement.terms)
}
