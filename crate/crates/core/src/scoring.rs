//! Multi-attribute scoring and winner determination.
//!
//! A bid scores `S = Σ w_r · f_r(x_r) − P / price_ceiling` where each `f_r`
//! is a published piecewise-linear valuation into [0, 1] and the weights sum
//! to at most one, so `S ∈ [−1, 1]`. All arithmetic is exact; the only
//! rounding is the affine map of `S` onto the integers [0, 2^t).

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{rational, rational_pairs};
use crate::identity::Pseudonym;

pub const MIN_SCORE_BITS: u32 = 8;
/// Scores are carried as `u64`; larger bounds are rejected.
pub const MAX_SCORE_BITS: u32 = 62;
pub const DEFAULT_SCORE_BITS: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScoringError {
    #[error("attribute {name:?}: value {value} outside [{min}, {max}]")]
    OutOfDomain {
        name: String,
        value: String,
        min: String,
        max: String,
    },
    #[error("price {0} exceeds the price ceiling")]
    PriceAboveCeiling(String),
    #[error("negative price")]
    NegativePrice,
    #[error("expected {expected} attribute values, got {actual}")]
    AttributeCount { expected: usize, actual: usize },
    #[error("invalid scoring function: {0}")]
    InvalidSpec(String),
    #[error("score bound t={0} outside [{MIN_SCORE_BITS}, {MAX_SCORE_BITS}]")]
    ScoreBits(u32),
    #[error("raw score outside [-1, 1]")]
    RawOutOfRange,
    #[error("no valid bids")]
    NoBids,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// More is better; valuations are non-decreasing.
    Benefit,
    /// Less is better; valuations are non-increasing.
    Cost,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    #[serde(with = "rational")]
    pub weight: BigRational,
    #[serde(with = "rational_pairs")]
    pub breakpoints: Vec<(BigRational, BigRational)>,
    pub direction: Direction,
}

impl AttributeSpec {
    pub fn validate(&self) -> Result<(), ScoringError> {
        let invalid = |msg: &str| Err(ScoringError::InvalidSpec(format!("{}: {msg}", self.name)));
        if self.weight.is_negative() {
            return invalid("negative weight");
        }
        if self.breakpoints.len() < 2 {
            return invalid("need at least two breakpoints");
        }
        let unit = BigRational::one();
        for (_, f) in &self.breakpoints {
            if f.is_negative() || f > &unit {
                return invalid("valuation outside [0, 1]");
            }
        }
        for pair in self.breakpoints.windows(2) {
            let ((x0, f0), (x1, f1)) = (&pair[0], &pair[1]);
            if x1 <= x0 {
                return invalid("breakpoints must be strictly increasing");
            }
            let monotone = match self.direction {
                Direction::Benefit => f1 >= f0,
                Direction::Cost => f1 <= f0,
            };
            if !monotone {
                return invalid("valuation direction does not match breakpoints");
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> (&BigRational, &BigRational) {
        (&self.breakpoints[0].0, &self.breakpoints[self.breakpoints.len() - 1].0)
    }

    fn out_of_domain(&self, x: &BigRational) -> ScoringError {
        let (min, max) = self.domain();
        ScoringError::OutOfDomain {
            name: self.name.clone(),
            value: x.to_string(),
            min: min.to_string(),
            max: max.to_string(),
        }
    }
}

/// Piecewise-linear interpolation of the breakpoints at `x`.
pub fn evaluate_valuation(spec: &AttributeSpec, x: &BigRational) -> Result<BigRational, ScoringError> {
    let (min, max) = spec.domain();
    if x < min || x > max {
        return Err(spec.out_of_domain(x));
    }
    for pair in spec.breakpoints.windows(2) {
        let ((x0, f0), (x1, f1)) = (&pair[0], &pair[1]);
        if x <= x1 {
            return Ok(f0 + (f1 - f0) * (x - x0) / (x1 - x0));
        }
    }
    unreachable!("x is within the breakpoint domain")
}

/// The published scoring rule: attribute valuations plus the price normalizer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringFunction {
    pub attributes: Vec<AttributeSpec>,
    #[serde(with = "rational")]
    pub price_ceiling: BigRational,
}

impl ScoringFunction {
    pub fn validate(&self) -> Result<(), ScoringError> {
        for spec in &self.attributes {
            spec.validate()?;
        }
        let total: BigRational = self.attributes.iter().map(|a| a.weight.clone()).sum();
        if total > BigRational::one() {
            return Err(ScoringError::InvalidSpec("weights sum to more than 1".into()));
        }
        if !self.price_ceiling.is_positive() {
            return Err(ScoringError::InvalidSpec("price ceiling must be positive".into()));
        }
        Ok(())
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    /// Σ w_r · f_r(x_r), the aggregate value.
    pub fn aggregate_value(&self, values: &[BigRational]) -> Result<BigRational, ScoringError> {
        if values.len() != self.attributes.len() {
            return Err(ScoringError::AttributeCount {
                expected: self.attributes.len(),
                actual: values.len(),
            });
        }
        self.attributes
            .iter()
            .zip(values)
            .try_fold(BigRational::zero(), |acc, (spec, x)| {
                Ok(acc + &spec.weight * evaluate_valuation(spec, x)?)
            })
    }

    pub fn check_price(&self, price: &BigRational) -> Result<(), ScoringError> {
        if price.is_negative() {
            return Err(ScoringError::NegativePrice);
        }
        if price > &self.price_ceiling {
            return Err(ScoringError::PriceAboveCeiling(price.to_string()));
        }
        Ok(())
    }

    /// `S = aggregate − price / price_ceiling`.
    pub fn raw_score(&self, values: &[BigRational], price: &BigRational) -> Result<BigRational, ScoringError> {
        self.check_price(price)?;
        Ok(self.aggregate_value(values)? - price / &self.price_ceiling)
    }
}

/// A score mapped into [0, 2^t).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EncodedScore(pub u64);

impl EncodedScore {
    pub fn value(self) -> u64 {
        self.0
    }
}

pub fn check_score_bits(t: u32) -> Result<(), ScoringError> {
    if (MIN_SCORE_BITS..=MAX_SCORE_BITS).contains(&t) {
        Ok(())
    } else {
        Err(ScoringError::ScoreBits(t))
    }
}

/// `round((raw + 1) · (2^t − 1) / 2)`, rounding halves up.
pub fn encode_score(raw: &BigRational, t: u32) -> Result<EncodedScore, ScoringError> {
    check_score_bits(t)?;
    let one = BigRational::one();
    if raw < &-one.clone() || raw > &one {
        return Err(ScoringError::RawOutOfRange);
    }
    let top = BigRational::from_integer(BigInt::from((1u64 << t) - 1));
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let scaled = (raw + &one) * top * &half + half;
    let value = scaled.floor().to_integer().to_u64().expect("score fits in u64");
    Ok(EncodedScore(value))
}

/// A bid in the clear, as the bidder prepares it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bid {
    pub attribute_values: Vec<BigRational>,
    pub price: BigRational,
    pub pseudonym: Pseudonym,
    pub score_claim: EncodedScore,
}

impl Bid {
    /// Builds a bid whose score claim follows the published rule.
    pub fn new(
        scoring: &ScoringFunction,
        t: u32,
        attribute_values: Vec<BigRational>,
        price: BigRational,
        pseudonym: Pseudonym,
    ) -> Result<Self, ScoringError> {
        let raw = scoring.raw_score(&attribute_values, &price)?;
        Ok(Bid {
            score_claim: encode_score(&raw, t)?,
            attribute_values,
            price,
            pseudonym,
        })
    }
}

pub fn compute_raw_score(scoring: &ScoringFunction, bid: &Bid) -> Result<BigRational, ScoringError> {
    scoring.raw_score(&bid.attribute_values, &bid.price)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoredBid {
    pub pseudonym: Pseudonym,
    pub score: EncodedScore,
    /// Board sequence number of the bid entry.
    pub seq: u64,
}

/// Highest score wins; ties go to the earliest board entry.
pub fn determine_winner(scores: &[ScoredBid]) -> Result<&ScoredBid, ScoringError> {
    scores
        .iter()
        .min_by(|a, b| b.score.cmp(&a.score).then(a.seq.cmp(&b.seq)))
        .ok_or(ScoringError::NoBids)
}

/// Integer encoding of `value` on a fixed-point grid: `(value − offset) · scale`.
pub fn to_fixed_point(value: &BigRational, offset: &BigRational, scale: u64) -> Option<BigUint> {
    let scaled = (value - offset) * BigRational::from_integer(BigInt::from(scale));
    if !scaled.is_integer() || scaled.is_negative() {
        return None;
    }
    scaled.to_integer().to_biguint()
}

pub fn from_fixed_point(encoded: &BigUint, offset: &BigRational, scale: u64) -> BigRational {
    BigRational::new(BigInt::from(encoded.clone()), BigInt::from(scale)) + offset
}
