use num_bigint::BigUint;
use num_rational::BigRational;
use rand::{CryptoRng, RngCore};

use super::{terms_from_board, AuctionTerms, ProtocolError, SealedBid};
use crate::bulletin::{format_timestamp, Author, BulletinBoard, EntryKind, Receipt};
use crate::identity::{generate_pseudonym, random_nonce, register, Pseudonym, SigningKeypair, NONCE_LEN};
use crate::paillier::Plaintext;
use crate::scoring::Bid;

/// A bidder, known on the board only by its pseudonym.
#[derive(Debug, Clone)]
pub struct Bidder {
    signing: SigningKeypair,
    nonce: [u8; NONCE_LEN],
    pseudonym: Pseudonym,
}

impl Bidder {
    pub fn new(signing: SigningKeypair, nonce: [u8; NONCE_LEN], auction_id: &str) -> Self {
        let pseudonym = generate_pseudonym(&signing.public_key, &nonce, auction_id);
        Bidder {
            signing,
            nonce,
            pseudonym,
        }
    }

    pub fn generate<R: RngCore + CryptoRng>(auction_id: &str, rng: &mut R) -> Self {
        let signing = SigningKeypair::generate(rng);
        let nonce = random_nonce(rng);
        Self::new(signing, nonce, auction_id)
    }

    pub fn pseudonym(&self) -> Pseudonym {
        self.pseudonym
    }

    pub fn signing_key(&self) -> &SigningKeypair {
        &self.signing
    }

    pub fn nonce(&self) -> &[u8; NONCE_LEN] {
        &self.nonce
    }

    pub fn register(&self, board: &mut BulletinBoard) -> Result<Receipt, ProtocolError> {
        Ok(register(board, self.pseudonym, &self.signing)?)
    }

    /// Builds an honest bid: the score claim follows the published rule.
    pub fn prepare_bid(
        &self,
        terms: &AuctionTerms,
        attribute_values: Vec<BigRational>,
        price: BigRational,
    ) -> Result<Bid, ProtocolError> {
        Ok(Bid::new(
            &terms.scoring,
            terms.t,
            attribute_values,
            price,
            self.pseudonym,
        )?)
    }

    pub fn submit_bid<R: RngCore + CryptoRng>(
        &self,
        board: &mut BulletinBoard,
        attribute_values: Vec<BigRational>,
        price: BigRational,
        rng: &mut R,
    ) -> Result<(SealedBid, Receipt), ProtocolError> {
        let terms = terms_from_board(board.entries())?;
        let bid = self.prepare_bid(&terms, attribute_values, price)?;
        self.submit(board, &bid, rng)
    }

    /// Encrypts and posts `bid` as is, score claim included.
    pub fn submit<R: RngCore + CryptoRng>(
        &self,
        board: &mut BulletinBoard,
        bid: &Bid,
        rng: &mut R,
    ) -> Result<(SealedBid, Receipt), ProtocolError> {
        let terms = terms_from_board(board.entries())?;
        if board.now() >= terms.deadline {
            return Err(ProtocolError::BiddingClosed(format_timestamp(terms.deadline)));
        }
        match board.registered_key(&self.pseudonym) {
            Some((_, vk)) if vk == self.signing.public_key.as_slice() => {}
            _ => return Err(ProtocolError::NotRegistered(self.pseudonym)),
        }
        let author = Author::Bidder(self.pseudonym);
        if board
            .entries()
            .iter()
            .any(|e| e.kind == EntryKind::Bid && e.author == author)
        {
            return Err(ProtocolError::DuplicateBid(self.pseudonym));
        }
        if bid.pseudonym != self.pseudonym {
            return Err(ProtocolError::BidValue("bid names another pseudonym".into()));
        }
        let codes = terms.encode_bid_values(&bid.attribute_values, &bid.price)?;
        terms.scoring.raw_score(&bid.attribute_values, &bid.price)?;
        let claim = BigUint::from(bid.score_claim.0);
        if claim >= terms.bound() {
            return Err(ProtocolError::BidValue("score claim is not below 2^t".into()));
        }

        let pk = &terms.public_key;
        let attribute_ciphers = codes
            .into_iter()
            .map(|m| pk.encrypt_random(&Plaintext(m), rng).map(|(c, _)| c))
            .collect::<Result<Vec<_>, _>>()?;
        let (score_cipher, _) = pk.encrypt_random(&Plaintext(claim), rng)?;
        let sealed = SealedBid {
            pseudonym: self.pseudonym,
            attribute_ciphers,
            score_cipher,
        };
        let payload = serde_json::to_value(&sealed).expect("sealed bid serializes");
        let appended = board.append(EntryKind::Bid, payload, author, &self.signing)?;
        let receipt = appended.receipt.ok_or(crate::bulletin::BoardError::NoHost)?;
        Ok((sealed, receipt))
    }
}
