use std::collections::HashMap;

use num_bigint::BigUint;
use rand::{CryptoRng, Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    Announcement, AuctionTerms, AuctionView, Disqualification, Outcome, PostedBid, ProofRecord, ProofRef,
    ProtocolError, SealedBid, Statement, TestSetRecord, WinnerRecord,
};
use crate::bulletin::{format_timestamp, Author, BulletinBoard, BulletinEntry, EntryKind};
use crate::identity::SigningKeypair;
use crate::paillier::{Ciphertext, HelpValue, PaillierPrivateKey};
use crate::rangeproof::{
    build_test_set, difference_cipher, difference_opening, prove_range, Opening, TestSet, TestSetSecret,
};
use crate::scoring::{determine_winner, encode_score, EncodedScore, ScoredBid};

/// The auctioneer: hosts the board, holds the Paillier private key, and
/// produces the proofs that make the outcome checkable.
pub struct Auctioneer {
    signing: SigningKeypair,
    sk: PaillierPrivateKey,
    terms: AuctionTerms,
    /// Range test-set secrets kept from `close`, keyed by test-set entry seq.
    /// Missing ones are recovered with the private key.
    range_secrets: HashMap<u64, TestSetSecret>,
}

enum Evaluation {
    Valid { score: EncodedScore, help: HelpValue },
    Disqualified(String),
}

/// A losing bid's inequality proof, built off-board before its seq is known.
struct PendingGeq {
    loser: usize,
    statement: Statement,
    difference: Ciphertext,
    opening: Opening,
    testset: TestSet,
    secret: TestSetSecret,
}

fn seeds<R: RngCore>(rng: &mut R, n: usize) -> Vec<[u8; 32]> {
    (0..n).map(|_| rng.gen()).collect()
}

impl Auctioneer {
    pub fn new(signing: SigningKeypair, sk: PaillierPrivateKey, terms: AuctionTerms) -> Result<Self, ProtocolError> {
        terms.validate()?;
        if terms.public_key != *sk.public_key() {
            return Err(ProtocolError::KeyMismatch);
        }
        Ok(Auctioneer {
            signing,
            sk,
            terms,
            range_secrets: HashMap::new(),
        })
    }

    /// Picks up an auction already announced on `entries`.
    pub fn resume(
        signing: SigningKeypair,
        sk: PaillierPrivateKey,
        entries: &[BulletinEntry],
    ) -> Result<Self, ProtocolError> {
        let view = AuctionView::parse(entries)?;
        if view.announcement.auctioneer_vk != signing.public_key {
            return Err(ProtocolError::Malformed(
                "signing key differs from the announced auctioneer key".into(),
            ));
        }
        Self::new(signing, sk, view.announcement.terms)
    }

    pub fn terms(&self) -> &AuctionTerms {
        &self.terms
    }

    pub fn signing_key(&self) -> &SigningKeypair {
        &self.signing
    }

    /// Posts the terms as entry 0 and takes over as the board's host.
    pub fn announce(&self, board: &mut BulletinBoard) -> Result<BulletinEntry, ProtocolError> {
        if !board.is_empty() {
            return Err(ProtocolError::AlreadyAnnounced);
        }
        let announcement = Announcement {
            terms: self.terms.clone(),
            auctioneer_vk: self.signing.public_key.clone(),
            scheme: self.signing.scheme_id.clone(),
        };
        board.set_host(self.signing.clone());
        let appended = board.append(
            EntryKind::Announce,
            serde_json::to_value(&announcement).expect("announcement serializes"),
            Author::Auctioneer,
            &self.signing,
        )?;
        Ok(appended.entry)
    }

    fn post<T: Serialize>(&self, board: &mut BulletinBoard, kind: EntryKind, record: &T) -> Result<u64, ProtocolError> {
        let payload = serde_json::to_value(record).expect("record serializes");
        Ok(board
            .append(kind, payload, Author::Auctioneer, &self.signing)?
            .entry
            .seq)
    }

    fn view(&self, board: &BulletinBoard) -> Result<AuctionView, ProtocolError> {
        let view = AuctionView::parse(board.entries())?;
        if *view.terms() != self.terms {
            return Err(ProtocolError::Malformed("board announces different terms".into()));
        }
        if view.outcome.is_some() {
            return Err(ProtocolError::AlreadyOpened);
        }
        Ok(view)
    }

    /// Ends bidding: posts one range test set per bid score cipher. Returns
    /// how many sets were posted; bids that already have one are skipped.
    pub fn close<R: RngCore + CryptoRng>(
        &mut self,
        board: &mut BulletinBoard,
        rng: &mut R,
    ) -> Result<usize, ProtocolError> {
        if board.now() < self.terms.deadline {
            return Err(ProtocolError::BiddingOpen(format_timestamp(self.terms.deadline)));
        }
        let view = self.view(board)?;
        let pk = &self.terms.public_key;
        let posted = view.range_testsets();
        let pending: Vec<&PostedBid> = view
            .bids
            .iter()
            .filter(|b| !posted.contains_key(&b.seq) && pk.is_valid_ciphertext(&b.bid.score_cipher))
            .collect();

        let t = self.terms.t;
        let built = pending
            .par_iter()
            .zip(seeds(rng, pending.len()))
            .map(|(b, seed)| build_test_set(pk, &b.bid.score_cipher, t, &mut ChaCha20Rng::from_seed(seed)))
            .collect::<Result<Vec<_>, _>>()?;

        let kept = board.batch(|board| {
            let mut kept = Vec::with_capacity(built.len());
            for (b, (testset, secret)) in pending.iter().zip(built) {
                let record = TestSetRecord {
                    statement: Statement::Range { bid_seq: b.seq },
                    testset,
                };
                kept.push((self.post(board, EntryKind::Testset, &record)?, secret));
            }
            Ok::<_, ProtocolError>(kept)
        })?;
        let count = kept.len();
        self.range_secrets.extend(kept);
        Ok(count)
    }

    fn evaluate(&self, bid: &SealedBid) -> Evaluation {
        let k = self.terms.attribute_count();
        if bid.attribute_ciphers.len() != k + 1 {
            return Evaluation::Disqualified(format!(
                "expected {} value ciphers, got {}",
                k + 1,
                bid.attribute_ciphers.len()
            ));
        }
        let Ok(codes) = bid
            .attribute_ciphers
            .iter()
            .map(|c| self.sk.decrypt(c).map(|m| m.0))
            .collect::<Result<Vec<BigUint>, _>>()
        else {
            return Evaluation::Disqualified("malformed value cipher".into());
        };
        let Some((values, price)) = self.terms.decode_bid_values(&codes) else {
            return Evaluation::Disqualified("value outside its published range".into());
        };
        let expected = match self
            .terms
            .scoring
            .raw_score(&values, &price)
            .and_then(|raw| encode_score(&raw, self.terms.t))
        {
            Ok(score) => score,
            Err(e) => return Evaluation::Disqualified(e.to_string()),
        };
        let Ok(claim) = self.sk.decrypt(&bid.score_cipher) else {
            return Evaluation::Disqualified("malformed score cipher".into());
        };
        if claim.0 != BigUint::from(expected.0) {
            return Evaluation::Disqualified("score claim does not match the bid".into());
        }
        match self.sk.recover_randomness(&bid.score_cipher, &claim) {
            Ok(help) => Evaluation::Valid { score: expected, help },
            Err(_) => Evaluation::Disqualified("malformed score cipher".into()),
        }
    }

    /// Closes bidding if needed, decrypts and checks every bid, picks the
    /// winner and publishes all proofs and the outcome.
    pub fn open_and_prove<R: RngCore + CryptoRng>(
        &mut self,
        board: &mut BulletinBoard,
        rng: &mut R,
    ) -> Result<Outcome, ProtocolError> {
        self.close(board, rng)?;
        let view = self.view(board)?;
        let pk = &self.terms.public_key;
        let t = self.terms.t;
        let range_sets = view.range_testsets();

        let evaluations: Vec<Evaluation> = view.bids.par_iter().map(|b| self.evaluate(&b.bid)).collect();
        let mut valid = Vec::new();
        let mut disqualified = Vec::new();
        for (b, evaluation) in view.bids.iter().zip(evaluations) {
            match (evaluation, range_sets.get(&b.seq)) {
                (Evaluation::Valid { score, help }, Some(&(testset_seq, testset))) => {
                    let opening = Opening {
                        value: score.0.into(),
                        help,
                    };
                    valid.push((b, score, opening, testset_seq, testset));
                }
                (Evaluation::Valid { .. }, None) => disqualified.push(Disqualification {
                    pseudonym: b.author,
                    bid_seq: b.seq,
                    reason: "no range test set".into(),
                }),
                (Evaluation::Disqualified(reason), _) => disqualified.push(Disqualification {
                    pseudonym: b.author,
                    bid_seq: b.seq,
                    reason,
                }),
            }
        }

        let missing: Vec<u64> = valid
            .iter()
            .map(|v| v.3)
            .filter(|seq| !self.range_secrets.contains_key(seq))
            .collect();
        let recovered = missing
            .par_iter()
            .map(|seq| TestSetSecret::recover(&self.sk, &view.testsets[seq].testset).map(|s| (*seq, s)))
            .collect::<Result<Vec<_>, _>>()?;
        self.range_secrets.extend(recovered);

        let scored: Vec<ScoredBid> = valid
            .iter()
            .map(|(b, score, ..)| ScoredBid {
                pseudonym: b.author,
                score: *score,
                seq: b.seq,
            })
            .collect();
        let winner = determine_winner(&scored).ok().copied();
        let winner_index = winner.map(|w| valid.iter().position(|v| v.0.seq == w.seq).expect("winner is valid"));

        let pending: Vec<PendingGeq> = match winner_index {
            None => Vec::new(),
            Some(wi) => {
                let (wb, _, w_opening, ..) = &valid[wi];
                let losers: Vec<usize> = (0..valid.len()).filter(|&i| i != wi).collect();
                losers
                    .par_iter()
                    .zip(seeds(rng, losers.len()))
                    .map(|(&i, seed)| {
                        let (lb, _, l_opening, ..) = &valid[i];
                        // A tied loser that bid earlier would have won, so the
                        // winner must be strictly ahead of it.
                        let strict = lb.seq < wb.seq;
                        let difference = difference_cipher(pk, &wb.bid.score_cipher, &lb.bid.score_cipher, strict)?;
                        let opening = difference_opening(pk, w_opening, l_opening, strict)?;
                        let (testset, secret) = build_test_set(pk, &difference, t, &mut ChaCha20Rng::from_seed(seed))?;
                        Ok(PendingGeq {
                            loser: i,
                            statement: Statement::Geq {
                                minuend_seq: wb.seq,
                                subtrahend_seq: lb.seq,
                                strict,
                            },
                            difference,
                            opening,
                            testset,
                            secret,
                        })
                    })
                    .collect::<Result<Vec<_>, ProtocolError>>()?
            }
        };

        let outcome = board.batch(|board| {
            let mut range_proofs = Vec::with_capacity(valid.len());
            for (b, _, opening, testset_seq, testset) in &valid {
                let proof = prove_range(
                    pk,
                    &b.bid.score_cipher,
                    opening,
                    testset,
                    &self.range_secrets[testset_seq],
                    testset_seq.to_string(),
                    rng,
                )?;
                let statement = Statement::Range { bid_seq: b.seq };
                let proof_seq = self.post(board, EntryKind::Proof, &ProofRecord { statement, proof })?;
                range_proofs.push(ProofRef {
                    pseudonym: b.author,
                    bid_seq: b.seq,
                    testset_seq: *testset_seq,
                    proof_seq,
                });
            }

            let mut loser_proofs = Vec::with_capacity(pending.len());
            for geq in pending {
                let lb = valid[geq.loser].0;
                let testset_seq = self.post(
                    board,
                    EntryKind::Testset,
                    &TestSetRecord {
                        statement: geq.statement,
                        testset: geq.testset.clone(),
                    },
                )?;
                let proof = prove_range(
                    pk,
                    &geq.difference,
                    &geq.opening,
                    &geq.testset,
                    &geq.secret,
                    testset_seq.to_string(),
                    rng,
                )?;
                let record = ProofRecord {
                    statement: geq.statement,
                    proof,
                };
                let proof_seq = self.post(board, EntryKind::Proof, &record)?;
                loser_proofs.push(ProofRef {
                    pseudonym: lb.author,
                    bid_seq: lb.seq,
                    testset_seq,
                    proof_seq,
                });
            }

            let outcome = Outcome {
                winner: winner_index.map(|wi| {
                    let (b, score, opening, ..) = &valid[wi];
                    WinnerRecord {
                        pseudonym: b.author,
                        bid_seq: b.seq,
                        score: *score,
                        score_help: opening.help.clone(),
                    }
                }),
                range_proofs,
                loser_proofs,
                disqualified: disqualified.clone(),
            };
            self.post(board, EntryKind::Outcome, &outcome)?;
            Ok::<_, ProtocolError>(outcome)
        })?;
        Ok(outcome)
    }
}
