use std::collections::{BTreeSet, HashSet};
use std::fmt;

use num_bigint::BigUint;
use rayon::prelude::*;

use super::{AuctionView, ProofRef, Statement};
use crate::bulletin::{judge_appeal, verify_chain, AppealRecord, AppealVerdict, BulletinEntry, EntryKind};
use crate::paillier::{PaillierPublicKey, Plaintext};
use crate::rangeproof::{verify_geq, verify_range, Comparison, GeqProof, RangeProof, TestSet};

/// The first check that failed, e.g. `winner: re-encryption mismatch`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub check: &'static str,
    pub detail: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.check, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(Failure),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn failure(&self) -> Option<&Failure> {
        match self {
            Verdict::Valid => None,
            Verdict::Invalid(f) => Some(f),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => f.write_str("VALID"),
            Verdict::Invalid(failure) => write!(f, "INVALID: {failure}"),
        }
    }
}

fn fail(check: &'static str, detail: impl Into<String>) -> Failure {
    Failure {
        check,
        detail: detail.into(),
    }
}

/// Checks a finished auction from public board data alone.
///
/// In order: the hash chain and every signature; the terms; that bids were
/// posted on time, once per pseudonym; that the outcome accounts for every
/// bid exactly once; the winner's opening; every range proof; every loser
/// inequality proof; and that no appeal is upheld.
pub fn verify_outcome(entries: &[BulletinEntry]) -> Verdict {
    match check(entries) {
        Ok(()) => Verdict::Valid,
        Err(failure) => Verdict::Invalid(failure),
    }
}

fn first_error(results: Vec<Result<(), Failure>>) -> Result<(), Failure> {
    results.into_iter().collect()
}

fn check(entries: &[BulletinEntry]) -> Result<(), Failure> {
    verify_chain(entries).map_err(|e| fail("chain", e.to_string()))?;
    let view = AuctionView::parse(entries).map_err(|e| fail("records", e.to_string()))?;
    let terms = view.terms();
    terms.validate().map_err(|e| fail("terms", e.to_string()))?;
    let pk = &terms.public_key;

    let mut bidders = HashSet::new();
    for b in &view.bids {
        let on_time = entries[b.seq as usize].timestamp().is_some_and(|t| t < terms.deadline);
        if !on_time {
            return Err(fail("bids", format!("bid {} was posted after the deadline", b.seq)));
        }
        if b.bid.pseudonym != b.author {
            return Err(fail(
                "bids",
                format!("bid {} names a pseudonym other than its author", b.seq),
            ));
        }
        if !bidders.insert(b.author) {
            return Err(fail("bids", format!("pseudonym {} bid twice", b.author)));
        }
    }

    let (outcome_seq, outcome) = view
        .outcome
        .as_ref()
        .ok_or_else(|| fail("outcome", "no outcome published"))?;
    if let Some(e) = entries[*outcome_seq as usize + 1..]
        .iter()
        .find(|e| e.kind != EntryKind::Appeal)
    {
        return Err(fail(
            "outcome",
            format!("{} entry {} follows the outcome", e.kind, e.seq),
        ));
    }

    check_coverage(&view)?;

    if let Some(w) = &outcome.winner {
        let bid = view.bid(w.bid_seq).expect("coverage checked");
        if w.pseudonym != bid.author {
            return Err(fail("winner", "winner pseudonym differs from the bid's author"));
        }
        if BigUint::from(w.score.0) >= terms.bound() {
            return Err(fail("winner", "published score is not below 2^t"));
        }
        if !pk.is_valid_help_value(&w.score_help) {
            return Err(fail("winner", "published help value is not a unit"));
        }
        let reencrypted = pk
            .encrypt(&Plaintext(w.score.0.into()), &w.score_help)
            .map_err(|e| fail("winner", e.to_string()))?;
        if reencrypted != bid.bid.score_cipher {
            return Err(fail(
                "winner",
                "re-encrypting the published score does not give the bid's score cipher",
            ));
        }
    }

    first_error(
        outcome
            .range_proofs
            .par_iter()
            .map(|r| check_range_proof(&view, pk, r))
            .collect(),
    )?;

    if let Some(w) = &outcome.winner {
        first_error(
            outcome
                .loser_proofs
                .par_iter()
                .map(|r| check_loser_proof(&view, pk, w.bid_seq, r))
                .collect(),
        )?;
    }

    for e in entries.iter().filter(|e| e.kind == EntryKind::Appeal) {
        let Ok(record) = serde_json::from_value::<AppealRecord>(e.payload.clone()) else {
            continue;
        };
        // Malformed receipts are rejected appeals and do not count.
        if let Ok(AppealVerdict::Upheld) = judge_appeal(entries, &record.receipt) {
            return Err(fail(
                "appeal",
                format!(
                    "appeal {} shows receipted entry {} is missing",
                    e.seq, record.receipt.entry_seq
                ),
            ));
        }
    }
    Ok(())
}

/// Every bid is either disqualified or valid; every valid bid has one range
/// proof; every valid bid but the winner has one loser proof; no test set or
/// proof entry is used twice.
fn check_coverage(view: &AuctionView) -> Result<(), Failure> {
    let (_, outcome) = view.outcome.as_ref().expect("outcome present");
    let bids: BTreeSet<u64> = view.bids.iter().map(|b| b.seq).collect();

    let mut disqualified = BTreeSet::new();
    for d in &outcome.disqualified {
        let bid = view
            .bid(d.bid_seq)
            .ok_or_else(|| fail("coverage", format!("disqualified entry {} is not a bid", d.bid_seq)))?;
        if bid.author != d.pseudonym {
            return Err(fail(
                "coverage",
                format!("disqualification {} names the wrong pseudonym", d.bid_seq),
            ));
        }
        if !disqualified.insert(d.bid_seq) {
            return Err(fail("coverage", format!("bid {} disqualified twice", d.bid_seq)));
        }
    }
    let valid: BTreeSet<u64> = bids.difference(&disqualified).copied().collect();

    let seqs_of = |refs: &[ProofRef], what: &str| -> Result<BTreeSet<u64>, Failure> {
        let mut seen = BTreeSet::new();
        for r in refs {
            let bid = view
                .bid(r.bid_seq)
                .ok_or_else(|| fail("coverage", format!("{what} for entry {} which is not a bid", r.bid_seq)))?;
            if bid.author != r.pseudonym {
                return Err(fail(
                    "coverage",
                    format!("{what} for bid {} names the wrong pseudonym", r.bid_seq),
                ));
            }
            if !seen.insert(r.bid_seq) {
                return Err(fail("coverage", format!("bid {} has two {what}s", r.bid_seq)));
            }
        }
        Ok(seen)
    };

    let ranged = seqs_of(&outcome.range_proofs, "range proof")?;
    if ranged != valid {
        let missing: Vec<_> = valid.difference(&ranged).collect();
        return Err(fail(
            "coverage",
            format!("range proofs do not match the valid bids (missing {missing:?})"),
        ));
    }

    let mut expected_losers = valid.clone();
    match &outcome.winner {
        Some(w) => {
            if !expected_losers.remove(&w.bid_seq) {
                return Err(fail("coverage", format!("winner {} is not a valid bid", w.bid_seq)));
            }
        }
        None if !valid.is_empty() => {
            return Err(fail("coverage", "valid bids exist but no winner is named"));
        }
        None => {}
    }
    let losers = seqs_of(&outcome.loser_proofs, "loser proof")?;
    if losers != expected_losers {
        let missing: Vec<_> = expected_losers.difference(&losers).collect();
        return Err(fail(
            "coverage",
            format!("loser proofs do not match the losing bids (missing {missing:?})"),
        ));
    }

    let mut used = HashSet::new();
    for r in outcome.range_proofs.iter().chain(&outcome.loser_proofs) {
        for seq in [r.testset_seq, r.proof_seq] {
            if !used.insert(seq) {
                return Err(fail("coverage", format!("entry {seq} is referenced twice")));
            }
        }
    }
    Ok(())
}

fn lookup<'a>(
    view: &'a AuctionView,
    r: &ProofRef,
    statement: Statement,
    check: &'static str,
) -> Result<(&'a TestSet, &'a RangeProof), Failure> {
    let testset = view
        .testsets
        .get(&r.testset_seq)
        .ok_or_else(|| fail(check, format!("entry {} is not a test set", r.testset_seq)))?;
    let proof = view
        .proofs
        .get(&r.proof_seq)
        .ok_or_else(|| fail(check, format!("entry {} is not a proof", r.proof_seq)))?;
    if testset.statement != statement || proof.statement != statement {
        return Err(fail(
            check,
            format!(
                "entries {} and {} are about a different statement",
                r.testset_seq, r.proof_seq
            ),
        ));
    }
    if proof.proof.testset_id != r.testset_seq.to_string() {
        return Err(fail(
            check,
            format!("proof {} refers to test set {:?}", r.proof_seq, proof.proof.testset_id),
        ));
    }
    if testset.testset.t != view.terms().t {
        return Err(fail(
            check,
            format!("test set {} uses a different bound", r.testset_seq),
        ));
    }
    Ok((&testset.testset, &proof.proof))
}

fn check_range_proof(view: &AuctionView, pk: &PaillierPublicKey, r: &ProofRef) -> Result<(), Failure> {
    let (testset, proof) = lookup(view, r, Statement::Range { bid_seq: r.bid_seq }, "range")?;
    let cipher = &view.bid(r.bid_seq).expect("coverage checked").bid.score_cipher;
    verify_range(pk, cipher, testset, proof).map_err(|e| fail("range", format!("bid {}: {e}", r.bid_seq)))
}

fn check_loser_proof(view: &AuctionView, pk: &PaillierPublicKey, winner_seq: u64, r: &ProofRef) -> Result<(), Failure> {
    // A loser that bid before the winner must score strictly lower, or the
    // tie-break would have picked it.
    let strict = r.bid_seq < winner_seq;
    let comparison = Comparison {
        minuend_seq: winner_seq,
        subtrahend_seq: r.bid_seq,
        strict,
    };
    let statement = Statement::Geq {
        minuend_seq: winner_seq,
        subtrahend_seq: r.bid_seq,
        strict,
    };
    let (testset, proof) = lookup(view, r, statement, "geq")?;
    let winner = &view.bid(winner_seq).expect("coverage checked").bid.score_cipher;
    let loser = &view.bid(r.bid_seq).expect("coverage checked").bid.score_cipher;
    let geq = GeqProof {
        comparison,
        difference_proof: proof.clone(),
    };
    verify_geq(pk, winner, loser, testset, &geq, strict).map_err(|e| fail("geq", format!("bid {}: {e}", r.bid_seq)))
}
