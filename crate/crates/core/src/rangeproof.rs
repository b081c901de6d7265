//! Test sets and the range protocol over Paillier ciphertexts.
//!
//! A test set for `C = E(x, r)` is `2t` fresh encryptions in random order:
//! each power of two below `2^t` once, plus `t` encryptions of zero. To show
//! `x < 2^t` the prover hands over `t` of them, namely the powers of two in
//! `x`'s binary expansion padded with zeros, together with
//! `s = r⁻¹ · Π s_j mod n`. Anyone can then check
//!
//! ```text
//! C⁻¹ · Π G_j ≡ s^n (mod n²)
//! ```
//!
//! which holds exactly when the handed-over plaintexts sum to `x`. Because the
//! handover always has `t` elements, the popcount of `x` stays hidden.
//!
//! Inequalities reduce to ranges: `x ≥ y` is a range proof on
//! `E(x) · E(y)⁻¹`, and `x > y` on `E(x) · (E(y) · (n + 1))⁻¹`.
//!
//! Nothing here proves a test set is well formed; verifiers trust the
//! auctioneer to encrypt the right multiset.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::paillier::{Ciphertext, HelpValue, PaillierError, PaillierPrivateKey, PaillierPublicKey, Plaintext};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RangeProofError {
    #[error("range bound 2^{0} is not below n/2")]
    Parameter(u32),
    #[error("value is not below 2^t")]
    OutOfRange,
    #[error("ciphertext does not encrypt the claimed value under the claimed help value")]
    Inconsistent,
    #[error("cannot prove the comparison: minuend is smaller")]
    CannotProve,
    #[error("test set secret does not describe this test set")]
    SecretMismatch,
    #[error(transparent)]
    Paillier(#[from] PaillierError),
}

/// Why a verifier refused a proof.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Rejection {
    #[error("test set is malformed")]
    MalformedTestSet,
    #[error("test set speaks about a different ciphertext")]
    CipherMismatch,
    #[error("expected {expected} handover indices, got {actual}")]
    IndexCount { expected: usize, actual: usize },
    #[error("handover index {0} repeated")]
    DuplicateIndex(usize),
    #[error("handover index {0} outside the test set")]
    IndexOutOfRange(usize),
    #[error("help value is not a unit modulo n")]
    InvalidHelpValue,
    #[error("ciphertext is not a unit modulo n^2")]
    MalformedCiphertext,
    #[error("handover does not cancel to an encryption of zero")]
    EquationFails,
    #[error("proof strictness differs from the statement")]
    StrictnessMismatch,
}

/// True when `2^t < n / 2`.
pub fn bound_fits(pk: &PaillierPublicKey, t: u32) -> bool {
    t >= 1 && (BigUint::one() << (t as usize + 1)) < *pk.n()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSet {
    /// The ciphertext `C` the set is built for.
    pub cipher: Ciphertext,
    pub t: u32,
    pub elements: Vec<Ciphertext>,
}

/// Prover-side plaintexts and help values, aligned with `TestSet::elements`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSetSecret {
    pub openings: Vec<(BigUint, HelpValue)>,
}

impl TestSetSecret {
    /// Rebuilds the secret side table from a published set using the private key.
    pub fn recover(sk: &PaillierPrivateKey, ts: &TestSet) -> Result<Self, RangeProofError> {
        let openings = ts
            .elements
            .iter()
            .map(|g| {
                let u = sk.decrypt(g)?;
                let s = sk.recover_randomness(g, &u)?;
                Ok((u.0, s))
            })
            .collect::<Result<Vec<_>, PaillierError>>()?;
        Ok(TestSetSecret { openings })
    }
}

/// A ciphertext's plaintext and help value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Opening {
    pub value: BigUint,
    pub help: HelpValue,
}

/// Handover values for one range assertion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeProof {
    pub testset_id: String,
    pub indices: Vec<usize>,
    pub s: HelpValue,
}

/// Statement `minuend ≥ subtrahend` (or `>` when strict) about two board ciphers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub minuend_seq: u64,
    pub subtrahend_seq: u64,
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeqProof {
    #[serde(flatten)]
    pub comparison: Comparison,
    pub difference_proof: RangeProof,
}

pub fn build_test_set<R: RngCore + CryptoRng>(
    pk: &PaillierPublicKey,
    c: &Ciphertext,
    t: u32,
    rng: &mut R,
) -> Result<(TestSet, TestSetSecret), RangeProofError> {
    if !bound_fits(pk, t) {
        return Err(RangeProofError::Parameter(t));
    }
    let mut values: Vec<BigUint> = (0..t)
        .map(|k| BigUint::one() << k as usize)
        .chain((0..t).map(|_| BigUint::zero()))
        .collect();
    values.shuffle(rng);

    let mut elements = Vec::with_capacity(values.len());
    let mut openings = Vec::with_capacity(values.len());
    for u in values {
        let (g, s) = pk.encrypt_random(&Plaintext(u.clone()), rng)?;
        elements.push(g);
        openings.push((u, s));
    }
    Ok((
        TestSet {
            cipher: c.clone(),
            t,
            elements,
        },
        TestSetSecret { openings },
    ))
}

/// Selects the handover for `x` and computes the combined help value.
#[allow(clippy::too_many_arguments)]
pub fn prove_range<R: RngCore + CryptoRng>(
    pk: &PaillierPublicKey,
    c: &Ciphertext,
    x: &Opening,
    ts: &TestSet,
    secret: &TestSetSecret,
    testset_id: impl Into<String>,
    rng: &mut R,
) -> Result<RangeProof, RangeProofError> {
    let t = ts.t as usize;
    if x.value >= BigUint::one() << t {
        return Err(RangeProofError::OutOfRange);
    }
    if ts.cipher != *c || secret.openings.len() != 2 * t || ts.elements.len() != 2 * t {
        return Err(RangeProofError::SecretMismatch);
    }
    if pk.encrypt(&Plaintext(x.value.clone()), &x.help)? != *c {
        return Err(RangeProofError::Inconsistent);
    }

    let mut indices = Vec::with_capacity(t);
    for k in 0..t as u64 {
        if x.value.bit(k) {
            let power = BigUint::one() << k as usize;
            let index = secret
                .openings
                .iter()
                .position(|(u, _)| *u == power)
                .ok_or(RangeProofError::SecretMismatch)?;
            indices.push(index);
        }
    }
    let zeros: Vec<usize> = secret
        .openings
        .iter()
        .enumerate()
        .filter(|(_, (u, _))| u.is_zero())
        .map(|(i, _)| i)
        .collect();
    let padding = t - indices.len();
    if zeros.len() < padding {
        return Err(RangeProofError::SecretMismatch);
    }
    indices.extend(zeros.choose_multiple(rng, padding).copied());
    indices.sort_unstable();

    let r_inv = pk.invert_help_value(&x.help)?;
    let s = pk.combine_help_values(std::iter::once(&r_inv).chain(indices.iter().map(|&i| &secret.openings[i].1)));
    Ok(RangeProof {
        testset_id: testset_id.into(),
        indices,
        s,
    })
}

/// Public check that `c` encrypts a value below `2^t`.
pub fn verify_range(pk: &PaillierPublicKey, c: &Ciphertext, ts: &TestSet, proof: &RangeProof) -> Result<(), Rejection> {
    let t = ts.t as usize;
    if !bound_fits(pk, ts.t) || ts.elements.len() != 2 * t {
        return Err(Rejection::MalformedTestSet);
    }
    if ts.cipher != *c {
        return Err(Rejection::CipherMismatch);
    }
    if proof.indices.len() != t {
        return Err(Rejection::IndexCount {
            expected: t,
            actual: proof.indices.len(),
        });
    }
    let mut seen = HashSet::with_capacity(t);
    for &i in &proof.indices {
        if i >= 2 * t {
            return Err(Rejection::IndexOutOfRange(i));
        }
        if !seen.insert(i) {
            return Err(Rejection::DuplicateIndex(i));
        }
    }
    if !pk.is_valid_help_value(&proof.s) {
        return Err(Rejection::InvalidHelpValue);
    }
    if !pk.is_valid_ciphertext(c) || proof.indices.iter().any(|&i| !pk.is_valid_ciphertext(&ts.elements[i])) {
        return Err(Rejection::MalformedCiphertext);
    }

    let nn = pk.n_squared();
    let c_inv = pk.cipher_invert(c).map_err(|_| Rejection::MalformedCiphertext)?;
    let lhs = proof
        .indices
        .iter()
        .fold(c_inv.0, |acc, &i| acc * ts.elements[i].value() % nn);
    let rhs = proof.s.value().modpow(pk.n(), nn);
    if lhs == rhs {
        Ok(())
    } else {
        Err(Rejection::EquationFails)
    }
}

/// `E(x − y)` (or `E(x − y − 1)` when strict), computable by anyone.
pub fn difference_cipher(
    pk: &PaillierPublicKey,
    cx: &Ciphertext,
    cy: &Ciphertext,
    strict: bool,
) -> Result<Ciphertext, PaillierError> {
    let subtrahend = if strict {
        pk.hom_add_const(cy, &BigUint::one())?
    } else {
        cy.clone()
    };
    pk.hom_add(cx, &pk.cipher_invert(&subtrahend)?)
}

/// Opening of [`difference_cipher`]: value `x − y (− 1)`, help `rx · ry⁻¹`.
pub fn difference_opening(
    pk: &PaillierPublicKey,
    x: &Opening,
    y: &Opening,
    strict: bool,
) -> Result<Opening, RangeProofError> {
    let subtrahend = if strict { &y.value + 1u32 } else { y.value.clone() };
    if strict && subtrahend >= *pk.n() {
        // y = n − 1 has no successor in Z_n.
        return Err(RangeProofError::CannotProve);
    }
    if x.value < subtrahend {
        return Err(RangeProofError::CannotProve);
    }
    let help = pk.combine_help_values([&x.help, &pk.invert_help_value(&y.help)?]);
    Ok(Opening {
        value: &x.value - subtrahend,
        help,
    })
}

/// Proves `x ≥ y` (or `x > y` when `comparison.strict`) for `cx = E(x)`, `cy = E(y)`.
#[allow(clippy::too_many_arguments)]
pub fn prove_geq<R: RngCore + CryptoRng>(
    pk: &PaillierPublicKey,
    comparison: Comparison,
    cx: &Ciphertext,
    cy: &Ciphertext,
    x: &Opening,
    y: &Opening,
    t: u32,
    testset_id: impl Into<String>,
    rng: &mut R,
) -> Result<(TestSet, GeqProof), RangeProofError> {
    let bound = BigUint::one() << t as usize;
    if x.value >= bound || y.value >= bound {
        return Err(RangeProofError::OutOfRange);
    }
    let opening = difference_opening(pk, x, y, comparison.strict)?;
    let d = difference_cipher(pk, cx, cy, comparison.strict)?;
    let (ts, secret) = build_test_set(pk, &d, t, rng)?;
    let difference_proof = prove_range(pk, &d, &opening, &ts, &secret, testset_id, rng)?;
    Ok((
        ts,
        GeqProof {
            comparison,
            difference_proof,
        },
    ))
}

/// [`prove_geq`] for `x > y`, i.e. `x ≥ y + 1`.
#[allow(clippy::too_many_arguments)]
pub fn prove_strict_gt<R: RngCore + CryptoRng>(
    pk: &PaillierPublicKey,
    minuend_seq: u64,
    subtrahend_seq: u64,
    cx: &Ciphertext,
    cy: &Ciphertext,
    x: &Opening,
    y: &Opening,
    t: u32,
    testset_id: impl Into<String>,
    rng: &mut R,
) -> Result<(TestSet, GeqProof), RangeProofError> {
    let comparison = Comparison {
        minuend_seq,
        subtrahend_seq,
        strict: true,
    };
    prove_geq(pk, comparison, cx, cy, x, y, t, testset_id, rng)
}

/// Public check of an inequality proof; the difference cipher is recomputed
/// from `cx` and `cy`, never taken from the prover.
pub fn verify_geq(
    pk: &PaillierPublicKey,
    cx: &Ciphertext,
    cy: &Ciphertext,
    ts: &TestSet,
    proof: &GeqProof,
    strict: bool,
) -> Result<(), Rejection> {
    if proof.comparison.strict != strict {
        return Err(Rejection::StrictnessMismatch);
    }
    let d = difference_cipher(pk, cx, cy, strict).map_err(|_| Rejection::MalformedCiphertext)?;
    verify_range(pk, &d, ts, &proof.difference_proof)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paillier::keygen_insecure;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn toy() -> PaillierPrivateKey {
        PaillierPrivateKey::from_primes(5u32.into(), 7u32.into()).unwrap()
    }

    fn encrypt(pk: &PaillierPublicKey, x: u64, rng: &mut ChaCha20Rng) -> (Ciphertext, Opening) {
        let (c, help) = pk.encrypt_random(&x.into(), rng).unwrap();
        (c, Opening { value: x.into(), help })
    }

    fn plaintexts(sk: &PaillierPrivateKey, ts: &TestSet) -> Vec<u64> {
        let mut v: Vec<u64> = ts
            .elements
            .iter()
            .map(|g| u64::try_from(sk.decrypt(g).unwrap().0).unwrap())
            .collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn test_set_multisets() {
        let sk = toy();
        let pk = sk.public_key();
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        let c = Ciphertext(1u32.into());
        let (ts, _) = build_test_set(pk, &c, 3, &mut rng).unwrap();
        assert_eq!(ts.elements.len(), 6);
        assert_eq!(plaintexts(&sk, &ts), vec![0, 0, 0, 1, 2, 4]);
        let (ts, _) = build_test_set(pk, &c, 1, &mut rng).unwrap();
        assert_eq!(plaintexts(&sk, &ts), vec![0, 1]);
        // 16 < 17.5 but 32 is not.
        assert!(build_test_set(pk, &c, 4, &mut rng).is_ok());
        assert_eq!(build_test_set(pk, &c, 5, &mut rng), Err(RangeProofError::Parameter(5)));
    }

    #[test]
    fn test_sets_decrypt_to_required_multiset() {
        let mut rng = ChaCha20Rng::seed_from_u64(32);
        let (pk, sk) = keygen_insecure(64, &mut rng).unwrap();
        let mut expected: Vec<u64> = (0..8).map(|k| 1 << k).chain([0; 8]).collect();
        expected.sort_unstable();
        for _ in 0..100 {
            let (c, _) = encrypt(&pk, 3, &mut rng);
            let (ts, secret) = build_test_set(&pk, &c, 8, &mut rng).unwrap();
            assert_eq!(plaintexts(&sk, &ts), expected);
            assert_eq!(TestSetSecret::recover(&sk, &ts).unwrap(), secret);
        }
    }

    #[test]
    fn shuffle_places_each_power_uniformly() {
        // t = 2: four slots, the value 1 should land in each about a quarter of the time.
        let mut rng = ChaCha20Rng::seed_from_u64(33);
        let (pk, _) = keygen_insecure(32, &mut rng).unwrap();
        let c = Ciphertext(1u32.into());
        let mut counts = [0u32; 4];
        let trials = 4000;
        for _ in 0..trials {
            let (_, secret) = build_test_set(&pk, &c, 2, &mut rng).unwrap();
            let slot = secret.openings.iter().position(|(u, _)| u.is_one()).unwrap();
            counts[slot] += 1;
        }
        // Chi-square with 3 degrees of freedom; 16.27 is the 0.1% critical value.
        let expected = trials as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 16.27, "counts {counts:?}");
    }

    #[test]
    fn five_at_toy_key() {
        let sk = toy();
        let pk = sk.public_key();
        let mut rng = ChaCha20Rng::seed_from_u64(34);
        let (c, x) = encrypt(pk, 5, &mut rng);
        let (ts, secret) = build_test_set(pk, &c, 3, &mut rng).unwrap();
        let proof = prove_range(pk, &c, &x, &ts, &secret, "ts", &mut rng).unwrap();
        let mut handed: Vec<u64> = proof
            .indices
            .iter()
            .map(|&i| u64::try_from(secret.openings[i].0.clone()).unwrap())
            .collect();
        handed.sort_unstable();
        assert_eq!(handed, vec![0, 1, 4]);
        assert_eq!(verify_range(pk, &c, &ts, &proof), Ok(()));

        // Bit-exact: c⁻¹ · ΠG = s^n mod n².
        let nn = pk.n_squared();
        let mut lhs = pk.cipher_invert(&c).unwrap().0;
        for &i in &proof.indices {
            lhs = lhs * ts.elements[i].value() % nn;
        }
        assert_eq!(lhs, proof.s.value().modpow(pk.n(), nn));
    }

    #[test]
    fn zero_hands_over_only_zero_encryptions() {
        let sk = toy();
        let pk = sk.public_key();
        let mut rng = ChaCha20Rng::seed_from_u64(35);
        let (c, x) = encrypt(pk, 0, &mut rng);
        let (ts, secret) = build_test_set(pk, &c, 3, &mut rng).unwrap();
        let proof = prove_range(pk, &c, &x, &ts, &secret, "ts", &mut rng).unwrap();
        assert_eq!(proof.indices.len(), 3);
        assert!(proof.indices.iter().all(|&i| secret.openings[i].0.is_zero()));
        assert_eq!(verify_range(pk, &c, &ts, &proof), Ok(()));
    }

    #[test]
    fn exhaustive_completeness_t6() {
        let mut rng = ChaCha20Rng::seed_from_u64(36);
        let (pk, _) = keygen_insecure(32, &mut rng).unwrap();
        for x in 0..64u64 {
            let (c, opening) = encrypt(&pk, x, &mut rng);
            let (ts, secret) = build_test_set(&pk, &c, 6, &mut rng).unwrap();
            let proof = prove_range(&pk, &c, &opening, &ts, &secret, x.to_string(), &mut rng).unwrap();
            assert_eq!(proof.indices.len(), 6);
            assert_eq!(verify_range(&pk, &c, &ts, &proof), Ok(()), "x={x}");
        }
    }

    #[test]
    fn prover_errors() {
        let mut rng = ChaCha20Rng::seed_from_u64(37);
        let (pk, _) = keygen_insecure(32, &mut rng).unwrap();
        let (c, x) = encrypt(&pk, 64, &mut rng);
        let (ts, secret) = build_test_set(&pk, &c, 6, &mut rng).unwrap();
        assert_eq!(
            prove_range(&pk, &c, &x, &ts, &secret, "", &mut rng),
            Err(RangeProofError::OutOfRange)
        );
        let (c, mut x) = encrypt(&pk, 9, &mut rng);
        let (ts, secret) = build_test_set(&pk, &c, 6, &mut rng).unwrap();
        x.value = 10u32.into();
        assert_eq!(
            prove_range(&pk, &c, &x, &ts, &secret, "", &mut rng),
            Err(RangeProofError::Inconsistent)
        );
    }

    #[test]
    fn tampered_proofs_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(38);
        let (pk, _) = keygen_insecure(64, &mut rng).unwrap();
        for trial in 0..200 {
            let x = rng.gen_range(0..256u64);
            let (c, opening) = encrypt(&pk, x, &mut rng);
            let (ts, secret) = build_test_set(&pk, &c, 8, &mut rng).unwrap();
            let proof = prove_range(&pk, &c, &opening, &ts, &secret, "", &mut rng).unwrap();

            let mut swapped = proof.clone();
            let unused = (0..16).find(|i| !proof.indices.contains(i)).unwrap();
            // Swapping a zero for a zero still verifies: the handover is the same
            // plaintext multiset. Swap into a slot holding a different value.
            let pos = trial % 8;
            let replaced = &secret.openings[swapped.indices[pos]].0;
            let unused = (0..16)
                .find(|i| !proof.indices.contains(i) && secret.openings[*i].0 != *replaced)
                .unwrap_or(unused);
            swapped.indices[pos] = unused;
            if secret.openings[unused].0 != *replaced {
                assert!(verify_range(&pk, &c, &ts, &swapped).is_err());
            }

            let mut bad_s = proof.clone();
            bad_s.s = HelpValue((bad_s.s.value() + 1u32) % pk.n());
            assert!(verify_range(&pk, &c, &ts, &bad_s).is_err());

            let mut dup = proof.clone();
            dup.indices[1] = dup.indices[0];
            assert_eq!(
                verify_range(&pk, &c, &ts, &dup),
                Err(Rejection::DuplicateIndex(dup.indices[0]))
            );

            let mut short = proof.clone();
            short.indices.pop();
            assert!(matches!(
                verify_range(&pk, &c, &ts, &short),
                Err(Rejection::IndexCount { .. })
            ));

            let mut oob = proof.clone();
            oob.indices[0] = 16;
            assert_eq!(verify_range(&pk, &c, &ts, &oob), Err(Rejection::IndexOutOfRange(16)));
        }
    }

    #[test]
    fn geq_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(39);
        let (pk, sk) = keygen_insecure(64, &mut rng).unwrap();
        let cmp = |strict| Comparison {
            minuend_seq: 1,
            subtrahend_seq: 2,
            strict,
        };

        let (c7, o7) = encrypt(&pk, 7, &mut rng);
        let (c3, o3) = encrypt(&pk, 3, &mut rng);
        let (ts, proof) = prove_geq(&pk, cmp(false), &c7, &c3, &o7, &o3, 4, "d", &mut rng).unwrap();
        assert_eq!(verify_geq(&pk, &c7, &c3, &ts, &proof, false), Ok(()));
        assert_eq!(sk.decrypt(&ts.cipher).unwrap(), 4.into());
        // Swapped operands: the recomputed difference no longer matches the set.
        assert_eq!(
            verify_geq(&pk, &c3, &c7, &ts, &proof, false),
            Err(Rejection::CipherMismatch)
        );
        assert_eq!(
            verify_geq(&pk, &c7, &c3, &ts, &proof, true),
            Err(Rejection::StrictnessMismatch)
        );
        assert_eq!(
            prove_geq(&pk, cmp(false), &c3, &c7, &o3, &o7, 4, "d", &mut rng).unwrap_err(),
            RangeProofError::CannotProve
        );

        let (c7b, o7b) = encrypt(&pk, 7, &mut rng);
        let (ts, proof) = prove_geq(&pk, cmp(false), &c7, &c7b, &o7, &o7b, 4, "d", &mut rng).unwrap();
        assert_eq!(verify_geq(&pk, &c7, &c7b, &ts, &proof, false), Ok(()));
        assert_eq!(sk.decrypt(&ts.cipher).unwrap(), 0.into());
        assert_eq!(
            prove_strict_gt(&pk, 1, 2, &c7, &c7b, &o7, &o7b, 4, "d", &mut rng).unwrap_err(),
            RangeProofError::CannotProve
        );

        let (c10, o10) = encrypt(&pk, 10, &mut rng);
        let (c9, o9) = encrypt(&pk, 9, &mut rng);
        let (ts, proof) = prove_strict_gt(&pk, 1, 2, &c10, &c9, &o10, &o9, 5, "d", &mut rng).unwrap();
        assert_eq!(verify_geq(&pk, &c10, &c9, &ts, &proof, true), Ok(()));
        assert_eq!(sk.decrypt(&ts.cipher).unwrap(), 0.into());

        let (c1, o1) = encrypt(&pk, 1, &mut rng);
        let (c0, o0) = encrypt(&pk, 0, &mut rng);
        let (ts, proof) = prove_strict_gt(&pk, 1, 2, &c1, &c0, &o1, &o0, 5, "d", &mut rng).unwrap();
        assert_eq!(verify_geq(&pk, &c1, &c0, &ts, &proof, true), Ok(()));
    }

    #[test]
    fn records_serialize_to_wire_shape() {
        let ts = TestSet {
            cipher: Ciphertext(255u32.into()),
            t: 1,
            elements: vec![Ciphertext(1u32.into()), Ciphertext(16u32.into())],
        };
        assert_eq!(
            serde_json::to_string(&ts).unwrap(),
            r#"{"cipher":"ff","t":1,"elements":["1","10"]}"#
        );
        let proof = RangeProof {
            testset_id: "12".into(),
            indices: vec![0],
            s: HelpValue::from(10),
        };
        assert_eq!(
            serde_json::to_string(&proof).unwrap(),
            r#"{"testset_id":"12","indices":[0],"s":"a"}"#
        );
    }
}
