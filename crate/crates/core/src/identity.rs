//! Bidder pseudonyms and the signature provider used for every board entry.

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signer as _, Verifier as _};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bulletin::{Author, BoardError, BulletinBoard, EntryKind, Receipt};
use crate::codec::{bytes_from_hex, hex_bytes};

pub const PSEUDONYM_LEN: usize = 32;
pub const NONCE_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum IdentityError {
    #[error("unknown signature scheme {0:?}")]
    UnknownScheme(String),
    #[error("malformed {0}")]
    MalformedKey(&'static str),
    #[error("pseudonym {0} is already registered")]
    DuplicatePseudonym(Pseudonym),
    #[error("verification key is already registered")]
    DuplicateKey,
    #[error("registration closed at the auction deadline")]
    AfterDeadline,
    #[error("no auction has been announced on this board")]
    NotAnnounced,
    #[error(transparent)]
    Board(#[from] BoardError),
}

/// A 32-byte user-generated bidder identifier.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pseudonym(pub [u8; PSEUDONYM_LEN]);

impl fmt::Display for Pseudonym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Pseudonym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pseudonym({})", &hex::encode(self.0)[..12])
    }
}

impl FromStr for Pseudonym {
    type Err = crate::codec::CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        bytes_from_hex(s).map(Pseudonym)
    }
}

impl Serialize for Pseudonym {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Pseudonym {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Pseudonym = SHA-256(auction_id ‖ verification_key ‖ nonce).
///
/// The verification key and nonce have fixed lengths for a given scheme, so
/// the concatenation is unambiguous.
pub fn generate_pseudonym(verification_key: &[u8], nonce: &[u8; NONCE_LEN], auction_id: &str) -> Pseudonym {
    let mut hasher = Sha256::new();
    hasher.update(auction_id.as_bytes());
    hasher.update(verification_key);
    hasher.update(nonce);
    Pseudonym(hasher.finalize().into())
}

pub fn random_nonce<R: RngCore + CryptoRng>(rng: &mut R) -> [u8; NONCE_LEN] {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    nonce
}

/// A signature provider. Records carry the provider's id so verifiers can
/// pick the matching implementation.
pub trait SignatureScheme: Sync {
    fn id(&self) -> &'static str;
    /// Derives `(public, private)` key bytes from 32 bytes of seed entropy.
    fn keypair_from_seed(&self, seed: [u8; 32]) -> (Vec<u8>, Vec<u8>);
    fn sign(&self, private_key: &[u8], message: &[u8]) -> Result<Vec<u8>, IdentityError>;
    fn verify(&self, public_key: &[u8], message: &[u8], signature: &[u8]) -> Result<bool, IdentityError>;
}

pub struct Ed25519;

pub const ED25519: &str = "ed25519";

impl SignatureScheme for Ed25519 {
    fn id(&self) -> &'static str {
        ED25519
    }

    fn keypair_from_seed(&self, seed: [u8; 32]) -> (Vec<u8>, Vec<u8>) {
        let key = ed25519_dalek::SigningKey::from_bytes(&seed);
        (key.verifying_key().to_bytes().to_vec(), seed.to_vec())
    }

    fn sign(&self, private_key: &[u8], message: &[u8]) -> Result<Vec<u8>, IdentityError> {
        let seed: [u8; 32] = private_key
            .try_into()
            .map_err(|_| IdentityError::MalformedKey("signing key"))?;
        let key = ed25519_dalek::SigningKey::from_bytes(&seed);
        Ok(key.sign(message).to_bytes().to_vec())
    }

    fn verify(&self, public_key: &[u8], message: &[u8], signature: &[u8]) -> Result<bool, IdentityError> {
        let vk: [u8; 32] = public_key
            .try_into()
            .map_err(|_| IdentityError::MalformedKey("verification key"))?;
        let vk = ed25519_dalek::VerifyingKey::from_bytes(&vk)
            .map_err(|_| IdentityError::MalformedKey("verification key"))?;
        let Ok(sig) = ed25519_dalek::Signature::from_slice(signature) else {
            return Ok(false);
        };
        Ok(vk.verify(message, &sig).is_ok())
    }
}

pub fn scheme_by_id(id: &str) -> Result<&'static dyn SignatureScheme, IdentityError> {
    match id {
        ED25519 => Ok(&Ed25519),
        other => Err(IdentityError::UnknownScheme(other.to_owned())),
    }
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigningKeypair {
    #[serde(rename = "scheme")]
    pub scheme_id: String,
    #[serde(rename = "vk", with = "hex_bytes")]
    pub public_key: Vec<u8>,
    #[serde(rename = "sk", with = "hex_bytes")]
    pub private_key: Vec<u8>,
}

impl fmt::Debug for SigningKeypair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigningKeypair")
            .field("scheme_id", &self.scheme_id)
            .field("public_key", &hex::encode(&self.public_key))
            .finish_non_exhaustive()
    }
}

impl SigningKeypair {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        let (public_key, private_key) = Ed25519.keypair_from_seed(seed);
        SigningKeypair {
            scheme_id: ED25519.to_owned(),
            public_key,
            private_key,
        }
    }

    pub fn sign(&self, message: &[u8]) -> Result<Vec<u8>, IdentityError> {
        sign_entry(self, message)
    }
}

pub fn sign_entry(keypair: &SigningKeypair, message: &[u8]) -> Result<Vec<u8>, IdentityError> {
    scheme_by_id(&keypair.scheme_id)?.sign(&keypair.private_key, message)
}

pub fn verify_signature(
    scheme_id: &str,
    public_key: &[u8],
    message: &[u8],
    signature: &[u8],
) -> Result<bool, IdentityError> {
    scheme_by_id(scheme_id)?.verify(public_key, message, signature)
}

/// Payload of a `register` board entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistrationRecord {
    pub pseudonym: Pseudonym,
    #[serde(with = "hex_bytes")]
    pub vk: Vec<u8>,
    pub scheme: String,
}

/// Binds `pseudonym` to the keypair's verification key on the board.
pub fn register(
    board: &mut BulletinBoard,
    pseudonym: Pseudonym,
    keypair: &SigningKeypair,
) -> Result<Receipt, IdentityError> {
    let deadline = board.deadline().ok_or(IdentityError::NotAnnounced)?;
    if board.now() >= deadline {
        return Err(IdentityError::AfterDeadline);
    }
    if board.registered_key(&pseudonym).is_some() {
        return Err(IdentityError::DuplicatePseudonym(pseudonym));
    }
    if board.pseudonym_for_key(&keypair.public_key).is_some() {
        return Err(IdentityError::DuplicateKey);
    }
    let record = RegistrationRecord {
        pseudonym,
        vk: keypair.public_key.clone(),
        scheme: keypair.scheme_id.clone(),
    };
    let payload = serde_json::to_value(&record).expect("registration record serializes");
    let appended = board.append(EntryKind::Register, payload, Author::Bidder(pseudonym), keypair)?;
    appended.receipt.ok_or(IdentityError::Board(BoardError::NoHost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashSet;

    #[test]
    fn pseudonym_is_deterministic_and_fixed_length() {
        let vk = [7u8; 32];
        let nonce = [1u8; NONCE_LEN];
        let a = generate_pseudonym(&vk, &nonce, "auction-1");
        assert_eq!(a, generate_pseudonym(&vk, &nonce, "auction-1"));
        assert_eq!(a.0.len(), 32);
        assert_eq!(a.to_string().len(), 64);
        assert_ne!(a, generate_pseudonym(&vk, &nonce, "auction-2"));
        assert_eq!(a.to_string().parse::<Pseudonym>().unwrap(), a);
    }

    #[test]
    fn fresh_nonces_never_collide() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let vk = SigningKeypair::generate(&mut rng).public_key;
        let seen: HashSet<_> = (0..10_000)
            .map(|_| generate_pseudonym(&vk, &random_nonce(&mut rng), "a"))
            .collect();
        assert_eq!(seen.len(), 10_000);
    }

    #[test]
    fn signatures_roundtrip_and_detect_bit_flips() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let kp = SigningKeypair::generate(&mut rng);
        let sig = kp.sign(b"").unwrap();
        assert!(verify_signature(ED25519, &kp.public_key, b"", &sig).unwrap());

        for len in 0..1000usize {
            let mut msg = vec![0u8; len % 97 + 1];
            rng.fill_bytes(&mut msg);
            let sig = kp.sign(&msg).unwrap();
            assert!(verify_signature(ED25519, &kp.public_key, &msg, &sig).unwrap());
            if len % 50 == 0 {
                let bit = len % (msg.len() * 8);
                let mut flipped = msg.clone();
                flipped[bit / 8] ^= 1 << (bit % 8);
                assert!(!verify_signature(ED25519, &kp.public_key, &flipped, &sig).unwrap());
                let mut bad_sig = sig.clone();
                bad_sig[len % 64] ^= 0x10;
                assert!(!verify_signature(ED25519, &kp.public_key, &msg, &bad_sig).unwrap());
            }
        }
    }

    #[test]
    fn malformed_keys_are_errors() {
        assert!(matches!(
            verify_signature(ED25519, &[1, 2, 3], b"m", &[0; 64]),
            Err(IdentityError::MalformedKey(_))
        ));
        assert!(matches!(
            verify_signature("rsa", &[0; 32], b"m", &[0; 64]),
            Err(IdentityError::UnknownScheme(_))
        ));
        let kp = SigningKeypair {
            scheme_id: ED25519.into(),
            public_key: vec![],
            private_key: vec![1; 5],
        };
        assert!(kp.sign(b"x").is_err());
    }

    #[test]
    fn keypair_json_shape() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let kp = SigningKeypair::generate(&mut rng);
        let json: serde_json::Value = serde_json::to_value(&kp).unwrap();
        assert_eq!(json["scheme"], "ed25519");
        assert_eq!(json["vk"].as_str().unwrap().len(), 64);
        let back: SigningKeypair = serde_json::from_value(json).unwrap();
        assert_eq!(back, kp);
    }
}
