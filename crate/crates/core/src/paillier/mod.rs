//! Paillier cryptosystem with `g = n + 1`.
//!
//! Encryption is `c = g^m · r^n mod n²` and decryption is
//! `m = L(c^φ mod n²) · μ mod n` with `L(u) = (u − 1) / n`, `φ = (p − 1)(q − 1)`
//! and `μ = φ⁻¹ mod n`. The key holder can also recover the help value `r`
//! of any ciphertext, which is what makes the range proofs possible.

mod prime;

pub use prime::{is_probable_prime, random_prime, MILLER_RABIN_ROUNDS};

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::codec::hex_biguint;

/// Key sizes accepted outside test mode.
pub const PRODUCTION_KEY_BITS: [u64; 3] = [512, 1024, 2048];
/// Smallest key test mode will generate.
pub const MIN_TEST_KEY_BITS: u64 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PaillierError {
    #[error("unsupported key size: {0} bits")]
    KeySize(u64),
    #[error("key generation failed: {0}")]
    KeyGeneration(&'static str),
    #[error("invalid key: {0}")]
    InvalidKey(&'static str),
    #[error("plaintext outside [0, n)")]
    PlaintextOutOfRange,
    #[error("help value is not a unit modulo n")]
    InvalidHelpValue,
    #[error("ciphertext is not a unit modulo n^2")]
    MalformedCiphertext,
    #[error("ciphertext does not decrypt to the claimed plaintext")]
    Inconsistent,
    #[error("element is not invertible modulo n^2; it shares a factor with n")]
    NotInvertible,
}

/// A ciphertext in Z*_{n²}. Carries no key; validity is checked against the
/// key at the point of use.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ciphertext(#[serde(with = "hex_biguint")] pub BigUint);

/// A message in [0, n).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plaintext(#[serde(with = "hex_biguint")] pub BigUint);

/// Encryption randomness `r` in Z*_n.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HelpValue(#[serde(with = "hex_biguint")] pub BigUint);

impl Ciphertext {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl Plaintext {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl HelpValue {
    pub fn one() -> Self {
        HelpValue(BigUint::one())
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl From<u64> for Plaintext {
    fn from(v: u64) -> Self {
        Plaintext(BigUint::from(v))
    }
}

impl From<u64> for HelpValue {
    fn from(v: u64) -> Self {
        HelpValue(BigUint::from(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaillierPublicKey {
    n: BigUint,
    g: BigUint,
    n_squared: BigUint,
}

#[derive(Serialize, Deserialize)]
struct PublicKeyRecord {
    #[serde(with = "hex_biguint")]
    n: BigUint,
    #[serde(with = "hex_biguint")]
    g: BigUint,
}

impl Serialize for PaillierPublicKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PublicKeyRecord {
            n: self.n.clone(),
            g: self.g.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PaillierPublicKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rec = PublicKeyRecord::deserialize(d)?;
        let pk = PaillierPublicKey::from_modulus(rec.n).map_err(serde::de::Error::custom)?;
        if pk.g != rec.g {
            return Err(serde::de::Error::custom("g must equal n + 1"));
        }
        Ok(pk)
    }
}

impl PaillierPublicKey {
    pub fn from_modulus(n: BigUint) -> Result<Self, PaillierError> {
        if n.is_even() || n < BigUint::from(15u32) {
            return Err(PaillierError::InvalidKey("modulus must be an odd composite >= 15"));
        }
        let g = &n + 1u32;
        let n_squared = &n * &n;
        Ok(PaillierPublicKey { n, g, n_squared })
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    pub fn bit_length(&self) -> u64 {
        self.n.bits()
    }

    /// True when `value` is a unit of Z_{n²} strictly between 0 and n².
    pub fn is_valid_ciphertext(&self, c: &Ciphertext) -> bool {
        !c.0.is_zero() && c.0 < self.n_squared && c.0.gcd(&self.n).is_one()
    }

    fn check_ciphertext(&self, c: &Ciphertext) -> Result<(), PaillierError> {
        if self.is_valid_ciphertext(c) {
            Ok(())
        } else {
            Err(PaillierError::MalformedCiphertext)
        }
    }

    pub fn is_valid_help_value(&self, r: &HelpValue) -> bool {
        !r.0.is_zero() && r.0 < self.n && r.0.gcd(&self.n).is_one()
    }

    /// `g^k mod n²`, computed as `1 + k·n` since `(1 + n)^k ≡ 1 + k·n`.
    fn g_pow(&self, k: &BigUint) -> BigUint {
        (BigUint::one() + (k % &self.n) * &self.n) % &self.n_squared
    }

    /// Uniform help value in Z*_n.
    pub fn random_help_value<R: RngCore + CryptoRng>(&self, rng: &mut R) -> HelpValue {
        loop {
            let r = rng.gen_biguint_range(&BigUint::one(), &self.n);
            if r.gcd(&self.n).is_one() {
                return HelpValue(r);
            }
        }
    }

    pub fn encrypt(&self, m: &Plaintext, r: &HelpValue) -> Result<Ciphertext, PaillierError> {
        if m.0 >= self.n {
            return Err(PaillierError::PlaintextOutOfRange);
        }
        if !self.is_valid_help_value(r) {
            return Err(PaillierError::InvalidHelpValue);
        }
        let masked = r.0.modpow(&self.n, &self.n_squared);
        Ok(Ciphertext(self.g_pow(&m.0) * masked % &self.n_squared))
    }

    /// Encrypts with a freshly drawn help value and returns both.
    pub fn encrypt_random<R: RngCore + CryptoRng>(
        &self,
        m: &Plaintext,
        rng: &mut R,
    ) -> Result<(Ciphertext, HelpValue), PaillierError> {
        let r = self.random_help_value(rng);
        Ok((self.encrypt(m, &r)?, r))
    }

    /// E(m1) · E(m2) = E(m1 + m2).
    pub fn hom_add(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext, PaillierError> {
        self.check_ciphertext(c1)?;
        self.check_ciphertext(c2)?;
        Ok(Ciphertext(&c1.0 * &c2.0 % &self.n_squared))
    }

    /// E(m)^k = E(k · m).
    pub fn hom_scalar_mul(&self, c: &Ciphertext, k: &BigUint) -> Result<Ciphertext, PaillierError> {
        self.check_ciphertext(c)?;
        Ok(Ciphertext(c.0.modpow(k, &self.n_squared)))
    }

    /// E(m) · (n + 1)^k = E(m + k), same help value.
    pub fn hom_add_const(&self, c: &Ciphertext, k: &BigUint) -> Result<Ciphertext, PaillierError> {
        self.check_ciphertext(c)?;
        if k >= &self.n {
            return Err(PaillierError::PlaintextOutOfRange);
        }
        Ok(Ciphertext(&c.0 * self.g_pow(k) % &self.n_squared))
    }

    /// E(m)⁻¹ = E(−m) with help value r⁻¹.
    pub fn cipher_invert(&self, c: &Ciphertext) -> Result<Ciphertext, PaillierError> {
        c.0.modinv(&self.n_squared)
            .map(Ciphertext)
            .ok_or(PaillierError::NotInvertible)
    }

    /// E(m, r) · r'^n = E(m, r·r').
    pub fn rerandomize(&self, c: &Ciphertext, r: &HelpValue) -> Result<Ciphertext, PaillierError> {
        self.check_ciphertext(c)?;
        if !self.is_valid_help_value(r) {
            return Err(PaillierError::InvalidHelpValue);
        }
        Ok(Ciphertext(
            &c.0 * r.0.modpow(&self.n, &self.n_squared) % &self.n_squared,
        ))
    }

    /// r⁻¹ mod n.
    pub fn invert_help_value(&self, r: &HelpValue) -> Result<HelpValue, PaillierError> {
        r.0.modinv(&self.n)
            .map(HelpValue)
            .ok_or(PaillierError::InvalidHelpValue)
    }

    /// Product of help values mod n.
    pub fn combine_help_values<'a>(&self, values: impl IntoIterator<Item = &'a HelpValue>) -> HelpValue {
        HelpValue(values.into_iter().fold(BigUint::one(), |acc, r| acc * &r.0 % &self.n))
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct PaillierPrivateKey {
    p: BigUint,
    q: BigUint,
    phi: BigUint,
    mu: BigUint,
    /// n⁻¹ mod φ, the exponent that extracts the n-th root of r^n.
    n_inv_phi: BigUint,
    public: PaillierPublicKey,
}

impl std::fmt::Debug for PaillierPrivateKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PaillierPrivateKey")
            .field("n", &self.public.n)
            .finish_non_exhaustive()
    }
}

#[derive(Serialize, Deserialize)]
struct PrivateKeyRecord {
    #[serde(with = "hex_biguint")]
    p: BigUint,
    #[serde(with = "hex_biguint")]
    q: BigUint,
}

impl Serialize for PaillierPrivateKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PrivateKeyRecord {
            p: self.p.clone(),
            q: self.q.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PaillierPrivateKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rec = PrivateKeyRecord::deserialize(d)?;
        PaillierPrivateKey::from_primes(rec.p, rec.q).map_err(serde::de::Error::custom)
    }
}

impl PaillierPrivateKey {
    /// Builds the key from two distinct odd primes. Primality itself is not
    /// re-checked; the remaining structural invariants are.
    pub fn from_primes(p: BigUint, q: BigUint) -> Result<Self, PaillierError> {
        let two = BigUint::from(2u32);
        if p == q || p <= two || q <= two || p.is_even() || q.is_even() {
            return Err(PaillierError::InvalidKey("p and q must be distinct odd primes"));
        }
        let n = &p * &q;
        let phi = (&p - 1u32) * (&q - 1u32);
        let mu = phi
            .modinv(&n)
            .ok_or(PaillierError::InvalidKey("phi is not invertible modulo n"))?;
        let n_inv_phi = n
            .modinv(&phi)
            .ok_or(PaillierError::InvalidKey("n is not invertible modulo phi"))?;
        let public = PaillierPublicKey::from_modulus(n)?;
        Ok(PaillierPrivateKey {
            p,
            q,
            phi,
            mu,
            n_inv_phi,
            public,
        })
    }

    pub fn public_key(&self) -> &PaillierPublicKey {
        &self.public
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn phi(&self) -> &BigUint {
        &self.phi
    }

    pub fn mu(&self) -> &BigUint {
        &self.mu
    }

    pub fn decrypt(&self, c: &Ciphertext) -> Result<Plaintext, PaillierError> {
        let pk = &self.public;
        pk.check_ciphertext(c)?;
        let u = c.0.modpow(&self.phi, &pk.n_squared);
        let l = (u - 1u32) / &pk.n;
        Ok(Plaintext(l * &self.mu % &pk.n))
    }

    /// Returns the `r` with `encrypt(m, r) = c`.
    pub fn recover_randomness(&self, c: &Ciphertext, m: &Plaintext) -> Result<HelpValue, PaillierError> {
        if self.decrypt(c)? != *m {
            return Err(PaillierError::Inconsistent);
        }
        let pk = &self.public;
        // c · g^{-m} = r^n mod n²; reduce mod n and take the n-th root.
        let g_neg_m = pk.g_pow(&(&pk.n - &m.0));
        let r_pow_n = (&c.0 * g_neg_m % &pk.n_squared) % &pk.n;
        Ok(HelpValue(r_pow_n.modpow(&self.n_inv_phi, &pk.n)))
    }
}

/// Generates a key of one of the production sizes.
pub fn keygen<R: RngCore + CryptoRng>(
    bit_length: u64,
    rng: &mut R,
) -> Result<(PaillierPublicKey, PaillierPrivateKey), PaillierError> {
    if !PRODUCTION_KEY_BITS.contains(&bit_length) {
        return Err(PaillierError::KeySize(bit_length));
    }
    generate(bit_length, rng)
}

/// Test-mode key generation: any even size of at least [`MIN_TEST_KEY_BITS`].
pub fn keygen_insecure<R: RngCore + CryptoRng>(
    bit_length: u64,
    rng: &mut R,
) -> Result<(PaillierPublicKey, PaillierPrivateKey), PaillierError> {
    if bit_length < MIN_TEST_KEY_BITS || !bit_length.is_multiple_of(2) {
        return Err(PaillierError::KeySize(bit_length));
    }
    generate(bit_length, rng)
}

fn generate<R: RngCore + CryptoRng>(
    bit_length: u64,
    rng: &mut R,
) -> Result<(PaillierPublicKey, PaillierPrivateKey), PaillierError> {
    let half = bit_length / 2;
    for _ in 0..64 {
        let p = random_prime(half, rng);
        let q = random_prime(half, rng);
        if p == q {
            continue;
        }
        let sk = PaillierPrivateKey::from_primes(p, q)?;
        if sk.public.bit_length() == bit_length {
            return Ok((sk.public.clone(), sk));
        }
    }
    Err(PaillierError::KeyGeneration("could not find a suitable prime pair"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy() -> PaillierPrivateKey {
        PaillierPrivateKey::from_primes(5u32.into(), 7u32.into()).unwrap()
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn toy_key_parameters() {
        let sk = toy();
        let pk = sk.public_key();
        assert_eq!(pk.n(), &big(35));
        assert_eq!(pk.g(), &big(36));
        assert_eq!(sk.phi(), &big(24));
        assert_eq!(sk.mu(), &big(19));
        assert_eq!(sk.mu() * sk.phi() % pk.n(), big(1));
    }

    #[test]
    fn toy_encryption_matches_frozen_value() {
        // 36^3 · 2^35 mod 1225, computed with an independent square-and-multiply.
        let sk = toy();
        let c = sk.public_key().encrypt(&3.into(), &2.into()).unwrap();
        assert_eq!(c.0, big(683));
        assert_eq!(sk.recover_randomness(&c, &3.into()).unwrap(), HelpValue::from(2));
    }

    #[test]
    fn exhaustive_roundtrip_at_n35() {
        let sk = toy();
        let pk = sk.public_key();
        for m in 0..35u64 {
            for r in (1..35u64).filter(|r| r.gcd(&35) == 1) {
                let c = pk.encrypt(&m.into(), &r.into()).unwrap();
                assert_eq!(sk.decrypt(&c).unwrap(), Plaintext::from(m));
                assert_eq!(sk.recover_randomness(&c, &m.into()).unwrap(), HelpValue::from(r));
            }
        }
    }

    #[test]
    fn trivial_encryptions() {
        let sk = toy();
        let pk = sk.public_key();
        assert_eq!(pk.encrypt(&0.into(), &HelpValue::one()).unwrap().0, big(1));
        assert_eq!(sk.decrypt(&Ciphertext(big(1))).unwrap(), Plaintext::from(0));
        assert_eq!(
            sk.recover_randomness(&Ciphertext(big(1)), &0.into()).unwrap(),
            HelpValue::one()
        );
        assert_eq!(pk.cipher_invert(&Ciphertext(big(1))).unwrap().0, big(1));
    }

    #[test]
    fn domain_errors() {
        let sk = toy();
        let pk = sk.public_key();
        assert_eq!(
            pk.encrypt(&35.into(), &1.into()),
            Err(PaillierError::PlaintextOutOfRange)
        );
        assert_eq!(pk.encrypt(&1.into(), &5.into()), Err(PaillierError::InvalidHelpValue));
        assert_eq!(pk.encrypt(&1.into(), &0.into()), Err(PaillierError::InvalidHelpValue));
        assert_eq!(sk.decrypt(&Ciphertext(big(5))), Err(PaillierError::MalformedCiphertext));
        assert_eq!(sk.decrypt(&Ciphertext(big(0))), Err(PaillierError::MalformedCiphertext));
        assert_eq!(
            sk.decrypt(&Ciphertext(big(1225))),
            Err(PaillierError::MalformedCiphertext)
        );
        assert_eq!(pk.cipher_invert(&Ciphertext(big(7))), Err(PaillierError::NotInvertible));
        let c = pk.encrypt(&3.into(), &2.into()).unwrap();
        assert_eq!(sk.recover_randomness(&c, &4.into()), Err(PaillierError::Inconsistent));
    }

    #[test]
    fn homomorphic_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (_, sk) = keygen_insecure(64, &mut rng).unwrap();
        let pk = sk.public_key();
        let enc = |m: u64, rng: &mut ChaCha20Rng| pk.encrypt_random(&m.into(), rng).unwrap().0;
        let dec = |c: &Ciphertext| sk.decrypt(c).unwrap();

        let (c2, c3) = (enc(2, &mut rng), enc(3, &mut rng));
        assert_eq!(dec(&pk.hom_add(&c2, &c3).unwrap()), 5.into());
        assert_eq!(pk.hom_add(&c2, &c3).unwrap(), pk.hom_add(&c3, &c2).unwrap());
        let zero = pk.encrypt(&0.into(), &HelpValue::one()).unwrap();
        assert_eq!(pk.hom_add(&c2, &zero).unwrap(), c2);

        let c7 = enc(7, &mut rng);
        assert_eq!(dec(&pk.hom_scalar_mul(&c7, &big(3)).unwrap()), 21.into());
        assert_eq!(pk.hom_scalar_mul(&c7, &big(1)).unwrap(), c7);
        assert_eq!(dec(&pk.hom_scalar_mul(&c7, &big(0)).unwrap()), 0.into());

        assert_eq!(pk.hom_add_const(&c7, &big(0)).unwrap(), c7);
        assert_eq!(dec(&pk.hom_add_const(&c7, &big(1)).unwrap()), 8.into());
        assert_eq!(
            pk.hom_add_const(&c7, &big(9)).unwrap(),
            pk.hom_add(&c7, &pk.encrypt(&9.into(), &HelpValue::one()).unwrap())
                .unwrap()
        );

        let inv = pk.cipher_invert(&c3).unwrap();
        assert_eq!(&c3.0 * &inv.0 % pk.n_squared(), big(1));
        assert_eq!(dec(&pk.hom_add(&c7, &inv).unwrap()), 4.into());
        assert_eq!(dec(&inv).0, pk.n() - 3u32);
    }

    #[test]
    fn rerandomize_composes_help_values() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let (pk, sk) = keygen_insecure(64, &mut rng).unwrap();
        let m = Plaintext::from(42);
        let r = pk.random_help_value(&mut rng);
        let r2 = pk.random_help_value(&mut rng);
        let c = pk.encrypt(&m, &r).unwrap();
        assert_eq!(pk.rerandomize(&c, &HelpValue::one()).unwrap(), c);
        let blinded = pk.rerandomize(&c, &r2).unwrap();
        assert_ne!(blinded, c);
        assert_eq!(sk.decrypt(&blinded).unwrap(), m);
        let combined = pk.combine_help_values([&r, &r2]);
        assert_eq!(blinded, pk.encrypt(&m, &combined).unwrap());
    }

    #[test]
    fn keygen_sizes_and_invariants() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        assert_eq!(keygen(256, &mut rng).unwrap_err(), PaillierError::KeySize(256));
        assert_eq!(keygen_insecure(8, &mut rng).unwrap_err(), PaillierError::KeySize(8));
        for bits in [16u64, 32, 64, 128] {
            let (pk, sk) = keygen_insecure(bits, &mut rng).unwrap();
            assert_eq!(pk.bit_length(), bits);
            assert_eq!(sk.p() * sk.q(), *pk.n());
            assert_eq!(sk.p().bits(), bits / 2);
            assert_eq!(sk.mu() * sk.phi() % pk.n(), big(1));
            assert_eq!(pk.g(), &(pk.n() + 1u32));
        }
        let (a, _) = keygen_insecure(64, &mut rng).unwrap();
        let (b, _) = keygen_insecure(64, &mut rng).unwrap();
        assert_ne!(a.n(), b.n());
    }

    #[test]
    fn production_keygen_512() {
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let (pk, sk) = keygen(512, &mut rng).unwrap();
        assert_eq!(pk.bit_length(), 512);
        let m = Plaintext::from(123456789);
        let (c, r) = pk.encrypt_random(&m, &mut rng).unwrap();
        assert_eq!(sk.decrypt(&c).unwrap(), m);
        assert_eq!(sk.recover_randomness(&c, &m).unwrap(), r);
    }

    #[test]
    fn key_records_roundtrip_through_json() {
        let sk = toy();
        let pub_json = serde_json::to_string(sk.public_key()).unwrap();
        assert_eq!(pub_json, r#"{"n":"23","g":"24"}"#);
        let priv_json = serde_json::to_string(&sk).unwrap();
        assert_eq!(priv_json, r#"{"p":"5","q":"7"}"#);
        let back: PaillierPrivateKey = serde_json::from_str(&priv_json).unwrap();
        assert_eq!(back, sk);
        assert!(serde_json::from_str::<PaillierPublicKey>(r#"{"n":"23","g":"25"}"#).is_err());
    }
}
