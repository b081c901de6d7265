//! Probabilistic prime generation (Miller-Rabin).

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};

/// 40 rounds bound the false-positive rate by 4^-40 = 2^-80.
pub const MILLER_RABIN_ROUNDS: usize = 40;

const SMALL_PRIMES: [u32; 53] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233, 239,
    241,
];

pub fn is_probable_prime<R: RngCore + CryptoRng>(candidate: &BigUint, rng: &mut R) -> bool {
    if candidate < &BigUint::from(2u32) {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p = BigUint::from(p);
        if candidate == &p {
            return true;
        }
        if (candidate % &p).is_zero() {
            return false;
        }
    }

    let one = BigUint::one();
    let minus_one = candidate - &one;
    let shift = minus_one.trailing_zeros().unwrap_or(0);
    let odd_part = &minus_one >> shift;
    let two = BigUint::from(2u32);
    let witness_bound = candidate - &one; // witnesses in [2, n-2]

    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        let a = rng.gen_biguint_range(&two, &witness_bound);
        let mut x = a.modpow(&odd_part, candidate);
        if x == one || x == minus_one {
            continue;
        }
        for _ in 1..shift {
            x = x.modpow(&two, candidate);
            if x == minus_one {
                continue 'witness;
            }
            if x == one {
                return false;
            }
        }
        return false;
    }
    true
}

/// Draws a prime of exactly `bits` bits with the top two bits set, so a
/// product of two such primes has exactly `2 * bits` bits.
pub fn random_prime<R: RngCore + CryptoRng>(bits: u64, rng: &mut R) -> BigUint {
    assert!(bits >= 3, "prime size too small");
    loop {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(bits - 2, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, rng) {
            return candidate;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;
    use num_traits::ToPrimitive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn agrees_with_trial_division_below_5000() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for n in 0u64..5000 {
            assert_eq!(
                is_probable_prime(&BigUint::from(n), &mut rng),
                trial_division(n),
                "n={n}"
            );
        }
    }

    #[test]
    fn rejects_carmichael_numbers() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for n in [561u64, 1105, 1729, 2465, 2821, 6601, 8911, 41041, 825265] {
            assert!(!is_probable_prime(&BigUint::from(n), &mut rng));
        }
    }

    #[test]
    fn random_prime_has_requested_size() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for bits in [8u64, 16, 33, 64, 128] {
            let p = random_prime(bits, &mut rng);
            assert_eq!(p.bits(), bits);
            if bits <= 33 {
                assert!(trial_division(p.to_u64().unwrap()));
            }
        }
    }

    #[test]
    fn mersenne_prime_accepted() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let m127 = (BigUint::one() << 127usize) - BigUint::one();
        assert!(is_probable_prime(&m127, &mut rng));
        assert!(!is_probable_prime(&(&m127 * BigUint::from(3u32)), &mut rng));
        assert!(m127.is_odd());
    }
}
