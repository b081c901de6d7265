//! Wire encodings shared by every record that lands on the board or in a key file.
//!
//! Big integers are lowercase big-endian hexadecimal without leading zeros
//! (`"0"` for zero). Rationals are `"num/den"` strings (`"num"` when the
//! denominator is one). Canonical JSON sorts object keys and drops all
//! insignificant whitespace; signatures and hashes are computed over it.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("invalid hex integer {0:?}")]
    Hex(String),
    #[error("invalid rational {0:?}")]
    Rational(String),
    #[error("expected {expected} bytes, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("json: {0}")]
    Json(String),
}

/// Formats a big integer in the canonical hex form.
pub fn biguint_to_hex(value: &BigUint) -> String {
    value.to_str_radix(16)
}

/// Parses the canonical hex form; rejects uppercase digits, prefixes and leading zeros.
pub fn biguint_from_hex(text: &str) -> Result<BigUint, CodecError> {
    let well_formed = !text.is_empty()
        && text.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
        && (text == "0" || !text.starts_with('0'));
    if !well_formed {
        return Err(CodecError::Hex(text.to_owned()));
    }
    BigUint::parse_bytes(text.as_bytes(), 16).ok_or_else(|| CodecError::Hex(text.to_owned()))
}

pub fn bytes_from_hex<const N: usize>(text: &str) -> Result<[u8; N], CodecError> {
    let raw = hex::decode(text).map_err(|_| CodecError::Hex(text.to_owned()))?;
    raw.as_slice().try_into().map_err(|_| CodecError::Length {
        expected: N,
        actual: raw.len(),
    })
}

/// Formats a rational as `"num/den"`, or `"num"` for integers.
pub fn rational_to_string(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Parses `"a/b"`, `"a"` or a finite decimal such as `"-12.375"`.
pub fn rational_from_str(text: &str) -> Result<BigRational, CodecError> {
    let err = || CodecError::Rational(text.to_owned());
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err())?;
        let den: BigInt = den.trim().parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !whole_digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let digits: BigInt = format!("{whole_digits}{frac}").parse().map_err(|_| err())?;
        let scale = num_traits::pow(BigInt::from(10u32), frac.len());
        let value = BigRational::new(digits, scale);
        return Ok(if negative { -value } else { value });
    }
    let int: BigInt = text.parse().map_err(|_| err())?;
    Ok(BigRational::from_integer(int))
}

/// Serializes any value to canonical JSON bytes.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CodecError> {
    // serde_json's Map is a BTreeMap, so routing through Value sorts keys.
    let value = serde_json::to_value(value).map_err(|e| CodecError::Json(e.to_string()))?;
    serde_json::to_vec(&value).map_err(|e| CodecError::Json(e.to_string()))
}

/// Writes a file readable by its owner only.
pub fn write_private_file(path: &std::path::Path, contents: &[u8]) -> std::io::Result<()> {
    use std::io::Write;
    let mut options = std::fs::OpenOptions::new();
    options.write(true).create(true).truncate(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        options.mode(0o600);
    }
    let mut file = options.open(path)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        file.set_permissions(std::fs::Permissions::from_mode(0o600))?;
    }
    file.write_all(contents)
}

pub(crate) mod hex_biguint {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::biguint_to_hex(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        super::biguint_from_hex(&text).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        hex::decode(&text).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod hex_array {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(value: &[u8; N], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[u8; N], D::Error> {
        let text = String::deserialize(d)?;
        super::bytes_from_hex(&text).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod rational {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::rational_to_string(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        super::rational_from_str(&text).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod rational_pairs {
    use num_rational::BigRational;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &[(BigRational, BigRational)], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(value.len()))?;
        for (x, y) in value {
            seq.serialize_element(&[super::rational_to_string(x), super::rational_to_string(y)])?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(BigRational, BigRational)>, D::Error> {
        let raw = Vec::<[String; 2]>::deserialize(d)?;
        raw.iter()
            .map(|[x, y]| {
                Ok((
                    super::rational_from_str(x).map_err(serde::de::Error::custom)?,
                    super::rational_from_str(y).map_err(serde::de::Error::custom)?,
                ))
            })
            .collect()
    }
}

/// RFC 3339 UTC timestamps with whole seconds, e.g. `2030-01-01T00:00:00Z`.
pub(crate) mod timestamp {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&value.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let text = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&text)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}
