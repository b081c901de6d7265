//! Key files on disk.
//!
//! An auctioneer prefix `p` owns `p.pub.json` ({"n","g"}), `p.key.json`
//! ({"p","q"}) and `p.sign.json` ({"scheme","vk","sk"}). A bidder prefix owns
//! `p.bidder.json`: its signing key plus the pseudonym nonce. Private files
//! are written with mode 0600.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use sealbid::codec::{bytes_from_hex, write_private_file};
use sealbid::identity::{SigningKeypair, NONCE_LEN};
use sealbid::paillier::{PaillierPrivateKey, PaillierPublicKey};

use crate::CliError;

pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("key serializes");
    text.push('\n');
    text
}

pub fn write_public(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    std::fs::write(path, to_json(value)).map_err(|e| CliError::io(path, e))
}

pub fn write_private(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    write_private_file(path, to_json(value).as_bytes()).map_err(|e| CliError::io(path, e))
}

pub struct AuctioneerKeys {
    pub public: PaillierPublicKey,
    pub private: PaillierPrivateKey,
    pub signing: SigningKeypair,
}

impl AuctioneerKeys {
    pub fn save(&self, prefix: &Path) -> Result<Vec<PathBuf>, CliError> {
        let paths = [".pub.json", ".key.json", ".sign.json"].map(|s| with_suffix(prefix, s));
        write_public(&paths[0], &self.public)?;
        write_private(&paths[1], &self.private)?;
        write_private(&paths[2], &self.signing)?;
        Ok(paths.to_vec())
    }

    pub fn load(prefix: &Path) -> Result<Self, CliError> {
        let private: PaillierPrivateKey = read_json(&with_suffix(prefix, ".key.json"))?;
        let public: PaillierPublicKey = read_json(&with_suffix(prefix, ".pub.json"))?;
        if public != *private.public_key() {
            return Err(CliError::Domain(format!(
                "{} does not match {}",
                with_suffix(prefix, ".pub.json").display(),
                with_suffix(prefix, ".key.json").display()
            )));
        }
        Ok(AuctioneerKeys {
            public,
            private,
            signing: Self::load_signing(prefix)?,
        })
    }

    /// Just the signing key, enough to host the board and issue receipts.
    pub fn load_signing(prefix: &Path) -> Result<SigningKeypair, CliError> {
        read_json(&with_suffix(prefix, ".sign.json"))
    }
}

#[derive(Serialize, Deserialize)]
pub struct BidderFile {
    #[serde(flatten)]
    pub signing: SigningKeypair,
    pub nonce: String,
}

impl BidderFile {
    pub fn path(prefix: &Path) -> PathBuf {
        with_suffix(prefix, ".bidder.json")
    }

    pub fn load(prefix: &Path) -> Result<(SigningKeypair, [u8; NONCE_LEN]), CliError> {
        let path = Self::path(prefix);
        let file: BidderFile = read_json(&path)?;
        let nonce = bytes_from_hex(&file.nonce).map_err(|e| CliError::Io(format!("{}: nonce: {e}", path.display())))?;
        Ok((file.signing, nonce))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use sealbid::identity::random_nonce;
    use sealbid::paillier::keygen_insecure;

    #[test]
    fn auctioneer_keys_roundtrip_and_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("auc");
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (public, private) = keygen_insecure(64, &mut rng).unwrap();
        let keys = AuctioneerKeys {
            public,
            private,
            signing: SigningKeypair::generate(&mut rng),
        };
        keys.save(&prefix).unwrap();
        let loaded = AuctioneerKeys::load(&prefix).unwrap();
        assert_eq!(loaded.public, keys.public);
        assert_eq!(loaded.signing.public_key, keys.signing.public_key);

        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            let mode = std::fs::metadata(with_suffix(&prefix, ".key.json"))
                .unwrap()
                .permissions()
                .mode();
            assert_eq!(mode & 0o777, 0o600);
        }

        let (other, _) = keygen_insecure(64, &mut rng).unwrap();
        write_public(&with_suffix(&prefix, ".pub.json"), &other).unwrap();
        assert!(matches!(AuctioneerKeys::load(&prefix), Err(CliError::Domain(_))));
    }

    #[test]
    fn bidder_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("b");
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let nonce = random_nonce(&mut rng);
        let file = BidderFile {
            signing: SigningKeypair::generate(&mut rng),
            nonce: hex::encode(nonce),
        };
        write_private(&BidderFile::path(&prefix), &file).unwrap();
        let (signing, loaded) = BidderFile::load(&prefix).unwrap();
        assert_eq!(loaded, nonce);
        assert_eq!(signing.public_key, file.signing.public_key);
        assert!(matches!(
            BidderFile::load(&dir.path().join("none")),
            Err(CliError::Io(_))
        ));
    }
}
