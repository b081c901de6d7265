//! Certified append-only bulletin board.
//!
//! Every entry is signed by its author over its canonical header
//! (`seq`, `timestamp`, `author`, `kind`, `payload`, `prev_hash`) and chained
//! to its predecessor by SHA-256. The auctioneer hosts the board: it issues
//! signed receipts for registrations and bids, and a bidder holding a receipt
//! for an entry that never appeared can appeal. On disk the board is a JSON
//! lines file, one canonical entry per line, rewritten by atomic rename.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::{canonical_json, hex_array, hex_bytes};
use crate::identity::{verify_signature, IdentityError, Pseudonym, RegistrationRecord, SigningKeypair};

pub type Hash32 = [u8; 32];

pub const GENESIS_HASH: Hash32 = [0u8; 32];

#[derive(Debug, Error)]
pub enum BoardError {
    #[error("{author} may not post {kind} entries")]
    Unauthorized { author: String, kind: EntryKind },
    #[error("entry rejected: {0}")]
    Rejected(String),
    #[error("receipts require the hosting auctioneer's key")]
    NoHost,
    #[error("board file {0} already exists")]
    AlreadyExists(PathBuf),
    #[error("board integrity: {0}")]
    Chain(#[from] ChainError),
    #[error("malformed board line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("signing failed: {0}")]
    Signing(Box<IdentityError>),
    #[error("board i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<IdentityError> for BoardError {
    fn from(e: IdentityError) -> Self {
        BoardError::Signing(Box::new(e))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("entry {index}: {reason}")]
pub struct ChainError {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AppealError {
    #[error("malformed receipt: {0}")]
    MalformedReceipt(String),
    #[error("appeals open only after the bidding deadline")]
    BiddingOpen,
    #[error("no auction has been announced on this board")]
    NotAnnounced,
    #[error("could not record appeal: {0}")]
    Record(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Announce,
    Register,
    Bid,
    Testset,
    Proof,
    Outcome,
    Appeal,
}

impl EntryKind {
    pub fn auctioneer_only(self) -> bool {
        matches!(
            self,
            EntryKind::Announce | EntryKind::Testset | EntryKind::Proof | EntryKind::Outcome
        )
    }

    /// Kinds for which the host returns a signed receipt.
    pub fn receipted(self) -> bool {
        matches!(self, EntryKind::Register | EntryKind::Bid)
    }
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("kind serializes");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Author {
    Auctioneer,
    Bidder(Pseudonym),
}

const AUCTIONEER: &str = "auctioneer";

impl fmt::Display for Author {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Author::Auctioneer => f.write_str(AUCTIONEER),
            Author::Bidder(p) => write!(f, "{p}"),
        }
    }
}

impl Serialize for Author {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Author {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        if text == AUCTIONEER {
            return Ok(Author::Auctioneer);
        }
        text.parse().map(Author::Bidder).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BulletinEntry {
    pub seq: u64,
    pub timestamp: String,
    pub author: Author,
    pub kind: EntryKind,
    pub payload: Value,
    #[serde(with = "hex_bytes")]
    pub signature: Vec<u8>,
    #[serde(with = "hex_array")]
    pub prev_hash: Hash32,
}

impl BulletinEntry {
    /// The bytes the author signs: everything but the signature.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let header = json!({
            "seq": self.seq,
            "timestamp": self.timestamp,
            "author": self.author,
            "kind": self.kind,
            "payload": self.payload,
            "prev_hash": hex::encode(self.prev_hash),
        });
        canonical_json(&header).expect("header serializes")
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical_json(self).expect("entry serializes")
    }

    pub fn hash(&self) -> Hash32 {
        Sha256::digest(self.canonical_bytes()).into()
    }

    pub fn timestamp(&self) -> Option<DateTime<Utc>> {
        DateTime::parse_from_rfc3339(&self.timestamp)
            .ok()
            .map(|t| t.with_timezone(&Utc))
    }
}

/// Auctioneer-signed acknowledgement that an entry was accepted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub entry_seq: u64,
    #[serde(with = "hex_array")]
    pub entry_hash: Hash32,
    #[serde(rename = "signature", with = "hex_bytes")]
    pub auctioneer_signature: Vec<u8>,
}

impl Receipt {
    pub fn message(entry_seq: u64, entry_hash: &Hash32) -> Vec<u8> {
        let mut msg = entry_seq.to_be_bytes().to_vec();
        msg.extend_from_slice(entry_hash);
        msg
    }

    pub fn issue(entry: &BulletinEntry, host: &SigningKeypair) -> Result<Self, IdentityError> {
        let entry_hash = entry.hash();
        Ok(Receipt {
            entry_seq: entry.seq,
            entry_hash,
            auctioneer_signature: host.sign(&Self::message(entry.seq, &entry_hash))?,
        })
    }

    pub fn verify(&self, scheme: &str, auctioneer_vk: &[u8]) -> Result<bool, IdentityError> {
        verify_signature(
            scheme,
            auctioneer_vk,
            &Self::message(self.entry_seq, &self.entry_hash),
            &self.auctioneer_signature,
        )
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A settable clock for simulations; clones share the same time.
#[derive(Clone)]
pub struct ManualClock(Arc<Mutex<DateTime<Utc>>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        ManualClock(Arc::new(Mutex::new(start)))
    }

    pub fn set(&self, t: DateTime<Utc>) {
        *self.0.lock().expect("clock lock") = t;
    }

    pub fn advance(&self, by: chrono::Duration) {
        let mut guard = self.0.lock().expect("clock lock");
        *guard += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().expect("clock lock")
    }
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Tracks who may sign what while walking the log.
#[derive(Debug, Clone, Default)]
struct KeyRegistry {
    auctioneer: Option<(String, Vec<u8>)>,
    bidders: HashMap<Pseudonym, (String, Vec<u8>)>,
    keys: HashSet<Vec<u8>>,
}

impl KeyRegistry {
    fn admit(&mut self, index: usize, entry: &BulletinEntry) -> Result<(), String> {
        if (index == 0) != (entry.kind == EntryKind::Announce) {
            return Err("the announcement must be the first and only announce entry".into());
        }
        if entry.kind.auctioneer_only() != (entry.author == Author::Auctioneer) {
            return Err(format!("{} may not post {} entries", entry.author, entry.kind));
        }
        let (scheme, vk) = match (entry.kind, entry.author) {
            (EntryKind::Announce, _) => {
                let scheme = str_field(&entry.payload, "scheme")?;
                let vk = hex_field(&entry.payload, "auctioneer_vk")?;
                self.auctioneer = Some((scheme.clone(), vk.clone()));
                self.keys.insert(vk.clone());
                (scheme, vk)
            }
            (_, Author::Auctioneer) => self.auctioneer.clone().ok_or("no auctioneer key")?,
            (EntryKind::Register, Author::Bidder(p)) => {
                let record: RegistrationRecord =
                    serde_json::from_value(entry.payload.clone()).map_err(|e| format!("registration payload: {e}"))?;
                if record.pseudonym != p {
                    return Err("registration pseudonym differs from author".into());
                }
                if self.bidders.contains_key(&p) {
                    return Err(format!("pseudonym {p} registered twice"));
                }
                if !self.keys.insert(record.vk.clone()) {
                    return Err("verification key registered twice".into());
                }
                self.bidders.insert(p, (record.scheme.clone(), record.vk.clone()));
                (record.scheme, record.vk)
            }
            (EntryKind::Appeal, Author::Bidder(p)) => {
                let scheme = str_field(&entry.payload, "scheme")?;
                let vk = hex_field(&entry.payload, "vk")?;
                if let Some(registered) = self.bidders.get(&p) {
                    if registered.1 != vk {
                        return Err("appeal key differs from the registered key".into());
                    }
                }
                (scheme, vk)
            }
            (_, Author::Bidder(p)) => self
                .bidders
                .get(&p)
                .cloned()
                .ok_or_else(|| format!("unregistered author {p}"))?,
        };
        match verify_signature(&scheme, &vk, &entry.signing_bytes(), &entry.signature) {
            Ok(true) => Ok(()),
            Ok(false) => Err("bad signature".into()),
            Err(e) => Err(e.to_string()),
        }
    }
}

fn str_field(payload: &Value, key: &str) -> Result<String, String> {
    payload
        .get(key)
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| format!("payload missing {key:?}"))
}

fn hex_field(payload: &Value, key: &str) -> Result<Vec<u8>, String> {
    hex::decode(str_field(payload, key)?).map_err(|_| format!("payload field {key:?} is not hex"))
}

fn check_link(index: usize, entry: &BulletinEntry, prev: Option<&BulletinEntry>) -> Result<(), ChainError> {
    let fail = |reason: String| ChainError { index, reason };
    if entry.seq != index as u64 {
        return Err(fail(format!("sequence number {} where {} expected", entry.seq, index)));
    }
    let expected = prev.map(BulletinEntry::hash).unwrap_or(GENESIS_HASH);
    if entry.prev_hash != expected {
        return Err(fail("previous-hash link broken".into()));
    }
    if entry.timestamp().is_none() {
        return Err(fail("timestamp is not RFC-3339".into()));
    }
    Ok(())
}

/// Checks sequence numbers, hash links, authorization and every signature.
pub fn verify_chain(entries: &[BulletinEntry]) -> Result<(), ChainError> {
    let mut registry = KeyRegistry::default();
    for (index, entry) in entries.iter().enumerate() {
        check_link(index, entry, index.checked_sub(1).map(|i| &entries[i]))?;
        registry
            .admit(index, entry)
            .map_err(|reason| ChainError { index, reason })?;
    }
    Ok(())
}

/// Result of a successful append.
#[derive(Debug, Clone)]
pub struct Appended {
    pub entry: BulletinEntry,
    pub receipt: Option<Receipt>,
}

pub struct BulletinBoard {
    entries: Vec<BulletinEntry>,
    lines: Vec<String>,
    registry: KeyRegistry,
    path: Option<PathBuf>,
    clock: Arc<dyn Clock>,
    host: Option<SigningKeypair>,
    batch_depth: usize,
}

impl fmt::Debug for BulletinBoard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BulletinBoard")
            .field("entries", &self.entries.len())
            .field("path", &self.path)
            .finish_non_exhaustive()
    }
}

impl BulletinBoard {
    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        BulletinBoard {
            entries: Vec::new(),
            lines: Vec::new(),
            registry: KeyRegistry::default(),
            path: None,
            clock,
            host: None,
            batch_depth: 0,
        }
    }

    /// Starts a new board file; fails if one already exists at `path`.
    pub fn create(path: impl Into<PathBuf>, clock: Arc<dyn Clock>) -> Result<Self, BoardError> {
        let path = path.into();
        if path.exists() {
            return Err(BoardError::AlreadyExists(path));
        }
        let mut board = Self::in_memory(clock);
        board.path = Some(path);
        Ok(board)
    }

    /// Loads and fully verifies a board file for further appends.
    pub fn open(path: impl Into<PathBuf>, clock: Arc<dyn Clock>) -> Result<Self, BoardError> {
        let path = path.into();
        let entries = load_entries(&path)?;
        let mut board = Self::from_entries(entries, clock)?;
        board.path = Some(path);
        Ok(board)
    }

    /// Builds an in-memory board from verified entries.
    pub fn from_entries(entries: Vec<BulletinEntry>, clock: Arc<dyn Clock>) -> Result<Self, ChainError> {
        let mut board = Self::in_memory(clock);
        for (index, entry) in entries.into_iter().enumerate() {
            check_link(index, &entry, board.entries.last())?;
            board
                .registry
                .admit(index, &entry)
                .map_err(|reason| ChainError { index, reason })?;
            board
                .lines
                .push(String::from_utf8(entry.canonical_bytes()).expect("utf8 json"));
            board.entries.push(entry);
        }
        Ok(board)
    }

    /// Sets the auctioneer key used to sign receipts.
    pub fn with_host(mut self, host: SigningKeypair) -> Self {
        self.host = Some(host);
        self
    }

    pub fn set_host(&mut self, host: SigningKeypair) {
        self.host = Some(host);
    }

    /// Detaches the board from its file; later appends stay in memory.
    pub fn detach(&mut self) {
        self.path = None;
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn entries(&self) -> &[BulletinEntry] {
        &self.entries
    }

    pub fn snapshot(&self) -> Vec<BulletinEntry> {
        self.entries.clone()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn clock(&self) -> Arc<dyn Clock> {
        Arc::clone(&self.clock)
    }

    pub fn head_hash(&self) -> Hash32 {
        self.entries.last().map(BulletinEntry::hash).unwrap_or(GENESIS_HASH)
    }

    pub fn auctioneer_key(&self) -> Option<(&str, &[u8])> {
        self.registry
            .auctioneer
            .as_ref()
            .map(|(scheme, vk)| (scheme.as_str(), vk.as_slice()))
    }

    pub fn registered_key(&self, pseudonym: &Pseudonym) -> Option<(&str, &[u8])> {
        self.registry
            .bidders
            .get(pseudonym)
            .map(|(scheme, vk)| (scheme.as_str(), vk.as_slice()))
    }

    pub fn pseudonym_for_key(&self, vk: &[u8]) -> Option<Pseudonym> {
        self.registry
            .bidders
            .iter()
            .find(|(_, (_, key))| key == vk)
            .map(|(p, _)| *p)
    }

    /// The bidding deadline published in the announcement.
    pub fn deadline(&self) -> Option<DateTime<Utc>> {
        announced_deadline(&self.entries)
    }

    /// Appends a signed entry. Register and bid entries come back with a
    /// receipt signed by the host.
    pub fn append(
        &mut self,
        kind: EntryKind,
        payload: Value,
        author: Author,
        signer: &SigningKeypair,
    ) -> Result<Appended, BoardError> {
        if kind.auctioneer_only() != (author == Author::Auctioneer) {
            return Err(BoardError::Unauthorized {
                author: author.to_string(),
                kind,
            });
        }
        if kind.receipted() && self.host.is_none() {
            return Err(BoardError::NoHost);
        }
        let mut entry = BulletinEntry {
            seq: self.entries.len() as u64,
            timestamp: format_timestamp(self.clock.now()),
            author,
            kind,
            payload,
            signature: Vec::new(),
            prev_hash: self.head_hash(),
        };
        entry.signature = signer.sign(&entry.signing_bytes())?;

        let mut registry = self.registry.clone();
        registry
            .admit(self.entries.len(), &entry)
            .map_err(BoardError::Rejected)?;
        let receipt = match (&self.host, kind.receipted()) {
            (Some(host), true) => Some(Receipt::issue(&entry, host)?),
            _ => None,
        };

        self.lines
            .push(String::from_utf8(entry.canonical_bytes()).expect("utf8 json"));
        self.entries.push(entry.clone());
        if self.batch_depth == 0 {
            if let Err(e) = self.persist() {
                self.entries.pop();
                self.lines.pop();
                return Err(e.into());
            }
        }
        self.registry = registry;
        Ok(Appended { entry, receipt })
    }

    /// Runs `f` with persistence deferred, then writes the board once. On
    /// error every entry appended inside the batch is rolled back.
    pub fn batch<T, E>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, E>) -> Result<T, E>
    where
        E: From<BoardError>,
    {
        let mark = self.entries.len();
        let saved_registry = self.registry.clone();
        self.batch_depth += 1;
        let result = f(self);
        self.batch_depth -= 1;
        let result = result.and_then(|value| {
            if self.batch_depth == 0 {
                self.persist().map_err(|e| E::from(BoardError::Io(e)))?;
            }
            Ok(value)
        });
        if result.is_err() {
            self.entries.truncate(mark);
            self.lines.truncate(mark);
            self.registry = saved_registry;
        }
        result
    }

    /// Serialized board contents, one canonical entry per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    fn persist(&self) -> std::io::Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
        tmp_name.push(".tmp");
        let tmp = path.with_file_name(tmp_name);
        {
            let mut file = std::fs::File::create(&tmp)?;
            file.write_all(self.to_jsonl().as_bytes())?;
            file.sync_all()?;
        }
        std::fs::rename(&tmp, path)
    }
}

/// Reads a board file without verifying it.
pub fn load_entries(path: &Path) -> Result<Vec<BulletinEntry>, BoardError> {
    let text = std::fs::read_to_string(path)?;
    parse_entries(&text)
}

pub fn parse_entries(text: &str) -> Result<Vec<BulletinEntry>, BoardError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| BoardError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn announced_deadline(entries: &[BulletinEntry]) -> Option<DateTime<Utc>> {
    let announce = entries.first().filter(|e| e.kind == EntryKind::Announce)?;
    let text = announce.payload.get("terms")?.get("deadline")?.as_str()?;
    DateTime::parse_from_rfc3339(text).ok().map(|t| t.with_timezone(&Utc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppealVerdict {
    /// Receipt is genuine and the entry it acknowledges is missing.
    Upheld,
    /// The acknowledged entry is on the board.
    Dismissed,
}

/// Decides an appeal from public data alone.
pub fn judge_appeal(entries: &[BulletinEntry], receipt: &Receipt) -> Result<AppealVerdict, AppealError> {
    let announce = entries
        .first()
        .filter(|e| e.kind == EntryKind::Announce)
        .ok_or(AppealError::NotAnnounced)?;
    let scheme = str_field(&announce.payload, "scheme").map_err(AppealError::MalformedReceipt)?;
    let vk = hex_field(&announce.payload, "auctioneer_vk").map_err(AppealError::MalformedReceipt)?;
    match receipt.verify(&scheme, &vk) {
        Ok(true) => {}
        Ok(false) => return Err(AppealError::MalformedReceipt("signature does not verify".into())),
        Err(e) => return Err(AppealError::MalformedReceipt(e.to_string())),
    }
    let present = entries.iter().any(|e| e.hash() == receipt.entry_hash);
    Ok(if present {
        AppealVerdict::Dismissed
    } else {
        AppealVerdict::Upheld
    })
}

/// Payload of an `appeal` entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppealRecord {
    pub receipt: Receipt,
    pub verdict: AppealVerdict,
    #[serde(with = "hex_bytes")]
    pub vk: Vec<u8>,
    pub scheme: String,
}

/// Files a non-inclusion appeal after the deadline and records it on the board.
pub fn appeal_non_inclusion(
    board: &mut BulletinBoard,
    receipt: &Receipt,
    appellant: &Pseudonym,
    keypair: &SigningKeypair,
) -> Result<AppealVerdict, AppealError> {
    let deadline = board.deadline().ok_or(AppealError::NotAnnounced)?;
    if board.now() < deadline {
        return Err(AppealError::BiddingOpen);
    }
    let verdict = judge_appeal(board.entries(), receipt)?;
    let record = AppealRecord {
        receipt: receipt.clone(),
        verdict,
        vk: keypair.public_key.clone(),
        scheme: keypair.scheme_id.clone(),
    };
    let payload = serde_json::to_value(&record).expect("appeal serializes");
    board
        .append(EntryKind::Appeal, payload, Author::Bidder(*appellant), keypair)
        .map_err(|e| AppealError::Record(e.to_string()))?;
    Ok(verdict)
}
