//! `sealbid`: run a verifiable sealed-bid auction over a shared board file.
//!
//! Exit codes: 0 success, 1 rejected by the protocol, 2 verification
//! failure, 3 I/O or file format error, 64 usage error.

mod keys;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::Value;

use sealbid::bench;
use sealbid::bulletin::{
    appeal_non_inclusion, load_entries, AppealError, BoardError, BulletinBoard, Clock, ManualClock, Receipt,
    SystemClock,
};
use sealbid::codec::rational_from_str;
use sealbid::identity::{random_nonce, IdentityError, SigningKeypair};
use sealbid::paillier::{keygen, keygen_insecure, PRODUCTION_KEY_BITS};
use sealbid::protocol::simulate::{run, SimulationConfig};
use sealbid::protocol::{terms_from_board, verify_outcome, Auctioneer, Bidder, Outcome, ProtocolError, WINNER_RULE};

use keys::{with_suffix, AuctioneerKeys, BidderFile};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
    Verify(String),
    Io(String),
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Verify(_) => 2,
            CliError::Io(_) => 3,
            CliError::Usage(_) => 64,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) | CliError::Verify(m) | CliError::Io(m) => m,
        }
    }
}

impl From<BoardError> for CliError {
    fn from(e: BoardError) -> Self {
        match e {
            BoardError::Io(_) | BoardError::Parse { .. } => CliError::Io(e.to_string()),
            BoardError::Chain(_) => CliError::Verify(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Board(b) | ProtocolError::Identity(IdentityError::Board(b)) => b.into(),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<AppealError> for CliError {
    fn from(e: AppealError) -> Self {
        CliError::Domain(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "sealbid",
    version,
    about = "Verifiable sealed-bid multi-attribute reverse auctions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed the process CSPRNG for reproducible runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Allow a fixed seed and test-size keys for auctioneer key generation.
    #[arg(long, global = true)]
    insecure_seed: bool,
    /// Worker threads for proof generation and verification.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Use this RFC 3339 time instead of the system clock.
    #[arg(long, global = true)]
    now: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    Auctioneer,
    Bidder,
}

#[derive(Subcommand)]
enum Command {
    /// Generate auctioneer (Paillier + signing) or bidder keys.
    Keygen {
        #[arg(long, value_enum, default_value = "auctioneer")]
        role: Role,
        #[arg(long, default_value_t = 2048)]
        bits: u64,
        /// Output prefix; files are named <prefix>.pub.json and so on.
        #[arg(long)]
        out: PathBuf,
    },
    /// Publish auction terms as the first entry of a new board.
    Announce {
        /// Defaults to <auction_id>.board.jsonl.
        #[arg(long)]
        board: Option<PathBuf>,
        /// Auctioneer key prefix.
        #[arg(long)]
        keys: PathBuf,
        /// Terms JSON; the public key is filled in from the key files.
        #[arg(long)]
        terms: PathBuf,
    },
    /// Register a bidder pseudonym.
    Register {
        #[arg(long)]
        board: PathBuf,
        /// Bidder key prefix.
        #[arg(long)]
        keys: PathBuf,
        /// Auctioneer key prefix, used to sign the receipt.
        #[arg(long)]
        auctioneer_keys: PathBuf,
        /// Receipt file; defaults to <keys>.register.receipt.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encrypt and submit a bid.
    Bid {
        #[arg(long)]
        board: PathBuf,
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        auctioneer_keys: PathBuf,
        /// One value per attribute, in announced order ("3/2", "1.5" or "2").
        #[arg(long = "value")]
        values: Vec<String>,
        #[arg(long)]
        price: String,
        /// Receipt file; defaults to <keys>.bid.receipt.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Post range test sets for every bid once the deadline has passed.
    Close {
        #[arg(long)]
        board: PathBuf,
        #[arg(long)]
        keys: PathBuf,
    },
    /// Decrypt bids, pick the winner and publish every proof.
    Open {
        #[arg(long)]
        board: PathBuf,
        #[arg(long)]
        keys: PathBuf,
        /// Also write the outcome record here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a finished auction from the board alone.
    Verify {
        #[arg(long)]
        board: PathBuf,
    },
    /// Appeal that a receipted entry is missing from the board.
    Appeal {
        #[arg(long)]
        board: PathBuf,
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        receipt: PathBuf,
    },
    /// Run a complete seeded auction and write its board.
    Simulate {
        #[arg(long, default_value_t = 10)]
        bidders: usize,
        #[arg(long, default_value_t = 2)]
        attributes: usize,
        #[arg(long, default_value_t = 128)]
        bits: u64,
        #[arg(long, default_value = "sim.board.jsonl")]
        board: PathBuf,
    },
    /// Time proof preparation and verification over a sweep; prints CSV.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [512u64, 1024])]
        key_bits: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_values_t = [50usize, 100, 200])]
        bids: Vec<usize>,
        /// Also write the CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Context {
    rng: ChaCha20Rng,
    clock: Arc<dyn Clock>,
    seeded: bool,
    insecure_seed: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(64)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sealbid: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let clock: Arc<dyn Clock> = match &cli.now {
        Some(text) => {
            let t = DateTime::parse_from_rfc3339(text)
                .map_err(|e| CliError::Usage(format!("--now {text:?}: {e}")))?
                .with_timezone(&Utc);
            Arc::new(ManualClock::new(t))
        }
        None => Arc::new(SystemClock),
    };
    let mut ctx = Context {
        rng: match cli.seed {
            Some(seed) => ChaCha20Rng::seed_from_u64(seed),
            None => ChaCha20Rng::from_entropy(),
        },
        clock,
        seeded: cli.seed.is_some(),
        insecure_seed: cli.insecure_seed,
    };

    match cli.command {
        Command::Keygen { role, bits, out } => keygen_cmd(&mut ctx, role, bits, &out),
        Command::Announce { board, keys, terms } => announce(&ctx, board, &keys, &terms),
        Command::Register {
            board,
            keys,
            auctioneer_keys,
            out,
        } => register(&ctx, &board, &keys, &auctioneer_keys, out),
        Command::Bid {
            board,
            keys,
            auctioneer_keys,
            values,
            price,
            out,
        } => bid(&mut ctx, &board, &keys, &auctioneer_keys, &values, &price, out),
        Command::Close { board, keys } => close(&mut ctx, &board, &keys),
        Command::Open { board, keys, out } => open(&mut ctx, &board, &keys, out),
        Command::Verify { board } => verify(&board),
        Command::Appeal { board, keys, receipt } => appeal(&ctx, &board, &keys, &receipt),
        Command::Simulate {
            bidders,
            attributes,
            bits,
            board,
        } => simulate(&mut ctx, bidders, attributes, bits, &board),
        Command::Bench { key_bits, bids, out } => bench_cmd(&ctx, &key_bits, &bids, out),
    }
}

fn keygen_cmd(ctx: &mut Context, role: Role, bits: u64, out: &Path) -> Result<(), CliError> {
    match role {
        Role::Auctioneer => {
            let production = PRODUCTION_KEY_BITS.contains(&bits);
            if !ctx.insecure_seed {
                if ctx.seeded {
                    return Err(CliError::Usage(
                        "a fixed --seed for auctioneer keys needs --insecure-seed".into(),
                    ));
                }
                if !production {
                    return Err(CliError::Domain(format!(
                        "key size {bits} is not one of 512, 1024, 2048 (test sizes need --insecure-seed)"
                    )));
                }
            }
            let generated = if production {
                keygen(bits, &mut ctx.rng)
            } else {
                keygen_insecure(bits, &mut ctx.rng)
            };
            let (public, private) = generated.map_err(|e| CliError::Domain(e.to_string()))?;
            let keys = AuctioneerKeys {
                public,
                private,
                signing: SigningKeypair::generate(&mut ctx.rng),
            };
            for path in keys.save(out)? {
                println!("wrote {}", path.display());
            }
        }
        Role::Bidder => {
            let file = BidderFile {
                signing: SigningKeypair::generate(&mut ctx.rng),
                nonce: hex::encode(random_nonce(&mut ctx.rng)),
            };
            let path = BidderFile::path(out);
            keys::write_private(&path, &file)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn open_board(ctx: &Context, path: &Path) -> Result<BulletinBoard, CliError> {
    if !path.exists() {
        return Err(CliError::Io(format!("{}: no such board", path.display())));
    }
    Ok(BulletinBoard::open(path, Arc::clone(&ctx.clock))?)
}

fn read_receipt(path: &Path) -> Result<Receipt, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    keys::write_public(path, value)
}

fn announce(ctx: &Context, board: Option<PathBuf>, keys: &Path, terms_path: &Path) -> Result<(), CliError> {
    let keys = AuctioneerKeys::load(keys)?;
    let text = std::fs::read_to_string(terms_path).map_err(|e| CliError::io(terms_path, e))?;
    let mut terms: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Domain(format!("{}: {e}", terms_path.display())))?;
    let Some(object) = terms.as_object_mut() else {
        return Err(CliError::Domain("terms must be a JSON object".into()));
    };
    object.insert(
        "public_key".into(),
        serde_json::to_value(&keys.public).expect("key serializes"),
    );
    object.entry("winner_rule").or_insert_with(|| WINNER_RULE.into());
    let terms = serde_json::from_value(terms).map_err(|e| CliError::Domain(format!("terms: {e}")))?;

    let auctioneer = Auctioneer::new(keys.signing, keys.private, terms)?;
    let path = board.unwrap_or_else(|| PathBuf::from(format!("{}.board.jsonl", auctioneer.terms().auction_id)));
    let mut board = BulletinBoard::create(&path, Arc::clone(&ctx.clock))?;
    auctioneer.announce(&mut board)?;
    println!("announced {} on {}", auctioneer.terms().auction_id, path.display());
    Ok(())
}

fn hosted_bidder(
    ctx: &Context,
    board_path: &Path,
    keys: &Path,
    auctioneer_keys: &Path,
) -> Result<(BulletinBoard, Bidder), CliError> {
    let mut board = open_board(ctx, board_path)?;
    board.set_host(AuctioneerKeys::load_signing(auctioneer_keys)?);
    let (signing, nonce) = BidderFile::load(keys)?;
    let terms = terms_from_board(board.entries())?;
    Ok((board, Bidder::new(signing, nonce, &terms.auction_id)))
}

fn register(
    ctx: &Context,
    board: &Path,
    keys: &Path,
    auctioneer_keys: &Path,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let (mut board, bidder) = hosted_bidder(ctx, board, keys, auctioneer_keys)?;
    let receipt = bidder.register(&mut board)?;
    let out = out.unwrap_or_else(|| with_suffix(keys, ".register.receipt.json"));
    write_json(&out, &receipt)?;
    println!(
        "registered {} (entry {}, receipt {})",
        bidder.pseudonym(),
        receipt.entry_seq,
        out.display()
    );
    Ok(())
}

fn bid(
    ctx: &mut Context,
    board: &Path,
    keys: &Path,
    auctioneer_keys: &Path,
    values: &[String],
    price: &str,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let parse = |s: &str| rational_from_str(s).map_err(|e| CliError::Usage(e.to_string()));
    let values = values.iter().map(|v| parse(v)).collect::<Result<Vec<_>, _>>()?;
    let price = parse(price)?;
    let (mut board, bidder) = hosted_bidder(ctx, board, keys, auctioneer_keys)?;
    let (_, receipt) = bidder.submit_bid(&mut board, values, price, &mut ctx.rng)?;
    let out = out.unwrap_or_else(|| with_suffix(keys, ".bid.receipt.json"));
    write_json(&out, &receipt)?;
    println!("bid posted as entry {} (receipt {})", receipt.entry_seq, out.display());
    Ok(())
}

fn hosted_auctioneer(ctx: &Context, board_path: &Path, keys: &Path) -> Result<(BulletinBoard, Auctioneer), CliError> {
    let keys = AuctioneerKeys::load(keys)?;
    let mut board = open_board(ctx, board_path)?;
    let auctioneer = Auctioneer::resume(keys.signing.clone(), keys.private, board.entries())?;
    board.set_host(keys.signing);
    Ok((board, auctioneer))
}

fn close(ctx: &mut Context, board: &Path, keys: &Path) -> Result<(), CliError> {
    let (mut board, mut auctioneer) = hosted_auctioneer(ctx, board, keys)?;
    let posted = auctioneer.close(&mut board, &mut ctx.rng)?;
    println!("posted {posted} range test sets");
    Ok(())
}

fn describe(outcome: &Outcome) -> String {
    match &outcome.winner {
        Some(w) => format!(
            "winner {} (bid entry {}, score {}); {} losing, {} disqualified",
            w.pseudonym,
            w.bid_seq,
            w.score.0,
            outcome.loser_proofs.len(),
            outcome.disqualified.len()
        ),
        None => format!("no winner; {} disqualified", outcome.disqualified.len()),
    }
}

fn open(ctx: &mut Context, board: &Path, keys: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let (mut board, mut auctioneer) = hosted_auctioneer(ctx, board, keys)?;
    let outcome = auctioneer.open_and_prove(&mut board, &mut ctx.rng)?;
    if let Some(out) = out {
        write_json(&out, &outcome)?;
    }
    println!("{}", describe(&outcome));
    Ok(())
}

fn verify(board: &Path) -> Result<(), CliError> {
    if !board.exists() {
        return Err(CliError::Io(format!("{}: no such board", board.display())));
    }
    let entries = match load_entries(board) {
        Ok(entries) => entries,
        Err(BoardError::Parse { line, message }) => {
            println!("INVALID: records: line {line}: {message}");
            return Err(CliError::Verify("verification failed".into()));
        }
        Err(e) => return Err(e.into()),
    };
    let verdict = verify_outcome(&entries);
    println!("{verdict}");
    if verdict.is_valid() {
        Ok(())
    } else {
        Err(CliError::Verify("verification failed".into()))
    }
}

fn appeal(ctx: &Context, board: &Path, keys: &Path, receipt: &Path) -> Result<(), CliError> {
    let mut board = open_board(ctx, board)?;
    let (signing, nonce) = BidderFile::load(keys)?;
    let terms = terms_from_board(board.entries())?;
    let bidder = Bidder::new(signing, nonce, &terms.auction_id);
    let receipt = read_receipt(receipt)?;
    let verdict = appeal_non_inclusion(&mut board, &receipt, &bidder.pseudonym(), bidder.signing_key())?;
    println!(
        "{}",
        serde_json::to_value(verdict)
            .expect("verdict serializes")
            .as_str()
            .unwrap_or("?")
    );
    Ok(())
}

fn simulate(ctx: &mut Context, bidders: usize, attributes: usize, bits: u64, path: &Path) -> Result<(), CliError> {
    let config = SimulationConfig::new(bidders, attributes, bits);
    let (sim, outcome) = run(&config, &mut ctx.rng)?;
    std::fs::write(path, sim.board.to_jsonl()).map_err(|e| CliError::io(path, e))?;
    println!("wrote {} ({} entries)", path.display(), sim.board.len());
    println!("{}", describe(&outcome));
    println!("{}", verify_outcome(sim.board.entries()));
    Ok(())
}

fn bench_cmd(ctx: &Context, key_bits: &[u64], bids: &[usize], out: Option<PathBuf>) -> Result<(), CliError> {
    let seed = if ctx.seeded { ctx.rng.get_seed() } else { [0; 32] };
    let seed = u64::from_le_bytes(seed[..8].try_into().expect("eight bytes"));
    let records = bench::sweep(key_bits, bids, seed).map_err(|e| CliError::Domain(e.to_string()))?;
    let csv = bench::to_csv(&records);
    print!("{csv}");
    if let Some(out) = out {
        std::fs::write(&out, &csv).map_err(|e| CliError::io(&out, e))?;
    }
    Ok(())
}
