use std::path::Path;
use std::process::{Command, Output};

/// Runs the binary in `dir` with whitespace-separated arguments.
fn sealbid(dir: &Path, args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sealbid"))
        .current_dir(dir)
        .args(args.split_whitespace())
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn ok(dir: &Path, args: &str) -> String {
    let out = sealbid(dir, args);
    assert_eq!(code(&out), 0, "{args}: {}", String::from_utf8_lossy(&out.stderr));
    stdout(&out)
}

const TERMS: &str = r#"{
  "auction_id": "lot7",
  "item": "pumps",
  "t": 16,
  "value_scale": 10,
  "deadline": "2030-01-02T00:00:00Z",
  "scoring": {
    "price_ceiling": "100",
    "attributes": [
      {"name": "warranty", "weight": "1/2", "direction": "benefit", "breakpoints": [["0", "0"], ["5", "1"]]}
    ]
  }
}"#;

const BOARD: &str = "lot7.board.jsonl";
const BEFORE: &str = "--now 2030-01-01T12:00:00Z";
const AFTER: &str = "--now 2030-01-02T00:00:00Z";

/// Announces lot7 and posts two bids.
fn auction(dir: &Path) {
    ok(dir, "--seed 1 --insecure-seed keygen --bits 256 --out auc");
    ok(dir, "--seed 2 keygen --role bidder --out b1");
    ok(dir, "--seed 3 keygen --role bidder --out b2");
    std::fs::write(dir.join("terms.json"), TERMS).unwrap();
    let announced = ok(dir, &format!("{BEFORE} announce --keys auc --terms terms.json"));
    assert!(announced.contains(BOARD));
    for b in ["b1", "b2"] {
        ok(
            dir,
            &format!("{BEFORE} register --board {BOARD} --keys {b} --auctioneer-keys auc"),
        );
    }
    ok(
        dir,
        &format!("{BEFORE} bid --board {BOARD} --keys b1 --auctioneer-keys auc --value 3 --price 40"),
    );
    ok(
        dir,
        &format!("{BEFORE} bid --board {BOARD} --keys b2 --auctioneer-keys auc --value 4.5 --price 45"),
    );
}

#[test]
fn full_auction_over_a_board_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    auction(d);

    let again = sealbid(
        d,
        &format!("{BEFORE} bid --board {BOARD} --keys b1 --auctioneer-keys auc --value 1 --price 10"),
    );
    assert_eq!(code(&again), 1);
    let early = sealbid(d, &format!("{BEFORE} close --board {BOARD} --keys auc"));
    assert_eq!(code(&early), 1);
    let late = sealbid(
        d,
        &format!("{AFTER} bid --board {BOARD} --keys b2 --auctioneer-keys auc --value 1 --price 10"),
    );
    assert_eq!(code(&late), 1);

    assert!(ok(d, &format!("{AFTER} close --board {BOARD} --keys auc")).contains("posted 2"));
    let opened = ok(
        d,
        &format!("{AFTER} open --board {BOARD} --keys auc --out outcome.json"),
    );
    assert!(opened.starts_with("winner "), "{opened}");
    assert!(d.join("outcome.json").exists());
    assert_eq!(ok(d, &format!("verify --board {BOARD}")).trim(), "VALID");

    let appeal = ok(
        d,
        &format!("{AFTER} appeal --board {BOARD} --keys b1 --receipt b1.bid.receipt.json"),
    );
    assert_eq!(appeal.trim(), "dismissed");
    assert_eq!(ok(d, &format!("verify --board {BOARD}")).trim(), "VALID");
}

#[test]
fn tampered_board_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    auction(d);
    ok(d, &format!("{AFTER} open --board {BOARD} --keys auc"));

    let path = d.join(BOARD);
    let text = std::fs::read_to_string(&path).unwrap();
    let tampered = text.replacen("\"score\":", "\"score\":1", 1);
    assert_ne!(text, tampered);
    std::fs::write(&path, tampered).unwrap();
    let out = sealbid(d, &format!("verify --board {BOARD}"));
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).starts_with("INVALID: "), "{}", stdout(&out));

    std::fs::write(&path, "not json\n").unwrap();
    let out = sealbid(d, &format!("verify --board {BOARD}"));
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).starts_with("INVALID: records"));

    assert_eq!(code(&sealbid(d, "verify --board missing.jsonl")), 3);
}

#[test]
fn seeded_simulations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let first = ok(d, "--seed 7 simulate --bidders 10 --board a.jsonl");
    ok(d, "--seed 7 simulate --bidders 10 --board b.jsonl");
    ok(d, "--seed 8 simulate --bidders 10 --board c.jsonl");
    assert!(first.trim_end().ends_with("VALID"), "{first}");
    let read = |f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read("a.jsonl"), read("b.jsonl"));
    assert_ne!(read("a.jsonl"), read("c.jsonl"));
    assert_eq!(ok(d, "verify --board a.jsonl").trim(), "VALID");
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&sealbid(d, "verify --board x --frobnicate")), 64);
    assert_eq!(code(&sealbid(d, "teleport")), 64);
    assert_eq!(code(&sealbid(d, "--now yesterday verify --board x")), 64);
    assert_eq!(code(&sealbid(d, "--help")), 0);
    assert_eq!(code(&sealbid(d, "--seed 1 keygen --out k")), 64);
    assert_eq!(code(&sealbid(d, "keygen --bits 256 --out k")), 1);
}

#[test]
fn bench_prints_one_row_per_cell_and_phase() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let csv = ok(d, "--seed 3 bench --key-bits 64 --bids 2,3 --out bench.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "key_bits,num_bids,phase,elapsed_ms");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("64,2,proof_preparation,"));
    assert!(lines[4].starts_with("64,3,verification,"));
    assert_eq!(std::fs::read_to_string(d.join("bench.csv")).unwrap(), csv);
}
