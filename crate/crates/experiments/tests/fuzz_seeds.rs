//! The fuzz corpus seeds are meant to be valid inputs; keep them that way.

use std::fs;
use std::path::{Path, PathBuf};

use congestion::convex_energy::parse_table_csv;
use congestion::field_grid::{decode_field, encode_field, parse_field_csv, Boundary};
use congestion_experiments::parse_config;
use congestion_experiments::store::{decode_trajectory, encode_trajectory};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("seed-"))
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text(bytes: &[u8]) -> &str {
    std::str::from_utf8(bytes).unwrap()
}

#[test]
fn config_seeds() {
    for (path, bytes) in seeds("parse_config") {
        let parsed = parse_config(text(&bytes));
        let misspelled = path.ends_with("seed-misspelled");
        assert_eq!(parsed.is_err(), misspelled, "{}", path.display());
    }
}

#[test]
fn table_seeds() {
    for (path, bytes) in seeds("parse_table_csv") {
        let table = parse_table_csv(text(&bytes)).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(parse_table_csv(&table.to_csv()).unwrap(), table);
    }
}

#[test]
fn field_seeds() {
    for (path, bytes) in seeds("decode_field") {
        let field = decode_field(&bytes).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(encode_field(&field), bytes);
    }
    for (path, bytes) in seeds("parse_field_csv") {
        let boundary = if bytes[0] & 1 == 0 { Boundary::Neumann } else { Boundary::Periodic };
        parse_field_csv(text(&bytes[1..]), boundary).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn trajectory_seeds() {
    for (path, bytes) in seeds("decode_trajectory") {
        let traj = decode_trajectory(&bytes).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(encode_trajectory(&traj), bytes);
    }
}
