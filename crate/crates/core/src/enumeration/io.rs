//! JSON table files with a SHA-256 checksum over the payload.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{CountTables, DistanceCounts, TableMeta};

pub const TABLE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed table file: {0}")]
    Malformed(String),
    #[error("unsupported table version {found} (expected {TABLE_VERSION})")]
    Version { found: u32 },
    #[error("checksum mismatch: file says {stored}, contents hash to {computed}")]
    Checksum { stored: String, computed: String },
    #[error("checksum cannot be verified: table file is truncated")]
    Truncated,
    #[error("invalid tables: {0}")]
    Invalid(String),
}

impl TableError {
    /// True for files whose contents do not match their checksum, including
    /// files cut short.
    pub fn is_checksum_failure(&self) -> bool {
        matches!(self, TableError::Checksum { .. } | TableError::Truncated)
    }
}

#[derive(Serialize, Deserialize)]
struct AnRow {
    i: u32,
    z1: u32,
    count: String,
}

#[derive(Serialize, Deserialize)]
struct Row {
    i: u32,
    count: String,
}

#[derive(Serialize, Deserialize)]
struct Level {
    n: usize,
    an: Vec<AnRow>,
    aprime: Vec<Row>,
    gamma_minus: Vec<Row>,
}

#[derive(Serialize)]
struct Payload<'a> {
    version: u32,
    depth: usize,
    tables: &'a [Level],
}

#[derive(Serialize, Deserialize)]
struct Meta {
    generator: String,
    wall_time_secs: f64,
    nodes: u64,
}

#[derive(Serialize, Deserialize)]
struct File {
    version: u32,
    depth: usize,
    tables: Vec<Level>,
    checksum: String,
    meta: Meta,
}

fn to_levels(tables: &CountTables) -> Vec<Level> {
    let rows = |m: &std::collections::BTreeMap<u32, BigUint>| {
        m.iter()
            .map(|(&i, c)| Row {
                i,
                count: c.to_string(),
            })
            .collect()
    };
    tables
        .levels()
        .iter()
        .map(|l| Level {
            n: l.n,
            an: l
                .an
                .iter()
                .map(|(&(i, z1), c)| AnRow {
                    i,
                    z1,
                    count: c.to_string(),
                })
                .collect(),
            aprime: rows(&l.aprime),
            gamma_minus: rows(&l.gamma_minus),
        })
        .collect()
}

fn checksum_of(depth: usize, levels: &[Level]) -> String {
    let payload = Payload {
        version: TABLE_VERSION,
        depth,
        tables: levels,
    };
    let bytes = serde_json::to_vec(&payload).expect("payload serializes");
    hex::encode(Sha256::digest(bytes))
}

pub(super) fn payload_checksum(tables: &CountTables) -> String {
    checksum_of(tables.depth(), &to_levels(tables))
}

pub fn save_tables(tables: &CountTables, path: impl AsRef<Path>) -> Result<(), TableError> {
    let levels = to_levels(tables);
    let file = File {
        version: TABLE_VERSION,
        depth: tables.depth(),
        checksum: checksum_of(tables.depth(), &levels),
        tables: levels,
        meta: Meta {
            generator: tables.meta.generator.clone(),
            wall_time_secs: tables.meta.wall_time_secs,
            nodes: tables.meta.nodes,
        },
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| TableError::Malformed(e.to_string()))?;
    text.push('\n');
    // Write then rename so a reader never sees a half-written file.
    let path = path.as_ref();
    let tmp = path.with_extension("json.partial");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn count(text: &str) -> Result<BigUint, TableError> {
    BigUint::from_str(text).map_err(|_| TableError::Malformed(format!("bad count {text:?}")))
}

pub fn load_tables(path: impl AsRef<Path>) -> Result<CountTables, TableError> {
    let text = fs::read_to_string(path)?;
    let file: File = serde_json::from_str(&text).map_err(|e| {
        if e.is_eof() {
            TableError::Truncated
        } else {
            TableError::Malformed(e.to_string())
        }
    })?;
    if file.version != TABLE_VERSION {
        return Err(TableError::Version {
            found: file.version,
        });
    }
    let computed = checksum_of(file.depth, &file.tables);
    if computed != file.checksum {
        return Err(TableError::Checksum {
            stored: file.checksum,
            computed,
        });
    }
    let mut levels = Vec::with_capacity(file.tables.len());
    for l in file.tables {
        let mut d = DistanceCounts::empty(l.n);
        for r in l.an {
            d.an.insert((r.i, r.z1), count(&r.count)?);
        }
        for r in l.aprime {
            d.aprime.insert(r.i, count(&r.count)?);
        }
        for r in l.gamma_minus {
            d.gamma_minus.insert(r.i, count(&r.count)?);
        }
        levels.push(d);
    }
    if levels.len() + 1 != file.depth {
        return Err(TableError::Invalid(format!(
            "depth {} but {} levels",
            file.depth,
            levels.len()
        )));
    }
    let meta = TableMeta {
        generator: file.meta.generator,
        wall_time_secs: file.meta.wall_time_secs,
        nodes: file.meta.nodes,
        nodes_by_length: Vec::new(),
    };
    CountTables::new(levels, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::enumerate_tables;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let t = enumerate_tables(5, 1).unwrap();
        save_tables(&t, &path).unwrap();
        let back = load_tables(&path).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.checksum(), t.checksum());
        assert_eq!(back.meta.nodes, t.meta.nodes);
    }

    #[test]
    fn golden_depth_two_file() {
        let t = enumerate_tables(2, 1).unwrap();
        let levels = to_levels(&t);
        let payload = serde_json::to_string(&Payload {
            version: TABLE_VERSION,
            depth: 2,
            tables: &levels,
        })
        .unwrap();
        assert_eq!(
            payload,
            r#"{"version":1,"depth":2,"tables":[{"n":2,"an":[{"i":1,"z1":1,"count":"1"},{"i":2,"z1":2,"count":"1"}],"aprime":[{"i":1,"count":"1"}],"gamma_minus":[{"i":0,"count":"1"}]}]}"#
        );
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        save_tables(&enumerate_tables(4, 1).unwrap(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();

        let tampered = text.replacen("\"count\": \"1\"", "\"count\": \"2\"", 1);
        assert_ne!(tampered, text);
        fs::write(&path, &tampered).unwrap();
        assert!(matches!(load_tables(&path), Err(TableError::Checksum { .. })));

        fs::write(&path, &text[..text.len() / 2]).unwrap();
        let err = load_tables(&path).unwrap_err();
        assert!(err.is_checksum_failure(), "{err}");

        fs::write(&path, text.replacen("\"version\": 1", "\"version\": 7", 1)).unwrap();
        assert!(matches!(load_tables(&path), Err(TableError::Version { found: 7 })));

        fs::write(&path, "[1, 2]").unwrap();
        assert!(matches!(load_tables(&path), Err(TableError::Malformed(_))));
    }
}
