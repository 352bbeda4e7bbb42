use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ClosedOrbit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub system_hash: String,
    pub class: String,
    pub tau: f64,
    pub orbit: ClosedOrbit,
}

impl OrbitRecord {
    fn key(&self) -> (String, String, u64) {
        (self.system_hash.clone(), self.class.clone(), self.tau.to_bits())
    }
}

/// Line-oriented JSON store of closed orbits keyed by `(system hash, class,
/// tau)`. Later lines override earlier ones with the same key, so appends are
/// the only write operation.
#[derive(Debug, Default)]
pub struct OrbitDatabase {
    path: Option<PathBuf>,
    records: BTreeMap<(String, String, u64), OrbitRecord>,
}

impl OrbitDatabase {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Open (or create on first insert) the store at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut records = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: OrbitRecord = serde_json::from_str(&line)
                    .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), i + 1)))?;
                records.insert(rec.key(), rec);
            }
        }
        Ok(Self {
            path: Some(path),
            records,
        })
    }

    pub fn get(&self, system_hash: &str, class: &str, tau: f64) -> Option<&ClosedOrbit> {
        self.records
            .get(&(system_hash.to_string(), class.to_string(), tau.to_bits()))
            .map(|r| &r.orbit)
    }

    pub fn insert(&mut self, record: OrbitRecord) -> Result<()> {
        if let Some(path) = &self.path {
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            let line = serde_json::to_string(&record).map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(f, "{line}")?;
        }
        self.records.insert(record.key(), record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in key order.
    pub fn records(&self) -> impl Iterator<Item = &OrbitRecord> {
        self.records.values()
    }
}
