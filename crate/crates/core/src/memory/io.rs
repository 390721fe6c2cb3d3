//! Bank files.
//!
//! A bank is one JSON document:
//!
//! ```text
//! {
//!   "version": 1,
//!   "channels": C,
//!   "layout": [{"class": 1, "count": 3}, ...],   // partition order
//!   "keys": [[...C numbers...], ...],            // N rows
//!   "values_x": [...],
//!   "values_y": [...]
//! }
//! ```
//!
//! Numbers carry 17 significant digits so a save/load round trip is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::numerics::Matrix;

use super::{ClassId, MemoryBank, MemoryLayout};

pub const BANK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutEntry {
    pub class: ClassId,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankFile {
    pub version: u32,
    pub channels: usize,
    pub layout: Vec<LayoutEntry>,
    pub keys: Vec<Vec<f64>>,
    pub values_x: Vec<Vec<f64>>,
    pub values_y: Vec<Vec<f64>>,
}

impl From<&MemoryBank> for BankFile {
    fn from(bank: &MemoryBank) -> Self {
        BankFile {
            version: BANK_FORMAT_VERSION,
            channels: bank.channels(),
            layout: bank
                .layout
                .partitions()
                .iter()
                .map(|p| LayoutEntry {
                    class: p.class,
                    count: p.count,
                })
                .collect(),
            keys: bank.keys.to_rows(),
            values_x: bank.values_x.to_rows(),
            values_y: bank.values_y.to_rows(),
        }
    }
}

fn plane(name: &str, rows: &[Vec<f64>], channels: usize) -> Result<Matrix> {
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != channels) {
        return Err(Error::Validation(format!(
            "{name}[{i}] has {} numbers, channels is {channels}",
            r.len()
        )));
    }
    Ok(Matrix::from_vec(rows.len(), channels, rows.concat()).expect("row lengths checked"))
}

impl TryFrom<BankFile> for MemoryBank {
    type Error = Error;

    fn try_from(f: BankFile) -> Result<Self> {
        if f.version != BANK_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported bank version {} (expected {BANK_FORMAT_VERSION})",
                f.version
            )));
        }
        let entries: Vec<_> = f.layout.iter().map(|e| (e.class, e.count)).collect();
        let layout = MemoryLayout::new(&entries).map_err(|e| Error::Validation(e.to_string()))?;
        if layout.len() != f.keys.len() {
            return Err(Error::Validation(format!(
                "layout counts sum to {} but the file holds {} items",
                layout.len(),
                f.keys.len()
            )));
        }
        let keys = plane("keys", &f.keys, f.channels)?;
        let vx = plane("values_x", &f.values_x, f.channels)?;
        let vy = plane("values_y", &f.values_y, f.channels)?;
        MemoryBank::from_parts(layout, keys, vx, vy)
    }
}

pub fn save_bank(bank: &MemoryBank, path: &Path) -> Result<()> {
    json::write_file(path, &BankFile::from(bank))
}

pub fn load_bank(path: &Path) -> Result<MemoryBank> {
    let file: BankFile = json::read_file(path)?;
    MemoryBank::try_from(file)
}
