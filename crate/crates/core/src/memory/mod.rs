//! The class-aware key-values memory bank.
//!
//! `N` items are split into contiguous class partitions. Each item holds a key in
//! content space and one style value per domain. At training time a class cluster
//! only addresses its own partition; at test time queries address all `N` items.
//! Items are never gradient-trained: they change only through [`update`].

mod bank;
mod io;
mod layout;
mod read;
mod update;

use serde::{Deserialize, Serialize};

use crate::numerics::Matrix;

pub use bank::MemoryBank;
pub use io::{load_bank, save_bank, BankFile, BANK_FORMAT_VERSION};
pub use layout::{MemoryLayout, Partition};
pub use read::{read, read_backward, read_global, ReadResult};
pub use update::{update, update_weights, UpdateWeights};

/// Object class identifier. `0` is background by convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl ClassId {
    pub const BACKGROUND: ClassId = ClassId(0);
    /// The single partition of a memory that ignores class information.
    pub const SHARED: ClassId = ClassId(u32::MAX);
}

impl std::fmt::Display for ClassId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if *self == ClassId::SHARED {
            write!(f, "shared")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    X,
    Y,
}

impl Domain {
    pub fn opposite(self) -> Domain {
        match self {
            Domain::X => Domain::Y,
            Domain::Y => Domain::X,
        }
    }
}

/// Translation direction of a read: queries come from the source domain and
/// the aggregated style is built from the target domain's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    XToY,
    YToX,
}

impl Direction {
    pub fn source(self) -> Domain {
        match self {
            Direction::XToY => Domain::X,
            Direction::YToX => Domain::Y,
        }
    }

    pub fn target(self) -> Domain {
        self.source().opposite()
    }

    pub fn from_source(d: Domain) -> Direction {
        match d {
            Domain::X => Direction::XToY,
            Domain::Y => Direction::YToX,
        }
    }
}

/// Content/style features of one class gathered from a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCluster {
    pub class: ClassId,
    pub content: Matrix,
    pub style: Matrix,
    /// Row `i` of `content`/`style` came from scene position `positions[i]`.
    pub positions: Vec<usize>,
}

impl ClassCluster {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn empty(class: ClassId, channels: usize) -> Self {
        ClassCluster {
            class,
            content: Matrix::zeros(0, channels),
            style: Matrix::zeros(0, channels),
            positions: Vec::new(),
        }
    }
}
