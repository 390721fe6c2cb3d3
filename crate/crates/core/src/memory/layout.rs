use std::collections::HashSet;
use std::ops::Range;

use crate::error::{Error, Result};

use super::ClassId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Partition {
    pub class: ClassId,
    pub offset: usize,
    pub count: usize,
}

impl Partition {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.count
    }
}

/// Contiguous, non-overlapping class partitions covering `[0, N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryLayout {
    partitions: Vec<Partition>,
}

impl MemoryLayout {
    /// Lays out `(class, count)` entries back to back in the given order.
    pub fn new(entries: &[(ClassId, usize)]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Layout("layout has no partitions".into()));
        }
        let mut seen = HashSet::new();
        let mut offset = 0;
        let mut partitions = Vec::with_capacity(entries.len());
        for &(class, count) in entries {
            if count == 0 {
                return Err(Error::Layout(format!("class {class} has zero items")));
            }
            if !seen.insert(class) {
                return Err(Error::Layout(format!("class {class} listed twice")));
            }
            partitions.push(Partition {
                class,
                offset,
                count,
            });
            offset += count;
        }
        Ok(MemoryLayout { partitions })
    }

    /// One partition of `n` items that ignores classes.
    pub fn single(n: usize) -> Result<Self> {
        MemoryLayout::new(&[(ClassId::SHARED, n)])
    }

    pub fn len(&self) -> usize {
        self.partitions.last().map_or(0, |p| p.offset + p.count)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_single(&self) -> bool {
        self.partitions.len() == 1 && self.partitions[0].class == ClassId::SHARED
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn entries(&self) -> Vec<(ClassId, usize)> {
        self.partitions.iter().map(|p| (p.class, p.count)).collect()
    }

    pub fn partition(&self, class: ClassId) -> Result<&Partition> {
        self.partitions
            .iter()
            .find(|p| p.class == class)
            .ok_or_else(|| Error::Layout(format!("class {class} has no partition")))
    }

    pub fn class_of_item(&self, item: usize) -> Option<ClassId> {
        self.partitions
            .iter()
            .find(|p| p.range().contains(&item))
            .map(|p| p.class)
    }
}
