//! Queries: what a client sends to one server.

use crate::error::{Error, Result};

/// One server's query.
///
/// Entries are symbols in `[0, alphabet)`. The additive construction uses
/// one entry per file (alphabet `n`); the masked construction uses one bit
/// per stored symbol (alphabet 2, length `beta * M`). Partition-wrapped
/// queries additionally carry the 0-based partition index.
///
/// The derived ordering is lexicographic on the entry vector, which is the
/// canonical support order used everywhere.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Query {
    pub entries: Vec<u8>,
    pub alphabet: u8,
    pub partition: Option<u16>,
}

impl Query {
    pub fn new(entries: Vec<u8>, alphabet: u8) -> Result<Self> {
        if alphabet < 2 {
            return Err(Error::Domain(format!("query alphabet {alphabet} < 2")));
        }
        if let Some(e) = entries.iter().find(|e| **e >= alphabet) {
            return Err(Error::Domain(format!(
                "query entry {e} outside [0, {alphabet})"
            )));
        }
        Ok(Self {
            entries,
            alphabet,
            partition: None,
        })
    }

    pub fn with_partition(mut self, j: u16) -> Self {
        self.partition = Some(j);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    /// Number of nonzero entries: the symbols a server touches to answer.
    pub fn weight(&self) -> usize {
        self.entries.iter().filter(|&&e| e != 0).count()
    }
}
