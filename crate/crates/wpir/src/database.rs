//! Replicated GF(2) database: `M` files of `beta` bits each.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// The content replicated at every server. Row `m` holds file `m`'s
/// `beta` bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Database {
    files: usize,
    beta: usize,
    /// Row-major `files x beta` bit matrix.
    symbols: Vec<u8>,
}

impl Database {
    pub fn new(files: usize, beta: usize, rows: &[Vec<u8>]) -> Result<Self> {
        if rows.len() != files {
            return Err(Error::Dimension(format!(
                "expected {files} files, got {}",
                rows.len()
            )));
        }
        let mut symbols = Vec::with_capacity(files * beta);
        for row in rows {
            if row.len() != beta {
                return Err(Error::Dimension(format!(
                    "expected {beta} symbols per file, got {}",
                    row.len()
                )));
            }
            for &b in row {
                if b > 1 {
                    return Err(Error::Domain(format!("symbol {b} not a bit")));
                }
                symbols.push(b);
            }
        }
        Ok(Self { files, beta, symbols })
    }

    pub fn random(files: usize, beta: usize, rng: &mut SplitMix64) -> Self {
        let symbols = (0..files * beta).map(|_| rng.next_bit()).collect();
        Self { files, beta, symbols }
    }

    pub fn zeros(files: usize, beta: usize) -> Self {
        Self {
            files,
            beta,
            symbols: vec![0; files * beta],
        }
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    /// Bit `idx` (0-based) of file `m` (0-based).
    pub fn symbol(&self, m: usize, idx: usize) -> u8 {
        debug_assert!(m < self.files && idx < self.beta);
        self.symbols[m * self.beta + idx]
    }

    pub fn file(&self, m: usize) -> &[u8] {
        &self.symbols[m * self.beta..(m + 1) * self.beta]
    }

    /// Flattened view `(X^(0)_0, ..., X^(0)_{beta-1}, X^(1)_0, ...)`.
    pub fn flat(&self) -> &[u8] {
        &self.symbols
    }

    /// The contiguous block of `count` files starting at `first`, as its
    /// own database (used by partition wrappers).
    pub fn slice_files(&self, first: usize, count: usize) -> Database {
        let start = first * self.beta;
        Database {
            files: count,
            beta: self.beta,
            symbols: self.symbols[start..start + count * self.beta].to_vec(),
        }
    }
}
