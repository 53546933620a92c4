//! Scheme combinators: partitioning and time-sharing.
//!
//! Partitioning runs a small scheme on one block of a larger database and
//! ships the block index alongside the sub-query. The embedded variant for
//! the additive scheme hides the block index inside a full-length query
//! vector instead, which merges the all-zero query across blocks and shaves
//! a sliver off the leakage. Time-sharing rotates which server plays which
//! role, equalizing the per-server leakage profile at no cost.

use crate::database::Database;
use crate::dist::{CondQueryDist, DistBuilder};
use crate::error::{Error, Result};
use crate::pir_capacity;
use crate::pmf::Pmf;
use crate::query::Query;
use crate::scheme::{Scheme, TradeoffPoint, ENUMERATION_CAP};
use crate::scheme_a::{queries_a, strategy_digits, strategy_index, strategy_states};
use crate::scheme_a::{answer_a, decode_a};

/// Runs `inner` on one of `eta` equal contiguous blocks of files and tags
/// each query with the block index.
#[derive(Debug, Clone)]
pub struct PartitionScheme<S: Scheme> {
    inner: S,
    eta: usize,
}

impl<S: Scheme> PartitionScheme<S> {
    pub fn new(inner: S, eta: usize) -> Result<Self> {
        if eta < 1 {
            return Err(Error::Domain("need at least one block".into()));
        }
        if eta > u16::MAX as usize {
            return Err(Error::Domain(format!("{eta} blocks exceed the wire limit")));
        }
        Ok(Self { inner, eta })
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    fn block_files(&self) -> usize {
        self.inner.files()
    }
}

impl<S: Scheme> Scheme for PartitionScheme<S> {
    fn files(&self) -> usize {
        self.eta * self.inner.files()
    }

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn beta(&self) -> usize {
        self.inner.beta()
    }

    fn strategy(&self) -> &Pmf {
        self.inner.strategy()
    }

    fn queries(&self, m: usize, s: usize) -> Vec<Query> {
        let block = m / self.block_files();
        self.inner
            .queries(m % self.block_files(), s)
            .into_iter()
            .map(|q| q.with_partition(block as u16))
            .collect()
    }

    fn answer(&self, l: usize, query: &Query, db: &Database) -> Vec<u8> {
        let block = query
            .partition
            .expect("partitioned query carries a block index") as usize;
        let sub = db.slice_files(block * self.block_files(), self.block_files());
        self.inner.answer(l, query, &sub)
    }

    fn answer_len(&self, query: &Query) -> usize {
        self.inner.answer_len(query)
    }

    fn access_count(&self, query: &Query) -> usize {
        self.inner.access_count(query)
    }

    fn decode(&self, m: usize, queries: &[Query], answers: &[Vec<u8>]) -> Result<Vec<u8>> {
        self.inner.decode(m % self.block_files(), queries, answers)
    }

    fn wire_scheme_id(&self) -> u8 {
        3
    }
}

/// The additive scheme run on `files / eta`-file blocks with the block
/// embedded in a full-length query vector (zeros outside the active block).
#[derive(Debug, Clone)]
pub struct PartitionSchemeA {
    files: usize,
    n: usize,
    eta: usize,
    strategy: Pmf,
}

impl PartitionSchemeA {
    /// Uniform sub-strategy on each block. Requires `eta` to divide `files`
    /// with at least two files per block.
    pub fn new(files: usize, n: usize, eta: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("need at least two servers".into()));
        }
        if eta < 1 || eta >= files || files % eta != 0 {
            return Err(Error::Domain(format!(
                "block count {eta} must divide {files} with blocks of >=2 files"
            )));
        }
        let block = files / eta;
        let states = strategy_states(block, n)?;
        Ok(Self {
            files,
            n,
            eta,
            strategy: Pmf::uniform(states),
        })
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    fn block_files(&self) -> usize {
        self.files / self.eta
    }
}

impl Scheme for PartitionSchemeA {
    fn files(&self) -> usize {
        self.files
    }

    fn n(&self) -> usize {
        self.n
    }

    fn beta(&self) -> usize {
        self.n - 1
    }

    fn strategy(&self) -> &Pmf {
        &self.strategy
    }

    fn queries(&self, m: usize, s: usize) -> Vec<Query> {
        let block_files = self.block_files();
        let block = m / block_files;
        let digits = strategy_digits(s, block_files - 1, self.n);
        queries_a(block_files, self.n, m % block_files, &digits)
            .into_iter()
            .map(|sub| {
                let mut entries = vec![0u8; self.files];
                entries[block * block_files..(block + 1) * block_files]
                    .copy_from_slice(&sub.entries);
                Query::new(entries, self.n as u8).expect("entries stay below the alphabet")
            })
            .collect()
    }

    fn answer(&self, _l: usize, query: &Query, db: &Database) -> Vec<u8> {
        // Zeros outside the active block contribute nothing, so the plain
        // additive evaluation over the whole database is already correct.
        answer_a(query, db)
    }

    fn answer_len(&self, query: &Query) -> usize {
        if query.is_zero() {
            0
        } else {
            1
        }
    }

    fn decode(&self, m: usize, queries: &[Query], answers: &[Vec<u8>]) -> Result<Vec<u8>> {
        decode_a(m, queries, answers)
    }

    fn wire_scheme_id(&self) -> u8 {
        1
    }
}

/// Closed-form cost/leakage tuple of [`PartitionSchemeA`].
pub fn partition_tuple_a(files: usize, n: usize, eta: usize) -> Result<TradeoffPoint> {
    if n < 2 {
        return Err(Error::Domain("need at least two servers".into()));
    }
    if eta < 1 || eta >= files || files % eta != 0 {
        return Err(Error::Domain(format!(
            "block count {eta} must divide {files} with blocks of >=2 files"
        )));
    }
    let block = files / eta;
    let nf = n as f64;
    let states = strategy_states(block, n)? as f64;
    let log_eta = (eta as f64).log2();
    let leak = if eta == 1 { 0.0 } else { f64::INFINITY };
    Ok(TradeoffPoint {
        rate: pir_capacity(block, n),
        upload: nf * ((block - 1) as f64 * nf.log2() + log_eta) - log_eta / states,
        access: (n - 1) as f64 * block as f64,
        rho_mi: log_eta - log_eta / (states * nf),
        rho_wil: log_eta,
        rho_maxl: log_eta,
        rho_epsp: leak,
    })
}

/// Rotates server roles with a fresh uniform shift each round.
#[derive(Debug, Clone)]
pub struct TimeShareScheme<S: Scheme> {
    inner: S,
    strategy: Pmf,
}

impl<S: Scheme> TimeShareScheme<S> {
    pub fn new(inner: S) -> Result<Self> {
        let n = inner.n();
        let base = inner.strategy();
        let mut probs = Vec::with_capacity(n * base.len());
        for _ in 0..n {
            probs.extend(base.probs().iter().map(|p| p / n as f64));
        }
        let strategy = Pmf::new(probs)?;
        Ok(Self { inner, strategy })
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    fn split(&self, s: usize) -> (usize, usize) {
        let base = self.inner.strategy().len();
        (s / base, s % base)
    }
}

impl<S: Scheme> Scheme for TimeShareScheme<S> {
    fn files(&self) -> usize {
        self.inner.files()
    }

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn beta(&self) -> usize {
        self.inner.beta()
    }

    fn strategy(&self) -> &Pmf {
        &self.strategy
    }

    fn queries(&self, m: usize, s: usize) -> Vec<Query> {
        let (shift, base) = self.split(s);
        let qs = self.inner.queries(m, base);
        let n = qs.len();
        (0..n).map(|l| qs[(l + shift) % n].clone()).collect()
    }

    fn answer(&self, l: usize, query: &Query, db: &Database) -> Vec<u8> {
        self.inner.answer(l, query, db)
    }

    fn answer_len(&self, query: &Query) -> usize {
        self.inner.answer_len(query)
    }

    fn access_count(&self, query: &Query) -> usize {
        self.inner.access_count(query)
    }

    fn decode(&self, m: usize, queries: &[Query], answers: &[Vec<u8>]) -> Result<Vec<u8>> {
        // Inner decoders recover server roles from query structure, so the
        // rotation needs no undoing.
        self.inner.decode(m, queries, answers)
    }

    fn wire_scheme_id(&self) -> u8 {
        4
    }

    fn timeshare_shift(&self, s: usize) -> Option<usize> {
        Some(self.split(s).0)
    }
}

/// Conditional query distribution of the time-shared additive scheme with
/// strategy `z`, built directly: every server sees the full query vector
/// `q` with probability `z[q minus position m] / n`.
pub fn timeshare_dist_a(files: usize, n: usize, z: &Pmf) -> Result<CondQueryDist> {
    if files < 2 || n < 2 {
        return Err(Error::Domain("need >=2 files and >=2 servers".into()));
    }
    let states = strategy_states(files, n)?;
    if z.len() != states {
        return Err(Error::Dimension(format!(
            "strategy has {} states, scheme needs {}",
            z.len(),
            states
        )));
    }
    let full = states
        .checked_mul(n)
        .filter(|&v| v <= ENUMERATION_CAP)
        .ok_or(Error::EnumerationCap {
            states: usize::MAX,
            cap: ENUMERATION_CAP,
        })?;
    let mut builder = DistBuilder::new(files, n);
    for qi in 0..full {
        let digits = strategy_digits(qi, files, n);
        for m in 0..files {
            let mut s = digits.clone();
            s.remove(m);
            let p = z[strategy_index(&s, n)];
            if p <= 0.0 {
                continue;
            }
            let q = Query::new(digits.clone(), n as u8)?;
            for l in 0..n {
                builder.add(l, q.clone(), m, p / n as f64);
            }
        }
    }
    builder.finish()
}
