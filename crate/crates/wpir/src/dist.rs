//! Per-server conditional query distributions `P(Q_l = q | M = m)`.
//!
//! This is the object every leakage metric consumes: for each server, the
//! distinct queries it can receive and, per requested file, their
//! probabilities.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::query::Query;

/// One server's support and `M x |support|` conditional matrix.
#[derive(Debug, Clone)]
pub struct ServerDist {
    /// Distinct queries in canonical (lexicographic) order.
    pub support: Vec<Query>,
    /// `rows[m][k] = P(Q = support[k] | M = m)`; each row sums to 1.
    pub rows: Vec<Vec<f64>>,
}

impl ServerDist {
    /// Validates row shapes/mass and sorts the support canonically.
    pub fn new(mut support: Vec<Query>, mut rows: Vec<Vec<f64>>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Dimension("empty query support".into()));
        }
        for row in &rows {
            if row.len() != support.len() {
                return Err(Error::Dimension(format!(
                    "row width {} != support size {}",
                    row.len(),
                    support.len()
                )));
            }
        }
        let mut order: Vec<usize> = (0..support.len()).collect();
        order.sort_by(|&a, &b| support[a].cmp(&support[b]));
        if order.windows(2).any(|w| support[w[0]] == support[w[1]]) {
            return Err(Error::Dimension("duplicate query in support".into()));
        }
        support = order.iter().map(|&i| support[i].clone()).collect();
        rows = rows
            .iter()
            .map(|row| order.iter().map(|&i| row[i]).collect())
            .collect();
        for row in &rows {
            // each conditional row must itself be a distribution
            Pmf::new(row.clone())?;
        }
        Ok(Self { support, rows })
    }

    pub fn files(&self) -> usize {
        self.rows.len()
    }

    /// Marginal `P(Q = q)` under request distribution `p_m`.
    pub fn marginal(&self, p_m: &Pmf) -> Result<Pmf> {
        if p_m.len() != self.rows.len() {
            return Err(Error::Dimension(format!(
                "request pmf has {} entries, distribution has {} files",
                p_m.len(),
                self.rows.len()
            )));
        }
        let mut probs = vec![0.0; self.support.len()];
        for (m, row) in self.rows.iter().enumerate() {
            let pm = p_m[m];
            for (k, &p) in row.iter().enumerate() {
                probs[k] += pm * p;
            }
        }
        Pmf::new(probs)
    }
}

/// Conditional query distributions for all `n` servers of one scheme.
#[derive(Debug, Clone)]
pub struct CondQueryDist {
    pub servers: Vec<ServerDist>,
}

impl CondQueryDist {
    pub fn new(servers: Vec<ServerDist>) -> Result<Self> {
        if servers.is_empty() {
            return Err(Error::Dimension("no servers".into()));
        }
        let m = servers[0].files();
        if servers.iter().any(|s| s.files() != m) {
            return Err(Error::Dimension("servers disagree on file count".into()));
        }
        Ok(Self { servers })
    }

    pub fn files(&self) -> usize {
        self.servers[0].files()
    }

    pub fn n(&self) -> usize {
        self.servers.len()
    }
}

/// Accumulates `(server, query, m) -> probability` triples and builds the
/// canonical distribution. Used by scheme enumeration.
pub struct DistBuilder {
    files: usize,
    maps: Vec<BTreeMap<Query, Vec<f64>>>,
}

impl DistBuilder {
    pub fn new(files: usize, servers: usize) -> Self {
        Self {
            files,
            maps: (0..servers).map(|_| BTreeMap::new()).collect(),
        }
    }

    pub fn add(&mut self, server: usize, query: Query, m: usize, prob: f64) {
        let row = self.maps[server]
            .entry(query)
            .or_insert_with(|| vec![0.0; self.files]);
        row[m] += prob;
    }

    pub fn finish(self) -> Result<CondQueryDist> {
        let files = self.files;
        let servers = self
            .maps
            .into_iter()
            .map(|map| {
                let mut support = Vec::with_capacity(map.len());
                let mut cols = Vec::with_capacity(map.len());
                for (q, col) in map {
                    support.push(q);
                    cols.push(col);
                }
                let rows = (0..files)
                    .map(|m| cols.iter().map(|c| c[m]).collect())
                    .collect();
                ServerDist::new(support, rows)
            })
            .collect::<Result<Vec<_>>>()?;
        CondQueryDist::new(servers)
    }
}

/// Marginal query distribution per server under request distribution `p_m`.
pub fn marginal_query_dist(d: &CondQueryDist, p_m: &Pmf) -> Result<Vec<Pmf>> {
    d.servers.iter().map(|s| s.marginal(p_m)).collect()
}
