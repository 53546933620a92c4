//! The abstract retrieval-scheme contract.

use crate::database::Database;
use crate::dist::{CondQueryDist, DistBuilder};
use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::query::Query;

/// Exact enumeration refuses strategy supports larger than this.
pub const ENUMERATION_CAP: usize = 1 << 24;

/// A concrete `(M, n)` retrieval scheme.
///
/// The client draws a strategy state `s` from [`Scheme::strategy`] (states
/// are indices into that distribution), derives one query per server from
/// `(m, s)` alone, and reconstructs file `m` from the answers. Answer maps
/// here are server-symmetric: every server applies the same function to
/// its own query, so implementations ignore the server argument beyond
/// bookkeeping.
///
/// Correctness contract: `decode(m, queries(m, s), answers)` returns file
/// `m` exactly, for every `m`, every strategy state with positive
/// probability, and every database.
pub trait Scheme {
    /// Number of files `M`.
    fn files(&self) -> usize;
    /// Number of servers `n`.
    fn n(&self) -> usize;
    /// Symbols per file.
    fn beta(&self) -> usize;

    /// Distribution of the client's private randomness.
    fn strategy(&self) -> &Pmf;

    /// The `n` queries for request `m` under strategy state `s`.
    fn queries(&self, m: usize, s: usize) -> Vec<Query>;

    /// Server `l`'s answer to `q`: a (possibly empty) vector of bits.
    fn answer(&self, l: usize, q: &Query, db: &Database) -> Vec<u8>;

    /// Downloaded symbols for query `q` (known from the query alone).
    fn answer_len(&self, q: &Query) -> usize;

    /// Stored symbols touched answering `q`.
    fn access_count(&self, q: &Query) -> usize {
        q.weight()
    }

    /// Reconstruct file `m` from one round's queries and answers.
    fn decode(&self, m: usize, queries: &[Query], answers: &[Vec<u8>]) -> Result<Vec<u8>>;

    /// Wire-format scheme tag (see the wire module).
    fn wire_scheme_id(&self) -> u8;

    /// For time-shared schemes, the shift component of strategy state `s`.
    fn timeshare_shift(&self, _s: usize) -> Option<usize> {
        None
    }
}

/// Exact conditional query distribution of a scheme, by enumerating every
/// positive-probability strategy state for every request.
pub fn cond_query_dist(scheme: &dyn Scheme) -> Result<CondQueryDist> {
    let states = scheme.strategy().len();
    if states > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            states,
            cap: ENUMERATION_CAP,
        });
    }
    let files = scheme.files();
    let mut builder = DistBuilder::new(files, scheme.n());
    for (s, ps) in scheme.strategy().support() {
        for m in 0..files {
            for (l, q) in scheme.queries(m, s).into_iter().enumerate() {
                builder.add(l, q, m, ps);
            }
        }
    }
    builder.finish()
}

/// A scheme's full cost/leakage profile.
///
/// Rates and costs follow the standard definitions: `rate` is file bits
/// per expected downloaded bit, `upload` the summed query entropies in
/// bits, `access` the expected touched symbols per round. Leakages
/// `rho_mi`, `rho_wil`, `rho_maxl` are in bits; `rho_epsp` is in nats and
/// may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub rate: f64,
    pub upload: f64,
    pub access: f64,
    pub rho_mi: f64,
    pub rho_wil: f64,
    pub rho_maxl: f64,
    pub rho_epsp: f64,
}

impl TradeoffPoint {
    /// Componentwise comparison; infinities of the same sign match.
    pub fn approx_eq(&self, other: &TradeoffPoint, tol: f64) -> bool {
        fn close(a: f64, b: f64, tol: f64) -> bool {
            (a.is_infinite() && b.is_infinite() && a.signum() == b.signum())
                || (a - b).abs() <= tol
        }
        close(self.rate, other.rate, tol)
            && close(self.upload, other.upload, tol)
            && close(self.access, other.access, tol)
            && close(self.rho_mi, other.rho_mi, tol)
            && close(self.rho_wil, other.rho_wil, tol)
            && close(self.rho_maxl, other.rho_maxl, tol)
            && close(self.rho_epsp, other.rho_epsp, tol)
    }
}
