//! Weakly-private information retrieval (WPIR) over `n` replicated servers.
//!
//! A WPIR scheme trades download rate against a bounded leakage of *which*
//! file the client requested. This crate implements two query constructions
//! over GF(2) databases plus the partition and time-sharing transformers,
//! computes their leakage/cost profiles exactly, optimizes the time-shared
//! rate-leakage tradeoff with a Frank-Wolfe solver, evaluates converse
//! bounds, and runs full client/server retrieval rounds over a small binary
//! wire format.
//!
//! Conventions used throughout:
//! * file indices `m` and server indices `l` are 0-based in the API
//!   (the wire format carries 1-based server indices);
//! * file symbols are bits, one downloaded symbol = one bit;
//! * mutual-information, worst-case and maximal leakage are in bits,
//!   likelihood-ratio (epsilon) leakage is in nats with `f64::INFINITY`
//!   as the unbounded sentinel.

pub mod bounds;
mod combinatorics;
pub mod database;
pub mod dist;
pub mod error;
pub mod metrics;
pub mod optimizer;
pub mod pmf;
pub mod query;
pub mod rng;
pub mod scheme;
pub mod scheme_a;
pub mod scheme_b;
pub mod sim;
pub mod wire;
pub mod wrappers;

pub use database::Database;
pub use dist::{CondQueryDist, ServerDist};
pub use error::Error;
pub use pmf::{binary_entropy, entropy, inv_binary_entropy, Pmf};
pub use query::Query;
pub use rng::SplitMix64;
pub use scheme::{Scheme, TradeoffPoint};
pub use scheme_a::SchemeA;
pub use scheme_b::SchemeB;
pub use sim::Transcript;
pub use wrappers::{PartitionScheme, PartitionSchemeA, TimeShareScheme};

/// PIR capacity for `m` files on `n` servers: `1 / (1 + 1/n + ... + 1/n^(m-1))`.
pub fn pir_capacity(m: usize, n: usize) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for _ in 0..m {
        sum += term;
        term /= n as f64;
    }
    1.0 / sum
}
