//! Round-level protocol simulation over the wire format.
//!
//! Every round serializes each query to bytes, hands the bytes to a pure
//! server function, serializes the answer back, and decodes on the client
//! side. This exercises the full encode/decode path rather than shortcutting
//! through in-memory structures.

use crate::database::Database;
use crate::dist::DistBuilder;
use crate::error::{Error, Result};
use crate::metrics::{download_cost, maxl_leakage, mi_leakage, rate};
use crate::rng::SplitMix64;
use crate::scheme::Scheme;
use crate::wire::{AnswerMsg, QueryMsg};

/// Everything that crossed the wire in one round.
#[derive(Debug, Clone)]
pub struct Transcript {
    pub m: usize,
    pub strategy: usize,
    pub query_frames: Vec<Vec<u8>>,
    pub answer_frames: Vec<Vec<u8>>,
    pub decoded: Vec<u8>,
}

/// Pure server: decodes a query frame, evaluates it against the database,
/// and returns the encoded answer frame. Depends on nothing but its inputs.
pub fn serve(scheme: &dyn Scheme, frame: &[u8], db: &Database) -> Result<Vec<u8>> {
    let msg = QueryMsg::decode(frame)?;
    if msg.scheme_id != scheme.wire_scheme_id() {
        return Err(Error::Protocol(format!(
            "frame addresses scheme id {}, server runs {}",
            msg.scheme_id,
            scheme.wire_scheme_id()
        )));
    }
    let bits = scheme.answer(msg.server_index as usize - 1, &msg.query, db);
    AnswerMsg { bits }.encode()
}

/// Runs one full round for file `m` under strategy state `s`.
///
/// The seed is accepted for interface stability but unused: given `(m, s)`
/// the round is fully deterministic. When `verify` is set, a decode that
/// does not reproduce the stored file is an error.
pub fn run_round(
    scheme: &dyn Scheme,
    db: &Database,
    m: usize,
    s: usize,
    _seed: u64,
    verify: bool,
) -> Result<Transcript> {
    if m >= scheme.files() {
        return Err(Error::Domain(format!("file index {m} out of range")));
    }
    let files = u16::try_from(scheme.files())
        .map_err(|_| Error::Wire("file count exceeds wire range".into()))?;
    let n = u16::try_from(scheme.n()).map_err(|_| Error::Wire("too many servers".into()))?;

    let queries = scheme.queries(m, s);
    let mut query_frames = Vec::with_capacity(queries.len());
    let mut answer_frames = Vec::with_capacity(queries.len());
    let mut answers = Vec::with_capacity(queries.len());
    for (l, q) in queries.iter().enumerate() {
        let frame = QueryMsg {
            scheme_id: scheme.wire_scheme_id(),
            files,
            n,
            server_index: l as u16 + 1,
            query: q.clone(),
        }
        .encode()?;
        let answer_frame = serve(scheme, &frame, db)?;
        answers.push(AnswerMsg::decode(&answer_frame)?.bits);
        query_frames.push(frame);
        answer_frames.push(answer_frame);
    }

    let decoded = scheme.decode(m, &queries, &answers).map_err(|e| {
        Error::Protocol(format!("decode failed at m={m} s={s}: {e}"))
    })?;
    if verify && decoded != db.file(m) {
        return Err(Error::Protocol(format!(
            "round decoded {decoded:?} but the database holds {:?} (m={m} s={s})",
            db.file(m)
        )));
    }
    Ok(Transcript {
        m,
        strategy: s,
        query_frames,
        answer_frames,
        decoded,
    })
}

/// A reproduction record for a failed round.
#[derive(Debug, Clone)]
pub struct FailureCase {
    pub m: usize,
    pub strategy: usize,
    pub db_sample: usize,
    pub db: Database,
    pub detail: String,
}

/// Result of sweeping every `(m, strategy)` pair over sampled databases.
#[derive(Debug, Clone)]
pub struct ExhaustiveReport {
    pub rounds: usize,
    pub failures: Vec<FailureCase>,
    /// Expected download in bits, exact from the query distribution.
    pub download: f64,
    /// Rate `beta / download`, exact.
    pub rate: f64,
}

const MAX_FAILURES: usize = 8;

/// Runs every file index against every positive-probability strategy state
/// on `db_samples` random databases, all through the wire.
pub fn run_exhaustive(
    scheme: &dyn Scheme,
    db_samples: usize,
    seed: u64,
) -> Result<ExhaustiveReport> {
    let mut rng = SplitMix64::new(seed);
    let mut rounds = 0usize;
    let mut failures = Vec::new();
    let states: Vec<usize> = scheme.strategy().support().map(|(s, _)| s).collect();
    for sample in 0..db_samples {
        let db = Database::random(scheme.files(), scheme.beta(), &mut rng);
        for m in 0..scheme.files() {
            for &s in &states {
                rounds += 1;
                if let Err(e) = run_round(scheme, &db, m, s, seed, true) {
                    if failures.len() < MAX_FAILURES {
                        failures.push(FailureCase {
                            m,
                            strategy: s,
                            db_sample: sample,
                            db: db.clone(),
                            detail: e.to_string(),
                        });
                    }
                }
            }
        }
    }
    Ok(ExhaustiveReport {
        rounds,
        failures,
        download: download_cost(scheme)?,
        rate: rate(scheme)?,
    })
}

/// Sample statistics from randomized rounds.
#[derive(Debug, Clone)]
pub struct McReport {
    pub trials: usize,
    /// Mean bits downloaded per round.
    pub mean_download: f64,
    /// Standard error of `mean_download`.
    pub se_download: f64,
    /// Mean symbols touched per round across servers.
    pub mean_access: f64,
    pub decode_failures: usize,
    /// Plug-in leakage estimates from empirical query counts; absent when
    /// some file index was never sampled.
    pub mi_hat: Option<f64>,
    pub maxl_hat: Option<f64>,
}

/// Samples `(m, s)` pairs, runs each round over the wire against a random
/// database, and aggregates costs plus plug-in leakage estimates.
pub fn run_monte_carlo(scheme: &dyn Scheme, trials: usize, seed: u64) -> Result<McReport> {
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let db = Database::random(scheme.files(), scheme.beta(), &mut rng);
    let files = scheme.files();
    let n = scheme.n();

    let mut sum_dl = 0.0;
    let mut sum_dl2 = 0.0;
    let mut sum_access = 0.0;
    let mut decode_failures = 0usize;
    let mut m_counts = vec![0usize; files];
    // counts[l][m] maps query -> hits, mirroring the conditional layout.
    let mut counts: Vec<Vec<std::collections::BTreeMap<crate::query::Query, usize>>> =
        vec![vec![std::collections::BTreeMap::new(); files]; n];

    for _ in 0..trials {
        let m = rng.next_below(files);
        let s = rng.sample(scheme.strategy().probs());
        m_counts[m] += 1;
        let queries = scheme.queries(m, s);
        for (l, q) in queries.iter().enumerate() {
            *counts[l][m].entry(q.clone()).or_insert(0) += 1;
        }
        match run_round(scheme, &db, m, s, seed, true) {
            Ok(t) => {
                let dl: usize = t
                    .answer_frames
                    .iter()
                    .map(|f| AnswerMsg::decode(f).map(|a| a.bits.len()).unwrap_or(0))
                    .sum();
                let access: usize = queries.iter().map(|q| scheme.access_count(q)).sum();
                sum_dl += dl as f64;
                sum_dl2 += (dl * dl) as f64;
                sum_access += access as f64;
            }
            Err(_) => decode_failures += 1,
        }
    }

    let t = trials as f64;
    let mean_download = sum_dl / t;
    let var = (sum_dl2 / t - mean_download * mean_download).max(0.0);
    let se_download = (var / t).sqrt();

    let (mi_hat, maxl_hat) = if m_counts.iter().all(|&c| c > 0) {
        let mut builder = DistBuilder::new(files, n);
        for (l, per_server) in counts.iter().enumerate() {
            for (m, map) in per_server.iter().enumerate() {
                for (q, &c) in map {
                    builder.add(l, q.clone(), m, c as f64 / m_counts[m] as f64);
                }
            }
        }
        let dist = builder.finish()?;
        (Some(mi_leakage(&dist)), Some(maxl_leakage(&dist)))
    } else {
        (None, None)
    };

    Ok(McReport {
        trials,
        mean_download,
        se_download,
        mean_access: sum_access / t,
        decode_failures,
        mi_hat,
        maxl_hat,
    })
}
