//! Additive-query retrieval scheme.
//!
//! Each server receives a length-`M` vector over `{0, .., n-1}`. A query is
//! built by inserting one extra entry into a shared random vector `s` of
//! length `M-1`: for server `l` and desired file `m`, the inserted entry is
//! `(l - sum(s)) mod n` at position `m`. Nonzero entries select file symbols
//! to XOR together; the all-zero query elicits an empty answer. Exactly one
//! server per strategy draw acts as the reference whose answer cancels the
//! masking term.
//!
//! The strategy distribution over `s` is arbitrary; skewing it away from
//! uniform trades privacy for download. With `n = 2` and i.i.d. Bernoulli(p)
//! coordinates the whole tradeoff has closed forms, implemented in
//! [`bernoulli_tuple_a`].

use crate::combinatorics::{binomial, powi0};
use crate::database::Database;
use crate::error::{Error, Result};
use crate::pmf::{binary_entropy, Pmf};
use crate::query::Query;
use crate::scheme::{Scheme, TradeoffPoint};

/// Decodes a strategy index into base-`n` digits `s_0, .., s_{len-1}`
/// (digit `j` is the `j`-th least significant base-`n` digit).
pub fn strategy_digits(index: usize, len: usize, n: usize) -> Vec<u8> {
    let mut digits = vec![0u8; len];
    let mut rem = index;
    for d in digits.iter_mut() {
        *d = (rem % n) as u8;
        rem /= n;
    }
    debug_assert_eq!(rem, 0, "strategy index out of range");
    digits
}

/// Inverse of [`strategy_digits`].
pub fn strategy_index(digits: &[u8], n: usize) -> usize {
    let mut idx = 0usize;
    for &d in digits.iter().rev() {
        debug_assert!((d as usize) < n);
        idx = idx * n + d as usize;
    }
    idx
}

/// Number of strategy states `n^(files-1)`, or an error if it overflows.
pub(crate) fn strategy_states(files: usize, n: usize) -> Result<usize> {
    let exp = u32::try_from(files - 1)
        .map_err(|_| Error::Domain(format!("file count {files} too large")))?;
    n.checked_pow(exp)
        .ok_or_else(|| Error::Domain(format!("strategy space n^{} overflows", files - 1)))
}

/// Builds the `n` per-server queries for file `m` under shared randomness `s`.
pub fn queries_a(files: usize, n: usize, m: usize, s: &[u8]) -> Vec<Query> {
    assert!(files >= 1 && n >= 2 && m < files);
    assert_eq!(s.len(), files - 1);
    let sum: usize = s.iter().map(|&d| d as usize).sum();
    (0..n)
        .map(|l| {
            let inserted = ((l + n * files - (sum % n)) % n) as u8;
            let mut entries = Vec::with_capacity(files);
            entries.extend_from_slice(&s[..m]);
            entries.push(inserted);
            entries.extend_from_slice(&s[m..]);
            Query::new(entries, n as u8).expect("entries are reduced mod n")
        })
        .collect()
}

/// Server-side evaluation: XOR of the selected file symbols. Entry `e != 0`
/// at position `m'` selects symbol `e - 1` of file `m'`; the all-zero query
/// returns an empty answer.
pub fn answer_a(query: &Query, db: &Database) -> Vec<u8> {
    assert_eq!(query.entries.len(), db.files());
    assert_eq!(query.alphabet as usize, db.beta() + 1);
    if query.is_zero() {
        return Vec::new();
    }
    let mut acc = 0u8;
    for (m, &e) in query.entries.iter().enumerate() {
        if e != 0 {
            acc ^= db.symbol(m, e as usize - 1);
        }
    }
    vec![acc]
}

/// Reconstructs file `m` (as `n-1` bits) from the full set of per-server
/// queries and answers. Works from query structure alone, so it tolerates
/// any permutation of the server order.
pub fn decode_a(m: usize, queries: &[Query], answers: &[Vec<u8>]) -> Result<Vec<u8>> {
    let n = queries.len();
    if n < 2 || answers.len() != n {
        return Err(Error::Protocol(format!(
            "expected matching query/answer lists for >=2 servers, got {}/{}",
            n,
            answers.len()
        )));
    }
    for q in queries {
        if q.alphabet as usize != n || m >= q.entries.len() {
            return Err(Error::Protocol(
                "query shape inconsistent with server count".into(),
            ));
        }
    }
    let mut by_entry: Vec<Option<usize>> = vec![None; n];
    for (l, q) in queries.iter().enumerate() {
        let e = q.entries[m] as usize;
        if by_entry[e].replace(l).is_some() {
            return Err(Error::Protocol(format!(
                "two servers share entry {e} at the target position"
            )));
        }
    }
    let z_server = by_entry[0].ok_or_else(|| {
        Error::Protocol("no server has a zero entry at the target position".into())
    })?;
    let z = answers[z_server].first().copied().unwrap_or(0);
    let mut bits = Vec::with_capacity(n - 1);
    for (v, slot) in by_entry.iter().enumerate().skip(1) {
        let l = slot.ok_or_else(|| {
            Error::Protocol(format!("no server has entry {v} at the target position"))
        })?;
        let a = *answers[l].first().ok_or_else(|| {
            Error::Protocol("empty answer for a nonzero query".into())
        })?;
        bits.push((a ^ z) & 1);
    }
    Ok(bits)
}

/// Download rate `(n-1) / (n - P(s = 0))` for an arbitrary strategy.
pub fn rate_a(files: usize, n: usize, strategy: &Pmf) -> Result<f64> {
    let states = strategy_states(files, n)?;
    if strategy.len() != states {
        return Err(Error::Dimension(format!(
            "strategy has {} states, scheme needs {}",
            strategy.len(),
            states
        )));
    }
    let p0 = strategy[0];
    Ok((n - 1) as f64 / (1.0 - p0 + (n - 1) as f64))
}

/// Full cost/leakage tuple for the two-server scheme with i.i.d.
/// Bernoulli(p) strategy coordinates, `0 <= p <= 1/2`.
pub fn bernoulli_tuple_a(files: usize, p: f64) -> Result<TradeoffPoint> {
    if files < 2 {
        return Err(Error::Domain("need at least two files".into()));
    }
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::Domain(format!("p = {p} outside [0, 1/2]")));
    }
    let mf = files as f64;
    // Marginal probability of any particular query of weight w at one server.
    let f = |w: usize| -> f64 {
        let mut t = 0.0;
        if w < files {
            t += (files - w) as f64 * powi0(1.0 - p, files - w - 1) * powi0(p, w);
        }
        if w > 0 {
            t += w as f64 * powi0(1.0 - p, files - w) * powi0(p, w - 1);
        }
        t / mf
    };

    // Even weights occur at one server, odd weights at the other, so the sum
    // over all weights already accounts for both servers.
    let mut upload = 0.0;
    let mut access = 0.0;
    let mut min_cond_entropy = f64::INFINITY;
    for w in 0..=files {
        let fw = f(w);
        if fw <= 0.0 {
            continue;
        }
        let count = binomial(files, w);
        upload -= count * fw * fw.log2();
        access += w as f64 * count * fw;

        // Posterior over the desired index given this query.
        let mut h = 0.0;
        if w < files {
            let a = powi0(1.0 - p, files - w - 1) * powi0(p, w) / (mf * fw);
            if a > 0.0 {
                h -= (files - w) as f64 * a * a.log2();
            }
        }
        if w > 0 {
            let b = powi0(1.0 - p, files - w) * powi0(p, w - 1) / (mf * fw);
            if b > 0.0 {
                h -= w as f64 * b * b.log2();
            }
        }
        min_cond_entropy = min_cond_entropy.min(h);
    }

    let hb = binary_entropy(p)?;
    let rho_mi = upload / 2.0 - (files - 1) as f64 * hb;
    let rho_wil = (mf.log2() - min_cond_entropy).max(0.0);
    let mut maxl_sum = 0.0;
    for w in (1..=files).step_by(2) {
        maxl_sum += binomial(files, w) * powi0(1.0 - p, files - w) * powi0(p, w - 1);
    }
    let rho_maxl = maxl_sum.log2();
    let rho_epsp = if p == 0.0 {
        f64::INFINITY
    } else {
        ((1.0 - p) / p).ln()
    };

    Ok(TradeoffPoint {
        rate: 1.0 / (2.0 - powi0(1.0 - p, files - 1)),
        upload,
        access,
        rho_mi: rho_mi.max(0.0),
        rho_wil,
        rho_maxl: rho_maxl.max(0.0),
        rho_epsp,
    })
}

/// Best rate of the two-server Bernoulli family at likelihood-ratio leakage
/// `rho` nats: choose `p = 1 / (1 + e^rho)`.
pub fn eps_privacy_rate_a(files: usize, rho: f64) -> Result<f64> {
    if files < 2 {
        return Err(Error::Domain("need at least two files".into()));
    }
    if !(rho >= 0.0) {
        return Err(Error::Domain(format!("leakage budget {rho} must be >= 0")));
    }
    let p = 1.0 / (1.0 + rho.exp());
    Ok(1.0 / (2.0 - powi0(1.0 - p, files - 1)))
}

/// The additive-query scheme with a configurable strategy distribution.
#[derive(Debug, Clone)]
pub struct SchemeA {
    files: usize,
    n: usize,
    strategy: Pmf,
}

impl SchemeA {
    /// Builds the scheme from an explicit strategy over `n^(files-1)` states
    /// (state index encodes `s` base-`n`, least significant digit first).
    pub fn new(files: usize, n: usize, strategy: Pmf) -> Result<Self> {
        if files < 1 {
            return Err(Error::Domain("need at least one file".into()));
        }
        if n < 2 {
            return Err(Error::Domain("need at least two servers".into()));
        }
        let states = strategy_states(files, n)?;
        if strategy.len() != states {
            return Err(Error::Dimension(format!(
                "strategy has {} states, scheme needs {}",
                strategy.len(),
                states
            )));
        }
        Ok(Self { files, n, strategy })
    }

    /// Uniform strategy: perfectly private, capacity-achieving download.
    pub fn uniform(files: usize, n: usize) -> Result<Self> {
        let states = strategy_states(files, n)?;
        Self::new(files, n, Pmf::uniform(states))
    }

    /// Two-server scheme with i.i.d. Bernoulli(p) strategy coordinates.
    pub fn bernoulli(files: usize, p: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::Domain(format!("p = {p} outside [0, 1/2]")));
        }
        let states = strategy_states(files, 2)?;
        let probs = (0..states)
            .map(|i| {
                let w = i.count_ones() as usize;
                powi0(p, w) * powi0(1.0 - p, files - 1 - w)
            })
            .collect();
        Self::new(files, 2, Pmf::new(probs)?)
    }
}

impl Scheme for SchemeA {
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
        let digits = strategy_digits(s, self.files - 1, self.n);
        queries_a(self.files, self.n, m, &digits)
    }

    fn answer(&self, _l: usize, query: &Query, db: &Database) -> Vec<u8> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::evaluate_tradeoff;
    use crate::pir_capacity;
    use crate::rng::SplitMix64;
    use crate::scheme::cond_query_dist;

    #[test]
    fn two_file_query_example() {
        // s = (0): server 0 gets (0,0), server 1 gets (1,0) for file 0.
        let qs = queries_a(2, 2, 0, &[0]);
        assert_eq!(qs[0].entries, vec![0, 0]);
        assert_eq!(qs[1].entries, vec![1, 0]);
    }

    #[test]
    fn three_file_query_example() {
        // s = (1,0), file 2: inserted entries are (0-1) mod 2 = 1 and (1-1) = 0.
        let qs = queries_a(3, 2, 2, &[1, 0]);
        assert_eq!(qs[0].entries, vec![1, 0, 1]);
        assert_eq!(qs[1].entries, vec![1, 0, 0]);
    }

    #[test]
    fn inserted_entries_cover_all_residues() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..200 {
            let files = 2 + rng.next_below(3);
            let n = 2 + rng.next_below(2);
            let m = rng.next_below(files);
            let s: Vec<u8> = (0..files - 1).map(|_| rng.next_below(n) as u8).collect();
            let qs = queries_a(files, n, m, &s);
            let mut seen = vec![false; n];
            for (l, q) in qs.iter().enumerate() {
                // Off-target positions carry s verbatim.
                for (j, &d) in s.iter().enumerate() {
                    let pos = if j < m { j } else { j + 1 };
                    assert_eq!(q.entries[pos], d);
                }
                // Checksum: total sum is l mod n.
                let total: usize = q.entries.iter().map(|&e| e as usize).sum();
                assert_eq!(total % n, l);
                seen[q.entries[m] as usize] = true;
            }
            assert!(seen.iter().all(|&b| b), "inserted entries must be distinct");
        }
    }

    #[test]
    fn answers_and_decode_roundtrip() {
        let mut rng = SplitMix64::new(11);
        for files in 2..=4 {
            for n in 2..=3 {
                let scheme = SchemeA::uniform(files, n).unwrap();
                for _ in 0..20 {
                    let db = Database::random(files, n - 1, &mut rng);
                    for m in 0..files {
                        for s in 0..scheme.strategy().len() {
                            let qs = scheme.queries(m, s);
                            let ans: Vec<Vec<u8>> =
                                qs.iter().map(|q| answer_a(q, &db)).collect();
                            let got = decode_a(m, &qs, &ans).unwrap();
                            assert_eq!(got, db.file(m), "files={files} n={n} m={m} s={s}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn decode_is_permutation_agnostic() {
        let scheme = SchemeA::uniform(3, 3).unwrap();
        let mut rng = SplitMix64::new(3);
        let db = Database::random(3, 2, &mut rng);
        let qs = scheme.queries(1, 5);
        let ans: Vec<Vec<u8>> = qs.iter().map(|q| answer_a(q, &db)).collect();
        let perm = [2usize, 0, 1];
        let qs_p: Vec<Query> = perm.iter().map(|&i| qs[i].clone()).collect();
        let ans_p: Vec<Vec<u8>> = perm.iter().map(|&i| ans[i].clone()).collect();
        assert_eq!(decode_a(1, &qs_p, &ans_p).unwrap(), db.file(1));
    }

    #[test]
    fn decode_rejects_missing_reference() {
        let q1 = Query::new(vec![1, 0], 2).unwrap();
        let q2 = Query::new(vec![1, 1], 2).unwrap();
        let err = decode_a(0, &[q1, q2], &[vec![1], vec![0]]).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
    }

    #[test]
    fn zero_query_gets_empty_answer() {
        let db = Database::zeros(3, 1);
        let q = Query::new(vec![0, 0, 0], 2).unwrap();
        assert!(answer_a(&q, &db).is_empty());
    }

    #[test]
    fn conditional_matches_strategy_mass() {
        // P(Q_l = q | M = m) equals the strategy mass of q with position m
        // removed, for every server.
        let strategy = Pmf::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let scheme = SchemeA::new(3, 2, strategy.clone()).unwrap();
        let dist = cond_query_dist(&scheme).unwrap();
        for server in &dist.servers {
            for (qi, q) in server.support.iter().enumerate() {
                for m in 0..3 {
                    let mut s: Vec<u8> = q.entries.clone();
                    s.remove(m);
                    let expect = strategy[strategy_index(&s, 2)];
                    assert!((server.rows[m][qi] - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn uniform_rate_is_capacity() {
        for files in 2..=5 {
            for n in 2..=3 {
                let scheme = SchemeA::uniform(files, n).unwrap();
                let r = rate_a(files, n, scheme.strategy()).unwrap();
                assert!((r - pir_capacity(files, n)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_strategy_rate_is_one() {
        let strategy = Pmf::point_mass(4, 0);
        assert!((rate_a(3, 2, &strategy).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_tuple_matches_enumeration() {
        for (files, p) in [(2usize, 0.25), (3, 0.3), (4, 0.1), (3, 0.0), (4, 0.5)] {
            let tuple = bernoulli_tuple_a(files, p).unwrap();
            let scheme = SchemeA::bernoulli(files, p).unwrap();
            let measured = evaluate_tradeoff(&scheme).unwrap();
            assert!(
                tuple.approx_eq(&measured, 1e-9),
                "files={files} p={p}\nclosed {tuple:?}\nmeasured {measured:?}"
            );
        }
    }

    #[test]
    fn bernoulli_tuple_frozen_values() {
        let t = bernoulli_tuple_a(2, 0.25).unwrap();
        assert!((t.rate - 0.8).abs() < 1e-12);
        assert!((t.upload - 1.8112781244591328).abs() < 1e-9);
        assert!((t.access - 1.5).abs() < 1e-12);
        assert!((t.rho_mi - 0.09436093777043358).abs() < 1e-9);
        assert!((t.rho_wil - 0.18872187554086717).abs() < 1e-9);
        assert!((t.rho_maxl - 0.5849625007211562).abs() < 1e-9);
        assert!((t.rho_epsp - 1.0986122886681098).abs() < 1e-9);

        let t = bernoulli_tuple_a(3, 0.3).unwrap();
        assert!((t.rate - 0.6622516556291391).abs() < 1e-9);
        assert!((t.upload - 3.6868280098412976).abs() < 1e-9);
        assert!((t.access - 2.2).abs() < 1e-9);
        assert!((t.rho_mi - 0.08083220645899267).abs() < 1e-9);
        assert!((t.rho_wil - 0.1276965870984150).abs() < 1e-9);
        assert!((t.rho_maxl - 0.6415460290887936).abs() < 1e-9);
        assert!((t.rho_epsp - 0.8472978603872037).abs() < 1e-9);
    }

    #[test]
    fn bernoulli_edge_points() {
        // p = 1/2 is the uniform strategy: zero leakage, capacity rate.
        let t = bernoulli_tuple_a(4, 0.5).unwrap();
        assert!(t.rho_mi.abs() < 1e-9);
        assert!(t.rho_wil.abs() < 1e-9);
        assert!(t.rho_maxl.abs() < 1e-9);
        assert!(t.rho_epsp.abs() < 1e-12);
        assert!((t.rate - pir_capacity(4, 2)).abs() < 1e-12);

        // p = 0 is no privacy at all: rate 1, unbounded likelihood ratio.
        let t = bernoulli_tuple_a(4, 0.0).unwrap();
        assert!((t.rate - 1.0).abs() < 1e-12);
        assert!(t.rho_epsp.is_infinite());
        assert!((t.rho_wil - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bernoulli_rejects_out_of_range() {
        assert!(bernoulli_tuple_a(3, 0.6).is_err());
        assert!(bernoulli_tuple_a(3, -0.1).is_err());
        assert!(SchemeA::bernoulli(3, 0.75).is_err());
    }

    #[test]
    fn eps_privacy_rate_values() {
        assert!((eps_privacy_rate_a(2, 0.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        // rho = ln 3 gives p = 1/4: 1 / (2 - (3/4)^2) = 16/23.
        let r = eps_privacy_rate_a(3, 3.0f64.ln()).unwrap();
        assert!((r - 16.0 / 23.0).abs() < 1e-12);
        assert!((eps_privacy_rate_a(5, 1e9).unwrap() - 1.0).abs() < 1e-9);
        assert!(eps_privacy_rate_a(3, -0.5).is_err());
    }
}
