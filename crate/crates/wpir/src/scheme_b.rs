//! Masked-bit retrieval scheme.
//!
//! The database is viewed as a flat vector of `files * beta` bits. A shared
//! random mask `s` of the same length is drawn from the strategy; server
//! `n-1` receives `s` verbatim and server `l < n-1` receives `s` with one
//! bit flipped, at position `m*beta + l` inside the target file's block.
//! Every answer is a single inner-product bit, so the download is always
//! `n` bits and the rate is `1 - 1/n` regardless of the strategy.
//!
//! Two strategy families have closed forms for `n = 2`: i.i.d. Bernoulli(p)
//! masks ([`bernoulli_tuple_b`]) and masks drawn uniformly from a fixed
//! Hamming sphere ([`sphere_tuple_b`]).

use crate::combinatorics::{binomial, powi0};
use crate::database::Database;
use crate::error::{Error, Result};
use crate::pmf::{binary_entropy, Pmf};
use crate::query::Query;
use crate::scheme::{Scheme, TradeoffPoint};

/// Expands a strategy index into mask bits, least significant bit first.
pub fn strategy_mask(index: usize, len: usize) -> Vec<u8> {
    (0..len).map(|t| ((index >> t) & 1) as u8).collect()
}

/// Number of mask states `2^(files * beta)`, or an error if it overflows.
pub(crate) fn mask_states(files: usize, n: usize) -> Result<usize> {
    let bits = files
        .checked_mul(n - 1)
        .filter(|&b| b < usize::BITS as usize)
        .ok_or_else(|| Error::Domain(format!("mask space 2^({files}*{}) overflows", n - 1)))?;
    Ok(1usize << bits)
}

/// Builds the `n` per-server queries for file `m` from mask bits `s`.
pub fn queries_b(files: usize, n: usize, m: usize, s: &[u8]) -> Vec<Query> {
    let beta = n - 1;
    assert!(files >= 1 && n >= 2 && m < files);
    assert_eq!(s.len(), files * beta);
    (0..n)
        .map(|l| {
            let mut entries = s.to_vec();
            if l < beta {
                entries[m * beta + l] ^= 1;
            }
            Query::new(entries, 2).expect("mask bits are binary")
        })
        .collect()
}

/// Server-side evaluation: inner product of the query bits with the flat
/// database bits.
pub fn answer_b(query: &Query, db: &Database) -> Vec<u8> {
    let flat = db.flat();
    assert_eq!(query.entries.len(), flat.len());
    assert_eq!(query.alphabet, 2);
    let mut acc = 0u8;
    for (&q, &x) in query.entries.iter().zip(flat) {
        acc ^= q & x;
    }
    vec![acc]
}

/// Reconstructs file `m` from the complete query/answer lists. The base
/// query (the unflipped mask) is identified structurally: it differs from
/// every other query in exactly one bit, inside block `m`, at distinct
/// positions. This makes the decoder independent of server order.
pub fn decode_b(m: usize, queries: &[Query], answers: &[Vec<u8>]) -> Result<Vec<u8>> {
    let n = queries.len();
    if n < 2 || answers.len() != n {
        return Err(Error::Protocol(format!(
            "expected matching query/answer lists for >=2 servers, got {}/{}",
            n,
            answers.len()
        )));
    }
    let beta = n - 1;
    let len = queries[0].entries.len();
    if len % beta != 0 || m >= len / beta {
        return Err(Error::Protocol(
            "query length inconsistent with server count".into(),
        ));
    }
    let block = m * beta..(m + 1) * beta;
    'base: for (base, bq) in queries.iter().enumerate() {
        // Positions (relative to the block) where each other query differs.
        let mut flips: Vec<Option<usize>> = vec![None; beta];
        for (l, q) in queries.iter().enumerate() {
            if l == base {
                continue;
            }
            let diffs: Vec<usize> = (0..len)
                .filter(|&t| q.entries[t] != bq.entries[t])
                .collect();
            match diffs.as_slice() {
                [t] if block.contains(t) && flips[t - block.start].is_none() => {
                    flips[t - block.start] = Some(l);
                }
                _ => continue 'base,
            }
        }
        let base_bit = *answers[base]
            .first()
            .ok_or_else(|| Error::Protocol("empty answer bit".into()))?;
        let mut bits = Vec::with_capacity(beta);
        for slot in flips {
            let l = slot.expect("all block positions flipped exactly once");
            let a = *answers[l]
                .first()
                .ok_or_else(|| Error::Protocol("empty answer bit".into()))?;
            bits.push((a ^ base_bit) & 1);
        }
        return Ok(bits);
    }
    Err(Error::Protocol(
        "no query qualifies as the unflipped mask".into(),
    ))
}

/// Download rate of the masked-bit scheme: `1 - 1/n` for any strategy.
pub fn rate_b(n: usize) -> f64 {
    1.0 - 1.0 / n as f64
}

/// Full cost/leakage tuple for the two-server scheme with i.i.d.
/// Bernoulli(p) mask bits, `0 <= p <= 1/2`.
pub fn bernoulli_tuple_b(files: usize, p: f64) -> Result<TradeoffPoint> {
    if files < 2 {
        return Err(Error::Domain("need at least two files".into()));
    }
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::Domain(format!("p = {p} outside [0, 1/2]")));
    }
    let mf = files as f64;
    // Marginal probability of a weight-w query at the flipped server.
    let g = |w: usize| -> f64 {
        let mut t = 0.0;
        if w < files {
            t += (files - w) as f64 * powi0(1.0 - p, files - w - 1) * powi0(p, w + 1);
        }
        if w > 0 {
            t += w as f64 * powi0(1.0 - p, files - w + 1) * powi0(p, w - 1);
        }
        t / mf
    };
    // Marginal at the unflipped server: the mask itself.
    let h = |w: usize| -> f64 { powi0(1.0 - p, files - w) * powi0(p, w) };

    let hb = binary_entropy(p)?;
    let mut upload = mf * hb;
    let mut access = 0.0;
    let mut min_cond_entropy = f64::INFINITY;
    for w in 0..=files {
        let count = binomial(files, w);
        let gw = g(w);
        access += w as f64 * count * (gw + h(w));
        if gw <= 0.0 {
            continue;
        }
        upload -= count * gw * gw.log2();

        let mut hq = 0.0;
        if w < files {
            let a = powi0(1.0 - p, files - w - 1) * powi0(p, w + 1) / (mf * gw);
            if a > 0.0 {
                hq -= (files - w) as f64 * a * a.log2();
            }
        }
        if w > 0 {
            let b = powi0(1.0 - p, files - w + 1) * powi0(p, w - 1) / (mf * gw);
            if b > 0.0 {
                hq -= w as f64 * b * b.log2();
            }
        }
        min_cond_entropy = min_cond_entropy.min(hq);
    }

    let rho_mi = upload / 2.0 - mf * hb;
    let rho_wil = (mf.log2() - min_cond_entropy).max(0.0);
    let mut maxl_sum = powi0(1.0 - p, files - 1) * p;
    for w in 1..=files {
        maxl_sum += binomial(files, w) * powi0(1.0 - p, files - w + 1) * powi0(p, w - 1);
    }
    let rho_epsp = if p == 0.0 {
        f64::INFINITY
    } else {
        2.0 * ((1.0 - p) / p).ln()
    };

    Ok(TradeoffPoint {
        rate: rate_b(2),
        upload,
        access,
        rho_mi: rho_mi.max(0.0),
        rho_wil,
        rho_maxl: maxl_sum.log2().max(0.0),
        rho_epsp,
    })
}

/// Full cost/leakage tuple for the two-server scheme whose mask is uniform
/// on the Hamming sphere of weight `w`, `0 <= w <= files`.
pub fn sphere_tuple_b(files: usize, w: usize) -> Result<TradeoffPoint> {
    if files < 2 {
        return Err(Error::Domain("need at least two files".into()));
    }
    if w > files {
        return Err(Error::Domain(format!(
            "sphere weight {w} exceeds file count {files}"
        )));
    }
    let mf = files as f64;
    let wf = w as f64;
    let log_c = binomial(files, w).log2();
    let y = log_c + mf.log2()
        - (mf - wf) * ((wf + 1.0).log2()) / mf
        - wf * ((mf - wf + 1.0).log2()) / mf;
    let rho_epsp = if (files, w) == (2, 1) { 0.0 } else { f64::INFINITY };
    Ok(TradeoffPoint {
        rate: rate_b(2),
        upload: log_c + y,
        access: 1.0 + 2.0 * wf * (1.0 - 1.0 / mf),
        rho_mi: ((y - log_c) / 2.0).max(0.0),
        rho_wil: (mf.log2() - ((wf + 1.0).log2()).min((mf - wf + 1.0).log2())).max(0.0),
        rho_maxl: ((mf - wf) / (wf + 1.0) + wf / (mf - wf + 1.0)).log2().max(0.0),
        rho_epsp,
    })
}

/// The masked-bit scheme with a configurable mask distribution.
#[derive(Debug, Clone)]
pub struct SchemeB {
    files: usize,
    n: usize,
    strategy: Pmf,
}

impl SchemeB {
    /// Builds the scheme from an explicit strategy over `2^(files*(n-1))`
    /// mask states (state index encodes the mask, LSB = flat position 0).
    pub fn new(files: usize, n: usize, strategy: Pmf) -> Result<Self> {
        if files < 1 {
            return Err(Error::Domain("need at least one file".into()));
        }
        if n < 2 {
            return Err(Error::Domain("need at least two servers".into()));
        }
        let states = mask_states(files, n)?;
        if strategy.len() != states {
            return Err(Error::Dimension(format!(
                "strategy has {} states, scheme needs {}",
                strategy.len(),
                states
            )));
        }
        Ok(Self { files, n, strategy })
    }

    /// Uniform mask: perfectly private at rate `1 - 1/n`.
    pub fn uniform(files: usize, n: usize) -> Result<Self> {
        let states = mask_states(files, n)?;
        Self::new(files, n, Pmf::uniform(states))
    }

    /// Two-server scheme with i.i.d. Bernoulli(p) mask bits.
    pub fn bernoulli(files: usize, p: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::Domain(format!("p = {p} outside [0, 1/2]")));
        }
        let states = mask_states(files, 2)?;
        let probs = (0..states)
            .map(|i| {
                let w = i.count_ones() as usize;
                powi0(p, w) * powi0(1.0 - p, files - w)
            })
            .collect();
        Self::new(files, 2, Pmf::new(probs)?)
    }

    /// Two-server scheme with the mask uniform on the weight-`w` sphere.
    pub fn sphere(files: usize, w: usize) -> Result<Self> {
        if w > files {
            return Err(Error::Domain(format!(
                "sphere weight {w} exceeds file count {files}"
            )));
        }
        let states = mask_states(files, 2)?;
        let count = binomial(files, w);
        let probs = (0..states)
            .map(|i| {
                if i.count_ones() as usize == w {
                    1.0 / count
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(files, 2, Pmf::new(probs)?)
    }
}

impl Scheme for SchemeB {
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
        let mask = strategy_mask(s, self.files * (self.n - 1));
        queries_b(self.files, self.n, m, &mask)
    }

    fn answer(&self, _l: usize, query: &Query, db: &Database) -> Vec<u8> {
        answer_b(query, db)
    }

    fn answer_len(&self, _query: &Query) -> usize {
        1
    }

    fn decode(&self, m: usize, queries: &[Query], answers: &[Vec<u8>]) -> Result<Vec<u8>> {
        decode_b(m, queries, answers)
    }

    fn wire_scheme_id(&self) -> u8 {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::evaluate_tradeoff;
    use crate::rng::SplitMix64;

    #[test]
    fn two_file_query_example() {
        // All-zero mask, file 0: server 0 flips bit 0, server 1 keeps s.
        let qs = queries_b(2, 2, 0, &[0, 0]);
        assert_eq!(qs[0].entries, vec![1, 0]);
        assert_eq!(qs[1].entries, vec![0, 0]);
    }

    #[test]
    fn three_server_queries_flip_within_block() {
        let s = [1u8, 0, 0, 1, 1, 0];
        let qs = queries_b(3, 3, 1, &s);
        assert_eq!(qs[0].entries, vec![1, 0, 1, 1, 1, 0]);
        assert_eq!(qs[1].entries, vec![1, 0, 0, 0, 1, 0]);
        assert_eq!(qs[2].entries, s.to_vec());
    }

    #[test]
    fn answers_and_decode_roundtrip() {
        let mut rng = SplitMix64::new(13);
        for files in 1..=3 {
            for n in 2..=3 {
                let scheme = SchemeB::uniform(files, n).unwrap();
                for _ in 0..10 {
                    let db = Database::random(files, n - 1, &mut rng);
                    for m in 0..files {
                        for s in 0..scheme.strategy().len() {
                            let qs = scheme.queries(m, s);
                            let ans: Vec<Vec<u8>> =
                                qs.iter().map(|q| answer_b(q, &db)).collect();
                            let got = decode_b(m, &qs, &ans).unwrap();
                            assert_eq!(got, db.file(m), "files={files} n={n} m={m} s={s}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn decode_is_permutation_agnostic() {
        let scheme = SchemeB::uniform(2, 3).unwrap();
        let mut rng = SplitMix64::new(29);
        let db = Database::random(2, 2, &mut rng);
        let qs = scheme.queries(1, 9);
        let ans: Vec<Vec<u8>> = qs.iter().map(|q| answer_b(q, &db)).collect();
        let perm = [1usize, 2, 0];
        let qs_p: Vec<Query> = perm.iter().map(|&i| qs[i].clone()).collect();
        let ans_p: Vec<Vec<u8>> = perm.iter().map(|&i| ans[i].clone()).collect();
        assert_eq!(decode_b(1, &qs_p, &ans_p).unwrap(), db.file(1));
    }

    #[test]
    fn decode_rejects_inconsistent_queries() {
        // Two queries differing in two bits: no base candidate works.
        let q1 = Query::new(vec![0, 0], 2).unwrap();
        let q2 = Query::new(vec![1, 1], 2).unwrap();
        let err = decode_b(0, &[q1, q2], &[vec![0], vec![1]]).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
    }

    #[test]
    fn answers_are_single_bits() {
        let db = Database::zeros(3, 2);
        let q = Query::new(vec![0; 6], 2).unwrap();
        assert_eq!(answer_b(&q, &db), vec![0]);
    }

    #[test]
    fn bernoulli_tuple_matches_enumeration() {
        for (files, p) in [(2usize, 0.25), (3, 0.3), (4, 0.1), (3, 0.0), (4, 0.5)] {
            let tuple = bernoulli_tuple_b(files, p).unwrap();
            let scheme = SchemeB::bernoulli(files, p).unwrap();
            let measured = evaluate_tradeoff(&scheme).unwrap();
            assert!(
                tuple.approx_eq(&measured, 1e-9),
                "files={files} p={p}\nclosed {tuple:?}\nmeasured {measured:?}"
            );
        }
    }

    #[test]
    fn sphere_tuple_matches_enumeration() {
        for files in 2..=5 {
            for w in 0..=files {
                let tuple = sphere_tuple_b(files, w).unwrap();
                let scheme = SchemeB::sphere(files, w).unwrap();
                let measured = evaluate_tradeoff(&scheme).unwrap();
                assert!(
                    tuple.approx_eq(&measured, 1e-9),
                    "files={files} w={w}\nclosed {tuple:?}\nmeasured {measured:?}"
                );
            }
        }
    }

    #[test]
    fn bernoulli_tuple_frozen_values() {
        let t = bernoulli_tuple_b(2, 0.25).unwrap();
        assert!((t.rate - 0.5).abs() < 1e-15);
        assert!((t.upload - 3.5769902518432306).abs() < 1e-9);
        assert!((t.access - 1.5).abs() < 1e-12);
        assert!((t.rho_mi - 0.16593887700334964).abs() < 1e-9);
        assert!((t.rho_wil - 0.5310044064107188).abs() < 1e-9);
        assert!((t.rho_maxl - 0.5849625007211562).abs() < 1e-9);
        assert!((t.rho_epsp - 2.1972245773362196).abs() < 1e-9);

        let t = bernoulli_tuple_b(3, 0.3).unwrap();
        assert!((t.upload - 5.592427733916467).abs() < 1e-9);
        assert!((t.access - 2.2).abs() < 1e-9);
        assert!((t.rho_mi - 0.15234116926615515).abs() < 1e-9);
        assert!((t.rho_wil - 0.47677528619781384).abs() < 1e-9);
        assert!((t.rho_maxl - 0.7484612330040351).abs() < 1e-9);
        assert!((t.rho_epsp - 1.6945957207744073).abs() < 1e-9);
    }

    #[test]
    fn sphere_tuple_frozen_values() {
        let t = sphere_tuple_b(4, 1).unwrap();
        assert!((t.upload - 4.75).abs() < 1e-12);
        assert!((t.access - 2.5).abs() < 1e-12);
        assert!((t.rho_mi - 0.375).abs() < 1e-12);
        assert!((t.rho_wil - 1.0).abs() < 1e-12);
        assert!((t.rho_maxl - 0.8073549220576041).abs() < 1e-9);
        assert!(t.rho_epsp.is_infinite());

        let t = sphere_tuple_b(5, 2).unwrap();
        assert!((t.upload - 7.214806784229394).abs() < 1e-9);
        assert!((t.access - 4.2).abs() < 1e-12);
        assert!((t.rho_mi - 0.28547529722733445).abs() < 1e-9);
        assert!((t.rho_wil - 0.7369655941662061).abs() < 1e-9);
        assert!((t.rho_maxl - 0.5849625007211562).abs() < 1e-9);

        // Empty sphere: the flipped bit points straight at the target.
        let t = sphere_tuple_b(4, 0).unwrap();
        assert!((t.upload - 2.0).abs() < 1e-12);
        assert!((t.access - 1.0).abs() < 1e-12);
        assert!((t.rho_wil - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_balanced_point_is_private() {
        // files = 2, w = 1 is the perfectly private corner.
        let t = sphere_tuple_b(2, 1).unwrap();
        assert!(t.rho_mi.abs() < 1e-12);
        assert!(t.rho_wil.abs() < 1e-12);
        assert!(t.rho_maxl.abs() < 1e-12);
        assert_eq!(t.rho_epsp, 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(bernoulli_tuple_b(3, 0.7).is_err());
        assert!(sphere_tuple_b(3, 4).is_err());
        assert!(SchemeB::bernoulli(3, -0.2).is_err());
        assert!(SchemeB::sphere(2, 5).is_err());
    }
}
