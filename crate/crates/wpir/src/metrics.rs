//! Exact leakage and cost metrics.
//!
//! All metrics assume the requested index is uniform. Information-style
//! metrics are computed from a [`CondQueryDist`]; cost metrics need the
//! scheme's length/access functions as well.

use crate::dist::CondQueryDist;
use crate::error::Result;
use crate::pmf::{entropy_slice, Pmf};
use crate::scheme::{cond_query_dist, Scheme, TradeoffPoint};

/// Probabilities at or below this are exact zeros for support questions.
const ZERO: f64 = 1e-15;

fn clamp_nonneg(x: f64) -> f64 {
    // tiny negatives are numerical noise on an exactly-zero quantity
    if x < 0.0 && x > -1e-9 {
        0.0
    } else {
        x
    }
}

/// `I(M; Q_l)` in bits for each server, uniform requests.
pub fn per_server_mi(d: &CondQueryDist) -> Vec<f64> {
    let files = d.files() as f64;
    d.servers
        .iter()
        .map(|s| {
            let marginal: Vec<f64> = (0..s.support.len())
                .map(|k| s.rows.iter().map(|row| row[k]).sum::<f64>() / files)
                .collect();
            let h_q = entropy_slice(&marginal);
            let h_q_given_m =
                s.rows.iter().map(|row| entropy_slice(row)).sum::<f64>() / files;
            clamp_nonneg(h_q - h_q_given_m)
        })
        .collect()
}

/// Average over servers of `I(M; Q_l)`, in bits.
pub fn mi_leakage(d: &CondQueryDist) -> f64 {
    per_server_mi(d).iter().sum::<f64>() / d.n() as f64
}

/// Worst-case information leakage: `max_l [log2 M - min_q H(M | Q_l = q)]`
/// with the min over queries of positive marginal probability.
pub fn wil_leakage(d: &CondQueryDist) -> f64 {
    let files = d.files();
    let log_m = (files as f64).log2();
    let mut worst = 0.0_f64;
    for s in &d.servers {
        let mut min_posterior_h = f64::INFINITY;
        for k in 0..s.support.len() {
            let pq: f64 = s.rows.iter().map(|row| row[k]).sum::<f64>() / files as f64;
            if pq <= ZERO {
                continue;
            }
            let posterior: Vec<f64> = s
                .rows
                .iter()
                .map(|row| row[k] / (files as f64 * pq))
                .collect();
            min_posterior_h = min_posterior_h.min(entropy_slice(&posterior));
        }
        worst = worst.max(clamp_nonneg(log_m - min_posterior_h));
    }
    worst
}

/// Maximal leakage: `max_l log2 sum_q max_m P(q | m)`, in bits.
pub fn maxl_leakage(d: &CondQueryDist) -> f64 {
    d.servers
        .iter()
        .map(|s| {
            let sum: f64 = (0..s.support.len())
                .map(|k| {
                    s.rows
                        .iter()
                        .map(|row| row[k])
                        .fold(0.0_f64, f64::max)
                })
                .sum();
            clamp_nonneg(sum.log2())
        })
        .fold(0.0_f64, f64::max)
}

/// Likelihood-ratio leakage in nats:
/// `max_l max_q ln [ max_{m,m'} P(q|m) / P(q|m') ]`, with
/// `f64::INFINITY` when some query rules out a file entirely.
pub fn epsp_leakage(d: &CondQueryDist) -> f64 {
    let mut worst = 0.0_f64;
    for s in &d.servers {
        for k in 0..s.support.len() {
            let mut mx = 0.0_f64;
            let mut mn = f64::INFINITY;
            for row in &s.rows {
                mx = mx.max(row[k]);
                mn = mn.min(row[k]);
            }
            if mx <= ZERO {
                continue; // never sent; not part of any server's support
            }
            if mn <= ZERO {
                return f64::INFINITY;
            }
            worst = worst.max((mx / mn).ln());
        }
    }
    worst
}

/// Expected downloaded bits per round, uniform requests.
pub fn download_cost(scheme: &dyn Scheme) -> Result<f64> {
    let d = cond_query_dist(scheme)?;
    Ok(download_from_dist(scheme, &d))
}

fn download_from_dist(scheme: &dyn Scheme, d: &CondQueryDist) -> f64 {
    let files = d.files() as f64;
    d.servers
        .iter()
        .map(|s| {
            (0..s.support.len())
                .map(|k| {
                    let pq: f64 = s.rows.iter().map(|row| row[k]).sum::<f64>() / files;
                    pq * scheme.answer_len(&s.support[k]) as f64
                })
                .sum::<f64>()
        })
        .sum()
}

/// Download rate: file bits over expected downloaded bits.
pub fn rate(scheme: &dyn Scheme) -> Result<f64> {
    Ok(scheme.beta() as f64 / download_cost(scheme)?)
}

/// Sum over servers of the query entropy `H(Q_l)`, in bits.
pub fn upload_cost(d: &CondQueryDist) -> f64 {
    let p_m = Pmf::uniform(d.files());
    d.servers
        .iter()
        .map(|s| {
            let marginal = s.marginal(&p_m).expect("valid dist");
            entropy_slice(marginal.probs())
        })
        .sum()
}

/// Expected stored symbols touched per round across all servers.
pub fn access_complexity(scheme: &dyn Scheme) -> Result<f64> {
    let d = cond_query_dist(scheme)?;
    Ok(access_from_dist(scheme, &d))
}

fn access_from_dist(scheme: &dyn Scheme, d: &CondQueryDist) -> f64 {
    let files = d.files() as f64;
    d.servers
        .iter()
        .map(|s| {
            (0..s.support.len())
                .map(|k| {
                    let pq: f64 = s.rows.iter().map(|row| row[k]).sum::<f64>() / files;
                    pq * scheme.access_count(&s.support[k]) as f64
                })
                .sum::<f64>()
        })
        .sum()
}

/// Full profile of a scheme by exact enumeration of its strategy support.
pub fn evaluate_tradeoff(scheme: &dyn Scheme) -> Result<TradeoffPoint> {
    let d = cond_query_dist(scheme)?;
    let download = download_from_dist(scheme, &d);
    Ok(TradeoffPoint {
        rate: scheme.beta() as f64 / download,
        upload: upload_cost(&d),
        access: access_from_dist(scheme, &d),
        rho_mi: mi_leakage(&d),
        rho_wil: wil_leakage(&d),
        rho_maxl: maxl_leakage(&d),
        rho_epsp: epsp_leakage(&d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ServerDist;
    use crate::query::Query;

    fn q(bits: &[u8]) -> Query {
        Query::new(bits.to_vec(), 2).unwrap()
    }

    /// Hand-built two-server distribution: server 0 reveals nothing,
    /// server 1 sends a distinct deterministic query per file.
    fn revealing_dist() -> CondQueryDist {
        let hide = ServerDist::new(
            vec![q(&[0]), q(&[1])],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        let tell = ServerDist::new(
            vec![q(&[0]), q(&[1])],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        CondQueryDist::new(vec![hide, tell]).unwrap()
    }

    #[test]
    fn deterministic_distinct_queries_leak_everything() {
        let d = revealing_dist();
        assert!((mi_leakage(&d) - 0.5).abs() < 1e-12); // (0 + 1)/2
        assert!((wil_leakage(&d) - 1.0).abs() < 1e-12);
        assert!((maxl_leakage(&d) - 1.0).abs() < 1e-12); // log2(1+1)
        assert_eq!(epsp_leakage(&d), f64::INFINITY);
    }

    #[test]
    fn uniform_rows_leak_nothing() {
        let s = ServerDist::new(
            vec![q(&[0]), q(&[1])],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        let d = CondQueryDist::new(vec![s]).unwrap();
        assert!(mi_leakage(&d).abs() < 1e-12);
        assert!(wil_leakage(&d).abs() < 1e-12);
        assert!(maxl_leakage(&d).abs() < 1e-12);
        assert_eq!(epsp_leakage(&d), 0.0);
    }

    #[test]
    fn mi_and_maxl_are_convex_in_the_conditional() {
        // random pairs on a shared 4-query support, 3 files
        let mut rng = crate::rng::SplitMix64::new(0xC0FFEE);
        let support: Vec<Query> = (0..4u8).map(|i| q(&[i >> 1, i & 1])).collect();
        let random_rows = |rng: &mut crate::rng::SplitMix64| -> Vec<Vec<f64>> {
            (0..3)
                .map(|_| {
                    let raw: Vec<f64> = (0..4).map(|_| rng.next_f64() + 1e-3).collect();
                    let s: f64 = raw.iter().sum();
                    raw.into_iter().map(|x| x / s).collect()
                })
                .collect()
        };
        for _ in 0..50 {
            let r1 = random_rows(&mut rng);
            let r2 = random_rows(&mut rng);
            for lambda in [0.25, 0.5, 0.75] {
                let mix: Vec<Vec<f64>> = r1
                    .iter()
                    .zip(&r2)
                    .map(|(a, b)| {
                        a.iter()
                            .zip(b)
                            .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
                            .collect()
                    })
                    .collect();
                let dist = |rows: &Vec<Vec<f64>>| {
                    CondQueryDist::new(vec![ServerDist::new(
                        support.clone(),
                        rows.clone(),
                    )
                    .unwrap()])
                    .unwrap()
                };
                let (d1, d2, dm) = (dist(&r1), dist(&r2), dist(&mix));
                let chord_mi = lambda * mi_leakage(&d1) + (1.0 - lambda) * mi_leakage(&d2);
                assert!(mi_leakage(&dm) <= chord_mi + 1e-9);
                let chord_ml = lambda * 2f64.powf(maxl_leakage(&d1))
                    + (1.0 - lambda) * 2f64.powf(maxl_leakage(&d2));
                assert!(2f64.powf(maxl_leakage(&dm)) <= chord_ml + 1e-9);
            }
        }
    }
}
