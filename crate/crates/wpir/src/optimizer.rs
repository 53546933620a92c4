//! Leakage minimization over time-shared additive strategies.
//!
//! The design space is a distribution `z` over the `n^(files-1)` shared
//! vectors of the additive scheme, time-shared so every server sees the same
//! conditional query distribution. Download fixes a floor on the all-zero
//! mass: `D(z) = n - z[0]`, so a budget `D` translates to the truncated
//! simplex `{z >= 0, sum z = 1, z[0] >= n - D}`. Both leakage objectives are
//! convex over that set and are minimized with Frank-Wolfe; the reported
//! `gap` is a duality certificate, so `objective(z) - gap` lower-bounds the
//! true optimum.

use crate::error::{Error, Result};
use crate::pmf::entropy_slice;
use crate::scheme::ENUMERATION_CAP;
use crate::scheme_a::strategy_states;

const LOG_FLOOR: f64 = 1e-12;
const STOP_GAP: f64 = 1e-7;
const MAX_ITERS: usize = 200_000;
const STAGE_ITERS: usize = 10_000;
/// Softmax temperatures for the annealed smoothing stages of the max-leakage
/// objective; the exact objective is re-evaluated and certified afterwards.
const ANNEAL: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Which leakage metric to minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeakageObjective {
    MutualInformation,
    MaxLeakage,
}

/// A download-constrained leakage minimization instance.
#[derive(Debug, Clone, Copy)]
pub struct OptProblem {
    pub files: usize,
    pub n: usize,
    pub download: f64,
}

impl OptProblem {
    pub fn new(files: usize, n: usize, download: f64) -> Result<Self> {
        if files < 2 || n < 2 {
            return Err(Error::Domain("need >=2 files and >=2 servers".into()));
        }
        if !download.is_finite() || download <= 0.0 {
            return Err(Error::Domain(format!("download budget {download} invalid")));
        }
        let states = strategy_states(files, n)?;
        let full = states.checked_mul(n).unwrap_or(usize::MAX);
        if full > ENUMERATION_CAP {
            return Err(Error::EnumerationCap {
                states: full,
                cap: ENUMERATION_CAP,
            });
        }
        Ok(Self { files, n, download })
    }

    pub fn states(&self) -> usize {
        strategy_states(self.files, self.n).expect("validated in new")
    }

    /// Minimum mass the budget forces onto the all-zero vector, in `[0, 1]`.
    pub fn floor_mass(&self) -> Result<f64> {
        let c = self.n as f64 - self.download;
        if c > 1.0 + 1e-12 {
            return Err(Error::Infeasible {
                budget: self.download,
                min: (self.n - 1) as f64,
            });
        }
        Ok(c.clamp(0.0, 1.0))
    }
}

/// Outcome of a Frank-Wolfe run.
#[derive(Debug, Clone)]
pub struct OptResult {
    pub z: Vec<f64>,
    /// Leakage at `z` in bits.
    pub rho: f64,
    /// Certified duality gap in bits: `rho - gap` lower-bounds the optimum.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// One point of a rate/leakage tradeoff sweep.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub download: f64,
    pub rate: f64,
    pub result: OptResult,
}

/// Index of the full vector obtained by inserting digit `v` at position `m`
/// of the length-`files-1` vector with index `s` (base-`n`, LSB first).
fn insert_digit(s: usize, m: usize, v: usize, pow: &[usize]) -> usize {
    let low = s % pow[m];
    let high = s / pow[m];
    low + v * pow[m] + high * pow[m + 1]
}

/// Index of the reduced vector obtained by deleting position `m` of the
/// length-`files` vector with index `q`.
fn delete_digit(q: usize, m: usize, pow: &[usize]) -> usize {
    let low = q % pow[m];
    let high = q / pow[m + 1];
    low + high * pow[m]
}

fn powers(files: usize, n: usize) -> Vec<usize> {
    let mut pow = Vec::with_capacity(files + 1);
    pow.push(1);
    for _ in 0..files {
        pow.push(pow.last().unwrap() * n);
    }
    pow
}

/// Accumulates `w[q] = sum_m z[q minus m]` over all full vectors `q`.
fn full_weights(files: usize, n: usize, z: &[f64], pow: &[usize]) -> Vec<f64> {
    let mut w = vec![0.0; pow[files]];
    for s in 0..z.len() {
        if z[s] == 0.0 {
            // Still contributes zero; skip the insertions.
            continue;
        }
        for m in 0..files {
            for v in 0..n {
                w[insert_digit(s, m, v, pow)] += z[s];
            }
        }
    }
    w
}

/// Average per-server mutual information, in bits, of the time-shared
/// additive scheme with strategy `z`.
pub fn mi_objective(files: usize, n: usize, z: &[f64]) -> f64 {
    let pow = powers(files, n);
    let w = full_weights(files, n, z, &pow);
    let mf = files as f64;
    let mut acc = 0.0;
    for &wq in &w {
        let x = wq / mf;
        if x > 0.0 {
            acc -= x * x.log2();
        }
    }
    acc / n as f64 - entropy_slice(z)
}

/// Gradient of [`mi_objective`] with logs clamped away from zero.
pub fn mi_gradient(files: usize, n: usize, z: &[f64]) -> Vec<f64> {
    let pow = powers(files, n);
    let w = full_weights(files, n, z, &pow);
    let mf = files as f64;
    let inv_ln2 = std::f64::consts::LOG2_E;
    let term: Vec<f64> = w
        .iter()
        .map(|&wq| (wq / mf).max(LOG_FLOOR).log2() + inv_ln2)
        .collect();
    let mut grad = vec![0.0; z.len()];
    let scale = 1.0 / (n as f64 * mf);
    for (s, g) in grad.iter_mut().enumerate() {
        let mut acc = 0.0;
        for m in 0..files {
            for v in 0..n {
                acc += term[insert_digit(s, m, v, &pow)];
            }
        }
        *g = -scale * acc + z[s].max(LOG_FLOOR).log2() + inv_ln2;
    }
    grad
}

/// Linear-scale max-leakage objective `sum_q max_m z[q minus m] / n`; the
/// leakage in bits is its base-2 log.
pub fn maxl_objective(files: usize, n: usize, z: &[f64]) -> f64 {
    let pow = powers(files, n);
    let mut acc = 0.0;
    for q in 0..pow[files] {
        let mut best = f64::NEG_INFINITY;
        for m in 0..files {
            best = best.max(z[delete_digit(q, m, &pow)]);
        }
        acc += best;
    }
    acc / n as f64
}

/// Subgradient of [`maxl_objective`]; ties between maximizing positions go
/// to the lowest index.
pub fn maxl_subgradient(files: usize, n: usize, z: &[f64]) -> Vec<f64> {
    let pow = powers(files, n);
    let mut grad = vec![0.0; z.len()];
    let share = 1.0 / n as f64;
    for q in 0..pow[files] {
        let mut best_s = delete_digit(q, 0, &pow);
        let mut best = z[best_s];
        for m in 1..files {
            let s = delete_digit(q, m, &pow);
            if z[s] > best {
                best = z[s];
                best_s = s;
            }
        }
        grad[best_s] += share;
    }
    grad
}

/// Smoothed max-leakage objective and gradient at softmax temperature `tau`
/// (natural-log scale), used by the annealing stages.
fn maxl_smoothed(files: usize, n: usize, z: &[f64], tau: f64, pow: &[usize]) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; z.len()];
    let share = 1.0 / n as f64;
    let mut idx = vec![0usize; files];
    for q in 0..pow[files] {
        let mut mx = f64::NEG_INFINITY;
        for (m, slot) in idx.iter_mut().enumerate() {
            *slot = delete_digit(q, m, pow);
            mx = mx.max(z[*slot]);
        }
        let mut denom = 0.0;
        for &s in idx.iter() {
            denom += ((z[s] - mx) / tau).exp();
        }
        value += mx + tau * denom.ln();
        for &s in idx.iter() {
            grad[s] += share * ((z[s] - mx) / tau).exp() / denom;
        }
    }
    (value * share, grad)
}

/// Linear minimization oracle over the truncated simplex: the best vertex
/// `c e_0 + (1-c) e_j`, ties to the lowest index.
pub fn lmo(grad: &[f64], floor: f64) -> Vec<f64> {
    let g0 = grad[0];
    let mut best_j = 0usize;
    let mut best = f64::INFINITY;
    for (j, &g) in grad.iter().enumerate() {
        let v = floor * g0 + (1.0 - floor) * g;
        if v < best - 1e-18 {
            best = v;
            best_j = j;
        }
    }
    let mut z = vec![0.0; grad.len()];
    z[0] += floor;
    z[best_j] += 1.0 - floor;
    z
}

fn fw_gap(grad: &[f64], z: &[f64], vertex: &[f64]) -> f64 {
    grad.iter()
        .zip(z.iter().zip(vertex))
        .map(|(g, (a, b))| g * (a - b))
        .sum()
}

fn fw_step(z: &mut [f64], vertex: &[f64], k: usize) {
    let gamma = 2.0 / (k + 2) as f64;
    for (a, b) in z.iter_mut().zip(vertex) {
        *a += gamma * (b - *a);
    }
}

/// Minimizes the chosen leakage objective under the download budget.
pub fn minimize_leakage(problem: &OptProblem, objective: LeakageObjective) -> Result<OptResult> {
    let floor = problem.floor_mass()?;
    let states = problem.states();
    let files = problem.files;
    let n = problem.n;
    let pow = powers(files, n);

    // Feasible start: the floor plus uniform leftover mass.
    let mut z: Vec<f64> = vec![(1.0 - floor) / states as f64; states];
    z[0] += floor;

    let mut iterations = 0usize;
    let mut gap = f64::INFINITY;

    match objective {
        LeakageObjective::MutualInformation => {
            for k in 0..MAX_ITERS {
                let grad = mi_gradient(files, n, &z);
                let vertex = lmo(&grad, floor);
                gap = fw_gap(&grad, &z, &vertex);
                iterations = k + 1;
                if gap <= STOP_GAP {
                    break;
                }
                fw_step(&mut z, &vertex, k);
            }
            let rho = mi_objective(files, n, &z).max(0.0);
            Ok(OptResult {
                z,
                rho,
                gap,
                iterations,
                converged: gap <= STOP_GAP,
            })
        }
        LeakageObjective::MaxLeakage => {
            // Annealed smoothing stages share one step counter so a new
            // stage refines the previous one instead of restarting. Each
            // stage stops once its smoothed gap falls under the stage
            // temperature.
            let mut step = 0usize;
            for &tau in ANNEAL.iter() {
                for _ in 0..STAGE_ITERS {
                    let (_, grad) = maxl_smoothed(files, n, &z, tau, &pow);
                    let vertex = lmo(&grad, floor);
                    let g = fw_gap(&grad, &z, &vertex);
                    iterations += 1;
                    if g <= tau.max(STOP_GAP) {
                        break;
                    }
                    fw_step(&mut z, &vertex, step);
                    step += 1;
                }
            }
            // Exact re-evaluation at the annealed point. Two valid bounds
            // on the linear-domain suboptimality: the exact subgradient
            // gap, and the smoothed gap plus the smoothing slack
            // (tau * ln(files) per query term). Certify the smaller one,
            // converted to bits.
            let tau = *ANNEAL.last().unwrap();
            let slack = pow[files] as f64 / n as f64 * tau * (files as f64).ln();
            let (_, grad_sm) = maxl_smoothed(files, n, &z, tau, &pow);
            let v_sm = lmo(&grad_sm, floor);
            let cert_sm = fw_gap(&grad_sm, &z, &v_sm) + slack;
            let grad_ex = maxl_subgradient(files, n, &z);
            let v_ex = lmo(&grad_ex, floor);
            let cert_ex = fw_gap(&grad_ex, &z, &v_ex);
            let value = maxl_objective(files, n, &z);
            let linear_gap = cert_ex.min(cert_sm).max(0.0);
            gap = if linear_gap < value {
                (value / (value - linear_gap)).log2()
            } else {
                f64::INFINITY
            };
            let rho = value.log2().max(0.0);
            Ok(OptResult {
                z,
                rho,
                gap,
                iterations,
                converged: gap <= STOP_GAP,
            })
        }
    }
}

/// Sweeps the optimizer across download budgets. The reported rate uses the
/// effective download `n - floor`, which matches the budget whenever the
/// budget is attainable.
pub fn rate_leakage_curve(
    files: usize,
    n: usize,
    budgets: &[f64],
    objective: LeakageObjective,
) -> Result<Vec<CurvePoint>> {
    budgets
        .iter()
        .map(|&download| {
            let problem = OptProblem::new(files, n, download)?;
            let floor = problem.floor_mass()?;
            let result = minimize_leakage(&problem, objective)?;
            Ok(CurvePoint {
                download,
                rate: (n - 1) as f64 / (n as f64 - floor),
                result,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{maxl_leakage, mi_leakage};
    use crate::pmf::Pmf;
    use crate::rng::SplitMix64;
    use crate::wrappers::timeshare_dist_a;

    fn random_simplex(states: usize, rng: &mut SplitMix64) -> Vec<f64> {
        let mut v: Vec<f64> = (0..states).map(|_| rng.next_f64() + 1e-3).collect();
        let sum: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= sum);
        v
    }

    #[test]
    fn mi_objective_matches_dist_enumeration() {
        let mut rng = SplitMix64::new(41);
        for (files, n) in [(3usize, 2usize), (2, 3)] {
            let states = strategy_states(files, n).unwrap();
            for _ in 0..20 {
                let z = random_simplex(states, &mut rng);
                let direct = mi_objective(files, n, &z);
                let dist = timeshare_dist_a(files, n, &Pmf::new(z).unwrap()).unwrap();
                assert!((direct - mi_leakage(&dist)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn maxl_objective_matches_dist_enumeration() {
        let mut rng = SplitMix64::new(43);
        for (files, n) in [(3usize, 2usize), (2, 3)] {
            let states = strategy_states(files, n).unwrap();
            for _ in 0..20 {
                let z = random_simplex(states, &mut rng);
                let direct = maxl_objective(files, n, &z).log2();
                let dist = timeshare_dist_a(files, n, &Pmf::new(z).unwrap()).unwrap();
                assert!((direct - maxl_leakage(&dist)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let files = 3;
        let n = 2;
        let z = vec![0.4, 0.3, 0.2, 0.1];
        let grad = mi_gradient(files, n, &z);
        let eps = 1e-6;
        for s in 0..z.len() {
            let mut hi = z.clone();
            hi[s] += eps;
            let mut lo = z.clone();
            lo[s] -= eps;
            let fd = (mi_objective(files, n, &hi) - mi_objective(files, n, &lo)) / (2.0 * eps);
            assert!(
                (grad[s] - fd).abs() < 1e-5,
                "coordinate {s}: analytic {} vs fd {fd}",
                grad[s]
            );
        }
    }

    #[test]
    fn two_by_two_anchors() {
        for (d, want_mi, want_maxl) in [
            (1.0, 0.5, 0.5849625007211562),
            (1.25, 0.09436093777043358, 0.32192809488736235),
            (1.5, 0.0, 0.0),
        ] {
            let problem = OptProblem::new(2, 2, d).unwrap();
            let mi = minimize_leakage(&problem, LeakageObjective::MutualInformation).unwrap();
            assert!(mi.converged, "MI at D={d} did not converge");
            assert!(mi.gap <= 1e-6);
            assert!(
                (mi.rho - want_mi).abs() < 1e-6,
                "D={d}: mi {} want {want_mi}",
                mi.rho
            );
            let ml = minimize_leakage(&problem, LeakageObjective::MaxLeakage).unwrap();
            assert!(ml.converged, "MaxL at D={d} did not converge");
            assert!(ml.gap <= 1e-6);
            assert!(
                (ml.rho - want_maxl).abs() < 1e-6,
                "D={d}: maxl {} want {want_maxl}",
                ml.rho
            );
        }
    }

    #[test]
    fn loose_budget_reaches_zero_leakage() {
        let problem = OptProblem::new(2, 2, 1.75).unwrap();
        let mi = minimize_leakage(&problem, LeakageObjective::MutualInformation).unwrap();
        assert!(mi.rho < 1e-6, "mi {}", mi.rho);
        let ml = minimize_leakage(&problem, LeakageObjective::MaxLeakage).unwrap();
        assert!(ml.rho < 1e-6, "maxl {}", ml.rho);
    }

    #[test]
    fn infeasible_budget_is_rejected() {
        let problem = OptProblem::new(2, 2, 0.9).unwrap();
        let err = problem.floor_mass().unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
        assert!(minimize_leakage(&problem, LeakageObjective::MutualInformation).is_err());
    }

    #[test]
    fn curve_is_monotone() {
        let budgets = [1.0, 1.125, 1.25, 1.375, 1.5];
        let curve =
            rate_leakage_curve(2, 2, &budgets, LeakageObjective::MaxLeakage).unwrap();
        for pair in curve.windows(2) {
            assert!(pair[1].result.rho <= pair[0].result.rho + 1e-9);
            assert!(pair[1].rate <= pair[0].rate + 1e-12);
        }
        assert!((curve[0].rate - 1.0).abs() < 1e-12);
        assert!((curve[4].rate - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn three_file_solve_stays_certified() {
        let problem = OptProblem::new(3, 2, 1.3).unwrap();
        let mi = minimize_leakage(&problem, LeakageObjective::MutualInformation).unwrap();
        assert!(mi.rho >= 0.0 && mi.gap < 1e-3);
        let ml = minimize_leakage(&problem, LeakageObjective::MaxLeakage).unwrap();
        // Hand-solved optimum: z = (0.7, 0.1, 0.1, 0.1) gives
        // 2^rho = (4*0.7 + 4*0.1) / 2 = 1.6.
        let best = 1.6f64.log2();
        assert!((ml.rho - best).abs() < 1e-3, "rho {}", ml.rho);
        assert!(ml.gap >= 0.0 && ml.gap < 1e-2);
        // Certificates really lower-bound: leakage at a feasible point
        // cannot fall below rho - gap.
        let z_alt = vec![0.7, 0.1, 0.1, 0.1];
        assert!(mi_objective(3, 2, &z_alt) >= mi.rho - mi.gap - 1e-9);
        assert!(best >= ml.rho - ml.gap - 1e-9);
    }
}
