//! Probability mass functions and entropy utilities.

use crate::error::{Error, Result};

/// Mass below this is treated as an exact zero inside entropy sums.
const ZERO_MASS: f64 = 1e-15;
/// Constructors renormalize inputs whose total mass is within this of 1.
const RENORM_TOL: f64 = 1e-6;
/// A valid [`Pmf`] sums to 1 within this tolerance.
const SUM_TOL: f64 = 1e-9;

/// A probability vector over a finite support indexed `0..len`.
///
/// Entries are nonnegative and sum to 1 within `1e-9`; constructors accept
/// inputs off by up to `1e-6` and renormalize them.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidPmf(format!("entry {p} out of [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > RENORM_TOL {
            return Err(Error::InvalidPmf(format!(
                "total mass {sum} too far from 1 to renormalize"
            )));
        }
        if sum != 1.0 {
            for p in &mut probs {
                *p /= sum;
            }
        }
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= SUM_TOL);
        Ok(Self { probs })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "uniform pmf needs a nonempty support");
        Self {
            probs: vec![1.0 / len as f64; len],
        }
    }

    /// All mass on state `at`.
    pub fn point_mass(len: usize, at: usize) -> Self {
        assert!(at < len, "point mass index out of range");
        let mut probs = vec![0.0; len];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// States with strictly positive mass.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
    }
}

impl std::ops::Index<usize> for Pmf {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

/// Shannon entropy in bits, with the `0 log 0 = 0` convention.
pub fn entropy(p: &Pmf) -> f64 {
    entropy_slice(p.probs())
}

/// Entropy of a raw nonnegative vector (callers guarantee it sums to ~1).
pub(crate) fn entropy_slice(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > ZERO_MASS {
            h -= p * p.log2();
        }
    }
    h
}

/// Binary entropy `H_b(p) = -p log2 p - (1-p) log2 (1-p)` in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("binary_entropy: p = {p} not in [0, 1]")));
    }
    Ok(entropy_slice(&[p, 1.0 - p]))
}

/// The unique `p` in `[0, 1/2]` with `H_b(p) = y`, by bisection to `1e-12`.
pub fn inv_binary_entropy(y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!(
            "inv_binary_entropy: y = {y} not in [0, 1]"
        )));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if entropy_slice(&[mid, 1.0 - mid]) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_basics() {
        assert!((entropy(&Pmf::uniform(2)) - 1.0).abs() < 1e-15);
        assert_eq!(entropy(&Pmf::point_mass(3, 1)), 0.0);
        let p = Pmf::new(vec![0.25, 0.75]).unwrap();
        assert!((entropy(&p) - 0.8112781244591328).abs() < 1e-12);
    }

    #[test]
    fn entropy_permutation_invariant_and_maximized_by_uniform() {
        let a = Pmf::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let b = Pmf::new(vec![0.4, 0.1, 0.3, 0.2]).unwrap();
        assert!((entropy(&a) - entropy(&b)).abs() < 1e-12);
        assert!(entropy(&a) < 2.0);
        assert!((entropy(&Pmf::uniform(4)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pmf_validation() {
        assert!(Pmf::new(vec![]).is_err());
        assert!(Pmf::new(vec![-0.1, 1.1]).is_err());
        assert!(Pmf::new(vec![0.5, 0.6]).is_err());
        // within 1e-6 of 1: renormalized
        let p = Pmf::new(vec![0.5, 0.5000004]).unwrap();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.25).unwrap() - 0.8112781244591328).abs() < 1e-12);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn inverse_binary_entropy_examples() {
        assert_eq!(inv_binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(inv_binary_entropy(1.0).unwrap(), 0.5);
        assert!((inv_binary_entropy(0.8112781244591328).unwrap() - 0.25).abs() < 1e-9);
        assert!(inv_binary_entropy(-0.1).is_err());
    }

    #[test]
    fn inverse_round_trips_on_grid() {
        let mut p = 0.0;
        while p <= 0.5 {
            let y = binary_entropy(p).unwrap();
            let back = inv_binary_entropy(y).unwrap();
            assert!(
                (back - p).abs() < 1e-9,
                "round trip failed at p = {p}: got {back}"
            );
            p += 1e-3;
        }
    }
}
