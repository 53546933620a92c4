//! Converse bounds: what no scheme can beat at a given leakage level.
//!
//! Rate bounds come in a raw and a clamped flavor. The raw value is the
//! bound formula evaluated as-is; once it crosses 1 it says nothing beyond
//! the trivial `R <= 1`, which the `vacuous` flag records and the clamped
//! value enforces.

use crate::error::{Error, Result};
use crate::pmf::{binary_entropy, inv_binary_entropy};

/// An upper bound on achievable rate.
#[derive(Debug, Clone, Copy)]
pub struct RateBound {
    /// The bound formula evaluated verbatim (may exceed 1 or be infinite).
    pub raw: f64,
    /// `min(raw, 1)`, the usable bound.
    pub clamped: f64,
    /// True when the formula no longer improves on `R <= 1`.
    pub vacuous: bool,
}

impl RateBound {
    fn from_raw(raw: f64) -> Self {
        let vacuous = !(raw < 1.0);
        Self {
            raw,
            clamped: if vacuous { 1.0 } else { raw },
            vacuous,
        }
    }
}

/// A rate value that saturates at 1 outside its domain.
#[derive(Debug, Clone, Copy)]
pub struct CappedRate {
    pub rate: f64,
    /// True when the input lay beyond the formula's range and the rate was
    /// pinned to 1.
    pub clamped: bool,
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 0.0) {
        return Err(Error::Domain(format!("leakage {rho} must be >= 0")));
    }
    Ok(())
}

fn check_shape(files: usize, n: usize) -> Result<()> {
    if files < 2 || n < 2 {
        return Err(Error::Domain("need >=2 files and >=2 servers".into()));
    }
    Ok(())
}

/// Lower bound on the total variation an adversary can extract from
/// mutual-information leakage `rho` bits: `1 - 2 h^{-1}(1 - rho)`.
pub fn tv_bound_mi(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(1.0 - 2.0 * inv_binary_entropy((1.0 - rho).clamp(0.0, 1.0))?)
}

/// Total-variation bound from max-leakage `rho` bits: `2^rho - 1`.
pub fn tv_bound_maxl(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok((2f64).powf(rho) - 1.0)
}

/// Entropy difference achievable by changing a k-ary variable with
/// probability `delta`: `delta log2(k-1) + h(delta)`.
pub fn entropy_diff_bound(delta: f64, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain("need an alphabet of >=2 symbols".into()));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Domain(format!("delta {delta} outside [0, 1]")));
    }
    Ok(delta * ((k - 1) as f64).log2() + binary_entropy(delta)?)
}

/// Rate upper bound at mutual-information leakage `rho` bits per server.
pub fn r_ub_mi(files: usize, n: usize, rho: f64) -> Result<RateBound> {
    check_shape(files, n)?;
    check_rho(rho)?;
    let nf = n as f64;
    let hinv = inv_binary_entropy((1.0 - rho).clamp(0.0, 1.0))?;
    let mut denom = nf.powi(-((files - 1) as i32));
    for m in 1..files {
        denom += 2.0 * nf.powi(-((m - 1) as i32)) * hinv;
    }
    Ok(RateBound::from_raw(1.0 / denom))
}

/// Rate upper bound at max-leakage `rho` bits per server.
pub fn r_ub_maxl(files: usize, n: usize, rho: f64) -> Result<RateBound> {
    check_shape(files, n)?;
    check_rho(rho)?;
    let nf = n as f64;
    let mut denom = 1.0;
    for m in 1..files {
        denom += nf.powi(-(m as i32));
        denom -= ((2f64).powf(rho) - 1.0) * nf.powi(-((m - 1) as i32));
    }
    if denom <= 0.0 {
        return Ok(RateBound {
            raw: f64::INFINITY,
            clamped: 1.0,
            vacuous: true,
        });
    }
    Ok(RateBound::from_raw(1.0 / denom))
}

/// Exact two-file two-server capacity when one server's conditional query
/// distribution may carry `rho` bits of mutual information.
pub fn capacity_22_mi_oneleak(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(1.0 / (1.0 + inv_binary_entropy((1.0 - 2.0 * rho).clamp(0.0, 1.0))?))
}

/// Exact two-file two-server capacity under a max-leakage budget of `rho`
/// bits, valid for `rho <= log2(3/2)`; beyond that the rate is pinned at 1.
pub fn capacity_22_maxl(rho: f64) -> Result<CappedRate> {
    check_rho(rho)?;
    let limit = 1.5f64.log2();
    if rho > limit {
        return Ok(CappedRate {
            rate: 1.0,
            clamped: true,
        });
    }
    Ok(CappedRate {
        rate: 1.0 / (2.5 - (2f64).powf(rho)),
        clamped: false,
    })
}

/// Achievable rate of the leaky retrieval construction at likelihood-ratio
/// budget `rho` nats.
pub fn lpir_rate(files: usize, n: usize, rho: f64) -> Result<f64> {
    check_shape(files, n)?;
    check_rho(rho)?;
    let big = (n as f64).powi((files - 1) as i32);
    Ok(1.0 / (1.0 + (big - 1.0) / ((n - 1) as f64 * rho.exp() + big - 1.0)))
}

/// Rate upper bound at likelihood-ratio budget `rho` nats.
pub fn lpir_ub(files: usize, n: usize, rho: f64) -> Result<f64> {
    check_shape(files, n)?;
    check_rho(rho)?;
    let t = 1.0 / (n as f64 * rho.exp());
    Ok((1.0 - t) / (1.0 - t.powi(files as i32)))
}
