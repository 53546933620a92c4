//! Small numeric helpers shared by the closed-form modules.

/// `x^k` with the `0^0 = 1` convention used by the weight-enumerator
/// formulas (exponent 0 always yields 1, even at `x = 0`).
pub(crate) fn powi0(x: f64, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        x.powi(k as i32)
    }
}

/// Binomial coefficient, exact in integer arithmetic before conversion.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(32, 16), 601080390.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(3, 5), 0.0);
    }

    #[test]
    fn zero_to_the_zero_is_one() {
        assert_eq!(powi0(0.0, 0), 1.0);
        assert_eq!(powi0(0.0, 2), 0.0);
        assert_eq!(powi0(0.5, 3), 0.125);
    }
}
