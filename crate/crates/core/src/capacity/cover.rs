//! Cover's function-counting theorem: closed-form separability probability
//! for `n` points in general position in `d` dimensions.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Number of homogeneously separable dichotomies of `n` points in general
/// position in `d` dimensions: `C(n, d) = 2 Σ_{k<d} binom(n-1, k)`.
pub fn cover_count(n: u64, d: u64) -> BigUint {
    let mut sum = BigUint::zero();
    let mut binom = BigUint::one();
    for k in 0..d.min(n) {
        sum += &binom;
        // binom(n-1, k+1) = binom(n-1, k) * (n-1-k) / (k+1), exact in integers.
        binom = binom * BigUint::from(n - 1 - k) / BigUint::from(k + 1);
    }
    sum * 2u32
}

/// `C(n, d) / 2^n`, the probability that a uniformly random dichotomy is
/// linearly separable. Exactly 1 for `d >= n`.
pub fn cover_probability(n: u64, d: u64) -> f64 {
    assert!(
        n >= 1 && d >= 1,
        "cover_probability needs n >= 1 and d >= 1"
    );
    if d >= n {
        return 1.0;
    }
    let count = cover_count(n, d);
    // Shift into f64 range before dividing by 2^n.
    let bits = count.bits();
    let shift = bits.saturating_sub(64);
    let mantissa = (&count >> shift).to_f64().expect("fits in 64 bits");
    let exp = shift as i32 - n as i32;
    // Two half steps so partial underflow of 2^exp does not zero the result.
    mantissa * 2f64.powi(exp / 2) * 2f64.powi(exp - exp / 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures() {
        assert_eq!(cover_probability(4, 2), 0.5);
        assert_eq!(cover_probability(5, 3), 0.6875);
        assert_eq!(cover_probability(3, 2), 0.75);
        assert_eq!(cover_probability(7, 7), 1.0);
        assert_eq!(cover_probability(3, 9), 1.0);
        assert_eq!(cover_count(4, 2), BigUint::from(8u32));
    }

    #[test]
    fn odd_n_crosses_half_at_midpoint() {
        // binom(59, k) is symmetric about 29.5, so C(60, 30) = 2^59.
        assert_eq!(cover_probability(60, 30), 0.5);
        assert!(cover_probability(60, 29) < 0.5);
        assert!(cover_probability(60, 31) > 0.5);
    }

    #[test]
    fn large_n_stays_finite() {
        let p = cover_probability(2000, 1000);
        assert!((p - 0.5).abs() < 0.02, "{p}");
        assert!(cover_probability(2000, 10) < 1e-300);
        assert!(cover_probability(1060, 1) > 0.0);
    }

    #[test]
    fn matches_float_recurrence_for_small_n() {
        // Independent route: binomial sum in f64 (exact for small n).
        for n in 1..=30u64 {
            for d in 1..=n {
                let mut sum = 0.0;
                let mut b = 1.0f64;
                for k in 0..d {
                    sum += b;
                    b = b * (n - 1 - k) as f64 / (k + 1) as f64;
                }
                let expected = (2.0 * sum / 2f64.powi(n as i32)).min(1.0);
                let got = cover_probability(n, d);
                assert!(
                    (got - expected).abs() < 1e-12,
                    "n={n} d={d}: {got} vs {expected}"
                );
            }
        }
    }
}
