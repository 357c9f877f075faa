//! Reference values computed independently of the library.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite input")
}

/// L^alpha_m(x) from the explicit series sum_k (-1)^k C(m + alpha, m - k) x^k / k!,
/// summed in exact rational arithmetic (alpha and x are taken at their binary values),
/// so the cancellation between terms costs nothing.
pub fn laguerre_series(alpha: f64, m: usize, x: f64) -> f64 {
    let (a, xr) = (exact(alpha), exact(x));
    let mut total = BigRational::zero();
    // term_k = (-1)^k C(m + alpha, m - k) x^k / k!
    for k in 0..=m {
        let mut binom = BigRational::one();
        for j in 1..=(m - k) {
            let jr = BigRational::from_integer(BigInt::from(j));
            let kr = BigRational::from_integer(BigInt::from(k));
            binom = binom * (a.clone() + kr + jr.clone()) / jr;
        }
        let mut pow = BigRational::one();
        let mut fact = BigInt::one();
        for j in 1..=k {
            pow *= xr.clone();
            fact *= BigInt::from(j);
        }
        let term = binom * pow / BigRational::from_integer(fact);
        if k % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_orders() {
        assert_eq!(laguerre_series(0.0, 0, 3.5), 1.0);
        assert_eq!(laguerre_series(0.0, 1, 3.5), -2.5);
        // L^1_2(x) = (x^2 - 6x + 6) / 2
        assert_eq!(laguerre_series(1.0, 2, 0.5), (0.25 - 3.0 + 6.0) / 2.0);
        // L^alpha_m(0) = C(m + alpha, m)
        assert_eq!(laguerre_series(1.0, 7, 0.0), 8.0);
    }
}
