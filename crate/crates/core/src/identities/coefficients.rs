//! Exact scalar coefficients appearing in the commutation identity.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};

fn factorial(m: usize) -> BigInt {
    (1..=m).fold(BigInt::one(), |acc, x| acc * BigInt::from(x))
}

/// `f_{n,k,j}(r) = (r(n-k+r) - j) + (-1)^r j!(n-k-j+r)! / ((j+r-1)!(n-k-j)!)`,
/// exactly. Requires `k + j ≤ n` and `j + r ≥ 1` so that every factorial has a
/// nonnegative argument.
pub fn f_coeff(n: usize, k: usize, j: usize, r: usize) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if k + j > n {
        return Err(Error::InvalidParameter(format!(
            "(n-k-j)! undefined: n={n} k={k} j={j}"
        )));
    }
    if j + r == 0 {
        return Err(Error::InvalidParameter(
            "(j+r-1)! undefined at j = r = 0".into(),
        ));
    }
    let m = n - k - j;
    let polynomial = BigInt::from(r * (n - k + r)) - BigInt::from(j);
    let num = factorial(j) * factorial(m + r);
    let den = factorial(j + r - 1) * factorial(m);
    let ratio = BigRational::new(num, den);
    let signed = if r.is_multiple_of(2) { ratio } else { -ratio };
    Ok(BigRational::from_integer(polynomial) + signed)
}

/// `f_{n,k,j}(r)` as a float.
pub fn f_coeff_f64(n: usize, k: usize, j: usize, r: usize) -> Result<f64> {
    let f = f_coeff(n, k, j, r)?;
    f.to_f64()
        .ok_or_else(|| Error::InvalidParameter(format!("f({n},{k},{j},{r}) not representable")))
}

/// `a! / b!` for small arguments, with `1/m! = 0` for negative `m`
/// (reciprocal-gamma convention), returned as a float.
pub fn factorial_ratio(a: i64, b: i64) -> f64 {
    if a < 0 {
        // a! in the numerator never has a negative argument in the displays
        panic!("negative factorial in numerator: {a}");
    }
    if b < 0 {
        return 0.0;
    }
    let mut out = 1.0;
    if a >= b {
        for x in (b + 1)..=a {
            out *= x as f64;
        }
    } else {
        for x in (a + 1)..=b {
            out /= x as f64;
        }
    }
    out
}

/// `(-1)^e` for any integer exponent.
pub fn sign(e: i64) -> f64 {
    if e.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Admissible `(k, j)` pairs for complex dimension `n`: `k ≤ n`, `j ≤ n - k`.
pub fn admissible(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=n).flat_map(move |k| (0..=n - k).map(move |j| (k, j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn worked_value() {
        assert_eq!(
            f_coeff(3, 1, 0, 2).unwrap(),
            BigRational::from_integer(20.into())
        );
        assert_eq!(f_coeff_f64(3, 1, 0, 2).unwrap(), 20.0);
    }

    #[test]
    fn low_orders_vanish() {
        for n in 1..=6 {
            for (k, j) in admissible(n) {
                if j > 0 {
                    assert!(f_coeff(n, k, j, 0).unwrap().is_zero());
                }
                assert!(f_coeff(n, k, j, 1).unwrap().is_zero(), "n {n} k {k} j {j}");
            }
        }
    }

    #[test]
    fn out_of_range_parameters_are_errors() {
        assert!(f_coeff(2, 1, 0, 0).is_err());
        assert!(f_coeff(2, 2, 1, 3).is_err());
        assert!(f_coeff(0, 0, 0, 1).is_err());
    }

    #[test]
    fn factorial_ratio_conventions() {
        assert_eq!(factorial_ratio(4, 2), 12.0);
        assert_eq!(factorial_ratio(2, 4), 1.0 / 12.0);
        assert_eq!(factorial_ratio(3, -1), 0.0);
        assert_eq!(sign(-3), -1.0);
        assert_eq!(admissible(2).count(), 6);
    }
}
