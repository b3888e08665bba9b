//! Small number-theoretic helpers for the closed-form spread carrier:
//! modular inverse, Jacobi symbol and the Gauss-sum phase factor.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}

/// Inverse of `a` modulo `n`, returned in `[1, n)`.
///
/// Uses the extended Euclidean algorithm; `a` may be negative or larger
/// than `n`.
pub fn mod_inverse(a: i64, n: i64) -> Result<i64> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("modulus {n} must be at least 2")));
    }
    let (mut old_r, mut r) = (a.rem_euclid(n), n);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(Error::NotCoprime { a, n, gcd: old_r });
    }
    Ok(old_s.rem_euclid(n))
}

/// Jacobi symbol `(a / n)` for odd positive `n`.
pub fn jacobi_symbol(a: i64, n: i64) -> Result<i8> {
    if n <= 0 || n % 2 == 0 {
        return Err(Error::EvenModulus(n));
    }
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut sign = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            // (2/n) = -1 iff n = 3, 5 mod 8
            if matches!(n % 8, 3 | 5) {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        // reciprocity flips the sign when both are 3 mod 4
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    Ok(if n == 1 { sign } else { 0 })
}

/// Gauss-sum phase: 1 when `n = 1 (mod 4)`, `j` when `n = 3 (mod 4)`.
pub fn epsilon(n: i64) -> Result<Complex64> {
    if n <= 0 || n % 2 == 0 {
        return Err(Error::EvenModulus(n));
    }
    Ok(if n % 4 == 1 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, 1.0)
    })
}
