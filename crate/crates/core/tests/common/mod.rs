//! Brute-force reference implementations shared by the integration tests.
//! Written from the defining sums, without the library's helpers.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use zakpol::ComplexFrame;

pub fn cis(num: i128, den: i128) -> Complex64 {
    let r = num.rem_euclid(den);
    Complex64::from_polar(1.0, 2.0 * PI * r as f64 / den as f64)
}

pub fn random_frame(rng: &mut ChaCha8Rng, len: usize) -> ComplexFrame {
    let samples: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = samples.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    ComplexFrame::new(samples.into_iter().map(|v| v / norm).collect(), 1.0)
}

/// `sum_n y[n] conj(x[n - k]) exp(-j 2 pi l (n - k) / L)`.
pub fn ambiguity_point(y: &[Complex64], x: &[Complex64], k: i64, l: i64) -> Complex64 {
    let len = y.len() as i64;
    (0..len)
        .map(|n| {
            let m = (n - k).rem_euclid(len);
            y[n as usize] * x[m as usize].conj() * cis(-(l as i128) * m as i128, len as i128)
        })
        .sum()
}

/// Full `L x L` ambiguity, `[k][l]`.
pub fn ambiguity_grid(y: &[Complex64], x: &[Complex64]) -> Vec<Vec<Complex64>> {
    let len = y.len() as i64;
    (0..len)
        .map(|k| (0..len).map(|l| ambiguity_point(y, x, k, l)).collect())
        .collect()
}

/// `(a *s b)[k, l] = sum a[k1, l1] b[k - k1, l - l1] exp(j 2 pi l1 (k - k1) / L)`.
pub fn twisted(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let len = a.len() as i64;
    let mut out = vec![vec![Complex64::new(0.0, 0.0); len as usize]; len as usize];
    for k in 0..len {
        for l in 0..len {
            let mut acc = Complex64::new(0.0, 0.0);
            for k1 in 0..len {
                for l1 in 0..len {
                    let av = a[k1 as usize][l1 as usize];
                    if av.norm_sqr() == 0.0 {
                        continue;
                    }
                    let (k2, l2) = ((k - k1).rem_euclid(len), (l - l1).rem_euclid(len));
                    acc += av * b[k2 as usize][l2 as usize] * cis(l1 as i128 * k2 as i128, len as i128);
                }
            }
            out[k as usize][l as usize] = acc;
        }
    }
    out
}

/// `X[n] = L^{-1/2} sum_m x[m] exp(j 2 pi (A n^2 + B n m + C m^2) / L)`.
pub fn gdaft(x: &[Complex64], a: i128, b: i128, c: i128) -> Vec<Complex64> {
    let len = x.len() as i128;
    let s = 1.0 / (len as f64).sqrt();
    (0..len)
        .map(|n| {
            (0..len)
                .map(|m| x[m as usize] * cis(a * n * n + b * n * m + c * m * m, len))
                .sum::<Complex64>()
                * s
        })
        .collect()
}

/// Impulse train at `k0 + M d`, phases `exp(j 2 pi l0 d / N) / sqrt(N)`.
pub fn pulsone(m: usize, n: usize, k0: usize, l0: usize) -> Vec<Complex64> {
    let mut x = vec![Complex64::new(0.0, 0.0); m * n];
    for d in 0..n {
        x[k0 + m * d] = cis((l0 * d) as i128, n as i128) / (n as f64).sqrt();
    }
    x
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)
}
