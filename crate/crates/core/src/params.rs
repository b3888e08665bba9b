//! Grid geometry and chirp-transform coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::gcd;

/// Delay-Doppler grid geometry: `m` delay bins and `n` Doppler bins per
/// period, with delay period `delay_period` (s) and Doppler period
/// `doppler_period` (Hz) whose product is one.
///
/// Bandwidth and frame duration are always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawZakParams", into = "RawZakParams")]
pub struct ZakParams {
    m: usize,
    n: usize,
    delay_period: f64,
    doppler_period: f64,
}

#[derive(Serialize, Deserialize)]
struct RawZakParams {
    m: usize,
    n: usize,
    delay_period_s: f64,
    doppler_period_hz: f64,
}

impl TryFrom<RawZakParams> for ZakParams {
    type Error = Error;
    fn try_from(raw: RawZakParams) -> Result<Self> {
        ZakParams::new(raw.m, raw.n, raw.delay_period_s, raw.doppler_period_hz)
    }
}

impl From<ZakParams> for RawZakParams {
    fn from(p: ZakParams) -> Self {
        RawZakParams {
            m: p.m,
            n: p.n,
            delay_period_s: p.delay_period,
            doppler_period_hz: p.doppler_period,
        }
    }
}

impl ZakParams {
    pub fn new(m: usize, n: usize, delay_period: f64, doppler_period: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidParams(format!("M = {m} and N = {n} must be positive")));
        }
        if !(delay_period > 0.0 && delay_period.is_finite())
            || !(doppler_period > 0.0 && doppler_period.is_finite())
        {
            return Err(Error::InvalidParams(format!(
                "periods must be positive and finite (delay {delay_period}, Doppler {doppler_period})"
            )));
        }
        let product = delay_period * doppler_period;
        if (product - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "delay period x Doppler period = {product}, must equal 1"
            )));
        }
        if n.is_multiple_of(2) {
            return Err(Error::EvenDopplerBins(n));
        }
        Ok(Self { m, n, delay_period, doppler_period })
    }

    /// The 31 x 37 grid with a 30 kHz Doppler period used by the
    /// reference experiments.
    pub fn reference() -> Self {
        Self::new(31, 37, 1.0 / 30e3, 30e3).expect("reference grid is valid")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delay_period(&self) -> f64 {
        self.delay_period
    }

    pub fn doppler_period(&self) -> f64 {
        self.doppler_period
    }

    /// `M / tau_p`, in Hz.
    pub fn bandwidth(&self) -> f64 {
        self.m as f64 / self.delay_period
    }

    /// `N / nu_p`, in seconds.
    pub fn frame_duration(&self) -> f64 {
        self.n as f64 / self.doppler_period
    }

    /// Samples per critically sampled frame (`M N`).
    pub fn frame_len(&self) -> usize {
        self.m * self.n
    }

    pub fn delay_resolution(&self) -> f64 {
        1.0 / self.bandwidth()
    }

    pub fn doppler_resolution(&self) -> f64 {
        1.0 / self.frame_duration()
    }

    /// Largest centred Doppler index, `floor(N / 2)`.
    pub fn half_doppler(&self) -> i64 {
        (self.n / 2) as i64
    }
}

/// Coefficients `(A, B, C)` of the generalized discrete affine Fourier
/// transform, each coprime to the frame length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GdaftParams {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl GdaftParams {
    pub fn new(a: i64, b: i64, c: i64, frame_len: usize) -> Result<Self> {
        let g = Self { a, b, c };
        g.validate(frame_len)?;
        Ok(g)
    }

    pub fn validate(&self, frame_len: usize) -> Result<()> {
        let l = frame_len as i64;
        for (name, v) in [("A", self.a), ("B", self.b), ("C", self.c)] {
            if !(1..l).contains(&v) {
                return Err(Error::InvalidParams(format!("{name} = {v} outside [1, {l})")));
            }
            let d = gcd(v, l);
            if d != 1 {
                return Err(Error::NotCoprime { a: v, n: l, gcd: d });
            }
        }
        Ok(())
    }

    /// Whether the spread carrier built from these coefficients keeps a flat
    /// cross-ambiguity with the pulsone on a grid with `n` Doppler bins.
    /// Coprimality alone is not enough: on the pulsone support the carrier is
    /// a chirp with quadratic coefficient proportional to `4AC - B^2`, and the
    /// Gauss sum collapses when that shares a factor with `n`.
    pub fn is_unbiased(&self, n: usize) -> bool {
        gcd(4 * self.a * self.c - self.b * self.b, n as i64) == 1
    }
}

impl Default for GdaftParams {
    fn default() -> Self {
        Self { a: 1, b: 1, c: 1 }
    }
}
