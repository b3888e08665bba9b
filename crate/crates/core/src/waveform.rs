//! Transmit waveform synthesis: Zak-OTFS pulsones and symbol frames, the
//! GDAFT and its closed-form spread carrier, Zadoff-Chu phase codes and
//! FMCW chirp pairs.
//!
//! Zak-OTFS frames are critically sampled (`M N` samples at rate `B`).
//! The baselines run at `oversample * B`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numtheory::{epsilon, gcd, jacobi_symbol, mod_inverse};
use crate::params::{GdaftParams, ZakParams};
use crate::types::ComplexFrame;

/// `exp(j 2 pi r / modulus)` for an integer residue.
fn unit_phase(r: i128, modulus: i128) -> Complex64 {
    let r = r.rem_euclid(modulus);
    Complex64::from_polar(1.0, 2.0 * PI * r as f64 / modulus as f64)
}

fn check_bin(params: &ZakParams, k0: usize, l0: usize) -> Result<()> {
    if k0 >= params.m() || l0 >= params.n() {
        return Err(Error::IndexOutOfRange {
            k: k0 as i64,
            l: l0 as i64,
            m: params.m(),
            n: params.n(),
        });
    }
    Ok(())
}

/// Discrete-time pulsone at delay bin `k0` and Doppler bin `l0`: an impulse
/// train of period `M` starting at `k0`, with a Doppler phase ramp across
/// the `N` impulses.
pub fn pulsone(params: &ZakParams, k0: usize, l0: usize) -> Result<ComplexFrame> {
    check_bin(params, k0, l0)?;
    let (m, n) = (params.m(), params.n());
    let amp = 1.0 / (n as f64).sqrt();
    let mut frame = ComplexFrame::zeros(m * n, params.bandwidth());
    for d in 0..n {
        frame.samples[k0 + d * m] = amp * unit_phase((d * l0) as i128, n as i128);
    }
    Ok(frame)
}

/// `M x N` array of symbols mounted on the pulsone basis, indexed
/// `[k0][l0]` with `l0 = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolArray {
    m: usize,
    n: usize,
    values: Vec<Complex64>,
}

impl SymbolArray {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self { m, n, values: vec![Complex64::new(0.0, 0.0); m * n] }
    }

    pub fn from_vec(m: usize, n: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != m * n {
            return Err(Error::LengthMismatch { expected: m * n, got: values.len() });
        }
        Ok(Self { m, n, values })
    }

    /// Unit symbol at `(k0, l0)`, zero elsewhere.
    pub fn pilot(m: usize, n: usize, k0: usize, l0: usize) -> Self {
        let mut s = Self::zeros(m, n);
        s.values[k0 * n + l0] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn get(&self, k0: usize, l0: usize) -> Complex64 {
        self.values[k0 * self.n + l0]
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Linear combination of pulsones weighted by `symbols`.
pub fn mount_symbols(params: &ZakParams, symbols: &SymbolArray) -> Result<ComplexFrame> {
    let (m, n) = (params.m(), params.n());
    if symbols.m != m || symbols.n != n {
        return Err(Error::DimensionMismatch(format!(
            "symbol array {}x{} on a {m}x{n} grid",
            symbols.m, symbols.n
        )));
    }
    let amp = 1.0 / (n as f64).sqrt();
    let mut frame = ComplexFrame::zeros(m * n, params.bandwidth());
    // Sample k0 + dM collects every l0 at that delay: an N-point inverse DFT
    // over the Doppler index, written out directly.
    for k0 in 0..m {
        for d in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for l0 in 0..n {
                acc += symbols.get(k0, l0) * unit_phase((d * l0) as i128, n as i128);
            }
            frame.samples[k0 + d * m] = amp * acc;
        }
    }
    Ok(frame)
}

/// Direct `O((MN)^2)` evaluation of the generalized discrete affine
/// Fourier transform.
pub fn gdaft_direct(params: &ZakParams, g: &GdaftParams, x: &ComplexFrame) -> Result<ComplexFrame> {
    let len = params.frame_len();
    if x.len() != len {
        return Err(Error::LengthMismatch { expected: len, got: x.len() });
    }
    g.validate(len)?;
    let l = len as i128;
    let table: Vec<Complex64> = (0..l).map(|r| unit_phase(r, l)).collect();
    let scale = 1.0 / (len as f64).sqrt();
    let (a, b, c) = (g.a as i128, g.b as i128, g.c as i128);
    let samples = (0..l)
        .map(|n| {
            let base = a * n * n;
            let acc: Complex64 = (0..l)
                .zip(&x.samples)
                .filter(|(_, v)| v.re != 0.0 || v.im != 0.0)
                .map(|(m, v)| table[(base + b * n * m + c * m * m).rem_euclid(l) as usize] * v)
                .sum();
            acc * scale
        })
        .collect();
    Ok(ComplexFrame::new(samples, x.sample_rate))
}

/// Closed-form GDAFT image of the pulsone at `(k0, l0)`.
///
/// Requires `4CM` to be invertible modulo `N`. Each sample has magnitude
/// `1/sqrt(MN)`.
pub fn spread_carrier(params: &ZakParams, g: &GdaftParams, k0: usize, l0: usize) -> Result<ComplexFrame> {
    check_bin(params, k0, l0)?;
    let (m, n) = (params.m() as i64, params.n() as i64);
    let len = m * n;
    g.validate(len as usize)?;
    let inv = mod_inverse(4 * g.c * m, n)?;
    let gauss = epsilon(n)? * jacobi_symbol(g.c * m, n)? as f64 / (len as f64).sqrt();

    let (a, b, c) = (g.a as i128, g.b as i128, g.c as i128);
    let (k0, l0, m, n, inv) = (k0 as i128, l0 as i128, m as i128, n as i128, inv as i128);
    let l = m * n;
    let samples = (0..l)
        .map(|t| {
            let chirp = (a * t * t + b * t * k0 + c * k0 * k0).rem_euclid(l);
            let s = (b * t + l0 + 2 * c * k0).rem_euclid(n);
            let spread = (inv * s * s).rem_euclid(n);
            // both phases share the denominator MN
            gauss * unit_phase(chirp - m * spread, l)
        })
        .collect();
    Ok(ComplexFrame::new(samples, params.bandwidth()))
}

/// Unit-energy Zadoff-Chu sequence `exp(-j pi u n (n+1) / L)` of odd
/// length `L`. The returned frame carries one sample per chip.
pub fn zadoff_chu(len: usize, root: i64) -> Result<ComplexFrame> {
    if len == 0 || len.is_multiple_of(2) {
        return Err(Error::EvenModulus(len as i64));
    }
    let l = len as i64;
    let d = gcd(root, l);
    if d != 1 {
        return Err(Error::NotCoprime { a: root, n: l, gcd: d });
    }
    let amp = 1.0 / (len as f64).sqrt();
    let (u, l) = (root as i128, l as i128);
    let samples = (0..l)
        .map(|n| amp * unit_phase(-u * (n * (n + 1) / 2), l))
        .collect();
    Ok(ComplexFrame::new(samples, 1.0))
}

/// Rectangular-chip phase-coded frame: each of the `M N` chips is held for
/// `oversample` samples at rate `oversample * B`. Energy is preserved.
pub fn phase_coded_frame(params: &ZakParams, code: &ComplexFrame, oversample: usize) -> Result<ComplexFrame> {
    if code.len() != params.frame_len() {
        return Err(Error::LengthMismatch { expected: params.frame_len(), got: code.len() });
    }
    if oversample == 0 {
        return Err(Error::InvalidParams("oversample must be at least 1".into()));
    }
    let amp = 1.0 / (oversample as f64).sqrt();
    let samples = code
        .samples
        .iter()
        .flat_map(|&c| std::iter::repeat_n(c * amp, oversample))
        .collect();
    Ok(ComplexFrame::new(samples, oversample as f64 * params.bandwidth()))
}

/// Up- and down-chirp halves of an FMCW frame.
///
/// Each half lasts `T/2` at rate `oversample * B`, sweeps `B` Hz at slope
/// magnitude `2B/T` starting from zero frequency, and has unit energy.
pub fn fmcw_frame(params: &ZakParams, oversample: usize) -> Result<(ComplexFrame, ComplexFrame)> {
    if oversample < 2 {
        return Err(Error::InvalidParams(format!(
            "FMCW needs oversample >= 2, got {oversample}"
        )));
    }
    let fs = oversample as f64 * params.bandwidth();
    let half = params.frame_duration() / 2.0;
    let len = (fs * half).round() as usize;
    let slope = 2.0 * params.bandwidth() / params.frame_duration();
    let up: Vec<Complex64> = (0..len)
        .map(|i| {
            let t = i as f64 / fs;
            Complex64::from_polar(1.0, PI * slope * t * t)
        })
        .collect();
    let down = up.iter().map(|z| z.conj()).collect();
    Ok((
        ComplexFrame::new(up, fs).normalized(),
        ComplexFrame::new(down, fs).normalized(),
    ))
}
