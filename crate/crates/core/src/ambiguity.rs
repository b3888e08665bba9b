//! Cross-ambiguity evaluation (direct oracle and FFT-per-delay fast path),
//! discrete twisted convolution, unimodular-support extraction and the
//! crystallization check.
//!
//! All indices are taken modulo the frame length `L`:
//!
//! `A[k, l] = sum_n y[n] conj(x[(n - k) mod L]) exp(-j 2 pi l (n - k) / L)`

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::params::ZakParams;
use crate::types::{ComplexFrame, DDSurface, SupportBox, SupportSet};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn check_lengths(y: &ComplexFrame, x: &ComplexFrame) -> Result<usize> {
    if y.len() != x.len() {
        return Err(Error::LengthMismatch { expected: x.len(), got: y.len() });
    }
    if y.is_empty() {
        return Err(Error::LengthMismatch { expected: 1, got: 0 });
    }
    Ok(y.len())
}

/// `exp(-j 2 pi r / L)` for `r = 0..L`.
fn twiddles(len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|r| Complex64::from_polar(1.0, -2.0 * PI * r as f64 / len as f64))
        .collect()
}

fn lag_product(y: &[Complex64], x: &[Complex64], delay: usize, out: &mut [Complex64]) {
    let len = y.len();
    let d = delay % len;
    for (n, o) in out.iter_mut().enumerate() {
        *o = y[n] * x[(n + len - d) % len].conj();
    }
}

/// Exact evaluation at the requested `(delay, Doppler)` points, `O(L)` per
/// point. Result is indexed `[delay_idx][doppler_idx]`; Doppler indices
/// may be negative and are reduced modulo `L`.
pub fn cross_ambiguity_direct(
    y: &ComplexFrame,
    x: &ComplexFrame,
    delays: &[usize],
    dopplers: &[i64],
) -> Result<Vec<Vec<Complex64>>> {
    let len = check_lengths(y, x)?;
    let tw = twiddles(len);
    let mut prod = vec![ZERO; len];
    let mut out = Vec::with_capacity(delays.len());
    for &d in delays {
        lag_product(&y.samples, &x.samples, d, &mut prod);
        let d = d % len;
        let row = dopplers
            .iter()
            .map(|&l| {
                let step = l.rem_euclid(len as i64) as usize;
                // phase index l (n - d) mod L, advanced by l each sample
                let mut idx = (step * (len - d)) % len;
                let mut acc = ZERO;
                for v in &prod {
                    acc += v * tw[idx];
                    idx += step;
                    if idx >= len {
                        idx -= len;
                    }
                }
                acc
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

/// Direct evaluation at real-valued Doppler indices (cycles per frame).
///
/// Used for half-frame chirp processing where the `1/T` Doppler grid falls
/// between the native DFT bins of the shorter observation.
pub fn cross_ambiguity_direct_frac(
    y: &ComplexFrame,
    x: &ComplexFrame,
    delays: &[usize],
    dopplers: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    let len = check_lengths(y, x)?;
    let lf = len as f64;
    let mut prod = vec![ZERO; len];
    let mut out = Vec::with_capacity(delays.len());
    for &d in delays {
        lag_product(&y.samples, &x.samples, d, &mut prod);
        let d = (d % len) as f64;
        let row = dopplers
            .iter()
            .map(|&f| {
                let mut acc = ZERO;
                let mut ph = Complex64::from_polar(1.0, 2.0 * PI * f * d / lf);
                let rot = Complex64::from_polar(1.0, -2.0 * PI * f / lf);
                for v in &prod {
                    acc += v * ph;
                    ph *= rot;
                }
                acc
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

/// Precomputed direct evaluator for a fixed frame length and a fixed set of
/// delays (samples) and Doppler indices (cycles per frame, possibly
/// fractional).
///
/// Same sum as [`cross_ambiguity_direct_frac`], organised as a lag-product
/// by phase-table product so that the inner loop runs over contiguous
/// Doppler columns.
#[derive(Debug, Clone)]
pub struct DirectPlan {
    len: usize,
    delays: Vec<usize>,
    dopplers: Vec<f64>,
    // exp(-j 2 pi f n / L), row-major [n][doppler]
    tab_re: Vec<f64>,
    tab_im: Vec<f64>,
}

impl DirectPlan {
    pub fn new(len: usize, delays: Vec<usize>, dopplers: Vec<f64>) -> Self {
        let nd = dopplers.len();
        let mut tab_re = vec![0.0; len * nd];
        let mut tab_im = vec![0.0; len * nd];
        for (j, &f) in dopplers.iter().enumerate() {
            // reduce f n mod L exactly when f is an integer or half-integer
            let twice = 2.0 * f;
            let exact = twice.fract() == 0.0;
            for n in 0..len {
                let cycles = if exact {
                    ((twice as i64 * n as i64).rem_euclid(2 * len as i64)) as f64 / 2.0
                } else {
                    f * n as f64
                };
                let ph = -2.0 * PI * cycles / len as f64;
                tab_re[n * nd + j] = ph.cos();
                tab_im[n * nd + j] = ph.sin();
            }
        }
        Self { len, delays, dopplers, tab_re, tab_im }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    pub fn dopplers(&self) -> &[f64] {
        &self.dopplers
    }

    /// `[delay_idx][doppler_idx]`.
    pub fn evaluate(&self, y: &ComplexFrame, x: &ComplexFrame) -> Result<Vec<Vec<Complex64>>> {
        let len = check_lengths(y, x)?;
        if len != self.len {
            return Err(Error::LengthMismatch { expected: self.len, got: len });
        }
        let (nd, nk) = (self.dopplers.len(), self.delays.len());
        // lag products stored [n][delay] so each table row is reused by
        // every delay while it sits in cache
        let mut prod = vec![ZERO; len * nk];
        for (i, &d) in self.delays.iter().enumerate() {
            let d = d % len;
            for n in 0..len {
                prod[n * nk + i] = y.samples[n] * x.samples[(n + len - d) % len].conj();
            }
        }
        let mut acc_re = vec![0.0; nk * nd];
        let mut acc_im = vec![0.0; nk * nd];
        for n in 0..len {
            let (tr, ti) = (&self.tab_re[n * nd..(n + 1) * nd], &self.tab_im[n * nd..(n + 1) * nd]);
            for (i, z) in prod[n * nk..(n + 1) * nk].iter().enumerate() {
                let (ar, ai) = (&mut acc_re[i * nd..(i + 1) * nd], &mut acc_im[i * nd..(i + 1) * nd]);
                for j in 0..nd {
                    ar[j] += z.re * tr[j] - z.im * ti[j];
                    ai[j] += z.re * ti[j] + z.im * tr[j];
                }
            }
        }
        let out = self
            .delays
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let d = (d % len) as f64;
                self.dopplers
                    .iter()
                    .enumerate()
                    .map(|(j, &f)| {
                        Complex64::new(acc_re[i * nd + j], acc_im[i * nd + j])
                            * Complex64::from_polar(1.0, 2.0 * PI * f * d / len as f64)
                    })
                    .collect()
            })
            .collect();
        Ok(out)
    }
}

/// `exp(j 2 pi sign r / modulus)` with `r` reduced exactly.
fn unit_phase(r: i64, modulus: i64, sign: f64) -> Complex64 {
    Complex64::from_polar(1.0, sign * 2.0 * PI * r.rem_euclid(modulus) as f64 / modulus as f64)
}

/// Cross-ambiguity at a few delays and the `N` centred Doppler bins
/// `l / q`, `l = -(N-1)/2 ..= (N-1)/2` (cycles per frame), for frame
/// lengths that are a multiple `P N` of the bin count.
///
/// Splitting `n = a + P b` turns each delay into `P` transforms of length
/// `q N` (zero padded) followed by one twiddle pass, instead of `N` full
/// passes over the frame.
#[derive(Clone)]
pub struct DecimatedPlan {
    len: usize,
    bins: usize,
    q: usize,
    delays: Vec<usize>,
    fft: Arc<dyn Fft<f64>>,
    // [a][j]: exp(-j 2 pi l_j a / (q L))
    tw: Vec<Complex64>,
}

impl std::fmt::Debug for DecimatedPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DecimatedPlan")
            .field("len", &self.len)
            .field("bins", &self.bins)
            .field("q", &self.q)
            .field("delays", &self.delays)
            .finish()
    }
}

impl DecimatedPlan {
    pub fn new(len: usize, delays: Vec<usize>, bins: usize, q: usize) -> Result<Self> {
        if bins.is_multiple_of(2) || q == 0 || len == 0 || !len.is_multiple_of(bins) {
            return Err(Error::InvalidParams(format!(
                "decimated plan needs odd bin count dividing the frame length and q >= 1 (L = {len}, N = {bins}, q = {q})"
            )));
        }
        let p = len / bins;
        let half = (bins / 2) as i64;
        let modulus = (q * len) as i64;
        let mut tw = Vec::with_capacity(p * bins);
        for a in 0..p as i64 {
            for l in -half..=half {
                tw.push(unit_phase(l * a, modulus, -1.0));
            }
        }
        let fft = FftPlanner::new().plan_fft_forward(q * bins);
        Ok(Self { len, bins, q, delays, fft, tw })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    /// `[delay_idx][l + (N-1)/2]`.
    pub fn evaluate(&self, y: &ComplexFrame, x: &ComplexFrame) -> Result<Vec<Vec<Complex64>>> {
        let len = check_lengths(y, x)?;
        if len != self.len {
            return Err(Error::LengthMismatch { expected: self.len, got: len });
        }
        let (n, q) = (self.bins, self.q);
        let p = len / n;
        let qn = q * n;
        let half = (n / 2) as i64;
        let modulus = (q * len) as i64;
        let mut prod = vec![ZERO; len];
        let mut buf = vec![ZERO; p * qn];
        let mut scratch = vec![ZERO; self.fft.get_inplace_scratch_len()];
        let mut out = Vec::with_capacity(self.delays.len());
        for &d in &self.delays {
            lag_product(&y.samples, &x.samples, d, &mut prod);
            for a in 0..p {
                let row = &mut buf[a * qn..(a + 1) * qn];
                for b in 0..n {
                    row[b] = prod[a + p * b];
                }
                row[n..].iter_mut().for_each(|v| *v = ZERO);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            let row = (-half..=half)
                .enumerate()
                .map(|(j, l)| {
                    let bin = l.rem_euclid(qn as i64) as usize;
                    let s: Complex64 = (0..p).map(|a| self.tw[a * n + j] * buf[a * qn + bin]).sum();
                    s * unit_phase(l * (d % len) as i64, modulus, 1.0)
                })
                .collect();
            out.push(row);
        }
        Ok(out)
    }
}

/// FFT-per-delay cross-ambiguity engine for a fixed frame length.
///
/// For each delay the lag product is transformed once, giving all `L`
/// Doppler bins in `O(L log L)`. Delays are independent of each other.
#[derive(Clone)]
pub struct FastAmbiguity {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
    tw: Vec<Complex64>,
}

impl std::fmt::Debug for FastAmbiguity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FastAmbiguity").field("len", &self.len).finish()
    }
}

impl FastAmbiguity {
    pub fn new(len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len);
        Self { len, fft, tw: twiddles(len) }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// All `L` Doppler bins at one delay.
    pub fn delay_row(&self, y: &ComplexFrame, x: &ComplexFrame, delay: usize) -> Result<Vec<Complex64>> {
        let len = check_lengths(y, x)?;
        if len != self.len {
            return Err(Error::LengthMismatch { expected: self.len, got: len });
        }
        let mut buf = vec![ZERO; len];
        lag_product(&y.samples, &x.samples, delay, &mut buf);
        self.fft.process(&mut buf);
        let d = delay % len;
        for (l, v) in buf.iter_mut().enumerate() {
            // undo the -k in the exponent: multiply by exp(+j 2 pi l k / L)
            *v *= self.tw[(len - (l * d) % len) % len];
        }
        Ok(buf)
    }

    /// Rows for each requested delay, every row holding all `L` Doppler bins.
    pub fn rows(&self, y: &ComplexFrame, x: &ComplexFrame, delays: &[usize]) -> Result<Vec<Vec<Complex64>>> {
        delays.iter().map(|&d| self.delay_row(y, x, d)).collect()
    }

    /// Cross-ambiguity restricted to the `M x N` fundamental domain
    /// (delays `0..M`, centred Doppler bins).
    pub fn fundamental(&self, params: &ZakParams, y: &ComplexFrame, x: &ComplexFrame) -> Result<DDSurface> {
        let mut s = DDSurface::for_params(params);
        let len = self.len as i64;
        for k in 0..params.m() {
            let row = self.delay_row(y, x, k)?;
            for l in s.doppler_range() {
                s.set(k, l, row[l.rem_euclid(len) as usize]);
            }
        }
        Ok(s)
    }
}

/// One-shot fast path; plans a transform for the frame length.
pub fn cross_ambiguity_fast(y: &ComplexFrame, x: &ComplexFrame, delays: &[usize]) -> Result<Vec<Vec<Complex64>>> {
    let len = check_lengths(y, x)?;
    FastAmbiguity::new(len).rows(y, x, delays)
}

/// Complex array over `Z_L x Z_L`, indexed `[k][l]` modulo `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusSurface {
    len: usize,
    values: Vec<Complex64>,
}

impl TorusSurface {
    pub fn zeros(len: usize) -> Self {
        Self { len, values: vec![ZERO; len * len] }
    }

    pub fn delta(len: usize, k: i64, l: i64, v: Complex64) -> Self {
        let mut s = Self::zeros(len);
        s.set(k, l, v);
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn offset(&self, k: i64, l: i64) -> usize {
        let n = self.len as i64;
        (k.rem_euclid(n) * n + l.rem_euclid(n)) as usize
    }

    pub fn get(&self, k: i64, l: i64) -> Complex64 {
        self.values[self.offset(k, l)]
    }

    pub fn set(&mut self, k: i64, l: i64, v: Complex64) {
        let i = self.offset(k, l);
        self.values[i] = v;
    }

    pub fn add(&self, other: &TorusSurface) -> Result<TorusSurface> {
        if self.len != other.len {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.len, other.len)));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(TorusSurface { len: self.len, values })
    }

    pub fn max_abs_diff(&self, other: &TorusSurface) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Restrict to the `M x N` fundamental domain.
    pub fn fundamental(&self, params: &ZakParams) -> DDSurface {
        DDSurface::from_fn(params.m(), params.n(), |k, l| self.get(k as i64, l))
    }
}

/// Full `L x L` cross-ambiguity via the fast path.
pub fn ambiguity_torus(y: &ComplexFrame, x: &ComplexFrame) -> Result<TorusSurface> {
    let len = check_lengths(y, x)?;
    let engine = FastAmbiguity::new(len);
    let mut values = Vec::with_capacity(len * len);
    for k in 0..len {
        values.extend(engine.delay_row(y, x, k)?);
    }
    Ok(TorusSurface { len, values })
}

/// Discrete twisted convolution on `Z_L x Z_L`:
///
/// `(a *s b)[k, l] = sum_{k', l'} a[k', l'] b[k - k', l - l'] exp(j 2 pi l' (k - k') / L)`
///
/// Brute force, `O(L^4)`; meant for small grids and property checks.
pub fn twisted_convolve(a: &TorusSurface, b: &TorusSurface) -> Result<TorusSurface> {
    if a.len != b.len {
        return Err(Error::DimensionMismatch(format!("{} vs {}", a.len, b.len)));
    }
    let len = a.len as i64;
    let tw: Vec<Complex64> = twiddles(a.len).iter().map(|z| z.conj()).collect();
    let mut out = TorusSurface::zeros(a.len);
    for k1 in 0..len {
        for l1 in 0..len {
            let av = a.get(k1, l1);
            if av == ZERO {
                continue;
            }
            for k2 in 0..len {
                let ph = tw[((l1 * k2) % len) as usize];
                for l2 in 0..len {
                    let bv = b.get(k2, l2);
                    if bv == ZERO {
                        continue;
                    }
                    let i = out.offset(k1 + k2, l1 + l2);
                    out.values[i] += av * bv * ph;
                }
            }
        }
    }
    Ok(out)
}

/// Points where `|A_{x,x}|` is within `tol` of one.
pub fn self_ambiguity_support(x: &ComplexFrame, tol: f64) -> Result<SupportSet> {
    let len = x.len();
    let engine = FastAmbiguity::new(len);
    let mut set = SupportSet::new(len);
    for k in 0..len {
        let row = engine.delay_row(x, x, k)?;
        for (l, v) in row.iter().enumerate() {
            if (v.norm() - 1.0).abs() <= tol {
                set.insert(k as i64, l as i64);
            }
        }
    }
    Ok(set)
}

/// Outcome of a crystallization check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Crystallization {
    pub holds: bool,
    /// First pair of support points whose translated boxes overlap.
    pub violation: Option<((usize, usize), (usize, usize))>,
}

/// Is some `t` in `[-(width-1), width-1]` congruent to `diff` mod `modulus`?
fn within_span(diff: i64, width: i64, modulus: i64) -> bool {
    if 2 * width > modulus {
        return true;
    }
    let d = diff.rem_euclid(modulus);
    d < width || modulus - d < width
}

/// Checks that translates of `support_box` by distinct points of `support`
/// are pairwise disjoint modulo `(L, L)`.
pub fn crystallization_check(support: &SupportSet, support_box: &SupportBox) -> Crystallization {
    let modulus = support.modulus as i64;
    let (kw, lw) = (support_box.delay_width(), support_box.doppler_width());
    let pts: Vec<_> = support.points.iter().copied().collect();
    for (i, &(k1, l1)) in pts.iter().enumerate() {
        for &(k2, l2) in &pts[i + 1..] {
            let dk = k1 as i64 - k2 as i64;
            let dl = l1 as i64 - l2 as i64;
            if within_span(dk, kw, modulus) && within_span(dl, lw, modulus) {
                return Crystallization { holds: false, violation: Some(((k1, l1), (k2, l2))) };
            }
        }
    }
    Crystallization { holds: true, violation: None }
}
