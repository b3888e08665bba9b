//! Polarimetric scene generation, time-domain application of the
//! delay-Doppler channel, noise injection and ground-truth effective
//! channel surfaces.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ZakParams;
use crate::types::{pol_entry, ComplexFrame, DDSurface, PolMatrix, PolPair, PolPath};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// A list of point scatterers. Empty means target absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SceneSpec {
    pub paths: Vec<PolPath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
}

impl SceneSpec {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(path: PolPath) -> Self {
        Self { paths: vec![path], rng_seed: None }
    }

    pub fn validate(&self, params: &ZakParams) -> Result<()> {
        self.paths.iter().try_for_each(|p| p.validate(params))
    }
}

/// Interpolation used when a transmit frame is delayed by a fractional
/// number of samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    /// Bandlimited (sinc) interpolation. `None` is the untruncated periodic
    /// kernel, applied as a phase ramp in the frequency domain; `Some(w)`
    /// truncates the kernel to `w` taps either side.
    Sinc { half_width: Option<usize> },
    /// Rectangular chips: the delayed waveform holds each sample.
    RectChip,
}

impl Default for PulseShape {
    fn default() -> Self {
        PulseShape::Sinc { half_width: None }
    }
}

impl PulseShape {
    pub fn validate(&self) -> Result<()> {
        if let PulseShape::Sinc { half_width: Some(w) } = self {
            if *w < 8 {
                return Err(Error::InvalidParams(format!("sinc truncation {w} < 8 taps")));
            }
        }
        Ok(())
    }
}

/// How the Bernoulli factors `a, b` of the random scattering model are
/// valued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BernoulliSupport {
    /// `+-1` with equal probability; every draw has Frobenius energy 2.
    #[default]
    Symmetric,
    /// `{0, 1}` with equal probability; a quarter of the draws vanish.
    ZeroOne,
}

/// Scattering matrix from explicit model variables:
/// `HH = a s e^{j phi}`, `HV = VH = a sqrt(1 - s^2) e^{j delta}`,
/// `VV = b s e^{j gamma}`.
pub fn polar_response(a: f64, b: f64, sigma: f64, phi: f64, delta: f64, gamma: f64) -> PolMatrix {
    let cross = Complex64::from_polar(a * (1.0 - sigma * sigma).max(0.0).sqrt(), delta);
    [
        [Complex64::from_polar(a * sigma, phi), cross],
        [cross, Complex64::from_polar(b * sigma, gamma)],
    ]
}

pub fn draw_polar_response<R: Rng + ?Sized>(rng: &mut R, support: BernoulliSupport) -> PolMatrix {
    let bern = |rng: &mut R| {
        let bit = rng.random_bool(0.5);
        match support {
            BernoulliSupport::Symmetric => {
                if bit {
                    1.0
                } else {
                    -1.0
                }
            }
            BernoulliSupport::ZeroOne => bit as u8 as f64,
        }
    };
    let a = bern(rng);
    let b = bern(rng);
    let sigma: f64 = rng.random();
    let phi = 2.0 * PI * rng.random::<f64>();
    let delta = 2.0 * PI * rng.random::<f64>();
    let gamma = 2.0 * PI * rng.random::<f64>();
    polar_response(a, b, sigma, phi, delta, gamma)
}

/// Target delay uniform on `[0, tau_p / 4)` and Doppler uniform on
/// `[-nu_p / 8, nu_p / 8)`.
pub fn draw_target_geometry<R: Rng + ?Sized>(rng: &mut R, params: &ZakParams) -> (f64, f64) {
    let tau = rng.random::<f64>() * params.delay_period() / 4.0;
    let nu = (rng.random::<f64>() - 0.5) * params.doppler_period() / 4.0;
    (tau, nu)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Circular delay by `shift` samples (possibly fractional).
fn delay_frame(x: &[Complex64], shift: f64, shape: PulseShape) -> Vec<Complex64> {
    let len = x.len();
    let whole = shift.floor();
    let frac = shift - whole;
    let q = (whole as i64).rem_euclid(len as i64) as usize;
    let integer = |q: usize| (0..len).map(|n| x[(n + len - q) % len]).collect::<Vec<_>>();
    if frac < 1e-12 {
        return integer(q);
    }
    if 1.0 - frac < 1e-12 {
        return integer((q + 1) % len);
    }
    match shape {
        PulseShape::RectChip => integer(q),
        PulseShape::Sinc { half_width: Some(w) } if 2 * w < len => {
            // y[n] = sum_t x[n - q - t] sinc(t - frac)
            let taps: Vec<(usize, f64)> = (-(w as i64) + 1..=w as i64)
                .map(|t| (((q as i64 + t).rem_euclid(len as i64)) as usize, sinc(t as f64 - frac)))
                .collect();
            (0..len)
                .map(|n| taps.iter().map(|&(off, g)| x[(n + 2 * len - off) % len] * g).sum())
                .collect()
        }
        PulseShape::Sinc { .. } => {
            let (fwd, inv) = PLANNER.with(|p| {
                let mut p = p.borrow_mut();
                (p.plan_fft_forward(len), p.plan_fft_inverse(len))
            });
            let mut buf = x.to_vec();
            fwd.process(&mut buf);
            for (k, v) in buf.iter_mut().enumerate() {
                let f = if 2 * k < len {
                    k as f64
                } else if 2 * k == len {
                    0.0
                } else {
                    k as f64 - len as f64
                };
                if 2 * k == len {
                    *v *= (PI * shift).cos();
                } else {
                    *v *= Complex64::from_polar(1.0, -2.0 * PI * f * shift / len as f64);
                }
            }
            inv.process(&mut buf);
            let s = 1.0 / len as f64;
            buf.iter_mut().for_each(|v| *v *= s);
            buf
        }
    }
}

/// Output of one path on one transmit frame:
/// `x~(n Ts - tau) exp(j 2 pi nu (n Ts - tau))`.
pub fn delay_doppler_shift(x: &ComplexFrame, delay_s: f64, doppler_hz: f64, shape: PulseShape) -> ComplexFrame {
    let fs = x.sample_rate;
    let mut out = delay_frame(&x.samples, delay_s * fs, shape);
    if doppler_hz != 0.0 {
        let rot = Complex64::from_polar(1.0, 2.0 * PI * doppler_hz / fs);
        let mut ph = Complex64::from_polar(1.0, -2.0 * PI * doppler_hz * delay_s);
        for (n, v) in out.iter_mut().enumerate() {
            // resynchronise the recursive phasor every 256 samples
            if n % 256 == 0 {
                ph = Complex64::from_polar(1.0, 2.0 * PI * doppler_hz * (n as f64 / fs - delay_s));
            }
            *v *= ph;
            ph *= rot;
        }
    }
    ComplexFrame::new(out, fs)
}

/// Applies every path of `scene` to the transmit frames `tx = [x_H, x_V]`
/// and returns `[y_H, y_V]`.
///
/// Delays wrap modulo the frame length.
pub fn apply_pol_channel(
    params: &ZakParams,
    tx: [&ComplexFrame; 2],
    scene: &SceneSpec,
    shape: PulseShape,
) -> Result<[ComplexFrame; 2]> {
    tx[0].check_compatible(tx[1])?;
    scene.validate(params)?;
    shape.validate()?;
    let (len, fs) = (tx[0].len(), tx[0].sample_rate);
    let mut rx = [ComplexFrame::zeros(len, fs), ComplexFrame::zeros(len, fs)];
    for path in &scene.paths {
        for (ti, x) in tx.iter().enumerate() {
            let column = [path.gain[0][ti], path.gain[1][ti]];
            if column.iter().all(|g| *g == ZERO) || x.samples.iter().all(|v| *v == ZERO) {
                continue;
            }
            let shifted = delay_doppler_shift(x, path.delay_s, path.doppler_hz, shape);
            for (ri, g) in column.iter().enumerate() {
                if *g == ZERO {
                    continue;
                }
                for (o, s) in rx[ri].samples.iter_mut().zip(&shifted.samples) {
                    *o += g * s;
                }
            }
        }
    }
    Ok(rx)
}

/// Per-sample noise variance for a given SNR against `ref_energy`.
pub fn noise_variance(len: usize, snr_db: f64, ref_energy: f64) -> f64 {
    ref_energy / (len as f64 * 10f64.powf(snr_db / 10.0))
}

/// Adds circular complex white Gaussian noise. `snr_db = +inf` leaves the
/// frame unchanged.
pub fn add_noise<R: Rng + ?Sized>(y: &ComplexFrame, snr_db: f64, ref_energy: f64, rng: &mut R) -> ComplexFrame {
    let mut out = y.clone();
    if snr_db == f64::INFINITY || y.is_empty() {
        return out;
    }
    let sd = (noise_variance(y.len(), snr_db, ref_energy) / 2.0).sqrt();
    for v in out.samples.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *v += Complex64::new(sd * re, sd * im);
    }
    out
}

/// `w_RX *s w_TX` for sinc pulse shaping, in closed form:
/// `sinc(B tau) (1 - |tau|/T) exp(j pi nu tau) sinc(nu (T - |tau|))`
/// for `|tau| < T`, zero otherwise.
pub fn sinc_filter_response(params: &ZakParams, tau: f64, nu: f64) -> Complex64 {
    let t = params.frame_duration();
    if tau.abs() >= t {
        return ZERO;
    }
    let span = t - tau.abs();
    Complex64::from_polar(
        sinc(params.bandwidth() * tau) * (span / t) * sinc(nu * span),
        PI * nu * tau,
    )
}

/// Effective channel for one polarization pair, sampled on the
/// fundamental domain. Each path contributes
/// `H[j,i] w(tau - tau_p, nu - nu_p) exp(j 2 pi nu_p (tau - tau_p))`,
/// with the delay offset wrapped into `[-tau_p / 2, tau_p / 2)`.
pub fn effective_channel_truth(
    params: &ZakParams,
    scene: &SceneSpec,
    shape: PulseShape,
    pair: PolPair,
) -> Result<DDSurface> {
    if shape == PulseShape::RectChip {
        return Err(Error::Unsupported("effective channel needs sinc pulse shaping".into()));
    }
    scene.validate(params)?;
    let (dres, nres, period) = (params.delay_resolution(), params.doppler_resolution(), params.delay_period());
    let mut surface = DDSurface::for_params(params);
    for path in &scene.paths {
        let g = pol_entry(&path.gain, pair);
        if g == ZERO {
            continue;
        }
        for k in 0..params.m() {
            let mut dt = k as f64 * dres - path.delay_s;
            dt -= period * (dt / period + 0.5).floor();
            for l in surface.doppler_range() {
                let dn = l as f64 * nres - path.doppler_hz;
                let v = g
                    * sinc_filter_response(params, dt, dn)
                    * Complex64::from_polar(1.0, 2.0 * PI * path.doppler_hz * dt);
                surface.set(k, l, surface.get(k, l) + v);
            }
        }
    }
    Ok(surface)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Pol;
    use crate::waveform::{fmcw_frame, pulsone};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn forced_responses() {
        let h = polar_response(1.0, 0.0, 1.0, 0.0, 0.3, 0.7);
        assert!((h[0][0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(h[0][1].norm() < 1e-15 && h[1][0].norm() < 1e-15 && h[1][1].norm() < 1e-15);

        let h = polar_response(1.0, 1.0, 0.0, 0.1, 0.2, 0.3);
        assert!((h[0][1].norm() - 1.0).abs() < 1e-15 && (h[1][0].norm() - 1.0).abs() < 1e-15);
        assert!(h[0][0].norm() < 1e-15 && h[1][1].norm() < 1e-15);
    }

    #[test]
    fn drawn_response_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws = 100_000;
        let mut a_ones = 0usize;
        for _ in 0..draws {
            let h = draw_polar_response(&mut rng, BernoulliSupport::ZeroOne);
            assert_eq!(h[0][1], h[1][0]);
            if h[0][0].norm() > 0.0 || h[0][1].norm() > 0.0 {
                a_ones += 1;
            }
        }
        let mean = a_ones as f64 / draws as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean of a = {mean}");

        for _ in 0..draws {
            let h = draw_polar_response(&mut rng, BernoulliSupport::Symmetric);
            assert_eq!(h[0][1], h[1][0]);
            let e: f64 = h.iter().flatten().map(|z| z.norm_sqr()).sum();
            assert!((e - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn geometry_ranges() {
        let p = ZakParams::reference();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20_000 {
            let (tau, nu) = draw_target_geometry(&mut rng, &p);
            assert!((0.0..p.delay_period() / 4.0).contains(&tau));
            assert!(nu.abs() <= p.doppler_period() / 8.0);
            assert!(tau * p.bandwidth() < 7.75);
            assert!((nu * p.frame_duration()).abs() < 4.625 + 1e-12);
        }
    }

    fn one() -> Complex64 {
        c(1.0, 0.0)
    }

    #[test]
    fn identity_channel() {
        let p = ZakParams::reference();
        let xh = pulsone(&p, 2, 3).unwrap();
        let xv = pulsone(&p, 5, 1).unwrap();
        let scene = SceneSpec::single(PolPath::new(0.0, 0.0, [[one(), ZERO], [ZERO, one()]]));
        let [yh, yv] = apply_pol_channel(&p, [&xh, &xv], &scene, PulseShape::default()).unwrap();
        assert_eq!(yh, xh);
        assert_eq!(yv, xv);
    }

    #[test]
    fn on_grid_shift_closed_form() {
        let p = ZakParams::reference();
        let len = p.frame_len();
        let h = c(0.3, -0.4);
        let (k, l) = (5i64, -3i64);
        let xh = pulsone(&p, 1, 2).unwrap();
        let xv = ComplexFrame::zeros(len, p.bandwidth());
        let scene = SceneSpec::single(PolPath::on_grid(&p, k, l, [[h, ZERO], [ZERO, ZERO]]));
        let [yh, yv] = apply_pol_channel(&p, [&xh, &xv], &scene, PulseShape::default()).unwrap();
        for n in 0..len {
            let src = (n as i64 - k).rem_euclid(len as i64) as usize;
            let ph = 2.0 * PI * l as f64 * (n as f64 - k as f64) / len as f64;
            let expect = h * xh.samples[src] * Complex64::from_polar(1.0, ph);
            assert!((yh.samples[n] - expect).norm() < 1e-12);
        }
        assert!(yv.samples.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn superposition() {
        let p = ZakParams::reference();
        let xh = pulsone(&p, 0, 0).unwrap();
        let xv = fmcw_frame(&p, 2).unwrap().0;
        let xv = ComplexFrame::new(xv.samples[..p.frame_len()].to_vec(), p.bandwidth()).normalized();
        let h1 = [[c(0.5, 0.1), c(0.0, 0.2)], [c(0.0, 0.2), c(-0.3, 0.0)]];
        let h2 = [[c(0.1, 0.0), c(0.4, 0.0)], [c(0.4, 0.0), c(0.0, 0.9)]];
        let sum = [[h1[0][0] + h2[0][0], h1[0][1] + h2[0][1]], [h1[1][0] + h2[1][0], h1[1][1] + h2[1][1]]];
        let (tau, nu) = (3.3e-6, 1234.0);
        let run = |g| {
            apply_pol_channel(&p, [&xh, &xv], &SceneSpec::single(PolPath::new(tau, nu, g)), PulseShape::default())
                .unwrap()
        };
        let (a, b, s) = (run(h1), run(h2), run(sum));
        for pol in 0..2 {
            for n in 0..p.frame_len() {
                assert!((a[pol].samples[n] + b[pol].samples[n] - s[pol].samples[n]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_long_delay() {
        let p = ZakParams::reference();
        let x = pulsone(&p, 0, 0).unwrap();
        let scene = SceneSpec::single(PolPath::new(p.delay_period(), 0.0, [[one(); 2]; 2]));
        assert!(apply_pol_channel(&p, [&x, &x], &scene, PulseShape::default()).is_err());
    }

    #[test]
    fn energy_preserved_off_grid() {
        let p = ZakParams::reference();
        let x = pulsone(&p, 0, 0).unwrap();
        let z = ComplexFrame::zeros(p.frame_len(), p.bandwidth());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let (tau, nu) = draw_target_geometry(&mut rng, &p);
            let scene = SceneSpec::single(PolPath::new(tau, nu, [[one(), ZERO], [ZERO, ZERO]]));
            let [yh, _] = apply_pol_channel(&p, [&x, &z], &scene, PulseShape::default()).unwrap();
            assert!((yh.energy() - 1.0).abs() < 1e-3, "energy {}", yh.energy());
        }
    }

    #[test]
    fn truncated_kernel_close_to_exact_on_bandlimited_frame() {
        let p = ZakParams::reference();
        let (up, _) = fmcw_frame(&p, 2).unwrap();
        let exact = delay_doppler_shift(&up, 2.4e-6, 0.0, PulseShape::Sinc { half_width: None });
        let trunc = delay_doppler_shift(&up, 2.4e-6, 0.0, PulseShape::Sinc { half_width: Some(32) });
        let err: f64 = exact.samples.iter().zip(&trunc.samples).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!(err < 1e-2, "relative error energy {err}");
        assert!(PulseShape::Sinc { half_width: Some(4) }.validate().is_err());
    }

    #[test]
    fn noise_energy_matches_variance() {
        let p = ZakParams::reference();
        let y = ComplexFrame::zeros(p.frame_len(), p.bandwidth());
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let frames = 1000;
        let total: f64 = (0..frames).map(|_| add_noise(&y, 0.0, 1.0, &mut rng).energy()).sum();
        let expect = noise_variance(y.len(), 0.0, 1.0) * y.len() as f64;
        assert!(((total / frames as f64) / expect - 1.0).abs() < 0.05);
        assert_eq!(add_noise(&y, f64::INFINITY, 1.0, &mut rng), y);
    }

    #[test]
    fn noise_is_uncorrelated_with_pulsone() {
        let p = ZakParams::reference();
        let x = pulsone(&p, 0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = add_noise(&ComplexFrame::zeros(p.frame_len(), p.bandwidth()), 0.0, 1.0, &mut rng);
        let sd = noise_variance(p.frame_len(), 0.0, 1.0).sqrt();
        let engine = crate::ambiguity::FastAmbiguity::new(p.frame_len());
        let s = engine.fundamental(&p, &w, &x).unwrap();
        let rms = (s.energy() / (p.frame_len() as f64)).sqrt();
        assert!((rms / sd - 1.0).abs() < 0.15, "rms {rms} vs sd {sd}");
        assert!(rms < 0.05);
    }

    #[test]
    fn filter_response_self_reproduces() {
        let p = ZakParams::reference();
        let (dres, nres) = (p.delay_resolution(), p.doppler_resolution());
        assert!((sinc_filter_response(&p, 0.0, 0.0) - one()).norm() < 1e-15);
        for k in 1..5 {
            assert!(sinc_filter_response(&p, k as f64 * dres, 0.0).norm() < 1e-12);
            assert!(sinc_filter_response(&p, 0.0, k as f64 * nres).norm() < 1e-12);
        }
    }

    /// Numerical twisted convolution of the two sinc filters. The integrand
    /// separates into a delay integral and a Doppler integral; both are
    /// evaluated by midpoint quadrature on an 8x-oversampled grid.
    fn numeric_filter_response(p: &ZakParams, tau: f64, nu: f64) -> Complex64 {
        let (b, t) = (p.bandwidth(), p.frame_duration());
        let span = 400.0;
        let steps = (2.0 * span * 8.0) as usize;
        let h = 2.0 * span / steps as f64;
        let delay: f64 = (0..steps)
            .map(|i| {
                let u = -span + (i as f64 + 0.5) * h; // u = B tau'
                sinc(u) * sinc(b * tau - u)
            })
            .sum::<f64>()
            * h
            / b;
        let doppler: Complex64 = (0..steps)
            .map(|i| {
                let v = -span + (i as f64 + 0.5) * h; // v = T nu'
                Complex64::from_polar(sinc(v) * sinc(t * nu - v), 2.0 * PI * (v / t) * tau)
            })
            .sum::<Complex64>()
            * h
            / t;
        delay * doppler * (b * t)
    }

    #[test]
    fn closed_form_matches_numeric_twisted_convolution() {
        let p = ZakParams::reference();
        let (dres, nres) = (p.delay_resolution(), p.doppler_resolution());
        for (dk, dl) in [(0.0, 0.0), (0.3, 0.0), (0.0, 0.4), (0.5, -0.5), (1.2, 2.7)] {
            let (tau, nu) = (dk * dres, dl * nres);
            let a = sinc_filter_response(&p, tau, nu);
            let b = numeric_filter_response(&p, tau, nu);
            assert!((a - b).norm() < 0.02, "({dk},{dl}): {a} vs {b}");
        }
    }

    #[test]
    fn truth_on_grid_peak() {
        let p = ZakParams::reference();
        let h = c(0.6, 0.2);
        let mut g = [[ZERO; 2]; 2];
        g[1][0] = h;
        let scene = SceneSpec::single(PolPath::on_grid(&p, 4, -2, g));
        let vh = PolPair::new(Pol::V, Pol::H);
        let s = effective_channel_truth(&p, &scene, PulseShape::default(), vh).unwrap();
        assert!((s.get(4, -2) - h).norm() < 0.02 * h.norm());
        let hh = effective_channel_truth(&p, &scene, PulseShape::default(), PolPair::HH).unwrap();
        assert_eq!(hh.energy(), 0.0);
        let empty = effective_channel_truth(&p, &SceneSpec::empty(), PulseShape::default(), vh).unwrap();
        assert_eq!(empty.energy(), 0.0);
        assert!(effective_channel_truth(&p, &scene, PulseShape::RectChip, vh).is_err());
    }

    #[test]
    fn truth_is_linear_in_paths() {
        let p = ZakParams::reference();
        let g1 = [[c(0.7, 0.0), ZERO], [ZERO, ZERO]];
        let g2 = [[c(0.0, 0.3), ZERO], [ZERO, ZERO]];
        let p1 = PolPath::new(2.2e-6, 310.0, g1);
        let p2 = PolPath::new(6.9e-6, -1700.0, g2);
        let shape = PulseShape::default();
        let mut a = effective_channel_truth(&p, &SceneSpec::single(p1), shape, PolPair::HH).unwrap();
        let b = effective_channel_truth(&p, &SceneSpec::single(p2), shape, PolPair::HH).unwrap();
        let both = SceneSpec { paths: vec![p1, p2], rng_seed: None };
        let s = effective_channel_truth(&p, &both, shape, PolPair::HH).unwrap();
        a.add_assign(&b).unwrap();
        assert!(a.max_abs_diff(&s) < 1e-14);
    }
}
