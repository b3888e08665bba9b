//! Channel estimation pipelines for the three polarimetric systems, plus the
//! detection statistic, noise-referenced thresholding, peak picking and
//! entropy-weighted parameter fusion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{DecimatedPlan, FastAmbiguity};
use crate::error::{Error, Result};
use crate::params::ZakParams;
use crate::types::{ComplexFrame, DDSurface, PolPair, SupportBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Zak,
    PhaseCoded,
    Fmcw,
}

impl SystemKind {
    pub const ALL: [SystemKind; 3] = [SystemKind::Zak, SystemKind::PhaseCoded, SystemKind::Fmcw];

    pub fn label(self) -> &'static str {
        match self {
            SystemKind::Zak => "zak",
            SystemKind::PhaseCoded => "phase_coded",
            SystemKind::Fmcw => "fmcw",
        }
    }
}

impl std::str::FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SystemKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown system '{s}'")))
    }
}

/// Uni-polarized systems transmit and receive on H only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolMode {
    Uni,
    Dual,
}

impl PolMode {
    pub fn pairs(self) -> &'static [PolPair] {
        match self {
            PolMode::Uni => &[PolPair::HH],
            PolMode::Dual => &PolPair::ALL,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PolMode::Uni => "uni",
            PolMode::Dual => "dual",
        }
    }
}

impl std::str::FromStr for PolMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uni" => Ok(PolMode::Uni),
            "dual" => Ok(PolMode::Dual),
            _ => Err(Error::Config(format!("unknown polarization mode '{s}'"))),
        }
    }
}

/// Estimated effective channels on the `M x N` grid, one per available
/// `(rx, tx)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PolChannelEstimate {
    system: SystemKind,
    surfaces: [Option<DDSurface>; 4],
    frames_used: usize,
    doppler_step: i64,
}

impl PolChannelEstimate {
    /// `doppler_step` is the spacing, in `1/T` bins, of the Doppler grid the
    /// system can resolve (peaks are only reported on it).
    pub fn new(
        system: SystemKind,
        surfaces: [Option<DDSurface>; 4],
        frames_used: usize,
        doppler_step: i64,
    ) -> Result<Self> {
        let mut present = surfaces.iter().flatten();
        let first = present
            .next()
            .ok_or_else(|| Error::DimensionMismatch("estimate holds no surfaces".into()))?;
        for s in present {
            first.check_same_shape(s)?;
        }
        if doppler_step < 1 {
            return Err(Error::InvalidParams(format!("Doppler step {doppler_step} < 1")));
        }
        Ok(Self { system, surfaces, frames_used, doppler_step })
    }

    pub fn system(&self) -> SystemKind {
        self.system
    }

    pub fn frames_used(&self) -> usize {
        self.frames_used
    }

    pub fn doppler_step(&self) -> i64 {
        self.doppler_step
    }

    pub fn surface(&self, pair: PolPair) -> Option<&DDSurface> {
        self.surfaces[pair.index()].as_ref()
    }

    /// Available surfaces in `HH, HV, VH, VV` order.
    pub fn surfaces(&self) -> impl Iterator<Item = (PolPair, &DDSurface)> + '_ {
        PolPair::ALL
            .into_iter()
            .filter_map(move |p| self.surface(p).map(|s| (p, s)))
    }

    fn first(&self) -> &DDSurface {
        self.surfaces.iter().flatten().next().expect("checked in new")
    }

    pub fn m(&self) -> usize {
        self.first().m()
    }

    pub fn n(&self) -> usize {
        self.first().n()
    }
}

fn check_rate(frame: &ComplexFrame, len: usize, rate: f64) -> Result<()> {
    if frame.len() != len {
        return Err(Error::LengthMismatch { expected: len, got: frame.len() });
    }
    if (frame.sample_rate - rate).abs() > 1e-9 * rate {
        return Err(Error::InvalidParams(format!(
            "sample rate {} Hz, expected {rate} Hz",
            frame.sample_rate
        )));
    }
    Ok(())
}

/// `h^(j,i) = A_{y^(j), x^(i)}` over the fundamental domain via the fast
/// path. `rx` and `tx` are indexed by polarization (`H`, `V`).
pub fn estimate_pol_channels_zak(
    params: &ZakParams,
    engine: &FastAmbiguity,
    rx: [&ComplexFrame; 2],
    tx: [&ComplexFrame; 2],
    mode: PolMode,
) -> Result<PolChannelEstimate> {
    let len = params.frame_len();
    if engine.len() != len {
        return Err(Error::LengthMismatch { expected: len, got: engine.len() });
    }
    let mut surfaces: [Option<DDSurface>; 4] = Default::default();
    for &pair in mode.pairs() {
        let (y, x) = (rx[pair.rx.index()], tx[pair.tx.index()]);
        check_rate(y, len, params.bandwidth())?;
        check_rate(x, len, params.bandwidth())?;
        surfaces[pair.index()] = Some(engine.fundamental(params, y, x)?);
    }
    PolChannelEstimate::new(SystemKind::Zak, surfaces, 1, 1)
}

/// Direct delay-Doppler correlator for oversampled baseline frames,
/// evaluated on the `M x N` grid (delays `k / B`, Dopplers `l / T`).
#[derive(Debug, Clone)]
pub struct BaselineReceiver {
    plan: DecimatedPlan,
    oversample: usize,
    m: usize,
    n: usize,
    rate: f64,
}

impl BaselineReceiver {
    /// Whole-frame correlator for phase-coded frames of `oversample * M N`
    /// samples.
    pub fn phase_coded(params: &ZakParams, oversample: usize) -> Result<Self> {
        Self::build(params, oversample, oversample * params.frame_len(), 1)
    }

    /// Half-frame correlator for FMCW chirps. A half lasts `T/2`, so a
    /// Doppler of `l / T` is `l / 2` cycles across it.
    pub fn fmcw_half(params: &ZakParams, oversample: usize) -> Result<Self> {
        let len = (oversample as f64 * params.bandwidth() * params.frame_duration() / 2.0).round() as usize;
        Self::build(params, oversample, len, 2)
    }

    fn build(params: &ZakParams, oversample: usize, len: usize, q: usize) -> Result<Self> {
        if oversample == 0 {
            return Err(Error::InvalidParams("oversample must be at least 1".into()));
        }
        let (m, n) = (params.m(), params.n());
        let delays = (0..m).map(|k| k * oversample).collect();
        Ok(Self {
            plan: DecimatedPlan::new(len, delays, n, q)?,
            oversample,
            m,
            n,
            rate: oversample as f64 * params.bandwidth(),
        })
    }

    pub fn frame_len(&self) -> usize {
        self.plan.len()
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    pub fn correlate(&self, y: &ComplexFrame, x: &ComplexFrame) -> Result<DDSurface> {
        check_rate(y, self.plan.len(), self.rate)?;
        check_rate(x, self.plan.len(), self.rate)?;
        let rows = self.plan.evaluate(y, x)?;
        let h = (self.n / 2) as i64;
        Ok(DDSurface::from_fn(self.m, self.n, |k, l| rows[k][(l + h) as usize]))
    }
}

/// Cross-correlates each received polarization with each Zadoff-Chu
/// transmit frame.
pub fn estimate_pol_channels_phase_coded(
    receiver: &BaselineReceiver,
    rx: [&ComplexFrame; 2],
    tx: [&ComplexFrame; 2],
    mode: PolMode,
) -> Result<PolChannelEstimate> {
    let mut surfaces: [Option<DDSurface>; 4] = Default::default();
    for &pair in mode.pairs() {
        surfaces[pair.index()] = Some(receiver.correlate(rx[pair.rx.index()], tx[pair.tx.index()])?);
    }
    PolChannelEstimate::new(SystemKind::PhaseCoded, surfaces, 1, 1)
}

/// Received up- and down-chirp halves of one FMCW frame, indexed by
/// receive polarization.
#[derive(Debug, Clone, PartialEq)]
pub struct FmcwFrameRx {
    pub up: [ComplexFrame; 2],
    pub down: [ComplexFrame; 2],
}

/// Intersects the up- and down-chirp ridges: magnitude is the geometric
/// mean of the two half-frame correlations, phase is the up-chirp's.
fn intersect_ridges(up: &DDSurface, down: &DDSurface) -> DDSurface {
    DDSurface::from_fn(up.m(), up.n(), |k, l| {
        let (u, d) = (up.get(k, l), down.get(k, l));
        let mag = u.norm();
        if mag == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            u * ((mag * d.norm()).sqrt() / mag)
        }
    })
}

/// Sequential polarimetry. Frame `f` of `frames` is the one in which
/// polarization `f` (`H` first, then `V`) transmitted; it yields the
/// `(., f)` column of the estimate. Uni mode uses the first frame and the
/// `H` receiver only.
pub fn estimate_pol_channels_fmcw(
    receiver: &BaselineReceiver,
    tx_up: &ComplexFrame,
    tx_down: &ComplexFrame,
    frames: &[FmcwFrameRx],
    mode: PolMode,
) -> Result<PolChannelEstimate> {
    let needed = match mode {
        PolMode::Uni => 1,
        PolMode::Dual => 2,
    };
    if frames.len() < needed {
        return Err(Error::InvalidParams(format!(
            "{} mode needs {needed} FMCW frames, got {}",
            mode.label(),
            frames.len()
        )));
    }
    let mut surfaces: [Option<DDSurface>; 4] = Default::default();
    for &pair in mode.pairs() {
        let frame = &frames[pair.tx.index()];
        let j = pair.rx.index();
        let up = receiver.correlate(&frame.up[j], tx_up)?;
        let down = receiver.correlate(&frame.down[j], tx_down)?;
        surfaces[pair.index()] = Some(intersect_ridges(&up, &down));
    }
    PolChannelEstimate::new(SystemKind::Fmcw, surfaces, needed, 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceStatistic {
    pub present: f64,
    pub floor: f64,
}

/// Target-bin magnitude against the RMS of every other bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionOutcome {
    pub stat_present: f64,
    pub stat_floor: f64,
    pub per_surface: [Option<SurfaceStatistic>; 4],
}

fn check_bin(s: &DDSurface, bin: (usize, i64)) -> Result<()> {
    if bin.0 >= s.m() || !s.contains(bin.0 as i64, bin.1) {
        return Err(Error::IndexOutOfRange { k: bin.0 as i64, l: bin.1, m: s.m(), n: s.n() });
    }
    Ok(())
}

/// Dual mode takes the largest target-bin magnitude over the surfaces and
/// pools every non-target bin of every surface into the floor. Uni mode
/// reads the `HH` surface only.
pub fn detection_statistic(est: &PolChannelEstimate, true_bin: (usize, i64), mode: PolMode) -> Result<DetectionOutcome> {
    let mut per_surface = [None; 4];
    let (mut present, mut floor_energy, mut floor_count) = (0.0f64, 0.0, 0usize);
    for &pair in mode.pairs() {
        let Some(s) = est.surface(pair) else { continue };
        check_bin(s, true_bin)?;
        let at = s.get(true_bin.0, true_bin.1).norm();
        let rest = s.energy() - at * at;
        let cells = s.m() * s.n() - 1;
        let rest = rest.max(0.0);
        per_surface[pair.index()] = Some(SurfaceStatistic {
            present: at,
            floor: if cells > 0 { (rest / cells as f64).sqrt() } else { 0.0 },
        });
        present = present.max(at);
        floor_energy += rest;
        floor_count += cells;
    }
    if per_surface.iter().all(Option::is_none) {
        return Err(Error::DimensionMismatch(format!(
            "estimate has no surface for {} mode",
            mode.label()
        )));
    }
    let stat_floor = if floor_count > 0 { (floor_energy / floor_count as f64).sqrt() } else { 0.0 };
    Ok(DetectionOutcome { stat_present: present, stat_floor, per_surface })
}

/// Region of interest, guard widths and false-alarm target for the
/// thresholding detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub roi: SupportBox,
    pub guards: (i64, i64),
    pub pfa: f64,
}

impl DetectorConfig {
    /// Bins covering delays `[0, tau_p / 4]` and Dopplers
    /// `[-nu_p / 8, nu_p / 8]` after rounding, guards of two bins,
    /// `P_fa = 1e-6`.
    pub fn reference(params: &ZakParams) -> Self {
        let k_max = (params.m() as f64 / 4.0).ceil() as i64;
        let l_max = (params.n() as f64 / 8.0).ceil() as i64;
        Self {
            roi: SupportBox { k_min: 0, k_max, l_min: -l_max, l_max },
            guards: (2, 2),
            pfa: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(Error::InvalidParams(format!("pfa {} outside (0, 1)", self.pfa)));
        }
        if self.guards.0 < 0 || self.guards.1 < 0 {
            return Err(Error::InvalidParams("guard widths must be non-negative".into()));
        }
        Ok(())
    }
}

/// `alpha = ln(1 / P_fa)`: for unit-mean exponential bin energies
/// `P(E > alpha mu) = exp(-alpha)`.
pub fn threshold_factor(pfa: f64) -> f64 {
    (1.0 / pfa).ln()
}

/// Signed delay representative of `k` inside `b` (delay taken modulo `m`,
/// Doppler modulo `n`), if any.
fn box_member(b: &SupportBox, k: usize, l: i64, m: usize, n: usize) -> Option<(i64, i64)> {
    let (m, n) = (m as i64, n as i64);
    let k0 = (k as i64 - b.k_min).rem_euclid(m) + b.k_min;
    let l0 = (l - b.l_min).rem_euclid(n) + b.l_min;
    (k0 <= b.k_max && l0 <= b.l_max).then_some((k0, l0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Delay bin, signed relative to the ROI.
    pub k: i64,
    pub l: i64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDetection {
    pub noise_mean: f64,
    pub threshold: f64,
    pub peak: Option<Peak>,
}

/// Mean energy of the bins outside the guarded ROI.
pub fn noise_mean(surface: &DDSurface, det: &DetectorConfig) -> Result<f64> {
    let guarded = det.roi.grown(det.guards.0, det.guards.1);
    let (mut sum, mut count) = (0.0, 0usize);
    for (k, l, v) in surface.cells() {
        if box_member(&guarded, k, l, surface.m(), surface.n()).is_none() {
            sum += v.norm_sqr();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoNoiseRegion);
    }
    Ok(sum / count as f64)
}

fn roi_cells<'a>(
    surface: &'a DDSurface,
    det: &'a DetectorConfig,
    step: i64,
) -> impl Iterator<Item = (usize, i64, i64, f64)> + 'a {
    surface.cells().filter_map(move |(k, l, v)| {
        if l.rem_euclid(step) != 0 {
            return None;
        }
        box_member(&det.roi, k, l, surface.m(), surface.n()).map(|(ks, _)| (k, l, ks, v.norm_sqr()))
    })
}

/// Threshold one surface and return the strongest above-threshold ROI bin.
pub fn surface_detection(surface: &DDSurface, det: &DetectorConfig, doppler_step: i64) -> Result<SurfaceDetection> {
    det.validate()?;
    let mu = noise_mean(surface, det)?;
    let threshold = threshold_factor(det.pfa) * mu;
    let mut best: Option<Peak> = None;
    for (_, l, ks, e) in roi_cells(surface, det, doppler_step) {
        if e > threshold && best.is_none_or(|b| e > b.energy) {
            best = Some(Peak { k: ks, l, energy: e });
        }
    }
    Ok(SurfaceDetection { noise_mean: mu, threshold, peak: best })
}

/// Per-surface thresholding and peak selection.
pub fn threshold_and_peak(est: &PolChannelEstimate, det: &DetectorConfig) -> Result<[Option<SurfaceDetection>; 4]> {
    let mut out = [None; 4];
    for (pair, s) in est.surfaces() {
        out[pair.index()] = Some(surface_detection(s, det, est.doppler_step())?);
    }
    Ok(out)
}

/// Every above-threshold local maximum inside the ROI (neighbourhood of one
/// delay bin and one Doppler step, wrapping on the grid).
pub fn detect_peaks(surface: &DDSurface, det: &DetectorConfig, doppler_step: i64) -> Result<Vec<Peak>> {
    det.validate()?;
    let threshold = threshold_factor(det.pfa) * noise_mean(surface, det)?;
    let (m, n) = (surface.m() as i64, surface.n() as i64);
    let h = surface.half_doppler();
    let energy = |k: i64, l: i64| {
        let k = k.rem_euclid(m) as usize;
        let l = (l + h).rem_euclid(n) - h;
        surface.get(k, l).norm_sqr()
    };
    let mut peaks = Vec::new();
    for (k, l, ks, e) in roi_cells(surface, det, doppler_step) {
        if e <= threshold {
            continue;
        }
        let (k, mut is_max) = (k as i64, true);
        'nb: for dk in -1..=1 {
            for dl in [-doppler_step, 0, doppler_step] {
                if (dk, dl) == (0, 0) {
                    continue;
                }
                let other = energy(k + dk, l + dl);
                // ties resolve towards the lexicographically first bin
                if other > e || (other == e && (dk, dl) < (0, 0)) {
                    is_max = false;
                    break 'nb;
                }
            }
        }
        if is_max {
            peaks.push(Peak { k: ks, l, energy: e });
        }
    }
    Ok(peaks)
}

/// `1 - H / log2(cells)` with `H` the Shannon entropy (bits) of the
/// normalized energy distribution. An all-zero surface scores 0.
pub fn entropy_weight(surface: &DDSurface) -> f64 {
    let total = surface.energy();
    let cells = surface.values().len();
    if total <= 0.0 || cells < 2 {
        return 0.0;
    }
    let h: f64 = surface
        .values()
        .iter()
        .map(|v| v.norm_sqr() / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    (1.0 - h / (cells as f64).log2()).clamp(0.0, 1.0)
}

/// Fused delay-Doppler estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub delay_bin: Option<f64>,
    pub doppler_bin: Option<f64>,
    pub raw_peaks: [Option<(i64, i64)>; 4],
    pub weights: [f64; 4],
    pub detected: bool,
}

/// Weighted average of the surfaces that produced a peak. Surfaces without
/// a peak carry no weight.
pub fn fuse_estimates(raw_peaks: [Option<(i64, i64)>; 4], weights: [f64; 4]) -> ParamEstimate {
    let (mut wsum, mut k, mut l) = (0.0, 0.0, 0.0);
    for (p, &w) in raw_peaks.iter().zip(&weights) {
        if let Some((pk, pl)) = p {
            wsum += w;
            k += w * *pk as f64;
            l += w * *pl as f64;
        }
    }
    let detected = wsum > 0.0;
    ParamEstimate {
        delay_bin: detected.then(|| k / wsum),
        doppler_bin: detected.then(|| l / wsum),
        raw_peaks,
        weights,
        detected,
    }
}

/// Thresholds every surface used by `mode`, weights them by entropy and
/// fuses the peaks.
pub fn estimate_parameters(est: &PolChannelEstimate, det: &DetectorConfig, mode: PolMode) -> Result<ParamEstimate> {
    let mut raw = [None; 4];
    let mut weights = [0.0; 4];
    for &pair in mode.pairs() {
        let Some(s) = est.surface(pair) else { continue };
        let d = surface_detection(s, det, est.doppler_step())?;
        raw[pair.index()] = d.peak.map(|p| (p.k, p.l));
        weights[pair.index()] = entropy_weight(s);
    }
    Ok(fuse_estimates(raw, weights))
}

/// Frames transmitted by a uni-polarized system: the `H` frame only.
pub fn uni_transmit(frame: &ComplexFrame) -> [ComplexFrame; 2] {
    [frame.clone(), ComplexFrame::zeros(frame.len(), frame.sample_rate)]
}
