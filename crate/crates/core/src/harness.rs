//! Seeded Monte Carlo runs, ROC and RMSE aggregation, the four-target
//! heatmap scene and CSV export.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambiguity::FastAmbiguity;
use crate::channel::{
    add_noise, apply_pol_channel, draw_polar_response, draw_target_geometry, BernoulliSupport, PulseShape, SceneSpec,
};
use crate::error::{Error, Result};
use crate::estimation::{
    detect_peaks, detection_statistic, estimate_parameters, estimate_pol_channels_fmcw,
    estimate_pol_channels_phase_coded, estimate_pol_channels_zak, uni_transmit, BaselineReceiver, DetectionOutcome,
    DetectorConfig, FmcwFrameRx, ParamEstimate, Peak, PolChannelEstimate, PolMode, SystemKind,
};
use crate::params::{GdaftParams, ZakParams};
use crate::types::{pol_entry, ComplexFrame, PolMatrix, PolPair, PolPath, SupportBox};
use crate::waveform::{fmcw_frame, phase_coded_frame, pulsone, spread_carrier, zadoff_chu};

/// Everything a Monte Carlo or heatmap run depends on. Missing JSON fields
/// take the [`Default`] values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemKind,
    pub polarization: PolMode,
    pub snr_db: Vec<f64>,
    /// Trials per SNR; each trial yields one target-present and one
    /// target-absent record.
    pub trials: usize,
    pub seed: u64,
    pub params: ZakParams,
    pub gdaft: GdaftParams,
    /// Zadoff-Chu roots of the `H` and `V` phase codes.
    pub zc_roots: [i64; 2],
    pub pfa: f64,
    pub guards: (i64, i64),
    /// Region of interest in bins; `None` is the reference region
    /// `[0, ceil(M/4)] x [-ceil(N/8), ceil(N/8)]`.
    pub roi: Option<SupportBox>,
    /// Baseline sampling rate in multiples of `B`.
    pub oversample: usize,
    pub bernoulli: BernoulliSupport,
    pub pulse_shape: PulseShape,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemKind::Zak,
            polarization: PolMode::Dual,
            snr_db: vec![0.0, 10.0, 20.0],
            trials: 2000,
            seed: 2024,
            params: ZakParams::reference(),
            gdaft: GdaftParams { a: 1, b: 1, c: 3 },
            zc_roots: [101, 107],
            pfa: 1e-6,
            guards: (2, 2),
            roi: None,
            oversample: 2,
            bernoulli: BernoulliSupport::Symmetric,
            pulse_shape: PulseShape::default(),
            threads: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn detector(&self) -> DetectorConfig {
        let mut det = DetectorConfig::reference(&self.params);
        if let Some(roi) = self.roi {
            det.roi = roi;
        }
        det.guards = self.guards;
        det.pfa = self.pfa;
        det
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("snr_db list is empty".into()));
        }
        if let Some(s) = self.snr_db.iter().find(|s| s.is_nan()) {
            return Err(Error::Config(format!("SNR {s} is not a number")));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.oversample == 0 {
            return Err(Error::Config("oversample must be at least 1".into()));
        }
        if self.zc_roots[0] == self.zc_roots[1] {
            return Err(Error::Config("the two Zadoff-Chu roots must differ".into()));
        }
        self.gdaft.validate(self.params.frame_len())?;
        if !self.gdaft.is_unbiased(self.params.n()) {
            return Err(Error::Config(format!(
                "GDAFT ({}, {}, {}): 4AC - B^2 shares a factor with N = {}, so the spread carrier is not unbiased to the pulsone",
                self.gdaft.a, self.gdaft.b, self.gdaft.c, self.params.n()
            )));
        }
        self.pulse_shape.validate()?;
        self.detector().validate()
    }
}

enum Kit {
    Zak { engine: FastAmbiguity, tx: [ComplexFrame; 2] },
    PhaseCoded { receiver: BaselineReceiver, tx: [ComplexFrame; 2] },
    Fmcw { receiver: BaselineReceiver, up: ComplexFrame, down: ComplexFrame },
}

/// Precomputed transmit frames and receiver for one system and
/// polarization mode.
pub struct SystemKit {
    params: ZakParams,
    system: SystemKind,
    mode: PolMode,
    shape: PulseShape,
    kit: Kit,
}

impl SystemKit {
    pub fn new(cfg: &RunConfig, system: SystemKind, mode: PolMode) -> Result<Self> {
        let p = cfg.params;
        let tx_pair = |h: ComplexFrame, v: ComplexFrame| match mode {
            PolMode::Dual => [h, v],
            PolMode::Uni => uni_transmit(&h),
        };
        let kit = match system {
            SystemKind::Zak => Kit::Zak {
                engine: FastAmbiguity::new(p.frame_len()),
                tx: tx_pair(pulsone(&p, 0, 0)?, spread_carrier(&p, &cfg.gdaft, 0, 0)?),
            },
            SystemKind::PhaseCoded => {
                let code = |root| -> Result<ComplexFrame> {
                    phase_coded_frame(&p, &zadoff_chu(p.frame_len(), root)?, cfg.oversample)
                };
                Kit::PhaseCoded {
                    receiver: BaselineReceiver::phase_coded(&p, cfg.oversample)?,
                    tx: tx_pair(code(cfg.zc_roots[0])?, code(cfg.zc_roots[1])?),
                }
            }
            SystemKind::Fmcw => {
                let (up, down) = fmcw_frame(&p, cfg.oversample)?;
                Kit::Fmcw { receiver: BaselineReceiver::fmcw_half(&p, cfg.oversample)?, up, down }
            }
        };
        let shape = match system {
            SystemKind::PhaseCoded => PulseShape::RectChip,
            _ => cfg.pulse_shape,
        };
        Ok(Self { params: p, system, mode, shape, kit })
    }

    pub fn system(&self) -> SystemKind {
        self.system
    }

    pub fn mode(&self) -> PolMode {
        self.mode
    }

    /// A frame carries unit energy, split evenly over its bursts (two chirp
    /// halves for FMCW). Burst waveforms are stored with unit energy, so the
    /// noise is raised instead: a matched-filter bin sees variance
    /// `bursts / (M N snr)` whatever the sampling rate.
    fn noisy(&self, y: [ComplexFrame; 2], snr_db: f64, rng: &mut ChaCha8Rng) -> [ComplexFrame; 2] {
        let grid = self.params.frame_len() as f64;
        let bursts = match self.kit {
            Kit::Fmcw { .. } => 2.0,
            _ => 1.0,
        };
        y.map(|f| {
            let reference = bursts * f.len() as f64 / grid;
            add_noise(&f, snr_db, reference, rng)
        })
    }

    /// Propagates through `scene`, adds noise and estimates the channel
    /// surfaces.
    pub fn estimate(&self, scene: &SceneSpec, snr_db: f64, rng: &mut ChaCha8Rng) -> Result<PolChannelEstimate> {
        let p = &self.params;
        match &self.kit {
            Kit::Zak { engine, tx } => {
                let y = self.noisy(apply_pol_channel(p, [&tx[0], &tx[1]], scene, self.shape)?, snr_db, rng);
                estimate_pol_channels_zak(p, engine, [&y[0], &y[1]], [&tx[0], &tx[1]], self.mode)
            }
            Kit::PhaseCoded { receiver, tx } => {
                let y = self.noisy(apply_pol_channel(p, [&tx[0], &tx[1]], scene, self.shape)?, snr_db, rng);
                estimate_pol_channels_phase_coded(receiver, [&y[0], &y[1]], [&tx[0], &tx[1]], self.mode)
            }
            Kit::Fmcw { receiver, up, down } => {
                let frames = match self.mode {
                    PolMode::Uni => 1,
                    PolMode::Dual => 2,
                };
                let silent = ComplexFrame::zeros(up.len(), up.sample_rate);
                let mut rx = Vec::with_capacity(frames);
                for t in 0..frames {
                    let on = |x: &ComplexFrame| -> Result<[ComplexFrame; 2]> {
                        let tx = if t == 0 { [x, &silent] } else { [&silent, x] };
                        apply_pol_channel(p, tx, scene, self.shape)
                    };
                    let u = self.noisy(on(up)?, snr_db, rng);
                    let d = self.noisy(on(down)?, snr_db, rng);
                    rx.push(FmcwFrameRx { up: u, down: d });
                }
                estimate_pol_channels_fmcw(receiver, up, down, &rx, self.mode)
            }
        }
    }
}

const PURPOSE_SCENE: u64 = 0;
const PURPOSE_NOISE_PRESENT: u64 = 1;
const PURPOSE_NOISE_ABSENT: u64 = 2;
const PURPOSE_HEATMAP: u64 = 3;

/// Independent stream for one `(SNR index, trial, purpose)` triple. Streams
/// do not depend on the system, so every system sees the same scenes.
pub fn trial_rng(seed: u64, snr_idx: usize, trial: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_idx as u64) << 40) | ((trial as u64) << 2) | purpose);
    rng
}

/// Outcome of one hypothesis of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub snr_db: f64,
    pub present: bool,
    pub tau_true_s: Option<f64>,
    pub nu_true_hz: Option<f64>,
    pub h: Option<PolMatrix>,
    /// Bin at which the detection statistic is read; the absent record of
    /// a trial reuses the present record's bin.
    pub eval_bin: (usize, i64),
    pub outcome: DetectionOutcome,
    pub estimate: ParamEstimate,
}

fn run_trial(kit: &SystemKit, cfg: &RunConfig, det: &DetectorConfig, snr_idx: usize, trial: usize) -> Result<[TrialRecord; 2]> {
    let snr_db = cfg.snr_db[snr_idx];
    let mut rng = trial_rng(cfg.seed, snr_idx, trial, PURPOSE_SCENE);
    let (tau, nu) = draw_target_geometry(&mut rng, &cfg.params);
    let h = draw_polar_response(&mut rng, cfg.bernoulli);
    let path = PolPath::new(tau, nu, h);
    let bin = path.nearest_bin(&cfg.params);
    let record = |scene: &SceneSpec, purpose: u64| -> Result<TrialRecord> {
        let mut rng = trial_rng(cfg.seed, snr_idx, trial, purpose);
        let est = kit.estimate(scene, snr_db, &mut rng)?;
        let present = !scene.paths.is_empty();
        Ok(TrialRecord {
            trial,
            snr_db,
            present,
            tau_true_s: present.then_some(tau),
            nu_true_hz: present.then_some(nu),
            h: present.then_some(h),
            eval_bin: bin,
            outcome: detection_statistic(&est, bin, kit.mode())?,
            estimate: estimate_parameters(&est, det, kit.mode())?,
        })
    };
    Ok([
        record(&SceneSpec::single(path), PURPOSE_NOISE_PRESENT)?,
        record(&SceneSpec::empty(), PURPOSE_NOISE_ABSENT)?,
    ])
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs `cfg.trials` trials at every SNR. Records come back ordered by SNR,
/// then trial, then hypothesis (present first), independent of scheduling.
pub fn run_monte_carlo(cfg: &RunConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let kit = SystemKit::new(cfg, cfg.system, cfg.polarization)?;
    let det = cfg.detector();
    let tasks: Vec<(usize, usize)> = (0..cfg.snr_db.len())
        .flat_map(|s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    let pairs = with_threads(cfg.threads, || {
        tasks
            .par_iter()
            .map(|&(s, t)| {
                run_trial(&kit, cfg, &det, s, t).map_err(|e| Error::Trial {
                    trial: t,
                    snr_db: cfg.snr_db[s],
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(pairs.into_iter().flatten().collect())
}

/// Flat CSV row; column order is the file schema.
#[derive(Serialize)]
struct CsvRow {
    trial: usize,
    snr_db: f64,
    hypothesis: &'static str,
    tau_true_s: Option<f64>,
    nu_true_hz: Option<f64>,
    stat_present: f64,
    stat_floor: f64,
    detected: u8,
    k_hat: Option<f64>,
    l_hat: Option<f64>,
    w_hh: f64,
    w_hv: f64,
    w_vh: f64,
    w_vv: f64,
}

pub fn write_records_csv<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        let wt = r.estimate.weights;
        w.serialize(CsvRow {
            trial: r.trial,
            snr_db: r.snr_db,
            hypothesis: if r.present { "present" } else { "absent" },
            tau_true_s: r.tau_true_s,
            nu_true_hz: r.nu_true_hz,
            stat_present: r.outcome.stat_present,
            stat_floor: r.outcome.stat_floor,
            detected: r.estimate.detected as u8,
            k_hat: r.estimate.delay_bin,
            l_hat: r.estimate.doppler_bin,
            w_hh: wt[0],
            w_hv: wt[1],
            w_vh: wt[2],
            w_vv: wt[3],
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Detection-rate versus false-alarm-rate curve, from `(0, 0)` to `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps a threshold down through every distinct score. Tied scores move
/// the curve diagonally, so the trapezoidal area counts ties as one half.
pub fn roc_from_scores(positives: &[f64], negatives: &[f64]) -> Result<RocCurve> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::SingleHypothesis);
    }
    let mut scored: Vec<(f64, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (np, nn) = (positives.len() as f64, negatives.len() as f64);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut points = vec![(0.0, 0.0)];
    let mut auc = 0.0;
    let mut i = 0;
    while i < scored.len() {
        let s = scored[i].0;
        while i < scored.len() && scored[i].0.total_cmp(&s).is_eq() {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (x0, y0) = *points.last().expect("curve starts at the origin");
        let pt = (fp as f64 / nn, tp as f64 / np);
        auc += (pt.0 - x0) * (pt.1 + y0) / 2.0;
        points.push(pt);
    }
    Ok(RocCurve { points, auc })
}

/// Positives are the target-bin statistics of target-present records,
/// negatives those of target-absent records.
pub fn roc_curve(records: &[TrialRecord]) -> Result<RocCurve> {
    let pick = |present: bool| -> Vec<f64> {
        records
            .iter()
            .filter(|r| r.present == present)
            .map(|r| r.outcome.stat_present)
            .collect()
    };
    roc_from_scores(&pick(true), &pick(false))
}

/// Distinct SNRs in order of first appearance.
fn snr_levels(records: &[TrialRecord]) -> Vec<f64> {
    let mut seen = BTreeSet::new();
    records
        .iter()
        .map(|r| r.snr_db)
        .filter(|s| seen.insert(s.to_bits()))
        .collect()
}

/// One curve per SNR.
pub fn roc_by_snr(records: &[TrialRecord]) -> Result<Vec<(f64, RocCurve)>> {
    snr_levels(records)
        .into_iter()
        .map(|s| {
            let subset: Vec<TrialRecord> = records.iter().filter(|r| r.snr_db == s).cloned().collect();
            Ok((s, roc_curve(&subset)?))
        })
        .collect()
}

/// Fraction of target-present records whose target-bin statistic exceeds
/// the floor of the same estimate.
pub fn separation_rate(records: &[TrialRecord]) -> Option<f64> {
    let present: Vec<&TrialRecord> = records.iter().filter(|r| r.present).collect();
    if present.is_empty() {
        return None;
    }
    let above = present
        .iter()
        .filter(|r| r.outcome.stat_present > r.outcome.stat_floor)
        .count();
    Some(above as f64 / present.len() as f64)
}

/// Estimation error per SNR, in delay bins (`1/B`) and Doppler bins
/// (`1/T`). Missed detections are excluded from the RMSE and counted in
/// `miss_rate`; with no detections the RMSE is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub snr_db: f64,
    pub present_trials: usize,
    pub detections: usize,
    pub miss_rate: f64,
    pub delay_rmse: Option<f64>,
    pub doppler_rmse: Option<f64>,
}

pub fn rmse_curves(records: &[TrialRecord], params: &ZakParams) -> Vec<RmseRow> {
    snr_levels(records)
        .into_iter()
        .filter_map(|s| {
            let present: Vec<&TrialRecord> = records.iter().filter(|r| r.present && r.snr_db == s).collect();
            if present.is_empty() {
                return None;
            }
            let (mut dk2, mut dl2, mut hits) = (0.0, 0.0, 0usize);
            for r in &present {
                let e = &r.estimate;
                if let (true, Some(k), Some(l), Some(tau), Some(nu)) =
                    (e.detected, e.delay_bin, e.doppler_bin, r.tau_true_s, r.nu_true_hz)
                {
                    dk2 += (k - tau * params.bandwidth()).powi(2);
                    dl2 += (l - nu * params.frame_duration()).powi(2);
                    hits += 1;
                }
            }
            let rmse = |sq: f64| (hits > 0).then(|| (sq / hits as f64).sqrt());
            Some(RmseRow {
                snr_db: s,
                present_trials: present.len(),
                detections: hits,
                miss_rate: 1.0 - hits as f64 / present.len() as f64,
                delay_rmse: rmse(dk2),
                doppler_rmse: rmse(dl2),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct RocRow {
    snr_db: String,
    false_alarm_rate: f64,
    detection_rate: f64,
}

#[derive(Serialize)]
struct AucRow {
    snr_db: String,
    auc: f64,
}

/// Writes `records.csv`, `roc.csv`, `auc.csv` and `rmse.csv` into `dir`.
/// ROC rows carry an SNR or `pooled`.
pub fn write_run_outputs(dir: &Path, records: &[TrialRecord], params: &ZakParams) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let records_path = dir.join("records.csv");
    write_records_csv(std::fs::File::create(&records_path)?, records)?;

    let mut curves: Vec<(String, RocCurve)> = roc_by_snr(records)?
        .into_iter()
        .map(|(s, c)| (s.to_string(), c))
        .collect();
    curves.push(("pooled".to_string(), roc_curve(records)?));
    let roc_path = dir.join("roc.csv");
    let mut w = csv::Writer::from_path(&roc_path).map_err(csv_error)?;
    for (label, c) in &curves {
        for &(fa, pd) in &c.points {
            w.serialize(RocRow { snr_db: label.clone(), false_alarm_rate: fa, detection_rate: pd })
                .map_err(csv_error)?;
        }
    }
    w.flush()?;
    let auc_path = dir.join("auc.csv");
    let mut w = csv::Writer::from_path(&auc_path).map_err(csv_error)?;
    for (label, c) in &curves {
        w.serialize(AucRow { snr_db: label.clone(), auc: c.auc }).map_err(csv_error)?;
    }
    w.flush()?;

    let rmse_path = dir.join("rmse.csv");
    let mut w = csv::Writer::from_path(&rmse_path).map_err(csv_error)?;
    for row in rmse_curves(records, params) {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(vec![records_path, roc_path, auc_path, rmse_path])
}

/// Two co-polar targets of gain 0.7 and two cross-polar targets of gain
/// 0.95 and 0.3 (`HV = VH`), all on grid inside the reference region.
pub fn four_target_scene(params: &ZakParams) -> SceneSpec {
    use num_complex::Complex64;
    let z = Complex64::new(0.0, 0.0);
    let co = |g: f64| [[Complex64::new(g, 0.0), z], [z, z]];
    let cross = |g: f64| [[z, Complex64::new(g, 0.0)], [Complex64::new(g, 0.0), z]];
    SceneSpec {
        paths: vec![
            PolPath::on_grid(params, 2, -1, co(0.7)),
            PolPath::on_grid(params, 6, 1, co(0.7)),
            PolPath::on_grid(params, 1, 3, cross(0.95)),
            PolPath::on_grid(params, 5, -3, cross(0.3)),
        ],
        rng_seed: None,
    }
}

/// Peak bookkeeping against the scene for one system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PeakTally {
    /// Scene paths.
    pub targets: usize,
    /// Scene paths matched by a peak in at least one surface where they
    /// have nonzero gain.
    pub targets_found: usize,
    /// Peaks matched to a path of their own surface.
    pub true_peaks: usize,
    /// Peaks not within one bin of any path of their surface.
    pub false_peaks: usize,
    /// `(path, surface)` pairs with nonzero gain but no matching peak.
    pub missed: usize,
}

/// One noisy dual-polarized frame of a scene, its surfaces and peaks.
#[derive(Debug, Clone)]
pub struct Heatmap {
    pub system: SystemKind,
    pub estimate: PolChannelEstimate,
    pub peaks: [Vec<Peak>; 4],
    pub tally: PeakTally,
}

/// Greedy matching of peaks to the paths of each surface, tolerance one
/// bin in delay and Doppler.
pub fn tally_peaks(peaks: &[Vec<Peak>; 4], scene: &SceneSpec, params: &ZakParams) -> PeakTally {
    let bins: Vec<(i64, i64)> = scene
        .paths
        .iter()
        .map(|p| {
            let (k, l) = p.nearest_bin(params);
            (k as i64, l)
        })
        .collect();
    let mut found = vec![false; bins.len()];
    let mut tally = PeakTally { targets: bins.len(), ..Default::default() };
    for pair in PolPair::ALL {
        let live: Vec<usize> = (0..bins.len())
            .filter(|&i| pol_entry(&scene.paths[i].gain, pair).norm() > 0.0)
            .collect();
        let mut matched = vec![false; live.len()];
        for pk in &peaks[pair.index()] {
            let best = live
                .iter()
                .enumerate()
                .filter(|&(j, &i)| !matched[j] && (pk.k - bins[i].0).abs() <= 1 && (pk.l - bins[i].1).abs() <= 1)
                .min_by_key(|&(_, &i)| (pk.k - bins[i].0).abs() + (pk.l - bins[i].1).abs());
            match best {
                Some((j, &i)) => {
                    matched[j] = true;
                    found[i] = true;
                    tally.true_peaks += 1;
                }
                None => tally.false_peaks += 1,
            }
        }
        tally.missed += matched.iter().filter(|m| !**m).count();
    }
    tally.targets_found = found.iter().filter(|f| **f).count();
    tally
}

/// Runs one noisy dual-polarized frame of `scene` through every system at
/// `snr_db`. All systems draw their noise from the same stream.
pub fn heatmap_scenario(cfg: &RunConfig, scene: &SceneSpec, snr_db: f64) -> Result<Vec<Heatmap>> {
    cfg.validate()?;
    let det = cfg.detector();
    SystemKind::ALL
        .iter()
        .map(|&system| {
            let kit = SystemKit::new(cfg, system, PolMode::Dual)?;
            let mut rng = trial_rng(cfg.seed, 0, 0, PURPOSE_HEATMAP);
            let estimate = kit.estimate(scene, snr_db, &mut rng)?;
            let mut peaks: [Vec<Peak>; 4] = Default::default();
            for (pair, s) in estimate.surfaces() {
                peaks[pair.index()] = detect_peaks(s, &det, estimate.doppler_step())?;
            }
            let tally = tally_peaks(&peaks, scene, &cfg.params);
            Ok(Heatmap { system, estimate, peaks, tally })
        })
        .collect()
}

#[derive(Serialize)]
struct PeakRow {
    system: &'static str,
    surface: &'static str,
    k: i64,
    l: i64,
    energy: f64,
}

/// Writes `<system>_<pair>.csv` energy matrices (`M` rows, `N` columns,
/// Doppler ascending from `-(N-1)/2`) and a `peaks.csv` listing.
pub fn write_heatmaps(dir: &Path, maps: &[Heatmap]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for map in maps {
        for (pair, s) in map.estimate.surfaces() {
            let path = dir.join(format!("{}_{}.csv", map.system.label(), pair.label()));
            let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&path).map_err(csv_error)?;
            for k in 0..s.m() {
                let row: Vec<f64> = s.doppler_range().map(|l| s.get(k, l).norm_sqr()).collect();
                w.serialize(row).map_err(csv_error)?;
            }
            w.flush()?;
            written.push(path);
        }
    }
    let path = dir.join("peaks.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_error)?;
    for map in maps {
        for pair in PolPair::ALL {
            for pk in &map.peaks[pair.index()] {
                w.serialize(PeakRow {
                    system: map.system.label(),
                    surface: pair.label(),
                    k: pk.k,
                    l: pk.l,
                    energy: pk.energy,
                })
                .map_err(csv_error)?;
            }
        }
    }
    w.flush()?;
    written.push(path);
    Ok(written)
}

/// One line of the self-test report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, value: f64, tol: f64) -> Check {
    Check { name: name.into(), passed: value <= tol, detail: format!("{value:.3e} <= {tol:.0e}") }
}

fn random_frame(rng: &mut ChaCha8Rng, len: usize) -> ComplexFrame {
    use rand_distr::{Distribution, StandardNormal};
    let samples = (0..len)
        .map(|_| num_complex::Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    ComplexFrame::new(samples, 1.0).normalized()
}

/// Quick oracle comparisons: closed-form spread carrier against the direct
/// transform of a pulsone, mutual unbiasedness on a small grid, fast
/// against direct cross-ambiguity, and the pulsone lattice and its
/// crystallization on the reference grid.
pub fn self_test() -> Result<Vec<Check>> {
    use crate::ambiguity::{ambiguity_torus, cross_ambiguity_direct, crystallization_check, self_ambiguity_support};
    use crate::waveform::gdaft_direct;

    let mut out = Vec::new();
    let small = ZakParams::new(3, 5, 0.25, 4.0)?;
    let g = GdaftParams::default();
    let mut worst: f64 = 0.0;
    for k0 in 0..3 {
        for l0 in 0..5 {
            let a = spread_carrier(&small, &g, k0, l0)?;
            let b = gdaft_direct(&small, &g, &pulsone(&small, k0, l0)?)?;
            for (u, v) in a.samples.iter().zip(&b.samples) {
                worst = worst.max((u - v).norm());
            }
        }
    }
    out.push(check("spread carrier = transformed pulsone (3 x 5)", worst, 1e-9));

    let c = spread_carrier(&small, &g, 0, 0)?;
    let p0 = pulsone(&small, 0, 0)?;
    let torus = ambiguity_torus(&c, &p0)?;
    let root = (small.frame_len() as f64).sqrt();
    let mut worst: f64 = 0.0;
    for k in 0..small.frame_len() as i64 {
        for l in 0..small.frame_len() as i64 {
            worst = worst.max((torus.get(k, l).norm() * root - 1.0).abs());
        }
    }
    out.push(check("mutual unbiasedness (3 x 5)", worst, 1e-9));

    let p = ZakParams::reference();
    let len = p.frame_len();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let engine = FastAmbiguity::new(len);
    let delays = [0usize, 1, 30, 573, 1146];
    let dopplers: Vec<i64> = (0..len as i64).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let (y, x) = (random_frame(&mut rng, len), random_frame(&mut rng, len));
        let fast = engine.rows(&y, &x, &delays)?;
        let direct = cross_ambiguity_direct(&y, &x, &delays, &dopplers)?;
        for (rf, rd) in fast.iter().zip(&direct) {
            for (u, v) in rf.iter().zip(rd) {
                worst = worst.max((u - v).norm());
            }
        }
    }
    out.push(check("fast = direct cross-ambiguity (L = 1147)", worst, 1e-9));

    let support = self_ambiguity_support(&pulsone(&p, 0, 0)?, 1e-9)?;
    let lattice = support.len() == p.n() * p.m()
        && support.points.iter().all(|&(k, l)| k % p.m() == 0 && l % p.n() == 0);
    out.push(Check {
        name: "pulsone self-ambiguity support is the period lattice".into(),
        passed: lattice,
        detail: format!("{} points", support.len()),
    });
    let roi = SupportBox::new(0, 7, -4, 4)?;
    let holds = crystallization_check(&support, &roi).holds;
    out.push(Check {
        name: "crystallization holds on [0,7] x [-4,4]".into(),
        passed: holds,
        detail: format!("holds = {holds}"),
    });
    Ok(out)
}
