//! Domain types shared by the waveform, channel, ambiguity and estimation
//! modules.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ZakParams;

/// Antenna polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub const BOTH: [Pol; 2] = [Pol::H, Pol::V];

    pub fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }

    pub fn other(self) -> Pol {
        match self {
            Pol::H => Pol::V,
            Pol::V => Pol::H,
        }
    }
}

/// `(receive, transmit)` polarization pair, e.g. `(V, H)` is the `VH`
/// component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolPair {
    pub rx: Pol,
    pub tx: Pol,
}

impl PolPair {
    /// `HH, HV, VH, VV`, the order used for every four-surface container.
    pub const ALL: [PolPair; 4] = [
        PolPair { rx: Pol::H, tx: Pol::H },
        PolPair { rx: Pol::H, tx: Pol::V },
        PolPair { rx: Pol::V, tx: Pol::H },
        PolPair { rx: Pol::V, tx: Pol::V },
    ];
    pub const HH: PolPair = PolPair::ALL[0];

    pub fn new(rx: Pol, tx: Pol) -> Self {
        Self { rx, tx }
    }

    pub fn index(self) -> usize {
        2 * self.rx.index() + self.tx.index()
    }

    pub fn label(self) -> &'static str {
        ["hh", "hv", "vh", "vv"][self.index()]
    }
}

/// 2 x 2 polarimetric gain, rows indexed by receive and columns by
/// transmit polarization.
pub type PolMatrix = [[Complex64; 2]; 2];

pub fn pol_entry(h: &PolMatrix, pair: PolPair) -> Complex64 {
    h[pair.rx.index()][pair.tx.index()]
}

/// A point scatterer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawPath", into = "RawPath")]
pub struct PolPath {
    pub delay_s: f64,
    pub doppler_hz: f64,
    pub gain: PolMatrix,
}

#[derive(Serialize, Deserialize)]
struct RawPath {
    delay_s: f64,
    doppler_hz: f64,
    #[serde(rename = "H")]
    h: [[f64; 2]; 4],
}

impl From<RawPath> for PolPath {
    fn from(r: RawPath) -> Self {
        let c = |i: usize| Complex64::new(r.h[i][0], r.h[i][1]);
        PolPath {
            delay_s: r.delay_s,
            doppler_hz: r.doppler_hz,
            gain: [[c(0), c(1)], [c(2), c(3)]],
        }
    }
}

impl From<PolPath> for RawPath {
    fn from(p: PolPath) -> Self {
        let g = p.gain;
        let pair = |z: Complex64| [z.re, z.im];
        RawPath {
            delay_s: p.delay_s,
            doppler_hz: p.doppler_hz,
            h: [pair(g[0][0]), pair(g[0][1]), pair(g[1][0]), pair(g[1][1])],
        }
    }
}

impl PolPath {
    pub fn new(delay_s: f64, doppler_hz: f64, gain: PolMatrix) -> Self {
        Self { delay_s, doppler_hz, gain }
    }

    /// Path sitting exactly on delay bin `k` and Doppler bin `l`.
    pub fn on_grid(params: &ZakParams, k: i64, l: i64, gain: PolMatrix) -> Self {
        Self::new(
            k as f64 * params.delay_resolution(),
            l as f64 * params.doppler_resolution(),
            gain,
        )
    }

    pub fn validate(&self, params: &ZakParams) -> Result<()> {
        if !(self.delay_s >= 0.0 && self.delay_s < params.delay_period()) {
            return Err(Error::InvalidScene(format!(
                "delay {} s outside [0, {})",
                self.delay_s,
                params.delay_period()
            )));
        }
        if !(self.doppler_hz.abs() < params.doppler_period() / 2.0) {
            return Err(Error::InvalidScene(format!(
                "Doppler {} Hz outside (-{h}, {h})",
                self.doppler_hz,
                h = params.doppler_period() / 2.0
            )));
        }
        if self.gain.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidScene("non-finite gain entry".into()));
        }
        Ok(())
    }

    /// Delay in units of `1/B`.
    pub fn delay_bins(&self, params: &ZakParams) -> f64 {
        self.delay_s * params.bandwidth()
    }

    /// Doppler in units of `1/T`.
    pub fn doppler_bins(&self, params: &ZakParams) -> f64 {
        self.doppler_hz * params.frame_duration()
    }

    /// Nearest `(k, l)` bin, delay wrapped into `[0, M)`.
    pub fn nearest_bin(&self, params: &ZakParams) -> (usize, i64) {
        let k = (self.delay_bins(params).round() as i64).rem_euclid(params.m() as i64) as usize;
        (k, self.doppler_bins(params).round() as i64)
    }
}

/// Complex baseband samples at a given rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFrame {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
}

impl ComplexFrame {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Self {
        Self { samples, sample_rate }
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.samples.iter_mut().for_each(|z| *z *= s);
        self
    }

    pub fn normalized(self) -> Self {
        let e = self.energy();
        if e > 0.0 {
            self.scaled(1.0 / e.sqrt())
        } else {
            self
        }
    }

    /// `<self, other>` with `other` conjugated.
    pub fn inner(&self, other: &ComplexFrame) -> Complex64 {
        self.samples.iter().zip(&other.samples).map(|(a, b)| a * b.conj()).sum()
    }

    pub(crate) fn check_compatible(&self, other: &ComplexFrame) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: other.len() });
        }
        if self.sample_rate != other.sample_rate {
            return Err(Error::DimensionMismatch(format!(
                "sample rates differ: {} vs {}",
                self.sample_rate, other.sample_rate
            )));
        }
        Ok(())
    }
}

/// `M x N` complex array over the fundamental delay-Doppler domain.
///
/// Rows are delay bins `k = 0..M`, columns are centred Doppler bins
/// `l = -floor(N/2)..=floor(N/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DDSurface {
    m: usize,
    n: usize,
    values: Vec<Complex64>,
}

impl DDSurface {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self { m, n, values: vec![Complex64::new(0.0, 0.0); m * n] }
    }

    pub fn for_params(params: &ZakParams) -> Self {
        Self::zeros(params.m(), params.n())
    }

    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, i64) -> Complex64) -> Self {
        let half = (n / 2) as i64;
        let mut values = Vec::with_capacity(m * n);
        for k in 0..m {
            for l in -half..=half {
                values.push(f(k, l));
            }
        }
        Self { m, n, values }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_doppler(&self) -> i64 {
        (self.n / 2) as i64
    }

    pub fn doppler_range(&self) -> std::ops::RangeInclusive<i64> {
        -self.half_doppler()..=self.half_doppler()
    }

    fn offset(&self, k: usize, l: i64) -> usize {
        let h = self.half_doppler();
        debug_assert!(k < self.m && (-h..=h).contains(&l), "bin ({k}, {l}) out of range");
        k * self.n + (l + h) as usize
    }

    pub fn get(&self, k: usize, l: i64) -> Complex64 {
        self.values[self.offset(k, l)]
    }

    pub fn set(&mut self, k: usize, l: i64, v: Complex64) {
        let i = self.offset(k, l);
        self.values[i] = v;
    }

    pub fn contains(&self, k: i64, l: i64) -> bool {
        (0..self.m as i64).contains(&k) && self.doppler_range().contains(&l)
    }

    /// Row-major values, Doppler fastest.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `(k, l, value)` for every cell.
    pub fn cells(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        let h = self.half_doppler();
        let n = self.n;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i / n, (i % n) as i64 - h, v))
    }

    pub fn add_assign(&mut self, other: &DDSurface) -> Result<()> {
        self.check_same_shape(other)?;
        self.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn scale(&mut self, s: Complex64) {
        self.values.iter_mut().for_each(|z| *z *= s);
    }

    pub fn max_abs_diff(&self, other: &DDSurface) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn check_same_shape(&self, other: &DDSurface) -> Result<()> {
        if self.m != other.m || self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.m, self.n, other.m, other.n
            )));
        }
        Ok(())
    }
}

/// Set of delay-Doppler points reduced modulo the frame length.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SupportSet {
    pub modulus: usize,
    pub points: BTreeSet<(usize, usize)>,
}

impl SupportSet {
    pub fn new(modulus: usize) -> Self {
        Self { modulus, points: BTreeSet::new() }
    }

    pub fn insert(&mut self, k: i64, l: i64) {
        let m = self.modulus as i64;
        self.points.insert((k.rem_euclid(m) as usize, l.rem_euclid(m) as usize));
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Closed integer box `[k_min, k_max] x [l_min, l_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportBox {
    pub k_min: i64,
    pub k_max: i64,
    pub l_min: i64,
    pub l_max: i64,
}

impl SupportBox {
    pub fn new(k_min: i64, k_max: i64, l_min: i64, l_max: i64) -> Result<Self> {
        if k_min > k_max || l_min > l_max {
            return Err(Error::InvalidParams(format!(
                "box bounds out of order: [{k_min}, {k_max}] x [{l_min}, {l_max}]"
            )));
        }
        Ok(Self { k_min, k_max, l_min, l_max })
    }

    pub fn delay_width(&self) -> i64 {
        self.k_max - self.k_min + 1
    }

    pub fn doppler_width(&self) -> i64 {
        self.l_max - self.l_min + 1
    }

    pub fn contains(&self, k: i64, l: i64) -> bool {
        (self.k_min..=self.k_max).contains(&k) && (self.l_min..=self.l_max).contains(&l)
    }

    pub fn grown(&self, dk: i64, dl: i64) -> Self {
        Self {
            k_min: self.k_min - dk,
            k_max: self.k_max + dk,
            l_min: self.l_min - dl,
            l_max: self.l_max + dl,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_indexing() {
        let s = DDSurface::from_fn(3, 5, |k, l| Complex64::new(k as f64, l as f64));
        assert_eq!(s.get(2, -2), Complex64::new(2.0, -2.0));
        assert_eq!(s.get(0, 2), Complex64::new(0.0, 2.0));
        let cells: Vec<_> = s.cells().collect();
        assert_eq!(cells.len(), 15);
        assert!(cells.iter().all(|&(k, l, v)| v == Complex64::new(k as f64, l as f64)));
        assert!(s.contains(2, 2) && !s.contains(3, 0) && !s.contains(0, 3));
    }

    #[test]
    fn pol_pair_order() {
        for (i, p) in PolPair::ALL.iter().enumerate() {
            assert_eq!(p.index(), i);
        }
        assert_eq!(PolPair::new(Pol::V, Pol::H).label(), "vh");
    }

    #[test]
    fn path_json_schema() {
        let json = r#"{"delay_s":1e-6,"doppler_hz":-250.0,"H":[[1,0],[0,0.5],[0,0.5],[0,-1]]}"#;
        let p: PolPath = serde_json::from_str(json).unwrap();
        assert_eq!(p.gain[0][0], Complex64::new(1.0, 0.0));
        assert_eq!(p.gain[1][0], Complex64::new(0.0, 0.5));
        assert_eq!(p.gain[1][1], Complex64::new(0.0, -1.0));
        let back: PolPath = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn path_validation() {
        let p = ZakParams::reference();
        let g = [[Complex64::new(1.0, 0.0); 2]; 2];
        assert!(PolPath::new(0.0, 0.0, g).validate(&p).is_ok());
        assert!(PolPath::new(p.delay_period(), 0.0, g).validate(&p).is_err());
        assert!(PolPath::new(0.0, p.doppler_period() / 2.0, g).validate(&p).is_err());
        let mut bad = g;
        bad[0][1] = Complex64::new(f64::NAN, 0.0);
        assert!(PolPath::new(0.0, 0.0, bad).validate(&p).is_err());
    }

    #[test]
    fn box_bounds() {
        assert!(SupportBox::new(3, 2, 0, 0).is_err());
        let b = SupportBox::new(0, 7, -4, 4).unwrap();
        assert_eq!((b.delay_width(), b.doppler_width()), (8, 9));
    }

    #[test]
    fn support_set_reduces() {
        let mut s = SupportSet::new(15);
        s.insert(-1, 16);
        assert!(s.points.contains(&(14, 1)));
    }
}
