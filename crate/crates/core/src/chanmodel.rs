//! Multipath channel realizations and their frequency response on the tone
//! grid.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, mismatch, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One entry of a power-delay profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileTap {
    pub delay_s: f64,
    pub power: f64,
}

/// Mean tap powers and delays of the multipath channel, normalized to unit
/// total power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerDelayProfile {
    taps: Vec<ProfileTap>,
}

impl PowerDelayProfile {
    /// Validates `taps` as given. Powers must already sum to one.
    pub fn new(taps: Vec<ProfileTap>) -> Result<Self> {
        Self::validate(&taps)?;
        let total: f64 = taps.iter().map(|t| t.power).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("tap powers sum to {total}, expected 1")));
        }
        Ok(Self { taps })
    }

    /// Like [`PowerDelayProfile::new`] but rescales the powers to sum to one.
    pub fn normalized(mut taps: Vec<ProfileTap>) -> Result<Self> {
        Self::validate(&taps)?;
        let total: f64 = taps.iter().map(|t| t.power).sum();
        for t in &mut taps {
            t.power /= total;
        }
        Ok(Self { taps })
    }

    /// `n_taps` taps spaced `spacing_s` apart with powers decaying as
    /// `exp(-delay / decay_s)`.
    pub fn exponential(n_taps: usize, spacing_s: f64, decay_s: f64) -> Result<Self> {
        if !(spacing_s > 0.0 && decay_s > 0.0) {
            return Err(invalid("tap spacing and decay constant must be positive"));
        }
        let taps = (0..n_taps)
            .map(|l| {
                let delay_s = l as f64 * spacing_s;
                ProfileTap {
                    delay_s,
                    power: (-delay_s / decay_s).exp(),
                }
            })
            .collect();
        Self::normalized(taps)
    }

    fn validate(taps: &[ProfileTap]) -> Result<()> {
        if taps.is_empty() {
            return Err(invalid("power-delay profile has no taps"));
        }
        for (l, t) in taps.iter().enumerate() {
            if !(t.power > 0.0 && t.power.is_finite()) {
                return Err(invalid(format!("tap {l} has non-positive power {}", t.power)));
            }
            if !(t.delay_s >= 0.0 && t.delay_s.is_finite()) {
                return Err(invalid(format!("tap {l} has invalid delay {}", t.delay_s)));
            }
            if l > 0 && t.delay_s <= taps[l - 1].delay_s {
                return Err(invalid("tap delays must be strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn taps(&self) -> &[ProfileTap] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

impl Default for PowerDelayProfile {
    /// 18 taps, 10 ns apart, 50 ns exponential decay.
    fn default() -> Self {
        Self::exponential(18, 10e-9, 50e-9).expect("default profile is valid")
    }
}

/// A drawn multipath component: delay, complex gain `α e^{jξ}` and departure
/// angle relative to the array axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub delay_s: f64,
    pub gain: Complex64,
    pub departure_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TapSet {
    pub paths: Vec<Path>,
}

impl TapSet {
    /// Concatenation of two path sets.
    pub fn union(&self, other: &TapSet) -> TapSet {
        let mut paths = self.paths.clone();
        paths.extend_from_slice(&other.paths);
        TapSet { paths }
    }
}

/// Draws independent zero-mean circularly symmetric complex Gaussian gains
/// with variances given by the profile, and uniform departure angles.
pub fn sample_taps(pdp: &PowerDelayProfile, seed: u64) -> TapSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_taps_with(pdp, &mut rng)
}

pub fn sample_taps_with<R: Rng + ?Sized>(pdp: &PowerDelayProfile, rng: &mut R) -> TapSet {
    let paths = pdp
        .taps()
        .iter()
        .map(|t| {
            let scale = (t.power / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Path {
                delay_s: t.delay_s,
                gain: Complex64::new(scale * re, scale * im),
                departure_angle: rng.random_range(0.0..PI),
            }
        })
        .collect();
    TapSet { paths }
}

/// Evenly spaced tones `f_n = f0 + n Δf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneGrid {
    n_tones: usize,
    base_hz: f64,
    spacing_hz: f64,
}

impl ToneGrid {
    pub fn new(n_tones: usize, base_hz: f64, spacing_hz: f64) -> Result<Self> {
        if n_tones == 0 {
            return Err(invalid("tone grid needs at least one tone"));
        }
        if !(base_hz > 0.0 && spacing_hz > 0.0) {
            return Err(invalid("tone frequencies and spacing must be positive"));
        }
        Ok(Self {
            n_tones,
            base_hz,
            spacing_hz,
        })
    }

    /// `n_tones` tones spread over `bandwidth_hz` (Δf = B/N) and centered on
    /// `center_hz`.
    pub fn centered(n_tones: usize, center_hz: f64, bandwidth_hz: f64) -> Result<Self> {
        if n_tones == 0 || !(bandwidth_hz > 0.0) {
            return Err(invalid("tone grid needs N >= 1 and positive bandwidth"));
        }
        let spacing = bandwidth_hz / n_tones as f64;
        let base = center_hz - 0.5 * (n_tones as f64 - 1.0) * spacing;
        Self::new(n_tones, base, spacing)
    }

    pub fn n_tones(&self) -> usize {
        self.n_tones
    }

    pub fn base_hz(&self) -> f64 {
        self.base_hz
    }

    pub fn spacing_hz(&self) -> f64 {
        self.spacing_hz
    }

    pub fn tone_hz(&self, n: usize) -> f64 {
        self.base_hz + n as f64 * self.spacing_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrayGeometry {
    Single,
    UniformLinear { n_antennas: usize, spacing_m: f64 },
}

impl ArrayGeometry {
    /// ULA with half-wavelength spacing at the lowest tone of `grid`.
    pub fn half_wavelength(n_antennas: usize, grid: &ToneGrid) -> Self {
        if n_antennas <= 1 {
            return ArrayGeometry::Single;
        }
        ArrayGeometry::UniformLinear {
            n_antennas,
            spacing_m: 0.5 * SPEED_OF_LIGHT / grid.tone_hz(0),
        }
    }

    pub fn n_antennas(&self) -> usize {
        match *self {
            ArrayGeometry::Single => 1,
            ArrayGeometry::UniformLinear { n_antennas, .. } => n_antennas,
        }
    }

    fn validate(&self) -> Result<()> {
        if let ArrayGeometry::UniformLinear {
            n_antennas,
            spacing_m,
        } = *self
        {
            if n_antennas == 0 {
                return Err(invalid("array needs at least one antenna"));
            }
            if n_antennas > 1 && !(spacing_m > 0.0) {
                return Err(invalid("ULA element spacing must be positive"));
            }
        }
        Ok(())
    }
}

/// Complex gains `h[(n, m)]` on an N-tone by M-antenna grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFreqResponse {
    h: DMatrix<Complex64>,
}

impl ChannelFreqResponse {
    pub fn from_matrix(h: DMatrix<Complex64>) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(invalid("channel must have at least one tone and one antenna"));
        }
        if h.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("channel has non-finite entries"));
        }
        Ok(Self { h })
    }

    pub fn n_tones(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_antennas(&self) -> usize {
        self.h.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    pub fn at(&self, n: usize, m: usize) -> Complex64 {
        self.h[(n, m)]
    }

    /// `A_{n,m} = |h_{n,m}|`.
    pub fn amplitude(&self, n: usize, m: usize) -> f64 {
        self.h[(n, m)].norm()
    }

    /// `arg(h_{n,m})`.
    pub fn phase(&self, n: usize, m: usize) -> f64 {
        self.h[(n, m)].arg()
    }

    pub fn amplitudes(&self) -> DMatrix<f64> {
        self.h.map(|z| z.norm())
    }

    /// Euclidean norm of the tone-`n` row vector `h_n`.
    pub fn tone_norm(&self, n: usize) -> f64 {
        self.h.row(n).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { h: self.h.map(|z| z * c) }
    }

    pub fn to_json(&self) -> ChannelJson {
        let mut entries = Vec::with_capacity(self.h.len());
        for n in 0..self.n_tones() {
            for m in 0..self.n_antennas() {
                let z = self.h[(n, m)];
                entries.push([z.re, z.im]);
            }
        }
        ChannelJson {
            n_tones: self.n_tones(),
            n_antennas: self.n_antennas(),
            entries,
        }
    }

    pub fn from_json(json: &ChannelJson) -> Result<Self> {
        let expected = json.n_tones * json.n_antennas;
        if json.entries.len() != expected {
            return Err(mismatch("channel entries", expected, json.entries.len()));
        }
        let h = DMatrix::from_fn(json.n_tones, json.n_antennas, |n, m| {
            let [re, im] = json.entries[n * json.n_antennas + m];
            Complex64::new(re, im)
        });
        Self::from_matrix(h)
    }
}

/// Fixture layout: `{"N": .., "M": .., "entries": [[re, im], ...]}` with
/// entries in row-major (tone-major) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelJson {
    #[serde(rename = "N")]
    pub n_tones: usize,
    #[serde(rename = "M")]
    pub n_antennas: usize,
    pub entries: Vec<[f64; 2]>,
}

/// `h_{n,m} = Σ_l α_l exp(j(ξ_l - 2π f_n τ_l + Δ_{n,m,l}))` where `Δ` is the
/// ULA phase offset of antenna `m` at the tone-`n` wavelength.
pub fn frequency_response(
    taps: &TapSet,
    grid: &ToneGrid,
    geom: &ArrayGeometry,
) -> Result<ChannelFreqResponse> {
    geom.validate()?;
    if taps.paths.is_empty() {
        return Err(invalid("tap set is empty"));
    }
    let n_tones = grid.n_tones();
    let n_ant = geom.n_antennas();
    let spacing_m = match *geom {
        ArrayGeometry::Single => 0.0,
        ArrayGeometry::UniformLinear { spacing_m, .. } => spacing_m,
    };
    let h = DMatrix::from_fn(n_tones, n_ant, |n, m| {
        let f = grid.tone_hz(n);
        let wavelength = SPEED_OF_LIGHT / f;
        taps.paths
            .iter()
            .map(|p| {
                let array_shift =
                    2.0 * PI * m as f64 * spacing_m / wavelength * p.departure_angle.cos();
                let phase = -2.0 * PI * f * p.delay_s + array_shift;
                p.gain * Complex64::from_polar(1.0, phase)
            })
            .sum()
    });
    ChannelFreqResponse::from_matrix(h)
}

/// Unit gain and zero phase on every tone and antenna.
pub fn flat_channel(n_tones: usize, n_antennas: usize) -> Result<ChannelFreqResponse> {
    if n_tones == 0 || n_antennas == 0 {
        return Err(invalid("flat channel needs N >= 1 and M >= 1"));
    }
    ChannelFreqResponse::from_matrix(DMatrix::from_element(
        n_tones,
        n_antennas,
        Complex64::new(1.0, 0.0),
    ))
}

/// Gains fading independently across tones and antennas, each CN(0, 1).
pub fn iid_rayleigh<R: Rng + ?Sized>(
    n_tones: usize,
    n_antennas: usize,
    rng: &mut R,
) -> Result<ChannelFreqResponse> {
    if n_tones == 0 || n_antennas == 0 {
        return Err(invalid("channel needs N >= 1 and M >= 1"));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = DMatrix::from_element(n_tones, n_antennas, Complex64::new(0.0, 0.0));
    for n in 0..n_tones {
        for m in 0..n_antennas {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            h[(n, m)] = Complex64::new(scale * re, scale * im);
        }
    }
    ChannelFreqResponse::from_matrix(h)
}

/// [`iid_rayleigh`] driven by a ChaCha8 generator seeded with `seed`.
pub fn iid_rayleigh_seeded(n_tones: usize, n_antennas: usize, seed: u64) -> Result<ChannelFreqResponse> {
    iid_rayleigh(n_tones, n_antennas, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Draws taps from `pdp` with `seed` and evaluates them on `grid`.
pub fn multipath_channel(
    pdp: &PowerDelayProfile,
    grid: &ToneGrid,
    geom: &ArrayGeometry,
    seed: u64,
) -> Result<ChannelFreqResponse> {
    frequency_response(&sample_taps(pdp, seed), grid, geom)
}
