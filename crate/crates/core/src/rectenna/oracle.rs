//! Brute-force reference for the DC current: synthesize the passband signal
//! over one period, push it through the truncated diode polynomial and
//! average. OFDM symbols are drawn at random.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::{received_amplitudes, RectennaModel, WaveformDesign};
use crate::chanmodel::ChannelFreqResponse;
use crate::error::{invalid, Result};
use crate::par::{map_indexed, Exec};

/// Symbol draws per RNG stream; fixed so results do not depend on the
/// thread count.
const DRAWS_PER_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub samples_per_period: usize,
    pub symbol_draws: usize,
    /// `K` in `f0 = K Δf`.
    pub f0_multiple: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            samples_per_period: 1 << 14,
            symbol_draws: 100_000,
            f0_multiple: 100,
        }
    }
}

impl OracleConfig {
    /// Requires `samples_per_period ≥ 4 (K + N)`, which keeps every
    /// intermodulation product of order ≤ 4 from aliasing onto DC, and
    /// `K ≥ N` so the lowest tone stays clear of baseband.
    pub fn validate(&self, n_tones: usize) -> Result<()> {
        if self.samples_per_period < 4 * (self.f0_multiple + n_tones) {
            return Err(invalid(format!(
                "{} samples per period is under the guard 4(K+N) = {}",
                self.samples_per_period,
                4 * (self.f0_multiple + n_tones)
            )));
        }
        if self.symbol_draws == 0 {
            return Err(invalid("symbol_draws must be at least 1"));
        }
        if self.f0_multiple < n_tones {
            return Err(invalid("f0_multiple must be at least the number of tones"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub mean: f64,
    /// Standard error of the mean over symbol draws; 0 for a deterministic
    /// (multisine-only) waveform.
    pub std_error: f64,
    pub draws: usize,
}

struct Synth {
    cos: Vec<f64>,
    sin: Vec<f64>,
    k: usize,
    coeffs: Vec<f64>,
    scale: f64,
}

impl Synth {
    /// Period average of `Σ_i k_i (√(ρ R) y)^i` for the per-tone complex
    /// envelope `c`.
    fn average(&self, c: &[Complex64]) -> f64 {
        let s_len = self.cos.len();
        let mut acc = 0.0;
        for s in 0..s_len {
            let mut y = 0.0;
            for (n, cn) in c.iter().enumerate() {
                let idx = ((self.k + n) * s) % s_len;
                y += cn.re * self.cos[idx] - cn.im * self.sin[idx];
            }
            let v = self.scale * y;
            let poly = self.coeffs.iter().rev().fold(0.0, |p, ki| (p + ki) * v);
            acc += poly;
        }
        acc / s_len as f64
    }
}

/// Oracle estimate of the harvester DC current for `design` (multisine plus
/// OFDM, scaled by the power-splitting ratio).
pub fn oracle_zdc(
    design: &WaveformDesign,
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
    cfg: &OracleConfig,
    seed: u64,
) -> Result<OracleEstimate> {
    oracle_zdc_with(design, channel, model, cfg, seed, Exec::default())
}

pub fn oracle_zdc_with(
    design: &WaveformDesign,
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
    cfg: &OracleConfig,
    seed: u64,
    exec: Exec,
) -> Result<OracleEstimate> {
    model.validate()?;
    design.validate()?;
    cfg.validate(channel.n_tones())?;
    let xp = received_amplitudes(&design.sp, &design.phi_p, channel)?;
    let xi = received_amplitudes(&design.si, &design.phi_i, channel)?;

    let s_len = cfg.samples_per_period;
    let synth = Synth {
        cos: (0..s_len).map(|s| (TAU * s as f64 / s_len as f64).cos()).collect(),
        sin: (0..s_len).map(|s| (TAU * s as f64 / s_len as f64).sin()).collect(),
        k: cfg.f0_multiple,
        coeffs: (1..=model.order).map(|i| model.k(i)).collect(),
        scale: (design.rho * model.r_ant).sqrt(),
    };

    if xi.iter().all(|x| x.norm_sqr() == 0.0) {
        return Ok(OracleEstimate {
            mean: synth.average(&xp),
            std_error: 0.0,
            draws: 1,
        });
    }

    let draws = cfg.symbol_draws;
    let n_chunks = draws.div_ceil(DRAWS_PER_CHUNK);
    let sums = map_indexed(exec, n_chunks, |chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        let count = DRAWS_PER_CHUNK.min(draws - chunk * DRAWS_PER_CHUNK);
        let mut c = vec![Complex64::new(0.0, 0.0); xp.len()];
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            for (n, cn) in c.iter_mut().enumerate() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let symbol = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
                *cn = xp[n] + xi[n] * symbol;
            }
            let z = synth.average(&c);
            s1 += z;
            s2 += z * z;
        }
        (s1, s2)
    });
    let (s1, s2) = sums
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = draws as f64;
    let mean = s1 / n;
    let var = if draws > 1 {
        ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(OracleEstimate {
        mean,
        std_error: (var / n).sqrt(),
        draws,
    })
}

/// One analytic-vs-oracle comparison of [`oracle_suite`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub instance: usize,
    pub n_tones: usize,
    pub n_antennas: usize,
    pub rho: f64,
    /// `multisine`, `ofdm` or `superposed`.
    pub waveform: &'static str,
    pub analytic: f64,
    pub oracle: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Tolerance for deterministic (multisine-only) comparisons.
pub const EXACT_TOL: f64 = 1e-9;
/// Tolerance for Monte-Carlo comparisons over random OFDM symbols.
pub const MONTE_CARLO_TOL: f64 = 0.02;

/// Compares the closed forms with the oracle on `instances` random small
/// problems (N ≤ 4, M ≤ 2, Rayleigh channels, random amplitudes around
/// 0.1 mW, matched phases, ρ cycling through 0.3, 0.7 and 1).
pub fn oracle_suite(
    instances: usize,
    seed: u64,
    cfg: &OracleConfig,
    model: &RectennaModel,
    exec: Exec,
) -> Result<Vec<OracleCheck>> {
    use super::{zdc_multisine, zdc_ofdm, zdc_superposed};
    use crate::chanmodel::iid_rayleigh;
    use crate::strategies::matched_phases;
    use nalgebra::DMatrix;

    const RHOS: [f64; 3] = [0.3, 0.7, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(3 * instances);
    for instance in 0..instances {
        let n = rng.random_range(1..=4usize);
        let m = rng.random_range(1..=2usize);
        let h = iid_rayleigh(n, m, &mut rng)?;
        let rho = RHOS[instance % RHOS.len()];
        let (phi_p, phi_i) = matched_phases(&h);
        let mut amplitudes = || {
            let mut s = DMatrix::from_fn(n, m, |_, _| rng.random_range(0.1..1.0));
            let target = rng.random_range(0.5..2.0) * 1e-4;
            let power = 0.5 * s.iter().map(|v| v * v).sum::<f64>();
            s *= (target / power).sqrt();
            s
        };
        let zeros = DMatrix::zeros(n, m);
        let ms = WaveformDesign::new(amplitudes(), phi_p.clone(), zeros.clone(), phi_i.clone(), 1.0)?;
        let of = WaveformDesign::new(zeros, phi_p.clone(), amplitudes(), phi_i.clone(), 1.0)?;
        let sup = WaveformDesign::new(amplitudes(), phi_p, amplitudes(), phi_i, rho)?;
        let cases = [
            ("multisine", zdc_multisine(&ms, &h, model)?, &ms, EXACT_TOL),
            ("ofdm", zdc_ofdm(&of, &h, model)?, &of, MONTE_CARLO_TOL),
            ("superposed", zdc_superposed(&sup, &h, model)?, &sup, MONTE_CARLO_TOL),
        ];
        for (waveform, analytic, design, tolerance) in cases {
            let oracle = oracle_zdc_with(design, &h, model, cfg, seed ^ instance as u64, exec)?.mean;
            let rel_error = (analytic - oracle).abs() / oracle.abs().max(f64::MIN_POSITIVE);
            out.push(OracleCheck {
                instance,
                n_tones: n,
                n_antennas: m,
                rho: design.rho,
                waveform,
                analytic,
                oracle,
                rel_error,
                tolerance,
                pass: rel_error <= tolerance,
            });
        }
    }
    Ok(out)
}
