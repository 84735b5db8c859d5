use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::par::{map_indexed, Exec};

/// Time-domain oversampling of the OFDM symbol period.
const OVERSAMPLING: usize = 4;
const TRIALS_PER_CHUNK: usize = 4096;

/// Passband PAPR of an in-phase multisine with equal amplitudes,
/// `10 log10(2N)` dB.
pub fn papr_multisine(n_tones: usize) -> Result<f64> {
    if n_tones == 0 {
        return Err(invalid("need at least one tone"));
    }
    Ok(10.0 * (2.0 * n_tones as f64).log10())
}

/// Empirical PAPR distribution of OFDM symbols with i.i.d. CN(0,1) inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaprCcdf {
    pub n_tones: usize,
    /// Sorted PAPR samples (dB).
    pub samples_db: Vec<f64>,
}

impl PaprCcdf {
    /// Fraction of symbols with PAPR above `threshold_db`.
    pub fn ccdf(&self, threshold_db: f64) -> f64 {
        let above = self.samples_db.len() - self.samples_db.partition_point(|&s| s <= threshold_db);
        above as f64 / self.samples_db.len() as f64
    }

    /// PAPR level exceeded with probability `exceedance`.
    pub fn level_at(&self, exceedance: f64) -> f64 {
        let n = self.samples_db.len();
        let k = (((1.0 - exceedance) * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.samples_db[k]
    }

    /// `(threshold_db, ccdf)` rows on a regular grid of thresholds.
    pub fn table(&self, step_db: f64) -> Vec<(f64, f64)> {
        let hi = *self.samples_db.last().unwrap_or(&0.0);
        let mut out = Vec::new();
        let mut x = 0.0;
        while x <= hi + step_db {
            out.push((x, self.ccdf(x)));
            x += step_db;
        }
        out
    }
}

/// PAPR of `trials` random OFDM symbols over `N` tones, measured on the
/// passband signal (twice the baseband peak-to-average of the complex
/// envelope, matching the multisine convention).
pub fn papr_ccdf_ofdm(n_tones: usize, trials: usize, seed: u64, exec: Exec) -> Result<PaprCcdf> {
    if n_tones == 0 || trials == 0 {
        return Err(invalid("need at least one tone and one trial"));
    }
    let len = OVERSAMPLING * n_tones;
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(len);
    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    let parts = map_indexed(exec, chunks, |chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        let count = TRIALS_PER_CHUNK.min(trials - chunk * TRIALS_PER_CHUNK);
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for b in buf.iter_mut().take(n_tones) {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *b = Complex64::new(re, im);
            }
            fft.process(&mut buf);
            let powers = buf.iter().map(|b| b.norm_sqr());
            let peak = powers.clone().fold(0.0, f64::max);
            let mean = powers.sum::<f64>() / len as f64;
            out.push(10.0 * (2.0 * peak / mean).log10());
        }
        out
    });
    let mut samples_db: Vec<f64> = parts.into_iter().flatten().collect();
    samples_db.sort_by(f64::total_cmp);
    Ok(PaprCcdf { n_tones, samples_db })
}
