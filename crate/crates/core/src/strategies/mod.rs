//! Waveform strategies: closed-form baselines and the condensation-based
//! WIPT designs.

mod wipt;

pub use wipt::{
    algorithm1_pc, algorithm2_pc_decoupled, algorithm3_nc, no_wpt, optimize_multisine_wpt,
    solve_wipt, MultisineSolution, Receiver, WiptMode, WiptOptions, WiptSolution,
};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chanmodel::ChannelFreqResponse;
use crate::error::{invalid, mismatch, Error, Result};
use crate::rectenna::rate_pc;

/// Amplitude and phase matrices (`N x M`) of one waveform component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Weights {
    pub amplitudes: DMatrix<f64>,
    pub phases: DMatrix<f64>,
}

/// Phases that co-phase every tone and antenna with the channel,
/// `φ_{n,m} = −arg h_{n,m}`, for both the multisine and the OFDM waveform.
pub fn matched_phases(channel: &ChannelFreqResponse) -> (DMatrix<f64>, DMatrix<f64>) {
    let phi = channel.matrix().map(|h| if h.norm() == 0.0 { 0.0 } else { -h.arg() });
    (phi.clone(), phi)
}

fn check_power(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid(format!("transmit power must be positive, got {p}")));
    }
    Ok(())
}

/// Unit-norm matched beamforming magnitudes `|h_{n,m}| / ‖h_n‖`; a tone with
/// no gain gets a uniform direction.
fn beam_directions(channel: &ChannelFreqResponse) -> DMatrix<f64> {
    let m = channel.n_antennas();
    DMatrix::from_fn(channel.n_tones(), m, |n, j| {
        let norm = channel.tone_norm(n);
        if norm > 0.0 {
            channel.amplitude(n, j) / norm
        } else {
            1.0 / (m as f64).sqrt()
        }
    })
}

/// Index of the strongest tone, lowest index on ties.
pub fn strongest_tone(channel: &ChannelFreqResponse) -> Result<usize> {
    let mut best = 0;
    let mut best_norm = channel.tone_norm(0);
    for n in 1..channel.n_tones() {
        let norm = channel.tone_norm(n);
        if norm > best_norm {
            best = n;
            best_norm = norm;
        }
    }
    if best_norm == 0.0 {
        return Err(invalid("channel is zero on every tone"));
    }
    Ok(best)
}

/// Adaptive single sinewave: all power on the strongest tone with matched
/// beamforming, amplitude `√(2P)`.
pub fn ass_weights(channel: &ChannelFreqResponse, p: f64) -> Result<Weights> {
    check_power(p)?;
    let best = strongest_tone(channel)?;
    let dirs = beam_directions(channel);
    let mut amplitudes = DMatrix::zeros(channel.n_tones(), channel.n_antennas());
    for m in 0..channel.n_antennas() {
        amplitudes[(best, m)] = (2.0 * p).sqrt() * dirs[(best, m)];
    }
    let (phases, _) = matched_phases(channel);
    Ok(Weights { amplitudes, phases })
}

/// Uniform power, zero phases, single antenna: `√(2P/N)` on every tone.
pub fn up_weights(n_tones: usize, p: f64) -> Result<Weights> {
    check_power(p)?;
    if n_tones == 0 {
        return Err(invalid("need at least one tone"));
    }
    Ok(Weights {
        amplitudes: DMatrix::from_element(n_tones, 1, (2.0 * p / n_tones as f64).sqrt()),
        phases: DMatrix::zeros(n_tones, 1),
    })
}

/// Uniform power across tones with matched phases and per-tone matched
/// beamforming.
pub fn upmf_weights(channel: &ChannelFreqResponse, p: f64) -> Result<Weights> {
    check_power(p)?;
    let per_tone = (2.0 * p / channel.n_tones() as f64).sqrt();
    let (phases, _) = matched_phases(channel);
    Ok(Weights {
        amplitudes: beam_directions(channel) * per_tone,
        phases,
    })
}

fn check_noise(channel: &ChannelFreqResponse, noise: &[f64]) -> Result<()> {
    if noise.len() != channel.n_tones() {
        return Err(mismatch("noise variances", channel.n_tones(), noise.len()));
    }
    if noise.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(invalid("noise variances must be positive"));
    }
    Ok(())
}

/// Water-filling over per-tone squared amplitudes `q_n = s_n²` given
/// effective gains `g_n = ‖h_n‖²`: `q_n = max(0, μ − σ_n²/g_n)` with
/// `Σ q_n = 2P` (the transmit power is `½ Σ q_n`).
pub(crate) fn waterfill_levels(gains: &[f64], noise: &[f64], p: f64) -> Vec<f64> {
    let floor: Vec<f64> = gains
        .iter()
        .zip(noise)
        .map(|(g, s)| if *g > 0.0 { s / g } else { f64::INFINITY })
        .collect();
    let budget = 2.0 * p;
    let used = |mu: f64| -> f64 { floor.iter().map(|f| (mu - f).max(0.0)).sum() };
    let lowest = floor.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (lowest, lowest + budget);
    while used(hi) < budget {
        hi += budget;
    }
    while hi - lo > 1e-10 * hi.abs().max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if used(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    let mut q: Vec<f64> = floor.iter().map(|f| (mu - f).max(0.0)).collect();
    // Remove the residual bisection error so the budget is met exactly.
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|x| *x *= budget / total);
    q
}

/// OFDM amplitudes from matched beamforming and water-filling across tones.
pub fn waterfilling(channel: &ChannelFreqResponse, p: f64, noise: &[f64]) -> Result<DMatrix<f64>> {
    check_power(p)?;
    check_noise(channel, noise)?;
    let gains: Vec<f64> = (0..channel.n_tones()).map(|n| channel.tone_norm(n).powi(2)).collect();
    if gains.iter().all(|g| *g == 0.0) {
        return Err(invalid("channel is zero on every tone"));
    }
    let q = waterfill_levels(&gains, noise, p);
    let dirs = beam_directions(channel);
    Ok(DMatrix::from_fn(channel.n_tones(), channel.n_antennas(), |n, m| {
        q[n].sqrt() * dirs[(n, m)]
    }))
}

/// Rate of the water-filling OFDM waveform with every received watt sent
/// to the decoder; the largest rate achievable at power `p`.
pub fn waterfilling_rate(channel: &ChannelFreqResponse, p: f64, noise: &[f64]) -> Result<f64> {
    let si = waterfilling(channel, p, noise)?;
    let (_, phi) = matched_phases(channel);
    rate_pc(&si, &phi, 0.0, channel, noise)
}

pub(crate) fn infeasible_rate(rbar: f64, r_wf: f64) -> Error {
    Error::Infeasible(format!(
        "requested rate {rbar:.6} exceeds the water-filling rate {r_wf:.6}"
    ))
}
