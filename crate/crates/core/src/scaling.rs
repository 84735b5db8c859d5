//! Monte-Carlo growth of the harvested DC current with the number of tones
//! for baseline multisine/OFDM strategies, with a growth-order classifier.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chanmodel::{flat_channel, iid_rayleigh, ChannelFreqResponse};
use crate::error::{invalid, Result};
use crate::par::{map_indexed, Exec};
use crate::rectenna::{zdc_terms_multisine, zdc_terms_ofdm, RectennaModel, WaveformDesign, ZdcTerms};
use crate::strategies::{ass_weights, up_weights, upmf_weights, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Multisine,
    Ofdm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Up,
    Ass,
    Upmf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Flat,
    /// Independent CN(0,1) gain on every tone.
    Selective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRun {
    pub waveform: Waveform,
    pub strategy: Strategy,
    pub channel_kind: ChannelKind,
    pub n_list: Vec<usize>,
    pub trials: usize,
}

impl ScalingRun {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.len() < 3 {
            return Err(invalid("scaling needs at least three values of N"));
        }
        if self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("N list must be positive and strictly ascending"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingStats {
    pub n: usize,
    pub mean_zdc: f64,
    pub std_error: f64,
    /// Mean quadratic contribution (A).
    pub quad_term: f64,
    /// Mean quartic contribution (A).
    pub quart_term: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Flat,
    Linear,
    LogLike,
}

impl GrowthClass {
    pub fn as_str(self) -> &'static str {
        match self {
            GrowthClass::Flat => "flat",
            GrowthClass::Linear => "linear",
            GrowthClass::LogLike => "log-like",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendFit {
    pub class: GrowthClass,
    /// AIC of the constant, `a + bN` and `a + b log²N` models.
    pub aic: [f64; 3],
    /// Coefficient of determination of the `a + bN` fit.
    pub linear_r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingResult {
    pub run: ScalingRun,
    pub stats: Vec<ScalingStats>,
    pub fit: TrendFit,
}

impl ScalingResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["N", "mean_zdc", "stderr", "quad_term", "quart_term", "fit_class"])?;
        for s in &self.stats {
            wtr.write_record([
                s.n.to_string(),
                format!("{:e}", s.mean_zdc),
                format!("{:e}", s.std_error),
                format!("{:e}", s.quad_term),
                format!("{:e}", s.quart_term),
                self.fit.class.as_str().to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn weights(strategy: Strategy, channel: &ChannelFreqResponse, p: f64) -> Result<Weights> {
    match strategy {
        Strategy::Up => up_weights(channel.n_tones(), p),
        Strategy::Ass => ass_weights(channel, p),
        Strategy::Upmf => upmf_weights(channel, p),
    }
}

fn evaluate(
    run: &ScalingRun,
    channel: &ChannelFreqResponse,
    p: f64,
    model: &RectennaModel,
) -> Result<ZdcTerms> {
    let w = weights(run.strategy, channel, p)?;
    match run.waveform {
        Waveform::Multisine => {
            zdc_terms_multisine(&WaveformDesign::multisine(w.amplitudes, w.phases)?, channel, model)
        }
        Waveform::Ofdm => zdc_terms_ofdm(&WaveformDesign::ofdm(w.amplitudes, w.phases)?, channel, model),
    }
}

/// Least-squares fit of `y ≈ a + b x`; returns the residual sum of squares
/// and the coefficient of determination.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rss: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    (rss, r2)
}

/// Picks the growth model with the lowest AIC; ties go to the model with
/// fewer parameters.
pub fn classify_growth(n: &[usize], y: &[f64]) -> Result<TrendFit> {
    if n.len() != y.len() || n.len() < 3 {
        return Err(invalid("growth fit needs at least three (N, value) pairs"));
    }
    let len = y.len() as f64;
    let mean = y.iter().sum::<f64>() / len;
    // Relative RSS floor so exact fits compare as ties rather than -∞.
    let floor = 1e-20 * y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let aic = |rss: f64, k: f64| len * (rss.max(floor) / len).ln() + 2.0 * k;
    let rss_const: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let xs: Vec<f64> = n.iter().map(|&v| v as f64).collect();
    let logs: Vec<f64> = n.iter().map(|&v| (v as f64).ln().powi(2)).collect();
    let (rss_lin, linear_r2) = linear_fit(&xs, y);
    let (rss_log, _) = linear_fit(&logs, y);
    let scores = [aic(rss_const, 1.0), aic(rss_lin, 2.0), aic(rss_log, 2.0)];
    let classes = [GrowthClass::Flat, GrowthClass::Linear, GrowthClass::LogLike];
    let mut best = 0;
    for i in 1..3 {
        if scores[i] < scores[best] - 1e-9 {
            best = i;
        }
    }
    Ok(TrendFit {
        class: classes[best],
        aic: scores,
        linear_r2,
    })
}

/// Mean DC current per `N` over random channels (a single deterministic
/// evaluation for flat channels), and the growth class of the quartic term.
pub fn scaling_experiment(
    run: &ScalingRun,
    p: f64,
    model: &RectennaModel,
    seed: u64,
    exec: Exec,
) -> Result<ScalingResult> {
    run.validate()?;
    model.validate()?;
    if !(p > 0.0) {
        return Err(invalid("transmit power must be positive"));
    }
    let mut stats = Vec::with_capacity(run.n_list.len());
    for (idx, &n) in run.n_list.iter().enumerate() {
        let samples: Vec<ZdcTerms> = match run.channel_kind {
            ChannelKind::Flat => vec![evaluate(run, &flat_channel(n, 1)?, p, model)?],
            ChannelKind::Selective => map_indexed(exec, run.trials, |trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((idx as u64) << 32) | trial as u64);
                iid_rayleigh(n, 1, &mut rng).and_then(|h| evaluate(run, &h, p, model))
            })
            .into_iter()
            .collect::<Result<_>>()?,
        };
        let count = samples.len() as f64;
        let totals: Vec<f64> = samples.iter().map(ZdcTerms::total).collect();
        let mean = totals.iter().sum::<f64>() / count;
        let var = if samples.len() > 1 {
            totals.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (count - 1.0)
        } else {
            0.0
        };
        stats.push(ScalingStats {
            n,
            mean_zdc: mean,
            std_error: (var / count).sqrt(),
            quad_term: samples.iter().map(|s| s.quadratic).sum::<f64>() / count,
            quart_term: samples.iter().map(|s| s.quartic).sum::<f64>() / count,
        });
    }
    let quart: Vec<f64> = stats.iter().map(|s| s.quart_term).collect();
    let fit = classify_growth(&run.n_list, &quart)?;
    Ok(ScalingResult {
        run: run.clone(),
        stats,
        fit,
    })
}
