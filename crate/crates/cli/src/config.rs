//! Experiment configuration: JSON schema, defaults and resolution to SI
//! units. dBm and dB values are converted here and nowhere else.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wipt_core::chanmodel::{
    flat_channel, iid_rayleigh_seeded, multipath_channel, ArrayGeometry, ChannelFreqResponse, ChannelJson,
    PowerDelayProfile, ProfileTap, ToneGrid,
};
use wipt_core::rateenergy::{RegionMode, DEFAULT_GRID_SIZE};
use wipt_core::rectenna::RectennaModel;
use wipt_core::scaling::{ChannelKind, ScalingRun, Strategy, Waveform};

use crate::error::CliError;

/// -20 dBm.
const DEFAULT_POWER_DBM: f64 = -20.0;
const DEFAULT_SNR_DB: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Region,
    Scaling,
    Validate,
    Papr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Seeds Monte-Carlo draws, and the channel unless it sets its own.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub channel: Option<ChannelSpec>,
    #[serde(default)]
    pub power_dbm: Option<f64>,
    #[serde(default)]
    pub power_w: Option<f64>,
    /// `P / σ²` in dB.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub noise_dbm: Option<f64>,
    #[serde(default)]
    pub noise_w: Option<f64>,
    #[serde(default = "default_order")]
    pub taylor_order: u32,
    #[serde(default)]
    pub region: RegionParams,
    #[serde(default)]
    pub scaling: ScalingParams,
    #[serde(default)]
    pub papr: PaprParams,
    #[serde(default)]
    pub validate: ValidateParams,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_order() -> u32 {
    4
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    Flat {
        n_tones: usize,
        #[serde(default = "one")]
        n_antennas: usize,
    },
    /// Independent CN(0, 1) gains per tone and antenna.
    Rayleigh {
        n_tones: usize,
        #[serde(default = "one")]
        n_antennas: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    Multipath {
        n_tones: usize,
        #[serde(default = "one")]
        n_antennas: usize,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_center")]
        center_hz: f64,
        #[serde(default = "default_bandwidth")]
        bandwidth_hz: f64,
        #[serde(default)]
        pdp: PdpSpec,
    },
    /// A fixed response stored as `{"N", "M", "entries": [[re, im], ...]}`.
    File { path: PathBuf },
}

fn default_center() -> f64 {
    5.18e9
}

fn default_bandwidth() -> f64 {
    1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdpSpec {
    pub n_taps: usize,
    pub spacing_s: f64,
    pub decay_s: f64,
    /// Explicit `(delay_s, power)` taps; overrides the exponential profile.
    #[serde(default)]
    pub taps: Option<Vec<ProfileTap>>,
}

impl Default for PdpSpec {
    fn default() -> Self {
        Self {
            n_taps: 18,
            spacing_s: 10e-9,
            decay_s: 50e-9,
            taps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionParams {
    #[serde(default = "default_modes")]
    pub modes: Vec<RegionMode>,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    /// Explicit rate targets (bits per symbol) instead of the uniform grid.
    #[serde(default)]
    pub rbar: Option<Vec<f64>>,
}

fn default_modes() -> Vec<RegionMode> {
    vec![RegionMode::Pc, RegionMode::Nc, RegionMode::NoWpt]
}

fn default_grid() -> usize {
    DEFAULT_GRID_SIZE
}

impl Default for RegionParams {
    fn default() -> Self {
        Self {
            modes: default_modes(),
            grid_size: default_grid(),
            rbar: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingParams {
    #[serde(default = "default_runs")]
    pub runs: Vec<ScalingRun>,
}

/// Every waveform/strategy/channel combination.
fn default_runs() -> Vec<ScalingRun> {
    let mut runs = Vec::new();
    for waveform in [Waveform::Multisine, Waveform::Ofdm] {
        for strategy in [Strategy::Up, Strategy::Ass, Strategy::Upmf] {
            for channel_kind in [ChannelKind::Flat, ChannelKind::Selective] {
                runs.push(ScalingRun {
                    waveform,
                    strategy,
                    channel_kind,
                    n_list: vec![4, 8, 16, 32, 64],
                    trials: 500,
                });
            }
        }
    }
    runs
}

impl Default for ScalingParams {
    fn default() -> Self {
        Self { runs: default_runs() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaprParams {
    #[serde(default = "default_papr_n")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_papr_trials")]
    pub trials: usize,
    #[serde(default = "default_step")]
    pub step_db: f64,
}

fn default_papr_n() -> Vec<usize> {
    vec![4, 16, 64]
}

fn default_papr_trials() -> usize {
    100_000
}

fn default_step() -> f64 {
    0.25
}

impl Default for PaprParams {
    fn default() -> Self {
        Self {
            n_list: default_papr_n(),
            trials: default_papr_trials(),
            step_db: default_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateParams {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_draws")]
    pub symbol_draws: usize,
}

fn default_instances() -> usize {
    20
}

fn default_draws() -> usize {
    100_000
}

impl Default for ValidateParams {
    fn default() -> Self {
        Self {
            instances: default_instances(),
            symbol_draws: default_draws(),
        }
    }
}

fn schema(path: &str, message: impl Into<String>) -> CliError {
    CliError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Parses a config, naming the offending field on failure.
pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let mut path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        // Name the missing field itself, not just its parent object.
        if let Some(field) = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next())
        {
            path = if path == "." { field.to_string() } else { format!("{path}.{field}") };
        }
        schema(&path, message)
    })
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text)
}

/// Physical parameters after unit conversion and defaulting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub power_w: f64,
    pub noise_w: f64,
    pub snr_db: f64,
    pub taylor_order: u32,
    pub channel_seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn model(&self) -> RectennaModel {
        RectennaModel::default().with_order(self.taylor_order)
    }

    /// Checks cross-field rules and converts to SI units.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let power_w = match (self.power_dbm, self.power_w) {
            (Some(_), Some(_)) => return Err(schema("power_w", "give power_dbm or power_w, not both")),
            (Some(dbm), None) => check_finite("power_dbm", dbm).map(dbm_to_watts)?,
            (None, Some(w)) => check_positive("power_w", w)?,
            (None, None) => dbm_to_watts(DEFAULT_POWER_DBM),
        };
        let given = [self.snr_db.is_some(), self.noise_dbm.is_some(), self.noise_w.is_some()];
        if given.iter().filter(|g| **g).count() > 1 {
            return Err(schema("snr_db", "snr_db, noise_dbm and noise_w are mutually exclusive"));
        }
        let noise_w = if let Some(dbm) = self.noise_dbm {
            dbm_to_watts(check_finite("noise_dbm", dbm)?)
        } else if let Some(w) = self.noise_w {
            check_positive("noise_w", w)?
        } else {
            let snr = check_finite("snr_db", self.snr_db.unwrap_or(DEFAULT_SNR_DB))?;
            power_w / 10f64.powf(snr / 10.0)
        };
        self.model()
            .validate()
            .map_err(|e| schema("taylor_order", e.to_string()))?;
        match self.mode {
            Mode::Region => {
                if self.channel.is_none() {
                    return Err(schema("channel", "region mode needs a channel"));
                }
                if self.region.modes.is_empty() {
                    return Err(schema("region.modes", "list at least one mode"));
                }
                match &self.region.rbar {
                    Some(r) if r.is_empty() || r.iter().any(|v| !(v.is_finite() && *v >= 0.0)) => {
                        return Err(schema("region.rbar", "rate targets must be finite and non-negative"));
                    }
                    None if self.region.grid_size < 2 => {
                        return Err(schema("region.grid_size", "grid_size must be at least 2"));
                    }
                    _ => {}
                }
            }
            Mode::Scaling => {
                for (i, run) in self.scaling.runs.iter().enumerate() {
                    run.validate()
                        .map_err(|e| schema(&format!("scaling.runs[{i}]"), e.to_string()))?;
                }
            }
            Mode::Papr => {
                if self.papr.n_list.is_empty() || self.papr.n_list.contains(&0) {
                    return Err(schema("papr.n_list", "tone counts must be positive"));
                }
                if self.papr.trials == 0 {
                    return Err(schema("papr.trials", "trials must be positive"));
                }
                check_positive("papr.step_db", self.papr.step_db)?;
            }
            Mode::Validate => {
                if self.validate.instances == 0 || self.validate.symbol_draws == 0 {
                    return Err(schema("validate", "instances and symbol_draws must be positive"));
                }
            }
        }
        let channel_seed = match &self.channel {
            Some(ChannelSpec::Rayleigh { seed, .. } | ChannelSpec::Multipath { seed, .. }) => {
                Some(seed.unwrap_or(self.seed))
            }
            _ => None,
        };
        Ok(Resolved {
            power_w,
            noise_w,
            snr_db: 10.0 * (power_w / noise_w).log10(),
            taylor_order: self.taylor_order,
            channel_seed,
        })
    }

    /// Builds the configured channel response.
    pub fn build_channel(&self, base: &Path) -> Result<ChannelFreqResponse, CliError> {
        let spec = self
            .channel
            .as_ref()
            .ok_or_else(|| schema("channel", "no channel configured"))?;
        let wrap = |e: wipt_core::Error| schema("channel", e.to_string());
        match spec {
            ChannelSpec::Flat { n_tones, n_antennas } => flat_channel(*n_tones, *n_antennas).map_err(wrap),
            ChannelSpec::Rayleigh {
                n_tones,
                n_antennas,
                seed,
            } => iid_rayleigh_seeded(*n_tones, *n_antennas, seed.unwrap_or(self.seed)).map_err(wrap),
            ChannelSpec::Multipath {
                n_tones,
                n_antennas,
                seed,
                center_hz,
                bandwidth_hz,
                pdp,
            } => {
                let profile = match &pdp.taps {
                    Some(taps) => PowerDelayProfile::normalized(taps.clone()),
                    None => PowerDelayProfile::exponential(pdp.n_taps, pdp.spacing_s, pdp.decay_s),
                }
                .map_err(|e| schema("channel.pdp", e.to_string()))?;
                let grid = ToneGrid::centered(*n_tones, *center_hz, *bandwidth_hz).map_err(wrap)?;
                let geom = ArrayGeometry::half_wavelength(*n_antennas, &grid);
                multipath_channel(&profile, &grid, &geom, seed.unwrap_or(self.seed)).map_err(wrap)
            }
            ChannelSpec::File { path } => {
                let full = if path.is_absolute() { path.clone() } else { base.join(path) };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| CliError::Io(format!("cannot read channel {}: {e}", full.display())))?;
                let json: ChannelJson = serde_json::from_str(&text)
                    .map_err(|e| schema("channel.path", format!("{}: {e}", full.display())))?;
                ChannelFreqResponse::from_json(&json).map_err(wrap)
            }
        }
    }
}

fn check_finite(path: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(schema(path, "must be finite"))
    }
}

fn check_positive(path: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(schema(path, format!("must be positive, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_the_reference_setup() {
        let cfg = parse(r#"{"mode": "region", "channel": {"kind": "flat", "n_tones": 4}}"#).unwrap();
        let r = cfg.resolve().unwrap();
        assert!((r.power_w - 1e-5).abs() < 1e-18);
        assert!((r.noise_w - 1e-7).abs() < 1e-20);
        assert_eq!(cfg.region.grid_size, 20);
        assert_eq!(cfg.region.modes.len(), 3);
    }

    #[test]
    fn missing_field_is_named() {
        let err = parse(r#"{"mode": "region", "channel": {"kind": "flat"}}"#).unwrap_err();
        match err {
            CliError::Schema { path, .. } => assert_eq!(path, "channel.n_tones"),
            other => panic!("unexpected {other:?}"),
        }
        match parse(r#"{"seed": 3}"#).unwrap_err() {
            CliError::Schema { path, .. } => assert_eq!(path, "mode"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn snr_and_noise_are_exclusive() {
        let cfg = parse(r#"{"mode": "papr", "snr_db": 10, "noise_dbm": -40}"#).unwrap();
        assert!(matches!(cfg.resolve(), Err(CliError::Schema { .. })));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(parse(r#"{"mode": "papr", "powr_dbm": 1}"#).is_err());
    }

    #[test]
    fn nonpositive_power_is_rejected() {
        let cfg = parse(r#"{"mode": "papr", "power_w": -1}"#).unwrap();
        match cfg.resolve() {
            Err(CliError::Schema { path, .. }) => assert_eq!(path, "power_w"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shipped_configs_resolve() {
        for text in [
            include_str!("../../../configs/region_pc_n16.json"),
            include_str!("../../../configs/region_all_modes.json"),
            include_str!("../../../configs/scaling.json"),
            include_str!("../../../configs/papr.json"),
            include_str!("../../../configs/validate.json"),
        ] {
            let cfg = parse(text).unwrap();
            cfg.resolve().unwrap();
            if cfg.channel.is_some() {
                assert_eq!(cfg.build_channel(Path::new(".")).unwrap().n_tones(), 16);
            }
        }
    }

    #[test]
    fn noise_from_dbm() {
        let cfg = parse(r#"{"mode": "papr", "noise_dbm": -40}"#).unwrap();
        let r = cfg.resolve().unwrap();
        assert!((r.noise_w - 1e-7).abs() < 1e-20);
        assert!((r.snr_db - 20.0).abs() < 1e-9);
    }
}
