//! Truncated-Taylor rectenna model: DC output current for multisine, OFDM
//! and superposed excitations, plus the achievable rates of the
//! power-splitting receiver.

mod oracle;

pub use oracle::{
    oracle_suite, oracle_zdc, oracle_zdc_with, OracleCheck, OracleConfig, OracleEstimate, EXACT_TOL,
    MONTE_CARLO_TOL,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::chanmodel::ChannelFreqResponse;
use crate::error::{invalid, mismatch, Result};

/// Diode and antenna parameters of a single-diode rectenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectennaModel {
    /// Reverse saturation current (A).
    pub saturation_current: f64,
    pub ideality: f64,
    /// Thermal voltage (V).
    pub thermal_voltage: f64,
    /// Antenna resistance (Ω).
    pub r_ant: f64,
    /// Even Taylor truncation order; 2 is the linear model.
    pub order: u32,
}

impl Default for RectennaModel {
    fn default() -> Self {
        Self {
            saturation_current: 5e-6,
            ideality: 1.05,
            thermal_voltage: 25.86e-3,
            r_ant: 50.0,
            order: 4,
        }
    }
}

impl RectennaModel {
    pub fn with_order(mut self, order: u32) -> Self {
        self.order = order;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let params = [
            self.saturation_current,
            self.ideality,
            self.thermal_voltage,
            self.r_ant,
        ];
        if params.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(invalid("rectenna parameters must be positive and finite"));
        }
        if self.order != 2 && self.order != 4 {
            return Err(invalid(format!(
                "Taylor order must be 2 or 4, got {}",
                self.order
            )));
        }
        Ok(())
    }

    /// `k_i = i_s / (i! (n v_t)^i)`.
    pub fn k(&self, i: u32) -> f64 {
        let factorial: f64 = (1..=i).map(f64::from).product();
        self.saturation_current / (factorial * (self.ideality * self.thermal_voltage).powi(i as i32))
    }

    pub fn is_nonlinear(&self) -> bool {
        self.order >= 4
    }
}

/// `(i, k_i)` for every even `i` from 2 up to the truncation order.
pub fn taylor_coeffs(model: &RectennaModel) -> Result<Vec<(u32, f64)>> {
    model.validate()?;
    Ok((2..=model.order).step_by(2).map(|i| (i, model.k(i))).collect())
}

/// Superposed multisine/OFDM transmit waveform and the receiver power split.
///
/// `sp`/`phi_p` hold the multisine amplitudes and phases, `si`/`phi_i` the
/// OFDM precoder magnitudes (including the per-tone symbol power) and phases,
/// all `N x M`. `rho` is the fraction of received power sent to the
/// harvester.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformDesign {
    pub sp: DMatrix<f64>,
    pub phi_p: DMatrix<f64>,
    pub si: DMatrix<f64>,
    pub phi_i: DMatrix<f64>,
    pub rho: f64,
}

impl WaveformDesign {
    pub fn new(
        sp: DMatrix<f64>,
        phi_p: DMatrix<f64>,
        si: DMatrix<f64>,
        phi_i: DMatrix<f64>,
        rho: f64,
    ) -> Result<Self> {
        let design = Self {
            sp,
            phi_p,
            si,
            phi_i,
            rho,
        };
        design.validate()?;
        Ok(design)
    }

    pub fn zeros(n_tones: usize, n_antennas: usize) -> Self {
        let z = DMatrix::zeros(n_tones, n_antennas);
        Self {
            sp: z.clone(),
            phi_p: z.clone(),
            si: z.clone(),
            phi_i: z,
            rho: 1.0,
        }
    }

    /// Multisine only, all received power to the harvester.
    pub fn multisine(sp: DMatrix<f64>, phi_p: DMatrix<f64>) -> Result<Self> {
        let z = DMatrix::zeros(sp.nrows(), sp.ncols());
        Self::new(sp, phi_p, z.clone(), z, 1.0)
    }

    /// OFDM only, all received power to the harvester.
    pub fn ofdm(si: DMatrix<f64>, phi_i: DMatrix<f64>) -> Result<Self> {
        let z = DMatrix::zeros(si.nrows(), si.ncols());
        Self::new(z.clone(), z, si, phi_i, 1.0)
    }

    pub fn n_tones(&self) -> usize {
        self.sp.nrows()
    }

    pub fn n_antennas(&self) -> usize {
        self.sp.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let shape = self.sp.shape();
        for (what, m) in [("phi_p", &self.phi_p), ("si", &self.si), ("phi_i", &self.phi_i)] {
            if m.shape() != shape {
                return Err(mismatch(what, format!("{shape:?}"), format!("{:?}", m.shape())));
            }
        }
        if self.sp.iter().chain(self.si.iter()).any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(invalid("amplitudes must be non-negative and finite"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(invalid(format!("power-splitting ratio {} outside [0, 1]", self.rho)));
        }
        Ok(())
    }

    /// `½‖S_P‖²_F`.
    pub fn multisine_power(&self) -> f64 {
        0.5 * self.sp.norm_squared()
    }

    /// `½‖S_I‖²_F`.
    pub fn ofdm_power(&self) -> f64 {
        0.5 * self.si.norm_squared()
    }

    pub fn transmit_power(&self) -> f64 {
        self.multisine_power() + self.ofdm_power()
    }
}

/// Quadratic and quartic contributions to `z_DC` (A), already scaled by
/// `k_i R_ant^{i/2}` and the power-splitting ratio where applicable.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ZdcTerms {
    pub quadratic: f64,
    pub quartic: f64,
}

impl ZdcTerms {
    pub fn total(&self) -> f64 {
        self.quadratic + self.quartic
    }
}

type QuadCache = Mutex<HashMap<usize, Arc<Vec<[usize; 4]>>>>;

/// All `(n0, n1, n2, n3)` in `0..n` with `n0 + n1 = n2 + n3`; there are
/// `(2n³ + n) / 3` of them. Cached per `n`.
pub fn quad_index_set(n: usize) -> Arc<Vec<[usize; 4]>> {
    static CACHE: OnceLock<QuadCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quad index cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut set = Vec::with_capacity((2 * n * n * n + n) / 3);
            for n0 in 0..n {
                for n1 in 0..n {
                    let sum = n0 + n1;
                    for n2 in sum.saturating_sub(n - 1)..=sum.min(n - 1) {
                        set.push([n0, n1, n2, sum - n2]);
                    }
                }
            }
            Arc::new(set)
        })
        .clone()
}

fn check_shape(what: &'static str, m: &DMatrix<f64>, channel: &ChannelFreqResponse) -> Result<()> {
    let expected = (channel.n_tones(), channel.n_antennas());
    if m.shape() != expected {
        return Err(mismatch(what, format!("{expected:?}"), format!("{:?}", m.shape())));
    }
    Ok(())
}

/// Per-tone received complex amplitude `h_n · w_n` with
/// `w_{n,m} = s_{n,m} e^{jφ_{n,m}}`.
pub fn received_amplitudes(
    s: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    channel: &ChannelFreqResponse,
) -> Result<Vec<Complex64>> {
    check_shape("amplitudes", s, channel)?;
    check_shape("phases", phi, channel)?;
    Ok((0..channel.n_tones())
        .map(|n| {
            (0..channel.n_antennas())
                .map(|m| channel.at(n, m) * Complex64::from_polar(s[(n, m)], phi[(n, m)]))
                .sum()
        })
        .collect())
}

/// `A{y²} = ½ Σ_n |X_n|²`.
fn second_moment(x: &[Complex64]) -> f64 {
    0.5 * x.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// `A{y⁴} = 3/8 Re Σ_{n0+n1=n2+n3} X_{n0} X_{n1} X*_{n2} X*_{n3}`.
fn multisine_fourth_moment(x: &[Complex64]) -> f64 {
    let quads = quad_index_set(x.len());
    let sum: Complex64 = quads
        .iter()
        .map(|&[a, b, c, d]| x[a] * x[b] * x[c].conj() * x[d].conj())
        .sum();
    0.375 * sum.re
}

/// `E{A{y⁴}} = 6/8 (Σ_n |X_n|²)²` for i.i.d. circular Gaussian symbols.
fn ofdm_fourth_moment(x: &[Complex64]) -> f64 {
    let s: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    0.75 * s * s
}

pub fn zdc_terms_multisine(
    design: &WaveformDesign,
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
) -> Result<ZdcTerms> {
    model.validate()?;
    let x = received_amplitudes(&design.sp, &design.phi_p, channel)?;
    Ok(ZdcTerms {
        quadratic: model.k(2) * model.r_ant * second_moment(&x),
        quartic: if model.is_nonlinear() {
            model.k(4) * model.r_ant.powi(2) * multisine_fourth_moment(&x)
        } else {
            0.0
        },
    })
}

pub fn zdc_terms_ofdm(
    design: &WaveformDesign,
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
) -> Result<ZdcTerms> {
    model.validate()?;
    let x = received_amplitudes(&design.si, &design.phi_i, channel)?;
    Ok(ZdcTerms {
        quadratic: model.k(2) * model.r_ant * second_moment(&x),
        quartic: if model.is_nonlinear() {
            model.k(4) * model.r_ant.powi(2) * ofdm_fourth_moment(&x)
        } else {
            0.0
        },
    })
}

/// DC current with the multisine `(S_P, Φ_P)` alone at the harvester.
pub fn zdc_multisine(
    design: &WaveformDesign,
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
) -> Result<f64> {
    zdc_terms_multisine(design, channel, model).map(|t| t.total())
}

/// DC current with the OFDM waveform `(S_I, Φ_I)` alone, averaged over
/// Gaussian input symbols.
pub fn zdc_ofdm(
    design: &WaveformDesign,
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
) -> Result<f64> {
    zdc_terms_ofdm(design, channel, model).map(|t| t.total())
}

pub fn zdc_terms_superposed(
    design: &WaveformDesign,
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
) -> Result<ZdcTerms> {
    model.validate()?;
    design.validate()?;
    let xp = received_amplitudes(&design.sp, &design.phi_p, channel)?;
    let xi = received_amplitudes(&design.si, &design.phi_i, channel)?;
    let rho = design.rho;
    let (p2, i2) = (second_moment(&xp), second_moment(&xi));
    let quartic = if model.is_nonlinear() {
        let moments = multisine_fourth_moment(&xp) + ofdm_fourth_moment(&xi) + 6.0 * p2 * i2;
        model.k(4) * rho * rho * model.r_ant.powi(2) * moments
    } else {
        0.0
    };
    Ok(ZdcTerms {
        quadratic: model.k(2) * rho * model.r_ant * (p2 + i2),
        quartic,
    })
}

/// DC current of the superposed waveform at the harvester branch: the
/// quadratic terms scale with `ρ`, the quartic ones (including the
/// multisine/OFDM cross term) with `ρ²`.
pub fn zdc_superposed(
    design: &WaveformDesign,
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
) -> Result<f64> {
    zdc_terms_superposed(design, channel, model).map(|t| t.total())
}

fn check_rate_inputs(rho: f64, noise: &[f64], channel: &ChannelFreqResponse) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(invalid(format!("power-splitting ratio {rho} outside [0, 1]")));
    }
    if noise.len() != channel.n_tones() {
        return Err(mismatch("noise variances", channel.n_tones(), noise.len()));
    }
    if noise.iter().any(|s| !(*s > 0.0)) {
        return Err(invalid("noise variances must be positive"));
    }
    Ok(())
}

/// Rate (bits per OFDM symbol) when the decoder cancels the multisine.
pub fn rate_pc(
    si: &DMatrix<f64>,
    phi_i: &DMatrix<f64>,
    rho: f64,
    channel: &ChannelFreqResponse,
    noise: &[f64],
) -> Result<f64> {
    check_rate_inputs(rho, noise, channel)?;
    let xi = received_amplitudes(si, phi_i, channel)?;
    Ok(xi
        .iter()
        .zip(noise)
        .map(|(x, s2)| (1.0 + (1.0 - rho) * x.norm_sqr() / s2).log2())
        .sum())
}

/// Rate (bits per OFDM symbol) when the multisine is treated as noise.
pub fn rate_nc(
    sp: &DMatrix<f64>,
    si: &DMatrix<f64>,
    phi_p: &DMatrix<f64>,
    phi_i: &DMatrix<f64>,
    rho: f64,
    channel: &ChannelFreqResponse,
    noise: &[f64],
) -> Result<f64> {
    check_rate_inputs(rho, noise, channel)?;
    let xi = received_amplitudes(si, phi_i, channel)?;
    let xp = received_amplitudes(sp, phi_p, channel)?;
    Ok(xi
        .iter()
        .zip(&xp)
        .zip(noise)
        .map(|((i, p), s2)| {
            let sinr = (1.0 - rho) * i.norm_sqr() / (s2 + (1.0 - rho) * p.norm_sqr());
            (1.0 + sinr).log2()
        })
        .sum())
}

/// Ricean K-factor `s_P² / s_I²` of the effective input on every tone and
/// antenna. Entries with no multisine are 0; entries with multisine but no
/// OFDM are `+∞`.
pub fn kfactor_map(sp: &DMatrix<f64>, si: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if sp.shape() != si.shape() {
        return Err(mismatch("kfactor shapes", format!("{:?}", sp.shape()), format!("{:?}", si.shape())));
    }
    Ok(sp.zip_map(si, |p, i| {
        if p == 0.0 {
            0.0
        } else if i == 0.0 {
            f64::INFINITY
        } else {
            (p * p) / (i * i)
        }
    }))
}

pub fn uniform_noise(n_tones: usize, sigma2: f64) -> Vec<f64> {
    vec![sigma2; n_tones]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanmodel::{flat_channel, iid_rayleigh};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn single_tone(p: f64) -> (WaveformDesign, ChannelFreqResponse) {
        let s = DMatrix::from_element(1, 1, (2.0 * p).sqrt());
        let z = DMatrix::zeros(1, 1);
        let design = WaveformDesign::new(s.clone(), z.clone(), s, z, 1.0).unwrap();
        (design, flat_channel(1, 1).unwrap())
    }

    #[test]
    fn taylor_coefficients_match_reference_values() {
        let model = RectennaModel::default();
        let k = taylor_coeffs(&model).unwrap();
        assert_eq!(k.len(), 2);
        assert_eq!(format!("{:.2e}", k[0].1), "3.39e-3");
        assert!((k[0].1 - 0.0034).abs() < 0.00005);
        assert!((k[1].1 - 0.3829).abs() < 0.005);
        let doubled = RectennaModel {
            saturation_current: 1e-5,
            ..model
        };
        for ((_, a), (_, b)) in k.iter().zip(taylor_coeffs(&doubled).unwrap()) {
            assert!(rel(b, 2.0 * a) < 1e-14);
        }
        assert_eq!(taylor_coeffs(&model.with_order(2)).unwrap().len(), 1);
        assert!(taylor_coeffs(&model.with_order(3)).is_err());
    }

    #[test]
    fn quad_index_set_has_expected_size() {
        for n in 1..12 {
            let set = quad_index_set(n);
            assert_eq!(set.len(), (2 * n * n * n + n) / 3);
            assert!(set.iter().all(|q| q[0] + q[1] == q[2] + q[3]));
        }
    }

    #[test]
    fn single_tone_closed_forms() {
        let p = 1e-3;
        let model = RectennaModel::default();
        let (design, h) = single_tone(p);
        let (k2, k4, r) = (model.k(2), model.k(4), model.r_ant);
        let ms = zdc_multisine(&design, &h, &model).unwrap();
        assert!(rel(ms, k2 * r * p + 1.5 * k4 * r * r * p * p) < 1e-12);
        let of = zdc_ofdm(&design, &h, &model).unwrap();
        assert!(rel(of, k2 * r * p + 3.0 * k4 * r * r * p * p) < 1e-12);
        let lin = zdc_multisine(&design, &h, &model.with_order(2)).unwrap();
        assert!(rel(lin, k2 * r * p) < 1e-12);
    }

    #[test]
    fn zero_amplitudes_give_zero() {
        let model = RectennaModel::default();
        let h = flat_channel(3, 2).unwrap();
        let d = WaveformDesign::zeros(3, 2);
        assert_eq!(zdc_multisine(&d, &h, &model).unwrap(), 0.0);
        assert_eq!(zdc_ofdm(&d, &h, &model).unwrap(), 0.0);
        assert_eq!(zdc_superposed(&d, &h, &model).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let model = RectennaModel::default();
        let h = flat_channel(3, 1).unwrap();
        let d = WaveformDesign::zeros(2, 1);
        assert!(zdc_multisine(&d, &h, &model).is_err());
        assert!(rate_pc(&d.si, &d.phi_i, 0.0, &h, &[1.0; 3]).is_err());
    }

    #[test]
    fn superposed_degenerate_cases() {
        let model = RectennaModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = iid_rayleigh(3, 2, &mut rng).unwrap();
        let sp = DMatrix::from_fn(3, 2, |n, m| 0.01 * (1 + n + m) as f64);
        let phi = DMatrix::from_fn(3, 2, |n, m| 0.3 * n as f64 - 0.2 * m as f64);
        let mut d = WaveformDesign::multisine(sp, phi).unwrap();
        d.rho = 0.0;
        assert_eq!(zdc_superposed(&d, &h, &model).unwrap(), 0.0);
        d.rho = 0.6;
        let terms = zdc_terms_multisine(&d, &h, &model).unwrap();
        let sup = zdc_superposed(&d, &h, &model).unwrap();
        assert!(rel(sup, 0.6 * terms.quadratic + 0.36 * terms.quartic) < 1e-12);
    }

    #[test]
    fn fourth_moment_matches_autoconvolution() {
        // Σ_{n0+n1=n2+n3} X0 X1 X2* X3* = Σ_k |Σ_{a+b=k} X_a X_b|².
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..7 {
            let h = iid_rayleigh(n, 1, &mut rng).unwrap();
            let x: Vec<Complex64> = (0..n).map(|i| h.at(i, 0)).collect();
            let mut conv = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
            for a in 0..n {
                for b in 0..n {
                    conv[a + b] += x[a] * x[b];
                }
            }
            let direct: f64 = 0.375 * conv.iter().map(|c| c.norm_sqr()).sum::<f64>();
            assert!(rel(multisine_fourth_moment(&x), direct) < 1e-12);
        }
    }

    #[test]
    fn linear_model_cannot_tell_multisine_from_ofdm() {
        let model = RectennaModel::default().with_order(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = iid_rayleigh(4, 1, &mut rng).unwrap();
        let phi = DMatrix::zeros(4, 1);
        let sp = DMatrix::from_vec(4, 1, vec![0.1, 0.2, 0.05, 0.3]);
        // Same Σ|h_n w_n|² with a different per-tone split.
        let target: f64 = (0..4).map(|n| (sp[(n, 0)] * h.amplitude(n, 0)).powi(2)).sum();
        let si = DMatrix::from_fn(4, 1, |n, _| (target / 4.0).sqrt() / h.amplitude(n, 0));
        let ms = zdc_multisine(&WaveformDesign::multisine(sp, phi.clone()).unwrap(), &h, &model).unwrap();
        let of = zdc_ofdm(&WaveformDesign::ofdm(si, phi).unwrap(), &h, &model).unwrap();
        assert!(rel(ms, of) < 1e-12);
    }

    #[test]
    fn rates() {
        let h = flat_channel(1, 1).unwrap();
        let si = DMatrix::from_element(1, 1, 3f64.sqrt());
        let z = DMatrix::zeros(1, 1);
        assert!((rate_pc(&si, &z, 0.0, &h, &[1.0]).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(rate_pc(&si, &z, 1.0, &h, &[1.0]).unwrap(), 0.0);
        assert_eq!(rate_pc(&z, &z, 0.3, &h, &[1.0]).unwrap(), 0.0);
        assert!(rate_pc(&si, &z, 1.1, &h, &[1.0]).is_err());
        assert!(rate_pc(&si, &z, 0.5, &h, &[0.0]).is_err());

        let sp = DMatrix::from_element(1, 1, 1.0);
        let nc = rate_nc(&sp, &si, &z, &z, 0.0, &h, &[1.0]).unwrap();
        assert!((nc - 2.5f64.log2()).abs() < 1e-14);
        let pc = rate_pc(&si, &z, 0.2, &h, &[1.0]).unwrap();
        let nc0 = rate_nc(&z, &si, &z, &z, 0.2, &h, &[1.0]).unwrap();
        assert!((pc - nc0).abs() < 1e-15);

        let mut last = f64::INFINITY;
        for k in 0..8 {
            let sp = DMatrix::from_element(1, 1, 10f64.powi(k));
            let r = rate_nc(&sp, &si, &z, &z, 0.0, &h, &[1.0]).unwrap();
            assert!(r < last);
            last = r;
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn kfactor() {
        let sp = DMatrix::from_vec(1, 3, vec![0.0, 2.0, 1.0]);
        let si = DMatrix::from_vec(1, 3, vec![1.0, 1.0, 0.0]);
        let k = kfactor_map(&sp, &si).unwrap();
        assert_eq!(k[(0, 0)], 0.0);
        assert_eq!(k[(0, 1)], 4.0);
        assert!(k[(0, 2)].is_infinite());
        let ones = kfactor_map(&si, &si).unwrap();
        assert_eq!(ones[(0, 0)], 1.0);
    }

    proptest! {
        #[test]
        fn homogeneity(seed in 0u64..500, c in 0.1f64..10.0) {
            let model = RectennaModel::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = iid_rayleigh(3, 2, &mut rng).unwrap();
            let s = DMatrix::from_fn(3, 2, |n, m| 0.01 + 0.01 * ((n * 2 + m) as f64).sin().abs());
            let phi = DMatrix::from_fn(3, 2, |n, m| (n as f64) * 0.7 - (m as f64) * 1.3);
            let base = zdc_terms_multisine(&WaveformDesign::multisine(s.clone(), phi.clone()).unwrap(), &h, &model).unwrap();
            let scaled = zdc_terms_multisine(&WaveformDesign::multisine(s * c, phi).unwrap(), &h, &model).unwrap();
            prop_assert!(rel(scaled.quadratic, c * c * base.quadratic) < 1e-10);
            prop_assert!(rel(scaled.quartic, c.powi(4) * base.quartic) < 1e-10);
        }

        #[test]
        fn superposed_increasing_in_rho(seed in 0u64..500, r1 in 0.01f64..0.99, dr in 0.001f64..0.5) {
            let model = RectennaModel::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = iid_rayleigh(3, 1, &mut rng).unwrap();
            let phi = DMatrix::from_fn(3, 1, |n, _| -h.phase(n, 0));
            let s = DMatrix::from_fn(3, 1, |n, _| 0.02 * (n + 1) as f64);
            let mut d = WaveformDesign::new(s.clone(), phi.clone(), s, phi, r1).unwrap();
            let z1 = zdc_superposed(&d, &h, &model).unwrap();
            d.rho = (r1 + dr).min(1.0);
            let z2 = zdc_superposed(&d, &h, &model).unwrap();
            prop_assert!(z2 > z1);
        }

        #[test]
        fn rate_pc_decreasing_in_rho(r1 in 0.0f64..0.99, dr in 0.001f64..0.5) {
            let h = flat_channel(2, 1).unwrap();
            let si = DMatrix::from_vec(2, 1, vec![0.5, 1.5]);
            let z = DMatrix::zeros(2, 1);
            let a = rate_pc(&si, &z, r1, &h, &[0.1, 0.1]).unwrap();
            let b = rate_pc(&si, &z, (r1 + dr).min(1.0), &h, &[0.1, 0.1]).unwrap();
            prop_assert!(b < a);
        }
    }
}
