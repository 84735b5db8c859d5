//! Joint multisine/OFDM design by sequential condensation. With matched
//! phases the harvester output, the power budget and the rate factors are
//! posynomials in the amplitudes and the power-splitting variables.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{beam_directions, check_noise, check_power, infeasible_rate, matched_phases};
use super::{upmf_weights, waterfill_levels, waterfilling};
use crate::chanmodel::ChannelFreqResponse;
use crate::error::{invalid, Result};
use crate::gpsolve::{
    condense, sequential_condensation, CondensationProblem, CondensationSettings, Condensed,
    GpProblem, Monomial, Posynomial, SolveStatus, SolveTrace, TraceEntry, VarId,
};
use crate::rectenna::{quad_index_set, rate_nc, rate_pc, zdc_superposed, RectennaModel, WaveformDesign};

/// Relative floor on amplitude variables, scaled by `√(2P/(NM))`.
const AMPLITUDE_FLOOR: f64 = 1e-8;
const SPLIT_FLOOR: f64 = 1e-8;
/// Slack kept from the power budget and the splitting constraint at the
/// initial point.
const START_SHRINK: f64 = 1e-9;
/// Requests within this relative distance of the water-filling rate are
/// answered with the water-filling waveform itself.
const ENDPOINT_TOL: f64 = 1e-6;
/// Fractions of the UPMF power given to the multisine at the starting
/// points of the joint design. The problem is non-convex and the even split
/// alone can get stuck with a multisine that a better optimum drops.
const START_MULTISINE_SHARES: [f64; 2] = [0.5, 0.01];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Receiver {
    /// The decoder cancels the known multisine.
    Pc,
    /// The decoder treats the multisine as noise.
    Nc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WiptMode {
    PcJoint,
    PcDecoupled,
    Nc,
    /// Joint PC design with no multisine.
    NoWpt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WiptOptions {
    pub receiver: Receiver,
    /// Optimize one amplitude per tone with fixed matched beamforming.
    pub decoupled: bool,
    /// Whether a multisine is transmitted at all.
    pub multisine: bool,
    pub settings: CondensationSettings,
}

impl WiptMode {
    pub fn options(self) -> WiptOptions {
        let (receiver, decoupled, multisine) = match self {
            WiptMode::PcJoint => (Receiver::Pc, false, true),
            WiptMode::PcDecoupled => (Receiver::Pc, true, true),
            WiptMode::Nc => (Receiver::Nc, false, true),
            WiptMode::NoWpt => (Receiver::Pc, false, false),
        };
        WiptOptions {
            receiver,
            decoupled,
            multisine,
            settings: CondensationSettings::default(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WiptMode::PcJoint => "pc-joint",
            WiptMode::PcDecoupled => "pc-decoupled",
            WiptMode::Nc => "nc",
            WiptMode::NoWpt => "no-wpt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WiptSolution {
    pub design: WaveformDesign,
    pub rbar: f64,
    /// Achieved rate (bits per OFDM symbol) under the receiver's model.
    pub rate: f64,
    /// Achieved DC current (A).
    pub zdc: f64,
    pub trace: SolveTrace,
    pub options: WiptOptions,
}

#[derive(Serialize)]
struct SolutionJson<'a> {
    rbar: f64,
    rate: f64,
    zdc: f64,
    rho: f64,
    multisine_amplitudes: Vec<Vec<f64>>,
    multisine_phases: Vec<Vec<f64>>,
    ofdm_amplitudes: Vec<Vec<f64>>,
    ofdm_phases: Vec<Vec<f64>>,
    iterations: usize,
    status: SolveStatus,
    objectives: Vec<f64>,
    options: &'a WiptOptions,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl WiptSolution {
    pub fn multisine_power(&self) -> f64 {
        self.design.multisine_power()
    }

    pub fn ofdm_power(&self) -> f64 {
        self.design.ofdm_power()
    }

    /// Amplitudes, phases, `ρ`, achieved values and a trace summary.
    pub fn to_json(&self) -> serde_json::Value {
        let d = &self.design;
        serde_json::to_value(SolutionJson {
            rbar: self.rbar,
            rate: self.rate,
            zdc: self.zdc,
            rho: d.rho,
            multisine_amplitudes: rows(&d.sp),
            multisine_phases: rows(&d.phi_p),
            ofdm_amplitudes: rows(&d.si),
            ofdm_phases: rows(&d.phi_i),
            iterations: self.trace.iterations(),
            status: self.trace.status,
            objectives: self.trace.objectives(),
            options: &self.options,
        })
        .expect("solution serializes")
    }
}

/// Result of the multisine-only WPT design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultisineSolution {
    pub amplitudes: DMatrix<f64>,
    pub phases: DMatrix<f64>,
    pub zdc: f64,
    pub trace: SolveTrace,
}

/// Positions of the optimization variables.
#[derive(Debug, Clone)]
struct Layout {
    n: usize,
    m: usize,
    sp: Option<VarId>,
    si: Option<VarId>,
    /// `(ρ, ρ̄)`; absent for the WPT-only design where `ρ = 1`.
    split: Option<(VarId, VarId)>,
    n_x: usize,
}

impl Layout {
    fn new(n: usize, m: usize, multisine: bool, ofdm: bool) -> Self {
        let mut next = 0;
        let mut block = |present: bool, size: usize| {
            present.then(|| {
                let at = next;
                next += size;
                at
            })
        };
        let sp = block(multisine, n * m);
        let si = block(ofdm, n * m);
        let split = ofdm.then(|| {
            let at = next;
            next += 2;
            (at, at + 1)
        });
        Self {
            n,
            m,
            sp,
            si,
            split,
            n_x: next,
        }
    }

    fn var(base: VarId, m: usize, n: usize, j: usize) -> VarId {
        base + n * m + j
    }
}

/// `Σ_{m,m'} A_{n,m} A_{n,m'} x_{n,m} x_{n,m'}` for tone `n`, i.e. the
/// received power `|h_n w_n|²` under matched phases.
fn tone_power_terms(base: VarId, amp: &DMatrix<f64>, n: usize) -> Vec<Monomial> {
    let m = amp.ncols();
    let mut out = Vec::new();
    for a in 0..m {
        for b in 0..m {
            let c = amp[(n, a)] * amp[(n, b)];
            if c > 0.0 {
                out.push(
                    Monomial::from_log(c.ln())
                        .pow(Layout::var(base, m, n, a), 1.0)
                        .pow(Layout::var(base, m, n, b), 1.0),
                );
            }
        }
    }
    out
}

fn scaled(terms: impl IntoIterator<Item = Monomial>, c: f64) -> Vec<Monomial> {
    terms.into_iter().map(|t| t.scale(c)).collect()
}

fn products(a: &[Monomial], b: &[Monomial]) -> Vec<Monomial> {
    a.iter().flat_map(|x| b.iter().map(move |y| x.mul(y))).collect()
}

/// Second-moment terms `½ Σ_n |h_n w_n|²`.
fn second_moment_terms(base: VarId, amp: &DMatrix<f64>) -> Vec<Monomial> {
    (0..amp.nrows())
        .flat_map(|n| scaled(tone_power_terms(base, amp, n), 0.5))
        .collect()
}

/// Multisine fourth moment `3/8 Σ_{n0+n1=n2+n3} Π X_{n_i}` with
/// `X_n = Σ_m A_{n,m} x_{n,m}`.
fn multisine_fourth_terms(base: VarId, amp: &DMatrix<f64>) -> Vec<Monomial> {
    let (n, m) = amp.shape();
    let per_tone: Vec<Vec<Monomial>> = (0..n)
        .map(|t| {
            (0..m)
                .filter(|&j| amp[(t, j)] > 0.0)
                .map(|j| Monomial::from_log(amp[(t, j)].ln()).pow(Layout::var(base, m, t, j), 1.0))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for q in quad_index_set(n).iter() {
        let ab = products(&per_tone[q[0]], &per_tone[q[1]]);
        let cd = products(&per_tone[q[2]], &per_tone[q[3]]);
        out.extend(scaled(products(&ab, &cd), 0.375));
    }
    out
}

/// OFDM fourth moment `6/8 (Σ_n |h_n w_n|²)²`.
fn ofdm_fourth_terms(base: VarId, amp: &DMatrix<f64>) -> Vec<Monomial> {
    let total: Vec<Monomial> = (0..amp.nrows()).flat_map(|n| tone_power_terms(base, amp, n)).collect();
    scaled(products(&total, &total), 0.75)
}

fn posynomial(terms: Vec<Monomial>) -> Result<Posynomial> {
    if terms.is_empty() {
        return Err(invalid("channel gives no received power on any tone"));
    }
    Ok(Posynomial::new(terms)?.simplified())
}

/// The harvester output as a posynomial in the layout variables.
fn zdc_posynomial(layout: &Layout, amp: &DMatrix<f64>, model: &RectennaModel) -> Result<Posynomial> {
    let (k2r, k4r2) = (model.k(2) * model.r_ant, model.k(4) * model.r_ant.powi(2));
    let with_rho = |terms: Vec<Monomial>, power: f64| -> Vec<Monomial> {
        match layout.split {
            Some((rho, _)) => terms.into_iter().map(|t| t.pow(rho, power)).collect(),
            None => terms,
        }
    };
    let p2 = layout.sp.map(|b| second_moment_terms(b, amp)).unwrap_or_default();
    let i2 = layout.si.map(|b| second_moment_terms(b, amp)).unwrap_or_default();
    let mut terms = with_rho(scaled(p2.iter().chain(&i2).cloned(), k2r), 1.0);
    if model.is_nonlinear() {
        let mut quartic = Vec::new();
        if let Some(b) = layout.sp {
            quartic.extend(multisine_fourth_terms(b, amp));
        }
        if let Some(b) = layout.si {
            quartic.extend(ofdm_fourth_terms(b, amp));
        }
        quartic.extend(scaled(products(&p2, &i2), 6.0));
        terms.extend(with_rho(scaled(quartic, k4r2), 2.0));
    }
    posynomial(terms)
}

struct RateSpec {
    rbar: f64,
    /// `1 + ρ̄ (C_n + D_n)/σ_n²` per tone.
    numerators: Vec<Posynomial>,
    /// `1 + ρ̄ D_n/σ_n²` per tone for the NC receiver with a multisine.
    interference: Option<Vec<Posynomial>>,
}

struct WiptProblem {
    layout: Layout,
    zdc: Posynomial,
    power: Posynomial,
    rate: Option<RateSpec>,
    floors: Vec<f64>,
}

impl WiptProblem {
    fn n_aux(&self) -> usize {
        self.rate
            .as_ref()
            .and_then(|r| r.interference.as_ref())
            .map_or(0, Vec::len)
    }

    fn achieved_rate(&self, x: &[f64]) -> Option<f64> {
        self.rate.as_ref().map(|r| {
            let num: f64 = r.numerators.iter().map(|f| f.eval(x).log2()).sum();
            let den: f64 = r
                .interference
                .as_ref()
                .map_or(0.0, |g| g.iter().map(|f| f.eval(x).log2()).sum());
            num - den
        })
    }
}

impl CondensationProblem for WiptProblem {
    fn objective(&self, x: &[f64]) -> f64 {
        self.zdc.eval(x)
    }

    fn residual(&self, x: &[f64]) -> f64 {
        let mut worst = (self.power.eval(x) - 1.0).max(0.0);
        if let Some((rho, rhobar)) = self.layout.split {
            worst = worst.max(x[rho] + x[rhobar] - 1.0);
        }
        if let (Some(rate), Some(spec)) = (self.achieved_rate(x), &self.rate) {
            worst = worst.max((spec.rbar - rate) / spec.rbar.max(1.0));
        }
        for (xi, f) in x.iter().zip(&self.floors) {
            worst = worst.max(f / xi - 1.0);
        }
        worst.max(0.0)
    }

    fn condense_at(&self, x: &[f64]) -> Result<Condensed> {
        let n_x = self.layout.n_x;
        let n_aux = self.n_aux();
        let t0 = n_x + n_aux;
        let mut gp = GpProblem::new(t0 + 1, Monomial::var(t0).inv());
        gp.floors[..n_x].copy_from_slice(&self.floors);
        gp.monomial_constraints
            .push(Monomial::var(t0).mul(&condense(&self.zdc, x)?.inv()));
        gp.posynomial_constraints.push(self.power.clone());
        if let Some((rho, rhobar)) = self.layout.split {
            gp.posynomial_constraints
                .push(Posynomial::new(vec![Monomial::var(rho), Monomial::var(rhobar)])?);
        }
        let mut start = x.to_vec();
        if let Some(spec) = &self.rate {
            // 2^R̄ ∏ u_n ∏ (condensed numerators)⁻¹ ≤ 1 with u_n ≥ interference.
            let mut m = Monomial::from_log(spec.rbar * std::f64::consts::LN_2);
            for f in &spec.numerators {
                m = m.mul(&condense(f, x)?.inv());
            }
            if let Some(interference) = &spec.interference {
                for (k, g) in interference.iter().enumerate() {
                    let u = n_x + k;
                    m = m.pow(u, 1.0);
                    gp.posynomial_constraints.push(g.mul_monomial(&Monomial::var(u).inv()));
                    start.push(g.eval(x));
                }
            }
            gp.monomial_constraints.push(m);
        }
        start.push(0.9 * self.zdc.eval(x));
        Ok(Condensed { problem: gp, start })
    }

    fn extract(&self, gp_point: &[f64]) -> Vec<f64> {
        gp_point[..self.layout.n_x].to_vec()
    }
}

/// Effective per-antenna gains for the chosen parameterization: the full
/// `|h_{n,m}|` matrix, or one column of tone norms when decoupled.
fn effective_amplitudes(channel: &ChannelFreqResponse, decoupled: bool) -> DMatrix<f64> {
    if decoupled {
        DMatrix::from_fn(channel.n_tones(), 1, |n, _| channel.tone_norm(n))
    } else {
        channel.amplitudes()
    }
}

fn power_posynomial(layout: &Layout, p: f64) -> Result<Posynomial> {
    let blocks = [layout.sp, layout.si];
    let terms: Vec<Monomial> = blocks
        .iter()
        .flatten()
        .flat_map(|&b| {
            (0..layout.n * layout.m).map(move |k| Monomial::from_log((0.5 / p).ln()).pow(b + k, 2.0))
        })
        .collect();
    Posynomial::new(terms)
}

fn rate_spec(
    layout: &Layout,
    amp: &DMatrix<f64>,
    noise: &[f64],
    rbar: f64,
    receiver: Receiver,
) -> Result<Option<RateSpec>> {
    let (Some(si), Some((_, rhobar))) = (layout.si, layout.split) else {
        return Ok(None);
    };
    if rbar <= 0.0 {
        return Ok(None);
    }
    let interference_terms = |n: usize| -> Vec<Monomial> {
        match (receiver, layout.sp) {
            (Receiver::Nc, Some(sp)) => tone_power_terms(sp, amp, n)
                .into_iter()
                .map(|t| t.scale(1.0 / noise[n]).pow(rhobar, 1.0))
                .collect(),
            _ => Vec::new(),
        }
    };
    let mut numerators = Vec::with_capacity(layout.n);
    let mut interference = Vec::with_capacity(layout.n);
    for (n, &sigma2) in noise.iter().enumerate().take(layout.n) {
        let signal: Vec<Monomial> = tone_power_terms(si, amp, n)
            .into_iter()
            .map(|t| t.scale(1.0 / sigma2).pow(rhobar, 1.0))
            .collect();
        let d = interference_terms(n);
        let mut num = vec![Monomial::one()];
        num.extend(signal);
        num.extend(d.iter().cloned());
        numerators.push(Posynomial::new(num)?.simplified());
        let mut den = vec![Monomial::one()];
        den.extend(d);
        interference.push(Posynomial::new(den)?.simplified());
    }
    let nc = receiver == Receiver::Nc && layout.sp.is_some();
    Ok(Some(RateSpec {
        rbar,
        numerators,
        interference: nc.then_some(interference),
    }))
}

/// Strictly feasible start: UPMF power with a fraction `ms_share` on the
/// multisine and the rest on OFDM, `ρ = ρ̄ = ½`, blended towards the
/// water-filling point until the rate target is met.
fn initial_point(
    problem: &WiptProblem,
    amp: &DMatrix<f64>,
    p: f64,
    noise: &[f64],
    ms_share: f64,
) -> Result<Vec<f64>> {
    let layout = &problem.layout;
    let (n, m) = (layout.n, layout.m);
    let eff = ChannelFreqResponse::from_matrix(amp.map(|a| num_complex::Complex64::new(a, 0.0)))?;
    let upmf = upmf_weights(&eff, p)?.amplitudes;
    let gains: Vec<f64> = (0..n).map(|t| eff.tone_norm(t).powi(2)).collect();
    let q = waterfill_levels(&gains, noise, p);
    let dirs = beam_directions(&eff);
    let shrink = 1.0 - START_SHRINK;
    let ms_share = if layout.sp.is_some() && layout.si.is_some() { ms_share } else { 1.0 };

    let point = |theta: f64| -> Vec<f64> {
        let mut x = vec![0.0; layout.n_x];
        for t in 0..n {
            for j in 0..m {
                let k = t * m + j;
                let base = ms_share * upmf[(t, j)].powi(2);
                if let Some(sp) = layout.sp {
                    x[sp + k] = ((1.0 - theta) * base * shrink).sqrt();
                }
                if let Some(si) = layout.si {
                    let wf = q[t] * dirs[(t, j)].powi(2);
                    x[si + k] = (((1.0 - theta) * base + theta * wf) * shrink).sqrt();
                }
            }
        }
        for (xi, f) in x.iter_mut().zip(&problem.floors) {
            *xi = xi.max(2.0 * f);
        }
        if let Some((rho, rhobar)) = layout.split {
            let rb = ((1.0 - theta) * 0.5 + theta) * shrink;
            x[rhobar] = rb.max(2.0 * SPLIT_FLOOR);
            x[rho] = ((1.0 - rb) * shrink).max(2.0 * SPLIT_FLOOR);
        }
        x
    };

    let Some(spec) = &problem.rate else {
        return Ok(point(0.0));
    };
    let target = spec.rbar * (1.0 + 1e-12);
    let ok = |theta: f64| problem.achieved_rate(&point(theta)).unwrap_or(0.0) >= target;
    if ok(0.0) {
        return Ok(point(0.0));
    }
    if !ok(1.0) {
        return Err(infeasible_rate(spec.rbar, problem.achieved_rate(&point(1.0)).unwrap_or(0.0)));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(point(hi))
}

fn build_problem(
    layout: Layout,
    amp: &DMatrix<f64>,
    model: &RectennaModel,
    p: f64,
    noise: &[f64],
    rbar: f64,
    receiver: Receiver,
) -> Result<WiptProblem> {
    let amp_floor = AMPLITUDE_FLOOR * (2.0 * p / (layout.n * layout.m) as f64).sqrt();
    let mut floors = vec![amp_floor; layout.n_x];
    if let Some((rho, rhobar)) = layout.split {
        floors[rho] = SPLIT_FLOOR;
        floors[rhobar] = SPLIT_FLOOR;
    }
    Ok(WiptProblem {
        zdc: zdc_posynomial(&layout, amp, model)?,
        power: power_posynomial(&layout, p)?,
        rate: rate_spec(&layout, amp, noise, rbar, receiver)?,
        floors,
        layout,
    })
}

/// Reads a block of variables back into an `N x M` amplitude matrix in the
/// physical antenna space, zeroing floored entries.
fn amplitudes_from(
    x: &[f64],
    base: Option<VarId>,
    layout: &Layout,
    channel: &ChannelFreqResponse,
    floor: f64,
) -> DMatrix<f64> {
    let (n, m) = (channel.n_tones(), channel.n_antennas());
    let Some(base) = base else {
        return DMatrix::zeros(n, m);
    };
    let clean = |v: f64| if v <= 2.0 * floor { 0.0 } else { v };
    if layout.m == m {
        DMatrix::from_fn(n, m, |t, j| clean(x[Layout::var(base, m, t, j)]))
    } else {
        let dirs = beam_directions(channel);
        DMatrix::from_fn(n, m, |t, j| clean(x[Layout::var(base, 1, t, 0)]) * dirs[(t, j)])
    }
}

fn trace_at(x: Vec<f64>, objective: f64) -> SolveTrace {
    SolveTrace {
        entries: vec![TraceEntry {
            iteration: 0,
            point: x,
            objective,
            step_norm: 0.0,
            feasibility_residual: 0.0,
        }],
        status: SolveStatus::Converged,
        message: None,
    }
}

/// Maximizes the harvested DC current subject to the transmit power budget
/// and a minimum rate `rbar` for the chosen receiver.
pub fn solve_wipt(
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
    p: f64,
    noise: &[f64],
    rbar: f64,
    options: &WiptOptions,
) -> Result<WiptSolution> {
    model.validate()?;
    check_power(p)?;
    check_noise(channel, noise)?;
    if !rbar.is_finite() {
        return Err(invalid("rate target must be finite"));
    }
    let (phi_p, phi_i) = matched_phases(channel);
    let r_wf = super::waterfilling_rate(channel, p, noise)?;
    let finish = |design: WaveformDesign, trace: SolveTrace| -> Result<WiptSolution> {
        let rate = match options.receiver {
            Receiver::Pc => rate_pc(&design.si, &design.phi_i, design.rho, channel, noise)?,
            Receiver::Nc => rate_nc(
                &design.sp,
                &design.si,
                &design.phi_p,
                &design.phi_i,
                design.rho,
                channel,
                noise,
            )?,
        };
        Ok(WiptSolution {
            zdc: zdc_superposed(&design, channel, model)?,
            design,
            rbar,
            rate,
            trace,
            options: *options,
        })
    };

    if rbar > r_wf * (1.0 + 1e-9) {
        return Err(infeasible_rate(rbar, r_wf));
    }
    if rbar >= r_wf * (1.0 - ENDPOINT_TOL) {
        let si = waterfilling(channel, p, noise)?;
        let design = WaveformDesign::new(DMatrix::zeros(si.nrows(), si.ncols()), phi_p, si, phi_i, 0.0)?;
        return finish(design, trace_at(Vec::new(), 0.0));
    }

    let amp = effective_amplitudes(channel, options.decoupled);
    let layout = Layout::new(amp.nrows(), amp.ncols(), options.multisine, true);
    let problem = build_problem(layout, &amp, model, p, noise, rbar, options.receiver)?;
    let shares: &[f64] = if options.multisine { &START_MULTISINE_SHARES } else { &[1.0] };
    let mut best: Option<SolveTrace> = None;
    for &share in shares {
        let x0 = initial_point(&problem, &amp, p, noise, share)?;
        let trace = sequential_condensation(&problem, &x0, &options.settings);
        let better = match &best {
            None => true,
            Some(b) => {
                let usable = |t: &SolveTrace| matches!(t.status, SolveStatus::Converged | SolveStatus::MaxIter);
                (usable(&trace), trace.last().objective) > (usable(b), b.last().objective)
            }
        };
        if better {
            best = Some(trace);
        }
    }
    let trace = best.expect("at least one starting point");
    let x = &trace.last().point;
    let layout = &problem.layout;
    let amp_floor = problem.floors.first().copied().unwrap_or(0.0);
    let (rho, _) = layout.split.expect("joint design has a power split");
    let design = WaveformDesign::new(
        amplitudes_from(x, layout.sp, layout, channel, amp_floor),
        phi_p,
        amplitudes_from(x, layout.si, layout, channel, amp_floor),
        phi_i,
        x[rho].min(1.0),
    )?;
    finish(design, trace)
}

/// Joint space-frequency design for a decoder that cancels the multisine.
pub fn algorithm1_pc(
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
    p: f64,
    noise: &[f64],
    rbar: f64,
) -> Result<WiptSolution> {
    solve_wipt(channel, model, p, noise, rbar, &WiptMode::PcJoint.options())
}

/// As [`algorithm1_pc`] with per-tone matched beamforming fixed, leaving one
/// amplitude per tone and waveform.
pub fn algorithm2_pc_decoupled(
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
    p: f64,
    noise: &[f64],
    rbar: f64,
) -> Result<WiptSolution> {
    solve_wipt(channel, model, p, noise, rbar, &WiptMode::PcDecoupled.options())
}

/// Design for a decoder that treats the multisine as interference.
pub fn algorithm3_nc(
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
    p: f64,
    noise: &[f64],
    rbar: f64,
) -> Result<WiptSolution> {
    solve_wipt(channel, model, p, noise, rbar, &WiptMode::Nc.options())
}

/// OFDM-only design (no multisine) with power splitting.
pub fn no_wpt(
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
    p: f64,
    noise: &[f64],
    rbar: f64,
) -> Result<WiptSolution> {
    solve_wipt(channel, model, p, noise, rbar, &WiptMode::NoWpt.options())
}

/// Multisine amplitudes maximizing the DC current under the power budget
/// alone, with all received power sent to the harvester.
pub fn optimize_multisine_wpt(
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
    p: f64,
) -> Result<MultisineSolution> {
    optimize_multisine_wpt_with(channel, model, p, &CondensationSettings::default())
}

pub fn optimize_multisine_wpt_with(
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
    p: f64,
    settings: &CondensationSettings,
) -> Result<MultisineSolution> {
    model.validate()?;
    check_power(p)?;
    let amp = channel.amplitudes();
    let layout = Layout::new(amp.nrows(), amp.ncols(), true, false);
    let noise = vec![1.0; amp.nrows()];
    let problem = build_problem(layout, &amp, model, p, &noise, 0.0, Receiver::Pc)?;
    let x0 = initial_point(&problem, &amp, p, &noise, 1.0)?;
    let trace = sequential_condensation(&problem, &x0, settings);
    let floor = problem.floors[0];
    let amplitudes = amplitudes_from(&trace.last().point, Some(0), &problem.layout, channel, floor);
    let (phases, _) = matched_phases(channel);
    let design = WaveformDesign::multisine(amplitudes.clone(), phases.clone())?;
    Ok(MultisineSolution {
        zdc: crate::rectenna::zdc_multisine(&design, channel, model)?,
        amplitudes,
        phases,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanmodel::{flat_channel, iid_rayleigh};
    use crate::rectenna::{zdc_multisine, zdc_superposed};
    use crate::strategies::{ass_weights, waterfilling_rate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const P: f64 = 1e-4;

    fn check_invariants(sol: &WiptSolution, p: f64, noise: &[f64], channel: &ChannelFreqResponse) {
        let d = &sol.design;
        assert!(d.transmit_power() <= p * (1.0 + 1e-6), "power {}", d.transmit_power());
        assert!((0.0..=1.0).contains(&d.rho));
        let rate = match sol.options.receiver {
            Receiver::Pc => rate_pc(&d.si, &d.phi_i, d.rho, channel, noise).unwrap(),
            Receiver::Nc => {
                rate_nc(&d.sp, &d.si, &d.phi_p, &d.phi_i, d.rho, channel, noise).unwrap()
            }
        };
        assert!(rate >= sol.rbar - 1e-6, "rate {rate} < {}", sol.rbar);
        let obj = sol.trace.objectives();
        for w in obj.windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-8), "trace decreased: {obj:?}");
        }
        assert!(sol.trace.iterations() <= 50);
    }

    #[test]
    fn posynomial_matches_direct_evaluation() {
        let model = RectennaModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = iid_rayleigh(3, 2, &mut rng).unwrap();
        let amp = h.amplitudes();
        let layout = Layout::new(3, 2, true, true);
        let z = zdc_posynomial(&layout, &amp, &model).unwrap();
        let x: Vec<f64> = (0..layout.n_x).map(|k| 0.01 * (1.0 + k as f64 * 0.37).sin().abs() + 1e-3).collect();
        let (rho, _) = layout.split.unwrap();
        let (pp, pi) = matched_phases(&h);
        let take = |b: usize| DMatrix::from_fn(3, 2, |n, m| x[Layout::var(b, 2, n, m)]);
        let d = WaveformDesign::new(take(layout.sp.unwrap()), pp, take(layout.si.unwrap()), pi, x[rho]).unwrap();
        let direct = zdc_superposed(&d, &h, &model).unwrap();
        assert!((z.eval(&x) - direct).abs() / direct < 1e-12);
    }

    #[test]
    fn single_tone_wpt_uses_all_power() {
        let model = RectennaModel::default();
        let h = flat_channel(1, 1).unwrap();
        let sol = optimize_multisine_wpt(&h, &model, P).unwrap();
        assert!((sol.amplitudes[(0, 0)] - (2.0 * P).sqrt()).abs() < 1e-6 * (2.0 * P).sqrt());
    }

    #[test]
    fn linear_model_wpt_converges_to_ass() {
        let model = RectennaModel::default().with_order(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = iid_rayleigh(4, 1, &mut rng).unwrap();
        let sol = optimize_multisine_wpt(&h, &model, P).unwrap();
        let ass = ass_weights(&h, P).unwrap();
        let best = crate::strategies::strongest_tone(&h).unwrap();
        // Condensation moves power geometrically towards the strongest tone,
        // so the allocation is dominated by it rather than exactly on it.
        let dominant = (0..4)
            .max_by(|&a, &b| sol.amplitudes[(a, 0)].total_cmp(&sol.amplitudes[(b, 0)]))
            .unwrap();
        assert_eq!(dominant, best);
        let ass_z = zdc_multisine(&WaveformDesign::multisine(ass.amplitudes, ass.phases).unwrap(), &h, &model).unwrap();
        assert!(sol.zdc >= ass_z * 0.99);
    }

    #[test]
    fn nonlinear_wpt_beats_ass_on_flat_two_tones() {
        let model = RectennaModel::default();
        let h = flat_channel(2, 1).unwrap();
        let sol = optimize_multisine_wpt(&h, &model, P).unwrap();
        let ass = ass_weights(&h, P).unwrap();
        let ass_z = zdc_multisine(&WaveformDesign::multisine(ass.amplitudes, ass.phases).unwrap(), &h, &model).unwrap();
        assert!(sol.zdc > ass_z);
    }

    #[test]
    fn pc_solution_respects_constraints() {
        let model = RectennaModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = iid_rayleigh(4, 1, &mut rng).unwrap();
        let noise = vec![P / 100.0; 4];
        let r_wf = waterfilling_rate(&h, P, &noise).unwrap();
        for frac in [0.0, 0.3, 0.7, 1.0] {
            let sol = algorithm1_pc(&h, &model, P, &noise, frac * r_wf).unwrap();
            check_invariants(&sol, P, &noise, &h);
            if frac > 0.0 && frac < 1.0 {
                let x = &sol.trace.last().point;
                let n_x = x.len();
                assert!((x[n_x - 2] + x[n_x - 1] - 1.0).abs() < 1e-6);
            }
        }
        let top = algorithm1_pc(&h, &model, P, &noise, r_wf).unwrap();
        assert!((top.rate - r_wf).abs() < 1e-4 * r_wf);
        assert_eq!(top.design.rho, 0.0);
        assert!(algorithm1_pc(&h, &model, P, &noise, 1.01 * r_wf).is_err());
    }

    #[test]
    fn zero_rate_recovers_wpt_optimum() {
        let model = RectennaModel::default();
        let h = flat_channel(8, 1).unwrap();
        let noise = vec![P / 100.0; 8];
        let wpt = optimize_multisine_wpt(&h, &model, P).unwrap();
        let sol = algorithm1_pc(&h, &model, P, &noise, 0.0).unwrap();
        assert!(sol.design.rho > 1.0 - 1e-6);
        assert!((sol.zdc - wpt.zdc).abs() <= 0.01 * wpt.zdc, "{} vs {}", sol.zdc, wpt.zdc);
    }

    #[test]
    fn decoupling_is_vacuous_for_one_antenna() {
        let model = RectennaModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = iid_rayleigh(3, 1, &mut rng).unwrap();
        let noise = vec![P / 100.0; 3];
        let rbar = 0.5 * waterfilling_rate(&h, P, &noise).unwrap();
        let a = algorithm1_pc(&h, &model, P, &noise, rbar).unwrap();
        let b = algorithm2_pc_decoupled(&h, &model, P, &noise, rbar).unwrap();
        assert!((a.zdc - b.zdc).abs() <= 1e-9 * a.zdc);
        assert!((a.rate - b.rate).abs() <= 1e-9 * a.rate);
        for (x, y) in a.design.si.iter().zip(b.design.si.iter()) {
            assert!((x - y).abs() <= 1e-9 * a.design.si.amax());
        }
    }

    #[test]
    fn nc_without_multisine_equals_no_wpt() {
        let model = RectennaModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = iid_rayleigh(3, 1, &mut rng).unwrap();
        let noise = vec![P / 100.0; 3];
        let rbar = 0.5 * waterfilling_rate(&h, P, &noise).unwrap();
        let base = no_wpt(&h, &model, P, &noise, rbar).unwrap();
        let opts = WiptOptions {
            receiver: Receiver::Nc,
            ..WiptMode::NoWpt.options()
        };
        let nc = solve_wipt(&h, &model, P, &noise, rbar, &opts).unwrap();
        assert!((nc.zdc - base.zdc).abs() <= 1e-9 * base.zdc);
        assert!((nc.rate - base.rate).abs() <= 1e-9 * base.rate.max(1.0));
        check_invariants(&nc, P, &noise, &h);
    }

    #[test]
    fn nc_harvests_no_more_than_pc() {
        let model = RectennaModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = iid_rayleigh(4, 1, &mut rng).unwrap();
        let noise = vec![P / 100.0; 4];
        let r_wf = waterfilling_rate(&h, P, &noise).unwrap();
        for frac in [0.2, 0.5, 0.8] {
            let pc = algorithm1_pc(&h, &model, P, &noise, frac * r_wf).unwrap();
            let nc = algorithm3_nc(&h, &model, P, &noise, frac * r_wf).unwrap();
            check_invariants(&nc, P, &noise, &h);
            assert!(nc.zdc <= pc.zdc * 1.01, "{frac}: nc {} pc {}", nc.zdc, pc.zdc);
        }
    }

    #[test]
    fn nc_at_high_snr_keeps_the_multisine_small() {
        let model = RectennaModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let h = iid_rayleigh(4, 1, &mut rng).unwrap();
        let noise = vec![P / 1e4; 4];
        let r_wf = waterfilling_rate(&h, P, &noise).unwrap();
        let nc = algorithm3_nc(&h, &model, P, &noise, 0.8 * r_wf).unwrap();
        assert!(nc.multisine_power() < 0.1 * P, "multisine power {}", nc.multisine_power());
    }

    #[test]
    fn solution_json_has_expected_fields() {
        let model = RectennaModel::default();
        let h = flat_channel(2, 1).unwrap();
        let noise = vec![P / 100.0; 2];
        let sol = algorithm1_pc(&h, &model, P, &noise, 1.0).unwrap();
        let v = sol.to_json();
        for key in ["rate", "zdc", "rho", "multisine_amplitudes", "ofdm_phases", "status", "iterations"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
