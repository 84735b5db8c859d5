//! Rate-energy region boundaries traced by sweeping the rate target, their
//! time-sharing hulls, and PAPR diagnostics.

mod papr;

pub use papr::{papr_ccdf_ofdm, papr_multisine, PaprCcdf};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chanmodel::ChannelFreqResponse;
use crate::error::{invalid, Result};
use crate::gpsolve::SolveStatus;
use crate::par::{map_indexed, Exec};
use crate::rectenna::RectennaModel;
use crate::strategies::{solve_wipt, waterfilling_rate, WiptMode, WiptSolution};

pub const DEFAULT_GRID_SIZE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionMode {
    Pc,
    Nc,
    NoWpt,
}

impl RegionMode {
    pub fn wipt_mode(self) -> WiptMode {
        match self {
            RegionMode::Pc => WiptMode::PcJoint,
            RegionMode::Nc => WiptMode::Nc,
            RegionMode::NoWpt => WiptMode::NoWpt,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegionMode::Pc => "pc",
            RegionMode::Nc => "nc",
            RegionMode::NoWpt => "no_wpt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEnergyPoint {
    pub rbar: f64,
    /// Bits per OFDM symbol; NaN for a failed grid point.
    pub rate: f64,
    pub rate_per_n: f64,
    pub zdc: f64,
    pub rho: f64,
    pub p_multisine: f64,
    pub p_ofdm: f64,
    pub iterations: usize,
    /// Solver status, or `failed` when the point produced no solution.
    pub status: String,
    #[serde(skip)]
    pub solution: Option<WiptSolution>,
}

impl RateEnergyPoint {
    fn from_solution(rbar: f64, n: usize, sol: WiptSolution) -> Self {
        Self {
            rbar,
            rate: sol.rate,
            rate_per_n: sol.rate / n as f64,
            zdc: sol.zdc,
            rho: sol.design.rho,
            p_multisine: sol.multisine_power(),
            p_ofdm: sol.ofdm_power(),
            iterations: sol.trace.iterations(),
            status: sol.trace.status.as_str().to_string(),
            solution: Some(sol),
        }
    }

    fn failed(rbar: f64, message: String) -> Self {
        Self {
            rbar,
            rate: f64::NAN,
            rate_per_n: f64::NAN,
            zdc: f64::NAN,
            rho: f64::NAN,
            p_multisine: f64::NAN,
            p_ofdm: f64::NAN,
            iterations: 0,
            status: format!("failed: {message}"),
            solution: None,
        }
    }

    pub fn is_solved(&self) -> bool {
        self.solution.is_some()
    }

    /// Solved and the condensation loop ended normally.
    pub fn is_healthy(&self) -> bool {
        self.solution.as_ref().is_some_and(|s| {
            matches!(s.trace.status, SolveStatus::Converged | SolveStatus::MaxIter)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HullPoint {
    pub rate: f64,
    pub zdc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionBoundary {
    pub mode: RegionMode,
    pub n_tones: usize,
    /// Water-filling rate, the largest requested rate.
    pub max_rate: f64,
    /// Grid points in increasing `rbar`.
    pub points: Vec<RateEnergyPoint>,
    pub hull: Vec<HullPoint>,
}

impl RegionBoundary {
    pub fn solved(&self) -> impl Iterator<Item = &RateEnergyPoint> {
        self.points.iter().filter(|p| p.is_solved())
    }

    /// Points sorted by achieved rate, failed points dropped.
    pub fn by_rate(&self) -> Vec<&RateEnergyPoint> {
        let mut pts: Vec<_> = self.solved().collect();
        pts.sort_by(|a, b| a.rate.total_cmp(&b.rate));
        pts
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "rbar",
            "rate",
            "rate_per_N",
            "zdc_amps",
            "rho",
            "p_multisine",
            "p_ofdm",
            "iterations",
            "status",
        ])?;
        for p in &self.points {
            wtr.write_record([
                format!("{:e}", p.rbar),
                format!("{:e}", p.rate),
                format!("{:e}", p.rate_per_n),
                format!("{:e}", p.zdc),
                format!("{:e}", p.rho),
                format!("{:e}", p.p_multisine),
                format!("{:e}", p.p_ofdm),
                p.iterations.to_string(),
                p.status.clone(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_hull_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["rate", "rate_per_N", "zdc_amps"])?;
        for h in &self.hull {
            wtr.write_record([
                format!("{:e}", h.rate),
                format!("{:e}", h.rate / self.n_tones as f64),
                format!("{:e}", h.zdc),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Long-format dump of every solved design: one row per grid point,
    /// tone and antenna.
    pub fn write_solutions_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["rbar", "tone", "antenna", "s_p", "phi_p", "s_i", "phi_i", "rho"])?;
        for p in &self.points {
            let Some(sol) = &p.solution else { continue };
            let d = &sol.design;
            for n in 0..d.n_tones() {
                for m in 0..d.n_antennas() {
                    wtr.write_record([
                        format!("{:e}", p.rbar),
                        n.to_string(),
                        m.to_string(),
                        format!("{:e}", d.sp[(n, m)]),
                        format!("{:e}", d.phi_p[(n, m)]),
                        format!("{:e}", d.si[(n, m)]),
                        format!("{:e}", d.phi_i[(n, m)]),
                        format!("{:e}", d.rho),
                    ])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// One JSON object per solved grid point.
    pub fn solutions_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.points
                .iter()
                .filter_map(|p| p.solution.as_ref().map(WiptSolution::to_json))
                .collect(),
        )
    }
}

/// Evenly spaced rate targets from 0 to `max_rate` inclusive.
pub fn rate_grid(max_rate: f64, grid_size: usize) -> Result<Vec<f64>> {
    if grid_size < 2 {
        return Err(invalid("grid_size must be at least 2"));
    }
    Ok((0..grid_size)
        .map(|i| {
            if i + 1 == grid_size {
                max_rate
            } else {
                max_rate * i as f64 / (grid_size - 1) as f64
            }
        })
        .collect())
}

/// Solves the design at every rate target, independently and in parallel
/// under `exec`. Failures are recorded per point.
pub fn sweep_region(
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
    p: f64,
    noise: &[f64],
    mode: RegionMode,
    grid_size: usize,
    exec: Exec,
) -> Result<RegionBoundary> {
    let max_rate = waterfilling_rate(channel, p, noise)?;
    sweep_region_at(channel, model, p, noise, mode, &rate_grid(max_rate, grid_size)?, exec)
}

/// As [`sweep_region`] on explicit rate targets.
pub fn sweep_region_at(
    channel: &ChannelFreqResponse,
    model: &RectennaModel,
    p: f64,
    noise: &[f64],
    mode: RegionMode,
    targets: &[f64],
    exec: Exec,
) -> Result<RegionBoundary> {
    model.validate()?;
    let max_rate = waterfilling_rate(channel, p, noise)?;
    let options = mode.wipt_mode().options();
    let n = channel.n_tones();
    let points = map_indexed(exec, targets.len(), |i| {
        let rbar = targets[i];
        match solve_wipt(channel, model, p, noise, rbar, &options) {
            Ok(sol) => RateEnergyPoint::from_solution(rbar, n, sol),
            Err(e) => RateEnergyPoint::failed(rbar, e.to_string()),
        }
    });
    let pairs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.is_solved())
        .map(|p| (p.rate, p.zdc))
        .collect();
    let hull = if pairs.len() >= 2 { ts_hull(&pairs)? } else { Vec::new() };
    Ok(RegionBoundary {
        mode,
        n_tones: n,
        max_rate,
        points,
        hull,
    })
}

fn cross(o: HullPoint, a: HullPoint, b: HullPoint) -> f64 {
    (a.rate - o.rate) * (b.zdc - o.zdc) - (a.zdc - o.zdc) * (b.rate - o.rate)
}

/// Upper concave envelope of achievable `(rate, zdc)` pairs, extended to
/// both axes: `(0, zdc at the lowest rate)` and `(highest rate, 0)` are
/// achievable by lowering the rate or switching the harvester off.
pub fn ts_hull(points: &[(f64, f64)]) -> Result<Vec<HullPoint>> {
    if points.len() < 2 {
        return Err(invalid("time-sharing hull needs at least two points"));
    }
    if points.iter().any(|(r, z)| !(r.is_finite() && z.is_finite())) {
        return Err(invalid("hull points must be finite"));
    }
    let mut pts: Vec<HullPoint> = points.iter().map(|&(rate, zdc)| HullPoint { rate, zdc }).collect();
    pts.sort_by(|a, b| a.rate.total_cmp(&b.rate).then(b.zdc.total_cmp(&a.zdc)));
    let first = pts[0];
    let last_rate = pts[pts.len() - 1].rate;
    let z_at_zero = pts
        .iter()
        .filter(|p| p.rate == first.rate)
        .map(|p| p.zdc)
        .fold(f64::NEG_INFINITY, f64::max);
    pts.insert(0, HullPoint { rate: 0.0, zdc: z_at_zero });
    pts.push(HullPoint { rate: last_rate, zdc: 0.0 });

    let mut hull: Vec<HullPoint> = Vec::new();
    for p in pts {
        if let Some(last) = hull.last() {
            if p.rate == last.rate {
                if p.zdc <= last.zdc {
                    continue;
                }
                hull.pop();
            }
        }
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) >= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    // The vertical drop at the highest rate is part of the region, not
    // the upper boundary.
    if hull.len() >= 2 && hull[hull.len() - 1].rate == hull[hull.len() - 2].rate {
        hull.pop();
    }
    Ok(hull)
}

/// Hull value at `rate` by linear interpolation; `None` outside its span.
pub fn hull_at(hull: &[HullPoint], rate: f64) -> Option<f64> {
    let last = hull.last()?;
    if rate < hull[0].rate || rate > last.rate {
        return None;
    }
    hull.windows(2)
        .find(|w| rate >= w[0].rate && rate <= w[1].rate)
        .map(|w| {
            let span = w[1].rate - w[0].rate;
            if span == 0.0 {
                w[0].zdc.max(w[1].zdc)
            } else {
                w[0].zdc + (w[1].zdc - w[0].zdc) * (rate - w[0].rate) / span
            }
        })
        .or(Some(last.zdc))
}

/// Run parameters recorded next to the boundary CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionManifest {
    pub channel_seed: Option<u64>,
    pub power_w: f64,
    pub noise_w: f64,
    pub n_tones: usize,
    pub n_antennas: usize,
    pub taylor_order: u32,
    pub grid_size: usize,
    pub modes: Vec<RegionMode>,
}
