//! Experiment drivers. Every driver writes its CSVs under `out` and a
//! `manifest.json` describing the run.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use wipt_core::rateenergy::{
    papr_ccdf_ofdm, papr_multisine, sweep_region, sweep_region_at, RegionBoundary, RegionManifest,
};
use wipt_core::rectenna::{oracle_suite, uniform_noise, OracleCheck, OracleConfig};
use wipt_core::scaling::scaling_experiment;
use wipt_core::Exec;

use crate::config::{ExperimentConfig, Mode, Resolved};
use crate::error::CliError;

/// Oracle settings for the validation suite: 64 samples per period at
/// `f0 = 8Δf` keep every order-4 product of up to four tones off DC.
pub fn oracle_config(symbol_draws: usize) -> OracleConfig {
    OracleConfig {
        samples_per_period: 64,
        symbol_draws,
        f0_multiple: 8,
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = out.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

fn write_json(out: &Path, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(wipt_core::Error::from)?;
    let path = out.join(name);
    fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Lower-case tag of a unit enum as it appears in the config.
fn tag<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn manifest(cfg: &ExperimentConfig, resolved: &Resolved, extra: serde_json::Value) -> serde_json::Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": chrono::Utc::now().to_rfc3339(),
        "config": cfg,
        "resolved": resolved,
        "run": extra,
    })
}

pub fn run(cfg: &ExperimentConfig, base: &Path, out: &Path) -> Result<(), CliError> {
    let resolved = cfg.resolve()?;
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    match cfg.mode {
        Mode::Region => run_region(cfg, &resolved, base, out),
        Mode::Scaling => run_scaling(cfg, &resolved, out),
        Mode::Papr => run_papr(cfg, &resolved, out),
        Mode::Validate => {
            let checks = run_validate(cfg.validate.instances, cfg.validate.symbol_draws, cfg.seed, cfg, Some(out))?;
            write_json(out, "manifest.json", &manifest(cfg, &resolved, json!({ "checks": checks.len() })))?;
            finish_validate(&checks)
        }
    }
}

fn run_region(cfg: &ExperimentConfig, resolved: &Resolved, base: &Path, out: &Path) -> Result<(), CliError> {
    let channel = cfg.build_channel(base)?;
    write_json(
        out,
        "channel.json",
        &serde_json::to_value(channel.to_json()).map_err(wipt_core::Error::from)?,
    )?;
    let noise = uniform_noise(channel.n_tones(), resolved.noise_w);
    let model = cfg.model();
    let mut failed_modes = Vec::new();
    println!("mode     solved  max_rate     zdc@0 (A)    zdc@max (A)");
    for &mode in &cfg.region.modes {
        let region: RegionBoundary = match &cfg.region.rbar {
            Some(targets) => {
                sweep_region_at(&channel, &model, resolved.power_w, &noise, mode, targets, Exec::Parallel)?
            }
            None => sweep_region(
                &channel,
                &model,
                resolved.power_w,
                &noise,
                mode,
                cfg.region.grid_size,
                Exec::Parallel,
            )?,
        };
        let name = mode.as_str();
        region.write_csv(create(out, &format!("region_{name}.csv"))?)?;
        region.write_hull_csv(create(out, &format!("hull_{name}.csv"))?)?;
        region.write_solutions_csv(create(out, &format!("solutions_{name}.csv"))?)?;
        write_json(out, &format!("solutions_{name}.json"), &region.solutions_json())?;

        let solved = region.by_rate();
        let first = solved.first().map_or(f64::NAN, |p| p.zdc);
        let last = solved.last().map_or(f64::NAN, |p| p.zdc);
        println!(
            "{name:<8} {:>3}/{:<3} {:<12.5} {:<12.5e} {:<12.5e}",
            solved.len(),
            region.points.len(),
            region.max_rate,
            first,
            last
        );
        if solved.is_empty() {
            failed_modes.push(name);
        }
    }
    let region_manifest = RegionManifest {
        channel_seed: resolved.channel_seed,
        power_w: resolved.power_w,
        noise_w: resolved.noise_w,
        n_tones: channel.n_tones(),
        n_antennas: channel.n_antennas(),
        taylor_order: resolved.taylor_order,
        grid_size: cfg.region.rbar.as_ref().map_or(cfg.region.grid_size, Vec::len),
        modes: cfg.region.modes.clone(),
    };
    write_json(
        out,
        "manifest.json",
        &manifest(cfg, resolved, serde_json::to_value(region_manifest).map_err(wipt_core::Error::from)?),
    )?;
    if failed_modes.is_empty() {
        Ok(())
    } else {
        Err(CliError::AllPointsFailed(failed_modes.join(", ")))
    }
}

fn run_scaling(cfg: &ExperimentConfig, resolved: &Resolved, out: &Path) -> Result<(), CliError> {
    let model = cfg.model();
    let mut summary = csv::Writer::from_writer(create(out, "scaling_summary.csv")?);
    summary
        .write_record([
            "run", "waveform", "strategy", "channel", "fit_class", "aic_flat", "aic_linear", "aic_log2", "linear_r2",
        ])
        .map_err(wipt_core::Error::from)?;
    println!("run  waveform   strategy channel    growth");
    for (i, run) in cfg.scaling.runs.iter().enumerate() {
        let result = scaling_experiment(run, resolved.power_w, &model, cfg.seed, Exec::Parallel)?;
        let (w, s, k) = (tag(&run.waveform), tag(&run.strategy), tag(&run.channel_kind));
        result.write_csv(create(out, &format!("scaling_{i:02}_{w}_{s}_{k}.csv"))?)?;
        let fit = result.fit;
        summary
            .write_record([
                i.to_string(),
                w.clone(),
                s.clone(),
                k.clone(),
                fit.class.as_str().to_string(),
                format!("{:e}", fit.aic[0]),
                format!("{:e}", fit.aic[1]),
                format!("{:e}", fit.aic[2]),
                format!("{:e}", fit.linear_r2),
            ])
            .map_err(wipt_core::Error::from)?;
        println!("{i:<4} {w:<10} {s:<8} {k:<10} {}", fit.class.as_str());
    }
    summary.flush()?;
    write_json(out, "manifest.json", &manifest(cfg, resolved, json!({ "runs": cfg.scaling.runs.len() })))
}

fn run_papr(cfg: &ExperimentConfig, resolved: &Resolved, out: &Path) -> Result<(), CliError> {
    let p = &cfg.papr;
    let mut wtr = csv::Writer::from_writer(create(out, "papr.csv")?);
    wtr.write_record(["N", "threshold_db", "ccdf_ofdm", "papr_multisine_db"])
        .map_err(wipt_core::Error::from)?;
    println!("N      multisine (dB)  OFDM at 1e-2 (dB)");
    for &n in &p.n_list {
        let ccdf = papr_ccdf_ofdm(n, p.trials, cfg.seed, Exec::Parallel)?;
        let ms = papr_multisine(n)?;
        for (x, c) in ccdf.table(p.step_db) {
            wtr.write_record([n.to_string(), format!("{x:e}"), format!("{c:e}"), format!("{ms:e}")])
                .map_err(wipt_core::Error::from)?;
        }
        println!("{n:<6} {ms:<15.2} {:.2}", ccdf.level_at(1e-2));
    }
    wtr.flush()?;
    write_json(out, "manifest.json", &manifest(cfg, resolved, json!({ "n_list": p.n_list })))
}

/// Runs the oracle suite, prints the table and optionally writes
/// `validate.csv`.
pub fn run_validate(
    instances: usize,
    symbol_draws: usize,
    seed: u64,
    cfg: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<Vec<OracleCheck>, CliError> {
    let checks = oracle_suite(instances, seed, &oracle_config(symbol_draws), &cfg.model(), Exec::Parallel)?;
    println!("inst  N  M  rho   waveform    analytic (A)   oracle (A)     rel.err    tol      result");
    for c in &checks {
        println!(
            "{:<5} {:<2} {:<2} {:<5} {:<11} {:<14.6e} {:<14.6e} {:<10.2e} {:<8.0e} {}",
            c.instance,
            c.n_tones,
            c.n_antennas,
            c.rho,
            c.waveform,
            c.analytic,
            c.oracle,
            c.rel_error,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    if let Some(out) = out {
        let mut wtr = csv::Writer::from_writer(create(out, "validate.csv")?);
        for c in &checks {
            wtr.serialize(c).map_err(wipt_core::Error::from)?;
        }
        wtr.flush()?;
    }
    Ok(checks)
}

pub fn finish_validate(checks: &[OracleCheck]) -> Result<(), CliError> {
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(failed))
    }
}
