//! Sequential vs rayon execution of the parallel loops.
//! Build with `--no-default-features` to see the fallback path only.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wipt_core::chanmodel::iid_rayleigh;
use wipt_core::rateenergy::{papr_ccdf_ofdm, sweep_region, RegionMode};
use wipt_core::rectenna::{oracle_zdc_with, uniform_noise, OracleConfig, RectennaModel, WaveformDesign};
use wipt_core::scaling::{scaling_experiment, ChannelKind, ScalingRun, Strategy, Waveform};
use wipt_core::strategies::matched_phases;
use wipt_core::Exec;

const EXECS: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn oracle(c: &mut Criterion) {
    let model = RectennaModel::default();
    let h = iid_rayleigh(4, 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let (pp, pi) = matched_phases(&h);
    let s = DMatrix::from_element(4, 2, 2e-3);
    let design = WaveformDesign::new(s.clone(), pp, s, pi, 0.7).unwrap();
    let cfg = OracleConfig {
        samples_per_period: 64,
        symbol_draws: 20_000,
        f0_multiple: 8,
    };
    let mut g = c.benchmark_group("oracle_zdc");
    for (name, exec) in EXECS {
        g.bench_function(name, |b| {
            b.iter(|| oracle_zdc_with(&design, &h, &model, &cfg, 3, exec).unwrap())
        });
    }
    g.finish();
}

fn scaling(c: &mut Criterion) {
    let model = RectennaModel::default();
    let run = ScalingRun {
        waveform: Waveform::Multisine,
        strategy: Strategy::Upmf,
        channel_kind: ChannelKind::Selective,
        n_list: vec![4, 8, 16],
        trials: 200,
    };
    let mut g = c.benchmark_group("scaling");
    for (name, exec) in EXECS {
        g.bench_function(name, |b| b.iter(|| scaling_experiment(&run, 1e-5, &model, 9, exec).unwrap()));
    }
    g.finish();
}

fn papr(c: &mut Criterion) {
    let mut g = c.benchmark_group("papr_ccdf");
    for (name, exec) in EXECS {
        g.bench_with_input(BenchmarkId::new(name, 64), &64, |b, &n| {
            b.iter(|| papr_ccdf_ofdm(n, 20_000, 5, exec).unwrap())
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let model = RectennaModel::default();
    let h = iid_rayleigh(4, 1, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let noise = uniform_noise(4, 1e-7);
    let mut g = c.benchmark_group("sweep_region");
    g.sample_size(10);
    for (name, exec) in EXECS {
        g.bench_function(name, |b| {
            b.iter(|| sweep_region(&h, &model, 1e-5, &noise, RegionMode::Pc, 8, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, oracle, scaling, papr, sweep);
criterion_main!(benches);
