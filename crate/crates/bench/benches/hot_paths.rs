use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mcpg_core::{
    learn, lyapunov_estimate, simulate_window, ChaosControl, ControlLaw, ControlledCpg, CpgNetwork, CpgParams,
    CpgState, LearnerConfig, LegId, Morphology, PlantConfig, Scenario,
};

fn cpg(c: &mut Criterion) {
    let params = CpgParams::default();
    c.bench_function("cpg_tick_p5_1000", |b| {
        b.iter_batched(
            || ControlledCpg::new(params, ChaosControl::new(5).unwrap(), CpgState::default()).unwrap(),
            |mut cpg| {
                for _ in 0..1000 {
                    black_box(cpg.tick());
                }
            },
            BatchSize::SmallInput,
        )
    });
    c.bench_function("network_step_hexapod_1000", |b| {
        b.iter_batched(
            || CpgNetwork::new(Morphology::Hexapod, params, ControlLaw::default(), 7).unwrap(),
            |mut net| {
                for _ in 0..1000 {
                    black_box(net.step());
                }
            },
            BatchSize::SmallInput,
        )
    });
    c.bench_function("lyapunov_10k", |b| b.iter(|| lyapunov_estimate(&params, black_box(10_000), CpgState::default())));
}

fn plant(c: &mut Criterion) {
    let cfg = PlantConfig::default();
    let scenario = Scenario::uniform(Morphology::Hexapod, &[LegId::R1], 4).unwrap();
    c.bench_function("simulate_window_400", |b| b.iter(|| simulate_window(&cfg, black_box(&scenario), 3).unwrap()));
}

fn learner(c: &mut Criterion) {
    let cfg = PlantConfig::default();
    let scenario = Scenario::uniform(Morphology::Hexapod, &[LegId::R1, LegId::R3, LegId::L2], 4).unwrap();
    let mut seed = 0;
    c.bench_function("learn_three_disabled", |b| {
        b.iter(|| {
            seed += 1;
            learn(&cfg, &scenario, &LearnerConfig { seed, ..LearnerConfig::default() }).unwrap()
        })
    });
}

criterion_group!(benches, cpg, plant, learner);
criterion_main!(benches);
