use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use pcfsqueeze::propagator::NoiseSource;
use pcfsqueeze::stochastic::Arm;
use pcfsqueeze::PulseShape;
use pcfsqueeze_bench::simulation;

const SOURCE: NoiseSource = NoiseSource {
    master_seed: 1,
    trajectory: 0,
    arm: Arm::A,
};

fn fft_round_trip(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_round_trip");
    for n in [256usize, 1024, 4096] {
        let sim = simulation(n, 1e-3);
        let grid = sim.grid();
        let mut ws = grid.workspace();
        let mut data: Vec<Complex64> = (0..n).map(|j| Complex64::new(j as f64, 1.0)).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                grid.forward(&mut data, &mut ws);
                grid.backward(&mut data, &mut ws);
                black_box(&data);
            })
        });
    }
    group.finish();
}

fn nonlinear_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("nonlinear_step");
    for n in [256usize, 1024, 4096] {
        let sim = simulation(n, 1e-3);
        let prop = sim.propagator();
        let mut ws = sim.grid().workspace();
        let mut field = prop.initial_field(1.0, PulseShape::Sech, sim.scales().nbar, SOURCE, &mut ws);
        let mut stepper = prop.stepper(SOURCE);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| stepper.nonlinear_step(&mut field, 1e-3).unwrap())
        });
    }
    group.finish();
}

fn strang_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("strang_step");
    for n in [256usize, 1024, 4096] {
        let sim = simulation(n, 1e-3);
        let prop = sim.propagator();
        let mut ws = sim.grid().workspace();
        let mut field = prop.initial_field(1.0, PulseShape::Sech, sim.scales().nbar, SOURCE, &mut ws);
        let mut stepper = prop.stepper(SOURCE);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| stepper.strang_step(&mut field, 1e-3).unwrap())
        });
    }
    group.finish();
}

fn trajectory(c: &mut Criterion) {
    let mut group = c.benchmark_group("trajectory_pair_1m");
    group.sample_size(10);
    for (n, dz) in [(256usize, 4e-3), (1024, 2e-3)] {
        let sim = simulation(n, dz);
        let amplitude = pcfsqueeze::arm_amplitude(14.6, sim.scales()).unwrap();
        let z = sim.scales().length_to_z(1.0);
        group.bench_with_input(BenchmarkId::new(format!("dz={dz}"), n), &n, |b, _| {
            b.iter(|| black_box(sim.run_trajectory(amplitude, &[z], 1, 0).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, fft_round_trip, nonlinear_step, strang_step, trajectory);
criterion_main!(benches);
