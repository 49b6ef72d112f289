use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use geostop::bounds::{all_reports, ErrorConstants};
use geostop::oracle::value_iteration_adversary;
use geostop::simulator::{run, SimulationConfig};
use geostop::strategies::{AdversaryStrategy, PlayerStrategy};
use geostop::Side;
use geostop_bench::{states, upper_handles};

const DELTA: f64 = 0.01;

fn potentials(c: &mut Criterion) {
    for n in [3usize, 8] {
        let xs = states(n, DELTA, if n > 4 { 1 } else { 9 }).unwrap();
        for h in upper_handles(n, DELTA).unwrap() {
            let id = format!("{}/N={n}", h.family());
            let mut g = c.benchmark_group("potential_value");
            g.sample_size(10);
            g.bench_function(BenchmarkId::from_parameter(&id), |b| {
                b.iter(|| {
                    for x in &xs {
                        black_box(h.value(black_box(x), Side::Upper).unwrap());
                    }
                })
            });
            g.finish();
            let mut g = c.benchmark_group("potential_gradient");
            g.sample_size(10);
            let mut out = vec![0.0; n];
            g.bench_function(BenchmarkId::from_parameter(&id), |b| {
                b.iter(|| {
                    for x in &xs {
                        h.gradient_into(black_box(x), &mut out);
                        black_box(&out);
                    }
                })
            });
            g.finish();
        }
    }
}

fn bound_table(c: &mut Criterion) {
    let ec = ErrorConstants::zero();
    c.bench_function("bounds/all_reports N=2..50", |b| {
        b.iter(|| {
            for n in 2..=50 {
                black_box(all_reports(n, 1e-6, &ec).unwrap());
            }
        })
    });
}

fn games(c: &mut Criterion) {
    let mut g = c.benchmark_group("games");
    g.sample_size(10);
    let config = SimulationConfig::new(
        PlayerStrategy::max(3, 0.1).unwrap(),
        AdversaryStrategy::max(3).unwrap(),
        0.1,
        2_000,
        1,
    )
    .unwrap();
    g.bench_function("simulate max/max N=3 2000 trials", |b| {
        b.iter(|| run(black_box(&config)).unwrap())
    });
    let a = AdversaryStrategy::heat(2).unwrap();
    g.bench_function("oracle heat adversary N=2 R=60", |b| {
        b.iter(|| value_iteration_adversary(&a, 0.1, 60, 1e-8).unwrap())
    });
    g.finish();
}

criterion_group!(benches, potentials, bound_table, games);
criterion_main!(benches);
