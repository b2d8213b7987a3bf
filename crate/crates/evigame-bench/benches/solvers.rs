//! Criterion benchmarks for the equilibrium solvers: the star solution,
//! the perturbed-game enumeration, a homotopy path, the smoothed
//! response, and the grid oracle on the certification fixture.

use criterion::{criterion_group, criterion_main, Criterion};

use evigame_bench::corpus;
use evigame_core::num::q;
use evigame_core::{
    fixtures, homotopy_weakly_tl, oracle_pbe_grid, smoothed_response, solve_perturbed, solve_star,
    Disturbance, HomotopyPath, OracleGrid, OracleMode, Perturbation, ShockFamily,
};

fn bench_solve_star(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_star");
    for (name, game) in corpus() {
        group.bench_function(&name, |b| {
            b.iter(|| solve_star(std::hint::black_box(&game)).unwrap())
        });
    }
    group.finish();
}

fn bench_solve_perturbed(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_perturbed");
    for (name, game) in corpus() {
        if game.n_evidence() > 6 || game.n_actions() > 4 {
            continue;
        }
        let eps = Perturbation::uniform_for(&game, q(1, 10), q(1, 20));
        group.bench_function(&name, |b| {
            b.iter(|| solve_perturbed(std::hint::black_box(&game), &eps).unwrap())
        });
    }
    group.finish();
}

fn bench_homotopy(c: &mut Criterion) {
    let faa = fixtures::faa();
    let path = HomotopyPath {
        base: Perturbation::uniform_for(&faa, q(1, 10), q(1, 20)),
        factor: q(1, 2),
        steps: 30,
    };
    c.bench_function("homotopy_weakly_tl/faa", |b| {
        b.iter(|| homotopy_weakly_tl(std::hint::black_box(&faa), &path).unwrap())
    });
}

fn bench_smoothed_response(c: &mut Criterion) {
    let faa = fixtures::faa();
    let closed = Disturbance {
        family: ShockFamily::GaussianIid,
        scales: vec![0.0, 0.25],
        seed: 42,
        samples: 1,
    };
    c.bench_function("smoothed_response/closed_form", |b| {
        b.iter(|| smoothed_response(&faa, &closed, &q(1, 2)).unwrap())
    });
    let mc = Disturbance {
        samples: 100_000,
        ..closed
    };
    c.bench_function("smoothed_response/monte_carlo_100k", |b| {
        b.iter(|| evigame_core::smoothed_response_monte_carlo(&faa, &mc, &q(1, 2)))
    });
}

fn bench_oracle(c: &mut Criterion) {
    let faa = fixtures::faa();
    let eps = Perturbation::uniform_for(&faa, q(1, 10), q(1, 20));
    let grid = OracleGrid::exact(q(1, 100));
    c.bench_function("oracle_pbe_grid/faa_perturbed_1-100", |b| {
        b.iter(|| oracle_pbe_grid(&faa, &grid, &OracleMode::Perturbed(eps.clone())).unwrap())
    });
}

criterion_group!(
    benches,
    bench_solve_star,
    bench_solve_perturbed,
    bench_homotopy,
    bench_smoothed_response,
    bench_oracle
);
criterion_main!(benches);
