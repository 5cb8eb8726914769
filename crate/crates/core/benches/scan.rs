use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topiary_core::maze::{potential_field, solve_maze, Mask, MazeSpec};
use topiary_core::solver::{solve, SolverState};
use topiary_core::{Algorithm, AtomicMeasure, Exec, Kernel, KernelKind, KernelOptions, Point, Problem, Psi, SolveConfig};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn points(rng: &mut ChaCha8Rng, n: usize, dim: usize, r: f64) -> Vec<Point> {
    (0..n).map(|i| Point::new(i, (0..dim).map(|_| rng.gen_range(-r..r)).collect())).collect()
}

fn candidate_scan(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 3000;
    let opts = KernelOptions { skip_psd_check: true, ..Default::default() };
    let kernel = Kernel::with_points(KernelKind::Euclidean, points(&mut rng, n, 4, 1.0), opts).unwrap();
    let psi = Psi::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let problem = Problem::new(&kernel, &psi).unwrap();
    let mu = AtomicMeasure::uniform(&[0, 1, 2, 3]).unwrap();
    let state = SolverState::new(problem, problem.all(), &mu).unwrap();
    let mut g = c.benchmark_group("candidate_scan");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, n), |b| b.iter(|| state.score(exec)));
    }
    g.finish();
}

fn gram_construction(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pts = points(&mut rng, 1200, 2, 1.5);
    let mut g = c.benchmark_group("gram_construction");
    g.sample_size(20);
    for (name, exec) in MODES {
        let opts = KernelOptions { skip_psd_check: true, exec, ..Default::default() };
        g.bench_function(BenchmarkId::new(name, pts.len()), |b| {
            b.iter(|| Kernel::with_points(KernelKind::Fock, pts.clone(), opts).unwrap())
        });
    }
    g.finish();
}

fn field_sampling(c: &mut Criterion) {
    let spec = MazeSpec::new(Mask::annulus(64, 24.0, 30.0, Some(0.5)).unwrap(), 0.05);
    let mut g = c.benchmark_group("field_sampling");
    g.sample_size(20);
    for (name, exec) in MODES {
        let config = SolveConfig { exec, ..MazeSpec::default_config() };
        let sol = solve_maze(&spec, &config).unwrap();
        let grid = sol.default_grid(128);
        g.bench_function(BenchmarkId::new(name, 128 * 128), |b| b.iter(|| potential_field(&sol, &grid).unwrap()));
    }
    g.finish();
}

fn solve_sweep(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let instances: Vec<(Kernel, Psi)> = (0..64)
        .map(|_| {
            let n = 10;
            let k = Kernel::with_points(KernelKind::Euclidean, points(&mut rng, n, 3, 1.0), KernelOptions::default()).unwrap();
            let psi = Psi::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            (k, psi)
        })
        .collect();
    let mut g = c.benchmark_group("solve_sweep");
    for (name, exec) in MODES {
        let config = SolveConfig { algorithm: Algorithm::Exchange, exec, ..Default::default() };
        g.bench_function(BenchmarkId::new(name, instances.len()), |b| {
            b.iter(|| {
                exec.map_coarse(instances.len(), |i| {
                    let (k, psi) = &instances[i];
                    let p = Problem::new(k, psi).unwrap();
                    solve(p, &p.all(), &config).map(|r| r.objective).unwrap_or(f64::NAN)
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, candidate_scan, gram_construction, field_sampling, solve_sweep);
criterion_main!(benches);
