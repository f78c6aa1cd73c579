use criterion::{criterion_group, criterion_main, Criterion};
use selfadj::gap::{build_bump, build_f, build_periodic_h, build_xi, s_nodes, uniform_sum};
use selfadj::oplab::{assemble_discrete, krylov_split, oracle_grid, scan_blocks, ScanChannel};
use selfadj::sphere::{build_azimuthal_null, Kernel3, Profiles, SphereGrid};
use selfadj::{AngularFactor, Coefficient, CollisionKernel, Envelope, GapLatticeCoefficient};
use std::hint::black_box;

fn gap_kernel() -> CollisionKernel {
    let c = GapLatticeCoefficient::new(0.0, 1.0, 0.25, Envelope::Constant { value: 1.0 }).unwrap();
    CollisionKernel::polynomial(Coefficient::Gap(c), 1)
}

fn bump(c: &mut Criterion) {
    let b = build_bump(0.25).unwrap();
    let ps: Vec<f64> = (0..256).map(|i| 10.0 + 40.0 * i as f64).collect();
    c.bench_function("bump_hat_contour_256", |bn| {
        bn.iter(|| ps.iter().map(|p| b.hat_contour(black_box(*p))).sum::<f64>())
    });
}

fn profile_sums(c: &mut Criterion) {
    let f = build_f(&build_xi(build_periodic_h(0.1).unwrap(), build_bump(0.25).unwrap(), 1).unwrap(), 1.0);
    let nodes = s_nodes(&f, 3000.0, 32);
    let vals = f.eval_nodes(&nodes);
    c.bench_function("uniform_sum_1201", |bn| bn.iter(|| uniform_sum(black_box(&vals), &nodes.s, -3.0, 0.005, 1201)));
}

fn scan_block(c: &mut Criterion) {
    let x: Vec<f64> = (0..400).map(|i| 4.0 * (i as f64 + 0.5) / 400.0).collect();
    let ch = [ScanChannel { phi: AngularFactor::poly(vec![1.0]), x, weight: 0.01 }];
    c.bench_function("scan_block_400x240", |bn| {
        bn.iter(|| scan_blocks(black_box(&ch), &[0.7], 120, (Some(4.0), Some(4.0)), 1 << 30).unwrap())
    });
}

fn split(c: &mut Criterion) {
    let (xg, ang) = oracle_grid(-4.0, 8.0, 32, 16).unwrap();
    let op = assemble_discrete(&gap_kernel(), &xg, &ang).unwrap();
    let mut g = c.benchmark_group("krylov");
    g.sample_size(10);
    g.bench_function("split_32x16", |bn| bn.iter(|| krylov_split(black_box(&op.a), &op.k, 400, 1e-10).unwrap()));
    g.finish();
}

fn sphere(c: &mut Criterion) {
    let grid = SphereGrid::new(64, 32).unwrap();
    let ps: Vec<[f64; 3]> = (0..20).map(|i| [0.1 * i as f64, 1.0, -0.5]).collect();
    c.bench_function("azimuthal_null_20", |bn| {
        bn.iter(|| build_azimuthal_null(&Kernel3::isotropic(), black_box(&ps), 1, &grid, &Profiles::default()).unwrap())
    });
}

criterion_group!(benches, bump, profile_sums, scan_block, split, sphere);
criterion_main!(benches);
