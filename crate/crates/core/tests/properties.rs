use nalgebra::DMatrix;
use proptest::prelude::*;
use selfadj::hardy::sqrt_branch;
use selfadj::oplab::*;
use selfadj::sphere::*;
use selfadj::transforms::{nonuniform_sum, uniform_sum};
use selfadj::*;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn gap_coefficient_is_exactly_zero_in_gaps(
        x0 in -2.0..2.0f64, a in 0.2..3.0f64, frac in 0.05..0.45f64, j in -20i64..20, u in -0.999..0.999f64,
    ) {
        let eps = frac * a;
        let c = GapLatticeCoefficient::new(x0, a, eps, Envelope::Constant { value: 2.5 }).unwrap();
        let x = x0 + a * j as f64 + u * eps;
        prop_assert_eq!(eval_gap_coefficient(&c, x), 0.0);
        let mid = x0 + a * (j as f64 + 0.5);
        prop_assert_eq!(eval_gap_coefficient(&c, mid), 2.5);
    }

    #[test]
    fn weighted_norm_of_monomials(k in 0usize..4, c in 0.1..3.0f64, q0 in -2.0..0.0f64, len in 0.5..2.0f64, pm in 2.0..4.0f64) {
        let qg = Grid1D::new(q0, q0 + len, 201).unwrap();
        let pg = Grid1D::new(1.0, pm, 401).unwrap();
        let f = SpectralDensity::from_fn(qg, pg, |_, p| C64::new(c * p.powi(k as i32), 0.0));
        let got = weighted_norm(&f).unwrap().powi(2);
        let e = 2 * k as i32 + 2;
        let want = c * c * len * (pm.powi(e) - 1.0) / e as f64;
        prop_assert!((got - want).abs() < 1e-8 * want);
    }

    #[test]
    fn polynomial_kernels_have_full_gram_rank(n in 1usize..7) {
        let k = CollisionKernel::polynomial(Coefficient::HalfAxis { value: 1.0 }, n);
        prop_assert_eq!(k.gram_rank(1e-12), n);
        prop_assert!(k.validate().is_ok());
    }

    #[test]
    fn uniform_and_direct_sums_agree(seed in 0u64..1000, w0 in -5.0..5.0f64, dw in -0.3..0.3f64) {
        let s: Vec<f64> = (0..40).map(|i| ((seed + i) as f64 * 0.618).fract() * 200.0 - 100.0).collect();
        let c: Vec<C64> = (0..40).map(|i| C64::new((i as f64).sin(), (seed as f64 + i as f64).cos())).collect();
        let fast = uniform_sum(&c, &s, w0, dw, 300);
        for k in (0..300).step_by(37) {
            let d = nonuniform_sum(&c, &s, w0 + k as f64 * dw);
            prop_assert!((fast[k] - d).norm() < 1e-10);
        }
    }

    #[test]
    fn sqrt_branch_is_continuous_in_each_half_plane(
        x in -4.0..4.0f64, y in 0.3..3.0f64, dir in 0.0..std::f64::consts::TAU, lower in any::<bool>(),
    ) {
        // 1e3-point straight path of length 0.2 staying at |Im z| >= 0.1
        let sign = if lower { -1.0 } else { 1.0 };
        let (s, c) = dir.sin_cos();
        let pts: Vec<C64> = (0..1000)
            .map(|i| {
                let t = 0.2 * i as f64 / 999.0;
                C64::new(x + c * t, sign * (y + s * t).max(0.1))
            })
            .collect();
        let w: Vec<C64> = pts.iter().map(|z| sqrt_branch(*z).unwrap()).collect();
        let jump = w.windows(3).map(|v| (v[2] - v[1] * 2.0 + v[0]).norm()).fold(0.0, f64::max);
        prop_assert!(jump < 1e-6, "{}", jump);
    }
}

proptest! {
    #![proptest_config(cfg(12))]

    #[test]
    fn assembled_operator_is_hermitian(lo in -1.5..0.0f64, w in 0.2..1.5f64, c1 in -1.0..1.0f64, n in 1usize..4) {
        let coeff = Coefficient::Indicator { lo, hi: lo + w, value: 0.7 };
        let mut kernel = CollisionKernel::polynomial(coeff, n);
        kernel.channels[0].phi = AngularFactor::poly(vec![1.0, c1]);
        let (xg, ang) = oracle_grid(-2.0, 4.0, 16, 6).unwrap();
        let op = assemble_discrete(&kernel, &xg, &ang).unwrap();
        prop_assert!((&op.a - op.a.adjoint()).norm() < 1e-12);
        prop_assert!((&op.k - op.k.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn split_certificates_hold(seed in 0u64..500, n1 in 2usize..8, n2 in 1usize..8) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = n1 + n2;
        let mut a = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let same = (i < n1) == (j < n1);
                if same {
                    let v = C64::new(rng.gen_range(-1.0..1.0), if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) });
                    a[(i, j)] = v;
                    a[(j, i)] = v.conj();
                }
            }
        }
        let v = nalgebra::DVector::from_fn(n, |i, _| if i < n1 { C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) } else { C64::new(0.0, 0.0) });
        let k = &v * v.adjoint();
        let s = krylov_split(&a, &k, 100, 1e-10).unwrap();
        prop_assert!(s.certified, "{:?}", s.residuals);
        prop_assert!(s.dim_h0() >= n2);
        prop_assert_eq!(s.dim_h0() + s.dim_h1(), n);
        // H0 lies in Ker K
        prop_assert!((&k * &s.basis_h0).norm() < 1e-10 * s.residuals.scale);
    }

    #[test]
    fn free_evolution_is_an_isometric_group(t in -3.0..3.0f64, u in -3.0..3.0f64, c in -2.0..2.0f64) {
        let ang = AngleGrid::gauss(4);
        let axis = Grid1D::new(-12.0, 12.0 - 24.0 / 128.0, 128).unwrap();
        let f = StripFunction::from_fn(Rep::Position, axis, ang, |x, mu| C64::new((-(x - c).powi(2)).exp(), mu * (-(x * x)).exp()));
        let ft = evolve_free(&f, t).unwrap();
        let n0 = strip_norm(&f, Weight::Plain);
        prop_assert!((strip_norm(&ft, Weight::Plain) - n0).abs() < 1e-10 * n0);
        let two = evolve_free(&ft, u).unwrap();
        let once = evolve_free(&f, t + u).unwrap();
        let err = two.values.iter().zip(&once.values).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        prop_assert!(err < 1e-8);
    }

    #[test]
    fn more_constraints_never_enlarge_the_nullspace(extra in 1usize..60, seed in 0u64..100) {
        let base: Vec<f64> = (0..40).map(|i| -3.5 + 0.17 * i as f64).filter(|x| (x - x.round()).abs() >= 0.25).collect();
        let more: Vec<f64> = base
            .iter()
            .cloned()
            .chain((0..extra).map(|i| ((seed as f64 + i as f64) * 0.7548776662).fract() * 7.0 - 3.5))
            .collect();
        let phi = AngularFactor::poly(vec![1.0]);
        let q = [-1.3, 0.4, 2.2];
        let win = (Some(8.0), Some(8.0));
        let a = scan_blocks(&[ScanChannel { phi: phi.clone(), x: base, weight: 0.02 }], &q, 30, win, 1 << 30).unwrap();
        let b = scan_blocks(&[ScanChannel { phi, x: more, weight: 0.02 }], &q, 30, win, 1 << 30).unwrap();
        for thresh in [1e-6, 1e-3, 1e-1] {
            let null = |blocks: &Vec<(Vec<f64>, usize)>| -> usize {
                blocks.iter().map(|(s, c)| c - s.iter().filter(|v| **v >= thresh).count()).sum()
            };
            prop_assert!(null(&b) <= null(&a));
        }
    }

    #[test]
    fn projected_profiles_are_azimuthally_null(px in -2.0..2.0f64, py in -2.0..2.0f64, pz in 0.1..2.0f64, m in 1i32..4, ax in -1.0..1.0f64) {
        let grid = SphereGrid::new(24, 32).unwrap();
        let k = Kernel3 {
            factors: vec![
                SphereFactor::Constant { value: 1.0 },
                SphereFactor::Linear { a: [ax, 0.5, -0.3] },
                SphereFactor::Quadratic { a: [0.2, ax, 1.0] },
            ],
        };
        let u = build_azimuthal_null(&k, &[[px, py, pz]], m, &grid, &Profiles::default()).unwrap();
        prop_assert!(u.azimuthal_sums(&k) < 1e-12);
        prop_assert!(verify_azimuthal_identity(&u, &k, &[0.0, 1.3, -2.0]).unwrap().max_residual < 1e-8);
    }

    #[test]
    fn isotropic_residual_is_rotation_invariant(px in -2.0..2.0f64, py in -2.0..2.0f64, pz in -2.0..2.0f64, ang in 0.0..6.2f64, t in -3.0..3.0f64) {
        prop_assume!(px * px + py * py + pz * pz > 0.01);
        let grid = SphereGrid::new(40, 16).unwrap();
        let (c, s) = ang.sin_cos();
        let p = [px, py, pz];
        let rp = [c * px + s * pz, py, -s * px + c * pz];
        let k = Kernel3::isotropic();
        let a = build_azimuthal_null(&k, &[p], 1, &grid, &Profiles::default()).unwrap();
        let b = build_azimuthal_null(&k, &[rp], 1, &grid, &Profiles::default()).unwrap();
        let ra = verify_azimuthal_identity(&a, &k, &[t]).unwrap().max_residual;
        let rb = verify_azimuthal_identity(&b, &k, &[t]).unwrap().max_residual;
        prop_assert!((ra - rb).abs() < 1e-12);
    }
}
