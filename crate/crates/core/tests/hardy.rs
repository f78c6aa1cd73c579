use selfadj::hardy::*;
use selfadj::model::*;
use selfadj::C64;

#[test]
fn canonical_properties() {
    let p = HardyParams::canonical();
    let r = run_hardy(&p, 2e3).unwrap();
    println!("{r:?}");
    assert!(r.pre_clamp_max < 1e-8);
    assert!(r.norm_rel_change < 1e-4);
    assert!(r.leakage.leakage < 1e-3);
    assert!((0.01..=10.0).contains(&r.leakage.ratio));
    for (coarse, fine) in [r.boundedness_upper, r.boundedness_lower] {
        assert!(coarse.is_finite() && fine.is_finite());
        assert!((coarse - fine).abs() <= 0.05 * fine);
    }
}

#[test]
fn halving_the_ladder_keeps_boundary_values() {
    let p = HardyParams::canonical();
    let mut half = p.clone();
    half.eta_ladder.iter_mut().for_each(|e| *e *= 0.5);
    let xs = [-7.0, -2.6, -1.5, -0.5, 0.0, 0.3, 0.9, 1.2, 4.0, 25.0];
    let a = boundary_values(&xs, &p).unwrap();
    let b = boundary_values(&xs, &half).unwrap();
    for (u, v) in a.f_plus.iter().chain(&a.f_minus).zip(b.f_plus.iter().chain(&b.f_minus)) {
        assert!((u - v).norm() <= 1e-7 * u.norm().max(1e-300), "{u} {v}");
    }
}

#[test]
fn higher_order_rho_decays_like_inverse_square() {
    let p = HardyParams { n: 3, ..HardyParams::canonical() };
    let r1 = rho_factor(C64::new(1e3, 1.0), &p).unwrap().norm() * 1e6;
    let r2 = rho_factor(C64::new(1e4, 1.0), &p).unwrap().norm() * 1e8;
    assert!((r1 / r2 - 1.0).abs() < 0.01);
}

fn compact_pair() -> (CompactBundle, CompactBundle) {
    let p = HardyParams { alpha: 2.2, ..HardyParams::canonical() };
    let q = HardyParams { alpha: 2.2, rho_a: 5.0, rho_b: 4.0, ..HardyParams::canonical() };
    // both bundles carry both cut sets so they share quadrature nodes
    let b1 = compact_support_bundle((1.0, 2.0), (-1.0, 1.0), &p, 2e3, &[-5.0, -4.0]).unwrap();
    let b2 = compact_support_bundle((1.0, 2.0), (-1.0, 1.0), &q, 2e3, &[-3.0, -2.0]).unwrap();
    (b1, b2)
}

#[test]
fn compact_bundle_membership() {
    let (b1, b2) = compact_pair();
    let kernel = CollisionKernel::polynomial(Coefficient::Indicator { lo: -1.0, hi: 1.0, value: 1.0 }, 1);
    let hats: Vec<Hat> = [-0.5, 0.0, 0.5].iter().map(|&c| Hat { center: c, half_width: 0.4 }).collect();
    let tests = TestFunctionFamily::new(&kernel, vec![hats]).unwrap();
    let ts: Vec<f64> = (0..21).map(|i| -5.0 + 0.5 * i as f64).collect();
    for b in [&b1, &b2] {
        let m = verify_membership_compact(b, &kernel, &ts, &tests).unwrap();
        assert!(m.max_residual < 1e-8, "{m:?}");
        assert!(b.norm() > 1e-6);
    }
    let low = HardyParams { alpha: 1.0, ..HardyParams::canonical() };
    assert!(compact_support_bundle((1.0, 2.0), (-1.0, 1.0), &low, 2e3, &[]).is_err());
}

#[test]
fn rho_family_is_independent() {
    let (b1, b2) = compact_pair();
    let g11 = b1.inner(&b1).unwrap().re;
    let g22 = b2.inner(&b2).unwrap().re;
    let g12 = b1.inner(&b2).unwrap();
    let g = nalgebra::Matrix2::new(C64::new(g11, 0.0), g12, g12.conj(), C64::new(g22, 0.0));
    let ev = g.symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    assert!(lo > 1e-8 * hi, "{ev}");
}
