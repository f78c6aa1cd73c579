//! Deterministic test corpus of smooth spectral functions and the transform
//! identity suite run over it.

use crate::error::Result;
use crate::model::{strip_norm, AngleGrid, AngularFactor, Grid1D, Hat, Rep, StripFunction, Weight};
use crate::transforms::{
    phi_forward, phi_inverse, psi_direct, psi_transform, sampling_identity_check, transport_derivative, SupportWindow,
};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// u(q, mu) = exp(-(q-q0)^2 / (2 sigma^2) + i phase q) * mu^6 (1-mu^2)^6 * (c0 + c1 mu + c2 mu^2),
/// cut to |q - q0| <= 8 sigma.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralItem {
    pub q0: f64,
    pub sigma: f64,
    pub phase: f64,
    pub coeffs: [f64; 3],
}

impl SpectralItem {
    pub fn window(&self) -> SupportWindow {
        SupportWindow { lo: self.q0 - 8.0 * self.sigma, hi: self.q0 + 8.0 * self.sigma }
    }

    pub fn eval(&self, q: f64, mu: f64) -> C64 {
        if !self.window().contains(q) || mu.abs() > 1.0 {
            return C64::new(0.0, 0.0);
        }
        let d = (q - self.q0) / self.sigma;
        let m2 = mu * mu;
        let prof = m2 * m2 * m2 * (1.0 - m2).powi(6) * (self.coeffs[0] + self.coeffs[1] * mu + self.coeffs[2] * m2);
        C64::from_polar((-0.5 * d * d).exp() * prof, self.phase * q)
    }

    /// Samples on a grid of spacing about `dq` spanning the window.
    pub fn strip(&self, dq: f64, angles: &AngleGrid) -> StripFunction {
        let w = self.window();
        let n = ((w.hi - w.lo) / dq).ceil() as usize + 1;
        let g = Grid1D::new(w.lo, w.hi, n).expect("window grid");
        StripFunction::from_fn(Rep::Spectral, g, angles.clone(), |q, mu| self.eval(q, mu))
    }
}

pub fn transform_corpus(seed: u64) -> Vec<SpectralItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..10)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            SpectralItem {
                q0: sign * rng.gen_range(5.2..5.8),
                sigma: 0.5,
                phase: rng.gen_range(-0.3..0.3),
                coeffs: [1.0, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            }
        })
        .collect()
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TransformMetrics {
    pub isometry_forward: f64,
    pub isometry_inverse: f64,
    pub round_trip_position: f64,
    pub round_trip_spectral: f64,
    pub psi_vs_direct: f64,
    pub psi_bound_ratio: f64,
    pub sampling_identity: f64,
    pub conjugation: f64,
}

impl TransformMetrics {
    pub fn worst(&self, other: &TransformMetrics) -> TransformMetrics {
        TransformMetrics {
            isometry_forward: self.isometry_forward.max(other.isometry_forward),
            isometry_inverse: self.isometry_inverse.max(other.isometry_inverse),
            round_trip_position: self.round_trip_position.max(other.round_trip_position),
            round_trip_spectral: self.round_trip_spectral.max(other.round_trip_spectral),
            psi_vs_direct: self.psi_vs_direct.max(other.psi_vs_direct),
            psi_bound_ratio: self.psi_bound_ratio.max(other.psi_bound_ratio),
            sampling_identity: self.sampling_identity.max(other.sampling_identity),
            conjugation: self.conjugation.max(other.conjugation),
        }
    }
}

fn rel_l2(a: &StripFunction, b: &StripFunction, weight: Weight) -> f64 {
    let mut d = a.clone();
    d.values.iter_mut().zip(&b.values).for_each(|(x, y)| *x -= y);
    strip_norm(&d, weight) / strip_norm(b, weight)
}

/// All transform identities for one corpus item.
pub fn check_item(item: &SpectralItem, seed: u64) -> Result<TransformMetrics> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles = AngleGrid::gauss(24);
    let window = item.window();
    let u = item.strip(0.0025, &angles);
    let x_grid = Grid1D::new(-16.0, 16.0, 2135)?;

    let f = phi_inverse(&u, &window, &x_grid)?;
    let nu = strip_norm(&u, Weight::AbsMu);
    let nf = strip_norm(&f, Weight::Plain);
    let (phif, _) = phi_forward(&f, &u.axis)?;
    let back = phi_inverse(&phif, &window, &x_grid)?;

    let mut m = TransformMetrics {
        isometry_inverse: (nf - nu).abs() / nu,
        isometry_forward: (strip_norm(&phif, Weight::AbsMu) - nf).abs() / nf,
        round_trip_spectral: rel_l2(&phif, &u, Weight::AbsMu),
        round_trip_position: rel_l2(&back, &f, Weight::Plain),
        ..Default::default()
    };

    // q -> multiplication under the transport derivative
    let df = transport_derivative(&f)?;
    let (qd, _) = phi_forward(&df, &u.axis)?;
    let qs = u.axis.nodes();
    let mut qu = u.clone();
    for k in 0..angles.len() {
        qu.row_mut(k).iter_mut().zip(&qs).for_each(|(v, q)| *v *= q);
    }
    let top = qu.max_abs();
    m.conjugation = qd.values.iter().zip(&qu.values).fold(0.0f64, |a, (x, y)| a.max((x - y).norm())) / top;

    // Psi pipeline against brute force at 20 random grid points
    let s_grid = Grid1D::new(-40.0, 40.0, 2001)?;
    let coarse = item.strip(0.05, &angles);
    let xg = Grid1D::new(-3.0, 3.0, 121)?;
    let psi = psi_transform(&coarse, &window, &xg, &s_grid)?;
    let cq = coarse.axis.nodes();
    let xs = xg.nodes();
    for _ in 0..20 {
        let i = rng.gen_range(0..cq.len());
        let l = rng.gen_range(0..xs.len());
        let direct = psi_direct(|q, mu| item.eval(q, mu), cq[i], xs[l], 40.0);
        let piped = psi.row(i)[l];
        m.psi_vs_direct = m.psi_vs_direct.max((direct - piped).norm());
    }

    // boundedness: ||Psi v|| <= a^{-1/2} ||J v||_{|s|}
    let wide = Grid1D::new(-20.0, 20.0, 801)?;
    let psi_wide = psi_transform(&coarse, &window, &wide, &s_grid)?;
    let jv = crate::transforms::j_map(&coarse, &window, &s_grid)?;
    let bound = jv.abs_weighted_norm() / window.dist_to_zero().sqrt();
    m.psi_bound_ratio = psi_wide.l2_norm() / bound;

    // translated sampling identity
    let mid = item.strip(0.005, &angles);
    let phi = AngularFactor::poly(vec![1.0, rng.gen_range(-1.0..1.0)]);
    let h = Hat { center: rng.gen_range(-1.0..1.0), half_width: 0.4 };
    let ts: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let rep = sampling_identity_check(&mid, &window, &phi, &h, &ts, &s_grid)?;
    m.sampling_identity = rep.max_discrepancy;
    Ok(m)
}

pub fn run_suite(seed: u64) -> Result<TransformMetrics> {
    let mut worst = TransformMetrics::default();
    for (k, item) in transform_corpus(seed).iter().enumerate() {
        worst = worst.worst(&check_item(item, seed.wrapping_add(k as u64 + 1))?);
    }
    Ok(worst)
}
