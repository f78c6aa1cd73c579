//! Three-dimensional one-speed case: vectors whose angular profile, in a frame with
//! polar axis along the momentum p, is orthogonal to every angular factor in the
//! azimuthal angle; for those, int_{S^2} e^{it<p,mu>} u(p,mu) conj(phi(mu)) dS = 0.

use crate::error::{Error, Result};
use crate::quad;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Gauss-Legendre in cos(theta) times a uniform psi rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid {
    pub cos_theta: Vec<f64>,
    pub theta_weights: Vec<f64>,
    pub m_psi: usize,
}

impl SphereGrid {
    pub fn new(n_theta: usize, m_psi: usize) -> Result<Self> {
        if m_psi < 16 || !m_psi.is_power_of_two() {
            return Err(Error::InvalidInput(format!("m_psi = {m_psi} must be a power of two >= 16")));
        }
        if n_theta == 0 {
            return Err(Error::InvalidInput("no theta nodes".into()));
        }
        let (cos_theta, theta_weights) = quad::gauss_legendre(n_theta);
        Ok(SphereGrid { cos_theta, theta_weights, m_psi })
    }

    pub fn psi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.m_psi as f64
    }

    pub fn psi_weight(&self) -> f64 {
        2.0 * PI / self.m_psi as f64
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.theta_weights[i] * self.psi_weight()
    }

    pub fn total_weight(&self) -> f64 {
        self.theta_weights.iter().sum::<f64>() * 2.0 * PI
    }
}

/// Orthonormal right-handed triad (e1, e2, p/|p|).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub e1: Vec3,
    pub e2: Vec3,
    pub e3: Vec3,
}

impl Frame {
    /// mu(psi, theta) = sin(theta) (cos(psi) e1 + sin(psi) e2) + cos(theta) e3
    pub fn point(&self, cos_theta: f64, psi: f64) -> Vec3 {
        let st = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        let (sp, cp) = psi.sin_cos();
        let mut out = [0.0; 3];
        for (d, o) in out.iter_mut().enumerate() {
            *o = st * (cp * self.e1[d] + sp * self.e2[d]) + cos_theta * self.e3[d];
        }
        out
    }

    /// (cos theta, psi) of a unit vector in this frame
    pub fn coords(&self, mu: Vec3) -> (f64, f64) {
        let c = dot(mu, self.e3);
        let psi = dot(mu, self.e2).atan2(dot(mu, self.e1)).rem_euclid(2.0 * PI);
        (c, psi)
    }

    pub fn orthonormality_residual(&self) -> f64 {
        let v = [self.e1, self.e2, self.e3];
        let mut r: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                r = r.max((dot(v[i], v[j]) - target).abs());
            }
        }
        let c = cross(self.e1, self.e2);
        r.max(norm([c[0] - self.e3[0], c[1] - self.e3[1], c[2] - self.e3[2]]))
    }
}

/// Polar axis along p; e1 from the z axis, or the x axis when p is (nearly) parallel to z.
pub fn spherical_frame(p: Vec3) -> Result<Frame> {
    let np = norm(p);
    if !(np > 0.0) || !np.is_finite() {
        return Err(Error::Domain("frame of the zero momentum".into()));
    }
    let e3 = scale(p, 1.0 / np);
    let z = [0.0, 0.0, 1.0];
    let r = if norm(cross(e3, z)) < 1e-8 { [1.0, 0.0, 0.0] } else { z };
    let c = dot(r, e3);
    let t = [r[0] - c * e3[0], r[1] - c * e3[1], r[2] - c * e3[2]];
    let e1 = scale(t, 1.0 / norm(t));
    let e2 = cross(e3, e1);
    Ok(Frame { e1, e2, e3 })
}

/// Angular factor on the sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SphereFactor {
    Constant {
        value: f64,
    },
    /// mu -> <a, mu>
    Linear {
        a: Vec3,
    },
    /// mu -> <a, mu>^2
    Quadratic {
        a: Vec3,
    },
}

impl SphereFactor {
    pub fn eval(&self, mu: Vec3) -> f64 {
        match self {
            SphereFactor::Constant { value } => *value,
            SphereFactor::Linear { a } => dot(*a, mu),
            SphereFactor::Quadratic { a } => dot(*a, mu).powi(2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel3 {
    pub factors: Vec<SphereFactor>,
}

impl Kernel3 {
    pub fn isotropic() -> Self {
        Kernel3 { factors: vec![SphereFactor::Constant { value: 1.0 }] }
    }

    pub fn is_isotropic(&self) -> bool {
        self.factors.iter().all(|f| matches!(f, SphereFactor::Constant { .. }))
    }
}

/// Radial and polar profiles: w(|p|) = exp(-|p|^2/2), g(theta) = exp(-(theta - pi/2)^2/2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profiles {
    pub radial_width: f64,
    pub polar_width: f64,
}

impl Default for Profiles {
    fn default() -> Self {
        Profiles { radial_width: 1.0, polar_width: 1.0 }
    }
}

impl Profiles {
    pub fn w(&self, r: f64) -> f64 {
        (-0.5 * (r / self.radial_width).powi(2)).exp()
    }

    pub fn g(&self, cos_theta: f64) -> f64 {
        let th = cos_theta.clamp(-1.0, 1.0).acos();
        (-0.5 * ((th - PI / 2.0) / self.polar_width).powi(2)).exp()
    }
}

/// Samples u(p, mu) on the frame grid of each p: values[p][i * m_psi + j] at
/// (cos theta_i, psi_j).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereField {
    pub grid: SphereGrid,
    pub p: Vec<Vec3>,
    pub frames: Vec<Frame>,
    pub values: Vec<Vec<C64>>,
}

impl SphereField {
    pub fn from_fn(grid: &SphereGrid, p: &[Vec3], u: impl Fn(Vec3, &Frame, f64, f64) -> C64) -> Result<Self> {
        let frames = p.iter().map(|v| spherical_frame(*v)).collect::<Result<Vec<_>>>()?;
        let values = p
            .iter()
            .zip(&frames)
            .map(|(pv, fr)| {
                let mut row = Vec::with_capacity(grid.cos_theta.len() * grid.m_psi);
                for &c in &grid.cos_theta {
                    for j in 0..grid.m_psi {
                        row.push(u(*pv, fr, c, grid.psi(j)));
                    }
                }
                row
            })
            .collect();
        Ok(SphereField { grid: grid.clone(), p: p.to_vec(), frames, values })
    }

    /// max over (p, theta, l) of |sum_j u conj(phi_l)| * dpsi
    pub fn azimuthal_sums(&self, kernel: &Kernel3) -> f64 {
        let m = self.grid.m_psi;
        let mut worst: f64 = 0.0;
        for (row, fr) in self.values.iter().zip(&self.frames) {
            for (i, &c) in self.grid.cos_theta.iter().enumerate() {
                for f in &kernel.factors {
                    let s: C64 = (0..m).map(|j| row[i * m + j] * f.eval(fr.point(c, self.grid.psi(j)))).sum();
                    worst = worst.max(s.norm() * self.grid.psi_weight());
                }
            }
        }
        worst
    }
}

/// u(p, mu) = w(|p|) g(theta_p) e^{i m psi_p}, projected at each (p, theta) onto the
/// complement of span{psi -> phi_l(mu(psi, theta))} in the discrete psi inner product.
pub fn build_azimuthal_null(
    kernel: &Kernel3,
    p_sample: &[Vec3],
    m: i32,
    grid: &SphereGrid,
    prof: &Profiles,
) -> Result<SphereField> {
    if m == 0 {
        return Err(Error::InvalidInput("azimuthal order m must be nonzero".into()));
    }
    let mut field = SphereField::from_fn(grid, p_sample, |p, _, c, psi| {
        C64::from_polar(prof.w(norm(p)) * prof.g(c), m as f64 * psi)
    })?;
    if kernel.is_isotropic() {
        return Ok(field);
    }
    let mp = grid.m_psi;
    for (k, (row, fr)) in field.values.iter_mut().zip(&field.frames).enumerate() {
        let mut before = 0.0;
        let mut after = 0.0;
        for (i, &c) in grid.cos_theta.iter().enumerate() {
            let seg = &mut row[i * mp..(i + 1) * mp];
            before += seg.iter().map(|v| v.norm_sqr()).sum::<f64>();
            // orthonormal basis of the factor profiles at this theta (two-pass Gram-Schmidt)
            let mut basis: Vec<Vec<f64>> = vec![];
            for f in &kernel.factors {
                let mut b: Vec<f64> = (0..mp).map(|j| f.eval(fr.point(c, grid.psi(j)))).collect();
                let n0 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                for _ in 0..2 {
                    for e in &basis {
                        let d: f64 = e.iter().zip(&b).map(|(x, y)| x * y).sum();
                        b.iter_mut().zip(e).for_each(|(y, x)| *y -= d * x);
                    }
                }
                let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                if nb > 1e-10 * n0.max(1e-300) {
                    basis.push(b.iter().map(|v| v / nb).collect());
                }
            }
            for _ in 0..2 {
                for e in &basis {
                    let d: C64 = e.iter().zip(seg.iter()).map(|(x, y)| y * x).sum();
                    seg.iter_mut().zip(e).for_each(|(y, x)| *y -= d * x);
                }
            }
            after += seg.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        if before > 0.0 && after <= 1e-24 * before {
            return Err(Error::ConstructionViolation(format!(
                "projection removes the candidate at p[{k}] for every theta; try another m"
            )));
        }
    }
    Ok(field)
}

/// int_{S^2} e^{it<p,mu>} u(p,mu) conj(phi(mu)) dS on the frame grid.
pub fn sphere_integral(field: &SphereField, k: usize, t: f64, f: &SphereFactor) -> C64 {
    let g = &field.grid;
    let mp = g.m_psi;
    let fr = &field.frames[k];
    let pn = norm(field.p[k]);
    let row = &field.values[k];
    let mut acc = C64::new(0.0, 0.0);
    for (i, &c) in g.cos_theta.iter().enumerate() {
        let s: C64 = (0..mp).map(|j| row[i * mp + j] * f.eval(fr.point(c, g.psi(j)))).sum();
        acc += s * C64::from_polar(g.weight(i), t * pn * c);
    }
    acc
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereResidual {
    /// |integral| / int |u phi| dS, max over (p, t, l)
    pub max_residual: f64,
    /// (p index, t, channel, residual)
    pub table: Vec<(usize, f64, usize, f64)>,
}

pub fn verify_azimuthal_identity(field: &SphereField, kernel: &Kernel3, t_sample: &[f64]) -> Result<SphereResidual> {
    let g = &field.grid;
    let n_theta = g.cos_theta.len();
    let mut table = vec![];
    let mut worst: f64 = 0.0;
    for (k, p) in field.p.iter().enumerate() {
        for &t in t_sample {
            let osc = (t * norm(*p)).abs() / PI;
            let needed = (10.0 * osc).ceil() as usize;
            if n_theta < needed {
                return Err(Error::Resolution {
                    msg: format!("t|p| = {} underresolved in cos(theta)", t.abs() * norm(*p)),
                    needed,
                });
            }
            for (l, f) in kernel.factors.iter().enumerate() {
                let v = sphere_integral(field, k, t, f);
                let mp = g.m_psi;
                let fr = &field.frames[k];
                let mut mass = 0.0;
                for (i, &c) in g.cos_theta.iter().enumerate() {
                    for j in 0..mp {
                        mass += g.weight(i) * (field.values[k][i * mp + j] * f.eval(fr.point(c, g.psi(j)))).norm();
                    }
                }
                let r = if mass > 0.0 { v.norm() / mass } else { 0.0 };
                worst = worst.max(r);
                table.push((k, t, l, r));
            }
        }
    }
    Ok(SphereResidual { max_residual: worst, table })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_examples() {
        let f = spherical_frame([0.0, 0.0, 1.0]).unwrap();
        assert_eq!(f.e1, [1.0, 0.0, 0.0]);
        assert_eq!(f.e2, [0.0, 1.0, 0.0]);
        assert_eq!(f.e3, [0.0, 0.0, 1.0]);
        let f = spherical_frame([1.0, 0.0, 0.0]).unwrap();
        assert_eq!(f.e1, [0.0, 0.0, 1.0]);
        assert!(f.orthonormality_residual() < 1e-15);
        assert!(spherical_frame([0.0; 3]).is_err());
    }

    #[test]
    fn grid_weights() {
        let g = SphereGrid::new(20, 32).unwrap();
        assert!((g.total_weight() - 4.0 * PI).abs() < 1e-12);
        assert!(SphereGrid::new(20, 24).is_err());
    }

    #[test]
    fn point_coords_roundtrip() {
        let f = spherical_frame([0.3, -1.2, 0.5]).unwrap();
        let mu = f.point(0.4, 2.0);
        assert!((norm(mu) - 1.0).abs() < 1e-14);
        let (c, psi) = f.coords(mu);
        assert!((c - 0.4).abs() < 1e-14 && (psi - 2.0).abs() < 1e-14);
    }
}
