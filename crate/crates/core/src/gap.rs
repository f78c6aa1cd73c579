//! Explicit selfadjoint-subspace vectors for gap-lattice coefficients.
//!
//! F(q, p) = chi(q) f(pq) with f(s) = h(as) (ias)^n omega0hat(as); h is 2pi-periodic
//! and vanishes near 0, omega0 is a bump supported on (-eps/a, eps/a).
//! The density is carried on "rays": s = pq on Gauss nodes covering the support of
//! h(a .), and q = mu s for every angle.

use crate::error::{Error, Result};
use crate::model::{AngleGrid, CollisionKernel, Grid1D, Hat, Rep, SpectralDensity, StripFunction, TestFunctionFamily};
use crate::quad;
use crate::transforms::{fourier_line, phi_inverse, LineTransform, SupportWindow, INV_SQRT_2PI};
pub use crate::transforms::{nonuniform_sum, uniform_sum};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub a: f64,
    pub eps: f64,
    #[serde(default)]
    pub x0: f64,
    pub b: f64,
    pub nu: f64,
    pub n: usize,
}

impl LatticeParams {
    pub fn canonical(n: usize) -> Self {
        LatticeParams { a: 1.0, eps: 0.25, x0: 0.0, b: 3.0, nu: 0.1, n }
    }

    pub fn delta(&self) -> f64 {
        self.eps / self.a
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if !(self.a > 0.0 && self.eps > 0.0 && self.b > 0.0 && self.nu > 0.0) {
            return bad("a, eps, b, nu must be positive".into());
        }
        if self.eps >= self.a / 2.0 {
            return bad(format!("eps = {} must be below a/2 = {}", self.eps, self.a / 2.0));
        }
        if self.b >= PI / self.a {
            return bad(format!("b = {} must be below pi/a = {}", self.b, PI / self.a));
        }
        if self.nu >= PI || (PI - self.nu) / self.a < self.b {
            return bad(format!("(pi - nu)/a = {} must be at least b", (PI - self.nu) / self.a));
        }
        if self.delta() >= PI {
            return bad("delta must be below pi".into());
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        Ok(())
    }
}

const BUMP_SAMPLES: usize = 2049;

/// Canonical bump exp(-delta^2/(delta^2 - s^2)), scaled to unit maximum.
#[derive(Clone, Debug)]
pub struct Bump {
    pub delta: f64,
    transform: LineTransform,
}

impl Bump {
    pub fn eval(&self, s: f64) -> f64 {
        bump_shape(s / self.delta)
    }

    /// omega0hat(p): sampled transform at moderate |p|, steepest-descent contour beyond.
    pub fn hat(&self, p: f64) -> f64 {
        if p.abs() <= CONTOUR_FROM {
            self.transform.eval(p).re
        } else {
            self.hat_contour(p.abs())
        }
    }

    /// The real-axis integral loses everything below ~1e-17 to cancellation. The bump is
    /// entire apart from +-delta, so the path is pushed to s = t - iY(1 - t^2/delta^2)^2,
    /// which passes through the endpoint saddles at depth ~ (delta/4p)^{1/2}.
    pub fn hat_contour(&self, p: f64) -> f64 {
        let d = self.delta;
        let e = (d / (4.0 * p)).sqrt();
        let y = d * d / (4.0 * e);
        // halving offsets toward both ends, no panel wider than a few wavelengths
        let mut offs = vec![];
        let mut o = d;
        while o > e / 500.0 {
            offs.push(o);
            o *= 0.5;
        }
        offs.push(0.0);
        offs.reverse();
        // beyond r = (1000/(pY))^{1/2} the path factor is below e^-1000 and |omega| <= e
        let r_cut = (1000.0 / (p * y)).sqrt().min(1.0);
        let o_cut = d * (1.0 - (1.0 - r_cut).sqrt());
        let mut right = vec![];
        for w in offs.windows(2) {
            if w[0] >= o_cut {
                break;
            }
            let k = ((w[1] - w[0]) * p / 12.0).ceil().max(1.0) as usize;
            for i in 0..k {
                right.push(w[0] + (w[1] - w[0]) * i as f64 / k as f64);
            }
        }
        let last = offs.iter().cloned().find(|&o| o >= o_cut).unwrap_or(d);
        right.push(last);
        let (x, w) = quad::gauss_legendre(24);
        let mut ts = vec![];
        let mut ws = vec![];
        for pair in right.windows(2) {
            let (c, h) = (0.5 * (pair[0] + pair[1]), 0.5 * (pair[1] - pair[0]));
            for (xi, wi) in x.iter().zip(&w) {
                ts.push(-d + c + h * xi);
                ts.push(d - c - h * xi);
                ws.push(h * wi);
                ws.push(h * wi);
            }
        }
        let mut acc = C64::new(0.0, 0.0);
        for (&t, &w) in ts.iter().zip(&ws) {
            let r = 1.0 - t * t / (d * d);
            let s = C64::new(t, -y * r * r);
            let ds = C64::new(1.0, 4.0 * y * t * r / (d * d));
            let om = (1.0 - d * d / (d * d - s * s)).exp();
            acc += (C64::new(0.0, -p) * s).exp() * om * ds * w;
        }
        acc.re * INV_SQRT_2PI
    }
}

const CONTOUR_FROM: f64 = 40.0;

/// exp(1 - 1/(1 - t^2)) on |t| < 1.
#[inline]
pub fn bump_shape(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

pub fn build_bump(delta: f64) -> Result<Bump> {
    if !(delta > 0.0) {
        return Err(Error::Parameter("bump half-width must be positive".into()));
    }
    let g = Grid1D::new(-delta, delta, BUMP_SAMPLES)?;
    let vals: Vec<C64> = g.nodes().iter().map(|&s| C64::new(bump_shape(s / delta), 0.0)).collect();
    Ok(Bump { delta, transform: fourier_line(&g, &vals)? })
}

/// 2pi-periodic factor: a bump of half-width `half_width` centred at pi + shift,
/// times ((p - pi - shift)/half_width)^power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicH {
    pub nu: f64,
    pub shift: f64,
    pub half_width: f64,
    pub power: u32,
}

pub fn build_periodic_h(nu: f64) -> Result<PeriodicH> {
    PeriodicH::new(nu, 0.0, nu, 0)
}

impl PeriodicH {
    pub fn new(nu: f64, shift: f64, half_width: f64, power: u32) -> Result<Self> {
        if !(nu > 0.0 && nu < PI) || !(half_width > 0.0) || shift.abs() + half_width > nu + 1e-15 {
            return Err(Error::Parameter("periodic factor must sit inside (pi - nu, pi + nu)".into()));
        }
        Ok(PeriodicH { nu, shift, half_width, power })
    }

    pub fn eval(&self, p: f64) -> f64 {
        let r = p.rem_euclid(2.0 * PI);
        let t = (r - PI - self.shift) / self.half_width;
        bump_shape(t) * t.powi(self.power as i32)
    }

    /// Support intervals of h(a s) in s that start below `s_max`, both signs, ascending.
    pub fn support_in_s(&self, a: f64, s_max: f64) -> Vec<(f64, f64)> {
        let mut pos = vec![];
        let mut k = 0i64;
        loop {
            let c = (PI + self.shift + 2.0 * PI * k as f64) / a;
            let lo = c - self.half_width / a;
            if lo >= s_max {
                break;
            }
            pos.push((lo, c + self.half_width / a));
            k += 1;
        }
        let mut neg = vec![];
        let mut k = -1i64;
        loop {
            let c = (PI + self.shift + 2.0 * PI * k as f64) / a;
            let hi = c + self.half_width / a;
            if -hi >= s_max {
                break;
            }
            neg.push((c - self.half_width / a, hi));
            k -= 1;
        }
        neg.reverse();
        neg.extend(pos);
        neg
    }
}

/// f(s) = h(as) (i a s)^n omega0hat(a s).
#[derive(Clone, Debug)]
pub struct GapProfile {
    pub h: PeriodicH,
    pub bump: Bump,
    pub n: usize,
    pub a: f64,
}

impl GapProfile {
    pub fn xi(&self, p: f64) -> C64 {
        let hv = self.h.eval(p);
        if hv == 0.0 {
            return C64::new(0.0, 0.0);
        }
        C64::new(0.0, p).powu(self.n as u32) * (hv * self.bump.hat(p))
    }

    pub fn eval(&self, s: f64) -> C64 {
        self.xi(self.a * s)
    }
}

pub fn build_xi(h: PeriodicH, bump: Bump, n: usize) -> Result<GapProfile> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    Ok(GapProfile { h, bump, n, a: 1.0 })
}

pub fn build_f(xi: &GapProfile, a: f64) -> GapProfile {
    GapProfile { a, ..xi.clone() }
}

/// Gauss nodes on every support interval of f up to |s| < s_max.
#[derive(Clone, Debug)]
pub struct SNodes {
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    /// support intervals, `per_interval` consecutive nodes each
    pub intervals: Vec<(f64, f64)>,
    pub per_interval: usize,
}

pub fn s_nodes(f: &GapProfile, s_max: f64, per_interval: usize) -> SNodes {
    let mut s = vec![];
    let mut w = vec![];
    let (x, wg) = quad::gauss_legendre(per_interval);
    let intervals = f.h.support_in_s(f.a, s_max);
    for &(lo, hi) in &intervals {
        let c = 0.5 * (lo + hi);
        let r = 0.5 * (hi - lo);
        for (t, v) in x.iter().zip(&wg) {
            s.push(c + r * t);
            w.push(r * v);
        }
    }
    SNodes { s, w, intervals, per_interval }
}

const CHEB_POINTS: usize = 24;

impl GapProfile {
    /// f on a node set; omega0hat is interpolated across each support interval from
    /// Chebyshev samples (it varies on the scale 2pi/delta, far wider than an interval).
    pub fn eval_nodes(&self, nodes: &SNodes) -> Vec<C64> {
        let m = CHEB_POINTS;
        let mut out = Vec::with_capacity(nodes.s.len());
        let mut cheb = vec![0.0; m];
        let mut vals = vec![0.0; m];
        for (i, &(lo, hi)) in nodes.intervals.iter().enumerate() {
            let (plo, phi) = (self.a * lo, self.a * hi);
            for (k, c) in cheb.iter_mut().enumerate() {
                let th = PI * k as f64 / (m - 1) as f64;
                *c = 0.5 * (plo + phi) - 0.5 * (phi - plo) * th.cos();
            }
            for (v, &c) in vals.iter_mut().zip(&cheb) {
                *v = self.bump.hat(c);
            }
            let bw = quad::barycentric_weights(&cheb);
            for &s in &nodes.s[i * nodes.per_interval..(i + 1) * nodes.per_interval] {
                let p = self.a * s;
                let hv = self.h.eval(p);
                out.push(if hv == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new(0.0, p).powu(self.n as u32) * (hv * quad::barycentric_eval(&cheb, &bw, &vals, p))
                });
            }
        }
        out
    }
}

/// max |f| on a dense sample of [-b, b]; zero by construction for admissible b.
pub fn verify_condition_i(f: &GapProfile, b: f64) -> f64 {
    let n = 200_001;
    (0..n).map(|i| f.eval(-b + 2.0 * b * i as f64 / (n - 1) as f64).norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeakageReport {
    /// per j: sup outside the eps-vicinity of aZ relative to the global sup
    pub leakage: Vec<f64>,
    /// per j: truncated mass beyond the node set, relative to the global sup
    pub tail: Vec<f64>,
}

pub const LEAKAGE_SAMPLES: usize = 1201;

/// int e^{-ixs} f(s) s^{-j} ds (without the 2pi factor) at the LEAKAGE_SAMPLES
/// points of [-3a, 3a].
pub fn condition_ii_transform(fvals: &[C64], nodes: &SNodes, j: usize, a: f64) -> Vec<C64> {
    let nx = LEAKAGE_SAMPLES;
    let dx = 6.0 * a / (nx - 1) as f64;
    let c: Vec<C64> =
        fvals.iter().zip(&nodes.s).zip(&nodes.w).map(|((v, s), w)| v * (w * s.powi(-(j as i32)))).collect();
    uniform_sum(&c, &nodes.s, 3.0 * a, -dx, nx)
}

/// Leakage of the transform of f(s) s^{-j}, j < n, outside the eps-vicinity of aZ,
/// sampled on 1201 points of [-3a, 3a]. `fvals` holds f on the nodes, `tails[j]` the
/// absolute mass of |f| |s|^{-j} beyond them.
pub fn verify_condition_ii(
    fvals: &[C64],
    nodes: &SNodes,
    n: usize,
    a: f64,
    eps: f64,
    tails: &[f64],
    tail_tol: f64,
) -> Result<LeakageReport> {
    let nx = LEAKAGE_SAMPLES;
    let dx = 6.0 * a / (nx - 1) as f64;
    let mut leakage = vec![];
    let mut rel_tails = vec![];
    for j in 0..n {
        let vals = condition_ii_transform(fvals, nodes, j, a);
        let mut sup: f64 = 0.0;
        let mut out: f64 = 0.0;
        for (k, v) in vals.iter().enumerate() {
            let x = -3.0 * a + dx * k as f64;
            let val = v.norm() * INV_SQRT_2PI;
            sup = sup.max(val);
            let d = (x / a - (x / a).round()).abs() * a;
            if d >= eps {
                out = out.max(val);
            }
        }
        if sup == 0.0 {
            leakage.push(0.0);
            rel_tails.push(0.0);
            continue;
        }
        let t = tails.get(j).copied().unwrap_or(0.0) * INV_SQRT_2PI / sup;
        if t > tail_tol {
            return Err(Error::Resolution {
                msg: format!("truncated tail mass {t:e} for j = {j} exceeds {tail_tol:e}"),
                needed: nodes.s.len() * 2,
            });
        }
        leakage.push(out / sup);
        rel_tails.push(t);
    }
    Ok(LeakageReport { leakage, tail: rel_tails })
}

/// Mass of |f(s)| |s|^{-j}, j < n, over the support intervals beyond `s_max`; a rough
/// estimate (4 nodes per interval), summed outward until the increments stall.
pub fn tail_masses(f: &GapProfile, s_max: f64, n: usize) -> Vec<f64> {
    let (x, wg) = quad::gauss_legendre(4);
    let mut acc = vec![0.0; n];
    let period = 2.0 * PI / f.a;
    let first = |sign: f64| {
        // first interval centre beyond s_max on this side
        let k = ((sign * s_max * f.a - PI - sign * f.h.shift) / (2.0 * PI)).floor() - 1.0;
        sign * (PI + sign * f.h.shift + 2.0 * PI * k) / f.a
    };
    for sign in [1.0, -1.0] {
        let mut c = first(sign);
        let hw = f.h.half_width / f.a;
        while sign * c - hw < s_max {
            c += sign * period;
        }
        loop {
            let mut step = vec![0.0; n];
            for (t, v) in x.iter().zip(&wg) {
                let s = c + hw * t;
                let m = hw * v * f.eval(s).norm();
                for (j, a) in step.iter_mut().enumerate() {
                    *a += m * s.abs().powi(-(j as i32));
                }
            }
            for (a, d) in acc.iter_mut().zip(&step) {
                *a += d;
            }
            if step.iter().zip(&acc).all(|(d, a)| *d <= 1e-6 * a || *a == 0.0) || c.abs() > 64.0 * s_max {
                break;
            }
            c += sign * period;
        }
    }
    acc
}

/// Window chi(q) with supp chi in [-b, b].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    /// q on [-b, b]
    Canonical { b: f64 },
    /// q (G(q - c) + G(q + c)), Gaussian G of width sigma, cut to q_lo <= |q| <= b
    Smooth { b: f64, center: f64, sigma: f64, q_lo: f64 },
}

pub fn build_window_chi(b: f64) -> Result<Window> {
    if !(b > 0.0) {
        return Err(Error::Parameter("window half-width must be positive".into()));
    }
    Ok(Window::Canonical { b })
}

impl Window {
    /// Smooth window used by the gap pipeline.
    pub fn smooth(b: f64) -> Window {
        Window::Smooth { b, center: 1.75, sigma: 0.18, q_lo: 0.5 }
    }

    pub fn eval(&self, q: f64) -> f64 {
        match *self {
            Window::Canonical { b } => {
                if q.abs() <= b {
                    q
                } else {
                    0.0
                }
            }
            Window::Smooth { b, center, sigma, q_lo } => {
                let a = q.abs();
                if a > b || a < q_lo {
                    return 0.0;
                }
                let g = |d: f64| (-0.5 * d * d / (sigma * sigma)).exp();
                q * (g(q - center) + g(q + center))
            }
        }
    }

    /// (inner, outer) limits of |q| on the support.
    pub fn radial_support(&self) -> (f64, f64) {
        match *self {
            Window::Canonical { b } => (0.0, b),
            Window::Smooth { b, q_lo, .. } => (q_lo, b),
        }
    }

    /// int |chi(q)/q|^2 dq
    pub fn chi_over_q_norm2(&self) -> f64 {
        match *self {
            Window::Canonical { b } => 2.0 * b,
            Window::Smooth { .. } => {
                let (lo, hi) = self.radial_support();
                let panels: Vec<f64> = (0..=200).map(|k| lo + (hi - lo) * k as f64 / 200.0).collect();
                let (x, w) = quad::composite(&panels, 16);
                2.0 * x.iter().zip(&w).map(|(q, v)| v * (self.eval(*q) / q).powi(2)).sum::<f64>()
            }
        }
    }
}

/// Uniform q x p samples of F = chi(q) f(pq); values at |p| < 1 must come out zero.
pub fn assemble_f(chi: &Window, f: &dyn Fn(f64) -> C64, q_grid: &Grid1D, p_grid: &Grid1D) -> Result<SpectralDensity> {
    let qs = q_grid.nodes();
    let ps = p_grid.nodes();
    let mut values = Vec::with_capacity(qs.len() * ps.len());
    for &q in &qs {
        let c = chi.eval(q);
        for &p in &ps {
            let v = if c == 0.0 { C64::new(0.0, 0.0) } else { f(p * q) * c };
            if p.abs() < 1.0 && v != C64::new(0.0, 0.0) {
                return Err(Error::ConstructionViolation(format!("F({q}, {p}) = {v} inside |p| < 1")));
            }
            values.push(if p.abs() < 1.0 { C64::new(0.0, 0.0) } else { v });
        }
    }
    Ok(SpectralDensity { q_grid: q_grid.clone(), p_grid: p_grid.clone(), values })
}

/// Local 6-point Lagrange interpolation along a uniform grid; zero outside.
fn interp_uniform(grid: &Grid1D, row: &[C64], p: f64) -> C64 {
    if p < grid.lo || p > grid.hi {
        return C64::new(0.0, 0.0);
    }
    let t = (p - grid.lo) / grid.spacing;
    let base = (t.floor() as isize - 2).clamp(0, grid.n as isize - 6) as usize;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..6 {
        let mut l = 1.0;
        for m in 0..6 {
            if m != j {
                l *= (t - (base + m) as f64) / (j as f64 - m as f64);
            }
        }
        acc += row[base + j] * l;
    }
    acc
}

/// u(q, mu) = mu^{-2} F(q, 1/mu) on the angle grid, and g = Phi* u on `x_grid`.
pub fn theorem1_map(
    density: &SpectralDensity,
    angles: &AngleGrid,
    x_grid: &Grid1D,
) -> Result<(StripFunction, StripFunction)> {
    angles.validate()?;
    if density.inner_support_audit() != 0.0 {
        return Err(Error::ConstructionViolation("F is nonzero at |p| < 1".into()));
    }
    let q = density.q_grid.clone();
    let mut u = StripFunction::zeros(Rep::Spectral, q.clone(), angles.clone());
    for (k, &mu) in angles.nodes.iter().enumerate() {
        let p = 1.0 / mu;
        let row = u.row_mut(k);
        for (i, dst) in row.iter_mut().enumerate() {
            let frow = &density.values[i * density.p_grid.n..(i + 1) * density.p_grid.n];
            *dst = interp_uniform(&density.p_grid, frow, p) / (mu * mu);
        }
    }
    let window = SupportWindow { lo: q.lo, hi: q.hi };
    let g = phi_inverse(&u, &window, x_grid)?;
    Ok((u, g))
}

/// Spectral samples u(mu s, mu) on rays: for angle k, the active s-node indices and values.
#[derive(Clone, Debug)]
pub struct RayField {
    pub angles: AngleGrid,
    pub nodes: SNodes,
    pub rays: Vec<Vec<(usize, C64)>>,
}

impl RayField {
    /// u(q, mu) = mu^{-2} chi(q) f(q/mu), shifted by x0 (phase e^{-i x0 s}).
    pub fn from_density(chi: &Window, fvals: &[C64], nodes: &SNodes, angles: &AngleGrid, x0: f64) -> Self {
        let rays = angles
            .nodes
            .iter()
            .map(|&mu| {
                nodes
                    .s
                    .iter()
                    .enumerate()
                    .filter_map(|(j, &s)| {
                        let c = chi.eval(mu * s);
                        let v = fvals[j];
                        if c == 0.0 || v == C64::new(0.0, 0.0) {
                            return None;
                        }
                        let phase = if x0 == 0.0 { C64::new(1.0, 0.0) } else { C64::from_polar(1.0, -x0 * s) };
                        Some((j, v * phase * (c / (mu * mu))))
                    })
                    .collect()
            })
            .collect();
        RayField { angles: angles.clone(), nodes: nodes.clone(), rays }
    }

    /// ||u||_{|mu| dq dmu} = ||g||
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for (k, (&mu, &wk)) in self.angles.nodes.iter().zip(&self.angles.weights).enumerate() {
            let r: f64 = self.rays[k].iter().map(|(j, v)| mu.abs() * self.nodes.w[*j] * v.norm_sqr()).sum();
            acc += wk * mu.abs() * r;
        }
        acc.sqrt()
    }

    pub fn inner(&self, other: &RayField) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (k, (&mu, &wk)) in self.angles.nodes.iter().zip(&self.angles.weights).enumerate() {
            let mut b = other.rays[k].iter().peekable();
            let mut r = C64::new(0.0, 0.0);
            for (j, v) in &self.rays[k] {
                while let Some((jb, _)) = b.peek() {
                    if jb < j {
                        b.next();
                    } else {
                        break;
                    }
                }
                if let Some((jb, vb)) = b.peek() {
                    if jb == j {
                        r += v * vb.conj() * (mu.abs() * self.nodes.w[*j]);
                    }
                }
            }
            acc += r * (wk * mu.abs());
        }
        acc
    }

    /// g(x, mu_k) = Phi* u at angle k.
    pub fn eval_position(&self, k: usize, x: f64) -> C64 {
        let mu = self.angles.nodes[k];
        let mut acc = C64::new(0.0, 0.0);
        for (j, v) in &self.rays[k] {
            let s = self.nodes.s[*j];
            acc += v * C64::from_polar(mu.abs() * self.nodes.w[*j], x * s);
        }
        acc * INV_SQRT_2PI
    }

    /// Samples of g on an x-grid (position representation).
    pub fn to_position(&self, x_grid: &Grid1D) -> StripFunction {
        let xs = x_grid.nodes();
        let mut out = StripFunction::zeros(Rep::Position, x_grid.clone(), self.angles.clone());
        for k in 0..self.angles.len() {
            let row = out.row_mut(k);
            for (l, &x) in xs.iter().enumerate() {
                row[l] = self.eval_position(k, x);
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MembershipReport {
    /// max normalized residual per channel
    pub per_channel: Vec<f64>,
    pub max_residual: f64,
    pub norm_g: f64,
}

/// int int g(x - mu t, mu) conj(phi_l(mu)) h(x) dmu dx for every channel, t and h,
/// normalized by ||g|| ||h|| ||phi_l||; translation is the phase e^{-iqt}.
pub fn verify_membership(
    g: &RayField,
    kernel: &CollisionKernel,
    ts: &[f64],
    tests: &TestFunctionFamily,
) -> Result<MembershipReport> {
    if ts.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("non-finite translation".into()));
    }
    let norm_g = g.norm();
    let nt = ts.len();
    let uniform = nt > 2 && {
        let dt = ts[1] - ts[0];
        ts.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-12 * dt.abs().max(1.0))
    };
    let phis: Vec<Vec<f64>> =
        kernel.channels.iter().map(|ch| g.angles.nodes.iter().map(|&mu| ch.phi.eval(mu)).collect()).collect();
    let mut per_channel = vec![0.0f64; kernel.n()];
    // hats shared between channels are only integrated once
    let mut seen: Vec<Hat> = vec![];
    for hats in &tests.per_channel {
        for h in hats {
            if seen.contains(h) {
                continue;
            }
            seen.push(*h);
            let hh: Vec<C64> = g.nodes.s.iter().map(|&s| h.transform_conj(s)).collect();
            // acc[l][t]
            let mut acc = vec![vec![C64::new(0.0, 0.0); nt]; kernel.n()];
            let mut r = vec![C64::new(0.0, 0.0); nt];
            for (k, (&mu, &wk)) in g.angles.nodes.iter().zip(&g.angles.weights).enumerate() {
                r.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                let mut ray_c = Vec::with_capacity(g.rays[k].len());
                let mut ray_s = Vec::with_capacity(g.rays[k].len());
                for (j, v) in &g.rays[k] {
                    ray_c.push(v * hh[*j] * (mu.abs() * g.nodes.w[*j]));
                    ray_s.push(-mu * g.nodes.s[*j]);
                }
                if uniform {
                    r = uniform_sum(&ray_c, &ray_s, ts[0], ts[1] - ts[0], nt);
                } else {
                    for (ti, &t) in ts.iter().enumerate() {
                        r[ti] = nonuniform_sum(&ray_c, &ray_s, t);
                    }
                }
                for (l, a) in acc.iter_mut().enumerate() {
                    let ph = phis[l][k];
                    if ph == 0.0 {
                        continue;
                    }
                    for (dst, v) in a.iter_mut().zip(&r) {
                        *dst += v * (wk * ph);
                    }
                }
            }
            let hn = h.norm();
            for (l, ch) in kernel.channels.iter().enumerate() {
                if !tests.per_channel[l].contains(h) {
                    continue;
                }
                let denom = norm_g * hn * ch.phi.norm();
                for v in &acc[l] {
                    let res = if denom == 0.0 { 0.0 } else { v.norm() * INV_SQRT_2PI / denom };
                    per_channel[l] = per_channel[l].max(res);
                }
            }
        }
    }
    let max_residual = per_channel.iter().cloned().fold(0.0, f64::max);
    Ok(MembershipReport { per_channel, max_residual, norm_g })
}

/// Position-side membership check for a sampled g (no spectral shortcut):
/// x-integral against h by Gauss quadrature, translation by re-evaluation.
pub fn verify_membership_sampled(
    g: &dyn Fn(usize, f64) -> C64,
    angles: &AngleGrid,
    norm_g: f64,
    kernel: &CollisionKernel,
    ts: &[f64],
    tests: &TestFunctionFamily,
) -> MembershipReport {
    let mut per_channel = vec![0.0f64; kernel.n()];
    for (l, ch) in kernel.channels.iter().enumerate() {
        for h in &tests.per_channel[l] {
            let (lo, hi) = h.support();
            let (xg, wg) = quad::composite(&[lo, h.center, hi], 24);
            for &t in ts {
                let mut acc = C64::new(0.0, 0.0);
                for (k, (&mu, &wk)) in angles.nodes.iter().zip(&angles.weights).enumerate() {
                    let r: C64 = xg.iter().zip(&wg).map(|(x, w)| g(k, x - mu * t) * (w * h.eval(*x))).sum();
                    acc += r * (wk * ch.phi.eval(mu));
                }
                let res = acc.norm() / (norm_g * h.norm() * ch.phi.norm());
                per_channel[l] = per_channel[l].max(res);
            }
        }
    }
    let max_residual = per_channel.iter().cloned().fold(0.0, f64::max);
    MembershipReport { per_channel, max_residual, norm_g }
}

/// Linear independence of F_j(q, p) = chi_j(q) h_j(pq) omegahat(pq), probed at pq = c
/// for each probe c over a q-sample; true when the sampled system has full column rank.
pub fn independence_check(
    h_list: &[&dyn Fn(f64) -> f64],
    chi_list: &[&dyn Fn(f64) -> f64],
    omega_hat: &dyn Fn(f64) -> f64,
    probes: &[f64],
    q_sample: &[f64],
    tol: f64,
) -> Result<(bool, usize)> {
    if h_list.len() != chi_list.len() || h_list.is_empty() {
        return Err(Error::InvalidInput("one chi per h".into()));
    }
    if probes.iter().any(|&c| c == 0.0 || omega_hat(c) == 0.0) {
        return Err(Error::InvalidInput("probe c must be nonzero with omegahat(c) != 0".into()));
    }
    let m = h_list.len();
    let rows = probes.len() * q_sample.len();
    let mat = DMatrix::from_fn(rows, m, |r, j| {
        let c = probes[r / q_sample.len()];
        let q = q_sample[r % q_sample.len()];
        h_list[j](c) * omega_hat(c) * chi_list[j](q)
    });
    let sv = mat.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let rank = if top == 0.0 { 0 } else { sv.iter().filter(|&&v| v > tol * top).count() };
    Ok((rank == m, rank))
}

/// Hats at the midpoints of three inter-gap intervals: x0 + a/2, x0 + 3a/2, x0 - a/2.
pub fn default_hats(p: &LatticeParams) -> Vec<Hat> {
    let hw = 0.8 * (p.a / 2.0 - p.eps);
    [0.5, 1.5, -0.5].iter().map(|m| Hat { center: p.x0 + m * p.a, half_width: hw }).collect()
}

/// Truncation of the s-range: relative tail mass stays below 1e-8 for the canonical bump.
pub fn default_s_max(n: usize) -> f64 {
    match n {
        1 => 3000.0,
        2 => 4000.0,
        _ => 2000.0 * n as f64,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapConfig {
    pub params: LatticeParams,
    pub s_max: f64,
    pub per_interval: usize,
    pub angle_ratio: f64,
    pub angle_per_panel: usize,
    pub window: Window,
    pub hats: Vec<Hat>,
    pub ts: Vec<f64>,
}

impl GapConfig {
    pub fn canonical(n: usize) -> Self {
        let params = LatticeParams::canonical(n);
        GapConfig {
            s_max: default_s_max(n),
            per_interval: 32,
            angle_ratio: 0.7,
            angle_per_panel: 10,
            window: Window::smooth(params.b),
            hats: default_hats(&params),
            ts: (0..21).map(|i| -5.0 + 0.5 * i as f64).collect(),
            params,
        }
    }

    /// Same construction after x -> lambda x: a, eps, x0 scale by lambda; b, window and
    /// s-range by 1/lambda.
    pub fn dilated(&self, lambda: f64) -> Self {
        let mut c = self.clone();
        c.params.a *= lambda;
        c.params.eps *= lambda;
        c.params.x0 *= lambda;
        c.params.b /= lambda;
        c.s_max /= lambda;
        c.window = match self.window {
            Window::Canonical { b } => Window::Canonical { b: b / lambda },
            Window::Smooth { b, center, sigma, q_lo } => {
                Window::Smooth { b: b / lambda, center: center / lambda, sigma: sigma / lambda, q_lo: q_lo / lambda }
            }
        };
        c.hats =
            self.hats.iter().map(|h| Hat { center: h.center * lambda, half_width: h.half_width * lambda }).collect();
        c.ts = self.ts.iter().map(|t| t * lambda).collect();
        c
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapReport {
    pub condition_i: f64,
    pub condition_ii: LeakageReport,
    pub condition_ii_oracle: LeakageReport,
    pub membership: MembershipReport,
    pub norm_f: f64,
    pub norm_g: f64,
    pub density_inner_audit: f64,
    pub angle_nodes: usize,
    pub s_nodes: usize,
}

pub struct ConstructionBundle {
    pub params: LatticeParams,
    pub profile: GapProfile,
    pub chi: Window,
    pub nodes: SNodes,
    /// f on `nodes`
    pub fvals: Vec<C64>,
    pub density: SpectralDensity,
    pub field: RayField,
}

/// ||F||_{|p|} = (int |chi/q|^2 dq * int |f(s)|^2 |s| ds)^{1/2}, exact factorisation
/// because f vanishes on |s| <= b.
pub fn density_norm(chi: &Window, fvals: &[C64], nodes: &SNodes) -> f64 {
    let fs: f64 = fvals.iter().zip(&nodes.s).zip(&nodes.w).map(|((v, s), w)| w * s.abs() * v.norm_sqr()).sum();
    (chi.chi_over_q_norm2() * fs).sqrt()
}

/// Gram matrix of the densities F_i = chi(q) f_i(pq) built from several h on one
/// set of s-nodes (the h must share their support intervals).
pub fn h_family_gram(cfg: &GapConfig, hs: &[PeriodicH]) -> Result<DMatrix<C64>> {
    let p = &cfg.params;
    p.validate()?;
    let bump = build_bump(p.delta())?;
    let profiles =
        hs.iter().map(|h| Ok(build_f(&build_xi(*h, bump.clone(), p.n)?, p.a))).collect::<Result<Vec<_>>>()?;
    let Some(first) = profiles.first() else {
        return Err(Error::InvalidInput("empty h family".into()));
    };
    let nodes = s_nodes(first, cfg.s_max, cfg.per_interval);
    for f in &profiles[1..] {
        if s_nodes(f, cfg.s_max, cfg.per_interval).s != nodes.s {
            return Err(Error::InvalidInput("h family members must share support intervals".into()));
        }
    }
    let vals: Vec<Vec<C64>> = profiles.iter().map(|f| f.eval_nodes(&nodes)).collect();
    let c = cfg.window.chi_over_q_norm2();
    let m = hs.len();
    Ok(DMatrix::from_fn(m, m, |i, j| {
        let acc: C64 = vals[i]
            .iter()
            .zip(&vals[j])
            .zip(nodes.s.iter().zip(&nodes.w))
            .map(|((a, b), (s, w))| a * b.conj() * (w * s.abs()))
            .sum();
        acc * c
    }))
}

pub fn build_bundle(cfg: &GapConfig, h: PeriodicH) -> Result<ConstructionBundle> {
    let p = &cfg.params;
    p.validate()?;
    let bump = build_bump(p.delta())?;
    let xi = build_xi(h, bump, p.n)?;
    let profile = build_f(&xi, p.a);
    let nodes = s_nodes(&profile, cfg.s_max, cfg.per_interval);
    let fvals = profile.eval_nodes(&nodes);
    let (q_lo, _) = cfg.window.radial_support();
    let mu_min = (q_lo.max(1e-3 * p.b)) / cfg.s_max / 2.0;
    let angles = AngleGrid::geometric(cfg.angle_ratio, cfg.angle_per_panel, mu_min)?;
    let field = RayField::from_density(&cfg.window, &fvals, &nodes, &angles, p.x0);
    let q_grid = Grid1D::new(-p.b, p.b, 121)?;
    let pm = 64.0 / p.a;
    let p_grid = Grid1D::new(-pm, pm, 1025)?;
    let f_ref = profile.clone();
    let density = assemble_f(&cfg.window, &move |s| f_ref.eval(s), &q_grid, &p_grid)?;
    Ok(ConstructionBundle { params: p.clone(), profile, chi: cfg.window, nodes, fvals, density, field })
}

pub fn run_gap_pipeline(cfg: &GapConfig) -> Result<(ConstructionBundle, GapReport)> {
    let p = &cfg.params;
    let h = build_periodic_h(p.nu)?;
    let bundle = build_bundle(cfg, h)?;
    let prof = &bundle.profile;
    let condition_i = verify_condition_i(prof, p.b);
    let tails = tail_masses(prof, cfg.s_max, p.n);
    let condition_ii = verify_condition_ii(&bundle.fvals, &bundle.nodes, p.n, p.a, p.eps, &tails, 1e-8)?;
    let fine = s_nodes(prof, cfg.s_max, 4 * cfg.per_interval);
    let fine_vals = prof.eval_nodes(&fine);
    let condition_ii_oracle = verify_condition_ii(&fine_vals, &fine, p.n, p.a, p.eps, &tails, 1e-8)?;

    let coeff = crate::model::Coefficient::Gap(crate::model::GapLatticeCoefficient::new(
        p.x0,
        p.a,
        p.eps,
        crate::model::Envelope::Constant { value: 1.0 },
    )?);
    let kernel = CollisionKernel::polynomial(coeff, p.n);
    let tests = TestFunctionFamily::new(&kernel, vec![cfg.hats.clone(); p.n])?;
    let membership = verify_membership(&bundle.field, &kernel, &cfg.ts, &tests)?;
    let report = GapReport {
        condition_i,
        condition_ii,
        condition_ii_oracle,
        norm_f: density_norm(&bundle.chi, &bundle.fvals, &bundle.nodes),
        norm_g: membership.norm_g,
        membership,
        density_inner_audit: bundle.density.inner_support_audit(),
        angle_nodes: bundle.field.angles.len(),
        s_nodes: bundle.nodes.s.len(),
    };
    Ok((bundle, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_values() {
        let b = build_bump(0.25).unwrap();
        assert_eq!(b.eval(0.0), 1.0);
        assert_eq!(b.eval(0.25), 0.0);
        assert_eq!(b.eval(-0.25), 0.0);
        assert!((b.eval(0.125) - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
        // hat(0) = (2pi)^{-1/2} int omega0
        let (x, w) = quad::composite(&[-0.25, 0.0, 0.25], 60);
        let mass: f64 = x.iter().zip(&w).map(|(s, v)| v * b.eval(*s)).sum();
        assert!((b.hat(0.0) - mass * INV_SQRT_2PI).abs() < 1e-13);
    }

    #[test]
    fn bump_transform_reference_values() {
        // 60-digit quadrature of the real-axis integral
        let b = build_bump(0.25).unwrap();
        let refs = [
            (80.0, -1.5233716479555650e-4),
            (150.0, 3.0851865727541666e-5),
            (300.0, -2.9528152694373018e-6),
            (1000.0, 1.1861019471855664e-9),
            (3000.0, 2.3800760752235472e-15),
        ];
        for (p, v) in refs {
            let got = b.hat(p);
            assert!((got - v).abs() < 1e-11 * v.abs(), "{p}: {got:e} vs {v:e}");
            assert_eq!(b.hat(-p), got);
        }
        let near = b.hat_contour(CONTOUR_FROM);
        assert!((near - b.transform.eval(CONTOUR_FROM).re).abs() < 1e-12 * near.abs());
    }

    #[test]
    fn periodic_h_values() {
        let h = build_periodic_h(0.1).unwrap();
        assert_eq!(h.eval(0.0), 0.0);
        assert!((h.eval(PI) - 1.0).abs() < 1e-15);
        assert!((h.eval(PI - 0.05) - (-1.0f64 / 3.0).exp()).abs() < 1e-12);
        assert!((h.eval(PI + 2.0 * PI * 3.0) - 1.0).abs() < 1e-12);
        assert!((h.eval(-PI) - 1.0).abs() < 1e-12);
        assert_eq!(h.eval(PI - 0.1 - 1e-9), 0.0);
        assert!(PeriodicH::new(0.1, 0.05, 0.1, 0).is_err());
    }

    #[test]
    fn xi_and_f() {
        let bump = build_bump(0.25).unwrap();
        let h = build_periodic_h(0.1).unwrap();
        let xi = build_xi(h, bump, 2).unwrap();
        assert_eq!(xi.xi(0.0), C64::new(0.0, 0.0));
        let f = build_f(&xi, 1.0);
        assert_eq!(f.eval(1.234), xi.xi(1.234));
        let f2 = build_f(&xi, 2.0);
        let expect = xi.xi(PI);
        assert!((f2.eval(PI / 2.0) - expect).norm() < 1e-15);
        assert!((expect - C64::new(-PI * PI * xi.bump.hat(PI), 0.0)).norm() < 1e-13);
        for k in 0..1000 {
            let s = -(PI - 0.1) / 2.0 + (PI - 0.1) * k as f64 / 999.0;
            assert_eq!(f2.eval(s), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn window_examples() {
        let c = build_window_chi(3.0).unwrap();
        assert_eq!(c.eval(0.0), 0.0);
        assert_eq!(c.eval(1.5), 1.5);
        assert_eq!(c.chi_over_q_norm2(), 6.0);
        let s = Window::smooth(3.0);
        assert_eq!(s.eval(0.2), 0.0);
        assert_eq!(s.eval(3.1), 0.0);
        assert!(s.eval(1.75) > 1.7);
    }

    #[test]
    fn params_validation() {
        LatticeParams::canonical(1).validate().unwrap();
        let mut p = LatticeParams::canonical(1);
        p.eps = 0.5;
        assert!(p.validate().is_err());
        let mut p = LatticeParams::canonical(1);
        p.b = PI;
        assert!(p.validate().is_err());
    }

    #[test]
    fn independence_examples() {
        let bump = build_bump(0.25).unwrap();
        let om = |p: f64| bump.hat(p);
        let h1 = build_periodic_h(0.1).unwrap();
        let f1 = move |p: f64| h1.eval(p);
        let f2 = move |p: f64| 2.0 * h1.eval(p);
        let c1 = |q: f64| q * (-q * q).exp();
        let c2 = |q: f64| -0.5 * q * (-q * q).exp();
        let qs: Vec<f64> = (1..40).map(|i| 0.1 * i as f64).collect();
        let probes = [PI, PI + 0.03];
        let (ok, r) = independence_check(&[&f1], &[&c1], &om, &probes, &qs, 1e-8).unwrap();
        assert!(ok && r == 1);
        let (ok, _) = independence_check(&[&f1, &f2], &[&c1, &c2], &om, &probes, &qs, 1e-8).unwrap();
        assert!(!ok);
        let hs: Vec<PeriodicH> = [-0.05, 0.0, 0.05].iter().map(|&d| PeriodicH::new(0.1, d, 0.05, 0).unwrap()).collect();
        let hf: Vec<Box<dyn Fn(f64) -> f64>> = hs
            .iter()
            .map(|h| {
                let h = *h;
                Box::new(move |p: f64| h.eval(p)) as Box<dyn Fn(f64) -> f64>
            })
            .collect();
        let cs: Vec<Box<dyn Fn(f64) -> f64>> = [0.3, 1.1, 2.0]
            .iter()
            .map(|&k| Box::new(move |q: f64| q * (k * q).cos()) as Box<dyn Fn(f64) -> f64>)
            .collect();
        let hr: Vec<&dyn Fn(f64) -> f64> = hf.iter().map(|b| b.as_ref()).collect();
        let cr: Vec<&dyn Fn(f64) -> f64> = cs.iter().map(|b| b.as_ref()).collect();
        let probes3 = [PI - 0.05, PI, PI + 0.05];
        let (ok, r) = independence_check(&hr, &cr, &om, &probes3, &qs, 1e-8).unwrap();
        assert!(ok && r == 3);
    }
}
