//! Line Fourier transform, Phi / Phi*, J and Psi with their identities.
//!
//! Convention everywhere: fhat(p) = (2 pi)^{-1/2} int e^{-ipx} f(x) dx.
//! Phi f(q, mu) = |mu|^{-1} fhat_mu(q / mu), Phi* u(x, mu) = (2 pi)^{-1/2} int e^{ixq/mu} u(q, mu) dq.

use crate::error::{Error, Result};
use crate::model::{AngleGrid, AngularFactor, Grid1D, Hat, Rep, StripFunction};
use crate::quad;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Relative edge magnitude above which a sampled function is treated as truncated.
pub const DECAY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationWarning {
    pub boundary_magnitude: f64,
    pub relative: f64,
}

/// Sum_j c_j exp(i omega (s0 + j ds)), phase advanced by recurrence.
#[inline]
pub fn exp_sum(c: &[C64], s0: f64, ds: f64, omega: f64) -> C64 {
    let step = C64::from_polar(1.0, omega * ds);
    let mut z = C64::from_polar(1.0, omega * s0);
    let mut acc = C64::new(0.0, 0.0);
    for (j, v) in c.iter().enumerate() {
        acc += v * z;
        z *= step;
        // re-anchor the phase to keep the recurrence error flat
        if j % 512 == 511 {
            z = C64::from_polar(1.0, omega * (s0 + (j + 1) as f64 * ds));
        }
    }
    acc
}

fn edge_check(values: &[C64]) -> Option<TruncationWarning> {
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if top == 0.0 {
        return None;
    }
    let edge = values[0].norm().max(values[values.len() - 1].norm());
    if edge > DECAY_TOL * top {
        Some(TruncationWarning { boundary_magnitude: edge, relative: edge / top })
    } else {
        None
    }
}

/// Transform of a sampled line function; keeps the source samples so that the
/// band-limited interpolant of the dual-grid values can be evaluated anywhere.
#[derive(Clone, Debug)]
pub struct LineTransform {
    pub source: Grid1D,
    pub samples: Vec<C64>,
    pub grid: Grid1D,
    pub values: Vec<C64>,
    pub warning: Option<TruncationWarning>,
}

impl LineTransform {
    /// Trigonometric interpolant of the dual samples at p; zero outside the band.
    pub fn eval(&self, p: f64) -> C64 {
        dtft(&self.source, &self.samples, p)
    }
}

/// Band-limited evaluation of fhat at p from uniform samples.
pub fn dtft(grid: &Grid1D, values: &[C64], p: f64) -> C64 {
    if p.abs() > PI / grid.spacing {
        return C64::new(0.0, 0.0);
    }
    exp_sum(values, grid.lo, grid.spacing, -p) * (grid.spacing * INV_SQRT_2PI)
}

/// dtft at the uniform points p0 + k dp, k < m.
pub fn dtft_uniform(grid: &Grid1D, values: &[C64], p0: f64, dp: f64, m: usize) -> Vec<C64> {
    (0..m).map(|k| dtft(grid, values, p0 + dp * k as f64)).collect()
}

fn dual_grid(grid: &Grid1D) -> (Grid1D, usize) {
    let n = grid.n;
    let m = n / 2;
    let dp = 2.0 * PI / (n as f64 * grid.spacing);
    let lo = -(m as f64) * dp;
    let g = Grid1D { lo, hi: lo + dp * (n - 1) as f64, n, spacing: dp };
    (g, m)
}

pub fn fourier_line(grid: &Grid1D, values: &[C64]) -> Result<LineTransform> {
    if values.len() != grid.n {
        return Err(Error::InvalidInput("sample count does not match grid".into()));
    }
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    let n = grid.n;
    let (dual, m) = dual_grid(grid);
    let mut buf: Vec<C64> = values
        .iter()
        .enumerate()
        .map(|(j, v)| v * C64::from_polar(1.0, 2.0 * PI * ((m * j) % n) as f64 / n as f64))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let scale = grid.spacing * INV_SQRT_2PI;
    let out = buf.iter().enumerate().map(|(k, v)| v * C64::from_polar(scale, -dual.node(k) * grid.lo)).collect();
    Ok(LineTransform {
        source: grid.clone(),
        samples: values.to_vec(),
        grid: dual,
        values: out,
        warning: edge_check(values),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    S,
    P,
    X,
}

/// Samples over (q, second); row i holds q_i.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlaneFunction {
    pub q_grid: Grid1D,
    pub second: Grid1D,
    pub axis: Axis,
    pub values: Vec<C64>,
}

impl PlaneFunction {
    pub fn row(&self, i: usize) -> &[C64] {
        &self.values[i * self.second.n..(i + 1) * self.second.n]
    }

    /// Plain L2 norm by trapezoid rules.
    pub fn l2_norm(&self) -> f64 {
        self.norm_with(|_| 1.0)
    }

    /// L2 norm with weight |second variable|.
    pub fn abs_weighted_norm(&self) -> f64 {
        self.norm_with(f64::abs)
    }

    fn norm_with(&self, w: impl Fn(f64) -> f64) -> f64 {
        let wq = self.q_grid.trapezoid_weights();
        let ws = self.second.trapezoid_weights();
        let ss = self.second.nodes();
        let mut acc = 0.0;
        for (i, a) in wq.iter().enumerate() {
            let r: f64 = self.row(i).iter().enumerate().map(|(j, v)| ws[j] * w(ss[j]) * v.norm_sqr()).sum();
            acc += a * r;
        }
        acc.sqrt()
    }
}

/// Row-wise line transform in the second variable.
pub fn fourier_second(u: &PlaneFunction) -> Result<(PlaneFunction, Vec<LineTransform>)> {
    let mut rows = Vec::with_capacity(u.q_grid.n);
    let mut values = Vec::with_capacity(u.values.len());
    for i in 0..u.q_grid.n {
        let t = fourier_line(&u.second, u.row(i))?;
        values.extend_from_slice(&t.values);
        rows.push(t);
    }
    let second = rows.first().map(|t| t.grid.clone()).unwrap_or_else(|| u.second.clone());
    Ok((PlaneFunction { q_grid: u.q_grid.clone(), second, axis: Axis::P, values }, rows))
}

/// Phi f sampled on `q_grid`; per-angle transforms evaluated at q / mu.
pub fn phi_forward(f: &StripFunction, q_grid: &Grid1D) -> Result<(StripFunction, Option<TruncationWarning>)> {
    if f.rep != Rep::Position {
        return Err(Error::InvalidInput("phi_forward expects a position representation".into()));
    }
    f.validate()?;
    let mut out = StripFunction::zeros(Rep::Spectral, q_grid.clone(), f.angles.clone());
    let mut worst: Option<TruncationWarning> = None;
    for (k, &mu) in f.angles.nodes.iter().enumerate() {
        let row = f.row(k);
        if let Some(w) = edge_check(row) {
            if worst.as_ref().is_none_or(|o| w.relative > o.relative) {
                worst = Some(w);
            }
        }
        let vals = dtft_uniform(&f.axis, row, q_grid.lo / mu, q_grid.spacing / mu, q_grid.n);
        for (dst, v) in out.row_mut(k).iter_mut().zip(vals) {
            *dst = v / mu.abs();
        }
    }
    Ok((out, worst))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportWindow {
    pub lo: f64,
    pub hi: f64,
}

/// Smallest admissible distance between a window and the origin.
pub const MIN_WINDOW_DIST: f64 = 1e-3;

impl SupportWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidInput(format!("window [{lo}, {hi}]")));
        }
        Ok(SupportWindow { lo, hi })
    }

    pub fn contains(&self, q: f64) -> bool {
        q >= self.lo && q <= self.hi
    }

    pub fn dist_to_zero(&self) -> f64 {
        if self.lo <= 0.0 && self.hi >= 0.0 {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn check_away_from_zero(&self) -> Result<()> {
        if self.dist_to_zero() < MIN_WINDOW_DIST {
            return Err(Error::Domain(format!(
                "window [{}, {}] is closer than {MIN_WINDOW_DIST} to 0",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

fn check_window(u: &StripFunction, window: &SupportWindow) -> Result<()> {
    let top = u.max_abs();
    let qs = u.axis.nodes();
    for k in 0..u.angles.len() {
        for (i, v) in u.row(k).iter().enumerate() {
            if !window.contains(qs[i]) && v.norm() > 1e-12 * top {
                return Err(Error::Domain(format!("sample at q = {} lies outside the declared window", qs[i])));
            }
        }
    }
    Ok(())
}

/// Nodes needed on the q-grid for 10 per oscillation of e^{ixq/mu}.
fn density_requirement(u: &StripFunction, xmax: f64) -> usize {
    let span = u.axis.hi - u.axis.lo;
    let mut need = 0usize;
    for (k, &mu) in u.angles.nodes.iter().enumerate() {
        if u.row(k).iter().all(|v| *v == C64::new(0.0, 0.0)) {
            continue;
        }
        let period = 2.0 * PI * mu.abs() / xmax.max(1e-300);
        need = need.max((10.0 * span / period).ceil() as usize + 1);
    }
    need
}

/// Phi* u on the requested x-grid.
pub fn phi_inverse(u: &StripFunction, window: &SupportWindow, x_grid: &Grid1D) -> Result<StripFunction> {
    if u.rep != Rep::Spectral {
        return Err(Error::InvalidInput("phi_inverse expects a spectral representation".into()));
    }
    u.validate()?;
    check_window(u, window)?;
    let xmax = x_grid.lo.abs().max(x_grid.hi.abs());
    let need = density_requirement(u, xmax);
    if u.axis.n < need {
        return Err(Error::Resolution { msg: format!("q-grid too coarse for |x| up to {xmax}"), needed: need });
    }
    let wq = u.axis.trapezoid_weights();
    let mut out = StripFunction::zeros(Rep::Position, x_grid.clone(), u.angles.clone());
    let xs = x_grid.nodes();
    for (k, &mu) in u.angles.nodes.iter().enumerate() {
        let c: Vec<C64> = u.row(k).iter().zip(&wq).map(|(v, w)| v * *w).collect();
        if c.iter().all(|v| *v == C64::new(0.0, 0.0)) {
            continue;
        }
        let dst = out.row_mut(k);
        for (l, &x) in xs.iter().enumerate() {
            dst[l] = exp_sum(&c, u.axis.lo, u.axis.spacing, x / mu) * INV_SQRT_2PI;
        }
    }
    Ok(out)
}

/// Phi* u for angle row k at arbitrary x (no density check).
pub fn phi_inverse_point(u: &StripFunction, k: usize, xs: &[f64]) -> Vec<C64> {
    let wq = u.axis.trapezoid_weights();
    let mu = u.angles.nodes[k];
    let c: Vec<C64> = u.row(k).iter().zip(&wq).map(|(v, w)| v * *w).collect();
    xs.iter().map(|&x| exp_sum(&c, u.axis.lo, u.axis.spacing, x / mu) * INV_SQRT_2PI).collect()
}

/// Spectral derivative -i mu d/dx applied row-wise (decaying rows).
pub fn transport_derivative(f: &StripFunction) -> Result<StripFunction> {
    let n = f.axis.n;
    let mut out = f.clone();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let dk = 2.0 * PI / (n as f64 * f.axis.spacing);
    for (k, &mu) in f.angles.nodes.iter().enumerate() {
        let row = out.row_mut(k);
        fwd.process(row);
        for (j, v) in row.iter_mut().enumerate() {
            let m = if j < n / 2 {
                j as f64
            } else if j == n / 2 && n.is_multiple_of(2) {
                0.0
            } else {
                j as f64 - n as f64
            };
            // -i mu (i k) = mu k
            *v *= mu * m * dk / n as f64;
        }
        inv.process(row);
    }
    Ok(out)
}

/// Interpolation of spectral rows in mu, built once per angle grid.
pub struct AngleInterp {
    nodes: Vec<f64>,
    bw: Vec<f64>,
}

impl AngleInterp {
    pub fn new(angles: &AngleGrid) -> Self {
        AngleInterp { nodes: angles.nodes.clone(), bw: quad::barycentric_weights(&angles.nodes) }
    }

    /// Lagrange basis values at mu.
    pub fn basis(&self, mu: f64) -> Vec<f64> {
        let n = self.nodes.len();
        let mut out = vec![0.0; n];
        if let Some(j) = self.nodes.iter().position(|&t| t == mu) {
            out[j] = 1.0;
            return out;
        }
        let mut den = 0.0;
        for j in 0..n {
            let c = self.bw[j] / (mu - self.nodes[j]);
            out[j] = c;
            den += c;
        }
        out.iter_mut().for_each(|v| *v /= den);
        out
    }
}

/// (Jv)(q, s) = s^{-2} v(q, 1/s) for |s| > 1, zero for |s| < 1.
pub fn j_map(v: &StripFunction, window: &SupportWindow, s_grid: &Grid1D) -> Result<PlaneFunction> {
    if v.rep != Rep::Spectral {
        return Err(Error::InvalidInput("j_map expects a spectral representation".into()));
    }
    window.check_away_from_zero()?;
    let interp = AngleInterp::new(&v.angles);
    let ss = s_grid.nodes();
    let nq = v.axis.n;
    let mut values = vec![C64::new(0.0, 0.0); nq * s_grid.n];
    for (j, &s) in ss.iter().enumerate() {
        if s.abs() < 1.0 {
            continue;
        }
        let b = interp.basis(1.0 / s);
        let s2 = 1.0 / (s * s);
        for i in 0..nq {
            let mut acc = C64::new(0.0, 0.0);
            for (k, bk) in b.iter().enumerate() {
                acc += v.values[k * nq + i] * *bk;
            }
            values[i * s_grid.n + j] = acc * s2;
        }
    }
    Ok(PlaneFunction { q_grid: v.axis.clone(), second: s_grid.clone(), axis: Axis::S, values })
}

/// Psi v on the q-grid of v times `x_grid`, via J, the transform in s, and
/// band-limited sampling at -x q.
pub fn psi_transform(
    v: &StripFunction,
    window: &SupportWindow,
    x_grid: &Grid1D,
    s_grid: &Grid1D,
) -> Result<PlaneFunction> {
    window.check_away_from_zero()?;
    check_window(v, window)?;
    let a = window.dist_to_zero();
    let qs = v.axis.nodes();
    let jv = j_map(v, window, s_grid)?;
    let (_, rows) = fourier_second(&jv)?;
    let mut values = Vec::with_capacity(qs.len() * x_grid.n);
    for (i, &q) in qs.iter().enumerate() {
        let row_nonzero = jv.row(i).iter().any(|z| *z != C64::new(0.0, 0.0));
        if row_nonzero && q.abs() < a {
            return Err(Error::Domain(format!("|q| = {} below dist(0, omega) = {a}", q.abs())));
        }
        let t = &rows[i];
        values.extend(dtft_uniform(&t.source, &t.samples, -x_grid.lo * q, -x_grid.spacing * q, x_grid.n));
    }
    Ok(PlaneFunction { q_grid: v.axis.clone(), second: x_grid.clone(), axis: Axis::X, values })
}

/// Psi v at (q, x) for each listed x, from one J row (q fixed).
fn psi_row_at(t_source: &Grid1D, samples: &[C64], q: f64, xs: &[f64]) -> Vec<C64> {
    xs.iter().map(|&x| dtft(t_source, samples, -x * q)).collect()
}

/// Brute-force Psi v(q, x) = (2pi)^{-1/2} int_{|p|>1} e^{ixqp} p^{-2} v(q, 1/p) dp
/// by composite Gauss quadrature on [1, p_max].
pub fn psi_direct(v: impl Fn(f64, f64) -> C64, q: f64, x: f64, p_max: f64) -> C64 {
    let panels = ((p_max - 1.0) / 0.125).ceil() as usize;
    let breaks: Vec<f64> = (0..=panels).map(|k| 1.0 + (p_max - 1.0) * k as f64 / panels as f64).collect();
    let (ps, ws) = quad::composite(&breaks, 16);
    let mut acc = C64::new(0.0, 0.0);
    for (p, w) in ps.iter().zip(&ws) {
        for sp in [*p, -*p] {
            acc += C64::from_polar(w / (sp * sp), x * q * sp) * v(q, 1.0 / sp);
        }
    }
    acc * INV_SQRT_2PI
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityReport {
    pub t: Vec<f64>,
    pub lhs: Vec<C64>,
    pub rhs: Vec<C64>,
    pub max_discrepancy: f64,
}

/// Both sides of the translated sampling identity for each t:
/// lhs = int int conj(h(x)) phi(mu) (Phi* u)(x - mu t, mu) dmu dx,
/// rhs = int e^{-iqt} <Psi(u phi)(q, .), h> dq.
pub fn sampling_identity_check(
    u: &StripFunction,
    window: &SupportWindow,
    phi: &AngularFactor,
    h: &Hat,
    ts: &[f64],
    s_grid: &Grid1D,
) -> Result<IdentityReport> {
    window.check_away_from_zero()?;
    check_window(u, window)?;
    let (hl, hr) = h.support();
    let (xg, wg) = quad::composite(&[hl, h.center, hr], 24);
    let hx: Vec<f64> = xg.iter().map(|&x| h.eval(x)).collect();
    let reach = ts.iter().fold(0.0f64, |m, t| m.max(t.abs())) + hl.abs().max(hr.abs());
    let need = density_requirement(u, reach);
    if u.axis.n < need {
        return Err(Error::Resolution { msg: format!("q-grid too coarse for |x| up to {reach}"), needed: need });
    }

    let mut lhs = Vec::with_capacity(ts.len());
    for &t in ts {
        let mut acc = C64::new(0.0, 0.0);
        for (k, (&mu, &wk)) in u.angles.nodes.iter().zip(&u.angles.weights).enumerate() {
            let shifted: Vec<f64> = xg.iter().map(|x| x - mu * t).collect();
            let g = phi_inverse_point(u, k, &shifted);
            let inner: C64 = g.iter().zip(&wg).zip(&hx).map(|((gv, w), hv)| gv * (w * hv)).sum();
            acc += inner * (wk * phi.eval(mu));
        }
        lhs.push(acc);
    }

    let mut uphi = u.clone();
    for (k, &mu) in u.angles.nodes.iter().enumerate() {
        let f = phi.eval(mu);
        uphi.row_mut(k).iter_mut().for_each(|v| *v *= f);
    }
    let jv = j_map(&uphi, window, s_grid)?;
    let (_, rows) = fourier_second(&jv)?;
    let qs = u.axis.nodes();
    let wq = u.axis.trapezoid_weights();
    let inner: Vec<C64> = qs
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let vals = psi_row_at(&rows[i].source, &rows[i].samples, q, &xg);
            vals.iter().zip(&wg).zip(&hx).map(|((v, w), hv)| v * (w * hv)).sum()
        })
        .collect();
    let rhs: Vec<C64> = ts
        .iter()
        .map(|&t| qs.iter().zip(&wq).zip(&inner).map(|((q, w), c)| c * C64::from_polar(*w, -q * t)).sum())
        .collect();
    let max_discrepancy = lhs.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
    Ok(IdentityReport { t: ts.to_vec(), lhs, rhs, max_discrepancy })
}

/// sum_j c_j e^{i omega s_j}
pub fn nonuniform_sum(c: &[C64], s: &[f64], omega: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (v, &t) in c.iter().zip(s) {
        if v.re != 0.0 || v.im != 0.0 {
            let (sn, cs) = (omega * t).sin_cos();
            acc += v * C64::new(cs, sn);
        }
    }
    acc
}

/// sum_j c_j e^{i (w0 + k dw) s_j} for k < m, by phase recurrence re-anchored every 64 steps.
pub fn uniform_sum(c: &[C64], s: &[f64], w0: f64, dw: f64, m: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); m];
    for (v, &t) in c.iter().zip(s) {
        if v.re == 0.0 && v.im == 0.0 {
            continue;
        }
        let step = C64::from_polar(1.0, dw * t);
        let mut k = 0;
        while k < m {
            let mut ph = v * C64::from_polar(1.0, (w0 + dw * k as f64) * t);
            for o in out[k..(k + 64).min(m)].iter_mut() {
                *o += ph;
                ph *= step;
            }
            k += 64;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_row(g: &Grid1D) -> Vec<C64> {
        g.nodes().iter().map(|x| C64::new((-0.5 * x * x).exp(), 0.0)).collect()
    }

    #[test]
    fn gaussian_pair() {
        let g = Grid1D::new(-20.0, 20.0, 401).unwrap();
        let t = fourier_line(&g, &gauss_row(&g)).unwrap();
        assert!(t.warning.is_none());
        let err = t
            .grid
            .nodes()
            .iter()
            .zip(&t.values)
            .fold(0.0f64, |m, (p, v)| m.max((v - C64::new((-0.5 * p * p).exp(), 0.0)).norm()));
        assert!(err < 1e-10, "err {err}");
        let off = t.eval(0.3217);
        assert!((off.re - (-0.5f64 * 0.3217 * 0.3217).exp()).abs() < 1e-12);
    }

    #[test]
    fn zero_and_truncation_warning() {
        let g = Grid1D::new(-2.0, 2.0, 64).unwrap();
        let z = fourier_line(&g, &vec![C64::new(0.0, 0.0); 64]).unwrap();
        assert!(z.values.iter().all(|v| v.norm() == 0.0) && z.warning.is_none());
        let t = fourier_line(&g, &gauss_row(&g)).unwrap();
        let w = t.warning.unwrap();
        assert!((w.boundary_magnitude - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn window_rules() {
        assert!(SupportWindow::new(-1.0, 1.0).unwrap().check_away_from_zero().is_err());
        assert!(SupportWindow::new(5e-4, 1.0).unwrap().check_away_from_zero().is_err());
        assert!(SupportWindow::new(-3.0, -1e-3).unwrap().check_away_from_zero().is_ok());
    }

    #[test]
    fn j_map_spot_value() {
        let ang = AngleGrid::gauss(16);
        let q = Grid1D::new(1.0, 2.0, 3).unwrap();
        let v = StripFunction::from_fn(Rep::Spectral, q, ang, |_, mu| C64::new(mu * mu, 0.0));
        let w = SupportWindow::new(1.0, 2.0).unwrap();
        let s = Grid1D::new(-4.0, 4.0, 17).unwrap();
        let j = j_map(&v, &w, &s).unwrap();
        let idx = s.nodes().iter().position(|&x| x == 2.0).unwrap();
        assert!((j.row(1)[idx].re - 1.0 / 16.0).abs() < 1e-14);
        let inner = s.nodes().iter().position(|&x| x == 0.5).unwrap();
        assert_eq!(j.row(0)[inner], C64::new(0.0, 0.0));
        let bad = SupportWindow::new(-1.0, 2.0).unwrap();
        assert!(j_map(&v, &bad, &s).is_err());
    }

    #[test]
    fn density_rule_is_enforced() {
        let ang = AngleGrid::gauss(8);
        let q = Grid1D::new(1.0, 2.0, 11).unwrap();
        let u = StripFunction::from_fn(Rep::Spectral, q, ang, |_, _| C64::new(1.0, 0.0));
        let w = SupportWindow::new(1.0, 2.0).unwrap();
        let x = Grid1D::new(-50.0, 50.0, 11).unwrap();
        match phi_inverse(&u, &w, &x) {
            Err(Error::Resolution { needed, .. }) => assert!(needed > 11),
            other => panic!("expected resolution error, got {other:?}"),
        }
    }
}
