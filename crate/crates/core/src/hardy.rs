//! Analytic family phi_alpha off two real cuts, its boundary jump f_alpha and the
//! compact-support vectors built from it.
//!
//! phi_alpha(z) = exp[2i alpha (-z/2 + 1/(1 - w(z)))] rho(z), w = ((z-1)/(z+1))^{1/2} with
//! Im w > 0; rho = log^2((z+a)/(z+b)) is cut along [-a, -b].

use crate::error::{Error, Result};
use crate::model::{CollisionKernel, Grid1D, Hat, TestFunctionFamily};
use crate::quad;
use crate::transforms::{uniform_sum, INV_SQRT_2PI};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyParams {
    pub alpha: f64,
    pub rho_a: f64,
    pub rho_b: f64,
    pub n: usize,
    #[serde(default = "default_ladder")]
    pub eta_ladder: Vec<f64>,
}

fn default_ladder() -> Vec<f64> {
    vec![1e-4, 5e-5, 2.5e-5]
}

impl HardyParams {
    pub fn canonical() -> Self {
        HardyParams { alpha: 2.0, rho_a: 3.0, rho_b: 2.0, n: 1, eta_ladder: default_ladder() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::Parameter("alpha must be positive".into()));
        }
        if !(self.rho_b > 1.0 && self.rho_a > self.rho_b) {
            return Err(Error::Parameter(format!(
                "need rho_a > rho_b > 1, got a = {}, b = {}",
                self.rho_a, self.rho_b
            )));
        }
        if self.n == 0 {
            return Err(Error::Parameter("n must be at least 1".into()));
        }
        if self.eta_ladder.len() < 2
            || self.eta_ladder.iter().any(|e| !(*e > 0.0))
            || self.eta_ladder.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::Parameter("eta ladder must be positive and strictly decreasing".into()));
        }
        Ok(())
    }

    /// Points where boundary values stop being smooth.
    pub fn singular_points(&self) -> [f64; 4] {
        [-self.rho_a, -self.rho_b, -1.0, 1.0]
    }

    fn dist_to_singular(&self, x: f64) -> f64 {
        self.singular_points().iter().map(|s| (x - s).abs()).fold(f64::INFINITY, f64::min)
    }
}

fn on_real_cut(z: C64, pred: impl Fn(f64) -> bool) -> bool {
    z.im == 0.0 && pred(z.re)
}

pub fn sqrt_branch(z: C64) -> Result<C64> {
    if on_real_cut(z, |x| x.abs() >= 1.0) {
        return Err(Error::OnCut { re: z.re, im: z.im });
    }
    // Im of the ratio has the sign of Im z, so flipping the principal root in the lower
    // half-plane keeps Im w > 0 and joins the two halves across (-1, 1).
    let w = ((z - 1.0) / (z + 1.0)).sqrt();
    let w = if z.im < 0.0 { -w } else { w };
    debug_assert!(w.im > 0.0);
    Ok(w)
}

fn lambda(z: C64, p: &HardyParams) -> C64 {
    ((z + p.rho_a) / (z + p.rho_b)).ln()
}

pub fn rho_factor(z: C64, p: &HardyParams) -> Result<C64> {
    if on_real_cut(z, |x| x >= -p.rho_a && x <= -p.rho_b) {
        return Err(Error::OnCut { re: z.re, im: z.im });
    }
    let l = lambda(z, p);
    let mut r = l * l;
    if p.n > 1 {
        let l0 = (p.rho_a / p.rho_b).ln();
        r *= (l - l0).powu(p.n as u32 - 1);
    }
    Ok(r)
}

pub fn phi_alpha(z: C64, p: &HardyParams) -> Result<C64> {
    let w = sqrt_branch(z)?;
    let rho = rho_factor(z, p)?;
    let e = C64::new(0.0, 2.0 * p.alpha) * (-z / 2.0 + 1.0 / (1.0 - w));
    Ok(e.exp() * rho)
}

/// exp[2i alpha (-z/2 + 1/(1 - w))] alone.
pub fn exp_factor(z: C64, p: &HardyParams) -> Result<C64> {
    let w = sqrt_branch(z)?;
    Ok((C64::new(0.0, 2.0 * p.alpha) * (-z / 2.0 + 1.0 / (1.0 - w))).exp())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryPair {
    pub x_grid: Vec<f64>,
    pub f_plus: Vec<C64>,
    pub f_minus: Vec<C64>,
    pub f_diff: Vec<C64>,
}

/// Neville extrapolation of (eta_k, v_k) to eta = 0; returns the value and the gap to the
/// extrapolant that drops the largest eta.
fn extrapolate(etas: &[f64], vals: &[C64]) -> (C64, f64) {
    let full = neville0(etas, vals);
    let drop = neville0(&etas[1..], &vals[1..]);
    (full, (full - drop).norm())
}

fn neville0(etas: &[f64], vals: &[C64]) -> C64 {
    let m = etas.len();
    let mut t = vals.to_vec();
    for k in 1..m {
        for i in (k..m).rev() {
            let (ei, ek) = (etas[i], etas[i - k]);
            t[i] = (t[i] * ek - t[i - 1] * ei) / (ek - ei);
        }
    }
    t[m - 1]
}

/// phi(x + i sign 0) by the eta ladder, scaled by min(1, d) with d the distance to the
/// nearest singular point. Returns (value, spread).
fn side_limit(x: f64, sign: f64, p: &HardyParams) -> Result<(C64, f64)> {
    let scale = p.dist_to_singular(x).min(1.0);
    let etas: Vec<f64> = p.eta_ladder.iter().map(|e| e * scale).collect();
    let mut vals = Vec::with_capacity(etas.len());
    for &e in &etas {
        vals.push(phi_alpha(C64::new(x, sign * e), p)?);
    }
    Ok(extrapolate(&etas, &vals))
}

const GUARD: f64 = 1e-3;
const BOUNDARY_TOL: f64 = 1e-8;

/// Side limits on a grid kept 1e-3 away from +-1 and the ends of the rho cut.
pub fn boundary_values(x_grid: &[f64], p: &HardyParams) -> Result<BoundaryPair> {
    p.validate()?;
    if let Some(x) = x_grid.iter().find(|&&x| p.dist_to_singular(x) < GUARD) {
        return Err(Error::InvalidInput(format!("x = {x} is within {GUARD} of a singular point")));
    }
    boundary_values_unguarded(x_grid, p, true)
}

/// Same limits without the guard band; quadrature nodes graded toward the singular points
/// use this with the certificate relaxed to reporting.
pub fn boundary_values_unguarded(x_grid: &[f64], p: &HardyParams, certify: bool) -> Result<BoundaryPair> {
    let mut f_plus = Vec::with_capacity(x_grid.len());
    let mut f_minus = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let (vp, sp) = side_limit(x, 1.0, p)?;
        let (vm, sm) = side_limit(x, -1.0, p)?;
        if certify {
            for (v, s) in [(vp, sp), (vm, sm)] {
                // absolute floor for the zero of rho at 0 when n > 1
                if s > BOUNDARY_TOL * v.norm() + 1e-14 {
                    return Err(Error::BoundaryConvergence { x, spread: s / v.norm().max(1e-300) });
                }
            }
        }
        f_plus.push(vp);
        f_minus.push(vm);
    }
    let f_diff = f_plus.iter().zip(&f_minus).map(|(a, b)| a - b).collect();
    Ok(BoundaryPair { x_grid: x_grid.to_vec(), f_plus, f_minus, f_diff })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FAlpha {
    pub pair: BoundaryPair,
    /// max |f_diff| on (-1, 1) before the clamp
    pub pre_clamp_max: f64,
}

impl FAlpha {
    pub fn values(&self) -> &[C64] {
        &self.pair.f_diff
    }
}

pub fn f_alpha_function(p: &HardyParams, x_grid: &[f64]) -> Result<FAlpha> {
    let mut pair = boundary_values(x_grid, p)?;
    let mut pre: f64 = 0.0;
    for (x, v) in pair.x_grid.iter().zip(pair.f_diff.iter_mut()) {
        if x.abs() < 1.0 {
            pre = pre.max(v.norm());
            *v = C64::new(0.0, 0.0);
        }
    }
    if pre >= 1e-8 {
        return Err(Error::ConstructionViolation(format!("|f_alpha| = {pre:e} inside (-1, 1)")));
    }
    Ok(FAlpha { pair, pre_clamp_max: pre })
}

/// Uniform grid on [-x_max, x_max] with the guard bands removed.
pub fn guarded_grid(p: &HardyParams, x_max: f64, n: usize) -> Result<Vec<f64>> {
    let g = Grid1D::new(-x_max, x_max, n)?;
    Ok(g.nodes().into_iter().filter(|&x| p.dist_to_singular(x) >= GUARD).collect())
}

/// Composite Gauss rule for f_alpha on [-x_max, -1] and [1, x_max]; panels graded
/// geometrically (ratio 1/4, down to 1e-12) toward every breakpoint.
#[derive(Clone, Debug)]
pub struct HardyQuadrature {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub x_max: f64,
}

pub fn hardy_quadrature(cuts: &[f64], x_max: f64, panel: f64, per_panel: usize) -> Result<HardyQuadrature> {
    if !(x_max > 1.0) {
        return Err(Error::Parameter("x_max must exceed 1".into()));
    }
    let mut br: Vec<f64> = vec![-x_max, -1.0, 1.0, x_max];
    br.extend(cuts.iter().filter(|c| c.abs() > 1.0 && c.abs() < x_max));
    br.sort_by(|a, b| a.partial_cmp(b).unwrap());
    br.dedup();
    let mut x = vec![];
    let mut w = vec![];
    for seg in br.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        if lo >= -1.0 && hi <= 1.0 {
            continue;
        }
        let pts = quad::graded_breaks(lo, hi, panel, 1e-12);
        let (xs, ws) = quad::composite(&pts, per_panel);
        x.extend(xs);
        w.extend(ws);
    }
    Ok(HardyQuadrature { x, w, x_max })
}

impl HardyQuadrature {
    pub fn canonical(p: &HardyParams, x_max: f64) -> Result<Self> {
        hardy_quadrature(&[-p.rho_a, -p.rho_b], x_max, 0.8 / p.alpha, 12)
    }

    /// Halved panels, for refinement checks.
    pub fn refined(p: &HardyParams, x_max: f64) -> Result<Self> {
        hardy_quadrature(&[-p.rho_a, -p.rho_b], x_max, 0.4 / p.alpha, 24)
    }

    pub fn f_alpha(&self, p: &HardyParams) -> Result<Vec<C64>> {
        Ok(boundary_values_unguarded(&self.x, p, false)?.f_diff)
    }
}

/// ||f||_{|p|} = (int |f|^2 |x| dx)^{1/2} on the quadrature.
pub fn abs_weighted_norm(q: &HardyQuadrature, f: &[C64]) -> f64 {
    q.x.iter().zip(&q.w).zip(f).map(|((x, w), v)| w * x.abs() * v.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HatLeakage {
    pub leakage: f64,
    pub sup: f64,
    pub margin: f64,
    /// analytic bound on the truncation error relative to sup (zero if not supplied)
    pub tail_bound: f64,
    pub p_grid: Vec<f64>,
    pub hat: Vec<C64>,
}

/// sup_{|p| <= alpha - margin} |fhat| / sup |fhat| on 801 points of [-4 alpha, 4 alpha],
/// margin 0.05 alpha.
pub fn verify_hat_vanishes(x: &[f64], w: &[f64], f: &[C64], alpha: f64) -> Result<HatLeakage> {
    if !(alpha > 0.0) {
        return Err(Error::Parameter("alpha must be positive".into()));
    }
    let np = 801;
    let dp = 8.0 * alpha / (np - 1) as f64;
    let c: Vec<C64> = f.iter().zip(w).map(|(v, w)| v * *w).collect();
    let hat: Vec<C64> = uniform_sum(&c, x, 4.0 * alpha, -dp, np).into_iter().map(|v| v * INV_SQRT_2PI).collect();
    let p_grid: Vec<f64> = (0..np).map(|k| -4.0 * alpha + dp * k as f64).collect();
    let margin = 0.05 * alpha;
    let sup = hat.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let inner =
        p_grid.iter().zip(&hat).filter(|(p, _)| p.abs() <= alpha - margin).map(|(_, v)| v.norm()).fold(0.0, f64::max);
    let leakage = if sup == 0.0 { 0.0 } else { inner / sup };
    Ok(HatLeakage { leakage, sup, margin, tail_bound: 0.0, p_grid, hat })
}

/// Truncation bound from the |x|^-2 tail: integrating by parts the two oscillating
/// pieces e^{+-i alpha x} rho(x) beyond +-X against e^{-ipx}, |p| <= alpha - kappa.
pub fn truncation_bound(p: &HardyParams, x_max: f64, kappa: f64) -> Result<f64> {
    let r1 = rho_factor(C64::new(x_max, 0.0), p)?.norm();
    let r2 = rho_factor(C64::new(-x_max, 0.0), p)?.norm();
    Ok((2.0 * r1 + 2.0 * r2) / kappa * INV_SQRT_2PI)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HardyReport {
    pub pre_clamp_max: f64,
    pub norm: f64,
    pub norm_refined: f64,
    pub norm_rel_change: f64,
    pub leakage: HatLeakageSummary,
    pub boundedness_upper: (f64, f64),
    pub boundedness_lower: (f64, f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HatLeakageSummary {
    pub x_max: f64,
    pub leakage: f64,
    pub bound: f64,
    pub ratio: f64,
    pub sup: f64,
}

pub fn property3(p: &HardyParams, x_max: f64) -> Result<(HatLeakageSummary, HatLeakage)> {
    let q = HardyQuadrature::canonical(p, x_max)?;
    let f = q.f_alpha(p)?;
    let mut lk = verify_hat_vanishes(&q.x, &q.w, &f, p.alpha)?;
    let bound = truncation_bound(p, x_max, lk.margin)? / lk.sup;
    lk.tail_bound = bound;
    let s = HatLeakageSummary { x_max, leakage: lk.leakage, bound, ratio: lk.leakage / bound, sup: lk.sup };
    Ok((s, lk))
}

/// sup of |e^{-i alpha z} phi| over the upper (sign = 1) or |e^{i alpha z} phi| over the
/// lower half-plane sample x in [-l, l], |y| in [0.5, l], on an nx x ny grid.
pub fn half_plane_sup(p: &HardyParams, sign: f64, l: f64, nx: usize, ny: usize) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for i in 0..nx {
        let x = -l + 2.0 * l * i as f64 / (nx - 1) as f64;
        for k in 0..ny {
            // log spacing in y
            let y = 0.5 * (l / 0.5f64).powf(k as f64 / (ny - 1) as f64);
            let z = C64::new(x, sign * y);
            let v = (C64::new(0.0, -sign * p.alpha) * z).exp() * phi_alpha(z, p)?;
            sup = sup.max(v.norm());
        }
    }
    Ok(sup)
}

pub fn run_hardy(p: &HardyParams, x_max: f64) -> Result<HardyReport> {
    p.validate()?;
    let inner: Vec<f64> = guarded_grid(p, 0.999, 2001)?.into_iter().filter(|x| x.abs() < 1.0).collect();
    let fa = f_alpha_function(p, &inner)?;
    let q = HardyQuadrature::canonical(p, x_max)?;
    let norm = abs_weighted_norm(&q, &q.f_alpha(p)?);
    let qr = HardyQuadrature::refined(p, x_max)?;
    let norm_refined = abs_weighted_norm(&qr, &qr.f_alpha(p)?);
    let (leakage, _) = property3(p, x_max)?;
    let up = (half_plane_sup(p, 1.0, 50.0, 201, 61)?, half_plane_sup(p, 1.0, 50.0, 401, 121)?);
    let lo = (half_plane_sup(p, -1.0, 50.0, 201, 61)?, half_plane_sup(p, -1.0, 50.0, 401, 121)?);
    Ok(HardyReport {
        pre_clamp_max: fa.pre_clamp_max,
        norm,
        norm_refined,
        norm_rel_change: (norm - norm_refined).abs() / norm_refined,
        leakage,
        boundedness_upper: up,
        boundedness_lower: lo,
    })
}

/// F(q, p) = 1_I(q) f_alpha(p) for a coefficient supported in `supp_c`.
#[derive(Clone, Debug)]
pub struct CompactBundle {
    pub params: HardyParams,
    pub interval: (f64, f64),
    pub supp_c: (f64, f64),
    pub quad: HardyQuadrature,
    pub fvals: Vec<C64>,
}

pub fn required_alpha(interval: (f64, f64), supp_c: (f64, f64)) -> f64 {
    let qm = interval.0.abs().max(interval.1.abs());
    let xm = supp_c.0.abs().max(supp_c.1.abs());
    1.1 * qm * xm
}

pub fn compact_support_bundle(
    interval: (f64, f64),
    supp_c: (f64, f64),
    p: &HardyParams,
    x_max: f64,
    extra_cuts: &[f64],
) -> Result<CompactBundle> {
    p.validate()?;
    if !(interval.1 > interval.0 && supp_c.1 > supp_c.0) {
        return Err(Error::InvalidInput("empty interval".into()));
    }
    let need = required_alpha(interval, supp_c);
    if p.alpha < need * (1.0 - 1e-12) {
        return Err(Error::Parameter(format!("alpha = {} below the required {need}", p.alpha)));
    }
    let mut cuts = vec![-p.rho_a, -p.rho_b];
    cuts.extend_from_slice(extra_cuts);
    let quad = hardy_quadrature(&cuts, x_max, 0.8 / p.alpha, 12)?;
    let fvals = quad.f_alpha(p)?;
    Ok(CompactBundle { params: p.clone(), interval, supp_c, quad, fvals })
}

impl CompactBundle {
    /// ||g|| = ||F||_{|p|} = |I|^{1/2} ||f_alpha||_{|p|}
    pub fn norm(&self) -> f64 {
        (self.interval.1 - self.interval.0).sqrt() * abs_weighted_norm(&self.quad, &self.fvals)
    }

    /// <g, other> when both share the same p-nodes.
    pub fn inner(&self, other: &CompactBundle) -> Result<C64> {
        if self.quad.x != other.quad.x {
            return Err(Error::InvalidInput("bundles must share quadrature nodes".into()));
        }
        let lo = self.interval.0.max(other.interval.0);
        let hi = self.interval.1.min(other.interval.1);
        let len = (hi - lo).max(0.0);
        let s: C64 = self
            .quad
            .x
            .iter()
            .zip(&self.quad.w)
            .zip(self.fvals.iter().zip(&other.fvals))
            .map(|((x, w), (a, b))| a * b.conj() * (w * x.abs()))
            .sum();
        Ok(s * len)
    }

    /// g(x, mu) = (2pi)^{-1/2} mu^{-2} f_alpha(1/mu) int_I e^{ixq/mu} dq
    pub fn eval_position(&self, x: f64, mu: f64) -> Result<C64> {
        if mu == 0.0 || mu.abs() > 1.0 {
            return Err(Error::Domain(format!("mu = {mu}")));
        }
        let pv = 1.0 / mu;
        let f = boundary_values_unguarded(&[pv], &self.params, false)?.f_diff[0];
        let k = x / mu;
        let (a, b) = self.interval;
        let e = if k.abs() < 1e-12 {
            C64::new(b - a, 0.0)
        } else {
            (C64::from_polar(1.0, k * b) - C64::from_polar(1.0, k * a)) / C64::new(0.0, k)
        };
        Ok(f * e * INV_SQRT_2PI / (mu * mu))
    }
}

/// Membership residual in separated form: with p = 1/mu,
/// M(t) = (2pi)^{-1/2} int_I dq e^{-iqt} int dp conj(phi(1/p)) f_alpha(p) H(qp),
/// H(s) = int e^{ixs} h(x) dx; normalized by ||g|| ||h|| ||phi||.
pub fn verify_membership_compact(
    b: &CompactBundle,
    kernel: &CollisionKernel,
    ts: &[f64],
    tests: &TestFunctionFamily,
) -> Result<crate::gap::MembershipReport> {
    let norm_g = b.norm();
    let (qx, qw) = quad::gauss_on(b.interval.0, b.interval.1, 24);
    let mut per_channel = vec![0.0f64; kernel.n()];
    for (l, ch) in kernel.channels.iter().enumerate() {
        let weights: Vec<C64> =
            b.quad.x.iter().zip(&b.quad.w).zip(&b.fvals).map(|((p, w), f)| f * (w * ch.phi.eval(1.0 / p))).collect();
        let pn = ch.phi.norm();
        for h in &tests.per_channel[l] {
            check_hat_inside(h, b.supp_c)?;
            // inner[i] = int dp conj(phi(1/p)) f(p) H(q_i p)
            let inner: Vec<C64> = qx
                .iter()
                .map(|&q| b.quad.x.iter().zip(&weights).map(|(p, v)| v * h.transform_conj(q * p)).sum())
                .collect();
            for &t in ts {
                let m: C64 = qx.iter().zip(&qw).zip(&inner).map(|((q, w), v)| v * C64::from_polar(*w, -q * t)).sum();
                let denom = norm_g * h.norm() * pn;
                let r = if denom == 0.0 { 0.0 } else { m.norm() * INV_SQRT_2PI / denom };
                per_channel[l] = per_channel[l].max(r);
            }
        }
    }
    let max_residual = per_channel.iter().cloned().fold(0.0, f64::max);
    Ok(crate::gap::MembershipReport { per_channel, max_residual, norm_g })
}

fn check_hat_inside(h: &Hat, supp: (f64, f64)) -> Result<()> {
    let (lo, hi) = h.support();
    if lo < supp.0 - 1e-12 || hi > supp.1 + 1e-12 {
        return Err(Error::InvalidInput(format!("test function [{lo}, {hi}] leaves the support of c")));
    }
    Ok(())
}
