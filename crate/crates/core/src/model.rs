//! Grids, sampled functions, collision kernels and weighted norms.

use crate::error::{Error, Result};
use crate::quad;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec")]
pub struct Grid1D {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub spacing: f64,
}

#[derive(Deserialize)]
struct GridSpec {
    lo: f64,
    hi: f64,
    n: usize,
}

impl TryFrom<GridSpec> for Grid1D {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Self> {
        Grid1D::new(s.lo, s.hi, s.n)
    }
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !lo.is_finite() || !hi.is_finite() || hi <= lo {
            return Err(Error::InvalidInput(format!("grid [{lo}, {hi}] with n = {n}")));
        }
        Ok(Grid1D { lo, hi, n, spacing: (hi - lo) / (n - 1) as f64 })
    }

    /// Grid with given spacing centred so that it covers [lo, hi].
    pub fn with_spacing(lo: f64, hi: f64, h: f64) -> Result<Self> {
        let n = ((hi - lo) / h).ceil() as usize + 1;
        Grid1D::new(lo, lo + h * (n - 1) as f64, n)
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + self.spacing * i as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.spacing; self.n];
        w[0] *= 0.5;
        w[self.n - 1] *= 0.5;
        w
    }

    /// Composite Simpson weights (odd n); falls back to trapezoid for even n.
    pub fn simpson_weights(&self) -> Vec<f64> {
        if self.n.is_multiple_of(2) {
            return self.trapezoid_weights();
        }
        let h = self.spacing;
        (0..self.n)
            .map(|i| {
                if i == 0 || i + 1 == self.n {
                    h / 3.0
                } else if i % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AngleGrid {
    pub fn gauss(n: usize) -> Self {
        let (nodes, weights) = quad::gauss_legendre(n);
        AngleGrid { nodes, weights }
    }

    /// Composite Gauss rule on geometric panels 1, r, r^2, ... down to `mu_min`,
    /// then one last panel to 0; mirrored to negative angles.
    pub fn geometric(ratio: f64, per_panel: usize, mu_min: f64) -> Result<Self> {
        if !(0.0 < ratio && ratio < 1.0) || !(0.0 < mu_min && mu_min < 1.0) || per_panel == 0 {
            return Err(Error::InvalidInput("geometric angle grid parameters".into()));
        }
        let mut breaks = vec![0.0];
        let mut b = 1.0;
        let mut desc = vec![];
        while b > mu_min {
            desc.push(b);
            b *= ratio;
        }
        desc.reverse();
        breaks.extend(desc);
        let (pos, wpos) = quad::composite(&breaks, per_panel);
        let mut nodes: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
        let mut weights: Vec<f64> = wpos.iter().rev().cloned().collect();
        nodes.extend(pos);
        weights.extend(wpos);
        AngleGrid::from_parts(nodes, weights)
    }

    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let g = AngleGrid { nodes, weights };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() != self.weights.len() || self.nodes.is_empty() {
            return Err(Error::InvalidInput("angle grid shape".into()));
        }
        let s: f64 = self.weights.iter().sum();
        if (s - 2.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("angle weights sum to {s}")));
        }
        if !self.nodes.windows(2).all(|p| p[0] < p[1]) {
            return Err(Error::InvalidInput("angle nodes not increasing".into()));
        }
        if self.nodes.iter().any(|&m| m == 0.0 || m.abs() > 1.0) {
            return Err(Error::Domain("angle node at 0 or outside [-1, 1]".into()));
        }
        if self.weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidInput("nonpositive angle weight".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rep {
    Position,
    Spectral,
}

/// Samples u(x, mu) or u(q, mu); row k holds the samples at angle k.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StripFunction {
    pub rep: Rep,
    pub axis: Grid1D,
    pub angles: AngleGrid,
    pub values: Vec<C64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    Plain,
    AbsMu,
}

impl StripFunction {
    pub fn new(rep: Rep, axis: Grid1D, angles: AngleGrid, values: Vec<C64>) -> Result<Self> {
        let f = StripFunction { rep, axis, angles, values };
        f.validate()?;
        Ok(f)
    }

    pub fn zeros(rep: Rep, axis: Grid1D, angles: AngleGrid) -> Self {
        let len = axis.n * angles.len();
        StripFunction { rep, axis, angles, values: vec![C64::new(0.0, 0.0); len] }
    }

    pub fn from_fn(rep: Rep, axis: Grid1D, angles: AngleGrid, f: impl Fn(f64, f64) -> C64) -> Self {
        let xs = axis.nodes();
        let mut values = Vec::with_capacity(xs.len() * angles.len());
        for &mu in &angles.nodes {
            for &x in &xs {
                values.push(f(x, mu));
            }
        }
        StripFunction { rep, axis, angles, values }
    }

    pub fn validate(&self) -> Result<()> {
        self.angles.validate()?;
        if self.values.len() != self.axis.n * self.angles.len() {
            return Err(Error::InvalidInput("strip function shape mismatch".into()));
        }
        if self.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(())
    }

    pub fn row(&self, k: usize) -> &[C64] {
        &self.values[k * self.axis.n..(k + 1) * self.axis.n]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [C64] {
        let n = self.axis.n;
        &mut self.values[k * n..(k + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x_or_q, mu_or_p, re, im")?;
        let xs = self.axis.nodes();
        for (k, &mu) in self.angles.nodes.iter().enumerate() {
            for (i, v) in self.row(k).iter().enumerate() {
                writeln!(out, "{:.17e}, {:.17e}, {:.17e}, {:.17e}", xs[i], mu, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

pub fn strip_norm(u: &StripFunction, weight: Weight) -> f64 {
    let wx = u.axis.trapezoid_weights();
    let mut acc = 0.0;
    for (k, (&mu, &wk)) in u.angles.nodes.iter().zip(&u.angles.weights).enumerate() {
        let row: f64 = u.row(k).iter().zip(&wx).map(|(v, w)| w * v.norm_sqr()).sum();
        let m = match weight {
            Weight::Plain => 1.0,
            Weight::AbsMu => mu.abs(),
        };
        acc += wk * m * row;
    }
    acc.sqrt()
}

/// F(q, p) sampled on a q x p tensor grid, row i = q_i.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub q_grid: Grid1D,
    pub p_grid: Grid1D,
    pub values: Vec<C64>,
}

impl SpectralDensity {
    pub fn from_fn(q_grid: Grid1D, p_grid: Grid1D, f: impl Fn(f64, f64) -> C64) -> Self {
        let qs = q_grid.nodes();
        let ps = p_grid.nodes();
        let mut values = Vec::with_capacity(qs.len() * ps.len());
        for &q in &qs {
            for &p in &ps {
                values.push(if p.abs() < 1.0 { C64::new(0.0, 0.0) } else { f(q, p) });
            }
        }
        SpectralDensity { q_grid, p_grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.p_grid.n + j]
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.q_grid.n * self.p_grid.n {
            return Err(Error::InvalidInput("spectral density shape mismatch".into()));
        }
        if self.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(())
    }

    /// Largest |F| over samples with |p| < 1; zero for a valid density.
    pub fn inner_support_audit(&self) -> f64 {
        let ps = self.p_grid.nodes();
        let mut m = 0.0f64;
        for i in 0..self.q_grid.n {
            for (j, p) in ps.iter().enumerate() {
                if p.abs() < 1.0 {
                    m = m.max(self.at(i, j).norm());
                }
            }
        }
        m
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x_or_q, mu_or_p, re, im")?;
        let ps = self.p_grid.nodes();
        for (i, q) in self.q_grid.nodes().iter().enumerate() {
            for (j, p) in ps.iter().enumerate() {
                let v = self.at(i, j);
                writeln!(out, "{:.17e}, {:.17e}, {:.17e}, {:.17e}", q, p, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// (int int |F|^2 |p| dq dp)^(1/2) by tensor Simpson quadrature.
pub fn weighted_norm(f: &SpectralDensity) -> Result<f64> {
    f.validate()?;
    let wq = f.q_grid.simpson_weights();
    let wp = f.p_grid.simpson_weights();
    let ps = f.p_grid.nodes();
    let mut acc = 0.0;
    for (i, wqi) in wq.iter().enumerate() {
        let row: f64 = (0..f.p_grid.n).map(|j| wp[j] * ps[j].abs() * f.at(i, j).norm_sqr()).sum();
        acc += wqi * row;
    }
    Ok(acc.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    Constant { value: f64 },
    Window { lo: f64, hi: f64, value: f64 },
}

impl Envelope {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Envelope::Constant { value } => value,
            Envelope::Window { lo, hi, value } => {
                if x >= lo && x <= hi {
                    value
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapLatticeCoefficient {
    pub x0: f64,
    pub a: f64,
    pub eps: f64,
    pub envelope: Envelope,
}

impl GapLatticeCoefficient {
    pub fn new(x0: f64, a: f64, eps: f64, envelope: Envelope) -> Result<Self> {
        if !(a > 0.0) || !(eps > 0.0) || eps >= a / 2.0 {
            return Err(Error::Parameter(format!("gap lattice needs 0 < eps < a/2 (a = {a}, eps = {eps})")));
        }
        Ok(GapLatticeCoefficient { x0, a, eps, envelope })
    }

    pub fn in_gap(&self, x: f64) -> bool {
        let j = ((x - self.x0) / self.a).round();
        (x - self.x0 - self.a * j).abs() < self.eps
    }

    /// Open intervals between consecutive gaps that meet [lo, hi], clipped.
    pub fn pieces(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let j0 = ((lo - self.x0) / self.a).floor() as i64 - 1;
        let j1 = ((hi - self.x0) / self.a).ceil() as i64 + 1;
        let mut out = vec![];
        for j in j0..j1 {
            let l = (self.x0 + self.a * j as f64 + self.eps).max(lo);
            let r = (self.x0 + self.a * (j + 1) as f64 - self.eps).min(hi);
            if l < r {
                out.push((l, r));
            }
        }
        out
    }
}

pub fn eval_gap_coefficient(c: &GapLatticeCoefficient, x: f64) -> f64 {
    if c.in_gap(x) {
        0.0
    } else {
        c.envelope.eval(x)
    }
}

/// Coefficient descriptors with exact support metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    Zero,
    /// value on [lo, hi]
    Indicator {
        lo: f64,
        hi: f64,
        value: f64,
    },
    /// indicator of x > 0
    HalfAxis {
        value: f64,
    },
    /// canonical smooth bump of the given half-width
    Bump {
        center: f64,
        half_width: f64,
    },
    Gap(GapLatticeCoefficient),
}

impl Coefficient {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Zero => 0.0,
            Coefficient::Indicator { lo, hi, value } => {
                if x >= *lo && x <= *hi {
                    *value
                } else {
                    0.0
                }
            }
            Coefficient::HalfAxis { value } => {
                if x > 0.0 {
                    *value
                } else {
                    0.0
                }
            }
            Coefficient::Bump { center, half_width } => {
                let d = (x - center) / half_width;
                if d.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - d * d)).exp()
                } else {
                    0.0
                }
            }
            Coefficient::Gap(g) => eval_gap_coefficient(g, x),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coefficient::Zero => true,
            Coefficient::Indicator { lo, hi, value } => *value == 0.0 || hi <= lo,
            Coefficient::HalfAxis { value } => *value == 0.0,
            Coefficient::Bump { half_width, .. } => *half_width <= 0.0,
            Coefficient::Gap(g) => matches!(g.envelope, Envelope::Constant { value } if value == 0.0),
        }
    }

    /// Closed support intersected with [lo, hi], as disjoint intervals.
    pub fn support_in(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        if self.is_zero() {
            return vec![];
        }
        let clip = |a: f64, b: f64| {
            let (l, r) = (a.max(lo), b.min(hi));
            if l < r {
                vec![(l, r)]
            } else {
                vec![]
            }
        };
        match self {
            Coefficient::Zero => vec![],
            Coefficient::Indicator { lo: a, hi: b, .. } => clip(*a, *b),
            Coefficient::HalfAxis { .. } => clip(0.0, f64::INFINITY),
            Coefficient::Bump { center, half_width } => clip(center - half_width, center + half_width),
            Coefficient::Gap(g) => {
                let (l, r) = match g.envelope {
                    Envelope::Constant { .. } => (lo, hi),
                    Envelope::Window { lo: a, hi: b, .. } => (a.max(lo), b.min(hi)),
                };
                if l < r {
                    g.pieces(l, r)
                } else {
                    vec![]
                }
            }
        }
    }
}

/// Angular factor phi(mu): polynomial with real coefficients (ascending powers),
/// extended by zero outside `support`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularFactor {
    pub coeffs: Vec<f64>,
    #[serde(default = "full_support")]
    pub support: (f64, f64),
}

fn full_support() -> (f64, f64) {
    (-1.0, 1.0)
}

impl AngularFactor {
    pub fn poly(coeffs: Vec<f64>) -> Self {
        AngularFactor { coeffs, support: full_support() }
    }

    pub fn monomial(l: usize) -> Self {
        let mut c = vec![0.0; l + 1];
        c[l] = 1.0;
        Self::poly(c)
    }

    pub fn eval(&self, mu: f64) -> f64 {
        if mu < self.support.0 || mu > self.support.1 {
            return 0.0;
        }
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * mu + c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    /// L2(-1, 1) norm by Gauss quadrature (exact on the support for polynomials).
    pub fn norm(&self) -> f64 {
        let (x, w) = quad::gauss_on(self.support.0, self.support.1, self.coeffs.len() + 2);
        x.iter().zip(&w).map(|(m, v)| v * self.eval(*m).powi(2)).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub coeff: Coefficient,
    pub phi: AngularFactor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionKernel {
    pub channels: Vec<Channel>,
}

impl CollisionKernel {
    /// Channels phi_l = mu^l, l < n, sharing one coefficient.
    pub fn polynomial(coeff: Coefficient, n: usize) -> Self {
        CollisionKernel {
            channels: (0..n).map(|l| Channel { coeff: coeff.clone(), phi: AngularFactor::monomial(l) }).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.channels.len()
    }

    /// Gram matrix of the angular factors under int_{-1}^{1} d mu.
    pub fn gram(&self) -> nalgebra::DMatrix<f64> {
        let deg = self.channels.iter().map(|c| c.phi.coeffs.len()).max().unwrap_or(1);
        let (x, w) = quad::gauss_legendre(deg + 2);
        let n = self.n();
        nalgebra::DMatrix::from_fn(n, n, |i, j| {
            x.iter().zip(&w).map(|(m, v)| v * self.channels[i].phi.eval(*m) * self.channels[j].phi.eval(*m)).sum()
        })
    }

    pub fn gram_rank(&self, rel_tol: f64) -> usize {
        let ev = self.gram().symmetric_eigenvalues();
        let top = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ev.iter().filter(|v| v.abs() > rel_tol * top).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.gram_rank(1e-12) != self.n() {
            return Err(Error::InvalidInput("angular factors are linearly dependent".into()));
        }
        Ok(())
    }
}

/// Hat function of half-width `w` centred at `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hat {
    pub center: f64,
    pub half_width: f64,
}

impl Hat {
    pub fn eval(&self, x: f64) -> f64 {
        (1.0 - (x - self.center).abs() / self.half_width).max(0.0)
    }

    pub fn norm(&self) -> f64 {
        (2.0 * self.half_width / 3.0).sqrt()
    }

    /// int e^{ixs} h(x) dx
    pub fn transform_conj(&self, s: f64) -> C64 {
        let z = 0.5 * self.half_width * s;
        let sinc = if z.abs() < 1e-8 { 1.0 - z * z / 6.0 } else { z.sin() / z };
        C64::from_polar(self.half_width * sinc * sinc, self.center * s)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

/// Test functions per channel, each inside the support of the channel coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    pub per_channel: Vec<Vec<Hat>>,
}

impl TestFunctionFamily {
    pub fn new(kernel: &CollisionKernel, per_channel: Vec<Vec<Hat>>) -> Result<Self> {
        if per_channel.len() != kernel.n() {
            return Err(Error::InvalidInput("one hat list per channel".into()));
        }
        for (ch, hats) in kernel.channels.iter().zip(&per_channel) {
            for h in hats {
                let (l, r) = h.support();
                let inside = ch.coeff.support_in(l - 1.0, r + 1.0).iter().any(|&(a, b)| a <= l && r <= b);
                if !inside || !(h.half_width > 0.0) {
                    return Err(Error::Domain(format!("hat at {} leaves the coefficient support", h.center)));
                }
            }
        }
        Ok(TestFunctionFamily { per_channel })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        let g = Grid1D::new(-2.0, 3.0, 11).unwrap();
        assert_eq!(g.node(0), -2.0);
        assert_eq!(g.node(10), 3.0);
        assert!((g.spacing - 0.5).abs() < 1e-15);
        assert!(Grid1D::new(0.0, 1.0, 1).is_err());
        let js = serde_json::to_string(&g).unwrap();
        let back: Grid1D = serde_json::from_str(&js).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn angle_grid_rules() {
        let g = AngleGrid::gauss(64);
        g.validate().unwrap();
        let h = AngleGrid::geometric(0.7, 6, 1e-4).unwrap();
        let s: f64 = h.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-12);
        assert!(AngleGrid::from_parts(vec![-0.5, 0.0, 0.5], vec![0.5, 1.0, 0.5]).is_err());
    }

    #[test]
    fn weighted_norm_examples() {
        let q = Grid1D::new(0.0, 1.0, 11).unwrap();
        let p = Grid1D::new(1.0, 2.0, 11).unwrap();
        let z = SpectralDensity::from_fn(q.clone(), p.clone(), |_, _| C64::new(0.0, 0.0));
        assert_eq!(weighted_norm(&z).unwrap(), 0.0);
        let one = SpectralDensity::from_fn(q, p, |_, _| C64::new(1.0, 0.0));
        assert!((weighted_norm(&one).unwrap() - 1.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn strip_norm_examples() {
        let ang = AngleGrid::gauss(16);
        let x = Grid1D::new(0.0, 1.0, 5).unwrap();
        let one = StripFunction::from_fn(Rep::Position, x.clone(), ang.clone(), |_, _| C64::new(1.0, 0.0));
        assert!((strip_norm(&one, Weight::Plain) - 2f64.sqrt()).abs() < 1e-13);
        let spec = StripFunction { rep: Rep::Spectral, ..one };
        // GL on |mu| is inexact at the kink; 16 nodes give ~1e-3
        assert!((strip_norm(&spec, Weight::AbsMu) - 1.0).abs() < 5e-3);
        let z = StripFunction::zeros(Rep::Position, x, ang);
        assert_eq!(strip_norm(&z, Weight::Plain), 0.0);
    }

    #[test]
    fn gap_coefficient_examples() {
        let c = GapLatticeCoefficient::new(0.0, 1.0, 0.25, Envelope::Constant { value: 1.0 }).unwrap();
        assert_eq!(eval_gap_coefficient(&c, 0.5), 1.0);
        assert_eq!(eval_gap_coefficient(&c, 0.1), 0.0);
        assert_eq!(eval_gap_coefficient(&c, 3.8), 0.0);
        assert!(GapLatticeCoefficient::new(0.0, 1.0, 0.5, Envelope::Constant { value: 1.0 }).is_err());
        let p = c.pieces(-1.0, 1.0);
        assert_eq!(p, vec![(-0.75, -0.25), (0.25, 0.75)]);
    }

    #[test]
    fn kernel_gram_rank() {
        let k = CollisionKernel::polynomial(Coefficient::HalfAxis { value: 1.0 }, 3);
        assert_eq!(k.gram_rank(1e-12), 3);
        let mut d = k.clone();
        d.channels[2].phi = AngularFactor::poly(vec![2.0, 0.0]);
        assert!(d.validate().is_err());
    }

    #[test]
    fn hat_transform_matches_quadrature() {
        let h = Hat { center: 0.5, half_width: 0.2 };
        let (x, w) = quad::composite(&[0.3, 0.5, 0.7], 20);
        for s in [0.0, 1.3, -7.0, 40.0] {
            let direct: C64 = x.iter().zip(&w).map(|(t, v)| C64::from_polar(v * h.eval(*t), s * t)).sum();
            assert!((direct - h.transform_conj(s)).norm() < 1e-14);
        }
        assert!((h.norm() - (0.4f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
