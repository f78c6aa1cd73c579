//! Torus discretisation of the transport-collision operator, the Krylov splitting
//! oracle, and singular-value scans of the constraint map F -> int e^{ipxq} F phi(1/p) dp.

use crate::error::{Error, Result};
use crate::gap::ConstructionBundle;
use crate::model::{AngleGrid, AngularFactor, Coefficient, CollisionKernel, Grid1D, Rep, StripFunction};
use crate::C64;
use nalgebra::{ComplexField, DMatrix, DVector};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Fourier differentiation on n equispaced points of a circle of length `period`,
/// Nyquist mode dropped so the matrix is exactly antisymmetric.
pub fn spectral_derivative(n: usize, period: f64) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    let scale = 2.0 * PI / period;
    for i in 0..n {
        for j in 0..i {
            let k = (i - j) as f64;
            let sign = if (i - j) % 2 == 0 { 1.0 } else { -1.0 };
            let v = if n.is_multiple_of(2) {
                0.5 * sign / (k * PI / n as f64).tan()
            } else {
                0.5 * sign / (k * PI / n as f64).sin()
            } * scale;
            d[(i, j)] = v;
            d[(j, i)] = -v;
        }
    }
    d
}

/// L = A + iK on a periodic x-grid times an angle rule. Vectors are scaled by
/// sqrt(w_k h), so the Euclidean norm is the discrete L2 norm.
pub struct DiscreteBoltzmann {
    /// n points, period n * spacing
    pub x_grid: Grid1D,
    pub angles: AngleGrid,
    pub kernel: CollisionKernel,
    pub a: DMatrix<C64>,
    pub k: DMatrix<C64>,
    pub dim: usize,
}

impl DiscreteBoltzmann {
    pub fn index(&self, k: usize, i: usize) -> usize {
        k * self.x_grid.n + i
    }

    /// Position samples g(x_i, mu_k) -> scaled state vector.
    pub fn sample(&self, g: impl Fn(usize, f64) -> C64) -> DVector<C64> {
        let h = self.x_grid.spacing;
        let xs = self.x_grid.nodes();
        let mut v = DVector::zeros(self.dim);
        for (k, w) in self.angles.weights.iter().enumerate() {
            let s = (w * h).sqrt();
            for (i, &x) in xs.iter().enumerate() {
                v[k * xs.len() + i] = g(k, x) * s;
            }
        }
        v
    }

    pub fn operator(&self) -> DMatrix<C64> {
        &self.a + &self.k * I
    }
}

fn hermiticity(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn assemble_discrete(kernel: &CollisionKernel, x_grid: &Grid1D, angles: &AngleGrid) -> Result<DiscreteBoltzmann> {
    angles.validate()?;
    let nx = x_grid.n;
    let nm = angles.len();
    let dim = nx * nm;
    let period = nx as f64 * x_grid.spacing;
    let d = spectral_derivative(nx, period);
    let mut a = DMatrix::zeros(dim, dim);
    for (k, &mu) in angles.nodes.iter().enumerate() {
        for i in 0..nx {
            for j in 0..nx {
                // i mu d/dx
                a[(k * nx + i, k * nx + j)] = I * (mu * d[(i, j)]);
            }
        }
    }
    let xs = x_grid.nodes();
    let mut k = DMatrix::zeros(dim, dim);
    for ch in &kernel.channels {
        let v: Vec<f64> = angles.nodes.iter().zip(&angles.weights).map(|(m, w)| w.sqrt() * ch.phi.eval(*m)).collect();
        for (i, &x) in xs.iter().enumerate() {
            let c = ch.coeff.eval(x);
            if c == 0.0 {
                continue;
            }
            for k1 in 0..nm {
                for k2 in 0..=k1 {
                    let e = c * v[k1] * v[k2];
                    k[(k1 * nx + i, k2 * nx + i)] += C64::new(e, 0.0);
                    if k1 != k2 {
                        k[(k2 * nx + i, k1 * nx + i)] += C64::new(e, 0.0);
                    }
                }
            }
        }
    }
    let ra = hermiticity(&a);
    let rk = hermiticity(&k);
    if ra > 1e-10 || rk > 1e-10 {
        return Err(Error::Assembly(format!("hermiticity residuals {ra:e} (A), {rk:e} (K)")));
    }
    Ok(DiscreteBoltzmann { x_grid: x_grid.clone(), angles: angles.clone(), kernel: kernel.clone(), a, k, dim })
}

/// f(x - mu t, mu) on the periodic axis (period n * spacing), by phases in the
/// conjugate variable. The shift must stay below half a period.
pub fn evolve_free(f: &StripFunction, t: f64) -> Result<StripFunction> {
    if f.rep != Rep::Position {
        return Err(Error::InvalidInput("free evolution acts on position samples".into()));
    }
    let n = f.axis.n;
    let period = n as f64 * f.axis.spacing;
    let max_mu = f.angles.nodes.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_mu * t.abs() > 0.5 * period {
        return Err(Error::Domain(format!("shift {} exceeds half the period {}", max_mu * t.abs(), period)));
    }
    let mut out = f.clone();
    if t == 0.0 {
        return Ok(out);
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let dk = 2.0 * PI / period;
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
            *v *= C64::from_polar(1.0 / n as f64, -m * dk * mu * t);
        }
        inv.process(row);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitResiduals {
    /// ||(I - P1) A P1||_F
    pub a_invariance: f64,
    /// ||(I - P1) K||_F
    pub k_range: f64,
    /// ||P0 K||_F
    pub p0_k: f64,
    /// ||B - B*||_F, B = restriction of A + iK to H0
    pub h0_hermiticity: f64,
    /// ||[Q1 Q0]* [Q1 Q0] - I||_F
    pub completeness: f64,
    /// scale the residuals are compared against: max(1, ||A||_inf + ||K||_inf)
    pub scale: f64,
}

pub struct SplitResult {
    pub basis_h1: DMatrix<C64>,
    pub basis_h0: DMatrix<C64>,
    pub residuals: SplitResiduals,
    pub iterations: usize,
    pub converged: bool,
    pub certified: bool,
}

impl SplitResult {
    pub fn dim_h1(&self) -> usize {
        self.basis_h1.ncols()
    }

    pub fn dim_h0(&self) -> usize {
        self.basis_h0.ncols()
    }
}

fn inf_norm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.clone().modulus()).sum::<f64>()).fold(0.0, f64::max)
}

/// Remove the components along the columns of q (two passes).
fn project_out<T: ComplexField<RealField = f64>>(q: &DMatrix<T>, w: &mut DMatrix<T>) {
    if q.ncols() == 0 {
        return;
    }
    for _ in 0..2 {
        let c = q.adjoint() * &*w;
        *w -= q * c;
    }
}

/// Orthonormal basis of the columns of w above `tol`, via thin SVD.
fn range_basis<T: ComplexField<RealField = f64>>(w: &DMatrix<T>, tol: f64) -> DMatrix<T> {
    if w.ncols() == 0 {
        return DMatrix::zeros(w.nrows(), 0);
    }
    let svd = w.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let keep: Vec<usize> = svd.singular_values.iter().enumerate().filter(|(_, s)| **s > tol).map(|(i, _)| i).collect();
    DMatrix::from_fn(w.nrows(), keep.len(), |i, j| u[(i, keep[j])].clone())
}

fn append_columns<T: ComplexField<RealField = f64>>(q: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(q.nrows(), q.ncols() + b.ncols());
    out.columns_mut(0, q.ncols()).copy_from(q);
    out.columns_mut(q.ncols(), b.ncols()).copy_from(b);
    out
}

/// Orthonormal basis of the orthogonal complement of the columns of q: columns of
/// I - QQ*, largest first, orthogonalised against the accepted ones.
fn complement<T: ComplexField<RealField = f64>>(q: &DMatrix<T>) -> DMatrix<T> {
    let dim = q.nrows();
    let want = dim - q.ncols();
    let mut r: DMatrix<T> = DMatrix::identity(dim, dim);
    if q.ncols() > 0 {
        r -= q * q.adjoint();
    }
    let mut order: Vec<(usize, f64)> = (0..dim).map(|i| (i, r.column(i).norm())).collect();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut basis: Vec<DVector<T>> = Vec::with_capacity(want);
    for threshold in [0.1, 1e-3] {
        for &(i, _) in &order {
            if basis.len() == want {
                break;
            }
            let mut v: DVector<T> = r.column(i).into_owned();
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dotc(&v);
                    v -= b * c;
                }
            }
            let nv = v.norm();
            if nv > threshold {
                basis.push(v.unscale(nv));
            }
        }
    }
    let mut out = DMatrix::zeros(dim, basis.len());
    for (j, b) in basis.iter().enumerate() {
        out.set_column(j, b);
    }
    // one more sweep against q at round-off level
    project_out(q, &mut out);
    for mut c in out.column_iter_mut() {
        let n = c.norm();
        c.unscale_mut(n);
    }
    out
}

struct Split<T: ComplexField<RealField = f64>> {
    q: DMatrix<T>,
    q0: DMatrix<T>,
    iterations: usize,
    converged: bool,
    residuals: SplitResiduals,
}

/// Core of the splitting for L = A + iK. With `skew` set, `a` holds the real
/// antisymmetric M of A = iM (same invariant subspaces).
fn split_core<T: ComplexField<RealField = f64>>(
    a: &DMatrix<T>,
    k: &DMatrix<T>,
    skew: bool,
    max_iter: usize,
    tol: f64,
) -> Split<T> {
    let dim = a.nrows();
    let scale = 1f64.max(inf_norm(a) + inf_norm(k));
    let cols: Vec<usize> = (0..dim).filter(|&j| k.column(j).iter().any(|v| v.clone().modulus() > 0.0)).collect();
    let start = DMatrix::from_fn(dim, cols.len(), |i, j| k[(i, cols[j])].clone());
    let mut q = range_basis(&start, tol * scale);
    let mut block = q.clone();
    let mut iterations = 0;
    let mut converged = q.ncols() == 0;
    while !converged && iterations < max_iter && q.ncols() < dim {
        iterations += 1;
        let mut w = a * &block;
        project_out(&q, &mut w);
        let new = range_basis(&w, tol * scale);
        if new.ncols() == 0 {
            converged = true;
            break;
        }
        // a second pass keeps the new block orthogonal to q at round-off level
        let mut new = new;
        project_out(&q, &mut new);
        let new = range_basis(&new, 0.5);
        q = append_columns(&q, &new);
        block = new;
    }
    if q.ncols() == dim {
        converged = true;
    }
    let q0 = complement(&q);

    // with [Q1 Q0] unitary, ||(I - P1) X||_F = ||Q0* X||_F; use whichever basis is smaller
    let (a_invariance, k_range) = if q0.ncols() <= q.ncols() {
        ((q0.adjoint() * a * &q).norm(), (q0.adjoint() * k).norm())
    } else {
        let mut r = a * &q;
        project_out(&q, &mut r);
        let mut rk = k.clone();
        project_out(&q, &mut rk);
        (r.norm(), rk.norm())
    };
    let p0_k = (q0.adjoint() * k).norm();
    // B - B* for B = Q0* (A + iK) Q0, split into the A part and 2i Q0* K Q0
    let xa = q0.adjoint() * a * &q0;
    let ha = if skew { (&xa + xa.adjoint()).norm() } else { (&xa - xa.adjoint()).norm() };
    let h0_hermiticity = ha + 2.0 * (q0.adjoint() * k * &q0).norm();
    let gram = |m: &DMatrix<T>| (m.adjoint() * m - DMatrix::identity(m.ncols(), m.ncols())).norm();
    let completeness = gram(&q)
        + gram(&q0)
        + (q.adjoint() * &q0).norm() * 2f64.sqrt()
        + (dim as f64 - (q.ncols() + q0.ncols()) as f64).abs();
    let residuals = SplitResiduals { a_invariance, k_range, p0_k, h0_hermiticity, completeness, scale };
    Split { q, q0, iterations, converged, residuals }
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

/// Smallest A-invariant subspace containing Ran K (block Krylov, full
/// reorthogonalisation) and its complement, with certificates. Runs in real
/// arithmetic when A is i times a real matrix and K is real.
pub fn krylov_split(a: &DMatrix<C64>, k: &DMatrix<C64>, max_iter: usize, tol: f64) -> Result<SplitResult> {
    let dim = a.nrows();
    if a.ncols() != dim || k.nrows() != dim || k.ncols() != dim {
        return Err(Error::InvalidInput("A and K must be square of equal size".into()));
    }
    let real = a.iter().all(|v| v.re == 0.0) && k.iter().all(|v| v.im == 0.0);
    let (q, q0, iterations, converged, residuals) = if real {
        let s = split_core(&a.map(|v| v.im), &k.map(|v| v.re), true, max_iter, tol);
        (to_complex(&s.q), to_complex(&s.q0), s.iterations, s.converged, s.residuals)
    } else {
        let s = split_core(a, k, false, max_iter, tol);
        (s.q, s.q0, s.iterations, s.converged, s.residuals)
    };
    let lim = tol * residuals.scale;
    let certified = converged
        && residuals.a_invariance < lim
        && residuals.k_range < lim
        && residuals.p0_k < lim
        && residuals.h0_hermiticity < lim
        && residuals.completeness < 1e-10f64.max(tol);
    Ok(SplitResult { basis_h1: q, basis_h0: q0, residuals, iterations, converged, certified })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProjectionReport {
    /// ||P1 g|| / ||g||
    pub ratio: f64,
    pub norm: f64,
    pub dim_h0: usize,
    pub dim_h1: usize,
}

pub fn oracle_compare(g: &DVector<C64>, split: &SplitResult) -> Result<ProjectionReport> {
    let dim = split.basis_h1.nrows();
    if g.len() != dim {
        return Err(Error::InvalidInput(format!("vector of length {} on an oracle of dimension {dim}", g.len())));
    }
    let norm = g.norm();
    if norm == 0.0 {
        return Err(Error::Degenerate("projection ratio of the zero vector".into()));
    }
    let p1 = if split.dim_h1() > 0 { (split.basis_h1.adjoint() * g).norm() } else { 0.0 };
    Ok(ProjectionReport { ratio: p1 / norm, norm, dim_h0: split.dim_h0(), dim_h1: split.dim_h1() })
}

/// The oracle grid: n_x points on [lo, lo + period), Gauss angles.
pub fn oracle_grid(lo: f64, period: f64, nx: usize, n_mu: usize) -> Result<(Grid1D, AngleGrid)> {
    let h = period / nx as f64;
    Ok((Grid1D::new(lo, lo + h * (nx - 1) as f64, nx)?, AngleGrid::gauss(n_mu)))
}

/// The gap-construction g sampled on the oracle grid (exact evaluation of Phi* u
/// at the oracle angles).
pub fn sample_bundle(bundle: &ConstructionBundle, oracle: &DiscreteBoltzmann) -> DVector<C64> {
    let field =
        crate::gap::RayField::from_density(&bundle.chi, &bundle.fvals, &bundle.nodes, &oracle.angles, bundle.params.x0);
    oracle.sample(|k, x| field.eval_position(k, x))
}

// ---------------------------------------------------------------------------
// constraint scans

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGrids {
    /// q nodes (nonzero)
    pub q: Vec<f64>,
    /// frequencies per sign of p
    pub ns: usize,
    /// x samples per channel
    pub nx: usize,
    pub x_range: (f64, f64),
    /// period override; default is the hull of the sampled supports per sign of p
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default = "default_budget")]
    pub memory_budget: usize,
}

fn default_budget() -> usize {
    512 << 20
}

impl ScanGrids {
    /// 24 q per sign in [0.25, 3], 120 frequencies per sign, 400 x samples.
    pub fn standard(x_range: (f64, f64)) -> Self {
        let pos: Vec<f64> = (0..24).map(|i| 0.25 + 2.75 * i as f64 / 23.0).collect();
        let mut q: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
        q.extend(pos);
        ScanGrids { q, ns: 120, nx: 400, x_range, window: None, memory_budget: default_budget() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut g = self.clone();
        g.ns = ((self.ns as f64 * factor).round() as usize).max(1);
        g.nx = ((self.nx as f64 * factor).round() as usize).max(1);
        g
    }
}

/// One block row group: angular factor, x samples and their quadrature weight.
#[derive(Clone, Debug)]
pub struct ScanChannel {
    pub phi: AngularFactor,
    pub x: Vec<f64>,
    pub weight: f64,
}

/// nx midpoints of equal-measure cells over supp c within [lo, hi].
pub fn sample_support(c: &Coefficient, lo: f64, hi: f64, nx: usize) -> (Vec<f64>, f64) {
    let pieces = c.support_in(lo, hi);
    let total: f64 = pieces.iter().map(|(a, b)| b - a).sum();
    if total <= 0.0 || nx == 0 {
        return (vec![], 0.0);
    }
    let h = total / nx as f64;
    let mut out = Vec::with_capacity(nx);
    let mut it = pieces.iter();
    let mut cur = it.next().copied();
    let mut offset = 0.0;
    for k in 0..nx {
        let t = (k as f64 + 0.5) * h;
        while let Some((a, b)) = cur {
            if t - offset <= b - a {
                out.push(a + t - offset);
                break;
            }
            offset += b - a;
            cur = it.next().copied();
        }
    }
    (out, total)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintScan {
    pub kernel: CollisionKernel,
    pub grids: ScanGrids,
    /// all singular values, descending (columns beyond the row count contribute zeros)
    pub singular_values: Vec<f64>,
    /// per q: singular values (descending) and column count
    pub blocks: Vec<(Vec<f64>, usize)>,
    pub windows: (Option<f64>, Option<f64>),
    pub rows: usize,
    pub degenerate: bool,
}

impl ConstraintScan {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// dim ker at relative tolerance: #{sigma < tol sigma_max}, counting missing
    /// singular values of wide blocks as zero.
    pub fn nullspace_dim_at(&self, tol: f64) -> usize {
        self.nullspace_dim_abs(tol * self.sigma_max())
    }

    pub fn nullspace_dim_abs(&self, thresh: f64) -> usize {
        self.blocks.iter().map(|(s, cols)| cols - s.iter().filter(|v| **v >= thresh && **v > 0.0).count()).sum()
    }

    /// smallest sigma_min / sigma_max over q blocks (sigma_max global)
    pub fn min_ratio(&self) -> f64 {
        let m = self.sigma_max();
        if m == 0.0 {
            return 0.0;
        }
        self.blocks
            .iter()
            .map(|(s, cols)| if s.len() < *cols { 0.0 } else { s.last().copied().unwrap_or(0.0) / m })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn per_q_nullity(&self, tol: f64) -> Vec<usize> {
        let t = tol * self.sigma_max();
        self.blocks.iter().map(|(s, cols)| cols - s.iter().filter(|v| **v >= t && **v > 0.0).count()).collect()
    }
}

fn active_on(phi: &AngularFactor, sign: f64) -> bool {
    if sign > 0.0 {
        phi.support.1 > 0.0
    } else {
        phi.support.0 < 0.0
    }
}

fn hull(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some(hi - lo)
}

/// Columns for one q: (s, p, column weight) with |p| >= 1, per sign of p.
fn scan_columns(q: f64, ns: usize, windows: (Option<f64>, Option<f64>)) -> Vec<(f64, f64, f64)> {
    let mut cols = vec![];
    for (sign, w) in [(-1.0, windows.1), (1.0, windows.0)] {
        let Some(l) = w else { continue };
        let ds = 2.0 * PI / l;
        let dp = ds / q.abs();
        for j in 1..=ns {
            let s = sign * q.signum() * j as f64 * ds;
            let p = s / q;
            if p.abs() >= 1.0 {
                cols.push((s, p, (dp / p.abs()).sqrt()));
            }
        }
    }
    cols
}

/// Singular values of the per-q blocks for explicit channels. `windows` are the
/// periods for p > 0 and p < 0 (None: no columns of that sign).
pub fn scan_blocks(
    channels: &[ScanChannel],
    q: &[f64],
    ns: usize,
    windows: (Option<f64>, Option<f64>),
    memory_budget: usize,
) -> Result<Vec<(Vec<f64>, usize)>> {
    let rows: usize = channels.iter().map(|c| c.x.len()).sum();
    let mut out = Vec::with_capacity(q.len());
    for &qv in q {
        if qv == 0.0 {
            return Err(Error::Domain("q = 0 in scan grid".into()));
        }
        let cols = scan_columns(qv, ns, windows);
        let bytes = rows * cols.len() * std::mem::size_of::<C64>();
        if bytes > memory_budget {
            let suggest = ((bytes as f64 / memory_budget as f64).sqrt().ceil() as usize).max(2);
            return Err(Error::Memory { rows, cols: cols.len(), suggest });
        }
        if rows == 0 || cols.is_empty() {
            out.push((vec![0.0; cols.len().min(rows)], cols.len()));
            continue;
        }
        let mut t = DMatrix::<C64>::zeros(rows, cols.len());
        let mut r0 = 0;
        for ch in channels {
            let rw = ch.weight.sqrt();
            for (j, &(s, p, cw)) in cols.iter().enumerate() {
                let amp = ch.phi.eval(1.0 / p) * cw * rw;
                if amp == 0.0 {
                    continue;
                }
                for (i, &x) in ch.x.iter().enumerate() {
                    t[(r0 + i, j)] = C64::from_polar(amp, x * s);
                }
            }
            r0 += ch.x.len();
        }
        let mut s: Vec<f64> = t.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        out.push((s, cols.len()));
    }
    Ok(out)
}

/// Singular values of the constraint map restricted to unit-weighted-norm F,
/// per q block, on the sector |p| >= 1.
pub fn constraint_scan(kernel: &CollisionKernel, grids: &ScanGrids) -> Result<ConstraintScan> {
    let (lo, hi) = grids.x_range;
    if !(hi > lo) {
        return Err(Error::InvalidInput("empty x range".into()));
    }
    let mut channels = vec![];
    for ch in &kernel.channels {
        let (x, measure) = sample_support(&ch.coeff, lo, hi, grids.nx);
        channels.push(ScanChannel {
            phi: ch.phi.clone(),
            weight: if x.is_empty() { 0.0 } else { measure / x.len() as f64 },
            x,
        });
    }
    let degenerate = channels.iter().all(|c| c.x.is_empty());
    let window_for = |sign: f64| -> Option<f64> {
        let active: Vec<&ScanChannel> = channels.iter().filter(|c| active_on(&c.phi, sign)).collect();
        if active.is_empty() {
            return None;
        }
        if let Some(w) = grids.window {
            return Some(w);
        }
        let xs: Vec<f64> = kernel
            .channels
            .iter()
            .filter(|c| active_on(&c.phi, sign))
            .flat_map(|c| c.coeff.support_in(lo, hi))
            .flat_map(|(a, b)| [a, b])
            .collect();
        Some(hull(&xs).unwrap_or(hi - lo))
    };
    let windows = (window_for(1.0), window_for(-1.0));
    let blocks = scan_blocks(&channels, &grids.q, grids.ns, windows, grids.memory_budget)?;
    let mut all: Vec<f64> = vec![];
    for (s, cols) in &blocks {
        all.extend(s);
        all.extend(std::iter::repeat_n(0.0, cols - s.len()));
    }
    all.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let rows = channels.iter().map(|c| c.x.len()).sum();
    Ok(ConstraintScan {
        kernel: kernel.clone(),
        grids: grids.clone(),
        singular_values: all,
        blocks,
        windows,
        rows,
        degenerate,
    })
}

/// Scan for angular factors supported in [0, 1]: only p >= 1 carries columns.
pub fn half_strip_scan(kernel: &CollisionKernel, grids: &ScanGrids) -> Result<ConstraintScan> {
    if kernel.channels.iter().any(|c| c.phi.support.0 < 0.0) {
        return Err(Error::InvalidInput("half-strip scan needs angular factors supported in [0, 1]".into()));
    }
    constraint_scan(kernel, grids)
}

/// ||T F|| / ||F|| per q for the gap-construction density F(q, p) = chi(q) f(pq),
/// evaluated with the construction's own Gauss nodes in s = pq; chi cancels.
pub fn certify_gap_nullvector(
    bundle: &ConstructionBundle,
    kernel: &CollisionKernel,
    grids: &ScanGrids,
) -> Result<Vec<f64>> {
    let (lo, hi) = grids.x_range;
    let nodes = &bundle.nodes;
    let x0 = bundle.params.x0;
    let den: f64 = bundle.fvals.iter().zip(&nodes.s).zip(&nodes.w).map(|((v, s), w)| w * s.abs() * v.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::Degenerate("zero density".into()));
    }
    let mut out = vec![];
    for &q in &grids.q {
        let mut num = 0.0;
        for ch in &kernel.channels {
            let (xs, measure) = sample_support(&ch.coeff, lo, hi, grids.nx);
            if xs.is_empty() {
                continue;
            }
            let c: Vec<C64> = bundle
                .fvals
                .iter()
                .zip(&nodes.s)
                .zip(&nodes.w)
                .map(|((v, &s), w)| v * C64::from_polar(w * ch.phi.eval(q / s), -x0 * s))
                .collect();
            let wx = measure / xs.len() as f64;
            for &x in &xs {
                num += wx * crate::transforms::nonuniform_sum(&c, &nodes.s, x).norm_sqr();
            }
        }
        out.push((num / den).sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_matrix_exact_on_modes() {
        let n = 16;
        let l = 2.0 * PI;
        let d = spectral_derivative(n, l);
        let x: Vec<f64> = (0..n).map(|i| l * i as f64 / n as f64).collect();
        for m in 1..n / 2 {
            let f = DVector::from_iterator(n, x.iter().map(|v| (m as f64 * v).sin()));
            let df = &d * f;
            for (i, v) in x.iter().enumerate() {
                assert!((df[i] - m as f64 * (m as f64 * v).cos()).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn sample_support_gap_pieces() {
        let c = Coefficient::Gap(
            crate::model::GapLatticeCoefficient::new(0.0, 1.0, 0.25, crate::model::Envelope::Constant { value: 1.0 })
                .unwrap(),
        );
        let (x, m) = sample_support(&c, -4.0, 4.0, 100);
        assert_eq!(x.len(), 100);
        assert!((m - 4.0).abs() < 1e-12);
        assert!(x.iter().all(|v| !c.eval(*v).eq(&0.0)));
    }

    #[test]
    fn columns_respect_sector() {
        for q in [-2.0, -0.3, 0.7, 3.0] {
            for (s, p, _) in scan_columns(q, 50, (Some(1.0), Some(2.0))) {
                assert!(p.abs() >= 1.0);
                assert!((s / q - p).abs() < 1e-12);
            }
            assert!(scan_columns(q, 50, (Some(1.0), None)).iter().all(|c| c.1 >= 1.0));
        }
    }
}
