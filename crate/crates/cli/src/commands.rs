use crate::report::{Artifacts, Checks};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfadj::gap::{default_hats, default_s_max, run_gap_pipeline, GapConfig, LatticeParams, Window};
use selfadj::hardy::{run_hardy, HardyParams, HardyQuadrature};
use selfadj::oplab::{
    assemble_discrete, constraint_scan, half_strip_scan, krylov_split, oracle_compare, oracle_grid, sample_bundle,
    ScanGrids,
};
use selfadj::sphere::{build_azimuthal_null, verify_azimuthal_identity, Kernel3, Profiles, SphereFactor, SphereGrid};
use selfadj::{AngularFactor, Channel, Coefficient, CollisionKernel, Envelope, GapLatticeCoefficient, C64};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

pub struct Failure {
    pub code: i32,
    pub msg: String,
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure { code: 2, msg: msg.into() }
    }
}

impl From<selfadj::Error> for Failure {
    fn from(e: selfadj::Error) -> Self {
        use selfadj::Error::*;
        let code = match e {
            Parameter(_) | InvalidInput(_) | Memory { .. } => 2,
            Degenerate(_) => 3,
            _ => 1,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 1, msg: format!("i/o: {e}") }
    }
}

pub struct Ctx {
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid_scale: f64,
    pub tol_scale: f64,
}

impl Ctx {
    fn rng(&self, what: &str) -> Result<ChaCha8Rng, Failure> {
        match self.seed {
            Some(s) => Ok(ChaCha8Rng::seed_from_u64(s)),
            None => Err(Failure::config(format!("--seed is required for {what}"))),
        }
    }

    fn scale(&self, n: usize) -> usize {
        ((n as f64 * self.grid_scale).round() as usize).max(1)
    }
}

pub struct Outcome {
    pub metrics: Value,
    pub checks: Checks,
    pub degenerate: bool,
}

/// Reads a JSON config (defaults when absent); unknown keys are rejected.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    let Some(p) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(p).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", p.display())))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable config")
}

// ---------------------------------------------------------------------------
// construct-gap

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapRun {
    pub a: f64,
    pub eps: f64,
    pub x0: f64,
    pub b: f64,
    pub nu: f64,
    pub n: usize,
    pub s_max: Option<f64>,
    pub per_interval: usize,
    pub angle_per_panel: usize,
    pub ts: Option<Vec<f64>>,
    /// x range, sample count and number of angles of the g dump
    pub plot_x: (f64, f64),
    pub plot_nx: usize,
    pub plot_angles: usize,
}

impl Default for GapRun {
    fn default() -> Self {
        let p = LatticeParams::canonical(1);
        GapRun {
            a: p.a,
            eps: p.eps,
            x0: p.x0,
            b: p.b,
            nu: p.nu,
            n: p.n,
            s_max: None,
            per_interval: 32,
            angle_per_panel: 10,
            ts: None,
            plot_x: (-4.0, 4.0),
            plot_nx: 161,
            plot_angles: 8,
        }
    }
}

impl GapRun {
    pub fn params(&self) -> LatticeParams {
        LatticeParams { a: self.a, eps: self.eps, x0: self.x0, b: self.b, nu: self.nu, n: self.n }
    }

    pub fn gap_config(&self, grid_scale: f64) -> Result<GapConfig, Failure> {
        let params = self.params();
        params.validate()?;
        let mut c = GapConfig::canonical(self.n);
        let scale = |n: usize| ((n as f64 * grid_scale).round() as usize).max(2);
        c.s_max = self.s_max.unwrap_or(default_s_max(self.n) / self.a);
        c.per_interval = scale(self.per_interval);
        c.angle_per_panel = scale(self.angle_per_panel);
        c.window = Window::smooth(self.b);
        c.hats = default_hats(&params);
        if let Some(ts) = &self.ts {
            c.ts = ts.clone();
        }
        c.params = params;
        Ok(c)
    }

    fn kernel(&self) -> Result<CollisionKernel, Failure> {
        let c = GapLatticeCoefficient::new(self.x0, self.a, self.eps, Envelope::Constant { value: 1.0 })?;
        Ok(CollisionKernel::polynomial(Coefficient::Gap(c), self.n))
    }
}

pub fn construct_gap(ctx: &Ctx, run: &GapRun, out: &mut Artifacts) -> Result<Outcome, Failure> {
    let cfg = run.gap_config(ctx.grid_scale)?;
    let (bundle, r) = run_gap_pipeline(&cfg)?;
    let leak = r.condition_ii.leakage.iter().chain(&r.condition_ii_oracle.leakage).cloned().fold(0.0, f64::max);
    let mut checks = Checks::new(ctx.tol_scale);
    checks.equal("condition_i_audit", r.condition_i, 0.0);
    checks.equal("density_inner_audit", r.density_inner_audit, 0.0);
    checks.below("condition_ii_leakage", leak, 1e-6);
    checks.below("membership_residual", r.membership.max_residual, 1e-5);
    checks.above("norm_g", r.norm_g, 1e-6);

    let rows = bundle.nodes.s.iter().zip(&bundle.nodes.w).zip(&bundle.fvals).map(|((s, w), v)| [*s, *w, v.re, v.im]);
    out.csv("f.csv", &["s", "weight", "re", "im"], rows)?;
    let d = &bundle.density;
    let (qs, ps) = (d.q_grid.nodes(), d.p_grid.nodes());
    let mut fr = vec![];
    for (i, q) in qs.iter().enumerate() {
        for (j, p) in ps.iter().enumerate().step_by(4) {
            let v = d.at(i, j);
            fr.push([*q, *p, v.re, v.im]);
        }
    }
    out.csv("F.csv", &["q", "p", "re", "im"], fr)?;
    let field = &bundle.field;
    let na = field.angles.len();
    let picks: Vec<usize> = if run.plot_angles == 0 {
        vec![]
    } else {
        let m = run.plot_angles.min(na);
        (0..m).map(|i| if m == 1 { 0 } else { i * (na - 1) / (m - 1) }).collect()
    };
    let nx = run.plot_nx.max(2);
    let mut gr = vec![];
    for &k in &picks {
        let mu = field.angles.nodes[k];
        for i in 0..nx {
            let x = run.plot_x.0 + (run.plot_x.1 - run.plot_x.0) * i as f64 / (nx - 1) as f64;
            let v = field.eval_position(k, x);
            gr.push([x, mu, v.re, v.im]);
        }
    }
    out.csv("g.csv", &["x", "mu", "re", "im"], gr)?;
    out.json(
        "manifest.json",
        &json!({
            "schema_version": crate::report::SCHEMA_VERSION,
            "kind": "gap-bundle",
            "config": run,
            "grid_scale": ctx.grid_scale,
            "norm_f": r.norm_f,
            "norm_g": r.norm_g,
            "membership_residual": r.membership.max_residual,
            "condition_ii_leakage": leak,
            "s_nodes": r.s_nodes,
            "angle_nodes": r.angle_nodes,
        }),
    )?;
    out.plot_stub(&["f.csv", "g.csv"])?;
    Ok(Outcome { metrics: to_value(&r), checks, degenerate: false })
}

// ---------------------------------------------------------------------------
// scan

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Gap,
    Halfaxis,
    HalfStrip,
    TwoChannel,
}

impl Preset {
    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(Value::String(s.to_string())).ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expect {
    Injective,
    Nullspace,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanRun {
    pub preset: Option<Preset>,
    pub kernel: Option<CollisionKernel>,
    /// single coefficient with phi = 1
    pub coefficient: Option<Coefficient>,
    pub x_range: Option<(f64, f64)>,
    pub grids: Option<ScanGrids>,
    pub tol: f64,
    pub ratio_min: f64,
    pub min_nullity: usize,
    pub half_strip: bool,
    pub expect: Option<Expect>,
}

impl Default for ScanRun {
    fn default() -> Self {
        ScanRun {
            preset: None,
            kernel: None,
            coefficient: None,
            x_range: None,
            grids: None,
            tol: 1e-6,
            ratio_min: 1e-3,
            min_nullity: 3,
            half_strip: false,
            expect: None,
        }
    }
}

fn half_bump(center: f64, half_width: f64, support: (f64, f64)) -> Channel {
    Channel { coeff: Coefficient::Bump { center, half_width }, phi: AngularFactor { coeffs: vec![1.0], support } }
}

struct Resolved {
    kernel: CollisionKernel,
    x_range: (f64, f64),
    expect: Option<Expect>,
    half_strip: bool,
}

impl ScanRun {
    /// `--coefficient` takes a preset name or a JSON file with a kernel or a coefficient.
    pub fn apply_flag(&mut self, flag: &str) -> Result<(), Failure> {
        self.preset = None;
        self.kernel = None;
        self.coefficient = None;
        if let Some(p) = Preset::parse(flag) {
            self.preset = Some(p);
            return Ok(());
        }
        let text = std::fs::read_to_string(flag).map_err(|e| Failure::config(format!("{flag}: {e}")))?;
        if let Ok(k) = serde_json::from_str::<CollisionKernel>(&text) {
            self.kernel = Some(k);
        } else {
            let c = serde_json::from_str::<Coefficient>(&text).map_err(|e| Failure::config(format!("{flag}: {e}")))?;
            self.coefficient = Some(c);
        }
        Ok(())
    }

    fn resolve(&self) -> Result<Resolved, Failure> {
        let given = [self.preset.is_some(), self.kernel.is_some(), self.coefficient.is_some()];
        if given.iter().filter(|g| **g).count() > 1 {
            return Err(Failure::config("give one of preset, kernel, coefficient"));
        }
        let (kernel, range, expect, strip) = match (self.preset, &self.kernel, &self.coefficient) {
            (_, Some(k), _) => (k.clone(), (-4.0, 4.0), None, self.half_strip),
            (_, _, Some(c)) => (CollisionKernel::polynomial(c.clone(), 1), (-4.0, 4.0), None, self.half_strip),
            (Some(Preset::Gap), ..) => (GapRun::default().kernel()?, (-4.0, 4.0), Some(Expect::Nullspace), false),
            (Some(Preset::HalfStrip), ..) => (
                CollisionKernel { channels: vec![half_bump(0.4, 0.2, (0.0, 1.0))] },
                (-1.0, 1.0),
                Some(Expect::Injective),
                true,
            ),
            (Some(Preset::TwoChannel), ..) => (
                CollisionKernel { channels: vec![half_bump(0.4, 0.2, (0.0, 1.0)), half_bump(-1.0, 0.3, (-1.0, 0.0))] },
                (-2.0, 2.0),
                Some(Expect::Injective),
                false,
            ),
            (Some(Preset::Halfaxis), ..) | (None, None, None) => (
                CollisionKernel::polynomial(Coefficient::HalfAxis { value: 1.0 }, 1),
                (0.0, 4.0),
                Some(Expect::Injective),
                false,
            ),
        };
        Ok(Resolved {
            kernel,
            x_range: self.x_range.unwrap_or(range),
            expect: self.expect.or(expect),
            half_strip: strip || self.half_strip,
        })
    }
}

pub fn scan(ctx: &Ctx, run: &ScanRun, out: &mut Artifacts) -> Result<Outcome, Failure> {
    let Resolved { kernel, x_range, expect, half_strip: strip } = run.resolve()?;
    if run.grids.is_some() && run.x_range.is_some() {
        return Err(Failure::config("x_range belongs inside grids when grids is given"));
    }
    kernel.validate()?;
    let grids = run.grids.clone().unwrap_or_else(|| ScanGrids::standard(x_range)).scaled(ctx.grid_scale);
    let s = if strip { half_strip_scan(&kernel, &grids)? } else { constraint_scan(&kernel, &grids)? };
    let nullity = s.nullspace_dim_at(run.tol);
    let mut checks = Checks::new(ctx.tol_scale);
    match expect {
        Some(Expect::Injective) => {
            checks.equal("nullspace_dim", nullity as f64, 0.0);
            checks.above("min_sigma_ratio", s.min_ratio(), run.ratio_min);
        }
        Some(Expect::Nullspace) => checks.at_least("nullspace_dim", nullity as f64, run.min_nullity as f64),
        None => {}
    }
    let smax = s.sigma_max();
    let mut sig = vec![];
    let mut blocks = vec![];
    for (q, (vals, cols)) in grids.q.iter().zip(&s.blocks) {
        for (i, v) in vals.iter().enumerate() {
            sig.push([*q, i as f64, *v, if smax > 0.0 { v / smax } else { 0.0 }]);
        }
        let rank = vals.iter().filter(|v| **v >= run.tol * smax && **v > 0.0).count();
        blocks.push([*q, *cols as f64, rank as f64, (cols - rank) as f64]);
    }
    out.csv("sigma.csv", &["q", "index", "sigma", "sigma_rel"], sig)?;
    out.csv("blocks.csv", &["q", "cols", "rank", "nullity"], blocks)?;
    out.plot_stub(&["blocks.csv"])?;
    let metrics = json!({
        "sigma": s.singular_values,
        "sigma_max": smax,
        "nullspace_dim": nullity,
        "tol": run.tol,
        "min_sigma_ratio": s.min_ratio(),
        "per_q_nullity": s.per_q_nullity(run.tol),
        "rows": s.rows,
        "windows": s.windows,
        "grids": grids,
        "kernel": kernel,
        "half_strip": strip,
        "expect": expect,
        "degenerate": s.degenerate,
    });
    Ok(Outcome { metrics, checks, degenerate: s.degenerate })
}

// ---------------------------------------------------------------------------
// oracle

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Engineered {
    pub n1: usize,
    pub n2: usize,
}

impl Default for Engineered {
    fn default() -> Self {
        Engineered { n1: 9, n2: 11 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Cyclic {
    pub m: usize,
}

impl Default for Cyclic {
    fn default() -> Self {
        Cyclic { m: 12 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Torus {
    pub lo: f64,
    pub period: f64,
    pub nx: usize,
    pub n_mu: usize,
    pub random: usize,
    pub ratio_max: f64,
    pub random_min: f64,
}

impl Default for Torus {
    fn default() -> Self {
        Torus { lo: -4.0, period: 8.0, nx: 64, n_mu: 16, random: 10, ratio_max: 0.05, random_min: 0.9 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleRun {
    pub engineered: Option<Engineered>,
    pub cyclic: Option<Cyclic>,
    pub torus: Option<Torus>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OracleRun {
    fn default() -> Self {
        OracleRun {
            engineered: Some(Engineered::default()),
            cyclic: Some(Cyclic::default()),
            torus: Some(Torus::default()),
            tol: 1e-10,
            max_iter: 400,
        }
    }
}

/// Gap parameters and grid scale from a construct-gap manifest.
pub fn read_manifest(path: &Path) -> Result<(GapRun, f64), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    if v["kind"] != "gap-bundle" {
        return Err(Failure::config(format!("{} is not a gap-bundle manifest", path.display())));
    }
    let run: GapRun =
        serde_json::from_value(v["config"].clone()).map_err(|e| Failure::config(format!("manifest config: {e}")))?;
    let scale = v["grid_scale"].as_f64().unwrap_or(1.0);
    Ok((run, scale))
}

fn split_checks(checks: &mut Checks, tag: &str, s: &selfadj::oplab::SplitResult, tol: f64) {
    let sc = s.residuals.scale;
    checks.equal(&format!("{tag}_certified"), s.certified as u8 as f64, 1.0);
    checks.below(&format!("{tag}_a_invariance"), s.residuals.a_invariance / sc, tol);
    checks.below(&format!("{tag}_k_range"), s.residuals.k_range / sc, tol);
    checks.below(&format!("{tag}_h0_hermiticity"), s.residuals.h0_hermiticity / sc, tol);
}

pub fn oracle(
    ctx: &Ctx,
    run: &OracleRun,
    bundle: Option<(GapRun, f64)>,
    out: &mut Artifacts,
) -> Result<Outcome, Failure> {
    let needs_rng = run.engineered.is_some() || run.torus.as_ref().is_some_and(|t| t.random > 0);
    let mut rng = if needs_rng { Some(ctx.rng("random oracle inputs")?) } else { None };
    let mut checks = Checks::new(ctx.tol_scale);
    let mut metrics = serde_json::Map::new();
    if let Some(e) = &run.engineered {
        let rng = rng.as_mut().expect("seeded");
        let n = e.n1 + e.n2;
        let mut a = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                if (i < e.n1) == (j < e.n1) {
                    let v = C64::new(rng.gen_range(-1.0..1.0), if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) });
                    a[(i, j)] = v;
                    a[(j, i)] = v.conj();
                }
            }
        }
        let v =
            DVector::from_fn(
                n,
                |i, _| if i < e.n1 { C64::new(rng.gen_range(-1.0..1.0), 0.0) } else { C64::new(0.0, 0.0) },
            );
        let s = krylov_split(&a, &(&v * v.adjoint()), run.max_iter, run.tol)?;
        checks.equal("engineered_dim_h1", s.dim_h1() as f64, e.n1 as f64);
        checks.equal("engineered_dim_h0", s.dim_h0() as f64, e.n2 as f64);
        split_checks(&mut checks, "engineered", &s, run.tol);
        metrics.insert(
            "engineered".into(),
            json!({"dim_h1": s.dim_h1(), "dim_h0": s.dim_h0(), "iterations": s.iterations, "residuals": s.residuals}),
        );
    }
    if let Some(c) = &run.cyclic {
        let m = c.m;
        let a = DMatrix::from_fn(m, m, |i, j| C64::new(if i == j { 1.0 + i as f64 } else { 0.0 }, 0.0));
        let v = DVector::from_element(m, C64::new(1.0 / (m as f64).sqrt(), 0.0));
        let s = krylov_split(&a, &(&v * v.adjoint()), run.max_iter, run.tol)?;
        checks.equal("cyclic_dim_h0", s.dim_h0() as f64, 0.0);
        split_checks(&mut checks, "cyclic", &s, run.tol);
        metrics.insert("cyclic".into(), json!({"dim_h1": s.dim_h1(), "dim_h0": s.dim_h0(), "residuals": s.residuals}));
    }
    if let Some(t) = &run.torus {
        let (gap, gscale) = bundle.unwrap_or((GapRun::default(), 1.0));
        let (b, _) = run_gap_pipeline(&gap.gap_config(gscale)?)?;
        let nx = 2 * ctx.scale(t.nx).div_ceil(2);
        let (xg, ang) = oracle_grid(t.lo, t.period, nx, ctx.scale(t.n_mu))?;
        let op = assemble_discrete(&gap.kernel()?, &xg, &ang)?;
        let split = krylov_split(&op.a, &op.k, run.max_iter, run.tol)?;
        let g = oracle_compare(&sample_bundle(&b, &op), &split)?;
        let mut rows = vec![[0.0, g.ratio, g.norm]];
        let mut rmin = f64::INFINITY;
        for i in 0..t.random {
            let rng = rng.as_mut().expect("seeded");
            let v = DVector::from_fn(op.dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let r = oracle_compare(&v, &split)?;
            rmin = rmin.min(r.ratio);
            rows.push([(i + 1) as f64, r.ratio, r.norm]);
        }
        split_checks(&mut checks, "torus", &split, run.tol);
        checks.below("torus_gap_projection_ratio", g.ratio, t.ratio_max);
        if t.random > 0 {
            checks.at_least("torus_random_min_ratio", rmin, t.random_min);
        }
        out.csv("projections.csv", &["vector", "ratio", "norm"], rows)?;
        metrics.insert(
            "torus".into(),
            json!({
                "nx": nx, "n_mu": ang.len(), "dim": op.dim,
                "dim_h1": split.dim_h1(), "dim_h0": split.dim_h0(),
                "iterations": split.iterations, "residuals": split.residuals,
                "gap_projection": g, "random_min_ratio": if t.random > 0 { Some(rmin) } else { None },
            }),
        );
        out.plot_stub(&["projections.csv"])?;
    }
    Ok(Outcome { metrics: Value::Object(metrics), checks, degenerate: false })
}

// ---------------------------------------------------------------------------
// hardy

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardyRun {
    pub alpha: f64,
    pub rho_a: f64,
    pub rho_b: f64,
    pub n: usize,
    pub eta_ladder: Vec<f64>,
    pub x_max: f64,
    /// |x| range of the f_alpha dump
    pub plot_x_max: f64,
}

impl Default for HardyRun {
    fn default() -> Self {
        let p = HardyParams::canonical();
        HardyRun {
            alpha: p.alpha,
            rho_a: p.rho_a,
            rho_b: p.rho_b,
            n: p.n,
            eta_ladder: p.eta_ladder,
            x_max: 2e3,
            plot_x_max: 50.0,
        }
    }
}

pub fn hardy(ctx: &Ctx, run: &HardyRun, out: &mut Artifacts) -> Result<Outcome, Failure> {
    let p = HardyParams {
        alpha: run.alpha,
        rho_a: run.rho_a,
        rho_b: run.rho_b,
        n: run.n,
        eta_ladder: run.eta_ladder.clone(),
    };
    p.validate()?;
    let r = run_hardy(&p, run.x_max)?;
    let mut checks = Checks::new(ctx.tol_scale);
    checks.below("property1_pre_clamp", r.pre_clamp_max, 1e-8);
    checks.below("property2_norm_refinement", r.norm_rel_change, 1e-4);
    checks.below("property3_leakage", r.leakage.leakage, 1e-3);
    checks.at_least("property3_leakage_over_bound", r.leakage.ratio, 0.01);
    checks.at_most("property3_leakage_over_bound_max", r.leakage.ratio, 10.0);
    let drift = |(c, f): (f64, f64)| (c - f).abs() / f;
    checks.at_most("upper_sup_refinement", drift(r.boundedness_upper), 0.05);
    checks.at_most("lower_sup_refinement", drift(r.boundedness_lower), 0.05);
    let q = HardyQuadrature::canonical(&p, run.x_max)?;
    let f = q.f_alpha(&p)?;
    let rows =
        q.x.iter()
            .zip(&q.w)
            .zip(&f)
            .filter(|((x, _), _)| x.abs() <= run.plot_x_max)
            .map(|((x, w), v)| [*x, *w, v.re, v.im]);
    out.csv("f_alpha.csv", &["x", "weight", "re", "im"], rows)?;
    out.plot_stub(&["f_alpha.csv"])?;
    Ok(Outcome { metrics: to_value(&r), checks, degenerate: false })
}

// ---------------------------------------------------------------------------
// 3d

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SphereRun {
    pub factors: Vec<SphereFactor>,
    pub m: i32,
    pub n_theta: usize,
    pub m_psi: usize,
    pub points: usize,
    pub p_radius: f64,
    pub times: usize,
    pub t_max: f64,
    pub radial_width: f64,
    pub polar_width: f64,
    /// default 1e-10 for constant factors, 1e-8 otherwise
    pub tol: Option<f64>,
}

impl Default for SphereRun {
    fn default() -> Self {
        SphereRun {
            factors: Kernel3::isotropic().factors,
            m: 1,
            n_theta: 64,
            m_psi: 32,
            points: 20,
            p_radius: 1.7,
            times: 5,
            t_max: 5.0,
            radial_width: 1.0,
            polar_width: 1.0,
            tol: None,
        }
    }
}

pub fn sphere(ctx: &Ctx, run: &SphereRun, out: &mut Artifacts) -> Result<Outcome, Failure> {
    let mut rng = ctx.rng("random momenta and times")?;
    if run.factors.is_empty() {
        return Err(Failure::config("factors must not be empty"));
    }
    let kernel = Kernel3 { factors: run.factors.clone() };
    let grid = SphereGrid::new(ctx.scale(run.n_theta), ctx.scale(run.m_psi).max(16).next_power_of_two())?;
    let r = run.p_radius;
    let ps: Vec<[f64; 3]> =
        (0..run.points).map(|_| [rng.gen_range(-r..=r), rng.gen_range(-r..=r), rng.gen_range(-r..=r)]).collect();
    let ts: Vec<f64> = (0..run.times).map(|_| rng.gen_range(-run.t_max..=run.t_max)).collect();
    let prof = Profiles { radial_width: run.radial_width, polar_width: run.polar_width };
    let u = build_azimuthal_null(&kernel, &ps, run.m, &grid, &prof)?;
    let sums = u.azimuthal_sums(&kernel);
    let res = verify_azimuthal_identity(&u, &kernel, &ts)?;
    let tol = run.tol.unwrap_or(if kernel.is_isotropic() { 1e-10 } else { 1e-8 });
    let mut checks = Checks::new(ctx.tol_scale);
    checks.below("azimuthal_sums", sums, 1e-12);
    checks.below("identity_residual", res.max_residual, tol);
    let rows = res.table.iter().map(|&(k, t, l, v)| [k as f64, ps[k][0], ps[k][1], ps[k][2], t, l as f64, v]);
    out.csv("residuals.csv", &["point", "px", "py", "pz", "t", "channel", "residual"], rows)?;
    out.plot_stub(&["residuals.csv"])?;
    let metrics = json!({
        "n_theta": grid.cos_theta.len(),
        "m_psi": grid.m_psi,
        "points": ps,
        "times": ts,
        "azimuthal_sums": sums,
        "max_residual": res.max_residual,
        "tol": tol,
    });
    Ok(Outcome { metrics, checks, degenerate: false })
}
