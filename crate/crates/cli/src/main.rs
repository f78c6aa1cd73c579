mod commands;
mod report;

use clap::{Parser, Subcommand};
use commands::{Ctx, Failure, GapRun, HardyRun, OracleRun, Outcome, ScanRun, SphereRun};
use report::{Artifacts, CommandEcho, Report};
use serde_json::Value;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Builds selfadjoint-subspace vectors, runs scans and oracles, and writes JSON reports
/// plus CSVs. Exit codes: 0 all checks pass, 1 a check failed, 2 invalid config,
/// 3 degenerate input.
#[derive(Parser, Debug)]
#[command(name = "selfadj", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// JSON parameter file; omitted keys take their defaults, unknown keys are rejected
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// seed for randomized inputs (required by oracle and 3d)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// multiplies node counts
    #[arg(long, global = true, default_value_t = 1.0)]
    grid_scale: f64,
    /// multiplies residual tolerances (upper bounds only)
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// gap-lattice construction and its membership checks
    ConstructGap,
    /// singular-value scan of the constraint map
    Scan {
        /// gap, halfaxis, half-strip, two-channel, or a JSON file holding a kernel or a coefficient
        #[arg(long)]
        coefficient: Option<String>,
    },
    /// invariant-subspace split of finite matrices and the periodic discretization
    Oracle {
        /// manifest.json written by construct-gap
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// boundary-value family off two cuts
    Hardy,
    /// three-dimensional azimuthal construction
    #[command(name = "3d")]
    Sphere,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::ConstructGap => "construct-gap",
            Cmd::Scan { .. } => "scan",
            Cmd::Oracle { .. } => "oracle",
            Cmd::Hardy => "hardy",
            Cmd::Sphere => "3d",
        }
    }
}

fn run(cli: &Cli, ctx: &Ctx, out: &mut Artifacts, echo: &mut Value) -> Result<Outcome, Failure> {
    if !(cli.grid_scale.is_finite() && cli.grid_scale > 0.0) || !(cli.tol_scale.is_finite() && cli.tol_scale > 0.0) {
        return Err(Failure::config("--grid-scale and --tol-scale must be positive"));
    }
    let path = cli.config.as_deref();
    match &cli.cmd {
        Cmd::ConstructGap => {
            let r: GapRun = commands::load(path)?;
            *echo = serde_json::to_value(&r).unwrap_or(Value::Null);
            commands::construct_gap(ctx, &r, out)
        }
        Cmd::Scan { coefficient } => {
            let mut r: ScanRun = commands::load(path)?;
            if let Some(c) = coefficient {
                r.apply_flag(c)?;
            }
            *echo = serde_json::to_value(&r).unwrap_or(Value::Null);
            commands::scan(ctx, &r, out)
        }
        Cmd::Oracle { bundle } => {
            let r: OracleRun = commands::load(path)?;
            let b = bundle.as_deref().map(commands::read_manifest).transpose()?;
            *echo = serde_json::json!({ "oracle": r, "bundle": b.as_ref().map(|(g, s)| serde_json::json!({ "gap": g, "grid_scale": s })) });
            commands::oracle(ctx, &r, b, out)
        }
        Cmd::Hardy => {
            let r: HardyRun = commands::load(path)?;
            *echo = serde_json::to_value(&r).unwrap_or(Value::Null);
            commands::hardy(ctx, &r, out)
        }
        Cmd::Sphere => {
            let r: SphereRun = commands::load(path)?;
            *echo = serde_json::to_value(&r).unwrap_or(Value::Null);
            commands::sphere(ctx, &r, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut out = match Artifacts::new(&cli.out) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("selfadj: cannot create {}: {e}", cli.out.display());
            return ExitCode::from(2);
        }
    };
    let ctx =
        Ctx { config_path: cli.config.clone(), seed: cli.seed, grid_scale: cli.grid_scale, tol_scale: cli.tol_scale };
    let mut config = Value::Null;
    let result = run(&cli, &ctx, &mut out, &mut config);
    let command = CommandEcho {
        name: cli.cmd.name().into(),
        config_path: ctx.config_path.as_ref().map(|p| p.display().to_string()),
        config,
        seed: cli.seed,
        grid_scale: cli.grid_scale,
        tol_scale: cli.tol_scale,
    };
    let config_hash = report::config_hash(&command);
    let (metrics, checks, degenerate, error, code) = match result {
        Ok(o) => {
            let code = if o.degenerate {
                3
            } else if o.checks.all_pass() {
                0
            } else {
                1
            };
            (o.metrics, o.checks.items, o.degenerate, None, code)
        }
        Err(f) => (Value::Null, vec![], f.code == 3, Some(f.msg), f.code),
    };
    for c in checks.iter().filter(|c| !c.pass) {
        eprintln!("selfadj: check {} failed: {:e} vs {:?} {:e}", c.name, c.value, c.relation, c.tol);
    }
    if let Some(e) = &error {
        eprintln!("selfadj: {e}");
    }
    let mut artifacts = out.written.clone();
    artifacts.push("report.json".into());
    let rep = Report {
        schema_version: report::SCHEMA_VERSION,
        command,
        config_hash,
        metrics,
        pass: code == 0,
        checks,
        degenerate,
        error,
        exit_code: code,
        artifacts,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    if let Err(e) = out.json("report.json", &rep) {
        eprintln!("selfadj: cannot write report: {e}");
        return ExitCode::from(1);
    }
    println!(
        "{}: {} ({} checks, exit {code}) -> {}",
        rep.command.name,
        if rep.pass { "pass" } else { "fail" },
        rep.checks.len(),
        out.dir.join("report.json").display()
    );
    ExitCode::from(code as u8)
}
