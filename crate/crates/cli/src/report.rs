use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "==")]
    Equal,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub tol: f64,
    pub pass: bool,
}

/// Collects checks; `tol_scale` widens upper-bound tolerances only.
pub struct Checks {
    pub items: Vec<Check>,
    tol_scale: f64,
}

impl Checks {
    pub fn new(tol_scale: f64) -> Self {
        Checks { items: vec![], tol_scale }
    }

    fn push(&mut self, name: &str, value: f64, relation: Relation, tol: f64) {
        let pass = match relation {
            Relation::Below => value < tol,
            Relation::AtMost => value <= tol,
            Relation::Above => value > tol,
            Relation::AtLeast => value >= tol,
            Relation::Equal => value == tol,
        };
        self.items.push(Check { name: name.into(), value, relation, tol, pass });
    }

    pub fn below(&mut self, name: &str, value: f64, tol: f64) {
        self.push(name, value, Relation::Below, tol * self.tol_scale);
    }

    pub fn at_most(&mut self, name: &str, value: f64, tol: f64) {
        self.push(name, value, Relation::AtMost, tol * self.tol_scale);
    }

    pub fn above(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value, Relation::Above, bound);
    }

    pub fn at_least(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value, Relation::AtLeast, bound);
    }

    /// Audit-zero and exact-count checks are not widened.
    pub fn equal(&mut self, name: &str, value: f64, want: f64) {
        self.push(name, value, Relation::Equal, want);
    }

    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Serialize)]
pub struct CommandEcho {
    pub name: String,
    pub config_path: Option<String>,
    pub config: Value,
    pub seed: Option<u64>,
    pub grid_scale: f64,
    pub tol_scale: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: CommandEcho,
    pub config_hash: String,
    pub metrics: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub degenerate: bool,
    pub error: Option<String>,
    pub exit_code: i32,
    pub artifacts: Vec<String>,
    pub wall_clock_s: f64,
}

pub fn config_hash(echo: &CommandEcho) -> String {
    let key = serde_json::json!({
        "name": echo.name,
        "config": echo.config,
        "seed": echo.seed,
        "grid_scale": echo.grid_scale,
        "tol_scale": echo.tol_scale,
    });
    let digest = Sha256::digest(serde_json::to_vec(&key).expect("json value"));
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

/// Output directory plus the list of files written into it.
pub struct Artifacts {
    pub dir: PathBuf,
    pub written: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), written: vec![] })
    }

    pub fn csv<R: AsRef<[f64]>>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
    ) -> std::io::Result<()> {
        let mut out = header.join(",");
        out.push('\n');
        for r in rows {
            let cells: Vec<String> = r.as_ref().iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        self.text(name, &out)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, v: &T) -> std::io::Result<()> {
        let s = serde_json::to_string_pretty(v).map_err(std::io::Error::other)?;
        self.text(name, &(s + "\n"))
    }

    pub fn text(&mut self, name: &str, body: &str) -> std::io::Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Plot-script stub: one line plot per CSV, first column against the rest.
    pub fn plot_stub(&mut self, csvs: &[&str]) -> std::io::Result<()> {
        let list = csvs.iter().map(|c| format!("    \"{c}\",")).collect::<Vec<_>>().join("\n");
        let body = format!(
            "# Quick look at the CSV outputs; edit freely.\n\
             import csv\n\
             import sys\n\
             import matplotlib.pyplot as plt\n\
             \n\
             FILES = [\n{list}\n]\n\
             \n\
             for name in FILES:\n\
             \x20   with open(name) as fh:\n\
             \x20       rows = list(csv.reader(fh))\n\
             \x20   head, data = rows[0], [[float(v) for v in r] for r in rows[1:]]\n\
             \x20   if not data:\n\
             \x20       continue\n\
             \x20   fig, ax = plt.subplots()\n\
             \x20   for j in range(1, len(head)):\n\
             \x20       ax.plot([r[0] for r in data], [r[j] for r in data], \".\", ms=2, label=head[j])\n\
             \x20   ax.set_xlabel(head[0])\n\
             \x20   ax.legend()\n\
             \x20   ax.set_title(name)\n\
             \x20   fig.savefig(name.replace(\".csv\", \".png\"), dpi=120)\n\
             \n\
             if \"--show\" in sys.argv:\n\
             \x20   plt.show()\n"
        );
        self.text("plot.py", &body)
    }
}
