//! Command-line entry point: `run`, `table`, `probe` and `export-matrices`.
//!
//! Run settings come from an optional `key = value` file (`--config`) and
//! from flags; flags win. Both use the same keys, listed in [`RunConfig::KEYS`].
//! Exit codes: 0 success, 1 usage or configuration error (including size
//! guards), 2 Picard non-convergence or a violated probe bound.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::assembly::AdvectionField;
use crate::diagnostics::{
    centerline_profiles, envelope_check, fov_mu, lemma42_check, probe_eigs, probe_system, reattachment_points,
    streamfunction, ProbeAdvection, ProbeConfig,
};
use crate::error::{Error, Result};
use crate::fe::ElementOrder;
use crate::io;
use crate::krylov::{KrylovConfig, PreconditionerKind};
use crate::linalg::write_matrix_market;
use crate::mesh::write_vtk;
use crate::picard::{picard_iterate, BenchmarkProblem, Discretization, PicardConfig, PicardOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Cavity,
    Step,
}

/// Parses `1/16`, `0.0625` or `.0625`.
pub fn parse_h(s: &str) -> Result<f64> {
    let s = s.trim();
    let h = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| Error::Parse(format!("bad mesh size '{s}'")))?;
            let b: f64 = b.trim().parse().map_err(|_| Error::Parse(format!("bad mesh size '{s}'")))?;
            a / b
        }
        None => s.parse().map_err(|_| Error::Parse(format!("bad mesh size '{s}'")))?,
    };
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Parameter(format!("mesh size must be positive, got '{s}'")));
    }
    Ok(h)
}

/// `1/16` when 1/h is an integer, otherwise the decimal value.
pub fn h_label(h: f64) -> String {
    let inv = 1.0 / h;
    if (inv - inv.round()).abs() < 1e-9 && inv.round() >= 1.0 {
        format!("1/{}", inv.round() as u64)
    } else {
        format!("{h}")
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid value '{v}' for {key}")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub re: f64,
    /// Channel length behind the step (step only).
    pub length: f64,
    pub h: f64,
    pub order: ElementOrder,
    pub gamma: f64,
    pub preconditioner: PreconditionerKind,
    pub rel_tol: f64,
    pub nonlinear_tol: f64,
    pub max_gmres: usize,
    pub max_picard: usize,
    pub output: PathBuf,
    pub vtk: bool,
    pub timeout_minutes: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Cavity,
            re: 1000.0,
            length: 5.0,
            h: 1.0 / 16.0,
            order: ElementOrder::Q1,
            gamma: 0.1,
            preconditioner: PreconditionerKind::ALTriangular,
            rel_tol: 1e-5,
            nonlinear_tol: 1e-5,
            max_gmres: 400,
            max_picard: 100,
            output: PathBuf::from("out"),
            vtk: false,
            timeout_minutes: None,
        }
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 14] = [
        "problem",
        "re",
        "length",
        "h",
        "order",
        "gamma",
        "preconditioner",
        "rel_tol",
        "nonlinear_tol",
        "max_gmres",
        "max_picard",
        "output",
        "vtk",
        "timeout_minutes",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "problem" => {
                self.problem = match v.to_ascii_lowercase().as_str() {
                    "cavity" => ProblemKind::Cavity,
                    "step" => ProblemKind::Step,
                    _ => return Err(Error::Parameter(format!("unknown problem '{v}' (expected cavity or step)"))),
                }
            }
            "re" => self.re = parse_num(&key, v)?,
            "length" | "l" => self.length = parse_num(&key, v)?,
            "h" => self.h = parse_h(v)?,
            "order" => self.order = ElementOrder::from_degree(parse_num(&key, v)?)?,
            "gamma" => self.gamma = parse_num(&key, v)?,
            "preconditioner" => self.preconditioner = v.parse()?,
            "rel_tol" => self.rel_tol = parse_num(&key, v)?,
            "nonlinear_tol" => self.nonlinear_tol = parse_num(&key, v)?,
            "max_gmres" => self.max_gmres = parse_num(&key, v)?,
            "max_picard" => self.max_picard = parse_num(&key, v)?,
            "output" => self.output = PathBuf::from(v),
            "vtk" => self.vtk = parse_num(&key, v)?,
            "timeout_minutes" => {
                self.timeout_minutes = if v.is_empty() || v == "none" { None } else { Some(parse_num(&key, v)?) }
            }
            _ => return Err(Error::Configuration(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Configuration(format!("cannot read {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("{}:{}: expected key = value", path.display(), lineno + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.benchmark().validate()?;
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::Parameter(format!("gamma must be nonnegative, got {}", self.gamma)));
        }
        if !(self.rel_tol > 0.0 && self.nonlinear_tol > 0.0) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        if self.max_gmres == 0 {
            return Err(Error::Parameter("max_gmres must be at least 1".into()));
        }
        if let Some(t) = self.timeout_minutes {
            if !(t > 0.0) {
                return Err(Error::Parameter(format!("timeout_minutes must be positive, got {t}")));
            }
        }
        Ok(())
    }

    pub fn benchmark(&self) -> BenchmarkProblem {
        match self.problem {
            ProblemKind::Cavity => BenchmarkProblem::DrivenCavity { re: self.re },
            ProblemKind::Step => BenchmarkProblem::BackwardStep {
                re: self.re,
                length: self.length,
            },
        }
    }

    pub fn picard_config(&self, deadline: Option<Instant>) -> PicardConfig {
        PicardConfig {
            nonlinear_rel_tol: self.nonlinear_tol,
            max_picard: self.max_picard,
            gamma: self.gamma,
            inner: KrylovConfig {
                rel_tol: self.rel_tol,
                max_iters: self.max_gmres,
                deadline,
                ..KrylovConfig::default()
            },
        }
    }

    /// Configuration echo written at the top of every artifact.
    pub fn echo(&self) -> Vec<String> {
        let mut e = vec![
            format!("problem={}", self.benchmark().name()),
            format!("re={}", self.re),
        ];
        if self.problem == ProblemKind::Step {
            e.push(format!("length={}", self.length));
        }
        e.extend([
            format!("h={}", h_label(self.h)),
            format!("order={}", self.order.degree()),
            format!("gamma={}", self.gamma),
            format!("nu={}", self.benchmark().viscosity()),
            format!("preconditioner={}", self.preconditioner.name()),
            format!("rel_tol={}", self.rel_tol),
            format!("nonlinear_tol={}", self.nonlinear_tol),
            format!("max_gmres={}", self.max_gmres),
            format!("max_picard={}", self.max_picard),
        ]);
        e
    }
}

#[derive(Parser, Debug)]
#[command(name = "oseen", version, about = "Grad-div stabilized Oseen / Navier-Stokes solver kit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Picard solve of one benchmark configuration.
    Run(RunArgs),
    /// Sweep the grid of one benchmark table into a CSV.
    Table(TableArgs),
    /// Dense diagnostic probe on a cavity Oseen system.
    Probe(ProbeArgs),
    /// Dump the assembled blocks of the first Oseen system in Matrix Market form.
    ExportMatrices(ConfigArgs),
}

/// Flags mirroring the configuration keys; each overrides the file value.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// key = value configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// cavity | step
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub re: Option<String>,
    /// channel length behind the step
    #[arg(long)]
    pub length: Option<String>,
    /// mesh size, e.g. 1/16
    #[arg(long)]
    pub h: Option<String>,
    /// 1 (Q1-Q1) | 2 (Q2-Q2)
    #[arg(long)]
    pub order: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    /// al | pcd | ideal | none
    #[arg(long)]
    pub preconditioner: Option<String>,
    #[arg(long)]
    pub rel_tol: Option<String>,
    #[arg(long)]
    pub nonlinear_tol: Option<String>,
    #[arg(long)]
    pub max_gmres: Option<String>,
    #[arg(long)]
    pub max_picard: Option<String>,
    /// output directory
    #[arg(long)]
    pub output: Option<String>,
    /// also write solution.vtk
    #[arg(long)]
    pub vtk: bool,
    #[arg(long)]
    pub timeout_minutes: Option<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("problem", &self.problem),
            ("re", &self.re),
            ("length", &self.length),
            ("h", &self.h),
            ("order", &self.order),
            ("gamma", &self.gamma),
            ("preconditioner", &self.preconditioner),
            ("rel_tol", &self.rel_tol),
            ("nonlinear_tol", &self.nonlinear_tol),
            ("max_gmres", &self.max_gmres),
            ("max_picard", &self.max_picard),
            ("output", &self.output),
            ("timeout_minutes", &self.timeout_minutes),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        if self.vtk {
            cfg.vtk = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    /// table number 1-6
    #[arg(value_parser = clap::value_parser!(u8).range(1..=6))]
    pub id: u8,
    /// comma-separated mesh sizes (default: the table's own rows)
    #[arg(long)]
    pub h_list: Option<String>,
    /// output CSV (default tableN.csv)
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// worker threads
    #[arg(long)]
    pub jobs: Option<usize>,
    /// wall-clock budget per cell
    #[arg(long, default_value_t = 30.0)]
    pub timeout_minutes: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProbeKind {
    Eigs,
    Fov,
    Lemma42,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    pub kind: ProbeKind,
    #[arg(long, default_value_t = 0.02)]
    pub nu: f64,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long, default_value = "1/8")]
    pub h: String,
    #[arg(long, default_value_t = 1)]
    pub order: u32,
    /// zero | first-picard
    #[arg(long, default_value = "zero")]
    pub advection: String,
    /// random vectors for lemma42
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// report CSV (default probe_<kind>.csv)
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// also write the eigenvalue cloud (eigs only)
    #[arg(long)]
    pub eigenvalues: Option<PathBuf>,
    /// skip the GMRES envelope check (fov only)
    #[arg(long)]
    pub no_envelope: bool,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Run(a) => cmd_run(&a.config.resolve()?),
        Command::Table(a) => cmd_table(a),
        Command::Probe(a) => cmd_probe(a),
        Command::ExportMatrices(a) => cmd_export(&a.resolve()?),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn solve(cfg: &RunConfig, deadline: Option<Instant>) -> Result<PicardOutcome> {
    let disc = Discretization::new(&cfg.benchmark(), cfg.h, cfg.order)?;
    let nu = cfg.benchmark().viscosity();
    picard_iterate(disc, nu, cfg.preconditioner, &cfg.picard_config(deadline))
}

pub fn cmd_run(cfg: &RunConfig) -> Result<i32> {
    let deadline = cfg
        .timeout_minutes
        .map(|m| Instant::now() + Duration::from_secs_f64(m * 60.0));
    let out = match solve(cfg, deadline) {
        Err(Error::Timeout) => {
            eprintln!("run exceeded its wall-clock budget");
            return Ok(EXIT_FAILED);
        }
        r => r?,
    };
    let echo = cfg.echo();
    let dir = &cfg.output;
    fs::create_dir_all(dir)?;
    let mesh = &out.discretization.mesh;

    let mut w = create(&dir.join("report.csv"))?;
    io::write_report_csv(&mut w, &out.report, &echo)?;
    w.flush()?;
    let mut w = create(&dir.join("history.csv"))?;
    io::write_nonlinear_history_csv(&mut w, &out.report, &echo)?;
    w.flush()?;
    let mut w = create(&dir.join("solution.csv"))?;
    io::write_solution_csv(&mut w, mesh, &out.velocity, &out.pressure, &echo)?;
    w.flush()?;

    let psi = streamfunction(mesh, &out.discretization.scalar, &out.velocity)?;
    let mut w = create(&dir.join("streamfunction.csv"))?;
    io::write_nodal_scalar_csv(&mut w, mesh, "psi", &psi, &echo)?;
    w.flush()?;

    match cfg.problem {
        ProblemKind::Cavity => {
            let prof = centerline_profiles(mesh, &out.velocity)?;
            let mut w = create(&dir.join("profiles.csv"))?;
            io::write_profiles_csv(&mut w, &prof, &echo)?;
            w.flush()?;
        }
        ProblemKind::Step => {
            let stats = reattachment_points(mesh, &out.velocity)?;
            let mut w = create(&dir.join("step_statistics.csv"))?;
            io::write_step_statistics_csv(&mut w, &stats, &echo)?;
            w.flush()?;
        }
    }

    if cfg.vtk {
        let nv = mesh.node_count();
        let vel: Vec<[f64; 2]> = (0..nv).map(|i| [out.velocity[i], out.velocity[nv + i]]).collect();
        let mut w = create(&dir.join("solution.vtk"))?;
        write_vtk(mesh, &[("p", &out.pressure), ("psi", &psi)], &[("u", &vel)], &mut w)?;
        w.flush()?;
    }

    println!("{}", out.report.table_entry());
    Ok(if out.report.converged { EXIT_OK } else { EXIT_FAILED })
}

/// Default rows of each table.
pub fn table_h_defaults(id: u8) -> Vec<f64> {
    if id == 4 {
        vec![1.0 / 32.0]
    } else {
        vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
    }
}

pub fn parse_h_list(s: &str) -> Result<Vec<f64>> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::Parameter("h_list is empty".into()));
    }
    items.into_iter().map(parse_h).collect()
}

fn table_problem(id: u8, re: f64) -> RunConfig {
    let mut cfg = RunConfig::default();
    match id {
        1..=3 => {
            cfg.re = [1000.0, 3200.0, 5000.0][id as usize - 1];
        }
        4 => {
            cfg.problem = ProblemKind::Step;
            cfg.re = re;
            cfg.length = if re > 150.0 { 24.0 } else { 5.0 };
        }
        5 | 6 => {
            cfg.problem = ProblemKind::Step;
            (cfg.re, cfg.length) = if id == 5 { (150.0, 5.0) } else { (800.0, 24.0) };
        }
        _ => unreachable!("table id validated by the parser"),
    }
    cfg
}

/// Column order of the iteration tables.
const TABLE_COLUMNS: [(PreconditionerKind, ElementOrder, f64); 8] = [
    (PreconditionerKind::ALTriangular, ElementOrder::Q1, 0.1),
    (PreconditionerKind::ALTriangular, ElementOrder::Q1, 0.0),
    (PreconditionerKind::ALTriangular, ElementOrder::Q2, 0.1),
    (PreconditionerKind::ALTriangular, ElementOrder::Q2, 0.0),
    (PreconditionerKind::ModifiedPCD, ElementOrder::Q1, 0.1),
    (PreconditionerKind::ModifiedPCD, ElementOrder::Q1, 0.0),
    (PreconditionerKind::ModifiedPCD, ElementOrder::Q2, 0.1),
    (PreconditionerKind::ModifiedPCD, ElementOrder::Q2, 0.0),
];

fn column_label(kind: PreconditionerKind, order: ElementOrder, gamma: f64) -> String {
    format!("{}_q{}_gamma{}", kind.name(), order.degree(), gamma)
}

/// One cell of a sweep; errors become per-cell status strings.
#[derive(Clone, Debug)]
pub enum CellOutcome {
    Solved(Box<PicardOutcome>),
    Timeout,
    Failed(String),
}

impl CellOutcome {
    pub fn entry(&self) -> String {
        match self {
            Self::Solved(o) => o.report.table_entry(),
            Self::Timeout => "timeout".into(),
            Self::Failed(_) => "error".into(),
        }
    }
}

pub fn run_cell(cfg: &RunConfig, budget: Duration) -> CellOutcome {
    match solve(cfg, Some(Instant::now() + budget)) {
        Ok(o) => CellOutcome::Solved(Box::new(o)),
        Err(Error::Timeout) => CellOutcome::Timeout,
        Err(e) => CellOutcome::Failed(e.to_string()),
    }
}

pub fn cmd_table(args: &TableArgs) -> Result<i32> {
    let hs = match &args.h_list {
        Some(s) => parse_h_list(s)?,
        None => table_h_defaults(args.id),
    };
    if !(args.timeout_minutes > 0.0) {
        return Err(Error::Parameter("timeout_minutes must be positive".into()));
    }
    let budget = Duration::from_secs_f64(args.timeout_minutes * 60.0);
    let mut cells: Vec<RunConfig> = Vec::new();
    if args.id == 4 {
        for re in [150.0, 800.0] {
            for gamma in [0.1, 0.0] {
                for order in [ElementOrder::Q1, ElementOrder::Q2] {
                    for &h in &hs {
                        let mut c = table_problem(4, re);
                        (c.gamma, c.order, c.h) = (gamma, order, h);
                        cells.push(c);
                    }
                }
            }
        }
    } else {
        for &h in &hs {
            for (kind, order, gamma) in TABLE_COLUMNS {
                let mut c = table_problem(args.id, 0.0);
                (c.preconditioner, c.order, c.gamma, c.h) = (kind, order, gamma, h);
                cells.push(c);
            }
        }
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Configuration(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<CellOutcome> = pool.install(|| cells.par_iter().map(|c| run_cell(c, budget)).collect());

    let hl: Vec<String> = hs.iter().map(|&h| h_label(h)).collect();
    let mut echo = vec![
        format!("table={}", args.id),
        format!("h_list={}", hl.join(",")),
        format!("timeout_minutes={}", args.timeout_minutes),
    ];
    for (c, o) in cells.iter().zip(&outcomes) {
        if let CellOutcome::Failed(msg) = o {
            echo.push(format!(
                "failed cell re={} h={} order={} gamma={} preconditioner={}: {msg}",
                c.re,
                h_label(c.h),
                c.order.degree(),
                c.gamma,
                c.preconditioner.name()
            ));
        }
    }
    let mut rows = Vec::new();
    let header = if args.id == 4 {
        for (c, o) in cells.iter().zip(&outcomes) {
            let stats = match o {
                CellOutcome::Solved(out) if out.report.converged => {
                    reattachment_points(&out.discretization.mesh, &out.velocity).unwrap_or_default()
                }
                _ => Default::default(),
            };
            let f = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
            rows.push(format!(
                "{},{},{},{},{},{},{},{}",
                c.re,
                c.gamma,
                c.order.degree(),
                h_label(c.h),
                f(stats.r1),
                f(stats.r2),
                f(stats.r3),
                o.entry()
            ));
        }
        "re,gamma,order,h,r1,r2,r3,picard".to_string()
    } else {
        for (i, h) in hl.iter().enumerate() {
            let row: Vec<String> = outcomes[i * 8..(i + 1) * 8].iter().map(CellOutcome::entry).collect();
            rows.push(format!("{h},{}", row.join(",")));
        }
        let cols: Vec<String> = TABLE_COLUMNS.iter().map(|&(k, o, g)| column_label(k, o, g)).collect();
        format!("h,{}", cols.join(","))
    };
    let path = args
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("table{}.csv", args.id)));
    let mut w = create(&path)?;
    io::write_rows(&mut w, &header, &rows, &echo)?;
    w.flush()?;
    println!("{header}");
    for r in &rows {
        println!("{r}");
    }
    Ok(EXIT_OK)
}

pub fn cmd_probe(args: &ProbeArgs) -> Result<i32> {
    let cfg = ProbeConfig {
        nu: args.nu,
        gamma: args.gamma,
        h: parse_h(&args.h)?,
        order: ElementOrder::from_degree(args.order)?,
        advection: args.advection.parse::<ProbeAdvection>()?,
    };
    if !(cfg.nu > 0.0 && cfg.gamma >= 0.0) {
        return Err(Error::Parameter(format!("need nu > 0 and gamma >= 0, got {} and {}", cfg.nu, cfg.gamma)));
    }
    let mut echo = cfg.echo();
    let name = match args.kind {
        ProbeKind::Eigs => "eigs",
        ProbeKind::Fov => "fov",
        ProbeKind::Lemma42 => "lemma42",
    };
    echo.insert(0, format!("probe={name}"));
    let (header, row, ok) = match args.kind {
        ProbeKind::Eigs => {
            let rep = probe_eigs(&cfg)?;
            if let Some(p) = &args.eigenvalues {
                let mut w = create(p)?;
                io::write_eigenvalues_csv(&mut w, &rep.eigenvalues, &echo)?;
                w.flush()?;
            }
            (io::SPECTRAL_HEADER, io::spectral_row(&cfg, &rep), rep.bounds_hold())
        }
        ProbeKind::Fov => {
            let system = probe_system(&cfg)?;
            let rep = fov_mu(&system)?;
            let env = if args.no_envelope {
                None
            } else {
                Some(envelope_check(&system, &rep, &KrylovConfig::default())?)
            };
            let ok = rep.bounds_hold() && env.as_ref().is_none_or(|e| e.pass);
            (io::FOV_HEADER, io::fov_row(&cfg, &rep, env.as_ref()), ok)
        }
        ProbeKind::Lemma42 => {
            echo.push(format!("trials={}", args.trials));
            echo.push(format!("seed={}", args.seed));
            let system = probe_system(&cfg)?;
            let rep = lemma42_check(&system, args.trials, args.seed)?;
            (io::LEMMA42_HEADER, io::lemma42_row(&cfg, &rep), rep.pass())
        }
    };
    let path = args
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("probe_{name}.csv")));
    let mut w = create(&path)?;
    io::write_rows(&mut w, header, std::slice::from_ref(&row), &echo)?;
    w.flush()?;
    println!("{header}\n{row}");
    if ok {
        Ok(EXIT_OK)
    } else {
        eprintln!("probe bound violated");
        Ok(EXIT_FAILED)
    }
}

/// Blocks of the first Picard system (zero advection).
pub fn cmd_export(cfg: &RunConfig) -> Result<i32> {
    let disc = Discretization::new(&cfg.benchmark(), cfg.h, cfg.order)?;
    let zero = AdvectionField::zero(disc.dofmap.n_full_velocity());
    let with_pcd = cfg.preconditioner == PreconditionerKind::ModifiedPCD;
    let sys = disc.system(cfg.benchmark().viscosity(), cfg.gamma, &zero, with_pcd)?;
    let dir = &cfg.output;
    fs::create_dir_all(dir)?;
    let mut blocks = vec![
        ("a_gamma", &sys.a_gamma),
        ("b", &sys.b),
        ("c", &sys.c),
        ("mass", &sys.mass),
    ];
    if let Some(p) = &sys.pcd {
        blocks.push(("a_p", &p.a_p));
        blocks.push(("f_p", &p.f_p));
    }
    for (name, a) in blocks {
        let mut w = create(&dir.join(format!("{name}.mtx")))?;
        write_matrix_market(a, &mut w)?;
        w.flush()?;
    }
    let rows: Vec<String> = sys.rhs.iter().map(|v| format!("{v:.16e}")).collect();
    let mut w = create(&dir.join("rhs.csv"))?;
    io::write_rows(&mut w, "rhs", &rows, &cfg.echo())?;
    w.flush()?;
    println!("n={} m={}", sys.n(), sys.m());
    Ok(EXIT_OK)
}
