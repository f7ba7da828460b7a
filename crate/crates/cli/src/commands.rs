//! Subcommand definitions and their implementations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spiralwave::continuation::{branch_summary, continue_branch};
use spiralwave::degree::{coeff, local_invariant, winding_number};
use spiralwave::radial::reconstruct_field;
use spiralwave::spectral::{critical_point, enumerate_critical_points};
use spiralwave::{
    Branch, BranchSummary, Complex64, ContinuationConfig, ModeIndex, ModelParams, OrbitType, SolverConfig,
};

use crate::branch_file::BranchFile;
use crate::config::{parse_mode, BranchConfig, NonlinearitySpec, RunConfig, DEFAULT_GRID_POINTS};
use crate::error::CliError;
use crate::render::{grid_csv, render_ppm, render_svg, Quantity};
use crate::write_atomic;

#[derive(Debug, Parser)]
#[command(
    name = "spiralwave",
    version,
    about = "Spiral-wave bifurcation analysis for the complex Ginzburg-Landau equation on the unit disc"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the critical points λ_{m,n} of the trivial solution.
    CriticalPoints(CriticalPointsArgs),
    /// Print the local bifurcation invariant of a critical point.
    Invariant(InvariantArgs),
    /// Winding number of μ_{m,n} around a circle in the (α, β) plane.
    Winding(WindingArgs),
    /// Trace solution branches by pseudo-arclength continuation.
    Continue(ContinueArgs),
    /// Render a branch point as a polar image.
    Render(RenderArgs),
    /// Run a quick end-to-end consistency check.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct CriticalPointsArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = 2)]
    pub m_max: u32,
    #[arg(long, default_value_t = 2)]
    pub n_max: usize,
    #[arg(long, value_enum, default_value_t = TableFormat::Table)]
    pub format: TableFormat,
    /// Also write the list to this file (JSON for `.json`, CSV otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InvariantArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub m: i64,
    #[arg(long)]
    pub n: usize,
    /// Cross-check against the winding number of μ_{m,n}.
    #[arg(long)]
    pub check_winding: bool,
    #[arg(long, default_value_t = 1e-2)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub omega: f64,
}

#[derive(Debug, Args)]
pub struct WindingArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub m: i64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub radius: f64,
    /// Contour centre α (defaults to the critical point).
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Contour centre β (defaults to the critical point).
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub min_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SummaryFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct ContinueArgs {
    /// JSON run configuration; replaces the model and continuation flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(
        long,
        default_value_t = 0.0,
        allow_negative_numbers = true,
        conflicts_with = "config"
    )]
    pub eta: f64,
    #[arg(
        long,
        default_value_t = 1.0,
        allow_negative_numbers = true,
        conflicts_with = "config"
    )]
    pub omega: f64,
    /// Mode `m,n`; repeat for several branches.
    #[arg(long = "mode", value_parser = parse_mode, allow_hyphen_values = true, conflicts_with = "config")]
    pub modes: Vec<ModeIndex>,
    /// `cubic` or `poly:re,im;re,im;...` for f(u) = Σ c_k |u|^{2k} u.
    #[arg(long, default_value = "cubic", value_parser = NonlinearitySpec::parse_flag, conflicts_with = "config")]
    pub nonlinearity: NonlinearitySpec,
    /// Radial grid intervals N.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS, conflicts_with = "config")]
    pub grid: usize,
    /// Maximum continuation steps (default 200)
    #[arg(long, conflicts_with = "config")]
    pub steps: Option<usize>,
    /// Initial arclength step (default 5e-3)
    #[arg(long, conflicts_with = "config")]
    pub ds: Option<f64>,
    /// Smallest step before giving up (default 1e-6)
    #[arg(long, conflicts_with = "config")]
    pub ds_min: Option<f64>,
    /// Largest step (default 5e-2)
    #[arg(long, conflicts_with = "config")]
    pub ds_max: Option<f64>,
    /// Launch amplitude δ₀.
    #[arg(long, conflicts_with = "config")]
    pub delta0: Option<f64>,
    /// Sup-norm ceiling (default 10 δ₀).
    #[arg(long, conflicts_with = "config")]
    pub ceiling: Option<f64>,
    /// Newton residual tolerance.
    #[arg(long, conflicts_with = "config")]
    pub tol: Option<f64>,
    /// Output directory (overrides the config file's).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Branches traced in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value_t = SummaryFormat::Table)]
    pub format: SummaryFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    Phase,
    Real,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImageFormat {
    Svg,
    Ppm,
    Both,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub branch_file: PathBuf,
    /// Branch point index (default: last).
    #[arg(long)]
    pub step: Option<usize>,
    #[arg(long, default_value_t = 128)]
    pub n_theta: usize,
    #[arg(long, value_enum, default_value_t = What::Phase)]
    pub what: What,
    #[arg(long, value_enum, default_value_t = ImageFormat::Svg)]
    pub image_format: ImageFormat,
    /// Output path prefix (default: next to the branch file).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the polar grid values as CSV.
    #[arg(long)]
    pub dump_grid: bool,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::CriticalPoints(a) => cmd_critical_points(&a, out),
        Command::Invariant(a) => cmd_invariant(&a, out),
        Command::Winding(a) => cmd_winding(&a, out),
        Command::Continue(a) => cmd_continue(&a, out),
        Command::Render(a) => cmd_render(&a, out),
        Command::Selftest => cmd_selftest(out),
    }
}

fn params(eta: f64, omega: f64) -> Result<ModelParams, CliError> {
    ModelParams::new(eta, omega).map_err(|e| CliError::Usage(e.to_string()))
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Io {
        context: "writing to standard output".into(),
        source: e,
    }
}

#[derive(Serialize)]
struct CriticalRow {
    m: i64,
    n: usize,
    s: f64,
    alpha: f64,
    beta: f64,
}

fn critical_csv(rows: &[CriticalRow]) -> String {
    let mut s = String::from("m,n,s,alpha,beta\n");
    for r in rows {
        s.push_str(&format!("{},{},{:?},{:?},{:?}\n", r.m, r.n, r.s, r.alpha, r.beta));
    }
    s
}

fn critical_json(rows: &[CriticalRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialise") + "\n"
}

pub fn cmd_critical_points(a: &CriticalPointsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let p = params(a.eta, a.omega)?;
    let rows: Vec<CriticalRow> = enumerate_critical_points(&p, a.m_max, a.n_max)
        .map_err(|e| CliError::Numerical(e.to_string()))?
        .into_iter()
        .map(|c| CriticalRow {
            m: c.mode.m,
            n: c.mode.n,
            s: c.s,
            alpha: c.alpha,
            beta: c.beta,
        })
        .collect();
    let text = match a.format {
        TableFormat::Csv => critical_csv(&rows),
        TableFormat::Json => critical_json(&rows),
        TableFormat::Table => {
            let mut s = format!("{:>4} {:>3} {:>22} {:>22} {:>22}\n", "m", "n", "s", "alpha", "beta");
            for r in &rows {
                s.push_str(&format!(
                    "{:>4} {:>3} {:>22.15e} {:>22.15e} {:>22.15e}\n",
                    r.m, r.n, r.s, r.alpha, r.beta
                ));
            }
            s
        }
    };
    out.write_all(text.as_bytes()).map_err(stdout_err)?;
    if let Some(path) = &a.out {
        let file = if path.extension().is_some_and(|e| e == "json") {
            critical_json(&rows)
        } else {
            critical_csv(&rows)
        };
        write_atomic(path, file.as_bytes())?;
    }
    Ok(())
}

pub fn cmd_invariant(a: &InvariantArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mode = ModeIndex::new(a.m, a.n);
    let inv = local_invariant(mode);
    let h = OrbitType(a.m);
    let c = coeff(&inv, h);
    writeln!(out, "local invariant at {mode}: {inv}").map_err(stdout_err)?;
    writeln!(out, "coefficient of {h}: {c}").map_err(stdout_err)?;
    if a.check_winding {
        let p = params(a.eta, a.omega)?;
        let cp = critical_point(&p, mode).map_err(|e| CliError::Numerical(e.to_string()))?;
        let w = winding_number(&p, mode, cp.lambda(), a.radius, 64).map_err(|e| CliError::Numerical(e.to_string()))?;
        writeln!(
            out,
            "winding number around ({:?}, {:?}) at radius {:?}: {w}",
            cp.alpha, cp.beta, a.radius
        )
        .map_err(stdout_err)?;
        if w != c {
            writeln!(out, "DISAGREES").map_err(stdout_err)?;
            return Err(CliError::Numerical(format!(
                "winding number {w} disagrees with invariant coefficient {c}"
            )));
        }
        writeln!(out, "AGREES").map_err(stdout_err)?;
    }
    Ok(())
}

pub fn cmd_winding(a: &WindingArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let p = params(a.eta, a.omega)?;
    let mode = ModeIndex::new(a.m, a.n);
    let cp = critical_point(&p, mode).map_err(|e| CliError::Numerical(e.to_string()))?;
    let center = Complex64::new(a.alpha.unwrap_or(cp.alpha), a.beta.unwrap_or(cp.beta));
    let w = winding_number(&p, mode, center, a.radius, a.min_samples).map_err(|e| match e {
        spiralwave::degree::DegreeError::Argument(_) => CliError::Usage(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    })?;
    writeln!(out, "{w}").map_err(stdout_err)
}

fn run_config(a: &ContinueArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => {
            let mut continuation = ContinuationConfig::default();
            if let Some(d) = a.delta0 {
                continuation.amplitude_delta0 = d;
                continuation.norm_ceiling = 10.0 * d;
            }
            if let Some(v) = a.ceiling {
                continuation.norm_ceiling = v;
            }
            if let Some(v) = a.steps {
                continuation.max_steps = v;
            }
            if let Some(v) = a.ds {
                continuation.ds = v;
            }
            if let Some(v) = a.ds_min {
                continuation.ds_min = v;
            }
            if let Some(v) = a.ds_max {
                continuation.ds_max = v;
            }
            let mut solver = SolverConfig::default();
            if let Some(v) = a.tol {
                solver.residual_tol = v;
            }
            RunConfig {
                eta: a.eta,
                omega: a.omega,
                modes: if a.modes.is_empty() {
                    vec![ModeIndex::new(1, 0)]
                } else {
                    a.modes.clone()
                },
                nonlinearity: a.nonlinearity.clone(),
                grid_points: a.grid,
                continuation,
                solver,
                output_dir: PathBuf::from("."),
            }
        }
    };
    if let Some(dir) = &a.out_dir {
        cfg.output_dir = dir.clone();
    }
    if a.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn branch_file_name(mode: ModeIndex) -> String {
    format!("branch_m{}_n{}.csv", mode.m, mode.n)
}

/// Traces one configured branch.
pub fn trace_branch(cfg: &BranchConfig) -> Result<Branch, CliError> {
    let f = cfg.nonlinearity.build()?;
    continue_branch(
        &cfg.params()?,
        cfg.mode,
        cfg.grid()?,
        &f,
        &cfg.continuation,
        &cfg.solver,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))
}

/// Runs `work` over `items` on up to `jobs` threads, keeping input order.
fn parallel_map<I: Sync, O: Send>(items: &[I], jobs: usize, work: impl Fn(&I) -> O + Sync) -> Vec<O> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<O>>> = Mutex::new(items.iter().map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let result = work(item);
                slots.lock().expect("no worker panicked")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|o| o.expect("every item processed"))
        .collect()
}

#[derive(Serialize)]
struct ContinueReport<'a> {
    file: &'a Path,
    summary: &'a BranchSummary,
}

pub fn cmd_continue(a: &ContinueArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = run_config(a)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(CliError::io(format!(
        "creating output directory {}",
        cfg.output_dir.display()
    )))?;
    let branches = cfg.branches();
    let results = parallel_map(&branches, a.jobs, |bc| {
        log::info!("tracing mode {}", bc.mode);
        let branch = trace_branch(bc)?;
        let summary = branch_summary(&branch).map_err(|e| CliError::Numerical(e.to_string()))?;
        let path = cfg.output_dir.join(branch_file_name(bc.mode));
        BranchFile::from_branch(bc, &branch).write(&path)?;
        Ok::<_, CliError>((path, summary))
    });
    let mut failures = Vec::new();
    for (bc, result) in branches.iter().zip(results) {
        match result {
            Ok((path, summary)) => {
                let line = match a.format {
                    SummaryFormat::Json => serde_json::to_string(&ContinueReport {
                        file: &path,
                        summary: &summary,
                    })
                    .expect("summary serialises"),
                    SummaryFormat::Table => format!(
                        "mode {}: {} points, termination {}, sup_norm {:.6e} -> {:.6e}, alpha {:.6e} -> {:.6e}, certificate {}, wrote {}",
                        summary.mode,
                        summary.points,
                        summary.termination,
                        summary.sup_norm.min,
                        summary.sup_norm.max,
                        summary.alpha.min,
                        summary.alpha.max,
                        summary.certificate,
                        path.display()
                    ),
                };
                writeln!(out, "{line}").map_err(stdout_err)?;
            }
            Err(e) => {
                log::error!("mode {}: {e}", bc.mode);
                failures.push(format!("mode {}: {e}", bc.mode));
            }
        }
    }
    match failures.len() {
        0 => Ok(()),
        _ => Err(CliError::Numerical(failures.join("; "))),
    }
}

pub fn cmd_render(a: &RenderArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = BranchFile::read(&a.branch_file)?;
    let profiles = file.profiles.as_ref().ok_or_else(|| {
        CliError::Usage(format!(
            "{}: profile companion {} not found",
            a.branch_file.display(),
            BranchFile::profile_path(&a.branch_file).display()
        ))
    })?;
    let step = a.step.unwrap_or(profiles.len().saturating_sub(1));
    let profile = profiles.get(step).ok_or_else(|| {
        CliError::Usage(format!(
            "step {step} out of range: branch has {} points",
            profiles.len()
        ))
    })?;
    let field = reconstruct_field(profile, a.n_theta).map_err(|e| CliError::Usage(e.to_string()))?;
    let prefix = match &a.out {
        Some(p) => p.clone(),
        None => {
            let stem = a
                .branch_file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            a.branch_file.with_file_name(format!("{stem}_step{step}"))
        }
    };
    let with_suffix = |suffix: &str| {
        let mut s = prefix.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    };
    let quantities: &[Quantity] = match a.what {
        What::Phase => &[Quantity::Phase],
        What::Real => &[Quantity::Real],
        What::Both => &[Quantity::Phase, Quantity::Real],
    };
    let mut written = Vec::new();
    for &q in quantities {
        if matches!(a.image_format, ImageFormat::Svg | ImageFormat::Both) {
            let path = with_suffix(&format!("_{}.svg", q.name()));
            write_atomic(&path, render_svg(&field, q).as_bytes())?;
            written.push(path);
        }
        if matches!(a.image_format, ImageFormat::Ppm | ImageFormat::Both) {
            let path = with_suffix(&format!("_{}.ppm", q.name()));
            write_atomic(&path, &render_ppm(&field, q))?;
            written.push(path);
        }
    }
    if a.dump_grid {
        let path = with_suffix("_grid.csv");
        write_atomic(&path, grid_csv(&field).as_bytes())?;
        written.push(path);
    }
    for p in written {
        writeln!(out, "{}", p.display()).map_err(stdout_err)?;
    }
    Ok(())
}

pub fn cmd_selftest(out: &mut dyn Write) -> Result<(), CliError> {
    let p = params(0.3, 1.0)?;
    let mut checks: Vec<(&str, bool)> = Vec::new();

    let pts = enumerate_critical_points(&p, 2, 2).map_err(|e| CliError::Numerical(e.to_string()))?;
    checks.push(("critical-point enumeration has 15 entries", pts.len() == 15));
    let mu_ok = pts
        .iter()
        .all(|c| spiralwave::spectral::mu(&p, c.mode, c.alpha, c.beta).is_ok_and(|v| v.norm() < 1e-13 * (1.0 + c.s)));
    checks.push(("mu vanishes at every critical point", mu_ok));
    let winding_ok = pts.iter().all(|c| {
        winding_number(&p, c.mode, c.lambda(), 1e-2, 64)
            .is_ok_and(|w| w == coeff(&local_invariant(c.mode), OrbitType(c.mode.m)))
    });
    checks.push(("winding numbers match local invariants", winding_ok));

    let bc = BranchConfig {
        eta: 0.3,
        omega: 1.0,
        mode: ModeIndex::new(0, 0),
        nonlinearity: NonlinearitySpec::Cubic,
        grid_points: 32,
        continuation: ContinuationConfig {
            max_steps: 10,
            ..Default::default()
        },
        solver: SolverConfig::default(),
    };
    let constant_ok = trace_branch(&bc).is_ok_and(|b| {
        b.points
            .iter()
            .all(|q| q.beta.abs() < 1e-8 && (q.sup_norm - q.alpha.sqrt()).abs() < 1e-6)
    });
    checks.push(("constant branch has amplitude sqrt(alpha)", constant_ok));

    let mut failed = 0;
    for (name, ok) in &checks {
        writeln!(out, "{} {name}", if *ok { "ok  " } else { "FAIL" }).map_err(stdout_err)?;
        failed += usize::from(!ok);
    }
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} selftest check(s) failed")));
    }
    Ok(())
}
