//! `fv`: mesh generation and validation, single solves, convergence
//! studies, alpha sweeps and property suites for the finite volume
//! anisotropic diffusion solver.
//!
//! Exit codes: 0 success, 1 computational failure, 2 usage error.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fv_core::discrete::{CoefficientVariant, EdgeAlphaRule};
use fv_core::mesh::{
    build_delaunay_mesh, build_rectangular_mesh, export_mesh, import_mesh_with,
    validate_admissibility, ImportOptions, Mesh, Rect,
};
use fv_core::verify::{
    alpha_sweep, case1, case2, isotropic_case, property_suite, run_convergence_parallel,
    solve_case, MeshFamily, PropertyConfig, SolverConfig, TestCase,
};

use output::{OutputSink, ReportFormat};

#[derive(Parser)]
#[command(name = "fv", version, about = "Cell-centered finite volume solver for anisotropic diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or validate meshes.
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
    /// Solve one case on one mesh and dump the cell values.
    Solve(SolveArgs),
    /// Refinement study with fitted convergence orders.
    Convergence(ConvergenceArgs),
    /// Error as a function of the splitting parameter alpha.
    AlphaSweep(AlphaSweepArgs),
    /// Run the geometric and functional property suite on a mesh.
    Properties(PropertiesArgs),
}

#[derive(Subcommand)]
enum MeshAction {
    /// Build a mesh and write it to a file.
    Gen(MeshGenArgs),
    /// Validate a mesh file and report violations.
    Check(MeshCheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Rect,
    Delaunay,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Center,
    Barycenter,
}

impl From<VariantArg> for CoefficientVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Center => CoefficientVariant::Center,
            VariantArg::Barycenter => CoefficientVariant::Barycenter,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlphaRuleArg {
    Diamond,
    Harmonic,
}

impl From<AlphaRuleArg> for EdgeAlphaRule {
    fn from(v: AlphaRuleArg) -> Self {
        match v {
            AlphaRuleArg::Diamond => EdgeAlphaRule::DiamondMean,
            AlphaRuleArg::Harmonic => EdgeAlphaRule::HarmonicCells,
        }
    }
}

#[derive(Args)]
struct DomainArg {
    /// Domain rectangle as x0,y0,x1,y1.
    #[arg(long, value_parser = parse_rect, default_value = "0,0,1,1")]
    domain: Rect,
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if parts.len() != 4 {
        return Err("expected x0,y0,x1,y1".into());
    }
    Ok(Rect::new(parts[0], parts[1], parts[2], parts[3]))
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',').map(|p| p.trim().parse::<usize>().map_err(|e| e.to_string())).collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string())).collect()
}

#[derive(Args)]
struct MeshGenArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Cells along x (rectangular family).
    #[arg(long)]
    nx: Option<usize>,
    /// Cells along y (rectangular family).
    #[arg(long)]
    ny: Option<usize>,
    /// Lattice resolution (Delaunay family).
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    domain: DomainArg,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct MeshCheckArgs {
    #[arg(long)]
    input: PathBuf,
    /// Smallest accepted d_{K,sigma}/diam(K).
    #[arg(long, default_value_t = 0.02)]
    theta_min: f64,
    /// Report violations without failing.
    #[arg(long)]
    allow_invalid: bool,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    format: ReportFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CaseMeshArgs {
    /// Test case: case1, case2 or isotropic.
    #[arg(long = "case")]
    case: String,
    /// Generated mesh family; alternatively give --input for a mesh file.
    #[arg(long, value_enum)]
    mesh: Option<FamilyArg>,
    /// Cells per side (rectangular family).
    #[arg(long)]
    n: Option<usize>,
    /// Lattice resolution (Delaunay family).
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long, default_value_t = 0.15)]
    jitter: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mesh file to solve on instead of a generated family.
    #[arg(long)]
    input: Option<PathBuf>,
}

impl CaseMeshArgs {
    fn case(&self) -> Result<TestCase> {
        match self.case.as_str() {
            "case1" => Ok(case1()?),
            "case2" => Ok(case2()?),
            "isotropic" => Ok(isotropic_case()?),
            other => bail!("unknown case {other:?} (expected case1, case2 or isotropic)"),
        }
    }

    fn build_mesh(&self) -> Result<Arc<Mesh<2>>> {
        if let Some(path) = &self.input {
            let (mesh, _) = import_mesh_with(path, &ImportOptions::default())
                .with_context(|| format!("importing {}", path.display()))?;
            return Ok(Arc::new(mesh));
        }
        match self.mesh {
            Some(FamilyArg::Rect) => {
                let n = self.n.ok_or_else(|| anyhow!("--n is required with --mesh rect"))?;
                Ok(Arc::new(build_rectangular_mesh(n, n, Rect::UNIT)?))
            }
            Some(FamilyArg::Delaunay) => {
                let r = self
                    .resolution
                    .ok_or_else(|| anyhow!("--resolution is required with --mesh delaunay"))?;
                Ok(Arc::new(build_delaunay_mesh(r, self.jitter, self.seed, Rect::UNIT)?))
            }
            None => bail!("give either --mesh <family> or --input <mesh.json>"),
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// 0 picks a bound from the cell count.
    #[arg(long, default_value_t = 0)]
    max_iter: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig { tolerance: self.tol, max_iterations: self.max_iter }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    target: CaseMeshArgs,
    /// Splitting parameter: "auto" or a number.
    #[arg(long, default_value = "auto")]
    alpha: String,
    #[arg(long, value_enum, default_value_t = VariantArg::Center)]
    variant: VariantArg,
    #[arg(long, value_enum, default_value_t = AlphaRuleArg::Diamond)]
    alpha_rule: AlphaRuleArg,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the system matrix in MatrixMarket format.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    format: ReportFormat,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    target: CaseMeshArgs,
    /// Refinement levels, e.g. 10,20,40,80.
    #[arg(long, value_parser = parse_usize_list)]
    levels: Vec<Vec<usize>>,
    #[arg(long, default_value = "auto")]
    alpha: String,
    #[arg(long, value_enum, default_value_t = VariantArg::Center)]
    variant: VariantArg,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    format: ReportFormat,
}

#[derive(Args)]
struct AlphaSweepArgs {
    #[command(flatten)]
    target: CaseMeshArgs,
    /// Alpha grid, e.g. 0.25,0.5,1.0,1.5,2.0,2.5.
    #[arg(long, value_parser = parse_f64_list)]
    alphas: Vec<Vec<f64>>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    format: ReportFormat,
}

#[derive(Args)]
struct PropertiesArgs {
    #[arg(long, value_enum)]
    mesh: Option<FamilyArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long, default_value_t = 0.15)]
    jitter: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Random fields per property.
    #[arg(long, default_value_t = 50)]
    samples: usize,
}

fn parse_alpha(s: &str) -> Result<Option<f64>> {
    if s == "auto" {
        Ok(None)
    } else {
        Ok(Some(s.parse::<f64>().context("--alpha expects \"auto\" or a number")?))
    }
}

fn worker_cap() -> usize {
    std::env::var("FV_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(1)
}

fn config_echo() -> String {
    let args: Vec<String> = std::env::args().skip(1).collect();
    args.join(" ")
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Mesh { action } => match action {
            MeshAction::Gen(args) => mesh_gen(args),
            MeshAction::Check(args) => mesh_check(args),
        },
        Command::Solve(args) => solve(args),
        Command::Convergence(args) => convergence(args),
        Command::AlphaSweep(args) => sweep(args),
        Command::Properties(args) => properties(args),
    }
}

fn mesh_gen(args: MeshGenArgs) -> Result<()> {
    let mesh = match args.family {
        FamilyArg::Rect => {
            let nx = args.nx.ok_or_else(|| anyhow!("--nx is required for the rect family"))?;
            let ny = args.ny.ok_or_else(|| anyhow!("--ny is required for the rect family"))?;
            build_rectangular_mesh(nx, ny, args.domain.domain)?
        }
        FamilyArg::Delaunay => {
            let r = args
                .resolution
                .ok_or_else(|| anyhow!("--resolution is required for the delaunay family"))?;
            build_delaunay_mesh(r, args.jitter, args.seed, args.domain.domain)?
        }
    };
    let tmp = args.output.with_extension("tmp");
    export_mesh(&mesh, &tmp)?;
    std::fs::rename(&tmp, &args.output)?;
    eprintln!(
        "wrote {} ({} cells, {} edges, theta = {})",
        args.output.display(),
        mesh.cell_count(),
        mesh.edge_count(),
        mesh.theta()
    );
    Ok(())
}

fn mesh_check(args: MeshCheckArgs) -> Result<()> {
    let options = ImportOptions { theta_min: args.theta_min, allow_invalid: true, ..ImportOptions::default() };
    let (mesh, _) = import_mesh_with(&args.input, &options)
        .with_context(|| format!("importing {}", args.input.display()))?;
    let report = validate_admissibility(&mesh, args.theta_min);
    let mut sink = OutputSink::new(args.output.as_deref(), args.format, &config_echo(), 0)?;
    sink.validation_report(&report)?;
    sink.finish()?;
    if !report.is_admissible() && !args.allow_invalid {
        bail!("mesh is inadmissible: {} violations", report.violations.len());
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let case = args.target.case()?;
    let mesh = args.target.build_mesh()?;
    let alpha = parse_alpha(&args.alpha)?;
    let (u, system, _coeffs, stats) = solve_case(
        &case,
        &mesh,
        args.variant.into(),
        args.alpha_rule.into(),
        alpha,
        args.solver.config(),
    )?;
    if let Some(path) = &args.dump_matrix {
        let tmp = path.with_extension("tmp");
        let mut file = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        let note = format!(
            "fv {}; config: {}; seed: {}",
            env!("CARGO_PKG_VERSION"),
            config_echo(),
            args.target.seed
        );
        system.matrix.write_matrix_market(&mut file, Some(&note))?;
        drop(file);
        std::fs::rename(&tmp, path)?;
    }
    let mut sink = OutputSink::new(args.output.as_deref(), args.format, &config_echo(), args.target.seed)?;
    sink.solution(&mesh, u.values())?;
    sink.finish()?;
    eprintln!(
        "solved {} on {} cells: {} iterations, relative residual {:.3e}",
        case.name,
        mesh.cell_count(),
        stats.iterations,
        stats.final_relative_residual
    );
    if let Some(exact) = &case.problem.exact {
        let err = fv_core::discrete::l2_error_at_centers(&u, |p| exact(p))?;
        eprintln!("L2 error against the exact solution: {err:.6e}");
    }
    Ok(())
}

fn convergence(args: ConvergenceArgs) -> Result<()> {
    let case = args.target.case()?;
    let levels: Vec<usize> = args.levels.iter().flatten().copied().collect();
    if levels.len() < 3 {
        bail!("give at least 3 levels, e.g. --levels 10,20,40,80");
    }
    let family = match args.target.mesh {
        Some(FamilyArg::Rect) | None => MeshFamily::Rectangular,
        Some(FamilyArg::Delaunay) => {
            MeshFamily::Delaunay { jitter: args.target.jitter, seed: args.target.seed }
        }
    };
    let alpha = parse_alpha(&args.alpha)?;
    let report = run_convergence_parallel(
        &case,
        family,
        &levels,
        alpha,
        args.variant.into(),
        args.solver.config(),
        worker_cap(),
    )?;
    let mut sink = OutputSink::new(args.output.as_deref(), args.format, &config_echo(), args.target.seed)?;
    sink.convergence(&report)?;
    sink.finish()?;
    eprintln!("eoc_u = {}, eoc_grad = {}", report.eoc_u, report.eoc_grad);
    Ok(())
}

fn sweep(args: AlphaSweepArgs) -> Result<()> {
    let case = args.target.case()?;
    let mesh = args.target.build_mesh()?;
    let alphas: Vec<f64> = args.alphas.iter().flatten().copied().collect();
    if alphas.is_empty() {
        bail!("give an alpha grid, e.g. --alphas 0.25,0.5,1.0,1.5,2.0,2.5");
    }
    let rows = alpha_sweep(&case, &mesh, &alphas, args.solver.config());
    let mut sink = OutputSink::new(args.output.as_deref(), args.format, &config_echo(), args.target.seed)?;
    sink.alpha_sweep(&rows)?;
    sink.finish()?;
    if let Some(best) = fv_core::verify::argmin_alpha(&rows) {
        eprintln!("argmin alpha = {} (err_u = {:.6e})", rows[best].alpha, rows[best].err_u);
    }
    Ok(())
}

fn properties(args: PropertiesArgs) -> Result<()> {
    let mesh: Arc<Mesh<2>> = if let Some(path) = &args.input {
        let (mesh, _) = import_mesh_with(path, &ImportOptions::default())?;
        Arc::new(mesh)
    } else {
        match args.mesh {
            Some(FamilyArg::Rect) => {
                let n = args.n.ok_or_else(|| anyhow!("--n is required with --mesh rect"))?;
                Arc::new(build_rectangular_mesh(n, n, Rect::UNIT)?)
            }
            Some(FamilyArg::Delaunay) => {
                let r = args
                    .resolution
                    .ok_or_else(|| anyhow!("--resolution is required with --mesh delaunay"))?;
                Arc::new(build_delaunay_mesh(r, args.jitter, args.seed, Rect::UNIT)?)
            }
            None => bail!("give either --mesh <family> or --input <mesh.json>"),
        }
    };
    let report = property_suite(&mesh, PropertyConfig { seed: args.seed, field_samples: args.samples });
    for entry in &report.entries {
        println!(
            "{:<45} {}  (worst {:.3e}, tolerance {:.3e})",
            entry.name,
            if entry.passed { "pass" } else { "FAIL" },
            entry.worst,
            entry.tolerance
        );
    }
    if !report.all_passed() {
        bail!("property suite failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    // Usage errors exit with code 2 via clap; computational failures land
    // here and map to 1.
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
