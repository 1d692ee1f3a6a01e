//! Command-line front end for convergence studies.
//!
//! `parse_config` turns arguments into a [`StudyConfig`]; `run` executes it,
//! writing a CSV table, gnuplot data and optionally VTK files with von Mises
//! cell fields.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use vemrcp::mesh::{generate_mesh, load_mesh};
use vemrcp::report::{write_csv, write_dat, write_vtk};
use vemrcp::verification::{
    level_errors, manufactured_case, observed_rate, patch_test, solve_level, LevelSolution,
    StudyOptions,
};
use vemrcp::{
    ConvergenceRecord, LameMaterial, ManufacturedCase, MeshFamily, PolygonalMesh, StressMethod,
    TestId,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_FAILURE: u8 = 2;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "VEMRCP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "vemrcp", version, about = "VEM plane elasticity with RCP stress recovery")]
struct Args {
    /// Manufactured solution: a, b or c.
    #[arg(long, value_parser = parse_test, required_unless_present = "patch_test")]
    test: Option<TestId>,

    /// Comma-separated mesh families (default: all eight).
    #[arg(long = "family", value_delimiter = ',', num_args = 1)]
    families: Option<Vec<String>>,

    /// Number of refinement levels.
    #[arg(long, default_value_t = 4)]
    levels: usize,

    /// Subdivisions per side on level 0; each level doubles it.
    #[arg(long, default_value_t = 8)]
    base_subdivisions: usize,

    /// Seed for the unstructured generators.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Comma-separated stress methods: vem, rcp0, rcp1.
    #[arg(long, value_delimiter = ',', num_args = 1, default_value = "vem,rcp0,rcp1")]
    methods: Vec<String>,

    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    lambda: f64,

    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    mu: f64,

    /// Solve on this mesh instead of generated ones.
    #[arg(long, conflicts_with = "families")]
    mesh_file: Option<PathBuf>,

    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,

    /// Run the constant-stress patch test on every family instead of a study.
    #[arg(long)]
    patch_test: bool,

    /// Also write von Mises cell fields as VTK files.
    #[arg(long)]
    vtk: bool,

    /// Record wall times in the CSV (otherwise written as 0 so that output
    /// is reproducible bit for bit).
    #[arg(long)]
    timing: bool,
}

fn parse_test(s: &str) -> Result<TestId, String> {
    s.parse().map_err(|e: vemrcp::Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Study(TestId),
    PatchTest,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Generated(Vec<MeshFamily>),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub mode: Mode,
    pub meshes: MeshSource,
    pub levels: usize,
    pub base_subdivisions: usize,
    pub seed: u64,
    pub methods: Vec<StressMethod>,
    pub material: LameMaterial,
    pub out: PathBuf,
    pub vtk: bool,
    pub timing: bool,
}

impl StudyConfig {
    pub fn subdivisions(&self, level: usize) -> usize {
        self.base_subdivisions << level
    }
}

#[derive(Debug)]
pub enum ConfigError {
    /// `--help` or `--version`: print and exit successfully.
    Info(String),
    Usage(String),
}

impl ConfigError {
    pub fn exit_code(&self) -> u8 {
        match self {
            ConfigError::Info(_) => EXIT_OK,
            ConfigError::Usage(_) => EXIT_USAGE,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            ConfigError::Info(m) | ConfigError::Usage(m) => m,
        }
    }
}

pub fn parse_config<I, T>(args: I) -> Result<StudyConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(args).map_err(|e| {
        let text = e.render().to_string();
        match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                ConfigError::Info(text)
            }
            _ => ConfigError::Usage(text),
        }
    })?;
    let usage = |m: String| ConfigError::Usage(format!("error: {m}\n\nFor more information, try '--help'.\n"));

    let meshes = match (&args.mesh_file, &args.families) {
        (Some(path), _) => MeshSource::File(path.clone()),
        (None, None) => MeshSource::Generated(MeshFamily::GENERATED.to_vec()),
        (None, Some(names)) => {
            let mut families = Vec::new();
            for name in names.iter().map(|n| n.trim()).filter(|n| !n.is_empty()) {
                let family: MeshFamily = name.parse().map_err(|e| usage(format!("{e}")))?;
                if family == MeshFamily::External {
                    return Err(usage("use --mesh-file for external meshes".into()));
                }
                if !families.contains(&family) {
                    families.push(family);
                }
            }
            if families.is_empty() {
                return Err(usage("--family needs at least one mesh family".into()));
            }
            MeshSource::Generated(families)
        }
    };

    let mut methods = Vec::new();
    for name in args.methods.iter().map(|n| n.trim()).filter(|n| !n.is_empty()) {
        let m: StressMethod = name.parse().map_err(|e| usage(format!("{e}")))?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(usage("--methods needs at least one of vem, rcp0, rcp1".into()));
    }
    methods.sort();

    if args.levels == 0 {
        return Err(usage("--levels must be at least 1".into()));
    }
    if args.base_subdivisions == 0 {
        return Err(usage("--base-subdivisions must be at least 1".into()));
    }
    if args.levels > 12 || args.base_subdivisions.checked_shl(args.levels as u32 - 1).is_none_or(|n| n > 4096) {
        return Err(usage("refinement too deep: at most 4096 subdivisions per side".into()));
    }
    let material = LameMaterial::new(args.lambda, args.mu).map_err(|e| usage(e.to_string()))?;

    let mode = match (args.patch_test, args.test) {
        (true, _) => Mode::PatchTest,
        (false, Some(t)) => Mode::Study(t),
        (false, None) => return Err(usage("--test is required".into())),
    };

    Ok(StudyConfig {
        mode,
        meshes,
        levels: args.levels,
        base_subdivisions: args.base_subdivisions,
        seed: args.seed,
        methods,
        material,
        out: args.out,
        vtk: args.vtk,
        timing: args.timing,
    })
}

/// Applies `VEMRCP_THREADS` to the global worker pool.
pub fn configure_threads(value: Option<&str>) -> Result<(), String> {
    let Some(value) = value else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

/// What a run produced.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub records: Vec<ConvergenceRecord>,
    pub failures: Vec<String>,
    pub files: Vec<PathBuf>,
    /// Human-readable report printed by the binary.
    pub report: String,
}

impl RunSummary {
    pub fn exit_code(&self) -> u8 {
        if self.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_FAILURE
        }
    }
}

pub fn csv_path(config: &StudyConfig, test: TestId) -> PathBuf {
    config.out.join(format!("test_{test}.csv"))
}

fn vtk_path(out: &Path, test: TestId, family: MeshFamily, level: usize) -> PathBuf {
    out.join(format!("test_{test}_{family}_level{level}.vtk"))
}

fn format_error(e: Option<f64>) -> String {
    e.map_or_else(|| "-".into(), |e| format!("{e:.6e}"))
}

/// Executes the configuration. Failures of individual levels are collected
/// in the summary and do not stop the run; I/O failures on the result files
/// are returned as errors.
pub fn run(config: &StudyConfig) -> vemrcp::Result<RunSummary> {
    std::fs::create_dir_all(&config.out)?;
    match config.mode {
        Mode::PatchTest => run_patch_test(config),
        Mode::Study(test) => run_study(config, test),
    }
}

fn mesh_for(config: &StudyConfig, family: Option<MeshFamily>, level: usize) -> vemrcp::Result<PolygonalMesh> {
    match (&config.meshes, family) {
        (MeshSource::File(path), _) => Ok(load_mesh(path)?),
        (MeshSource::Generated(_), Some(f)) => Ok(generate_mesh(f, config.subdivisions(level), config.seed)?),
        (MeshSource::Generated(_), None) => unreachable!("generated meshes need a family"),
    }
}

fn run_patch_test(config: &StudyConfig) -> vemrcp::Result<RunSummary> {
    let mut summary = RunSummary::default();
    let families: Vec<Option<MeshFamily>> = match &config.meshes {
        MeshSource::Generated(f) => f.iter().copied().map(Some).collect(),
        MeshSource::File(_) => vec![None],
    };
    let mut report = String::new();
    for family in families {
        let label = family.map_or_else(|| "external".to_string(), |f| f.to_string());
        let outcome = mesh_for(config, family, 0).and_then(|m| patch_test(&m, &config.material));
        match outcome {
            Ok(r) => {
                let pass = r.passes(1e-10, 1e-18);
                writeln!(
                    report,
                    "{label:8} u_err={:.3e} E_vem={:.3e} E_rcp0={:.3e} E_rcp1={:.3e} {}",
                    r.displacement_error,
                    r.errors[0],
                    r.errors[1],
                    r.errors[2],
                    if pass { "ok" } else { "FAIL" }
                )
                .unwrap();
                if !pass {
                    summary.failures.push(format!("patch test failed on {label}"));
                }
            }
            Err(e) => {
                writeln!(report, "{label:8} error: {e}").unwrap();
                summary.failures.push(format!("{label}: {e}"));
            }
        }
    }
    report.push_str(if summary.failures.is_empty() { "PASS\n" } else { "FAIL\n" });
    summary.report = report;
    Ok(summary)
}

fn von_mises_fields(
    mesh: &PolygonalMesh,
    case: &ManufacturedCase,
    solution: &LevelSolution<'_>,
    methods: &[StressMethod],
) -> Vec<(String, Vec<f64>)> {
    let at_centroids = |f: &dyn Fn(usize, vemrcp::Point2) -> vemrcp::Stress| -> Vec<f64> {
        (0..mesh.num_cells())
            .map(|c| case.material.von_mises(&f(c, mesh.polygon_centroid(c))))
            .collect()
    };
    let mut fields: Vec<(String, Vec<f64>)> = methods
        .iter()
        .map(|&m| {
            let values = at_centroids(&|c, p| solution.stress(m, c, p).expect("method was computed"));
            (format!("vm_{m}"), values)
        })
        .collect();
    fields.push(("vm_exact".into(), at_centroids(&|_, p| case.stress(p))));
    fields
}

fn run_level(
    config: &StudyConfig,
    case: &ManufacturedCase,
    family: Option<MeshFamily>,
    level: usize,
    files: &mut Vec<PathBuf>,
) -> vemrcp::Result<ConvergenceRecord> {
    let start = Instant::now();
    let mesh = mesh_for(config, family, level)?;
    let solution = solve_level(&mesh, case, &config.methods, &StudyOptions::default())?;
    let mut errors = level_errors(&mesh, case, &solution);
    for m in StressMethod::ALL {
        if !config.methods.contains(&m) {
            errors[m as usize] = None;
        }
    }
    if config.vtk {
        let fields = von_mises_fields(&mesh, case, &solution, &config.methods);
        let named: Vec<(&str, &[f64])> = fields.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
        let path = vtk_path(&config.out, case.id, mesh.family(), level);
        write_vtk(&mesh, &named, &path)?;
        files.push(path);
    }
    Ok(ConvergenceRecord {
        test: case.id,
        family: mesh.family(),
        level,
        h_e: mesh.average_edge_length(),
        dofs: 2 * mesh.num_vertices(),
        errors,
        time_s: if config.timing { start.elapsed().as_secs_f64() } else { 0.0 },
    })
}

fn run_study(config: &StudyConfig, test: TestId) -> vemrcp::Result<RunSummary> {
    let case = manufactured_case(test, config.material);
    let mut summary = RunSummary::default();
    let plan: Vec<(Option<MeshFamily>, usize)> = match &config.meshes {
        MeshSource::Generated(families) => families
            .iter()
            .flat_map(|&f| (0..config.levels).map(move |l| (Some(f), l)))
            .collect(),
        MeshSource::File(_) => vec![(None, 0)],
    };

    let mut report = String::new();
    writeln!(
        report,
        "{:<8} {:>5} {:>12} {:>8} {:>13} {:>13} {:>13}",
        "family", "level", "h_e", "dofs", "E_vem", "E_rcp0", "E_rcp1"
    )
    .unwrap();
    for (family, level) in plan {
        match run_level(config, &case, family, level, &mut summary.files) {
            Ok(r) => {
                writeln!(
                    report,
                    "{:<8} {:>5} {:>12.6e} {:>8} {:>13} {:>13} {:>13}",
                    r.family.name(),
                    r.level,
                    r.h_e,
                    r.dofs,
                    format_error(r.error(StressMethod::Vem)),
                    format_error(r.error(StressMethod::Rcp0)),
                    format_error(r.error(StressMethod::Rcp1)),
                )
                .unwrap();
                summary.records.push(r);
            }
            Err(e) => {
                let label = family.map_or_else(|| "external".to_string(), |f| f.to_string());
                log::error!("test {test}, {label}, level {level}: {e}");
                writeln!(report, "{label:<8} {level:>5} failed: {e}").unwrap();
                summary.failures.push(format!("{label} level {level}: {e}"));
            }
        }
    }

    let csv = csv_path(config, test);
    write_csv(&summary.records, &csv)?;
    summary.files.push(csv);
    let dat = config.out.join(format!("test_{test}.dat"));
    write_dat(&summary.records, &dat)?;
    summary.files.push(dat);

    writeln!(report, "\nobserved rates (slope of log E against log h_e)").unwrap();
    let mut families: Vec<MeshFamily> = summary.records.iter().map(|r| r.family).collect();
    families.dedup();
    for family in families {
        let rows: Vec<ConvergenceRecord> = summary
            .records
            .iter()
            .filter(|r| r.family == family)
            .cloned()
            .collect();
        let mut line = format!("{:<8}", family.name());
        for &m in &config.methods {
            match observed_rate(&rows, m) {
                Ok(rate) => {
                    let flag = if rate.monotone { "" } else { " (non-monotone)" };
                    write!(line, "  {m}={:.3}{flag}", rate.slope).unwrap();
                }
                Err(_) => write!(line, "  {m}=-").unwrap(),
            }
        }
        writeln!(report, "{line}").unwrap();
    }
    summary.report = report;
    Ok(summary)
}

/// The whole program behind `main`: parses `args`, applies the thread cap,
/// runs and reports. Returns the process exit code.
pub fn run_main<I, T>(args: I, threads: Option<&str>, stdout: &mut dyn io::Write, stderr: &mut dyn io::Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match parse_config(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = if e.exit_code() == EXIT_OK {
                write!(stdout, "{}", e.message())
            } else {
                write!(stderr, "{}", e.message())
            };
            return e.exit_code();
        }
    };
    if let Err(e) = configure_threads(threads) {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_USAGE;
    }
    match run(&config) {
        Ok(summary) => {
            let _ = write!(stdout, "{}", summary.report);
            for path in &summary.files {
                log::info!("wrote {}", path.display());
            }
            for failure in &summary.failures {
                let _ = writeln!(stderr, "failed: {failure}");
            }
            summary.exit_code()
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_FAILURE
        }
    }
}


#[cfg(test)]
mod end_to_end;
