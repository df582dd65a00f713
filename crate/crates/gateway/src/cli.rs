//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use stacksim::cooling::{emit_pattern, generate_pattern, Coolant, PatternStyle};
use stacksim::design::{Design, DesignDocument, LoadError};
use stacksim::dse::SweepConfig;
use stacksim::floorplan::{emit_floorplan, generate_from_areas, generate_template_from, AreaBudget, Template};
use stacksim::par::Execution;
use stacksim::pipeline::Artifact;
use stacksim::stack::{grid_for, DieOutline};

use crate::config::{parse_execution, ServiceConfig, CONFIG_ENV};
use crate::output;

/// Input was rejected by validation.
pub const EXIT_INVALID: i32 = 2;
/// The run itself failed.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "stacksim", version, about = "Thermal simulation and design-space exploration for 3D stacks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state simulation of a design manifest.
    Run(RunArgs),
    /// Design-space sweep of a design manifest.
    Sweep(RunArgs),
    /// Floorplan tools.
    Floorplan {
        #[command(subcommand)]
        command: FloorplanCommand,
    },
    /// Cooling pattern tools.
    Cooling {
        #[command(subcommand)]
        command: CoolingCommand,
    },
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Design manifest.
    pub manifest: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// `parallel` or `sequential`.
    #[arg(long, default_value = "parallel", value_parser = execution_arg)]
    pub execution: Execution,
}

#[derive(Debug, Subcommand)]
pub enum FloorplanCommand {
    /// Generate a floorplan from a template or an area budget.
    Gen(FloorplanGenArgs),
}

#[derive(Debug, Args)]
pub struct FloorplanGenArgs {
    /// Die outline `WIDTHxHEIGHT` in metres.
    #[arg(long, value_parser = pair::<f64>)]
    pub outline: (f64, f64),
    /// `core_grid` or `bank_grid`.
    #[arg(long, conflicts_with = "areas", required_unless_present = "areas")]
    pub template: Option<String>,
    #[arg(long, requires = "template")]
    pub count: Option<usize>,
    #[arg(long)]
    pub prefix: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub first_index: usize,
    /// Area budget file of `name area_m2 [aspect]` lines.
    #[arg(long)]
    pub areas: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CoolingCommand {
    /// Generate a channel pattern.
    Gen(CoolingGenArgs),
}

#[derive(Debug, Args)]
pub struct CoolingGenArgs {
    /// `vertical`, `horizontal` or `bent90`.
    #[arg(long)]
    pub style: String,
    /// Grid `ROWSxCOLS`.
    #[arg(long, value_parser = pair::<usize>)]
    pub grid: (usize, usize),
    /// Die outline `WIDTHxHEIGHT` in metres.
    #[arg(long, value_parser = pair::<f64>)]
    pub outline: (f64, f64),
    /// Channel width, m.
    #[arg(long)]
    pub width: f64,
    /// Channel pitch, m.
    #[arg(long)]
    pub pitch: f64,
    /// Channel layer thickness, m.
    #[arg(long, default_value_t = 1.0e-4)]
    pub thickness: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Config file of `key value` lines; also read from the environment.
    #[arg(long, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub bind: Option<std::net::SocketAddr>,
    #[arg(long)]
    pub state_dir: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_parser = execution_arg)]
    pub execution: Option<Execution>,
}

fn execution_arg(s: &str) -> Result<Execution, String> {
    parse_execution(s).ok_or_else(|| format!("expected 'parallel' or 'sequential', found '{s}'"))
}

fn pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let (a, b) = s.split_once('x').ok_or_else(|| format!("expected '<a>x<b>', found '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<T>().map_err(|_| format!("invalid value '{v}' in '{s}'"));
    Ok((parse(a)?, parse(b)?))
}

/// A failure with its exit code; `lines` go to stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub lines: Vec<String>,
}

impl CliError {
    fn invalid(lines: Vec<String>) -> Self {
        CliError { code: EXIT_INVALID, lines }
    }

    fn failed(message: impl Into<String>) -> Self {
        CliError { code: EXIT_FAILURE, lines: vec![message.into()] }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => run_simulation(&a),
        Command::Sweep(a) => run_sweep(&a),
        Command::Floorplan { command: FloorplanCommand::Gen(a) } => floorplan_gen(&a),
        Command::Cooling { command: CoolingCommand::Gen(a) } => cooling_gen(&a),
        Command::Serve(a) => serve(&a),
    }
}

/// Loads and validates a manifest, reporting every violation.
pub fn load_design(manifest: &Path) -> Result<Design, CliError> {
    let doc = DesignDocument::load(manifest).map_err(|e| match e {
        LoadError::Manifest(_) => CliError::invalid(vec![format!("{}: {e}", manifest.display())]),
        LoadError::Io { .. } => CliError::failed(e.to_string()),
    })?;
    Design::from_document(&doc).map_err(|v| CliError::invalid(v.iter().map(ToString::to_string).collect()))
}

fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::failed(format!("{}: {e}", dir.display())))?;
    for a in artifacts {
        let path = dir.join(&a.file_name);
        std::fs::write(&path, &a.contents).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn config(execution: Execution) -> SweepConfig {
    let mut c = SweepConfig { execution, ..Default::default() };
    c.solver.execution = execution;
    c
}

fn run_simulation(a: &RunArgs) -> Result<(), CliError> {
    let design = load_design(&a.manifest)?;
    let (out, result) = output::simulate(&design, &config(a.execution)).map_err(|e| CliError::failed(e.to_string()))?;
    write_artifacts(&a.out, out.artifacts())?;
    println!(
        "max {:.4} K, energy balance error {:.2e}",
        result.summary.stack_max,
        result.energy.relative_error()
    );
    Ok(())
}

fn run_sweep(a: &RunArgs) -> Result<(), CliError> {
    let design = load_design(&a.manifest)?;
    let progress = |done: usize, total: usize| eprintln!("[{done}/{total}]");
    let out = output::sweep(&design, &config(a.execution), &progress).map_err(|e| CliError::failed(e.to_string()))?;
    write_artifacts(&a.out, out.artifacts())?;
    if let output::RunOutput::Sweep { report, .. } = &out {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::failed(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn floorplan_gen(a: &FloorplanGenArgs) -> Result<(), CliError> {
    let outline = DieOutline::new(a.outline.0, a.outline.1);
    let fp = if let Some(path) = &a.areas {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))?;
        let budget = AreaBudget::parse(&text).map_err(|e| CliError::invalid(vec![format!("{}:{e}", path.display())]))?;
        generate_from_areas(outline, &budget).map_err(|e| CliError::invalid(vec![e.to_string()]))?
    } else {
        let name = a.template.as_deref().unwrap_or_default();
        let template = Template::parse(name)
            .ok_or_else(|| CliError::invalid(vec![format!("unknown template '{name}'")]))?;
        let count = a.count.filter(|&n| n > 0).ok_or_else(|| CliError::invalid(vec!["--count must be positive".into()]))?;
        let prefix = a.prefix.as_deref().unwrap_or(template.default_prefix());
        generate_template_from(outline, template, count, prefix, a.first_index)
    };
    emit(a.out.as_deref(), &emit_floorplan(&fp))
}

fn cooling_gen(a: &CoolingGenArgs) -> Result<(), CliError> {
    let style = PatternStyle::parse(&a.style)
        .ok_or_else(|| CliError::invalid(vec![format!("unknown style '{}'", a.style)]))?;
    let grid = grid_for(DieOutline::new(a.outline.0, a.outline.1), a.grid.0, a.grid.1)
        .map_err(|e| CliError::invalid(vec![e.to_string()]))?;
    let pattern = generate_pattern(&grid, style, a.width, a.pitch, Coolant::water(a.width, a.thickness))
        .map_err(|e| CliError::invalid(vec![e.to_string()]))?;
    emit(a.out.as_deref(), &emit_pattern(&pattern))
}

pub fn service_config(a: &ServeArgs) -> Result<ServiceConfig, CliError> {
    let mut c = match &a.config {
        Some(p) => ServiceConfig::load(p).map_err(|e| CliError::invalid(vec![e.to_string()]))?,
        None => ServiceConfig::default(),
    };
    if let Some(b) = a.bind {
        c.bind = b;
    }
    if let Some(d) = &a.state_dir {
        c.state_dir = d.clone();
    }
    if let Some(w) = a.workers {
        if w == 0 {
            return Err(CliError::invalid(vec!["--workers must be positive".into()]));
        }
        c.workers = w;
    }
    if let Some(e) = a.execution {
        c.execution = e;
    }
    Ok(c)
}

fn serve(a: &ServeArgs) -> Result<(), CliError> {
    let c = service_config(a)?;
    let store = crate::store::Store::open(&c.state_dir)
        .map_err(|e| CliError::failed(format!("state directory {}: {e}", c.state_dir.display())))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::failed(e.to_string()))?;
    rt.block_on(async move {
        let jobs = crate::jobs::JobManager::recover(store, c.workers, config(c.execution))
            .map_err(|e| CliError::failed(format!("loading jobs: {e}")))?;
        let app = crate::api::router(crate::api::AppState::new(jobs));
        let listener = tokio::net::TcpListener::bind(c.bind)
            .await
            .map_err(|e| CliError::failed(format!("bind {}: {e}", c.bind)))?;
        eprintln!("listening on {} (state {})", c.bind, c.state_dir.display());
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::failed(e.to_string()))
    })
}
