use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand};

use mawet::experiments::{
    nearfield_probability, read_results, sidecar_path, summarize, write_nearfield, write_results, write_summary,
    Architecture, Experiment, ExperimentConfig, ExperimentRecord, InstanceSpec, Settings,
};
use mawet::sgpso::PsoScale;
use mawet::Error;

/// Movable-antenna power beacon optimization and sweeps.
#[derive(Parser)]
#[command(name = "mawet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a single instance and print its record as JSON.
    Optimize(OptimizeArgs),
    /// Sweep the antenna count (default N = 4, 9, 16).
    SweepN(SweepArgs),
    /// Sweep the device count (default K = 1, 2, 3 at N = 9).
    SweepK(SweepArgs),
    /// Near-field likelihood over device areas (default a_x = a_y = 2, 4, 8, 16 m).
    Nearfield(SweepArgs),
    /// Aggregate result CSVs into per-configuration means.
    Plotdata(PlotdataArgs),
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Config file (TOML, or JSON by extension).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Architectures, comma separated.
    #[arg(long, value_delimiter = ',')]
    arch: Option<Vec<Architecture>>,
    /// Antenna counts, comma separated.
    #[arg(long = "n", value_delimiter = ',')]
    n_antennas: Option<Vec<usize>>,
    /// Device counts, comma separated.
    #[arg(long = "k", value_delimiter = ',')]
    n_devices: Option<Vec<usize>>,
    /// Device plane widths along x (and y unless --ay is given), comma separated.
    #[arg(long, value_delimiter = ',')]
    ax: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    ay: Option<Vec<f64>>,
    #[arg(long)]
    az: Option<f64>,
    #[arg(long)]
    deployments: Option<usize>,
    #[arg(long, value_parser = parse_scale)]
    pso_scale: Option<PsoScale>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Randomization candidates per power allocation.
    #[arg(long)]
    candidates: Option<usize>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Deployment index.
    #[arg(long, default_value_t = 0)]
    deployment: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    seed: u64,
    /// Results CSV; sidecars go next to it.
    #[arg(long)]
    out: PathBuf,
    /// Also write every record (layouts, traces) as JSON.
    #[arg(long)]
    full: bool,
    /// Suppress per-instance progress.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct PlotdataArgs {
    /// Result CSVs.
    #[arg(long = "in", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_scale(s: &str) -> Result<PsoScale, String> {
    match s {
        "desk" => Ok(PsoScale::Desk),
        "paper" => Ok(PsoScale::Paper),
        _ => Err(format!("expected 'desk' or 'paper', got '{s}'")),
    }
}

#[derive(Clone, Copy)]
enum Preset {
    Single,
    SweepN,
    SweepK,
    Nearfield,
}

fn build_config(o: &Overrides, seed: u64, preset: Preset) -> Result<ExperimentConfig, Error> {
    let mut c = match &o.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    c.seed = Some(seed);
    match preset {
        Preset::Single => {}
        Preset::SweepN => {
            c.n_antennas.get_or_insert_with(|| vec![4, 9, 16].into());
        }
        Preset::SweepK => {
            c.n_devices.get_or_insert_with(|| vec![1, 2, 3].into());
        }
        Preset::Nearfield => {
            c.a_x.get_or_insert_with(|| vec![2.0, 4.0, 8.0, 16.0].into());
            c.n_antennas.get_or_insert_with(|| vec![4, 9, 16].into());
        }
    }
    if let Some(v) = &o.arch {
        c.architecture = Some(v.clone().into());
    }
    if let Some(v) = &o.n_antennas {
        c.n_antennas = Some(v.clone().into());
    }
    if let Some(v) = &o.n_devices {
        c.n_devices = Some(v.clone().into());
    }
    if let Some(v) = &o.ax {
        c.a_x = Some(v.clone().into());
        if o.ay.is_none() {
            c.a_y = None;
        }
    }
    if let Some(v) = &o.ay {
        c.a_y = Some(v.clone().into());
    }
    c.a_z = o.az.or(c.a_z);
    c.n_deployments = o.deployments.or(c.n_deployments);
    c.pso_scale = o.pso_scale.or(c.pso_scale);
    c.pso_particles = o.particles.or(c.pso_particles);
    c.pso_iterations = o.iterations.or(c.pso_iterations);
    c.randomization_count = o.candidates.or(c.randomization_count);
    Ok(c)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("MAWET_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("MAWET_THREADS must be a non-negative integer, got '{v}'")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn optimize(args: &OptimizeArgs) -> Result<ExitCode, Error> {
    // One instance: the first value of every axis.
    let config = build_config(&args.overrides, args.seed, Preset::Single)?;
    let settings = Settings::resolve(&ExperimentConfig { n_deployments: Some(args.deployment + 1), ..config })?;
    let exp = Experiment::new(settings)?;
    let s = exp.settings();
    let spec = InstanceSpec {
        architecture: s.architectures[0],
        n_antennas: s.n_antennas[0],
        n_devices: s.n_devices[0],
        area: s.areas[0],
        deployment: args.deployment,
    };
    let deployment = exp.deployment(spec.area, spec.n_devices, spec.deployment)?;
    let record = exp.run_instance(&spec, &deployment);
    let json = serde_json::to_string_pretty(&record).expect("record serializes");
    // A closed pipe downstream is not an error worth reporting.
    let _ = writeln!(std::io::stdout(), "{json}");
    if let Some(msg) = &record.failure {
        eprintln!("solver failure: {msg}");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: &SweepArgs, preset: Preset) -> Result<ExitCode, Error> {
    let config = build_config(&args.overrides, args.seed, preset)?;
    let exp = Experiment::from_config(&config)?;
    let total = exp.instances().len();
    let done = AtomicUsize::new(0);
    let quiet = args.quiet;
    let records = exp.sweep_with(|r: &ExperimentRecord| {
        let i = done.fetch_add(1, Ordering::Relaxed) + 1;
        if !quiet {
            match &r.failure {
                None => eprintln!(
                    "[{i}/{total}] {} N={} K={} area={}x{} d={} p_T={:.6e} W ({:.1} s)",
                    r.architecture, r.n_antennas, r.n_devices, r.a_x, r.a_y, r.deployment, r.p_t, r.wall_s
                ),
                Some(msg) => eprintln!(
                    "[{i}/{total}] {} N={} K={} d={} failed: {msg}",
                    r.architecture, r.n_antennas, r.n_devices, r.deployment
                ),
            }
        }
    })?;
    write_results(&records, exp.settings(), &args.out, args.full)?;
    if matches!(preset, Preset::Nearfield) {
        write_nearfield(&nearfield_probability(&records), &sidecar_path(&args.out, "nearfield.csv"))?;
    }
    let failures = records.iter().filter(|r| !r.is_success()).count();
    if failures > 0 {
        eprintln!("{failures} of {} instances failed", records.len());
    }
    if !records.is_empty() && failures == records.len() {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn plotdata(args: &PlotdataArgs) -> Result<ExitCode, Error> {
    let mut rows = Vec::new();
    for path in &args.inputs {
        rows.extend(read_results(path)?);
    }
    write_summary(&summarize(&rows), &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Csv { .. } => 3,
        Error::Config(_) | Error::InvalidParameter(_) => 1,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    configure_threads()?;
    match &cli.command {
        Command::Optimize(a) => optimize(a),
        Command::SweepN(a) => sweep(a, Preset::SweepN),
        Command::SweepK(a) => sweep(a, Preset::SweepK),
        Command::Nearfield(a) => sweep(a, Preset::Nearfield),
        Command::Plotdata(a) => plotdata(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
