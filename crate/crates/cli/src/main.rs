//! `otfs-sim`: command-line front end for the OTFS pilot-scheme simulator.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use otfs_core::dd::Scheme;
use otfs_core::experiments::{
    load_config, profile_spec, run_sweep, write_csv, write_iteration_table, write_snr_table, write_trace, PlotMetric, Profile,
    SweepResult, SweepSpec,
};
use otfs_core::pilot::overhead;
use otfs_core::selftest::{find_identity, run_selftest, Fault, IDENTITIES};
use otfs_core::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "otfs-sim", version, about = "OTFS link-level simulator for embedded and split delay-Doppler pilots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a Monte-Carlo sweep and write CSV, plot tables and a manifest.
    Sweep(SweepArgs),
    /// Check the transceiver's algebraic identities.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset: fig2, fig3, fig4, fig5 or custom.
    #[arg(long, value_parser = parse_profile)]
    profile: Option<Profile>,
    /// Scheme name (full, reduced, split) or `all`; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<String>,
    /// SNR points in dB, comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Vec<f64>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum refinement iterations.
    #[arg(long)]
    iters: Option<usize>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Print the identity names without running them.
    #[arg(long)]
    list: bool,
    /// Run only the named identity.
    #[arg(long)]
    only: Option<String>,
    /// Inject a known bug to check that the suite catches it.
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    Profile::parse(s).map_err(|e| e.to_string())
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numeric(_) | Error::UndefinedNmse => EXIT_NUMERIC,
            Error::Io(_) => EXIT_USAGE,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(f) = configure_threads() {
        eprintln!("error: {}", f.message);
        return ExitCode::from(f.code);
    }
    let outcome = match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Selftest(args) => cmd_selftest(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("OTFS_SIM_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| Failure::usage(format!("OTFS_SIM_THREADS must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(Failure::usage("OTFS_SIM_THREADS must be a positive integer, got `0`"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::usage(e.to_string()))
}

fn parse_schemes(names: &[String]) -> Result<Vec<Scheme>, Failure> {
    let mut out = Vec::new();
    for n in names {
        let list = if n.trim().eq_ignore_ascii_case("all") {
            Scheme::ALL.to_vec()
        } else {
            vec![Scheme::parse(n).map_err(|e| Failure::usage(e.to_string()))?]
        };
        for s in list {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// Profile, then config file, then command-line flags.
fn resolve(args: &SweepArgs) -> Result<(Profile, SweepSpec, PathBuf), Failure> {
    let (profile, mut spec, config_out) = match &args.config {
        Some(path) => {
            if !path.exists() {
                return Err(Failure { code: EXIT_CONFIG, message: format!("config file {} does not exist", path.display()) });
            }
            let loaded = load_config(path, args.profile).map_err(|e| Failure { code: EXIT_CONFIG, message: e.to_string() })?;
            (loaded.profile, loaded.spec, loaded.out)
        }
        None => {
            let p = args.profile.unwrap_or(Profile::Custom);
            (p, profile_spec(p), None)
        }
    };
    if !args.scheme.is_empty() {
        spec.schemes = parse_schemes(&args.scheme)?;
    }
    if !args.snr.is_empty() {
        spec.snr_db = args.snr.clone();
    }
    if let Some(f) = args.frames {
        spec.frames = f;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(i) = args.iters {
        spec.frame.max_iterations = i;
    }
    spec.record_trace = true;
    spec.validate().map_err(|e| Failure { code: EXIT_CONFIG, message: e.to_string() })?;
    let out = args.out.clone().or(config_out).unwrap_or_else(|| PathBuf::from("results"));
    Ok((profile, spec, out))
}

#[derive(Serialize)]
struct OverheadEntry {
    scheme: Scheme,
    cells: usize,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    artifact: &'static str,
    version: &'static str,
    timestamp: String,
    command_line: Vec<String>,
    profile: &'static str,
    config: &'a SweepSpec,
    overheads: Vec<OverheadEntry>,
    wall_time_s: f64,
    failed_frames: usize,
    outputs: Vec<String>,
}

fn create(dir: &Path, name: &str, files: &mut Vec<String>) -> Result<BufWriter<File>, Failure> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Failure::from(Error::Io(format!("{}: {e}", path.display()))))?;
    files.push(name.to_string());
    Ok(BufWriter::new(f))
}

fn write_outputs(dir: &Path, profile: Profile, spec: &SweepSpec, result: &SweepResult, wall: f64) -> Result<Vec<String>, Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::from(Error::Io(format!("{}: {e}", dir.display()))))?;
    let mut files = Vec::new();
    write_csv(result, create(dir, "results.csv", &mut files)?)?;
    write_trace(result, create(dir, "trace.csv", &mut files)?)?;
    let tag = profile.name();
    write_snr_table(result, PlotMetric::Ber, create(dir, &format!("{tag}_ber.dat"), &mut files)?)?;
    write_snr_table(result, PlotMetric::Nmse, create(dir, &format!("{tag}_nmse.dat"), &mut files)?)?;
    write_iteration_table(result, create(dir, &format!("{tag}_iterations.dat"), &mut files)?)?;
    files.push("manifest.json".into());

    let f = &spec.frame;
    let manifest = RunManifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        timestamp: chrono::Utc::now().to_rfc3339(),
        command_line: std::env::args().collect(),
        profile: tag,
        config: spec,
        overheads: spec
            .schemes
            .iter()
            .map(|&s| OverheadEntry { scheme: s, cells: overhead(s, f.channel_len, f.doppler_bins, f.reclaimed_rows) })
            .collect(),
        wall_time_s: wall,
        failed_frames: result.points.iter().map(|p| p.failed_frames).sum(),
        outputs: files.clone(),
    };
    let path = dir.join("manifest.json");
    let w = File::create(&path).map_err(|e| Failure::from(Error::Io(format!("{}: {e}", path.display()))))?;
    serde_json::to_writer_pretty(BufWriter::new(w), &manifest).map_err(|e| Failure::from(Error::Io(e.to_string())))?;
    Ok(files)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let (profile, spec, out) = resolve(&args)?;
    let start = std::time::Instant::now();
    let result = run_sweep(&spec)?;
    let wall = start.elapsed().as_secs_f64();
    let files = write_outputs(&out, profile, &spec, &result, wall)?;
    println!("{:<8} {:>8} {:>12} {:>10} {:>8} {:>7}", "scheme", "snr_db", "ber", "nmse_db", "iters", "frames");
    for p in &result.points {
        println!("{:<8} {:>8.2} {:>12.4e} {:>10.2} {:>8.2} {:>7}", p.scheme.name(), p.snr_db, p.ber, p.nmse_db, p.mean_iters, p.frames);
    }
    println!("wrote {} files to {} in {wall:.1} s", files.len(), out.display());
    Ok(())
}

fn cmd_selftest(args: SelftestArgs) -> Result<(), Failure> {
    if args.list {
        for c in IDENTITIES {
            println!("{:<30} {}", c.name, c.summary);
        }
        return Ok(());
    }
    let fault = match &args.inject_fault {
        Some(name) => Some(Fault::parse(name).ok_or_else(|| Failure::usage(format!("unknown fault `{name}`")))?),
        None => None,
    };
    let outcomes = match &args.only {
        Some(name) => vec![find_identity(name).ok_or_else(|| Failure::usage(format!("unknown identity `{name}`")))?.run(fault)],
        None => run_selftest(fault),
    };
    let mut failed = Vec::new();
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        match (&o.deviation, &o.error) {
            (Some(d), _) => println!("{status} {:<30} deviation {d:.3e} (tolerance {:.1e}, {:.2} s)", o.name, o.tolerance, o.seconds),
            (None, Some(e)) => println!("{status} {:<30} error: {e}", o.name),
            (None, None) => println!("{status} {}", o.name),
        }
        if !o.passed {
            failed.push(o.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_NUMERIC, message: format!("identity check failed: {}", failed.join(", ")) })
    }
}
