//! `gaitval`: batch gait analysis from force-platform and pose-estimation files.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gait_core::events::{write_events_csv, EventSequence, Foot};
use gait_core::report::{
    detect_entry_events, emit_plot_data, emit_tables, render_text_report, run_analyze, write_synth_study,
    AnalysisConfig, Manifest, ReportError, TrialEntry, REFERENCE_SYSTEM,
};
use gait_core::stats::{absolute_errors, bland_altman, correlation_strength, pearson, PairedSeries};
use gait_core::synth::SynthParams;

#[derive(Parser)]
#[command(name = "gaitval", version, about = "Temporal gait parameters and their agreement with force platforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a manifest and write tables and plot data.
    Analyze(AnalyzeArgs),
    /// Detect heel-contact and toe-off events in one recording.
    Events(EventsArgs),
    /// Write synthetic trials with known events, plus a manifest for them.
    Synth(SynthArgs),
    /// Agreement statistics for a paired `video_id,est,ref` CSV.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// `text` also prints the report to stdout.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

/// Exactly one recording.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct InputArgs {
    #[arg(long)]
    grf: Option<PathBuf>,
    #[arg(long)]
    dlc: Option<PathBuf>,
    #[arg(long)]
    openpose_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EventsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Camera rate of keypoint input.
    #[arg(long)]
    fps: Option<f64>,
    /// Force sampling rate, overriding the time column.
    #[arg(long)]
    fs: Option<f64>,
    /// Foot of the first force contact in each pass.
    #[arg(long)]
    first_foot: Option<Foot>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct SynthArgs {
    /// TOML file of generator parameters; defaults when absent.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Also write per-frame OpenPose files.
    #[arg(long)]
    openpose: bool,
}

#[derive(Args)]
struct StatsArgs {
    /// CSV with header `video_id,est,ref`.
    #[arg(long)]
    paired: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

/// Failure with the exit code it maps to.
enum Failure {
    Input(String),
    Pipeline(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Pipeline(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Pipeline(m) => write!(f, "pipeline error: {m}"),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Pipeline(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Pipeline(format!("{}: {e}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<AnalysisConfig, Failure> {
    Ok(match path {
        Some(p) => AnalysisConfig::load(p)?,
        None => AnalysisConfig::default(),
    })
}

/// Writes to `path`, or stdout when there is none.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(|e| io_failure(p, e))?);
            f(&mut w).and_then(|_| w.flush()).map_err(|e| io_failure(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(|e| Failure::Pipeline(format!("stdout: {e}")))
        }
    }
}

fn analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    let manifest = Manifest::load(&a.manifest)?;
    let cfg = load_config(a.config.as_deref())?;
    let report = run_analyze(&manifest, &cfg, a.threads)?;
    let mut written = emit_tables(&report, &a.out)?;
    written.extend(emit_plot_data(&report, &a.out, cfg.plot_svg)?);
    match a.format {
        Format::Csv => {
            for p in written {
                println!("{}", p.display());
            }
        }
        Format::Text => print!("{}", render_text_report(&report)),
    }
    Ok(())
}

fn events(a: EventsArgs) -> Result<(), Failure> {
    let cfg = load_config(a.config.as_deref())?;
    let system = if a.input.grf.is_some() { REFERENCE_SYSTEM } else { "cli" };
    let mut entry = TrialEntry::new("cli", system);
    entry.grf = a.input.grf;
    entry.dlc = a.input.dlc;
    entry.openpose_dir = a.input.openpose_dir;
    entry.fps = a.fps;
    entry.fs = a.fs;
    entry.first_foot = a.first_foot;
    let manifest = Manifest::new(vec![entry.clone()], ".")?;
    manifest.check_paths()?;
    let seq = detect_entry_events(&entry, &manifest, &cfg, None)?;
    with_output(a.out.as_deref(), |w| match a.format {
        Format::Csv => write_events_csv(&seq, w),
        Format::Text => write_events_text(&seq, w),
    })
}

fn write_events_text(seq: &EventSequence, w: &mut dyn Write) -> io::Result<()> {
    if seq.ankle_substituted() {
        writeln!(w, "note: heel and toe taken from the ankle keypoints")?;
    }
    for e in seq.events() {
        writeln!(w, "{:>9.3} s  pass {:<3} {:<5} {} ({})", e.time_s, e.pass_id, e.foot, e.kind, e.source)?;
    }
    writeln!(w, "{} events", seq.len())
}

fn synth(a: SynthArgs) -> Result<(), Failure> {
    let params = match &a.params {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            SynthParams::from_toml_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?
        }
        None => SynthParams::default(),
    };
    params.validate().map_err(|e| Failure::Input(e.to_string()))?;
    if a.trials == 0 {
        return Err(Failure::Input("--trials must be at least 1".into()));
    }
    let manifest = write_synth_study(&params, a.trials, &a.out, a.openpose)?;
    println!("{}", manifest.display());
    Ok(())
}

fn read_paired(path: &Path) -> Result<PairedSeries, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let bad = |line: usize, why: &str| Failure::Input(format!("{} line {line}: {why}", path.display()));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.split(',').map(str::trim).eq(["video_id", "est", "ref"]) => {}
        _ => return Err(bad(1, "expected header video_id,est,ref")),
    }
    let (mut ids, mut est, mut reference) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(bad(i + 1, "expected three fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, &format!("{s:?} is not a number")));
        ids.push(f[0].to_string());
        est.push(num(f[1])?);
        reference.push(num(f[2])?);
    }
    PairedSeries::new(est, reference, ids).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn stats(a: StatsArgs) -> Result<(), Failure> {
    let pairs = read_paired(&a.paired)?;
    let fail = |e: gait_core::stats::StatsError| Failure::Pipeline(e.to_string());
    let ba = bland_altman(&pairs).map_err(fail)?;
    let abs = absolute_errors(&pairs).map_err(fail)?;
    let r = pearson(pairs.est(), pairs.reference()).ok();
    let mut record: Vec<(&str, String)> = vec![("n", pairs.len().to_string())];
    for (k, v) in ba.record().into_iter().chain(abs.record()) {
        record.push((k, v.to_string()));
    }
    record.push(("pearson_r", r.map_or("NA".into(), |v| v.to_string())));
    record.push(("strength", r.map_or("NA", correlation_strength).to_string()));
    with_output(a.out.as_deref(), |w| {
        match a.format {
            Format::Csv => {
                writeln!(w, "key,value")?;
                for (k, v) in &record {
                    writeln!(w, "{k},{v}")?;
                }
            }
            Format::Text => {
                for (k, v) in &record {
                    writeln!(w, "{k:<16} {v}")?;
                }
            }
        }
        Ok(())
    })
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
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Events(a) => events(a),
        Command::Synth(a) => synth(a),
        Command::Stats(a) => stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gaitval: {f}");
            ExitCode::from(f.code())
        }
    }
}
