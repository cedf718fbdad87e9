use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use semguide::harness::{
    check_trace, emit_ablation, emit_report, load_trace, parse_ablation_json, parse_report_json,
    render_ablation, run_ablation, run_scenario, write_trace, ReportFormat, ScenarioConfig,
};
use semguide::model::FrameTrace;
use semguide::semantic::parse_semantic_output;
use semguide::sim::{synth_trace, SynthSpec};
use semguide::ExecutionMode;

/// Output directory used when `--out` is not given.
const OUT_DIR_ENV: &str = "SEMGUIDE_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "semguide",
    version,
    about = "Semantic-guided edge-cloud detection harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and emit its report.
    Run(RunArgs),
    /// Run the edge-only baseline and all eight strategy subsets.
    Ablate(RunArgs),
    /// Check a config and trace without running them.
    Validate(InputArgs),
    /// Generate a synthetic trace and a matching config.
    Synth(SynthArgs),
    /// Re-emit a saved JSON report in another format.
    Report(ReportArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's `trace`.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output directory. Falls back to $SEMGUIDE_OUT_DIR, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Overrides the config's `mode`.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Dark,
    Crowded,
    Occluded,
    Normal,
    Mixed,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value_t = Preset::Mixed)]
    preset: Preset,
    /// Generator settings as TOML; replaces the preset.
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for `trace.jsonl` and `config.toml`. Falls back to
    /// $SEMGUIDE_OUT_DIR; without either the trace goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// A report or ablation JSON written by `run` / `ablate`.
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl FormatArg {
    fn format(self) -> ReportFormat {
        match self {
            Self::Json => ReportFormat::Json,
            Self::Csv => ReportFormat::Csv,
        }
    }

    fn ext(self) -> &'static str {
        match self {
            Self::Json => "json",
            Self::Csv => "csv",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Edge,
    Cloud,
    Collab,
}

impl From<ModeArg> for ExecutionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Edge => ExecutionMode::EdgeOnly,
            ModeArg::Cloud => ExecutionMode::CloudOnly,
            ModeArg::Collab => ExecutionMode::Collaborative,
        }
    }
}

fn out_dir(flag: &Option<PathBuf>) -> Option<PathBuf> {
    flag.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
    })
}

fn emit(dir: Option<&Path>, name: &str, bytes: &[u8]) -> Result<()> {
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn load_inputs(args: &InputArgs) -> Result<(ScenarioConfig, Vec<FrameTrace>)> {
    let config = ScenarioConfig::load(&args.config)?;
    let Some(path) = args.trace.clone().or_else(|| config.trace.clone()) else {
        bail!("no trace: pass --trace or set `trace` in the config");
    };
    let trace = load_trace(&path, &config.class_table()?)
        .with_context(|| format!("loading trace {}", path.display()))?;
    Ok((config, trace))
}

fn prepare(args: &RunArgs) -> Result<(ScenarioConfig, Vec<FrameTrace>)> {
    let (mut config, trace) = load_inputs(&args.input)?;
    if let Some(m) = args.mode {
        config.mode = m.into();
    }
    Ok((config, trace))
}

fn run(args: &RunArgs) -> Result<bool> {
    let (config, trace) = prepare(args)?;
    let outcome = run_scenario(&config, &trace, args.workers)?;
    for e in &outcome.errors {
        eprintln!("frame failed: {e}");
    }
    let bytes = emit_report(&outcome.report, args.format.format())?;
    emit(
        out_dir(&args.out).as_deref(),
        &format!("report.{}", args.format.ext()),
        &bytes,
    )?;
    Ok(true)
}

fn ablate(args: &RunArgs) -> Result<bool> {
    let (config, trace) = prepare(args)?;
    let table = run_ablation(&config, &trace, args.workers)?.table();
    eprint!("{}", render_ablation(&table));
    let bytes = emit_ablation(&table, args.format.format())?;
    emit(
        out_dir(&args.out).as_deref(),
        &format!("ablation.{}", args.format.ext()),
        &bytes,
    )?;
    Ok(true)
}

fn validate(args: &InputArgs) -> Result<bool> {
    let (config, trace) = match load_inputs(args) {
        Ok(v) => v,
        Err(e) => {
            println!("violation: {e:#}");
            return Ok(false);
        }
    };
    let problems = check_trace(&config, &trace);
    for p in &problems {
        println!("violation: {p}");
    }
    let classes = config.class_table()?;
    let compliant = trace
        .iter()
        .filter(|f| parse_semantic_output(&f.cloud_text, &classes).is_ok())
        .count();
    println!("frames: {}", trace.len());
    println!("cloud_text compliant: {compliant}/{}", trace.len());
    Ok(problems.is_empty())
}

fn synth(args: &SynthArgs) -> Result<bool> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str::<SynthSpec>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let d = SynthSpec::default();
            match args.preset {
                Preset::Dark => SynthSpec::dark(d.frames, d.seed),
                Preset::Crowded => SynthSpec::crowded(d.frames, d.seed),
                Preset::Occluded => SynthSpec::occluded(d.frames, d.seed),
                Preset::Normal => SynthSpec::normal(d.frames, d.seed),
                Preset::Mixed => SynthSpec::mixed(d.frames, d.seed),
            }
        }
    };
    if let Some(n) = args.frames {
        spec.frames = n;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let trace = synth_trace(&spec)?;
    let mut config = ScenarioConfig::new(spec.seed, spec.classes.clone());
    config.mapping.p_th = spec.p_th;
    config.scene_vocabulary = semguide::sim::SYNTH_SCENE_VOCABULARY
        .iter()
        .map(|s| s.to_string())
        .collect();
    let classes = config.class_table()?;

    let mut bytes = Vec::new();
    write_trace(&mut bytes, &trace, &classes)?;
    match out_dir(&args.out) {
        Some(dir) => {
            config.trace = Some(PathBuf::from("trace.jsonl"));
            emit(Some(&dir), "trace.jsonl", &bytes)?;
            emit(
                Some(&dir),
                "config.toml",
                config.to_toml_string().as_bytes(),
            )?;
        }
        None => emit(None, "", &bytes)?,
    }
    Ok(true)
}

fn report(args: &ReportArgs) -> Result<bool> {
    let raw = fs::read(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let format = args.format.format();
    let (name, bytes) = match parse_report_json(&raw) {
        Ok(r) => ("report", emit_report(&r, format)?),
        Err(_) => {
            let table = parse_ablation_json(&raw).with_context(|| {
                format!(
                    "{} is neither a report nor an ablation",
                    args.input.display()
                )
            })?;
            ("ablation", emit_ablation(&table, format)?)
        }
    };
    emit(
        out_dir(&args.out).as_deref(),
        &format!("{name}.{}", args.format.ext()),
        &bytes,
    )?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Ablate(a) => ablate(a),
        Command::Validate(a) => validate(a),
        Command::Synth(a) => synth(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
