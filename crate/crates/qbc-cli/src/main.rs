//! `qbc`: run protocols, sweeps and the invariant suite from the shell.
//!
//! Exit codes: 0 success, 2 spec error, 3 invariant or oracle failure,
//! 4 dense cap exceeded, 1 anything else (I/O).

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use qbc_core::harness::{
    emit_report, run_experiment, to_csv, to_json, verify_suite, ConfigSource, ExperimentSpec, Format, Mode, Strategies,
    SweepResult,
};
use qbc_core::protocol::{run_protocol, AdamStrategy, BabeStrategy, Protocol, ProtocolConfig};
use qbc_core::Error;

/// Directory for reports when `--out` is not given.
const OUT_DIR_VAR: &str = "QBC_OUT_DIR";

#[derive(Parser)]
#[command(name = "qbc", version, about = "Quantum bit-commitment laboratory")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run QBC1 (BB84 states, name-checked modulation)
    Qbc1(RunArgs),
    /// Run QBC2A (Babe's sequence, m unnamed modulated qubits)
    Qbc2a(RunArgs),
    /// Run QBC4 (parity encoding with presented answers)
    Qbc4(RunArgs),
    /// Run QBCp2 (cyclic shifts of four BB84 states)
    Qbcp2(RunArgs),
    /// Run the invariant suite
    Verify(VerifyArgs),
    /// Run an experiment spec
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Protocol config (protocol verbs) or experiment spec (sweep), JSON
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials; 0 reports exact values only
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the transcript of one run, seeded by --seed, as JSON lines
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    trials: u64,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Spec(_) | Error::InvalidParameter(_) | Error::Json(_) => 2,
        Error::Oracle(_) => 3,
        Error::CapExceeded { .. } => 4,
        _ => 1,
    }
}

fn default_config(p: Protocol) -> ProtocolConfig {
    let mut c = match p {
        Protocol::Qbc1 => ProtocolConfig::new(p, 24, 8),
        Protocol::Qbc2a => ProtocolConfig::new(p, 40, 10),
        Protocol::Qbc4 => ProtocolConfig::new(p, 5, 3),
        Protocol::Qbcp2 => ProtocolConfig::new(p, 4, 1),
    };
    if p == Protocol::Qbc1 {
        c.m_check = 3;
    }
    if p == Protocol::Qbc2a {
        c.m = 3;
    }
    c
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Spec(format!("cannot read {}: {e}", path.display())))
}

fn out_dir() -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_VAR).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// Relative report paths land under the output directory when it is set.
fn resolve(path: &Path) -> PathBuf {
    match out_dir() {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn format_for(flag: Option<FormatArg>, path: Option<&Path>) -> Format {
    flag.map(Format::from).or_else(|| path.and_then(Format::infer)).unwrap_or(Format::Csv)
}

/// Writes to `--out`, else to the spec's outputs, else to
/// `$QBC_OUT_DIR/<name>.<ext>`, else to stdout.
fn deliver(result: &SweepResult, args: &RunArgs, spec_outputs: &[PathBuf]) -> Result<(), Error> {
    if let Some(out) = &args.out {
        return emit_report(result, format_for(args.format, Some(out)), out);
    }
    if !spec_outputs.is_empty() {
        for p in spec_outputs {
            let target = resolve(p);
            let fmt = args.format.map(Format::from).or_else(|| Format::infer(p)).unwrap_or(Format::Csv);
            emit_report(result, fmt, &target)?;
        }
        return Ok(());
    }
    let fmt = format_for(args.format, None);
    if let Some(dir) = out_dir() {
        let ext = if fmt == Format::Csv { "csv" } else { "json" };
        return emit_report(result, fmt, &dir.join(format!("{}.{ext}", result.name)));
    }
    let text = if fmt == Format::Csv { to_csv(result)? } else { to_json(result)? };
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

/// A failure with its exit code.
struct Fail {
    code: u8,
    message: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail { code: exit_code(&e), message: e.to_string() }
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

fn finish(result: &SweepResult) -> Result<(), Fail> {
    match result.skipped_rows() {
        0 => Ok(()),
        k => Err(Fail { code: 4, message: format!("{k} grid point(s) skipped: dense cap exceeded") }),
    }
}

fn run_verb(protocol: Protocol, args: &RunArgs) -> Result<(), Fail> {
    let config = match &args.config {
        Some(p) => ProtocolConfig::from_json(&read(p)?)?,
        None => default_config(protocol),
    };
    if config.protocol != protocol {
        return Err(Error::Spec(format!("config is for {:?}, not {protocol:?}", config.protocol)).into());
    }
    let name = serde_json::to_value(protocol)?.as_str().unwrap_or("run").to_lowercase();
    if let Some(path) = &args.transcript {
        let seed = args.seed.unwrap_or(0);
        let run = config.clone().with_seeds(seed, seed.wrapping_add(1));
        let out = run_protocol(&run, &AdamStrategy::honest((seed & 1) as u8), &BabeStrategy::honest())?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, out.transcript.to_json_lines()?)?;
    }
    let trials = args.trials.unwrap_or(10_000);
    let spec = ExperimentSpec {
        name,
        config: ConfigSource::Single(config),
        strategies: Strategies::default(),
        mode: if trials == 0 { Mode::Exact } else { Mode::MonteCarlo },
        trials: trials.max(1),
        seed: args.seed.unwrap_or(0),
        bit: None,
        outputs: vec![],
    };
    let result = run_experiment(&spec)?;
    deliver(&result, args, &[])?;
    finish(&result)
}

fn sweep(args: &RunArgs) -> Result<(), Fail> {
    let path = args.config.as_ref().ok_or_else(|| Error::Spec("sweep needs --config <spec.json>".into()))?;
    let mut spec = ExperimentSpec::from_json(&read(path)?)?;
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(t) = args.trials {
        spec.mode = if t == 0 { Mode::Exact } else { Mode::MonteCarlo };
        spec.trials = t.max(1);
    }
    let result = run_experiment(&spec)?;
    deliver(&result, args, &spec.outputs)?;
    finish(&result)
}

fn verify(args: &VerifyArgs) -> Result<(), Fail> {
    let checks = verify_suite(args.seed, args.trials)?;
    let text = match args.format.map(Format::from).unwrap_or(Format::Csv) {
        Format::Json => serde_json::to_string_pretty(&checks)? + "\n",
        Format::Csv => checks
            .iter()
            .map(|c| format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
            .collect(),
    };
    match &args.out {
        Some(p) => fs::write(p, &text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Oracle(format!("failed: {}", failed.join(", "))).into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.verb {
        Verb::Qbc1(a) => run_verb(Protocol::Qbc1, a),
        Verb::Qbc2a(a) => run_verb(Protocol::Qbc2a, a),
        Verb::Qbc4(a) => run_verb(Protocol::Qbc4, a),
        Verb::Qbcp2(a) => run_verb(Protocol::Qbcp2, a),
        Verb::Verify(a) => verify(a),
        Verb::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qbc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
