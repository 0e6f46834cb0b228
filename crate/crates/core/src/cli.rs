//! Command-line front end.
//!
//! Configuration is merged in this order, later sources winning:
//! built-in defaults, the TOML file given by `--config`, then flags.
//! When no message length is given anywhere and a message is supplied, N is
//! the message length in bits.
//!
//! Config file keys (all optional, unknown keys are an error):
//!
//! ```toml
//! n = 128                      # alias: n_message
//! t0 = 16
//! t1 = 64
//! security_threshold = 0.11
//! integrity_threshold = 0.11
//! variant = "full"             # full | linear-optics | det-qkd
//! adversary = "honest"         # see AdversaryModel's text form
//! seed = 7
//!
//! [sweep]
//! parameter = "depolarizing_p" # depolarizing_p | t1 | security_threshold
//! grid = [0.0, 0.05, 0.1]
//! sessions = 200
//! ```
//!
//! Exit codes: 0 success, 1 usage or configuration error (or a failed
//! selftest), 2 protocol abort.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::AdversaryModel;
use crate::analysis::{run_sweep, tomography_report, AnalysisError, SweepParameter, SweepSpec};
use crate::bits::Bits;
use crate::protocol::{
    random_message, run_session, BellAnnouncement, Event, ProtocolConfig, ProtocolError,
    SessionReport, Stage, Transcript, Variant,
};
use crate::selftest;

pub const REPORT_SCHEMA: &str = "mdi-qsdc/report/v1";
pub const SELFTEST_SCHEMA: &str = "mdi-qsdc/selftest/v1";
pub const TOMOGRAPHY_SCHEMA: &str = "mdi-qsdc/tomography/v1";

/// Column order of `run --format csv`.
pub const RUN_CSV_COLUMNS: [&str; 13] = [
    "schema",
    "variant",
    "seed",
    "block_len",
    "security_error_rate",
    "security_samples",
    "integrity_error_rate",
    "integrity_samples",
    "aborted_at_step",
    "message_bits_carried",
    "conclusive_fraction",
    "leaked_bits",
    "leaked_bits_correct",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write output: {0}")]
    Write(#[from] io::Error),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid hex message: {0}")]
    Hex(String),
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "mdi-qsdc",
    version,
    about = "MDI quantum secure direct communication simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one session and emit its report and transcript.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        message: MessageArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run many sessions per grid point and aggregate.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exhaustive algebra checks.
    Selftest {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Mean Bloch vectors of emitted P_A and P_B qubits.
    Tomography {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Message length N.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub t0: Option<usize>,
    #[arg(long)]
    pub t1: Option<usize>,
    /// full, linear-optics or det-qkd.
    #[arg(long)]
    pub variant: Option<Variant>,
    /// e.g. honest, random-charlie, intercept-resend:pb, depolarizing:0.1@encoded
    #[arg(long)]
    pub adversary: Option<AdversaryModel>,
    #[arg(long)]
    pub security_threshold: Option<f64>,
    #[arg(long)]
    pub integrity_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MessageArgs {
    /// Binary message file, bits taken MSB first.
    #[arg(long, conflicts_with = "message_hex")]
    pub message_file: Option<PathBuf>,
    #[arg(long)]
    pub message_hex: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub parameter: Option<SweepParameter>,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    #[arg(long)]
    pub sessions: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(alias = "n_message")]
    n: Option<usize>,
    t0: Option<usize>,
    t1: Option<usize>,
    security_threshold: Option<f64>,
    integrity_threshold: Option<f64>,
    variant: Option<Variant>,
    adversary: Option<AdversaryModel>,
    seed: Option<u64>,
    sweep: Option<FileSweep>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSweep {
    parameter: Option<SweepParameter>,
    grid: Option<Vec<f64>>,
    sessions: Option<usize>,
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_file(&text, path)
}

fn parse_file(text: &str, origin: &Path) -> Result<FileConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string().trim_end().to_string(),
    })
}

/// Parses TOML config text (same keys as a `--config` file) into a validated
/// config. A `[sweep]` table is accepted and ignored.
pub fn config_from_toml(text: &str) -> Result<ProtocolConfig, CliError> {
    let file = parse_file(text, Path::new("<string>"))?;
    Ok(merge(file, &ConfigArgs::default(), None)?)
}

/// Merges defaults, the optional file and `overrides`, then validates.
///
/// `message_len` fills in N when neither the file nor the flags set it.
pub fn load_config(
    overrides: &ConfigArgs,
    message_len: Option<usize>,
) -> Result<ProtocolConfig, CliError> {
    let file = match &overrides.config {
        Some(path) => read_file(path)?,
        None => FileConfig::default(),
    };
    Ok(merge(file, overrides, message_len)?)
}

fn merge(
    file: FileConfig,
    o: &ConfigArgs,
    message_len: Option<usize>,
) -> Result<ProtocolConfig, ProtocolError> {
    let d = ProtocolConfig::default();
    let cfg = ProtocolConfig {
        n_message: o.n.or(file.n).or(message_len).unwrap_or(d.n_message),
        t0: o.t0.or(file.t0).unwrap_or(d.t0),
        t1: o.t1.or(file.t1).unwrap_or(d.t1),
        security_threshold: o
            .security_threshold
            .or(file.security_threshold)
            .unwrap_or(d.security_threshold),
        integrity_threshold: o
            .integrity_threshold
            .or(file.integrity_threshold)
            .unwrap_or(d.integrity_threshold),
        variant: o.variant.or(file.variant).unwrap_or(d.variant),
        adversary: o
            .adversary
            .clone()
            .or(file.adversary)
            .unwrap_or(d.adversary),
        seed: o.seed.or(file.seed).unwrap_or(d.seed),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_message(args: &MessageArgs) -> Result<Option<Bits>, CliError> {
    if let Some(path) = &args.message_file {
        let bytes = fs::read(path).map_err(|source| CliError::Read {
            path: path.clone(),
            source,
        })?;
        return Ok(Some(Bits::from_bytes(&bytes)));
    }
    args.message_hex
        .as_deref()
        .map(|h| Bits::from_hex(h).map_err(CliError::Hex))
        .transpose()
}

#[derive(Debug, Serialize)]
pub struct RunDocument {
    pub schema: &'static str,
    pub config: ProtocolConfig,
    /// Message Alice encoded (first N bits); absent for key distribution.
    pub message: Option<Bits>,
    pub report: SessionReport,
    pub transcript: Transcript,
}

/// What a subcommand produced: rendered output plus the exit code it implies.
#[derive(Debug)]
pub struct Completed {
    pub output: String,
    pub exit_code: i32,
    /// Printed to stderr, e.g. the abort stage.
    pub notice: Option<String>,
}

pub fn run_document(config: &ConfigArgs, message: &MessageArgs) -> Result<RunDocument, CliError> {
    let msg = load_message(message)?;
    let cfg = load_config(config, msg.as_ref().map(Bits::len))?;
    let message = match (cfg.variant, msg) {
        (Variant::DetQkd, _) => None,
        (_, Some(m)) => {
            if m.len() < cfg.n_message {
                return Err(ProtocolError::MessageLength {
                    got: m.len(),
                    need: cfg.n_message,
                }
                .into());
            }
            Some(Bits(m.0[..cfg.n_message].to_vec()))
        }
        (_, None) => Some(Bits(random_message(cfg.seed, cfg.n_message))),
    };
    let (report, transcript) = run_session(&cfg, message.as_ref().map(Bits::as_slice))?;
    Ok(RunDocument {
        schema: REPORT_SCHEMA,
        config: cfg,
        message,
        report,
        transcript,
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn run_csv(doc: &RunDocument) -> Result<String, CliError> {
    let r = &doc.report;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RUN_CSV_COLUMNS)?;
    w.write_record([
        REPORT_SCHEMA.to_string(),
        variant_name(doc.config.variant).to_string(),
        doc.config.seed.to_string(),
        r.block_len.to_string(),
        r.security_error_rate.to_string(),
        r.security_samples.to_string(),
        opt(r.integrity_error_rate),
        r.integrity_samples.to_string(),
        opt(r.aborted_at.map(Stage::step)),
        r.message_bits_carried.to_string(),
        opt(r.conclusive_fraction),
        r.leaked_bits.to_string(),
        r.leaked_bits_correct.to_string(),
    ])?;
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::FullBell => "full",
        Variant::LinearOptics => "linear-optics",
        Variant::DetQkd => "det-qkd",
    }
}

#[derive(Default)]
struct Tally {
    sent_pa: usize,
    sent_pb: usize,
    sent_encoded: usize,
    clicks: [usize; 4],
    no_click: usize,
    bases: usize,
    reveals: usize,
    z: usize,
    random_bits: usize,
}

/// Transcript summary grouped by protocol step.
pub fn transcript_summary(doc: &RunDocument) -> String {
    use crate::adversary::Channel;
    let mut t = Tally::default();
    for e in doc.transcript.events() {
        match e {
            Event::QubitSent { channel, .. } => match channel {
                Channel::PA => t.sent_pa += 1,
                Channel::PB => t.sent_pb += 1,
                Channel::Encoded => t.sent_encoded += 1,
            },
            Event::BellAnnounced { result, .. } => match result {
                BellAnnouncement::Click(o) => t.clicks[o.index()] += 1,
                BellAnnouncement::NoClick => t.no_click += 1,
            },
            Event::BasisAnnounced { .. } => t.bases += 1,
            Event::CheckReveal { .. } => t.reveals += 1,
            Event::ZAnnounced { .. } => t.z += 1,
            Event::RandomBitsReveal { positions, .. } => t.random_bits += positions.len(),
            Event::Abort { .. } => {}
        }
    }
    let cfg = &doc.config;
    let r = &doc.report;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "variant {} | N={} t0={} t1={} | adversary {} | seed {}",
        variant_name(cfg.variant),
        cfg.n_message,
        cfg.t0,
        cfg.t1,
        cfg.adversary,
        cfg.seed
    );
    let _ = writeln!(
        s,
        "step 1  prepared {} P_A and {} P_B qubits",
        t.sent_pa, t.sent_pb
    );
    let _ = writeln!(
        s,
        "step 2  Bell results: phi+ {} phi- {} psi+ {} psi- {} no-click {}",
        t.clicks[0], t.clicks[1], t.clicks[2], t.clicks[3], t.no_click
    );
    let _ = writeln!(
        s,
        "step 3  {} check reveals, {} same-basis samples, error rate {:.4}",
        t.reveals, r.security_samples, r.security_error_rate
    );
    let _ = writeln!(
        s,
        "step 4  {} bases announced, {} encoded qubits sent",
        t.bases, t.sent_encoded
    );
    let _ = writeln!(s, "step 5  {} Z results announced", t.z);
    match r.integrity_error_rate {
        Some(rate) => {
            let _ = writeln!(
                s,
                "step 6  {} random bits revealed, error rate {rate:.4}",
                t.random_bits
            );
        }
        None => {
            let _ = writeln!(s, "step 6  not reached");
        }
    }
    if let Some(f) = r.conclusive_fraction {
        let _ = writeln!(
            s,
            "conclusive fraction {f:.4}, {} message bits carried",
            r.message_bits_carried
        );
    }
    if r.leaked_bits > 0 {
        let _ = writeln!(
            s,
            "adversary read {} bits ({} correct)",
            r.leaked_bits, r.leaked_bits_correct
        );
    }
    match (doc.transcript.abort(), &r.decoded_message) {
        (Some((stage, rate)), _) => {
            let _ = writeln!(s, "ABORT at {stage}, error rate {rate:.4}");
        }
        (None, Some(m)) => {
            let _ = writeln!(s, "decoded {m}");
        }
        (None, None) => {}
    }
    s
}

fn render_run(doc: &RunDocument, format: Format) -> Result<String, CliError> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(doc)? + "\n",
        Format::Csv => run_csv(doc)?,
        Format::Text => transcript_summary(doc),
    })
}

fn sweep_spec(config: &ConfigArgs, args: &SweepArgs) -> Result<SweepSpec, CliError> {
    let file = match &config.config {
        Some(path) => read_file(path)?,
        None => FileConfig::default(),
    };
    let fs = file.sweep.unwrap_or_default();
    let parameter = args
        .parameter
        .or(fs.parameter)
        .unwrap_or(SweepParameter::DepolarizingP);
    let grid = if args.grid.is_empty() {
        fs.grid.unwrap_or_default()
    } else {
        args.grid.clone()
    };
    if grid.is_empty() {
        return Err(CliError::Usage(
            "sweep needs a grid (--grid or [sweep] grid)".into(),
        ));
    }
    let sessions = args.sessions.or(fs.sessions).unwrap_or(100);
    let base = merge(
        FileConfig {
            sweep: None,
            ..file
        },
        config,
        None,
    )?;
    Ok(SweepSpec {
        parameter,
        grid,
        sessions,
        base_seed: base.seed,
        base,
    })
}

fn execute_inner(command: &Command) -> Result<(Completed, Option<&OutputArgs>), CliError> {
    match command {
        Command::Run {
            config,
            message,
            output,
        } => {
            let doc = run_document(config, message)?;
            let (exit_code, notice) = match doc.transcript.abort() {
                Some((stage, rate)) => (2, Some(format!("abort at {stage}: error rate {rate:.4}"))),
                None => (0, None),
            };
            let output_text = render_run(&doc, output.format)?;
            Ok((
                Completed {
                    output: output_text,
                    exit_code,
                    notice,
                },
                Some(output),
            ))
        }
        Command::Sweep {
            config,
            sweep,
            output,
        } => {
            let result = run_sweep(&sweep_spec(config, sweep)?)?;
            let text = match output.format {
                Format::Json => result.to_json()? + "\n",
                Format::Csv | Format::Text => {
                    let mut buf = Vec::new();
                    result.write_csv(&mut buf)?;
                    String::from_utf8(buf).expect("csv output is utf-8")
                }
            };
            Ok((
                Completed {
                    output: text,
                    exit_code: 0,
                    notice: None,
                },
                Some(output),
            ))
        }
        Command::Selftest { output } => {
            let report = selftest::run();
            let text = match output.format {
                Format::Json => {
                    serde_json::to_string_pretty(&serde_json::json!({
                        "schema": SELFTEST_SCHEMA,
                        "checks": report.checks,
                        "passed": report.all_passed(),
                    }))? + "\n"
                }
                Format::Csv => {
                    let mut s = String::from("check,passed,total\n");
                    for c in &report.checks {
                        let _ = writeln!(s, "{},{},{}", c.name, c.passed, c.total);
                    }
                    s
                }
                Format::Text => {
                    let mut s = String::new();
                    for c in &report.checks {
                        let _ = writeln!(s, "{:<28} {}/{}", c.name, c.passed, c.total);
                    }
                    s
                }
            };
            let ok = report.all_passed();
            Ok((
                Completed {
                    output: text,
                    exit_code: if ok { 0 } else { 1 },
                    notice: (!ok).then(|| "selftest failed".to_string()),
                },
                Some(output),
            ))
        }
        Command::Tomography {
            config,
            samples,
            output,
        } => {
            let cfg = load_config(config, None)?;
            let t = tomography_report(&cfg, *samples)?;
            let text = match output.format {
                Format::Json => {
                    serde_json::to_string_pretty(&serde_json::json!({
                        "schema": TOMOGRAPHY_SCHEMA,
                        "config": cfg,
                        "tomography": t,
                    }))? + "\n"
                }
                Format::Csv | Format::Text => {
                    let mut s = String::from("sequence,x,y,z,norm\n");
                    for (name, v, n) in [("P_A", t.p_a, t.p_a_norm), ("P_B", t.p_b, t.p_b_norm)] {
                        let _ = writeln!(s, "{name},{},{},{},{n}", v.x, v.y, v.z);
                    }
                    s
                }
            };
            Ok((
                Completed {
                    output: text,
                    exit_code: 0,
                    notice: None,
                },
                Some(output),
            ))
        }
    }
}

/// Runs a parsed command and writes its output to `--out` or `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<Completed, CliError> {
    let (done, output) = execute_inner(&cli.command)?;
    match output.and_then(|o| o.out.as_ref()) {
        Some(path) => fs::write(path, &done.output)?,
        None => stdout.write_all(done.output.as_bytes())?,
    }
    Ok(done)
}

/// Full entry point: parses `args`, runs, reports errors, returns the exit
/// code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli, stdout) {
        Ok(done) => {
            if let Some(n) = done.notice {
                let _ = writeln!(stderr, "{n}");
            }
            done.exit_code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}
