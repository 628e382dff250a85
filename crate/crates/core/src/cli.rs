//! Command-line entry points: generate instances, reduce them to special
//! form, solve, pull solutions back, verify certificates, and run the
//! numeric diagnostics.
//!
//! All outputs are JSON documents; every subcommand writes to `-o` when
//! given and to stdout otherwise. Identical arguments and input files
//! produce byte-identical outputs. Logging goes to stderr and never touches
//! the JSON stream; the `PSDP_LOG` environment variable overrides
//! `--log-level`.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU8, Ordering};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::diagnostics::{self, DiagnosticsError, LemmaMode};
use crate::instance::{
    self, gen_diagonal, gen_identity, gen_random_psd, Instance, InstanceError, RankProfile,
};
use crate::solver::{self, Certificate, SolverError, SolverParams};
use crate::transform::{self, TransformError};
use crate::verify::{self, Verdict, VerifyError};

/// Exit code for validation, parse, and IO failures.
const EXIT_VALIDATION: u8 = 1;
/// Exit code for solver failures (iteration cap, invariant violation).
const EXIT_SOLVER: u8 = 2;
/// Exit code for failed verification or a violated lemma conclusion.
const EXIT_VERIFICATION: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "psdp",
    no_binary_name = true,
    version,
    about = "Approximately solve positive semidefinite programs and verify the certificates"
)]
pub struct CliConfig {
    #[arg(long, value_enum, default_value_t = LogLevel::Warn, global = true)]
    pub log_level: LogLevel,
    #[arg(long, value_enum, default_value_t = LogFormat::Text, global = true)]
    pub log_format: LogFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
}

impl LogLevel {
    fn to_filter(self) -> log::LevelFilter {
        match self {
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
        }
    }

    fn parse(text: &str) -> Option<Self> {
        match text {
            "error" => Some(LogLevel::Error),
            "warn" => Some(LogLevel::Warn),
            "info" => Some(LogLevel::Info),
            "debug" => Some(LogLevel::Debug),
            _ => None,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LogFormat {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a seeded instance file.
    Gen(GenArgs),
    /// Reduce a general instance to the normalized special form.
    Transform(TransformArgs),
    /// Solve an instance and emit a certificate.
    Solve(SolveArgs),
    /// Map a special-form certificate back to a general instance's solution.
    Pullback(PullbackArgs),
    /// Re-check a certificate against its instance.
    Verify(VerifyArgs),
    /// Run the numeric lemma and decomposition validators.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Instance family to generate.
    #[arg(long, value_enum)]
    pub kind: GenKind,
    /// Matrix dimension.
    #[arg(long)]
    pub n: usize,
    /// Number of constraints.
    #[arg(long)]
    pub m: usize,
    /// Generator seed; only meaningful for the seeded kinds.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Constraint matrix rank for the random kind (full rank when omitted).
    #[arg(long)]
    pub rank: Option<usize>,
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Identity,
    Diag,
    Random,
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    /// General-form instance to reduce.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Accuracy parameter for the reduction.
    #[arg(long)]
    pub epsilon: f64,
    /// Output path for the special-form instance; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Sidecar path for the reduction record needed by pullback.
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Instance to solve; general instances are reduced, solved, and pulled
    /// back automatically.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Accuracy parameter.
    #[arg(long)]
    pub epsilon: f64,
    /// Certificate output path; stdout when omitted. For a general instance
    /// the pulled-back solution lands next to it with extension
    /// "pullback.json".
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Iteration cap overriding the default.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Re-check the iteration invariants at every step.
    #[arg(long)]
    pub assert_invariants: bool,
    /// How much of the iteration history to keep in the certificate.
    #[arg(long, value_enum, default_value_t = TraceMode::None)]
    pub trace: TraceMode,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TraceMode {
    Full,
    Summary,
    None,
}

#[derive(Args, Debug)]
pub struct PullbackArgs {
    /// General-form instance the solution should be mapped back to.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Certificate for the reduced special-form instance.
    #[arg(short = 's', long)]
    pub special_certificate: PathBuf,
    /// Reduction record written by transform.
    #[arg(short = 'r', long)]
    pub record: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Instance the certificate claims to solve.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Certificate to re-check.
    #[arg(short, long)]
    pub certificate: PathBuf,
    /// Report output path; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    #[command(subcommand)]
    pub which: DiagnoseCommand,
}

#[derive(Subcommand, Debug)]
pub enum DiagnoseCommand {
    /// Decompose random projector pairs and check the block invariants.
    Jordan {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Ambient dimension for the sampled projectors.
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample PSD pairs against the eigenvalue-mass lemma.
    Mainlemma {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Ambient dimension for the sampled pairs.
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hypothesis mode; both run when omitted.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Sample 2×2 pairs against the second-eigenvalue lemma.
    #[command(name = "lemma2x2")]
    Lemma2x2 {
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Strict,
    Relaxed,
}

impl ModeArg {
    fn to_mode(self) -> LemmaMode {
        match self {
            ModeArg::Strict => LemmaMode::Strict,
            ModeArg::Relaxed => LemmaMode::Relaxed,
        }
    }
}

/// Runs one command given its arguments (without the binary name) and
/// returns the process exit code: 0 on success, 1 on validation or IO
/// errors, 2 on solver failures, 3 on failed verification.
pub fn run<I: IntoIterator<Item = String>>(argv: I) -> u8 {
    let config = match CliConfig::try_parse_from(argv) {
        Ok(config) => config,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_VALIDATION,
            };
            let _ = err.print();
            return code;
        }
    };
    if let Err(failure) = init_logging(config.log_level, config.log_format) {
        emit_error(config.log_format, &failure.message);
        return failure.code;
    }
    match dispatch(config.command) {
        Ok(code) => code,
        Err(failure) => {
            emit_error(config.log_format, &failure.message);
            failure.code
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<InstanceError> for Failure {
    fn from(err: InstanceError) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: err.to_string(),
        }
    }
}

impl From<TransformError> for Failure {
    fn from(err: TransformError) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: err.to_string(),
        }
    }
}

impl From<SolverError> for Failure {
    fn from(err: SolverError) -> Self {
        let code = match err {
            SolverError::BadParams { .. } => EXIT_VALIDATION,
            _ => EXIT_SOLVER,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(err: VerifyError) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: err.to_string(),
        }
    }
}

impl From<DiagnosticsError> for Failure {
    fn from(err: DiagnosticsError) -> Self {
        let code = match err {
            DiagnosticsError::ConclusionViolated { .. } => EXIT_VERIFICATION,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: format!("io error: {err}"),
        }
    }
}

fn validation_failure(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_VALIDATION,
        message: message.into(),
    }
}

fn dispatch(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Gen(args) => run_gen(args),
        Command::Transform(args) => run_transform(args),
        Command::Solve(args) => run_solve(args),
        Command::Pullback(args) => run_pullback(args),
        Command::Verify(args) => run_verify(args),
        Command::Diagnose(args) => run_diagnose(args),
    }
}

fn run_gen(args: GenArgs) -> Result<u8, Failure> {
    if args.rank.is_some() && args.kind != GenKind::Random {
        return Err(validation_failure("--rank only applies to --kind random"));
    }
    if args.seed.is_some() && args.kind == GenKind::Identity {
        return Err(validation_failure(
            "--seed has no effect on the identity kind; omit it",
        ));
    }
    if args.n < 1 || args.m < 1 {
        return Err(validation_failure("--n and --m must be positive"));
    }
    if args.kind == GenKind::Identity && args.m < args.n {
        return Err(validation_failure(
            "the identity kind is already in special form, which needs m >= n",
        ));
    }
    if let Some(rank) = args.rank {
        if rank < 1 || rank > args.n {
            return Err(validation_failure("--rank must lie in 1..=n"));
        }
    }
    let seed = args.seed.unwrap_or(0);
    let generated = match args.kind {
        GenKind::Identity => Instance::Special(gen_identity(args.n, args.m)),
        GenKind::Diag => Instance::General(gen_diagonal(args.n, args.m, seed)),
        GenKind::Random => {
            let profile = match args.rank {
                Some(rank) => RankProfile::Low(rank),
                None => RankProfile::Full,
            };
            Instance::General(gen_random_psd(args.n, args.m, seed, profile))
        }
    };
    let (n, m) = dims(&generated);
    log::info!(
        "generated instance \"{}\" with n = {n}, m = {m}",
        generated.metadata().name
    );
    emit(&instance::instance_to_json_string(&generated), args.output)?;
    Ok(0)
}

fn run_transform(args: TransformArgs) -> Result<u8, Failure> {
    let general = match instance::read_instance(&args.input)? {
        Instance::General(inst) => inst,
        Instance::Special(_) => {
            return Err(validation_failure(
                "transform expects a general-form instance; this one is already special",
            ));
        }
    };
    let (special, record) = transform::to_special_form(&general, args.epsilon)?;
    log::info!(
        "reduced to special form: {} constraints retained, {} padded, gamma = {}",
        special.m() - record.padding_count(),
        record.padding_count(),
        special.gamma()
    );
    if let Some(record_path) = &args.record {
        transform::write_transform_record(&record, record_path)?;
    }
    emit(
        &instance::instance_to_json_string(&Instance::Special(special)),
        args.output,
    )?;
    Ok(0)
}

fn run_solve(args: SolveArgs) -> Result<u8, Failure> {
    match instance::read_instance(&args.input)? {
        Instance::Special(special) => {
            let certificate = solve_special(&special, &args)?;
            emit(&solver::certificate_to_json_string(&certificate), args.output)?;
            Ok(0)
        }
        Instance::General(general) => {
            let (special, record) = transform::to_special_form(&general, args.epsilon)?;
            log::info!(
                "general instance reduced before solving: {} special-form constraints",
                special.m()
            );
            let certificate = solve_special(&special, &args)?;
            let pulled = transform::pull_back(&certificate.x_star, &record, &general)?;
            log::info!(
                "pulled solution back: objective {} within factor {} of the reduced optimum",
                pulled.objective,
                pulled.factor_bound
            );
            match args.output {
                Some(path) => {
                    let pullback_path = path.with_extension("pullback.json");
                    transform::write_pullback(&pulled, &pullback_path)?;
                    emit(&solver::certificate_to_json_string(&certificate), Some(path))?;
                }
                None => {
                    emit(&solver::certificate_to_json_string(&certificate), None)?;
                    emit(&transform::pullback_to_json_string(&pulled), None)?;
                }
            }
            Ok(0)
        }
    }
}

fn solve_special(
    special: &instance::SpecialFormInstance,
    args: &SolveArgs,
) -> Result<Certificate, Failure> {
    let mut params = SolverParams::for_instance(special, args.epsilon)?;
    if let Some(cap) = args.max_iter {
        params = params.with_max_iterations(cap);
    }
    params = params.with_assert_invariants(args.assert_invariants);
    let result = solver::solve(special, &params)?;
    if args.trace == TraceMode::Summary {
        for phase in &result.phase_summary {
            log::info!("phase k = {}: {} iterations", phase.k, phase.count);
        }
    }
    log::info!(
        "solved in {} iterations: primal {}, dual {}",
        result.trace.len(),
        result.primal_value,
        result.dual_value
    );
    Ok(Certificate::from_result(
        &result,
        &params,
        args.trace == TraceMode::Full,
    ))
}

fn run_pullback(args: PullbackArgs) -> Result<u8, Failure> {
    let general = match instance::read_instance(&args.input)? {
        Instance::General(inst) => inst,
        Instance::Special(_) => {
            return Err(validation_failure(
                "pullback expects the original general-form instance",
            ));
        }
    };
    let certificate = solver::read_certificate(&args.special_certificate)?;
    let record = transform::read_transform_record(&args.record)?;
    let pulled = transform::pull_back(&certificate.x_star, &record, &general)?;
    emit(&transform::pullback_to_json_string(&pulled), args.output)?;
    Ok(0)
}

fn run_verify(args: VerifyArgs) -> Result<u8, Failure> {
    let inst = instance::read_instance(&args.input)?;
    let certificate = solver::read_certificate(&args.certificate)?;
    let report = verify::verify_certificate(&inst, &certificate)?;
    let verdict = report.verdict;
    emit(&verify::report_to_json_string(&report), args.output)?;
    if verdict == Verdict::Certified {
        Ok(0)
    } else {
        log::warn!("certificate rejected: {}", verdict.as_str());
        Ok(EXIT_VERIFICATION)
    }
}

fn run_diagnose(args: DiagnoseArgs) -> Result<u8, Failure> {
    match args.which {
        DiagnoseCommand::Jordan { trials, n, seed } => {
            let report = diagnostics::jordan_diagnostic(trials, n, seed)?;
            emit(&diagnostics::diagnostic_report_to_json_string(&report), None)?;
            if report.accepted == trials {
                Ok(0)
            } else {
                log::warn!(
                    "{} of {} projector pairs exceeded a residual budget",
                    trials - report.accepted,
                    trials
                );
                Ok(EXIT_VERIFICATION)
            }
        }
        DiagnoseCommand::Mainlemma {
            trials,
            n,
            epsilon,
            seed,
            mode,
        } => {
            let modes = match mode {
                Some(arg) => vec![arg.to_mode()],
                None => vec![LemmaMode::Strict, LemmaMode::Relaxed],
            };
            for m in modes {
                let report = diagnostics::validate_main_lemma(trials, n, epsilon, m, seed)?;
                if report.accepted == 0 {
                    log::warn!(
                        "no samples passed the {} hypothesis gate at n = {n}, epsilon = {epsilon}",
                        m.as_str()
                    );
                }
                emit(&diagnostics::diagnostic_report_to_json_string(&report), None)?;
            }
            Ok(0)
        }
        DiagnoseCommand::Lemma2x2 {
            trials,
            epsilon,
            seed,
        } => {
            let report = diagnostics::validate_2x2_lemma(trials, epsilon, seed)?;
            if report.accepted == 0 {
                log::warn!("no samples passed the hypothesis gate at epsilon = {epsilon}");
            }
            emit(&diagnostics::diagnostic_report_to_json_string(&report), None)?;
            Ok(0)
        }
    }
}

fn dims(inst: &Instance) -> (usize, usize) {
    match inst {
        Instance::General(g) => (g.n(), g.m()),
        Instance::Special(s) => (s.n(), s.m()),
    }
}

/// Writes a JSON document to the path, or to stdout when no path was given.
fn emit(text: &str, output: Option<PathBuf>) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(&path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Logging
// ---------------------------------------------------------------------------

/// 0 = text, 1 = json; read by the logger on every record.
static ACTIVE_LOG_FORMAT: AtomicU8 = AtomicU8::new(0);

struct StderrLogger;

static LOGGER: StderrLogger = StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::max_level()
    }

    fn log(&self, record: &log::Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let level = record.level().to_string().to_lowercase();
        if ACTIVE_LOG_FORMAT.load(Ordering::Relaxed) == 1 {
            let line = json!({
                "level": level,
                "message": record.args().to_string(),
            });
            eprintln!("{line}");
        } else {
            eprintln!("[{level}] {}", record.args());
        }
    }

    fn flush(&self) {}
}

/// Installs the stderr logger; `PSDP_LOG` overrides the requested level.
fn init_logging(level: LogLevel, format: LogFormat) -> Result<(), Failure> {
    let effective = match std::env::var("PSDP_LOG") {
        Ok(text) if !text.is_empty() => LogLevel::parse(&text).ok_or_else(|| {
            validation_failure(format!(
                "PSDP_LOG must be one of error, warn, info, debug; got \"{text}\""
            ))
        })?,
        _ => level,
    };
    ACTIVE_LOG_FORMAT.store(
        match format {
            LogFormat::Text => 0,
            LogFormat::Json => 1,
        },
        Ordering::Relaxed,
    );
    // A second installation in the same process (tests drive run() directly)
    // is fine: only the level and format change.
    let _ = log::set_logger(&LOGGER);
    log::set_max_level(effective.to_filter());
    Ok(())
}

fn emit_error(format: LogFormat, message: &str) {
    match format {
        LogFormat::Text => eprintln!("error: {message}"),
        LogFormat::Json => {
            let line = json!({ "level": "error", "message": message });
            eprintln!("{line}");
        }
    }
}
