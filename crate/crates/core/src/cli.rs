//! Command-line configuration and execution.
//!
//! Commands: `code-info`, `sweep`, `learn`, `calibrate`, `lemma`. Options
//! resolve in three layers: explicit flags win over values from a JSON
//! config file (`--config`, flat keys mirroring the flag names), which win
//! over built-in defaults. The fully resolved configuration is echoed at the
//! top of every output file so a run can be reproduced from its own header.
//!
//! Output is CSV (one primary table per command, auxiliary results on
//! `#`-prefixed lines) or JSON lines (every row tagged with a `record`
//! field). Numbers are printed in shortest round-trip form, so re-running a
//! header's config reproduces the file byte for byte.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::adaptive::{
    run_calibration, run_learning, CalibrationConfig, CalibrationRun, DEFAULT_BACKGROUND_RATE,
    DEFAULT_GAIN, DEFAULT_GAIN_THETA, DEFAULT_THETA_OFFSET, DEFAULT_THETA_TARGET,
};
use crate::bposd::{PriorVector, DEFAULT_MAX_ITER};
use crate::codes::{check_weight_histogram, rotated_surface, unrotated_surface, CssCode};
use crate::experiments::{
    capped_failure_probability, fit_scaling, lemma_counterexample, run_case, CaseId, CaseSpec,
    FailureRecord, ScalingFit, DEFAULT_EPSILON_GRID,
};
use crate::noise::ErrorModel;
use crate::Real;

/// Artifact version recorded in provenance headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const DEFAULT_P_STAR: f64 = 1.0 / 3.0;
const DEFAULT_LEARN_ROUNDS: usize = 2000;
const DEFAULT_CALIBRATE_ROUNDS: usize = 4000;

/// Errors from configuration parsing.
#[derive(Debug)]
pub enum CliError {
    /// Malformed command line; carries clap's rendering and exit behavior.
    Usage(clap::Error),
    /// Structurally valid flags with invalid values.
    Invalid(anyhow::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(e) => e.fmt(f),
            CliError::Invalid(e) => write!(f, "invalid configuration: {e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Code families the CLI can build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CodeFamily {
    Rotated,
    Unrotated,
}

impl CodeFamily {
    pub fn build(self, d: usize) -> Result<CssCode> {
        let code = match self {
            CodeFamily::Rotated => rotated_surface(d),
            CodeFamily::Unrotated => unrotated_surface(d),
        };
        code.map_err(|e| anyhow!("codes: {e}"))
    }
}

/// Output encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

/// The selected subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    CodeInfo,
    Sweep,
    Learn,
    Calibrate,
    Lemma,
}

/// Fully resolved run configuration.
///
/// Every run carries all fields; commands ignore the ones they do not use.
/// The serialized form is the provenance header.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub code: CodeFamily,
    pub d: usize,
    pub cases: Vec<CaseId>,
    /// Epsilon grid for sweeps and scaling fits.
    pub eps: Vec<f64>,
    pub p_star: f64,
    pub bad_site: usize,
    /// Background rate for the closed-loop runs.
    pub epsilon: f64,
    pub gamma: f64,
    pub gain_theta: f64,
    pub theta_target: f64,
    pub theta0: f64,
    pub theta_initial: f64,
    pub target_qubit: usize,
    pub rounds: usize,
    pub known_sites: Vec<usize>,
    pub n2: usize,
    /// Forced enumeration cap; `None` dispatches on code size.
    pub cap: Option<usize>,
    pub max_iter: usize,
    pub seed: u64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Flag definitions
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "priordec",
    version,
    about = "Surface-code memory simulation with prior-informed BPOSD decoding"
)]
struct CliArgs {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Print code parameters, check-weight histograms, and the qubit index map as JSON.
    CodeInfo {
        #[command(flatten)]
        code: CodeOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate logical failure probabilities for the prior/noise cases over an epsilon grid.
    Sweep {
        #[command(flatten)]
        code: CodeOpts,
        /// Comma-separated case list, e.g. 1,2,3.
        #[arg(long)]
        cases: Option<String>,
        /// Comma-separated epsilon grid, e.g. 1e-3,2e-3,5e-3,1e-2.
        #[arg(long)]
        eps: Option<String>,
        /// Flip rate of the bad site.
        #[arg(long)]
        p_star: Option<f64>,
        /// Index of the bad site.
        #[arg(long)]
        bad_site: Option<usize>,
        /// Force a weight cap instead of size-based dispatch.
        #[arg(long)]
        cap: Option<usize>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Learn per-qubit priors from decoder output over repeated memory rounds.
    Learn {
        #[command(flatten)]
        code: CodeOpts,
        /// True flip rate of the bad site.
        #[arg(long)]
        p_star: Option<f64>,
        /// Index of the bad site.
        #[arg(long)]
        bad_site: Option<usize>,
        /// Background flip rate during learning.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Learning gain.
        #[arg(long)]
        gamma: Option<f64>,
        /// Number of memory rounds.
        #[arg(long)]
        rounds: Option<usize>,
        /// Comma-separated epsilon grid for the before/after sweeps.
        #[arg(long)]
        eps: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Calibrate a single-qubit rotation in closed loop while decoding.
    Calibrate {
        #[command(flatten)]
        code: CodeOpts,
        #[arg(long)]
        theta_target: Option<f64>,
        /// Hidden true rotation offset (simulation parameter).
        #[arg(long)]
        theta0: Option<f64>,
        #[arg(long)]
        theta_initial: Option<f64>,
        /// Angle feedback gain.
        #[arg(long)]
        gain_theta: Option<f64>,
        /// Prior learning gain.
        #[arg(long)]
        gamma: Option<f64>,
        /// Background flip rate.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        rounds: Option<usize>,
        /// Qubit carrying the calibrated gate.
        #[arg(long)]
        target_qubit: Option<usize>,
        /// Comma-separated epsilon grid for the post-calibration sweep.
        #[arg(long)]
        eps: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Exhaustively check correction of flagged sites plus bounded unknown flips.
    Lemma {
        #[command(flatten)]
        code: CodeOpts,
        /// Comma-separated flagged site indices.
        #[arg(long)]
        known_sites: Option<String>,
        /// Number of unknown-location flips to allow.
        #[arg(long)]
        n2: Option<usize>,
        /// Prior assigned to the flagged sites.
        #[arg(long)]
        p_star: Option<f64>,
        /// Prior assigned everywhere else.
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(Debug, Args)]
struct CodeOpts {
    /// Code family.
    #[arg(long, value_enum)]
    code: Option<CodeFamily>,
    /// Code distance (at least 2).
    #[arg(long)]
    d: Option<usize>,
}

#[derive(Debug, Args)]
struct CommonOpts {
    /// JSON config file with flat keys mirroring the flag names; explicit
    /// flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed; recorded in all output records.
    #[arg(long, env = "PRIORDEC_SEED")]
    seed: Option<u64>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Belief-propagation iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
}

/// Values loadable from `--config`; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    code: Option<CodeFamily>,
    d: Option<usize>,
    cases: Option<String>,
    eps: Option<String>,
    p_star: Option<f64>,
    bad_site: Option<usize>,
    epsilon: Option<f64>,
    gamma: Option<f64>,
    gain_theta: Option<f64>,
    theta_target: Option<f64>,
    theta0: Option<f64>,
    theta_initial: Option<f64>,
    target_qubit: Option<usize>,
    rounds: Option<usize>,
    known_sites: Option<String>,
    n2: Option<usize>,
    cap: Option<usize>,
    max_iter: Option<usize>,
    seed: Option<u64>,
    format: Option<OutputFormat>,
    out: Option<PathBuf>,
}

fn load_file_config(path: Option<&PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading config file {}", p.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config file {}", p.display()))
        }
    }
}

fn parse_list<T: std::str::FromStr>(input: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    input
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| anyhow!("invalid {what} entry '{s}': {e}"))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

/// Parses argv and an optional config file into a resolved [`RunConfig`].
///
/// Precedence: explicit flags, then config-file values, then defaults.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = CliArgs::try_parse_from(argv).map_err(CliError::Usage)?;
    resolve(cli.command).map_err(CliError::Invalid)
}

fn resolve(command: CliCommand) -> Result<RunConfig> {
    let (kind, code_opts, common) = match &command {
        CliCommand::CodeInfo { code, common } => (CommandKind::CodeInfo, code, common),
        CliCommand::Sweep { code, common, .. } => (CommandKind::Sweep, code, common),
        CliCommand::Learn { code, common, .. } => (CommandKind::Learn, code, common),
        CliCommand::Calibrate { code, common, .. } => (CommandKind::Calibrate, code, common),
        CliCommand::Lemma { code, common, .. } => (CommandKind::Lemma, code, common),
    };
    let file = load_file_config(common.config.as_ref())?;

    let default_family = match kind {
        CommandKind::Calibrate => CodeFamily::Unrotated,
        _ => CodeFamily::Rotated,
    };
    let default_rounds = match kind {
        CommandKind::Calibrate => DEFAULT_CALIBRATE_ROUNDS,
        _ => DEFAULT_LEARN_ROUNDS,
    };

    let mut config = RunConfig {
        command: kind,
        code: code_opts.code.or(file.code).unwrap_or(default_family),
        d: code_opts.d.or(file.d).unwrap_or(4),
        cases: CaseId::ALL.to_vec(),
        eps: DEFAULT_EPSILON_GRID.to_vec(),
        p_star: file.p_star.unwrap_or(DEFAULT_P_STAR),
        bad_site: file.bad_site.unwrap_or(0),
        epsilon: file.epsilon.unwrap_or(DEFAULT_BACKGROUND_RATE),
        gamma: file.gamma.unwrap_or(DEFAULT_GAIN),
        gain_theta: file.gain_theta.unwrap_or(DEFAULT_GAIN_THETA),
        theta_target: file.theta_target.unwrap_or(DEFAULT_THETA_TARGET),
        theta0: file.theta0.unwrap_or(DEFAULT_THETA_OFFSET),
        theta_initial: file.theta_initial.unwrap_or(0.0),
        target_qubit: file.target_qubit.unwrap_or(0),
        rounds: file.rounds.unwrap_or(default_rounds),
        known_sites: match &file.known_sites {
            Some(s) => parse_list(s, "known-sites")?,
            None => vec![0],
        },
        n2: file.n2.unwrap_or(1),
        cap: file.cap,
        max_iter: common.max_iter.or(file.max_iter).unwrap_or(DEFAULT_MAX_ITER),
        seed: common.seed.or(file.seed).unwrap_or(0),
        format: common.format.or(file.format).unwrap_or(OutputFormat::Csv),
        out: common.out.clone().or(file.out),
    };
    if let Some(s) = &file.cases {
        config.cases = parse_list::<CaseId>(s, "cases")?;
    }
    if let Some(s) = &file.eps {
        config.eps = parse_list(s, "eps")?;
    }

    match command {
        CliCommand::CodeInfo { .. } => {}
        CliCommand::Sweep {
            cases,
            eps,
            p_star,
            bad_site,
            cap,
            ..
        } => {
            if let Some(s) = cases {
                config.cases = parse_list::<CaseId>(&s, "cases")?;
            }
            if let Some(s) = eps {
                config.eps = parse_list(&s, "eps")?;
            }
            config.p_star = p_star.unwrap_or(config.p_star);
            config.bad_site = bad_site.unwrap_or(config.bad_site);
            config.cap = cap.or(config.cap);
        }
        CliCommand::Learn {
            p_star,
            bad_site,
            epsilon,
            gamma,
            rounds,
            eps,
            ..
        } => {
            config.p_star = p_star.unwrap_or(config.p_star);
            config.bad_site = bad_site.unwrap_or(config.bad_site);
            config.epsilon = epsilon.unwrap_or(config.epsilon);
            config.gamma = gamma.unwrap_or(config.gamma);
            config.rounds = rounds.unwrap_or(config.rounds);
            if let Some(s) = eps {
                config.eps = parse_list(&s, "eps")?;
            }
        }
        CliCommand::Calibrate {
            theta_target,
            theta0,
            theta_initial,
            gain_theta,
            gamma,
            epsilon,
            rounds,
            target_qubit,
            eps,
            ..
        } => {
            config.theta_target = theta_target.unwrap_or(config.theta_target);
            config.theta0 = theta0.unwrap_or(config.theta0);
            config.theta_initial = theta_initial.unwrap_or(config.theta_initial);
            config.gain_theta = gain_theta.unwrap_or(config.gain_theta);
            config.gamma = gamma.unwrap_or(config.gamma);
            config.epsilon = epsilon.unwrap_or(config.epsilon);
            config.rounds = rounds.unwrap_or(config.rounds);
            config.target_qubit = target_qubit.unwrap_or(config.target_qubit);
            if let Some(s) = eps {
                config.eps = parse_list(&s, "eps")?;
            }
        }
        CliCommand::Lemma {
            known_sites,
            n2,
            p_star,
            epsilon,
            ..
        } => {
            if let Some(s) = known_sites {
                config.known_sites = parse_list(&s, "known-sites")?;
            }
            config.n2 = n2.unwrap_or(config.n2);
            config.p_star = p_star.unwrap_or(config.p_star);
            config.epsilon = epsilon.unwrap_or(config.epsilon);
        }
    }

    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<()> {
    if config.d < 2 {
        bail!("distance must be at least 2, got {}", config.d);
    }
    let code = config.code.build(config.d)?;
    if config.eps.is_empty() {
        bail!("epsilon grid must be nonempty");
    }
    for &eps in &config.eps {
        if eps <= 0.0 || eps >= 0.5 {
            bail!("epsilon grid values must lie in (0, 0.5), got {eps}");
        }
    }
    if config.epsilon <= 0.0 || config.epsilon >= 0.5 {
        bail!(
            "background epsilon must lie in (0, 0.5), got {}",
            config.epsilon
        );
    }
    if config.cases.is_empty() {
        bail!("case list must be nonempty");
    }
    if config.p_star <= 0.0 || config.p_star >= 1.0 {
        bail!("p-star must lie in (0, 1), got {}", config.p_star);
    }
    if config.gamma <= 0.0 || config.gamma > 1.0 {
        bail!("gamma must lie in (0, 1], got {}", config.gamma);
    }
    if config.rounds == 0 {
        bail!("rounds must be at least 1");
    }
    if config.bad_site >= code.n {
        bail!("bad-site {} out of range for n = {}", config.bad_site, code.n);
    }
    if config.target_qubit >= code.n {
        bail!(
            "target-qubit {} out of range for n = {}",
            config.target_qubit,
            code.n
        );
    }
    for &site in &config.known_sites {
        if site >= code.n {
            bail!("known site {site} out of range for n = {}", code.n);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Output sink
// ---------------------------------------------------------------------------

struct Sink {
    writer: Box<dyn Write>,
    format: OutputFormat,
}

impl Sink {
    fn open(config: &RunConfig) -> Result<Self> {
        let writer: Box<dyn Write> = match &config.out {
            Some(path) => Box::new(
                fs::File::create(path)
                    .with_context(|| format!("creating output file {}", path.display()))?,
            ),
            None => Box::new(io::stdout()),
        };
        Ok(Self {
            writer,
            format: config.format,
        })
    }

    fn provenance(&mut self, config: &RunConfig) -> Result<()> {
        let body = serde_json::to_string(config)?;
        match self.format {
            OutputFormat::Csv => {
                writeln!(self.writer, "# priordec {VERSION}")?;
                writeln!(self.writer, "# config {body}")?;
            }
            OutputFormat::Jsonl => {
                let config_value: serde_json::Value = serde_json::from_str(&body)?;
                writeln!(
                    self.writer,
                    "{}",
                    json!({"record": "provenance", "version": VERSION, "config": config_value})
                )?;
            }
        }
        Ok(())
    }

    fn header(&mut self, columns: &str) -> Result<()> {
        if self.format == OutputFormat::Csv {
            writeln!(self.writer, "{columns}")?;
        }
        Ok(())
    }

    fn row(&mut self, csv: String, jsonl: serde_json::Value) -> Result<()> {
        match self.format {
            OutputFormat::Csv => writeln!(self.writer, "{csv}")?,
            OutputFormat::Jsonl => writeln!(self.writer, "{jsonl}")?,
        }
        Ok(())
    }

    /// Auxiliary row: comment-prefixed in CSV, a typed record in JSONL.
    fn aux(&mut self, csv: String, jsonl: serde_json::Value) -> Result<()> {
        match self.format {
            OutputFormat::Csv => writeln!(self.writer, "# {csv}")?,
            OutputFormat::Jsonl => writeln!(self.writer, "{jsonl}")?,
        }
        Ok(())
    }

    fn failure(&mut self, rec: &FailureRecord, auxiliary: bool) -> Result<()> {
        let csv = format!(
            "{},{},{},{},{},{},{}",
            rec.code, rec.d, rec.case, rec.epsilon, rec.failure, rec.tail, rec.seed
        );
        let mut value = serde_json::to_value(rec)?;
        value["record"] = json!("failure");
        if auxiliary {
            self.aux(format!("failure {csv}"), value)
        } else {
            self.row(csv, value)
        }
    }

    fn fit(&mut self, label: &str, fit: &ScalingFit) -> Result<()> {
        self.aux(
            format!(
                "fit case={label} slope={} intercept={} residual={}",
                fit.slope, fit.intercept, fit.residual
            ),
            json!({
                "record": "fit",
                "case": label,
                "slope": fit.slope,
                "intercept": fit.intercept,
                "residual": fit.residual,
            }),
        )
    }

    fn stat(&mut self, key: &str, value: f64) -> Result<()> {
        self.aux(
            format!("stat {key}={value}"),
            json!({"record": "stat", "key": key, "value": value}),
        )
    }

    fn json(&mut self, value: serde_json::Value) -> Result<()> {
        writeln!(self.writer, "{value}")?;
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| v.to_string())
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Runs a resolved configuration, writing records to its output target.
pub fn execute(config: &RunConfig) -> Result<()> {
    let mut sink = Sink::open(config)?;
    match config.command {
        CommandKind::CodeInfo => code_info(config, &mut sink)?,
        CommandKind::Sweep => sweep(config, &mut sink)?,
        CommandKind::Learn => learn(config, &mut sink)?,
        CommandKind::Calibrate => calibrate(config, &mut sink)?,
        CommandKind::Lemma => lemma(config, &mut sink)?,
    }
    sink.flush()
}

fn code_info(config: &RunConfig, sink: &mut Sink) -> Result<()> {
    let code = config.code.build(config.d)?;
    let hist = |h: &crate::gf2::BitMatrix| -> serde_json::Value {
        json!(check_weight_histogram(h)
            .into_iter()
            .map(|(w, count)| (w.to_string(), count))
            .collect::<std::collections::BTreeMap<_, _>>())
    };
    let sites: Vec<serde_json::Value> = code
        .sites()
        .iter()
        .enumerate()
        .map(|(q, &(r, c))| json!({"index": q, "row": r, "col": c}))
        .collect();
    sink.json(json!({
        "name": code.name,
        "n": code.n,
        "k": code.k,
        "d": code.d,
        "z_checks": code.hz.rows(),
        "x_checks": code.hx.rows(),
        "z_check_weights": hist(&code.hz),
        "x_check_weights": hist(&code.hx),
        "logical_z": code.logical_z.ones().collect::<Vec<_>>(),
        "logical_x": code.logical_x.ones().collect::<Vec<_>>(),
        "sites": sites,
    }))
}

fn sweep(config: &RunConfig, sink: &mut Sink) -> Result<()> {
    let code = config.code.build(config.d)?;
    sink.provenance(config)?;
    sink.header("code,d,case,epsilon,failure,tail,seed")?;

    let points: Vec<(CaseId, f64)> = config
        .cases
        .iter()
        .flat_map(|&case| config.eps.iter().map(move |&eps| (case, eps)))
        .collect();
    let records: Vec<FailureRecord> = points
        .par_iter()
        .map(|&(case, epsilon)| {
            let spec = CaseSpec::<Real> {
                case,
                epsilon,
                p_star: config.p_star,
                bad_site: config.bad_site,
            };
            match config.cap {
                None => run_case(&code, &spec, config.max_iter, config.seed),
                Some(cap) => {
                    let base = ErrorModel::new(code.n, epsilon)?;
                    let model = match case {
                        CaseId::IdenticalQubits => base,
                        _ => base.with_override(config.bad_site, config.p_star)?,
                    };
                    let priors = match case {
                        CaseId::KnownBadQubit => PriorVector::uniform(code.n, epsilon)
                            .with_site(config.bad_site, config.p_star),
                        _ => PriorVector::uniform(code.n, epsilon),
                    };
                    let mut rec =
                        capped_failure_probability(&code, &model, &priors, cap, config.max_iter)?;
                    rec.case = case.to_string();
                    rec.seed = config.seed;
                    Ok(rec)
                }
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| anyhow!("experiments: {e}"))?;

    for rec in &records {
        sink.failure(rec, false)?;
    }
    for &case in &config.cases {
        let points: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| r.case == case.to_string())
            .map(|r| (r.epsilon, r.failure))
            .collect();
        let fit = fit_scaling(&points).map_err(|e| anyhow!("experiments: {e}"))?;
        sink.fit(&case.to_string(), &fit)?;
    }
    Ok(())
}

fn learn(config: &RunConfig, sink: &mut Sink) -> Result<()> {
    let code = config.code.build(config.d)?;
    let truth = ErrorModel::<Real>::new(code.n, config.epsilon)
        .and_then(|m| m.with_override(config.bad_site, config.p_star))
        .map_err(|e| anyhow!("noise: {e}"))?;
    let run = run_learning::<Real>(
        &code,
        &truth,
        config.gamma,
        config.rounds,
        config.seed,
        &config.eps,
        config.max_iter,
    )
    .map_err(|e| anyhow!("adaptive: {e}"))?;

    sink.provenance(config)?;
    sink.header("round,prior_target,prior_partner,prior_median_others")?;
    let partner = code.weight_two_partner(config.bad_site);
    for snap in &run.history {
        let target = snap.priors[config.bad_site];
        let partner_p = partner.map(|q| snap.priors[q]);
        let mut rest: Vec<f64> = (0..code.n)
            .filter(|&q| q != config.bad_site && Some(q) != partner)
            .map(|q| snap.priors[q])
            .collect();
        rest.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = rest[rest.len() / 2];
        sink.row(
            format!("{},{},{},{}", snap.round, target, fmt_opt(partner_p), median),
            json!({
                "record": "history",
                "round": snap.round,
                "prior_target": target,
                "prior_partner": partner_p,
                "prior_median_others": median,
            }),
        )?;
    }
    for rec in run.before.iter().chain(&run.after) {
        sink.failure(rec, true)?;
    }
    sink.fit("initial_priors", &run.before_fit)?;
    sink.fit("learned_priors", &run.after_fit)?;
    if let Some(mean) = run.flagged_soft_mean {
        sink.stat("flagged_soft_mean", mean)?;
        sink.stat("flagged_soft_count", run.flagged_soft_count as f64)?;
    }
    Ok(())
}

fn calibrate(config: &RunConfig, sink: &mut Sink) -> Result<()> {
    let code = config.code.build(config.d)?;
    let cal_config = CalibrationConfig {
        theta_target: config.theta_target,
        theta0: config.theta0,
        theta_initial: config.theta_initial,
        gain_theta: config.gain_theta,
        gain: config.gamma,
        epsilon: config.epsilon,
        rounds: config.rounds,
        seed: config.seed,
        target_qubit: config.target_qubit,
        max_iter: config.max_iter,
        grid: config.eps.clone(),
    };
    let run: CalibrationRun<Real> =
        run_calibration(&code, &cal_config).map_err(|e| anyhow!("adaptive: {e}"))?;

    sink.provenance(config)?;
    sink.header("round,theta,theta_tot,b_t,prior_target,prior_median_others")?;
    for row in &run.history {
        sink.row(
            format!(
                "{},{},{},{},{},{}",
                row.round,
                row.theta,
                row.theta_tot,
                u8::from(row.flagged),
                row.prior_target,
                row.prior_median_others
            ),
            json!({
                "record": "history",
                "round": row.round,
                "theta": row.theta,
                "theta_tot": row.theta_tot,
                "b_t": u8::from(row.flagged),
                "prior_target": row.prior_target,
                "prior_median_others": row.prior_median_others,
            }),
        )?;
    }
    for rec in &run.sweep {
        sink.failure(rec, true)?;
    }
    sink.fit("calibrated", &run.sweep_fit)?;
    sink.stat("mean_p_late", run.mean_p_late)?;
    sink.stat("fixed_rate", run.fixed_rate)?;
    sink.stat("fixed_prior", run.fixed_prior)?;
    sink.stat(
        "p_target",
        crate::adaptive::gate_flip_probability(config.theta_target),
    )?;
    Ok(())
}

fn lemma(config: &RunConfig, sink: &mut Sink) -> Result<()> {
    let code = config.code.build(config.d)?;
    let mut priors = PriorVector::<Real>::uniform(code.n, config.epsilon);
    for &site in &config.known_sites {
        priors.set(site, config.p_star);
    }
    let witness = lemma_counterexample(
        &code,
        &config.known_sites,
        config.n2,
        &priors,
        config.max_iter,
    )
    .map_err(|e| anyhow!("experiments: {e}"))?;

    sink.provenance(config)?;
    sink.header("holds,counterexample")?;
    let support: Vec<usize> = witness
        .as_ref()
        .map(|e| e.ones().collect())
        .unwrap_or_default();
    let support_str = support
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(" ");
    sink.row(
        format!("{},{support_str}", witness.is_none()),
        json!({
            "record": "lemma",
            "holds": witness.is_none(),
            "counterexample": witness.as_ref().map(|_| &support),
        }),
    )?;
    Ok(())
}
