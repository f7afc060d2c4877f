//! Batch experiment runner behind the `aniso-besov` binary.
//!
//! Every run is described by an [`ExperimentConfig`], assembled from an
//! optional JSON file (`--config`) overlaid with command-line flags, and
//! executed by [`execute`].

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::anisotropy::AnisotropyProfile;
use crate::approx::{
    fixed_family, least_squares_slope, lower_bound_family, nikolskii_trials, rate_scan,
    scaled_shell_family, SincGridPolicy,
};
use crate::besov::{block_norm_detailed, definition_norm, BesovParams};
use crate::error::{Error, Result};
use crate::extremal::{
    build_f_k, build_f_k_band_limited, f_k_norm_bounds, sinc_grid, DEFAULT_SINC_HALF_WIDTH,
};
use crate::field::{format_float, lp_norm, sample, write_field, GridSpec, SampledField};
use crate::spectral::{layer_decompose, max_layer};

/// Seed used by randomized checks when none is given.
pub const DEFAULT_SEED: u64 = 7;
/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "ANISO_BESOV_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Truncation errors of a family over a range of n, with the fitted slope.
    RateScan,
    /// Block and modulus-of-smoothness Besov norms of one field.
    Norm,
    /// Sampled norms of F_k against the analytic bounds and the slope law.
    ExtremalVerify,
    /// Randomized check of the inequality of different metrics.
    Nikolskii,
    /// Write the a-layering of a field as one field file per layer.
    Decompose,
    /// Sample a built-in function to a field file.
    Sample,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Command::RateScan => "rate-scan",
            Command::Norm => "norm",
            Command::ExtremalVerify => "extremal-verify",
            Command::Nikolskii => "nikolskii",
            Command::Decompose => "decompose",
            Command::Sample => "sample",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Lower-bound witnesses g_1(n), normalised in B^r_{p,1}.
    G1,
    /// Band-limited F_n scaled by 2^{-n(g + d/p')} / 2.
    Shell,
    /// One field (from --input or --function), normalised in B^r_{p,1}.
    Fixed,
}

/// A Lebesgue or `θ` exponent; accepts numbers and `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExponentRepr", into = "ExponentRepr")]
pub struct ExponentValue(pub f64);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<ExponentRepr> for ExponentValue {
    type Error = String;

    fn try_from(repr: ExponentRepr) -> std::result::Result<Self, String> {
        match repr {
            ExponentRepr::Number(v) => Ok(ExponentValue(v)),
            ExponentRepr::Text(s) => s.parse(),
        }
    }
}

impl From<ExponentValue> for ExponentRepr {
    fn from(v: ExponentValue) -> Self {
        if v.0.is_infinite() {
            ExponentRepr::Text("inf".into())
        } else {
            ExponentRepr::Number(v.0)
        }
    }
}

impl FromStr for ExponentValue {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(ExponentValue(f64::INFINITY)),
            t => t
                .parse::<f64>()
                .map(ExponentValue)
                .map_err(|_| format!("expected a number or \"inf\", got {t:?}")),
        }
    }
}

/// Inclusive integer range written `a..b` or `a..=b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct IndexRange {
    pub start: u32,
    pub end: u32,
}

impl IndexRange {
    pub fn iter(&self) -> std::ops::RangeInclusive<u32> {
        self.start..=self.end
    }
}

impl FromStr for IndexRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("expected a range like 2..6, got {s:?}"))?;
        let b = b.strip_prefix('=').unwrap_or(b);
        let start = a
            .trim()
            .parse()
            .map_err(|_| format!("bad range start in {s:?}"))?;
        let end = b
            .trim()
            .parse()
            .map_err(|_| format!("bad range end in {s:?}"))?;
        if end < start {
            return Err(format!("empty range {s:?}"));
        }
        Ok(IndexRange { start, end })
    }
}

impl TryFrom<String> for IndexRange {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<IndexRange> for String {
    fn from(r: IndexRange) -> String {
        format!("{}..{}", r.start, r.end)
    }
}

/// Parameters of one run. Unset fields take per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub r: Option<Vec<f64>>,
    pub d: Option<usize>,
    pub p: Option<ExponentValue>,
    pub q: Option<ExponentValue>,
    pub theta: Option<ExponentValue>,
    pub n_range: Option<IndexRange>,
    pub k_range: Option<IndexRange>,
    pub half_width: Option<f64>,
    pub samples: Option<usize>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub input: Option<PathBuf>,
    pub function: Option<String>,
    pub family: Option<FamilyKind>,
    pub s_max: Option<u32>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        ExperimentConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Fields set in `top` win.
    pub fn merge(self, top: ExperimentConfig) -> ExperimentConfig {
        overlay!(
            self, top, command, r, d, p, q, theta, n_range, k_range, half_width, samples, output,
            seed, trials, input, function, family, s_max
        )
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "aniso-besov",
    version,
    about = "Anisotropic Besov norms and band-limited approximation experiments"
)]
pub struct Cli {
    /// Experiment to run; may instead come from --config.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON file with experiment parameters; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Smoothness vector, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub r: Option<Vec<f64>>,
    /// Dimension (nikolskii, or when --r is absent).
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub p: Option<ExponentValue>,
    #[arg(long)]
    pub q: Option<ExponentValue>,
    #[arg(long)]
    pub theta: Option<ExponentValue>,
    /// Range of n for rate-scan, e.g. 2..6 (inclusive).
    #[arg(long = "n")]
    pub n_range: Option<IndexRange>,
    /// Range of k for extremal-verify, e.g. 1..5 (inclusive).
    #[arg(long = "k")]
    pub k_range: Option<IndexRange>,
    /// Half-width of the box (for sinc families: L_0).
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Samples per axis.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Field file to read.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Built-in function: gaussian, gaussian:SIGMA, f0 or fk:K.
    #[arg(long)]
    pub function: Option<String>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    /// Finest layer for norm and decompose.
    #[arg(long)]
    pub s_max: Option<u32>,
}

impl Cli {
    pub fn into_config(self) -> Result<ExperimentConfig> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = ExperimentConfig {
            command: self.command,
            r: self.r,
            d: self.d,
            p: self.p,
            q: self.q,
            theta: self.theta,
            n_range: self.n_range,
            k_range: self.k_range,
            half_width: self.half_width,
            samples: self.samples,
            output: self.output,
            seed: self.seed,
            trials: self.trials,
            input: self.input,
            function: self.function,
            family: self.family,
            s_max: self.s_max,
        };
        Ok(base.merge(flags))
    }
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// Process exit status for an error: 2 for invalid input, 3 for a numerical
/// guard, 1 otherwise (I/O).
pub fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        2
    } else if err.is_numerical_guard() {
        3
    } else {
        1
    }
}

/// Parses `args` (program name first), runs the experiment and returns the
/// exit status. Messages go to stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.into_config().and_then(|config| execute(&config)) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Applies [`THREADS_ENV`] to the global thread pool.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{THREADS_ENV} must be a positive integer, got {value:?}"
            ))
        })?;
    // a pool built earlier in the process keeps its size
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn require<T: Clone>(value: &Option<T>, name: &str, command: Command) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| Error::InvalidArgument(format!("{command} needs --{name}")))
}

fn profile_of(config: &ExperimentConfig, command: Command) -> Result<AnisotropyProfile> {
    let r = require(&config.r, "r", command)?;
    let profile = AnisotropyProfile::new(&r)?;
    if let Some(d) = config.d {
        if d != profile.dim() {
            return Err(Error::InvalidArgument(format!(
                "--d {d} disagrees with the {} components of --r",
                profile.dim()
            )));
        }
    }
    Ok(profile)
}

fn exponent(value: Option<ExponentValue>, default: f64) -> f64 {
    value.map_or(default, |v| v.0)
}

fn check_positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(Error::InvalidArgument(format!(
            "--{name} must be positive, got {x}"
        ))),
        _ => Ok(()),
    }
}

/// Runs the experiment described by `config`, writing its artifacts.
pub fn execute(config: &ExperimentConfig) -> Result<Outcome> {
    let command = config
        .command
        .ok_or_else(|| Error::InvalidArgument("no command given".into()))?;
    check_positive("half-width", config.half_width)?;
    match command {
        Command::RateScan => run_rate_scan(config),
        Command::Norm => run_norm(config),
        Command::ExtremalVerify => run_extremal(config),
        Command::Nikolskii => run_nikolskii(config),
        Command::Decompose => run_decompose(config),
        Command::Sample => run_sample(config),
    }
}

fn output_path(config: &ExperimentConfig, default: &str) -> PathBuf {
    config
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(default))
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text.as_bytes())?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn default_grid(d: usize) -> (f64, usize) {
    match d {
        1 => (16.0, 2048),
        2 => (10.0, 256),
        _ => (6.0, 32),
    }
}

fn grid_of(config: &ExperimentConfig, d: usize) -> Result<GridSpec> {
    let (l, n) = default_grid(d);
    GridSpec::isotropic(
        d,
        config.half_width.unwrap_or(l),
        config.samples.unwrap_or(n),
    )
}

/// Built-in test functions. `f0` and `fk:K` are band-limited to their
/// shells; `fk` needs a profile.
pub fn builtin_function(
    name: &str,
    profile: Option<&AnisotropyProfile>,
    spec: &GridSpec,
) -> Result<SampledField> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let number = |a: Option<&str>| -> Result<Option<f64>> {
        a.map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad parameter in function {name:?}")))
        })
        .transpose()
    };
    match head {
        "gaussian" => {
            let sigma = number(arg)?.unwrap_or(1.0);
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "gaussian width must be positive, got {sigma}"
                )));
            }
            sample(
                |x| (-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * sigma * sigma)).exp(),
                spec,
            )
        }
        "f0" | "fk" => {
            let k = if head == "f0" {
                0
            } else {
                let k = number(arg)?
                    .ok_or_else(|| Error::InvalidArgument("fk needs an index, e.g. fk:2".into()))?;
                if k < 0.0 || k.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "fk index must be a non-negative integer, got {k}"
                    )));
                }
                k as u32
            };
            let fallback;
            let profile = match profile {
                Some(p) => p,
                None if k == 0 => {
                    fallback = AnisotropyProfile::new(&vec![1.0; spec.dim()])?;
                    &fallback
                }
                None => return Err(Error::InvalidArgument("fk needs --r".into())),
            };
            build_f_k_band_limited(profile, k, spec)
        }
        _ => Err(Error::InvalidArgument(format!(
            "unknown function {name:?}; expected gaussian, gaussian:SIGMA, f0 or fk:K"
        ))),
    }
}

fn load_field(
    config: &ExperimentConfig,
    profile: Option<&AnisotropyProfile>,
    d: usize,
    command: Command,
) -> Result<SampledField> {
    match (&config.input, &config.function) {
        (Some(_), Some(_)) => Err(Error::InvalidArgument(
            "give either --input or --function, not both".into(),
        )),
        (Some(path), None) => {
            let f = SampledField::load(path)?;
            if f.spec().dim() != d {
                return Err(Error::GridMismatch(format!(
                    "field in {} is {}-dimensional, expected {d}",
                    path.display(),
                    f.spec().dim()
                )));
            }
            Ok(f)
        }
        (None, Some(name)) => builtin_function(name, profile, &grid_of(config, d)?),
        (None, None) => Err(Error::InvalidArgument(format!(
            "{command} needs --input or --function"
        ))),
    }
}

fn run_rate_scan(config: &ExperimentConfig) -> Result<Outcome> {
    let command = Command::RateScan;
    let profile = profile_of(config, command)?;
    let p = exponent(config.p, 2.0);
    let q = exponent(config.q, p);
    crate::approx::theoretical_rate(&profile, p, q)?;
    let range = config.n_range.unwrap_or(IndexRange { start: 2, end: 6 });
    let mut policy = SincGridPolicy::default_for(profile.dim());
    if let Some(l) = config.half_width {
        policy.half_width = l;
    }
    if let Some(n) = config.samples {
        policy.samples = n;
    }
    let report = match config.family.unwrap_or(FamilyKind::G1) {
        FamilyKind::G1 => rate_scan(
            lower_bound_family(profile.clone(), p, policy),
            &profile,
            p,
            q,
            range.iter(),
        )?,
        FamilyKind::Shell => rate_scan(
            scaled_shell_family(profile.clone(), p, 0.5, policy),
            &profile,
            p,
            q,
            range.iter(),
        )?,
        FamilyKind::Fixed => {
            let f = load_field(config, Some(&profile), profile.dim(), command)?;
            rate_scan(fixed_family(f, &profile, p)?, &profile, p, q, range.iter())?
        }
    };
    let csv = output_path(config, "rate_scan.csv");
    let side = sidecar_path(&csv);
    write_text(&csv, &report.to_csv())?;
    write_json(&side, &report.sidecar())?;
    let fitted = report.rows.iter().filter(|r| r.fitted).count();
    Ok(Outcome {
        summary: format!(
            "fitted slope {:.4} vs theoretical {:.4} ({fitted}/{} rows fitted)",
            report.fitted_slope,
            -report.theoretical_exponent,
            report.rows.len()
        ),
        files: vec![csv, side],
    })
}

fn run_norm(config: &ExperimentConfig) -> Result<Outcome> {
    let command = Command::Norm;
    let profile = profile_of(config, command)?;
    let p = exponent(config.p, 2.0);
    let theta = exponent(config.theta, 2.0);
    let mut params = BesovParams::new(profile.clone(), p, theta)?;
    if let Some(s) = config.s_max {
        params = params.with_s_max(s);
    }
    let f = load_field(config, Some(&profile), profile.dim(), command)?;
    let block = block_norm_detailed(&f, &params)?;
    let definition = if profile.dim() <= 2 {
        Some(definition_norm(&f, &params)?.value)
    } else {
        None
    };
    let ratio = definition.map(|d| d / block.value);
    let json = serde_json::json!({
        "block_norm": block.value,
        "definition_norm": definition,
        "ratio": ratio,
        "layer_norms": block.layer_norms,
        "S_max": block.s_max,
        "p": ExponentValue(p),
        "theta": ExponentValue(theta),
        "r": profile.smoothness(),
        "grid": f.spec(),
    });
    let summary = match (definition, ratio) {
        (Some(d), Some(r)) => format!("block norm {} definition norm {d} ratio {r}", block.value),
        _ => format!("block norm {}", block.value),
    };
    let files = match &config.output {
        Some(path) => {
            write_json(path, &json)?;
            vec![path.clone()]
        }
        None => {
            println!("{}", serde_json::to_string_pretty(&json)?);
            Vec::new()
        }
    };
    Ok(Outcome { summary, files })
}

fn run_extremal(config: &ExperimentConfig) -> Result<Outcome> {
    let command = Command::ExtremalVerify;
    let profile = profile_of(config, command)?;
    let p = exponent(config.p, 2.0);
    crate::error::check_lebesgue_exponent("p", p)?;
    let range = config.k_range.unwrap_or(IndexRange { start: 1, end: 5 });
    if range.start == 0 {
        return Err(Error::InvalidArgument("k must start at 1".into()));
    }
    let d = profile.dim();
    let half_width = config.half_width.unwrap_or(DEFAULT_SINC_HALF_WIDTH);
    let samples = config
        .samples
        .unwrap_or(SincGridPolicy::default_for(d).samples);
    let mut csv = String::from("k,norm,lower,upper,within_bounds\n");
    let mut ks = Vec::new();
    let mut logs = Vec::new();
    let mut inside = 0usize;
    let mut grids = serde_json::Map::new();
    for k in range.iter() {
        let spec = sinc_grid(&profile, k, half_width, samples)?;
        let norm = lp_norm(&build_f_k(&profile, k, &spec)?, p)?;
        let (lower, upper) = f_k_norm_bounds(&profile, k, p)?;
        let ok = norm >= lower * 0.95 && norm <= upper * 1.05;
        inside += ok as usize;
        csv.push_str(&format!(
            "{k},{},{},{},{ok}\n",
            format_float(norm),
            format_float(lower),
            format_float(upper)
        ));
        ks.push(k as f64);
        logs.push(norm.log2());
        grids.insert(k.to_string(), serde_json::to_value(&spec)?);
    }
    let conj = if p.is_infinite() {
        1.0
    } else {
        1.0 - p.recip()
    };
    let expected = d as f64 * conj;
    let slope = least_squares_slope(&ks, &logs).ok();
    let path = output_path(config, "extremal.csv");
    let side = sidecar_path(&path);
    write_text(&path, &csv)?;
    write_json(
        &side,
        &serde_json::json!({
            "fitted_slope": slope,
            "expected_slope": expected,
            "p": ExponentValue(p),
            "r": profile.smoothness(),
            "grid": grids,
        }),
    )?;
    let total = ks.len();
    let slope_text = slope.map_or("n/a".to_string(), |s| format!("{s:.4}"));
    Ok(Outcome {
        summary: format!(
            "slope {slope_text} vs d/p' {expected:.4}; {inside}/{total} within bounds"
        ),
        files: vec![path, side],
    })
}

fn run_nikolskii(config: &ExperimentConfig) -> Result<Outcome> {
    let d = match (config.d, &config.r) {
        (Some(d), _) => d,
        (None, Some(r)) => r.len(),
        (None, None) => 1,
    };
    let trials = config.trials.unwrap_or(200);
    if trials == 0 {
        return Err(Error::InvalidArgument("--trials must be positive".into()));
    }
    let seed = config.seed.unwrap_or(DEFAULT_SEED);
    let summary = nikolskii_trials(d, trials, seed)?;
    let mut csv = String::from("trial,d,inv_p1,inv_p2,lhs,rhs,ratio,pass\n");
    for t in &summary.trials {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            t.trial,
            t.d,
            format_float(t.p1.recip()),
            format_float(t.p2.recip()),
            format_float(t.record.lhs),
            format_float(t.record.rhs),
            format_float(t.record.ratio),
            t.record.pass
        ));
    }
    let path = output_path(config, "nikolskii.csv");
    write_text(&path, &csv)?;
    let line = format!("{}/{} pass", summary.passed, summary.trials.len());
    if summary.violations() > 0 {
        return Err(Error::InequalityViolated(line));
    }
    Ok(Outcome {
        summary: line,
        files: vec![path],
    })
}

fn run_decompose(config: &ExperimentConfig) -> Result<Outcome> {
    let command = Command::Decompose;
    let profile = profile_of(config, command)?;
    let f = load_field(config, Some(&profile), profile.dim(), command)?;
    let s_max = match config.s_max {
        Some(s) => s,
        None => max_layer(&profile, f.spec())?,
    };
    let stack = layer_decompose(&f, &profile, s_max)?;
    let dir = output_path(config, "layers");
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let mut names = Vec::new();
    let save = |name: &str, field: &SampledField| -> Result<PathBuf> {
        let path = dir.join(name);
        let mut out = BufWriter::new(fs::File::create(&path)?);
        write_field(&mut out, field)?;
        Ok(path)
    };
    for (s, layer) in stack.layers().iter().enumerate() {
        let name = format!("layer_{s:03}.field");
        files.push(save(&name, layer)?);
        names.push(name);
    }
    files.push(save("residual.field", stack.residual())?);
    let manifest = serde_json::json!({
        "profile": {
            "r": profile.smoothness(),
            "g": profile.g(),
            "a": profile.bases(),
            "b": profile.weight_base(),
        },
        "S_max": s_max,
        "layers": names,
        "residual": "residual.field",
    });
    let manifest_path = dir.join("manifest.json");
    write_json(&manifest_path, &manifest)?;
    files.push(manifest_path);
    Ok(Outcome {
        summary: format!(
            "{} layers and residual written to {}",
            s_max + 1,
            dir.display()
        ),
        files,
    })
}

fn run_sample(config: &ExperimentConfig) -> Result<Outcome> {
    let command = Command::Sample;
    let profile = match &config.r {
        Some(_) => Some(profile_of(config, command)?),
        None => None,
    };
    let d = profile.as_ref().map_or(config.d.unwrap_or(1), |p| p.dim());
    let name = require(&config.function, "function", command)?;
    let f = builtin_function(&name, profile.as_ref(), &grid_of(config, d)?)?;
    let path = output_path(config, "sample.field");
    f.save(&path)?;
    Ok(Outcome {
        summary: format!(
            "{name} sampled on {} points to {}",
            f.spec().len(),
            path.display()
        ),
        files: vec![path],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_values_parse() {
        assert_eq!("2.5".parse::<ExponentValue>().unwrap(), ExponentValue(2.5));
        assert_eq!("inf".parse::<ExponentValue>().unwrap().0, f64::INFINITY);
        assert!("two".parse::<ExponentValue>().is_err());
        let v: ExponentValue = serde_json::from_str("\"inf\"").unwrap();
        assert!(v.0.is_infinite());
        let v: ExponentValue = serde_json::from_str("1.5").unwrap();
        assert_eq!(v.0, 1.5);
        assert_eq!(
            serde_json::to_string(&ExponentValue(f64::INFINITY)).unwrap(),
            "\"inf\""
        );
    }

    #[test]
    fn ranges_parse() {
        assert_eq!(
            "2..6".parse::<IndexRange>().unwrap(),
            IndexRange { start: 2, end: 6 }
        );
        assert_eq!(
            "1..=5".parse::<IndexRange>().unwrap(),
            IndexRange { start: 1, end: 5 }
        );
        assert!("6..2".parse::<IndexRange>().is_err());
        assert!("4".parse::<IndexRange>().is_err());
        assert_eq!("2..6".parse::<IndexRange>().unwrap().iter().count(), 5);
    }

    #[test]
    fn flags_override_file_values() {
        let file: ExperimentConfig = serde_json::from_str(
            r#"{"command":"rate-scan","r":[1.0],"p":2,"q":"inf","n_range":"2..6","seed":3}"#,
        )
        .unwrap();
        let flags = ExperimentConfig {
            q: Some(ExponentValue(4.0)),
            seed: Some(9),
            ..Default::default()
        };
        let merged = file.merge(flags);
        assert_eq!(merged.command, Some(Command::RateScan));
        assert_eq!(merged.q, Some(ExponentValue(4.0)));
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.r, Some(vec![1.0]));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn validation_errors_map_to_exit_two() {
        let config = ExperimentConfig {
            command: Some(Command::RateScan),
            r: Some(vec![1.0]),
            p: Some(ExponentValue(4.0)),
            q: Some(ExponentValue(2.0)),
            ..Default::default()
        };
        assert_eq!(exit_code(&execute(&config).unwrap_err()), 2);
        let config = ExperimentConfig {
            command: Some(Command::Norm),
            r: Some(vec![-1.0]),
            ..Default::default()
        };
        assert_eq!(exit_code(&execute(&config).unwrap_err()), 2);
        assert_eq!(
            exit_code(&execute(&ExperimentConfig::default()).unwrap_err()),
            2
        );
    }

    #[test]
    fn builtin_functions() {
        let spec = GridSpec::isotropic(1, 8.0, 64).unwrap();
        let g = builtin_function("gaussian:2", None, &spec).unwrap();
        assert_eq!(g.values()[32].re, 1.0);
        assert!(builtin_function("f0", None, &spec).is_ok());
        assert!(builtin_function("fk:1", None, &spec).is_err());
        let profile = AnisotropyProfile::new(&[1.0]).unwrap();
        assert!(builtin_function("fk:1", Some(&profile), &spec).is_ok());
        assert!(builtin_function("fk:x", Some(&profile), &spec).is_err());
        assert!(builtin_function("bessel", None, &spec).is_err());
    }
}
