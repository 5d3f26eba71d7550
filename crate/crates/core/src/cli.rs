//! Command-line driver: synthetic data generation, fitting, parity checks and
//! scaling benchmarks, each leaving a [`RunManifest`] next to its outputs.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 bad configuration,
//! 3 bad data, 4 no convergence, 5 parity failure.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::data::{generate_synthetic, load_csv, partition_horizontal, write_csv, SyntheticSpec, TabularSource};
use crate::error::{Error, Result};
use crate::field::FieldModulus;
use crate::fixed_point::DEFAULT_SCALE_EXPONENT;
use crate::protocol::messages::format_real;
use crate::protocol::{run_protocol, ProtocolConfig, SharePolicy};
use crate::regression::{centralized_fit, FitOptions, LocalDataset, Penalty, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::sharing::SharingParams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;
pub const EXIT_PARITY: i32 = 5;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Parser, Debug)]
#[command(name = "secure-logreg", version, about = "Federated ridge logistic regression over secret-shared summaries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic multi-institution study, one CSV per institution.
    GenData(GenDataArgs),
    /// Run the secure protocol and write the fit report and deviance trace.
    Fit(FitArgs),
    /// Fit federated and centralized on the same rows and compare coefficients.
    Compare(CompareArgs),
    /// Time the protocol over a sweep of institution counts.
    BenchScaling(BenchArgs),
    /// Repeat a recorded run and check its outputs are reproduced.
    Rerun(RerunArgs),
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ProtocolArgs {
    /// Ridge penalty.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Stop once successive deviances differ by less than this.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Centers needed to reconstruct (t).
    #[arg(long, default_value_t = 2)]
    pub threshold: usize,
    /// Computation centers (w).
    #[arg(long, default_value_t = 3)]
    pub centers: usize,
    /// Fixed-point fractional bits.
    #[arg(long, default_value_t = DEFAULT_SCALE_EXPONENT)]
    pub scale_bits: u32,
    /// Prime field modulus in decimal (default 2^127 - 1).
    #[arg(long)]
    pub modulus: Option<String>,
    /// gradient-only or all.
    #[arg(long, default_value = "all")]
    pub share_policy: SharePolicy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leave the intercept out of the penalty.
    #[arg(long)]
    pub unpenalized_intercept: bool,
}

impl ProtocolArgs {
    pub fn to_config(&self) -> Result<ProtocolConfig> {
        let modulus = match &self.modulus {
            None => FieldModulus::default(),
            Some(s) => {
                let p: u128 = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("modulus {s:?} is not a decimal integer")))?;
                FieldModulus::new(p)?
            }
        };
        let cfg = ProtocolConfig {
            lambda: self.lambda,
            penalize_intercept: !self.unpenalized_intercept,
            sharing: SharingParams {
                threshold: self.threshold,
                parties: self.centers,
            },
            modulus,
            scale_exponent: self.scale_bits,
            tol: self.tol,
            max_iter: self.max_iter,
            share_policy: self.share_policy,
            rng_seed: self.seed,
            quorum: None,
            record_bodies: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn config_record(cfg: &ProtocolConfig) -> Value {
    json!({
        "lambda": cfg.lambda,
        "penalize_intercept": cfg.penalize_intercept,
        "threshold": cfg.sharing.threshold,
        "centers": cfg.sharing.parties,
        "modulus": cfg.modulus.p().to_string(),
        "scale_exponent": cfg.scale_exponent,
        "tol": cfg.tol,
        "max_iter": cfg.max_iter,
        "share_policy": cfg.share_policy.to_string(),
        "rng_seed": cfg.rng_seed,
        "quorum": cfg.quorum(),
    })
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct DataArgs {
    /// CSV files, one per institution, or a single pooled file to split.
    #[arg(long = "data", required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    /// Split a single pooled file into this many institutions.
    #[arg(long)]
    pub institutions: Option<usize>,
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Covariate columns to use (default: every other column).
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Recode response labels, e.g. `yes=1,no=0`.
    #[arg(long, value_delimiter = ',')]
    pub response_map: Vec<String>,
}

impl DataArgs {
    fn source(&self, path: &Path) -> Result<TabularSource> {
        if !self.delimiter.is_ascii() {
            return Err(Error::InvalidConfig(format!("delimiter {:?} is not ASCII", self.delimiter)));
        }
        let response_map = if self.response_map.is_empty() {
            None
        } else {
            let mut map = HashMap::new();
            for pair in &self.response_map {
                let (label, code) = pair
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidConfig(format!("response map entry {pair:?} is not label=code")))?;
                let code: u8 = match code.trim() {
                    "0" => 0,
                    "1" => 1,
                    other => {
                        return Err(Error::InvalidConfig(format!("response code {other:?} must be 0 or 1")))
                    }
                };
                map.insert(label.trim().to_string(), code);
            }
            Some(map)
        };
        Ok(TabularSource {
            path: path.to_path_buf(),
            response: self.response.clone(),
            covariates: self.covariates.clone(),
            delimiter: self.delimiter as u8,
            response_map,
        })
    }

    /// Loads one dataset per institution, splitting a pooled file if asked.
    pub fn load(&self, seed: u64) -> Result<Vec<LocalDataset>> {
        for p in &self.data {
            if !p.is_file() {
                return Err(Error::InvalidDataset(format!("{} does not exist", p.display())));
            }
        }
        let loaded = self
            .data
            .iter()
            .map(|p| load_csv(&self.source(p)?))
            .collect::<Result<Vec<_>>>()?;
        match (loaded.len(), self.institutions) {
            (1, Some(s)) => partition_horizontal(&loaded[0], s, seed),
            (n, Some(s)) if n != s => Err(Error::InvalidConfig(format!(
                "{n} data files given but --institutions {s}"
            ))),
            _ => Ok(loaded
                .into_iter()
                .enumerate()
                .map(|(j, mut ds)| {
                    ds.institution_id = j;
                    ds
                })
                .collect()),
        }
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 1000)]
    pub records: usize,
    /// Coefficients per record, intercept included.
    #[arg(long, default_value_t = 6)]
    pub features: usize,
    #[arg(long, default_value_t = 1)]
    pub institutions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub beta_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub beta_max: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Output directory for fit.json, deviance.csv and the manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the message transcript (JSON lines) here.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Largest acceptable per-coefficient difference.
    #[arg(long, default_value_t = 1e-6)]
    pub max_diff: f64,
    /// Output directory for compare.json and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct BenchArgs {
    /// Institution counts to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 25, 50, 100])]
    pub sweep: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub records_per_institution: usize,
    /// Coefficients per record, intercept included.
    #[arg(long, default_value_t = 6)]
    pub features: usize,
    /// Runs per sweep point; the median time is reported.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// CSV report path; the manifest goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded location.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A file read or written by a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: PathBuf,
    pub sha256: String,
    /// Digest with wall-clock fields removed; absent for outputs that are
    /// inherently timing- or scheduling-dependent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stable_sha256: Option<String>,
}

impl Artifact {
    fn hash(path: &Path, reproducible: bool) -> Result<Artifact> {
        let bytes = fs::read(path)?;
        let stable_sha256 = if reproducible {
            Some(stable_digest(path, &bytes)?)
        } else {
            None
        };
        Ok(Artifact {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            stable_sha256,
        })
    }
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !k.ends_with("_seconds"));
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn stable_digest(path: &Path, bytes: &[u8]) -> Result<String> {
    if path.extension().is_some_and(|e| e == "json") {
        let mut v: Value = serde_json::from_slice(bytes)?;
        strip_timing(&mut v);
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&v)?)))
    } else {
        Ok(hex::encode(Sha256::digest(bytes)))
    }
}

/// Everything needed to repeat a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: Command,
    pub config: Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<RunManifest> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    write_json(path, manifest)
}

fn manifest_for(
    command: &Command,
    config: Value,
    seeds: &[(&str, u64)],
    inputs: &[PathBuf],
    outputs: &[(PathBuf, bool)],
) -> Result<RunManifest> {
    Ok(RunManifest {
        tool: format!("secure-logreg {}", env!("CARGO_PKG_VERSION")),
        command: command.clone(),
        config,
        seeds: seeds.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        inputs: inputs
            .iter()
            .map(|p| Artifact::hash(p, true))
            .collect::<Result<_>>()?,
        outputs: outputs
            .iter()
            .map(|(p, reproducible)| Artifact::hash(p, *reproducible))
            .collect::<Result<_>>()?,
    })
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::InvalidConfig(_)
        | Error::InvalidParams(_)
        | Error::InvalidSpec(_)
        | Error::NotPrime(_)
        | Error::ModulusOutOfRange(_) => EXIT_CONFIG,
        Error::InvalidDataset(_)
        | Error::Parse { .. }
        | Error::NonBinaryResponse { .. }
        | Error::MissingColumn(_)
        | Error::TooManyPartitions { .. }
        | Error::DimensionMismatch { .. }
        | Error::Csv(_) => EXIT_DATA,
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        Error::ParityFailed { .. } => EXIT_PARITY,
        _ => EXIT_OTHER,
    }
}

/// Squared Pearson correlation; 1 when both vectors are identical constants.
pub fn r_squared(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.sum() / n, b.sum() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    sab * sab / (saa * sbb)
}

fn gen_data(cmd: &Command, args: &GenDataArgs) -> Result<RunManifest> {
    if args.institutions == 0 || args.records < args.institutions {
        return Err(Error::InvalidSpec(format!(
            "{} records cannot fill {} institutions",
            args.records, args.institutions
        )));
    }
    let spec = SyntheticSpec {
        mu: args.mu,
        sigma: args.sigma,
        beta_range: (args.beta_min, args.beta_max),
        ..SyntheticSpec::even(args.records, args.features, args.institutions, args.seed)
    };
    let (datasets, beta) = generate_synthetic(&spec)?;
    fs::create_dir_all(&args.out)?;
    let mut outputs = Vec::new();
    for ds in &datasets {
        let path = args.out.join(format!("institution-{}.csv", ds.institution_id));
        write_csv(&path, ds)?;
        outputs.push((path, true));
    }
    let truth = args.out.join("truth.json");
    write_json(
        &truth,
        &json!({ "spec": spec, "beta": beta.iter().map(|&v| format_real(v)).collect::<Vec<_>>() }),
    )?;
    outputs.push((truth, true));
    let manifest = manifest_for(cmd, serde_json::to_value(&spec)?, &[("data", args.seed)], &[], &outputs)?;
    write_manifest(&args.out.join(MANIFEST_FILE), &manifest)?;
    println!(
        "wrote {} records across {} institutions to {}",
        spec.total_records(),
        datasets.len(),
        args.out.display()
    );
    Ok(manifest)
}

fn fit(cmd: &Command, args: &FitArgs) -> Result<RunManifest> {
    let cfg = args.protocol.to_config()?;
    let datasets = args.data.load(args.protocol.seed)?;
    let result = run_protocol(&datasets, &cfg)?;

    fs::create_dir_all(&args.out)?;
    let report_path = args.out.join("fit.json");
    write_json(&report_path, &result.report())?;
    let trace_path = args.out.join("deviance.csv");
    let mut trace = std::io::BufWriter::new(fs::File::create(&trace_path)?);
    writeln!(trace, "iteration,deviance,delta")?;
    let history = result.deviance_trace();
    for (i, dev) in history.iter().enumerate() {
        let delta = if i == 0 {
            String::new()
        } else {
            format_real((dev - history[i - 1]).abs())
        };
        writeln!(trace, "{},{},{}", i + 1, format_real(*dev), delta)?;
    }
    trace.flush()?;
    drop(trace);

    let mut outputs = vec![(report_path, true), (trace_path, true)];
    if let Some(path) = &args.transcript {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        result.transcript.write_jsonl(path)?;
        outputs.push((path.clone(), false));
    }
    let manifest = manifest_for(
        cmd,
        config_record(&cfg),
        &[("protocol", cfg.rng_seed)],
        &args.data.data,
        &outputs,
    )?;
    write_manifest(&args.out.join(MANIFEST_FILE), &manifest)?;

    println!(
        "{} records, {} institutions: {} iterations, converged={}, central {:.3}s of {:.3}s, {} bytes",
        result.samples,
        result.institutions,
        result.iterations(),
        result.model.converged,
        result.central_phase_seconds,
        result.total_seconds,
        result.bytes_transmitted
    );
    result.model.require_converged(cfg.max_iter)?;
    Ok(manifest)
}

/// Per-coefficient comparison of a federated and a centralized fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParityReport {
    pub samples: usize,
    pub institutions: usize,
    pub federated: Vec<String>,
    pub centralized: Vec<String>,
    pub abs_diff: Vec<f64>,
    pub max_abs_diff: f64,
    pub r_squared: f64,
    pub threshold: f64,
    pub federated_iterations: usize,
    pub centralized_iterations: usize,
    pub passed: bool,
}

pub fn parity(datasets: &[LocalDataset], cfg: &ProtocolConfig, threshold: f64) -> Result<ParityReport> {
    let fed = run_protocol(datasets, cfg)?;
    let opts = FitOptions {
        penalty: Penalty {
            lambda: cfg.lambda,
            penalize_intercept: cfg.penalize_intercept,
        },
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let central = centralized_fit(datasets, &opts)?;
    let diff = (&fed.model.beta - &central.beta).abs();
    let max_abs_diff = diff.max();
    let r2 = r_squared(&fed.model.beta, &central.beta);
    Ok(ParityReport {
        samples: fed.samples,
        institutions: fed.institutions,
        federated: fed.model.beta.iter().map(|&v| format_real(v)).collect(),
        centralized: central.beta.iter().map(|&v| format_real(v)).collect(),
        abs_diff: diff.iter().copied().collect(),
        max_abs_diff,
        r_squared: r2,
        threshold,
        federated_iterations: fed.iterations(),
        centralized_iterations: central.iteration,
        passed: max_abs_diff <= threshold,
    })
}

fn compare(cmd: &Command, args: &CompareArgs) -> Result<RunManifest> {
    let mut cfg = args.protocol.to_config()?;
    cfg.record_bodies = false;
    let datasets = args.data.load(args.protocol.seed)?;
    let report = parity(&datasets, &cfg, args.max_diff)?;
    println!(
        "max |diff| = {:.3e}, R^2 = {:.9}, {}",
        report.max_abs_diff,
        report.r_squared,
        if report.passed { "parity holds" } else { "PARITY FAILED" }
    );
    let mut manifest = None;
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        let path = out.join("compare.json");
        write_json(&path, &report)?;
        let m = manifest_for(
            cmd,
            config_record(&cfg),
            &[("protocol", cfg.rng_seed)],
            &args.data.data,
            &[(path, true)],
        )?;
        write_manifest(&out.join(MANIFEST_FILE), &m)?;
        manifest = Some(m);
    }
    if !report.passed {
        return Err(Error::ParityFailed {
            max_abs_diff: report.max_abs_diff,
            threshold: args.max_diff,
        });
    }
    Ok(manifest.unwrap_or(RunManifest {
        tool: format!("secure-logreg {}", env!("CARGO_PKG_VERSION")),
        command: cmd.clone(),
        config: config_record(&cfg),
        seeds: BTreeMap::from([("protocol".to_string(), cfg.rng_seed)]),
        inputs: Vec::new(),
        outputs: Vec::new(),
    }))
}

/// One sweep point of the scaling benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub institutions: usize,
    pub records: usize,
    pub iterations: usize,
    pub central_seconds: f64,
    pub total_seconds: f64,
    pub bytes_transmitted: u64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Runs the protocol on synthetic data for each institution count in `sweep`.
pub fn bench_scaling(
    sweep: &[usize],
    per_institution: usize,
    dim: usize,
    repeats: usize,
    cfg: &ProtocolConfig,
) -> Result<Vec<BenchRow>> {
    if sweep.is_empty() || sweep.contains(&0) || per_institution == 0 || repeats == 0 {
        return Err(Error::InvalidConfig("empty sweep, zero institutions or zero repeats".into()));
    }
    let mut cfg = cfg.clone();
    cfg.record_bodies = false;
    sweep
        .iter()
        .map(|&s| {
            let spec = SyntheticSpec {
                institution_sizes: vec![per_institution; s],
                ..SyntheticSpec::even(s * per_institution, dim, s, cfg.rng_seed)
            };
            let (datasets, _) = generate_synthetic(&spec)?;
            let mut central = Vec::with_capacity(repeats);
            let mut total = Vec::with_capacity(repeats);
            let mut last = None;
            for _ in 0..repeats {
                let r = run_protocol(&datasets, &cfg)?;
                central.push(r.central_phase_seconds);
                total.push(r.total_seconds);
                last = Some(r);
            }
            let last = last.expect("at least one repeat");
            Ok(BenchRow {
                institutions: s,
                records: last.samples,
                iterations: last.iterations(),
                central_seconds: median(central),
                total_seconds: median(total),
                bytes_transmitted: last.bytes_transmitted,
            })
        })
        .collect()
}

fn bench(cmd: &Command, args: &BenchArgs) -> Result<RunManifest> {
    let cfg = args.protocol.to_config()?;
    let rows = bench_scaling(&args.sweep, args.records_per_institution, args.features, args.repeats, &cfg)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(&args.out)?;
    for row in &rows {
        w.serialize(row)?;
        println!(
            "S={:>4}  records={:>8}  iterations={:>2}  central={:.6}s  total={:.3}s  bytes={}",
            row.institutions, row.records, row.iterations, row.central_seconds, row.total_seconds, row.bytes_transmitted
        );
    }
    w.flush()?;
    drop(w);
    let manifest = manifest_for(
        cmd,
        config_record(&cfg),
        &[("protocol", cfg.rng_seed)],
        &[],
        &[(args.out.clone(), false)],
    )?;
    write_manifest(&bench_manifest_path(&args.out), &manifest)?;
    Ok(manifest)
}

fn bench_manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn rerun(args: &RerunArgs) -> Result<RunManifest> {
    let recorded = RunManifest::read(&args.manifest)?;
    let mut command = recorded.command.clone();
    if let Some(out) = &args.out {
        match &mut command {
            Command::GenData(a) => a.out = out.clone(),
            Command::Fit(a) => {
                a.out = out.clone();
                if let Some(t) = &mut a.transcript {
                    *t = out.join(t.file_name().unwrap_or_default());
                }
            }
            Command::Compare(a) => a.out = Some(out.clone()),
            Command::BenchScaling(a) => a.out = out.join(a.out.file_name().unwrap_or_default()),
            Command::Rerun(_) => {}
        }
    }
    if matches!(command, Command::Rerun(_)) {
        return Err(Error::InvalidConfig("a manifest cannot record a rerun".into()));
    }
    let fresh = execute(&command)?;
    for old in &recorded.outputs {
        let Some(expected) = &old.stable_sha256 else { continue };
        let name = old.path.file_name();
        let new = fresh
            .outputs
            .iter()
            .find(|a| a.path.file_name() == name)
            .and_then(|a| a.stable_sha256.as_ref());
        if new != Some(expected) {
            return Err(Error::NotReproduced {
                path: old.path.display().to_string(),
            });
        }
    }
    println!("reproduced {} outputs", recorded.outputs.iter().filter(|a| a.stable_sha256.is_some()).count());
    Ok(fresh)
}

/// Runs one command, returning the manifest it wrote.
pub fn execute(command: &Command) -> Result<RunManifest> {
    match command {
        Command::GenData(a) => gen_data(command, a),
        Command::Fit(a) => fit(command, a),
        Command::Compare(a) => compare(command, a),
        Command::BenchScaling(a) => bench(command, a),
        Command::Rerun(a) => rerun(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn r_squared_examples() {
        let a = dvector![1.0, 2.0, 3.0];
        assert_eq!(r_squared(&a, &a), 1.0);
        assert!((r_squared(&a, &(&a * 2.0 + dvector![1.0, 1.0, 1.0])) - 1.0).abs() < 1e-15);
        assert!(r_squared(&a, &dvector![3.0, 1.0, 2.0]) < 0.5);
        assert_eq!(r_squared(&dvector![1.0, 1.0], &dvector![1.0, 1.0]), 1.0);
    }

    #[test]
    fn exit_codes_follow_taxonomy() {
        assert_eq!(exit_code(&Error::InvalidConfig("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::MissingColumn("y".into())), EXIT_DATA);
        assert_eq!(exit_code(&Error::NotConverged { max_iter: 3 }), EXIT_NOT_CONVERGED);
        assert_eq!(
            exit_code(&Error::ParityFailed { max_abs_diff: 1.0, threshold: 0.0 }),
            EXIT_PARITY
        );
        let wrapped = Error::InvalidSpec("bad".into()).at_iteration(2);
        assert_eq!(exit_code(&wrapped), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::SingularSystem), EXIT_OTHER);
    }

    #[test]
    fn timing_fields_do_not_change_stable_digest() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        fs::write(&a, r#"{"beta":[1],"total_runtime_seconds":0.5}"#).unwrap();
        fs::write(&b, r#"{"beta":[1],"total_runtime_seconds":9.0}"#).unwrap();
        let (ha, hb) = (Artifact::hash(&a, true).unwrap(), Artifact::hash(&b, true).unwrap());
        assert_ne!(ha.sha256, hb.sha256);
        assert_eq!(ha.stable_sha256, hb.stable_sha256);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
