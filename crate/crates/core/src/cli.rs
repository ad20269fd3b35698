//! The `walsh-helson` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io;
use crate::martingale::{
    check_p3, check_positivity_equivalence, decompose, dyadic_envelope, singularity_report,
    sweep_shifted_bound, tolerance, EnvelopeRow, PositivityEquivalence, ShiftedBoundSweep,
};
use crate::psi::PsiSpec;
use crate::riesz::{
    build_walsh_measure, norm_table, psi_sum_report, verify_all_partial_sums, Admission,
    BuildConfig, NormRow, PositivityCertificate, PsiSumReport, RieszProductState, StageRecord,
    SummabilityBudget, VerifyOptions, DEFAULT_EXHAUSTIVE_CAP, DEFAULT_SAMPLE_ATOMS, DEFAULT_SEED,
};
use crate::rudin_shapiro::{build_pair, flatness_bound, FLATNESS_CONSTANT, MAX_LEVEL};
use crate::trig::{
    build_trig_measure, certify_trig_measure, TrigCertificate, TrigConfig, TrigStage,
};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "WALSH_HELSON_THREADS";

/// Deepest series `verify` accepts; its sweeps cost `4^depth`.
pub const MAX_VERIFY_DEPTH: u32 = 16;

#[derive(Parser, Debug)]
#[command(
    name = "walsh-helson",
    version,
    about = "Build and verify Walsh and trigonometric Riesz-product measures with nonnegative partial sums",
    after_help = "Exit codes: 0 all certificates pass, 1 certificate failure, 2 usage or configuration error, 3 I/O error.\n\
                  Every subcommand accepts --config FILE.json whose keys are flag names; flags given on the command line win.\n\
                  WALSH_HELSON_THREADS caps the number of worker threads."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the Rudin-Shapiro pair (P, Q) of a level and check P^2 + Q^2 = 2^{level+1}.
    #[command(args_override_self = true)]
    RsPair(RsPairArgs),
    /// Build a Walsh Riesz-product measure and certify all of its partial sums.
    #[command(args_override_self = true)]
    BuildWalshMeasure(BuildWalshArgs),
    /// Build a trigonometric Riesz-product measure and certify it on a grid.
    #[command(args_override_self = true)]
    BuildTrigMeasure(BuildTrigArgs),
    /// Check positivity, the maximal inequality and the shifted bound of a Walsh series.
    #[command(args_override_self = true, alias = "theorem1-check")]
    Verify(VerifyArgs),
    /// Hellinger affinities and mass concentration of a built measure.
    #[command(args_override_self = true)]
    SingularityReport(SingularityArgs),
    /// Emit plot-ready CSV tables for a built measure.
    #[command(args_override_self = true)]
    Report(ReportArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct RsPairArgs {
    /// Level l; the pair has 2^l coefficients.
    #[arg(long)]
    pub level: u32,
    /// Output path (.json or .csv); CSV goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file supplying any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct BuildWalshArgs {
    /// Gauge: preset:logpow,p=P | preset:power,delta=D | preset:quadratic | table:FILE.csv
    #[arg(long, default_value = "preset:logpow,p=1")]
    pub psi: String,
    #[arg(long, default_value_t = 3)]
    pub stages: usize,
    /// Used coordinates up to which verification is exhaustive.
    #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_CAP)]
    pub cap: u32,
    /// Limit on used coordinates during the build.
    #[arg(long, default_value_t = 40)]
    pub max_coordinates: u32,
    #[arg(long, default_value_t = MAX_LEVEL)]
    pub max_level: u32,
    /// Stage k may spend budget-scale * 2^-k of the psi-sum.
    #[arg(long, default_value_t = 1.0)]
    pub budget_scale: f64,
    #[arg(long, default_value = "measure.csv")]
    pub out: PathBuf,
    #[arg(long, default_value = "manifest.json")]
    pub manifest: PathBuf,
    /// Seed for sampled verification past the cap.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random atoms checked when verification is sampled.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_ATOMS)]
    pub samples: usize,
    /// Accept a sampled certificate when the build exceeds the cap.
    #[arg(long)]
    pub allow_sampled: bool,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct BuildTrigArgs {
    #[arg(long, default_value = "preset:logpow,p=1")]
    pub psi: String,
    #[arg(long, default_value_t = 2)]
    pub stages: usize,
    /// Grid points per unit of the top frequency.
    #[arg(long, default_value_t = 16)]
    pub grid_oversample: u64,
    #[arg(long, default_value_t = 1.0)]
    pub budget_scale: f64,
    #[arg(long, default_value = "trig.csv")]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Recorded in the manifest; the trigonometric build is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    /// Series as CSV `n,coeff` or JSON `{"depth", "coeffs"}`.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SingularityArgs {
    /// Manifest written by build-walsh-measure.
    #[arg(long)]
    pub state: PathBuf,
    /// CSV path; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    #[arg(long, default_value = "manifest.json")]
    pub manifest: PathBuf,
    #[arg(long, default_value = "measure.csv")]
    pub measure: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Provenance of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    /// SHA-256 of the resolved options as JSON.
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub certificates: BTreeMap<String, bool>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    fn new<T: Serialize>(command: &[String], options: &T, seed: u64) -> Result<Self> {
        let json = serde_json::to_string(options)?;
        Ok(RunManifest {
            command: command.to_vec(),
            config_hash: hex::encode(Sha256::digest(json.as_bytes())),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            certificates: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
        })
    }

    fn time(&mut self, name: &str, start: Instant) {
        self.timings_ms
            .insert(name.to_string(), start.elapsed().as_secs_f64() * 1e3);
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WalshCertificates {
    pub positivity: PositivityCertificate,
    pub psi_sum: PsiSumReport,
    pub budget_total: f64,
    pub norms: Vec<NormRow>,
    pub passed: bool,
}

/// Everything needed to rebuild and audit a Walsh measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WalshManifest {
    #[serde(rename = "C")]
    pub c: f64,
    pub psi: PsiSpec,
    pub exhaustive_cap: u32,
    pub budget: SummabilityBudget,
    pub stages: Vec<StageRecord>,
    pub admissions: Vec<Admission>,
    pub certificates: WalshCertificates,
    pub run: RunManifest,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrigManifest {
    #[serde(rename = "C")]
    pub c: f64,
    pub psi: PsiSpec,
    pub stages: Vec<TrigStage>,
    pub certificates: TrigCertificate,
    pub run: RunManifest,
}

/// Only the fields needed to rebuild a product; any manifest qualifies.
#[derive(Deserialize)]
struct StateFile {
    stages: Vec<StageRecord>,
    #[serde(default)]
    exhaustive_cap: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MartingaleResiduals {
    pub recombination: f64,
    pub mean: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub depth: u32,
    #[serde(flatten)]
    pub equivalence: PositivityEquivalence,
    pub martingale: MartingaleResiduals,
    /// Absent when some prefix sum is negative.
    pub shifted_bound: Option<ShiftedBoundSweep>,
    pub p3: bool,
    pub envelope: Vec<EnvelopeRow>,
    pub passed: bool,
}

/// Expands `--config FILE` into flags placed right after the subcommand, so
/// that flags on the command line override it.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(pos) = args
        .iter()
        .position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="))
    else {
        return Ok(args);
    };
    let path = match args[pos].to_string_lossy().strip_prefix("--config=") {
        Some(p) => PathBuf::from(p),
        None => match args.get(pos + 1) {
            Some(p) => PathBuf::from(p),
            None => return Ok(args),
        },
    };
    let text = io::read_text(&path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let serde_json::Value::Object(map) = value else {
        return Err(Error::Precondition(format!(
            "config {} must hold a JSON object",
            path.display()
        )));
    };
    let mut extra = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            continue;
        }
        let values = match value {
            serde_json::Value::Array(items) => items,
            other => vec![other],
        };
        for v in values {
            match v {
                serde_json::Value::Bool(true) => extra.push(OsString::from(&flag)),
                serde_json::Value::Bool(false) | serde_json::Value::Null => {}
                serde_json::Value::String(s) => {
                    extra.push(OsString::from(&flag));
                    extra.push(OsString::from(s));
                }
                other => {
                    extra.push(OsString::from(&flag));
                    extra.push(OsString::from(other.to_string()));
                }
            }
        }
    }
    let insert_at = 2.min(args.len());
    let mut out = args[..insert_at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[insert_at..]);
    Ok(out)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::File { .. } => 3,
        Error::Invariant(_) => 1,
        _ => 2,
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let command: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    configure_threads();
    let result = match cli.command {
        Command::RsPair(a) => rs_pair(&a),
        Command::BuildWalshMeasure(a) => build_walsh(&a, &command),
        Command::BuildTrigMeasure(a) => build_trig(&a, &command),
        Command::Verify(a) => verify(&a),
        Command::SingularityReport(a) => singularity(&a),
        Command::Report(a) => report(&a),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn status(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    match seed {
        Some(s) => {
            eprintln!("seed: {s}");
            s
        }
        None => {
            eprintln!("seed: {DEFAULT_SEED} (default)");
            DEFAULT_SEED
        }
    }
}

/// Parses a `--psi` argument; `table:FILE` reads `x,psi` samples.
pub fn parse_psi(spec: &str) -> Result<PsiSpec> {
    match spec.strip_prefix("table:") {
        Some(path) => PsiSpec::table(io::read_psi_table(Path::new(path))?),
        None => PsiSpec::parse(spec),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => io::write_atomic(path, bytes),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn rs_pair(args: &RsPairArgs) -> Result<bool> {
    let pair = build_pair(args.level)?;
    let identity = pair.energy_identity_holds();
    let u = pair.p_u_norm();
    let bound = flatness_bound(args.level);
    let passed = identity && (u as f64) <= bound;
    let is_json = args
        .out
        .as_ref()
        .is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    let bytes = if is_json {
        let mut text = serde_json::to_string_pretty(&serde_json::json!({
            "level": args.level,
            "p": pair.p(),
            "q": pair.q(),
            "energyIdentity": identity,
            "uNorm": u,
            "bound": bound,
        }))?;
        text.push('\n');
        text.into_bytes()
    } else {
        io::csv_bytes(
            &["index", "p", "q"],
            pair.p()
                .iter()
                .zip(pair.q())
                .enumerate()
                .map(|(i, (p, q))| vec![i.to_string(), p.to_string(), q.to_string()]),
        )?
    };
    emit(args.out.as_deref(), &bytes)?;
    eprintln!(
        "level {}: P^2 + Q^2 = 2^{} [{}], U(P) = {u} <= {bound:.6} [{}]",
        args.level,
        args.level + 1,
        status(identity),
        status((u as f64) <= bound)
    );
    Ok(passed)
}

fn build_walsh(args: &BuildWalshArgs, command: &[String]) -> Result<bool> {
    let start = Instant::now();
    let seed = resolve_seed(args.seed);
    let psi = parse_psi(&args.psi)?;
    let config = BuildConfig {
        stages: args.stages,
        exhaustive_cap: args.cap,
        max_coordinates: args.max_coordinates,
        max_level: args.max_level,
        budget: SummabilityBudget {
            scale: args.budget_scale,
        },
    };
    let mut run = RunManifest::new(command, args, seed)?;
    let build = build_walsh_measure(&psi, &config)?;
    run.time("build", start);
    let state = &build.state;
    if !state.within_cap() && !args.allow_sampled {
        return Err(Error::CapExceeded {
            used: state.used_coordinates(),
            cap: args.cap,
        });
    }

    let verify_start = Instant::now();
    let positivity = verify_all_partial_sums(
        state,
        &VerifyOptions {
            seed,
            sample_atoms: args.samples,
        },
    );
    run.time("verify", verify_start);
    let psi_sum = psi_sum_report(state, &psi);
    let norms = norm_table(state);
    let budget_total = config.budget.total(config.stages);

    let checks = [
        ("positivity", positivity.nonnegative()),
        ("stagewise", positivity.stagewise_holds()),
        (
            "psi_sum",
            psi_sum.holds() && psi_sum.bound_total <= budget_total,
        ),
        ("norms", norms.iter().all(NormRow::holds)),
        ("admissions", build.admissions.iter().all(Admission::holds)),
    ];
    run.certificates = checks.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let passed = checks.iter().all(|c| c.1);

    io::write_spectrum_csv(&args.out, state.spectrum())?;
    run.time("total", start);
    let manifest = WalshManifest {
        c: FLATNESS_CONSTANT,
        psi: psi.clone(),
        exhaustive_cap: args.cap,
        budget: config.budget,
        stages: state.records(),
        admissions: build.admissions.clone(),
        certificates: WalshCertificates {
            positivity: positivity.clone(),
            psi_sum: psi_sum.clone(),
            budget_total,
            norms,
            passed,
        },
        run,
    };
    io::write_json(&args.manifest, &manifest)?;

    let levels: Vec<String> = state
        .factors()
        .iter()
        .map(|f| f.level().to_string())
        .collect();
    println!(
        "built {} stages, levels [{}], {} coordinates, {} coefficients",
        state.stage_count(),
        levels.join(", "),
        state.used_coordinates(),
        state.spectrum().len()
    );
    println!(
        "partial sums ({}, {} atoms): min {:.6} at order {} [{}]",
        if positivity.exhaustive {
            "exhaustive"
        } else {
            "sampled"
        },
        positivity.atoms_checked,
        positivity.min_partial_sum,
        positivity.min_order,
        status(positivity.nonnegative())
    );
    println!(
        "stagewise S >= Pi_k/4: margin {:.6}, min ratio {:.6} [{}]",
        positivity.stagewise_min_margin,
        positivity.stagewise_min_ratio,
        status(positivity.stagewise_holds())
    );
    println!(
        "psi-sum: exact {:.6e} <= bound {:.6e} <= budget {:.6} [{}]",
        psi_sum.exact_total,
        psi_sum.bound_total,
        budget_total,
        status(run_ok(&manifest.run, "psi_sum"))
    );
    Ok(passed)
}

fn run_ok(run: &RunManifest, key: &str) -> bool {
    run.certificates.get(key).copied().unwrap_or(false)
}

fn build_trig(args: &BuildTrigArgs, command: &[String]) -> Result<bool> {
    let start = Instant::now();
    let seed = resolve_seed(args.seed);
    let psi = parse_psi(&args.psi)?;
    let config = TrigConfig {
        stages: args.stages,
        oversample: args.grid_oversample,
        budget: SummabilityBudget {
            scale: args.budget_scale,
        },
    };
    let mut run = RunManifest::new(command, args, seed)?;
    let measure = build_trig_measure(&psi, &config)?;
    run.time("build", start);
    let verify_start = Instant::now();
    let cert = certify_trig_measure(&measure, &psi, args.grid_oversample)?;
    run.time("verify", verify_start);
    let passed = cert.passed();
    run.certificates
        .insert("grid_positivity".into(), cert.grid.min >= 0.0);
    run.certificates
        .insert("supports_disjoint".into(), cert.supports_disjoint);
    run.certificates
        .insert("parseval".into(), cert.parseval_residual <= 1e-8);
    run.certificates.insert(
        "psi_sum".into(),
        cert.psi_terms
            .iter()
            .all(|t| t.exact <= t.bound * (1.0 + 1e-12)),
    );
    run.certificates.insert(
        "strong_orthogonality".into(),
        cert.orthogonality_exact && cert.orthogonality_residual <= 1e-10,
    );
    io::write_atomic(&args.out, &io::trig_csv(measure.product())?)?;
    run.time("total", start);

    let lengths: Vec<String> = measure
        .stages
        .iter()
        .map(|s| s.length.to_string())
        .collect();
    println!(
        "built {} stages, lengths [{}], top frequency {}",
        measure.stages.len(),
        lengths.join(", "),
        measure.product().max_frequency()
    );
    println!(
        "grid ({} points): min partial sum {:.6}, Bernstein slack {:.6} [{}]",
        cert.grid.points,
        cert.grid.min,
        cert.grid.bernstein_slack,
        status(cert.grid.min >= 0.0)
    );
    println!(
        "psi-sum: exact {:.6e} <= bound {:.6e}; Parseval residual {:.1e}; {} orthogonality indices [{}]",
        cert.psi_exact_total,
        cert.psi_bound_total,
        cert.parseval_residual,
        cert.orthogonality_indices,
        status(passed)
    );
    if let Some(path) = &args.manifest {
        let manifest = TrigManifest {
            c: FLATNESS_CONSTANT,
            psi,
            stages: measure.stages.clone(),
            certificates: cert,
            run,
        };
        io::write_json(path, &manifest)?;
    }
    Ok(passed)
}

/// Runs every series check that `verify` reports.
pub fn verify_series(series: &crate::walsh::WalshSeries) -> Result<VerifyReport> {
    if series.depth() > MAX_VERIFY_DEPTH {
        return Err(Error::OutOfRange {
            what: "series depth",
            value: series.depth() as u64,
            limit: MAX_VERIFY_DEPTH as u64,
        });
    }
    let equivalence = check_positivity_equivalence(series)?;
    let tol = tolerance(series);
    let (recombination, mean) = decompose(series).invariant_residuals();
    let shifted_bound = if equivalence.all_prefixes_nonneg {
        Some(sweep_shifted_bound(series)?)
    } else {
        None
    };
    let p3 = check_p3(series);
    let envelope = dyadic_envelope(series.depth(), &series.terms());
    let passed = equivalence.all_prefixes_nonneg
        && shifted_bound.as_ref().is_some_and(ShiftedBoundSweep::holds)
        && p3
        && recombination <= tol
        && mean <= tol;
    Ok(VerifyReport {
        depth: series.depth(),
        equivalence,
        martingale: MartingaleResiduals {
            recombination,
            mean,
            tolerance: tol,
        },
        shifted_bound,
        p3,
        envelope,
        passed,
    })
}

fn verify(args: &VerifyArgs) -> Result<bool> {
    let series = io::read_series(&args.input)?;
    let report = verify_series(&series)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    emit(args.out.as_deref(), text.as_bytes())?;
    if let Some(w) = &report.equivalence.witnesses.prefix {
        eprintln!(
            "negative prefix sum {} at order {}, atom {}",
            w.value, w.order, w.atom
        );
    }
    Ok(report.passed)
}

fn load_state(path: &Path) -> Result<RieszProductState> {
    let file: StateFile = serde_json::from_str(&io::read_text(path)?)?;
    RieszProductState::from_records(
        &file.stages,
        file.exhaustive_cap.unwrap_or(DEFAULT_EXHAUSTIVE_CAP),
    )
}

fn singularity_rows(state: &RieszProductState) -> Result<(Vec<Vec<String>>, bool)> {
    let report = singularity_report(state)?;
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                r.hellinger.to_string(),
                r.concentration[0].to_string(),
                r.concentration[1].to_string(),
                r.concentration[2].to_string(),
            ]
        })
        .collect();
    let passed = report.max_factorization_gap() <= 1e-9
        && report
            .rows
            .iter()
            .all(|r| r.hellinger <= 1.0 && (r.mean - 1.0).abs() <= 1e-12)
        && report
            .rows
            .windows(2)
            .all(|w| w[1].hellinger <= w[0].hellinger);
    Ok((rows, passed))
}

fn singularity(args: &SingularityArgs) -> Result<bool> {
    let state = load_state(&args.state)?;
    let (rows, passed) = singularity_rows(&state)?;
    let bytes = io::csv_bytes(&["k", "H_k", "conc50", "conc90", "conc99"], rows)?;
    emit(args.out.as_deref(), &bytes)?;
    Ok(passed)
}

fn report(args: &ReportArgs) -> Result<bool> {
    let manifest: WalshManifest = serde_json::from_str(&io::read_text(&args.manifest)?)?;
    let state = RieszProductState::from_records(&manifest.stages, manifest.exhaustive_cap)?;
    let measure = io::read_spectrum_csv(&args.measure)?;
    if measure.as_slice() != state.spectrum() {
        return Err(Error::Precondition(format!(
            "{} does not match the product described by {}",
            args.measure.display(),
            args.manifest.display()
        )));
    }
    std::fs::create_dir_all(&args.out_dir).map_err(|source| Error::File {
        path: args.out_dir.clone(),
        source,
    })?;
    let envelope = dyadic_envelope(state.used_coordinates(), &measure);
    io::write_csv(
        &args.out_dir.join("envelope.csv"),
        &["block", "start", "end", "max_abs"],
        envelope.iter().map(|r| {
            vec![
                r.block.to_string(),
                r.start.to_string(),
                r.end.to_string(),
                r.max_abs.to_string(),
            ]
        }),
    )?;
    let report = singularity_report(&state)?;
    io::write_csv(
        &args.out_dir.join("hellinger.csv"),
        &["k", "H_k"],
        report
            .rows
            .iter()
            .map(|r| vec![r.k.to_string(), r.hellinger.to_string()]),
    )?;
    io::write_csv(
        &args.out_dir.join("concentration.csv"),
        &["k", "conc50", "conc90", "conc99"],
        report.rows.iter().map(|r| {
            std::iter::once(r.k.to_string())
                .chain(r.concentration.iter().map(|c| c.to_string()))
                .collect()
        }),
    )?;
    let psi_sum = psi_sum_report(&state, &manifest.psi);
    io::write_csv(
        &args.out_dir.join("psi_terms.csv"),
        &["stage", "level", "exact", "bound"],
        psi_sum.stages.iter().map(|s| {
            vec![
                s.stage.to_string(),
                s.level.to_string(),
                s.exact.to_string(),
                s.bound.to_string(),
            ]
        }),
    )?;
    println!(
        "wrote envelope.csv, hellinger.csv, concentration.csv, psi_terms.csv to {}",
        args.out_dir.display()
    );
    Ok(true)
}
