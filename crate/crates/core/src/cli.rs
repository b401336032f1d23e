//! The `fdensity` command line.
//!
//! Exit status: 0 on success, 1 when a verification, axiom check or lemma check
//! fails, 2 on usage and precondition errors, 3 when `separate` finds no witness.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::bignum::parse_nat;
use crate::diagnostics::{self, DiagnosticsError};
use crate::modulus::{check_axioms, ModulusDescriptor};
use crate::separator::{self, SeparatorError, SeparatorResult};
use crate::sets::{
    f_density_profile, density_profile, membership_verdict, Builtin, HorizonGrid, Ideal,
    IntegerSet, MembershipPolicy,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_FOUND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fdensity", version, about = "Natural and f-density experiments on sets of naturals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Counting-function profile of a set over the default horizon grid.
    Density(DensityArgs),
    /// Ratio and trend verdicts on whether the f-ideal equals the statistical ideal.
    Diagnose(DiagnoseArgs),
    /// Compare g_f(k) estimates with a^k, a = lim f(n)/f(2n).
    Lemma1(Lemma1Args),
    /// Build a density-zero set with non-vanishing f-density.
    Separate(SeparateArgs),
    /// Re-check a result written by `separate`.
    Verify(VerifyArgs),
    /// Sample the modulus axioms.
    Axioms(AxiomsArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DensityArgs {
    /// Built-in name (evens, squares, powers-of-two) or a set JSON file.
    #[arg(long)]
    set: String,
    #[arg(long, value_parser = parse_natural)]
    horizon: BigUint,
    /// `power:<p>`, `log`, `example3` or `@file.json`.
    #[arg(long)]
    modulus: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long)]
    modulus: String,
    #[arg(long, value_parser = parse_natural, default_value = "1000000")]
    horizon: BigUint,
    #[arg(long, default_value_t = 10)]
    kmax: u32,
    #[arg(long, default_value_t = diagnostics::DEFAULT_EPSILON)]
    epsilon: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct Lemma1Args {
    #[arg(long)]
    modulus: String,
    #[arg(long, default_value_t = 10)]
    kmax: u32,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, value_parser = parse_natural, default_value = "1000000")]
    horizon: BigUint,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct SeparateArgs {
    #[arg(long)]
    modulus: String,
    #[arg(long, default_value_t = separator::DEFAULT_XI)]
    xi: f64,
    #[arg(long, default_value_t = separator::DEFAULT_STAGES)]
    stages: u32,
    #[arg(long, value_parser = parse_natural, default_value = "10000000")]
    cap: BigUint,
    /// Also write the constructed set as a blocks set file.
    #[arg(long)]
    set_output: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// JSON written by `separate`.
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    modulus: String,
    #[arg(long, default_value_t = 64)]
    samples: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct AxiomsArgs {
    #[arg(long)]
    modulus: String,
    #[arg(long, default_value_t = 10_000)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

/// Accepts plain decimals and `<digits>e<digits>`, e.g. `1e6`.
fn parse_natural(s: &str) -> Result<BigUint, String> {
    if let Some(n) = parse_nat(s) {
        return Ok(n);
    }
    let bad = || format!("`{s}` is not a natural number");
    let (mant, exp) = s.split_once(['e', 'E']).ok_or_else(bad)?;
    let mant = parse_nat(mant).ok_or_else(bad)?;
    let exp: u32 = exp.parse().map_err(|_| bad())?;
    Ok(mant * BigUint::from(10u32).pow(exp))
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

impl From<DiagnosticsError> for CliError {
    fn from(e: DiagnosticsError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// The resolved inputs of a run, embedded in every JSON output.
#[derive(Debug, Default, Serialize)]
struct RunConfig {
    subcommand: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    modulus: Option<ModulusDescriptor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    set: Option<IntegerSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_nat")]
    horizon: Option<BigUint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    xi: Option<f64>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    stages: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_nat")]
    cap: Option<BigUint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    set_output: Option<String>,
}

mod opt_nat {
    use num_bigint::BigUint;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(n: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
        match n {
            Some(n) => crate::bignum::serialize(n, s),
            None => s.serialize_none(),
        }
    }
}

fn display_path(p: &Path) -> String {
    p.display().to_string()
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: display_path(path),
        source,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: display_path(path),
        source,
    })
}

fn resolve_modulus(spec: &str) -> Result<ModulusDescriptor, CliError> {
    match spec.strip_prefix('@') {
        Some(path) => read_json(Path::new(path)),
        None => spec.parse().map_err(|e: crate::ModulusError| CliError::Usage(e.to_string())),
    }
}

fn resolve_set(spec: &str) -> Result<IntegerSet, CliError> {
    match spec.parse::<Builtin>() {
        Ok(b) => Ok(IntegerSet::builtin(b)),
        Err(_) if Path::new(spec).exists() => read_json(Path::new(spec)),
        Err(e) => Err(CliError::Usage(format!("{e}, and no file named `{spec}`"))),
    }
}

fn write_text(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: display_path(path),
            source,
        }),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Write {
                    path: "standard output".into(),
                    source,
                })
        }
    }
}

fn write_json<T: Serialize>(value: &T, output: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
    text.push('\n');
    write_text(&text, output)
}

/// Runs the command line `argv` (program name first) and returns the exit status.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            eprintln!("{line}");
            return EXIT_USAGE;
        }
    };
    let outcome = match cli.command {
        Command::Density(a) => density(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Lemma1(a) => lemma1(a),
        Command::Separate(a) => separate(a),
        Command::Verify(a) => verify(a),
        Command::Axioms(a) => axioms(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn density(a: DensityArgs) -> Result<i32, CliError> {
    let set = resolve_set(&a.set)?;
    let modulus = a.modulus.as_deref().map(resolve_modulus).transpose()?;
    if a.horizon < BigUint::from(2u32) {
        return Err(CliError::Usage("horizon must be at least 2".into()));
    }
    let grid = HorizonGrid::geometric(&a.horizon);
    let profile = match &modulus {
        Some(m) => f_density_profile(&set, m, &grid),
        None => density_profile(&set, &grid),
    };
    let output = a.out.output.as_deref();
    match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            profile.write_csv(&mut buf).expect("writing to memory");
            write_text(&String::from_utf8(buf).expect("CSV is UTF-8"), output)?;
        }
        Format::Json => {
            let policy = MembershipPolicy::default();
            let mut verdicts = vec![membership_verdict(&profile, Ideal::Statistical, policy)
                .map_err(|e| CliError::Usage(e.to_string()))?];
            if modulus.is_some() {
                verdicts.push(
                    membership_verdict(&profile, Ideal::FIdeal, policy)
                        .map_err(|e| CliError::Usage(e.to_string()))?,
                );
            }
            let config = RunConfig {
                subcommand: "density",
                modulus,
                set: Some(set),
                horizon: Some(a.horizon),
                format: Some(a.format),
                output: a.out.output.as_deref().map(display_path),
                ..RunConfig::default()
            };
            write_json(
                &json!({"config": config, "profile": profile, "verdicts": verdicts}),
                output,
            )?;
        }
    }
    Ok(EXIT_OK)
}

fn diagnose(a: DiagnoseArgs) -> Result<i32, CliError> {
    let m = resolve_modulus(&a.modulus)?;
    if !(a.epsilon > 0.0 && a.epsilon < 0.5) {
        return Err(CliError::Usage(format!("--epsilon must lie in (0, 0.5), got {}", a.epsilon)));
    }
    if a.kmax < 3 {
        return Err(CliError::Usage(format!("--kmax must be at least 3, got {}", a.kmax)));
    }
    let needed = (BigUint::from(1u32) << a.kmax as usize) * diagnostics::MIN_HORIZON;
    if a.horizon < needed {
        return Err(CliError::Usage(format!(
            "--horizon must be at least 2^kmax * {} = {needed}",
            diagnostics::MIN_HORIZON
        )));
    }
    let theorem2 = diagnostics::theorem2_verdict(&m, &a.horizon, a.epsilon)?;
    let theorem1 = diagnostics::theorem1_trend(&m, a.kmax, &a.horizon)?;
    let config = RunConfig {
        subcommand: "diagnose",
        modulus: Some(m),
        horizon: Some(a.horizon),
        window: Some(diagnostics::DEFAULT_WINDOW),
        epsilon: Some(a.epsilon),
        k_max: Some(a.kmax),
        output: a.out.output.as_deref().map(display_path),
        ..RunConfig::default()
    };
    write_json(
        &json!({"config": config, "theorem2": theorem2, "theorem1": theorem1}),
        a.out.output.as_deref(),
    )?;
    Ok(EXIT_OK)
}

fn lemma1(a: Lemma1Args) -> Result<i32, CliError> {
    let m = resolve_modulus(&a.modulus)?;
    if a.kmax < 1 {
        return Err(CliError::Usage("--kmax must be at least 1".into()));
    }
    if !(a.tol >= 0.0) {
        return Err(CliError::Usage(format!("--tol must be nonnegative, got {}", a.tol)));
    }
    if a.horizon < BigUint::from(diagnostics::MIN_HORIZON) {
        return Err(CliError::Usage(format!(
            "--horizon must be at least {}",
            diagnostics::MIN_HORIZON
        )));
    }
    let config = RunConfig {
        subcommand: "lemma1",
        modulus: Some(m.clone()),
        horizon: Some(a.horizon.clone()),
        window: Some(diagnostics::DEFAULT_WINDOW),
        epsilon: Some(diagnostics::DEFAULT_EPSILON),
        k_max: Some(a.kmax),
        tol: Some(a.tol),
        output: a.out.output.as_deref().map(display_path),
        ..RunConfig::default()
    };
    let output = a.out.output.as_deref();
    match diagnostics::lemma1_check(&m, a.kmax, &a.horizon, a.tol) {
        Ok(v) => {
            let passed = v.evidence.passed == Some(true);
            write_json(&json!({"config": config, "lemma1": v}), output)?;
            Ok(if passed { EXIT_OK } else { EXIT_FAILED })
        }
        Err(e @ DiagnosticsError::LemmaHypothesis { .. }) => {
            write_json(
                &json!({"config": config, "error": "lemma-hypothesis", "message": e.to_string()}),
                output,
            )?;
            Ok(EXIT_FAILED)
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct SeparateOutput<'a> {
    config: RunConfig,
    #[serde(flatten)]
    result: &'a SeparatorResult,
}

fn separate(a: SeparateArgs) -> Result<i32, CliError> {
    let m = resolve_modulus(&a.modulus)?;
    let config = RunConfig {
        subcommand: "separate",
        modulus: Some(m.clone()),
        xi: Some(a.xi),
        stages: Some(a.stages),
        cap: Some(a.cap.clone()),
        output: a.out.output.as_deref().map(display_path),
        set_output: a.set_output.as_deref().map(display_path),
        ..RunConfig::default()
    };
    let output = a.out.output.as_deref();
    match separator::build_separating_set(&m, a.xi, a.stages, &a.cap) {
        Ok(res) => {
            if let Some(path) = &a.set_output {
                let set = res.set().expect("freshly built blocks are disjoint");
                write_json(&set, Some(path))?;
            }
            write_json(&SeparateOutput { config, result: &res }, output)?;
            Ok(EXIT_OK)
        }
        Err(e @ SeparatorError::NotFound { .. }) => {
            let SeparatorError::NotFound { k, start, cap, partial } = &e else {
                unreachable!()
            };
            write_json(
                &json!({
                    "config": config,
                    "error": "not-found",
                    "message": e.to_string(),
                    "k": k,
                    "start": start.to_string(),
                    "cap": cap.to_string(),
                    "partial_stages": partial,
                }),
                output,
            )?;
            Ok(EXIT_NOT_FOUND)
        }
        Err(e) => Err(CliError::Usage(e.to_string())),
    }
}

fn verify(a: VerifyArgs) -> Result<i32, CliError> {
    let m = resolve_modulus(&a.modulus)?;
    if a.samples < 1 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let res: SeparatorResult = read_json(&a.result)?;
    let report = separator::verify_construction(&res, &m, a.samples)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let config = RunConfig {
        subcommand: "verify",
        modulus: Some(m),
        result: Some(display_path(&a.result)),
        samples: Some(a.samples),
        output: a.out.output.as_deref().map(display_path),
        ..RunConfig::default()
    };
    let passed = report.passed;
    write_json(&json!({"config": config, "report": report}), a.out.output.as_deref())?;
    Ok(if passed { EXIT_OK } else { EXIT_FAILED })
}

fn axioms(a: AxiomsArgs) -> Result<i32, CliError> {
    let m = resolve_modulus(&a.modulus)?;
    if a.budget < 1 {
        return Err(CliError::Usage("--budget must be at least 1".into()));
    }
    let report = check_axioms(&m, a.budget, a.seed);
    let config = RunConfig {
        subcommand: "axioms",
        modulus: Some(m),
        budget: Some(a.budget),
        seed: Some(a.seed),
        output: a.out.output.as_deref().map(display_path),
        ..RunConfig::default()
    };
    let passed = report.all_passed();
    write_json(&json!({"config": config, "report": report}), a.out.output.as_deref())?;
    Ok(if passed { EXIT_OK } else { EXIT_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(args: &[&str]) -> Vec<String> {
        std::iter::once("fdensity")
            .chain(args.iter().copied())
            .map(String::from)
            .collect()
    }

    #[test]
    fn naturals() {
        assert_eq!(parse_natural("1000000"), Ok(BigUint::from(1_000_000u32)));
        assert_eq!(parse_natural("1e6"), Ok(BigUint::from(1_000_000u32)));
        assert!(parse_natural("-3").is_err());
        assert!(parse_natural("1.5e3").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(&argv(&[])), EXIT_USAGE);
        assert_eq!(run(&argv(&["diagnose", "--modulus", "power:2"])), EXIT_USAGE);
        assert_eq!(run(&argv(&["diagnose", "--modulus", "log", "--epsilon", "0.7"])), EXIT_USAGE);
        assert_eq!(run(&argv(&["separate", "--modulus", "log", "--xi", "1.5"])), EXIT_USAGE);
        assert_eq!(run(&argv(&["density", "--set", "primes", "--horizon", "10"])), EXIT_USAGE);
        assert_eq!(run(&argv(&["verify", "--result", "/nonexistent.json", "--modulus", "log"])), EXIT_USAGE);
    }

    #[test]
    fn modulus_grammar() {
        assert_eq!(resolve_modulus("log").unwrap(), ModulusDescriptor::Log);
        assert_eq!(resolve_modulus("power:1/2").unwrap(), ModulusDescriptor::power(1, 2).unwrap());
        assert!(resolve_modulus("@/nonexistent.json").is_err());
        assert!(resolve_modulus("sqrt").is_err());
    }
}
