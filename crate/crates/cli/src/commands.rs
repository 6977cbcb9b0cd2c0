//! Subcommand bodies. Each returns a `CliError` carrying the exit code.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::CommandFactory;
use serde::Serialize;

use fbmlab_core::asym::asym_tail;
use fbmlab_core::constants::{closed_form, ConstantKind, EstimateRequest, EstimationSettings, ProviderPolicy};
use fbmlab_core::fbm::SamplerChoice;
use fbmlab_core::io::{envelope, to_json_line, to_json_pretty, write_atomic};
use fbmlab_core::validation::lemmas::{DEFAULT_DELTA_LADDER, DEFAULT_U_LADDER};
use fbmlab_core::validation::{convergence_table, lemma_ladder, ExtremesSample, LemmaKind};
use fbmlab_core::{
    ConstantsProvider, DrawupVariant, Error, Execution, Functional, LemmaCheckReport, ModelParams, TailQuery,
};

use crate::config::{pick, pick_list, ExperimentConfig};
use crate::{AsymptoticArgs, Cli, ConstantsArgs, SimulateArgs, ValidateArgs};

pub const DEFAULT_CACHE: &str = "fbmlab-constants.json";
const DEFAULT_OUT_DIR: &str = "fbmlab-validate";
const DEFAULT_LEMMA_HURST: [f64; 4] = [0.25, 0.4, 0.5, 0.75];
const DEFAULT_CONVERGENCE_U: [f64; 3] = [1.5, 2.0, 2.5];

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl Display) -> Self {
        Self { code, message: message.to_string() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter(_)
            | Error::ThresholdTooSmall(_)
            | Error::ConstantUnavailable(_)
            | Error::Mismatch(_) => 2,
            e if e.is_sampler_failure() => 3,
            Error::CacheWrite { .. } => 4,
            _ => 1,
        };
        Self::new(code, e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(1, e)
    }
}

type CliResult = Result<(), CliError>;

/// Prints a clap usage error and exits with status 2.
pub fn usage_error(msg: &str) -> ! {
    Cli::command().error(ErrorKind::InvalidValue, msg).exit()
}

fn required<T>(value: Option<T>, flag: &str) -> T {
    value.unwrap_or_else(|| {
        Cli::command().error(ErrorKind::MissingRequiredArgument, format!("missing required value {flag}")).exit()
    })
}

fn parse_or_usage<T: std::str::FromStr>(text: &str, flag: &str) -> T
where
    T::Err: Display,
{
    text.parse().unwrap_or_else(|e| usage_error(&format!("invalid value '{text}' for {flag}: {e}")))
}

pub fn configure_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        if n > 0 {
            // Fails only if a pool already exists, which cannot happen this early.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

/// Flag, then config document, then `FBMLAB_CACHE`, then the default name.
pub fn cache_path(flag: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    pick(flag, &config.cache)
        .or_else(|| std::env::var_os("FBMLAB_CACHE").filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE))
}

fn emit<T: Serialize>(kind: &str, data: &T) -> CliResult {
    println!("{}", to_json_line(&envelope(kind, data)?)?);
    Ok(())
}

fn model(args: &crate::ModelArgs, config: &ExperimentConfig) -> Result<(Functional, ModelParams, Vec<f64>), CliError> {
    let functional: Functional =
        parse_or_usage(&required(pick(args.functional.clone(), &config.functional), "--functional"), "--functional");
    let hurst = required(pick(args.hurst, &config.hurst), "--H");
    let mu = pick(args.mu, &config.mu).unwrap_or(0.0);
    let horizon = pick(args.horizon, &config.horizon).unwrap_or(1.0);
    let us = required(pick_list(args.u.clone(), &config.u).filter(|u| !u.is_empty()), "--u");
    let params = ModelParams::new(hurst, mu, horizon)?;
    Ok((functional, params, us))
}

fn sampler_choice(name: &str) -> SamplerChoice {
    match name {
        "auto" => SamplerChoice::Auto,
        "cholesky" => SamplerChoice::Cholesky,
        "circulant" => SamplerChoice::Circulant,
        other => usage_error(&format!("invalid value '{other}' for --sampler: expected auto, cholesky or circulant")),
    }
}

pub fn asymptotic(args: AsymptoticArgs, config: &ExperimentConfig) -> CliResult {
    let (functional, params, us) = model(&args.model, config)?;
    let variant: DrawupVariant = match pick(args.variant, &config.variant) {
        Some(v) => parse_or_usage(&v, "--variant"),
        None => DrawupVariant::default(),
    };
    let simulate = args.simulate_constants || config.simulate_constants.unwrap_or(false);
    let policy = if simulate { ProviderPolicy::SimulateIfMissing } else { ProviderPolicy::ClosedFormFirst };
    let provider = ConstantsProvider::open(cache_path(args.cache, config), policy, EstimationSettings::default())?;
    let before = provider.records().len();
    let mut results = Vec::with_capacity(us.len());
    for u in us {
        results.push(asym_tail(functional, u, &params, &provider, variant)?);
    }
    if provider.records().len() != before {
        provider.save()?;
    }
    for r in &results {
        emit("asymptotic_result", r)?;
    }
    Ok(())
}

pub fn simulate(args: SimulateArgs, config: &ExperimentConfig) -> CliResult {
    let (functional, params, us) = model(&args.model, config)?;
    let queries = us.iter().map(|&u| TailQuery::new(functional, u, params)).collect::<Result<Vec<_>, _>>()?;
    let n_paths = pick(args.paths, &config.paths).unwrap_or(10_000);
    let n_steps = pick(args.steps, &config.steps).unwrap_or(1024);
    let seed = pick(args.seed, &config.seed).unwrap_or(0);
    let choice = pick(args.sampler, &config.sampler).map(|s| sampler_choice(&s)).unwrap_or_default();
    let sample = ExtremesSample::simulate(&params, n_steps, n_paths, seed, choice, Execution::default())?;
    if let Some(path) = pick(args.dump_paths, &config.dump_paths) {
        let mut buf = Vec::new();
        sample.write_csv(&mut buf)?;
        write_atomic(&path, &buf)?;
    }
    for q in &queries {
        emit("mc_estimate", &sample.estimate(q.functional, q.u))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ConstantReport {
    estimate: fbmlab_core::ConstantEstimate,
    closed_form: Option<f64>,
    cache: String,
}

pub fn constants(args: ConstantsArgs, config: &ExperimentConfig) -> CliResult {
    let kind = match required(pick(args.kind, &config.kind), "--kind").as_str() {
        "pickands" => ConstantKind::Pickands,
        "piterbarg" => ConstantKind::Piterbarg,
        other => usage_error(&format!("invalid value '{other}' for --kind: expected pickands or piterbarg")),
    };
    let defaults = EstimationSettings::default();
    let hurst = required(pick(args.hurst, &config.hurst), "--H");
    let eta = pick(args.eta, &config.eta).unwrap_or(defaults.eta);
    let n_sim = pick(args.sims, &config.sims).unwrap_or(defaults.n_sim);
    let seed = pick(args.seed, &config.seed).unwrap_or(0);
    let b = pick_list(args.b, &config.b);
    let (request, nu) = match kind {
        ConstantKind::Pickands => {
            let b_ladder = b.unwrap_or_else(|| defaults.b_ladder.clone());
            (EstimateRequest::Pickands { hurst, b_ladder, eta, n_sim, seed }, None)
        }
        ConstantKind::Piterbarg => {
            let nu = required(pick(args.nu, &config.nu), "--nu");
            let b = match b.as_deref() {
                None => defaults.piterbarg_b,
                Some([b]) => *b,
                Some(_) => usage_error("--b takes a single value for piterbarg"),
            };
            (EstimateRequest::Piterbarg { hurst, nu, b, eta, n_sim, seed }, Some(nu))
        }
    };
    let path = cache_path(args.cache, config);
    let provider = ConstantsProvider::open(&path, ProviderPolicy::SimulateIfMissing, defaults)?;
    let estimate = provider.fetch(&request)?;
    if estimate.provenance != fbmlab_core::constants::Provenance::Cached {
        provider.save()?;
    }
    let report = ConstantReport {
        closed_form: closed_form(kind, hurst, nu).map(|c| c.value),
        estimate,
        cache: path.display().to_string(),
    };
    emit("constant_estimate", &report)
}

#[derive(Serialize)]
struct Check {
    name: String,
    pass: bool,
}

#[derive(Serialize)]
struct ValidationReport {
    suite: String,
    all_pass: bool,
    first_failure: Option<String>,
    checks: Vec<Check>,
    lemmas: Vec<LemmaCheckReport>,
    convergence: Vec<fbmlab_core::validation::ConvergenceTable>,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult {
    write_atomic(&dir.join(name), contents.as_bytes())?;
    Ok(())
}

fn lemma_csv(reports: &[LemmaCheckReport]) -> String {
    let mut out = String::from("lemma,H,mu,T,step,u,delta,max_rel_error,pass\n");
    for r in reports {
        for (i, (&d, &e)) in r.deltas.iter().zip(&r.max_rel_error).enumerate() {
            let u = r.u_grid.get(i).map(|u| fbmlab_core::io::fmt_f64(*u)).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{i},{u},{},{},{}\n",
                r.lemma.name(),
                fbmlab_core::io::fmt_f64(r.params.hurst()),
                fbmlab_core::io::fmt_f64(r.params.mu()),
                fbmlab_core::io::fmt_f64(r.params.horizon()),
                fbmlab_core::io::fmt_f64(d),
                fbmlab_core::io::fmt_f64(e),
                r.pass
            ));
        }
    }
    out
}

fn lemma_plot(r: &LemmaCheckReport) -> String {
    let pts: Vec<(f64, f64)> = r.deltas.iter().copied().zip(r.max_rel_error.iter().copied()).collect();
    fbmlab_core::io::plot_data(&format!("delta max_rel_error ({}, H={})", r.lemma.name(), r.params.hurst()), &pts)
}

pub fn validate(args: ValidateArgs, config: &ExperimentConfig) -> CliResult {
    let suite = required(pick(args.suite, &config.suite), "--suite");
    let (run_lemmas, run_convergence) = match suite.as_str() {
        "lemmas" => (true, false),
        "convergence" => (false, true),
        "all" => (true, true),
        other => usage_error(&format!("invalid value '{other}' for --suite: expected lemmas, convergence or all")),
    };
    let out_dir = pick(args.out, &config.out_dir).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    fs::create_dir_all(&out_dir)?;

    let mut checks = Vec::new();
    let mut lemmas = Vec::new();
    if run_lemmas {
        let mu = config.lemma_mu.unwrap_or(0.0);
        let t = config.lemma_horizon.unwrap_or(1.0);
        let u_ladder = config.u_ladder.clone().unwrap_or(DEFAULT_U_LADDER.to_vec());
        let delta_ladder = config.delta_ladder.clone().unwrap_or(DEFAULT_DELTA_LADDER.to_vec());
        for &h in config.lemma_hurst.as_deref().unwrap_or(&DEFAULT_LEMMA_HURST) {
            let params = ModelParams::new(h, mu, t)?;
            for lemma in [LemmaKind::Lemma1, LemmaKind::lemma2_for(h), LemmaKind::Lemma3] {
                let r = lemma_ladder(lemma, &params, &u_ladder, &delta_ladder)?;
                checks.push(Check { name: format!("{}[H={h}]", lemma.name()), pass: r.pass });
                write_file(&out_dir, &format!("{}_H{h}.dat", lemma.name()), &lemma_plot(&r))?;
                lemmas.push(r);
            }
        }
        write_file(&out_dir, "lemmas.csv", &lemma_csv(&lemmas))?;
    }

    let mut tables = Vec::new();
    if run_convergence {
        let mu = config.convergence_mu.unwrap_or(0.0);
        let t = config.convergence_horizon.unwrap_or(1.0);
        let us = config.convergence_u.clone().unwrap_or(DEFAULT_CONVERGENCE_U.to_vec());
        let functionals: Vec<Functional> = match &config.functionals {
            Some(names) => names.iter().map(|n| parse_or_usage(n, "functionals")).collect(),
            None => vec![Functional::Drawdown, Functional::Drawup],
        };
        let n_paths = pick(args.paths, &config.paths).unwrap_or(100_000);
        let n_steps = pick(args.steps, &config.steps).unwrap_or(1024);
        let seed = pick(args.seed, &config.seed).unwrap_or(1);
        let provider = ConstantsProvider::open(
            cache_path(args.cache, config),
            ProviderPolicy::SimulateIfMissing,
            EstimationSettings::default(),
        )?;
        let before = provider.records().len();
        for &h in config.convergence_hurst.as_deref().unwrap_or(&[0.5]) {
            let params = ModelParams::new(h, mu, t)?;
            let sample = ExtremesSample::simulate(&params, n_steps, n_paths, seed, SamplerChoice::Auto, Execution::default())?;
            for &f in &functionals {
                let table = convergence_table(&sample, f, &us, &provider, DrawupVariant::default())?;
                let pass = table.trend.as_ref().is_none_or(|t| t.toward_one);
                checks.push(Check { name: format!("convergence[{},H={h}]", f.name()), pass });
                write_file(&out_dir, &format!("convergence_{}_H{h}.csv", f.name()), &table.csv())?;
                write_file(&out_dir, &format!("convergence_{}_H{h}.dat", f.name()), &table.plot_data())?;
                tables.push(table);
            }
        }
        if provider.records().len() != before {
            provider.save()?;
        }
    }

    let first_failure = checks.iter().find(|c| !c.pass).map(|c| c.name.clone());
    let report = ValidationReport {
        suite,
        all_pass: first_failure.is_none(),
        first_failure: first_failure.clone(),
        checks,
        lemmas,
        convergence: tables,
    };
    let doc = envelope("validation_report", &report)?;
    write_file(&out_dir, "report.json", &(to_json_pretty(&doc)? + "\n"))?;
    println!("{}", to_json_line(&doc)?);
    match first_failure {
        Some(name) => Err(CliError::new(5, format!("validation check failed: {name}"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::ThresholdTooSmall("x".into())).code, 2);
        assert_eq!(CliError::from(Error::Embedding("x".into())).code, 3);
        let io = std::io::Error::other("disk");
        assert_eq!(CliError::from(Error::CacheWrite { path: "p".into(), source: io }).code, 4);
        assert_eq!(CliError::from(Error::NoConvergence("x".into())).code, 1);
    }

    #[test]
    fn cache_flag_beats_config() {
        let config = ExperimentConfig { cache: Some("from-config.json".into()), ..Default::default() };
        assert_eq!(cache_path(Some("flag.json".into()), &config), PathBuf::from("flag.json"));
        assert_eq!(cache_path(None, &config), PathBuf::from("from-config.json"));
    }
}
