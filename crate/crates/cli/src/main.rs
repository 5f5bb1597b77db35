//! `signed-consensus`: analyze, simulate and verify opinion dynamics over
//! signed graphs.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid scenario or flag,
//! 3 analysis cap exceeded, 4 integrator failure, 5 prediction conflict.

mod builtins;
mod report;
mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use signed_consensus::classification::{classify, reconcile, Outcome, Verdict};
use signed_consensus::dynamics::{
    default_t_end, integrate, integrate_gain_flow, integrate_nonlinear_additive, Trajectory,
};
use signed_consensus::error::Error;
use signed_consensus::signed_graph::Schedule;
use signed_consensus::time_varying::{
    analyze_schedule, predict_cut_balanced, predict_gain_flow, predict_nonlinear,
    predict_schedule,
};
use signed_consensus::topology::{laplacian_spectrum, static_predict};

use report::{AnalysisInputs, AnalysisReport, VerifyReport};
use scenario::{Protocol, Scenario, ScenarioFile};

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn schema(message: impl Into<String>) -> Self {
        Self::new(2, message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_)
            | Error::InvalidInput(_)
            | Error::InvalidMatrix(_)
            | Error::InvalidSchedule(_) => 2,
            Error::CapExceeded(_) => 3,
            Error::IntegratorInstability { .. }
            | Error::Divergence { .. }
            | Error::GainEvaluation { .. } => 4,
            _ => 1,
        };
        Self::new(code, e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "signed-consensus", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Source {
    /// Scenario file, or the name of a built-in (see `examples list`).
    scenario: String,
    /// Built-in parameter override, `key=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
}

#[derive(Args, Clone, Copy, Default)]
struct RunOpts {
    /// Integration horizon; defaults to the scenario's, then to one derived
    /// from the spectrum.
    #[arg(long)]
    t_end: Option<f64>,
    /// RK4 step size.
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Topology and connectivity report with the predicted outcome.
    Analyze {
        #[command(flatten)]
        source: Source,
        /// Window length T for the uniform connectivity checks.
        #[arg(long, requires = "epsilon")]
        window: Option<f64>,
        /// Threshold ε for the uniform connectivity checks.
        #[arg(long, requires = "window")]
        epsilon: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the scenario. With `--out PREFIX` writes PREFIX.csv and
    /// PREFIX.json (plus PREFIX.gains.json for nonlinear protocols).
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        run: RunOpts,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stdout format when no `--out` is given.
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Predict, simulate, classify and reconcile. Accepts a directory of
    /// scenario files for batch runs.
    Verify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        run: RunOpts,
        /// Classifier tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Worker threads for directory batches.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in scenarios.
    Examples {
        #[command(subcommand)]
        command: ExamplesCommand,
    },
}

#[derive(Subcommand)]
enum ExamplesCommand {
    List,
    /// Verify a built-in.
    Run {
        name: String,
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[command(flatten)]
        run: RunOpts,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a built-in as a scenario file.
    Export {
        name: String,
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn scenario_file(source: &Source) -> CliResult<(String, ScenarioFile)> {
    let path = Path::new(&source.scenario);
    if path.is_file() {
        if !source.params.is_empty() {
            return Err(CliError::schema("--param only applies to built-in scenarios"));
        }
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::new(1, format!("{}: {e}", path.display())))?;
        let file = ScenarioFile::parse(&text)
            .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| source.scenario.clone());
        return Ok((name, file));
    }
    let builtin = builtins::find(&source.scenario).ok_or_else(|| {
        CliError::new(
            1,
            format!("{}: no such file or built-in scenario", source.scenario),
        )
    })?;
    let file = builtin.scenario(&source.params).map_err(CliError::schema)?;
    Ok((builtin.name.to_string(), file))
}

fn load(source: &Source) -> CliResult<Scenario> {
    let (name, file) = scenario_file(source)?;
    file.into_scenario(&name)
        .map_err(|e| CliError::schema(format!("{name}: {e}")))
}

fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::new(1, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn predict(scn: &Scenario) -> CliResult<Outcome> {
    Ok(match &scn.protocol {
        Protocol::Linear => predict_schedule(&scn.schedule)?,
        Protocol::Additive(..) => predict_nonlinear(&scn.schedule)?,
        Protocol::GainFlow(f) => predict_gain_flow(f.as_ref())?,
    })
}

fn analyze(scn: &Scenario, window: Option<(f64, f64)>) -> CliResult<AnalysisReport> {
    let schedule = &scn.schedule;
    let connectivity = analyze_schedule(schedule, window)?;
    let static_prediction = schedule.constant_matrix().map(static_predict).transpose()?;
    let components = match connectivity.cut_balance_k {
        Some(_) => Some(predict_cut_balanced(schedule)?.components),
        None => None,
    };
    let prediction = predict(scn)?;
    Ok(AnalysisReport::new(AnalysisInputs {
        hash: &scn.hash,
        protocol: scn.protocol.name(),
        schedule,
        static_prediction: static_prediction.as_ref(),
        connectivity: &connectivity,
        components: components.as_deref(),
        prediction: &prediction,
    }))
}

fn horizon(scn: &Scenario, run: &RunOpts) -> CliResult<f64> {
    if let Some(t) = run.t_end.or(scn.t_end) {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::schema(format!("--t-end must be positive, got {t}")));
        }
        return Ok(t);
    }
    Ok(match scn.schedule.constant_matrix() {
        Some(a) => default_t_end(&laplacian_spectrum(a)?),
        None => default_t_end(&[]),
    })
}

fn simulate(scn: &Scenario, run: &RunOpts) -> CliResult<(Trajectory, Option<Schedule>)> {
    let t_end = horizon(scn, run)?;
    let mut cfg = scn.integrator.clone();
    if let Some(h) = run.step {
        cfg.step = h;
    }
    let (mut traj, gains) = match &scn.protocol {
        Protocol::Linear => (integrate(&scn.schedule, &scn.x0, t_end, &cfg)?, None),
        Protocol::Additive(variant, spec) => {
            let r = integrate_nonlinear_additive(&scn.schedule, spec, &scn.x0, t_end, &cfg, *variant)?;
            (r.trajectory, Some(r.gains))
        }
        Protocol::GainFlow(f) => {
            let r = integrate_gain_flow(f.as_ref(), &scn.x0, t_end, &cfg)?;
            (r.trajectory, Some(r.gains))
        }
    };
    traj.meta.scenario_hash = Some(scn.hash.clone());
    Ok((traj, gains))
}

fn verify(scn: &Scenario, run: &RunOpts, tol: Option<f64>) -> CliResult<VerifyReport> {
    let predicted = predict(scn)?;
    let (traj, _) = simulate(scn, run)?;
    let mut cfg = scn.classifier.clone();
    if let Some(t) = tol {
        cfg.tol = t;
    }
    let observed = classify(&traj, &cfg)?;
    let r = reconcile(&predicted, &observed.outcome);
    Ok(VerifyReport::new(
        &scn.name,
        &scn.hash,
        scn.protocol.name(),
        traj.meta.t_end,
        traj.meta.step,
        &observed,
        &r,
    ))
}

fn verdict_code(r: &VerifyReport) -> u8 {
    if r.reconciliation.verdict == Verdict::Conflict {
        5
    } else {
        0
    }
}

fn verify_batch(dir: &Path, run: &RunOpts, tol: Option<f64>, jobs: usize) -> CliResult<(String, u8)> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::new(1, format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::new(1, e.to_string()))?;
    let results: Vec<CliResult<VerifyReport>> = pool.install(|| {
        files
            .par_iter()
            .map(|p| {
                let source = Source {
                    scenario: p.to_string_lossy().into_owned(),
                    params: Vec::new(),
                };
                verify(&load(&source)?, run, tol)
            })
            .collect()
    });

    let mut code = 0;
    let entries: Vec<serde_json::Value> = files
        .iter()
        .zip(&results)
        .map(|(path, r)| match r {
            Ok(report) => {
                if code == 0 {
                    code = verdict_code(report);
                }
                serde_json::to_value(report).expect("report serializes")
            }
            Err(e) => {
                if code == 0 {
                    code = e.code;
                }
                serde_json::json!({
                    "scenario": path.display().to_string(),
                    "error": e.message,
                    "exit_code": e.code,
                })
            }
        })
        .collect();
    Ok((to_json(&entries), code))
}

fn run_verify(source: &Source, run: &RunOpts, tol: Option<f64>, jobs: usize, out: Option<&Path>) -> CliResult<u8> {
    let path = Path::new(&source.scenario);
    if path.is_dir() {
        let (text, code) = verify_batch(path, run, tol, jobs)?;
        write_output(out, &text)?;
        return Ok(code);
    }
    let report = verify(&load(source)?, run, tol)?;
    write_output(out, &to_json(&report))?;
    Ok(verdict_code(&report))
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Analyze {
            source,
            window,
            epsilon,
            out,
        } => {
            let scn = load(&source)?;
            let report = analyze(&scn, window.zip(epsilon))?;
            write_output(out.as_deref(), &to_json(&report))?;
            Ok(0)
        }
        Command::Simulate {
            source,
            run,
            out,
            format,
        } => {
            let scn = load(&source)?;
            let (traj, gains) = simulate(&scn, &run)?;
            match out {
                Some(prefix) => {
                    let with = |ext: &str| {
                        let mut p = prefix.clone().into_os_string();
                        p.push(ext);
                        PathBuf::from(p)
                    };
                    write_output(Some(&with(".csv")), &traj.to_csv())?;
                    write_output(Some(&with(".json")), &traj.to_json())?;
                    if let Some(g) = gains {
                        write_output(Some(&with(".gains.json")), &g.to_file().to_json())?;
                    }
                }
                None => match format {
                    Format::Csv => write_output(None, &traj.to_csv())?,
                    Format::Json => write_output(None, &(traj.to_json() + "\n"))?,
                },
            }
            Ok(0)
        }
        Command::Verify {
            source,
            run,
            tol,
            jobs,
            out,
        } => run_verify(&source, &run, tol, jobs, out.as_deref()),
        Command::Examples { command } => match command {
            ExamplesCommand::List => {
                let width = builtins::BUILTINS.iter().map(|b| b.name.len()).max().unwrap_or(0);
                let mut text = String::new();
                for b in builtins::BUILTINS {
                    text.push_str(&format!("{:width$}  {}", b.name, b.about));
                    if !b.params.is_empty() {
                        let ps: Vec<String> = b.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                        text.push_str(&format!(" [{}]", ps.join(", ")));
                    }
                    text.push('\n');
                }
                write_output(None, &text)?;
                Ok(0)
            }
            ExamplesCommand::Run {
                name,
                params,
                run,
                tol,
                out,
            } => {
                if builtins::find(&name).is_none() {
                    return Err(CliError::new(1, format!("{name}: no such built-in scenario")));
                }
                let source = Source { scenario: name, params };
                run_verify(&source, &run, tol, 1, out.as_deref())
            }
            ExamplesCommand::Export { name, params, out } => {
                let b = builtins::find(&name)
                    .ok_or_else(|| CliError::new(1, format!("{name}: no such built-in scenario")))?;
                let file = b.scenario(&params).map_err(CliError::schema)?;
                write_output(out.as_deref(), &(file.to_json() + "\n"))?;
                Ok(0)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
