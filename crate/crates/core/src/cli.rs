//! Command-line front end. The binary is a thin wrapper over [`run`].

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::conditions::{check_theorem31_conditions, ConditionReport, ConditionSettings, Route};
use crate::finder::{find_periodic_solution, FinderError, FinderOptions, PeriodicSolutionReport};
use crate::integrator::{integrate_ivp, IntegrationSettings, TrajectoryStatus};
use crate::io::{
    compare_csv, load_lambda, load_system, system_to_file, to_deterministic_json, trajectory_csv, write_artifact,
    CompareRow, InputError, LoadedSystem, SystemFile,
};
use crate::normality::{classify_pair, PairClass};
use crate::quaternion::Quaternion;
use crate::transforms::{classify_sign_case, lambda_conjugation, reduce_to_case_i, LambdaFit, TransformRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_APPLICABLE: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "qriccati", version, about = "Periodic solutions of quaternionic Riccati equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON file with default settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Grid intervals per period for the condition checks.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    #[arg(long, global = true)]
    pub atol: Option<f64>,
    /// Period multiplier, bypassing the estimate.
    #[arg(long, global = true)]
    pub m0: Option<u32>,
    /// Pure bisection with the proof's m0 formula; no q -> -q in reductions.
    #[arg(long, global = true)]
    pub strict_proof: bool,
    /// Run the finder even when the conditions fail.
    #[arg(long, global = true)]
    pub force: bool,
    /// Also write the solution trajectory as CSV.
    #[arg(long, global = true)]
    pub emit_trajectory: bool,
    /// Periods to integrate for `classify`.
    #[arg(long, global = true)]
    pub periods: Option<u32>,
    /// Output directory; without it the main artifact goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the existence conditions and the Ark-based comparison criteria.
    Check { input: PathBuf },
    /// Find and certify periodic solutions.
    Find { input: PathBuf },
    /// Reduce the sign case of `a` to case I, optionally after a λ-conjugation.
    Reduce {
        input: PathBuf,
        /// `{"T": .., "lambda": {"c0": .., ...}}`
        #[arg(long)]
        lambda: Option<PathBuf>,
    },
    /// Classify a pair of solutions as normal or extremal.
    Classify {
        input: PathBuf,
        /// Start of the first solution, `w,x,y,z`.
        #[arg(long, value_parser = parse_quaternion, allow_hyphen_values = true)]
        qa: Quaternion,
        #[arg(long, value_parser = parse_quaternion, allow_hyphen_values = true)]
        qb: Quaternion,
    },
    /// Integrate one initial value problem.
    Integrate {
        input: PathBuf,
        /// Initial value `w,x,y,z`.
        #[arg(long, value_parser = parse_quaternion, allow_hyphen_values = true)]
        q0: Quaternion,
        /// End time; defaults to one period.
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Run check and find over several systems and tabulate the outcome.
    Compare {
        /// System files or directories of `*.json` files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn parse_quaternion(s: &str) -> Result<Quaternion, String> {
    let parts: Vec<f64> =
        s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"))).collect::<Result<_, _>>()?;
    let arr: [f64; 4] = parts.try_into().map_err(|_| "expected four comma-separated numbers".to_string())?;
    let q = Quaternion::from_array(arr);
    if !q.is_finite() {
        return Err("components must be finite".into());
    }
    Ok(q)
}

/// Settings read from `--config`. All keys are optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub rtol: Option<f64>,
    #[serde(default)]
    pub atol: Option<f64>,
    #[serde(default)]
    pub m0: Option<u32>,
    #[serde(default)]
    pub strict_proof: Option<bool>,
    #[serde(default)]
    pub force: Option<bool>,
    #[serde(default)]
    pub emit_trajectory: Option<bool>,
    #[serde(default)]
    pub periods: Option<u32>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, InputError> {
        serde_json::from_str(text).map_err(|e| InputError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Flags take precedence over the file.
    pub fn merge(self, f: &Flags) -> Self {
        Self {
            grid: f.grid.or(self.grid),
            rtol: f.rtol.or(self.rtol),
            atol: f.atol.or(self.atol),
            m0: f.m0.or(self.m0),
            strict_proof: Some(f.strict_proof || self.strict_proof.unwrap_or(false)),
            force: Some(f.force || self.force.unwrap_or(false)),
            emit_trajectory: Some(f.emit_trajectory || self.emit_trajectory.unwrap_or(false)),
            periods: f.periods.or(self.periods),
            out: f.out.clone().or(self.out),
        }
    }

    pub fn validate(&self) -> Result<(), InputError> {
        let bad =
            |field: &str, message: &str| Err(InputError::Validation { field: field.into(), message: message.into() });
        for (name, v) in [("rtol", self.rtol), ("atol", self.atol)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return bad(name, "must be positive");
                }
            }
        }
        if matches!(self.grid, Some(g) if g < 8) {
            return bad("grid", "needs at least 8 intervals");
        }
        if self.m0 == Some(0) {
            return bad("m0", "must be at least 1");
        }
        if self.periods == Some(0) {
            return bad("periods", "must be at least 1");
        }
        Ok(())
    }

    pub fn integration(&self) -> IntegrationSettings {
        let mut s = IntegrationSettings::default();
        if let Some(r) = self.rtol {
            s.rel_tol = r;
        }
        if let Some(a) = self.atol {
            s.abs_tol = a;
        }
        s
    }

    pub fn condition_settings(&self) -> ConditionSettings {
        let mut s = ConditionSettings::default();
        if let Some(g) = self.grid {
            s.grid = g;
        }
        s
    }

    pub fn finder_options(&self) -> FinderOptions {
        FinderOptions {
            integration: self.integration(),
            conditions: self.condition_settings(),
            strict_proof: self.strict_proof.unwrap_or(false),
            force: self.force.unwrap_or(false),
            m0_override: self.m0,
            ..FinderOptions::default()
        }
    }
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Self { code: EXIT_INPUT, message: e.to_string() }
    }
}

fn input_failure(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

/// Output produced by a subcommand before it is written out.
struct Artifacts {
    /// File name and contents of the main artifact.
    main: (String, String),
    extra: Vec<(String, String)>,
    code: i32,
    warnings: Vec<String>,
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "system".into())
}

fn json<T: Serialize>(v: &T) -> Result<String, Failure> {
    to_deterministic_json(v).map_err(|e| input_failure(format!("serialisation failed: {e}")))
}

fn load(path: &Path) -> Result<LoadedSystem, Failure> {
    Ok(load_system(path)?)
}

fn fit_warnings(loaded: &LoadedSystem) -> Vec<String> {
    loaded.fit_residuals.iter().map(|(f, r)| format!("{f}: tabulated input fitted with max residual {r:.3e}")).collect()
}

fn check_code(report: &ConditionReport) -> i32 {
    if report.route == Route::NotApplicable {
        EXIT_NOT_APPLICABLE
    } else {
        EXIT_OK
    }
}

fn cmd_check(input: &Path, cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let loaded = load(input)?;
    let report = check_theorem31_conditions(&loaded.system, &cfg.condition_settings())
        .map_err(|e| input_failure(e.to_string()))?;
    Ok(Artifacts {
        main: (format!("{}.report.json", stem(input)), json(&report)?),
        extra: Vec::new(),
        code: check_code(&report),
        warnings: fit_warnings(&loaded),
    })
}

/// Written by `find` when no solution is certified.
#[derive(Debug, Serialize)]
struct FindFailure {
    status: &'static str,
    error: String,
    detail: FinderError,
    conditions: Option<ConditionReport>,
}

/// Exit code for a finder error.
pub fn finder_error_code(e: &FinderError) -> i32 {
    match e {
        FinderError::NotApplicable { .. } => EXIT_NOT_APPLICABLE,
        FinderError::Model(_) => EXIT_INPUT,
        _ => EXIT_NO_CONVERGENCE,
    }
}

/// Exit code for a finished report: a residual above the acceptance
/// tolerance counts as no convergence.
pub fn report_code(report: &PeriodicSolutionReport, opts: &FinderOptions) -> i32 {
    if report.branches().all(|b| b.residual < opts.accept_tol) {
        EXIT_OK
    } else {
        EXIT_NO_CONVERGENCE
    }
}

fn cmd_find(input: &Path, cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let loaded = load(input)?;
    let opts = cfg.finder_options();
    let name = stem(input);
    let warnings = fit_warnings(&loaded);
    let report = match find_periodic_solution(&loaded.system, &opts) {
        Ok(r) => r,
        Err(e) => {
            let conditions = check_theorem31_conditions(&loaded.system, &opts.conditions).ok();
            let code = finder_error_code(&e);
            let status = if code == EXIT_NOT_APPLICABLE { "not_applicable" } else { "no_convergence" };
            let body = FindFailure { status, error: e.to_string(), detail: e, conditions };
            return Ok(Artifacts {
                main: (format!("{name}.report.json"), json(&body)?),
                extra: Vec::new(),
                code,
                warnings,
            });
        }
    };
    let mut extra = Vec::new();
    if cfg.emit_trajectory.unwrap_or(false) {
        let s = &report.solution;
        let span = s.m0 as f64 * loaded.system.period();
        let traj = integrate_ivp(&loaded.system, s.quaternion, 0.0, span, &opts.integration)
            .map_err(|e| input_failure(e.to_string()))?;
        extra.push((format!("{name}.traj.csv"), trajectory_csv(&traj)));
    }
    Ok(Artifacts {
        main: (format!("{name}.report.json"), json(&report)?),
        extra,
        code: report_code(&report, &opts),
        warnings,
    })
}

#[derive(Debug, Serialize)]
struct Reduction {
    input_case: String,
    output_case: String,
    lambda_fit: Option<LambdaFit>,
    /// The reduced system in the input schema.
    system: SystemFile,
    record: TransformRecord,
}

fn cmd_reduce(input: &Path, lambda: Option<&Path>, cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let loaded = load(input)?;
    let mut sys = loaded.system.clone();
    let mut lambda_fit = None;
    let mut pre = TransformRecord::default();
    if let Some(lp) = lambda {
        let l = load_lambda(lp)?;
        let (out, fit) = lambda_conjugation(&sys, &l).map_err(|e| input_failure(e.to_string()))?;
        pre.steps.push(crate::transforms::RecordedStep {
            step: crate::transforms::TransformStep::LambdaConjugate { lambda: l },
            result: out.clone(),
        });
        lambda_fit = Some(fit);
        sys = out;
    }
    let input_case = classify_sign_case(&sys.a);
    let allow_negate = !cfg.strict_proof.unwrap_or(false);
    let mut warnings = fit_warnings(&loaded);
    let (reduced, code) = match reduce_to_case_i(&sys, allow_negate) {
        Ok((reduced, rec)) => {
            pre.steps.extend(rec.steps);
            pre.notes.extend(rec.notes);
            (reduced, EXIT_OK)
        }
        Err(e) => {
            // keep whatever λ-conjugation produced
            warnings.push(format!("{}: {e}", input.display()));
            pre.notes.push(e.to_string());
            (sys, EXIT_NOT_APPLICABLE)
        }
    };
    let body = Reduction {
        input_case: input_case.roman(),
        output_case: classify_sign_case(&reduced.a).roman(),
        lambda_fit,
        system: system_to_file(&reduced),
        record: pre,
    };
    Ok(Artifacts { main: (format!("{}.reduced.json", stem(input)), json(&body)?), extra: Vec::new(), code, warnings })
}

fn cmd_classify(input: &Path, qa: Quaternion, qb: Quaternion, cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let loaded = load(input)?;
    let report = classify_pair(&loaded.system, qa, qb, cfg.periods.unwrap_or(20), &cfg.integration());
    let code = if report.classification == PairClass::Inconclusive { EXIT_NO_CONVERGENCE } else { EXIT_OK };
    Ok(Artifacts {
        main: (format!("{}.report.json", stem(input)), json(&report)?),
        extra: Vec::new(),
        code,
        warnings: fit_warnings(&loaded),
    })
}

fn cmd_integrate(input: &Path, q0: Quaternion, t_end: Option<f64>, cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let loaded = load(input)?;
    let t1 = t_end.unwrap_or(loaded.system.period());
    let traj =
        integrate_ivp(&loaded.system, q0, 0.0, t1, &cfg.integration()).map_err(|e| input_failure(e.to_string()))?;
    let mut warnings = fit_warnings(&loaded);
    let code = match traj.status() {
        TrajectoryStatus::Completed => EXIT_OK,
        TrajectoryStatus::Escaped { t_escape } => {
            warnings.push(format!("solution escaped at t = {t_escape}"));
            EXIT_NO_CONVERGENCE
        }
        TrajectoryStatus::StepLimit { t_reached } => {
            warnings.push(format!("step limit reached at t = {t_reached}"));
            EXIT_NO_CONVERGENCE
        }
    };
    Ok(Artifacts {
        main: (format!("{}.traj.csv", stem(input)), trajectory_csv(&traj)),
        extra: Vec::new(),
        code,
        warnings,
    })
}

fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let entries = fs::read_dir(p).map_err(|e| input_failure(format!("{}: {e}", p.display())))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(input_failure("no system files found"));
    }
    Ok(files)
}

fn compare_row(path: &Path, cfg: &RunConfig) -> Result<CompareRow, Failure> {
    let loaded = load(path)?;
    let opts = cfg.finder_options();
    let cond =
        check_theorem31_conditions(&loaded.system, &opts.conditions).map_err(|e| input_failure(e.to_string()))?;
    let found = find_periodic_solution(&loaded.system, &opts).ok().filter(|r| report_code(r, &opts) == EXIT_OK);
    Ok(CompareRow {
        system: stem(path),
        thm31_applicable: cond.theorem31_applicable(),
        thm11_applicable: cond.ark_criteria.applicable,
        found: found.is_some(),
        residual: found.as_ref().map(|r| r.solution.residual),
        m0: found.as_ref().map(|r| r.solution.m0),
    })
}

fn cmd_compare(inputs: &[PathBuf], cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let files = collect_inputs(inputs)?;
    let rows: Vec<Result<CompareRow, Failure>> = std::thread::scope(|s| {
        let handles: Vec<_> = files.iter().map(|f| s.spawn(move || compare_row(f, cfg))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(input_failure("worker panicked")))).collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Artifacts {
        main: ("compare.csv".into(), compare_csv(&rows)),
        extra: Vec::new(),
        code: EXIT_OK,
        warnings: Vec::new(),
    })
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<Artifacts, Failure> {
    match &cli.command {
        Command::Check { input } => cmd_check(input, cfg),
        Command::Find { input } => cmd_find(input, cfg),
        Command::Reduce { input, lambda } => cmd_reduce(input, lambda.as_deref(), cfg),
        Command::Classify { input, qa, qb } => cmd_classify(input, *qa, *qb, cfg),
        Command::Integrate { input, q0, t_end } => cmd_integrate(input, *q0, *t_end, cfg),
        Command::Compare { inputs } => cmd_compare(inputs, cfg),
    }
}

fn resolve_config(flags: &Flags) -> Result<RunConfig, Failure> {
    let base = match &flags.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| input_failure(format!("{}: {e}", p.display())))?;
            RunConfig::parse(&text).map_err(|e| input_failure(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    let cfg = base.merge(flags);
    cfg.validate()?;
    Ok(cfg)
}

/// Writes the artifacts: into `--out` when given, otherwise the main one to
/// `out` and the extras into the working directory.
fn emit(a: &Artifacts, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    match &cfg.out {
        Some(dir) => {
            write_artifact(dir, &a.main.0, &a.main.1)?;
        }
        None => {
            out.write_all(a.main.1.as_bytes()).map_err(|e| input_failure(e.to_string()))?;
        }
    }
    let extra_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    for (name, body) in &a.extra {
        write_artifact(&extra_dir, name, body)?;
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = resolve_config(&cli.flags).and_then(|cfg| {
        let a = execute(&cli, &cfg)?;
        emit(&a, &cfg, out)?;
        Ok(a)
    });
    match result {
        Ok(a) => {
            for w in &a.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            a.code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
