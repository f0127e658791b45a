//! Command line surface for the tiecop library. Subcommands wrap the
//! library modules one to one; every output is machine readable (JSON or
//! CSV), echoes the configuration that produced it, and formats numbers to
//! 6 significant digits so identical invocations produce identical bytes.
//!
//! Exit codes: 0 success, 1 input or configuration error, 2 fit tainted by
//! penalized rows, 3 optimizer non-convergence.

mod ingest;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ingest::{family_name, parse_families, parse_family, parse_kind};
use output::{q6, q6_vec, sig6, write_csv, write_json};

use tiecop::copulas::Family;
use tiecop::estimation::{fit_rows, population_limit_demo, FitOptions};
use tiecop::hydro::{
    extract_droughts, fit_duration_severity, spi, DroughtModel, DEFAULT_CANDIDATES,
    DEFAULT_MIN_EVENTS,
};
use tiecop::identifiability::{audit, empirical_margins, qn_for_rows, Verdict};
use tiecop::likelihood::LikelihoodKind;
use tiecop::margins::{pseudo_observations, AtomMode, EmpiricalMargin, Margin, ParametricMargin};
use tiecop::simulation::{
    run_experiment, ExpId, ExperimentSpec, TABLE_EXPERIMENTS, TABLE_FAMILIES,
};
use tiecop::{Error, Result};

#[derive(Parser)]
#[command(
    name = "tiecop",
    version,
    about = "Copula estimation for data with ties: fits, identifiability audits, simulations, drought analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a copula family to the numeric columns of a CSV file
    Fit(FitArgs),
    /// Audit parameter identifiability on the margins' product grid
    Identify(IdentifyArgs),
    /// Monte Carlo experiments: one cell or the full margin-menu table
    Simulate(SimulateArgs),
    /// Standardized precipitation index from a daily precipitation CSV
    Spi(SpiArgs),
    /// Extract drought events (duration, severity) from precipitation
    Drought(DroughtArgs),
    /// Rank copula families on drought events and emit conditional curves
    Regress(RegressArgs),
    /// Closed-form comparison of the naive and atom-aware objectives on
    /// Bernoulli margins
    DemoBernoulli(DemoArgs),
}

#[derive(Args)]
struct FitArgs {
    /// input CSV; header row required, all columns numeric
    data: PathBuf,
    /// clayton | frank | gumbel | plackett | gaussian | student
    #[arg(long)]
    family: String,
    /// informed | non-informed | naive | composite-informed | composite-non-informed
    #[arg(long, default_value = "non-informed")]
    mode: String,
    /// atom declaration, repeatable: --atoms col=0,1 (informed modes)
    #[arg(long)]
    atoms: Vec<String>,
    /// JSON file mapping column names to atom value arrays
    #[arg(long)]
    atoms_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// optimizer multistart count
    #[arg(long, default_value_t = 3)]
    starts: usize,
    /// Student degrees-of-freedom grid, e.g. 1,2,5,10 (default: integers 1..50)
    #[arg(long)]
    nu_grid: Option<String>,
    /// skip the parameter-count vs grid-cardinality pre-check
    #[arg(long)]
    waive_identifiability: bool,
    /// output path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IdentifyArgs {
    /// input CSV of data columns (omit when using --bernoulli-margins)
    data: Option<PathBuf>,
    #[arg(long)]
    family: String,
    /// audit the canonical two-level Bernoulli(1/2) margins instead of data
    #[arg(long)]
    bernoulli_margins: bool,
    /// parameter box, lo:hi per dimension, e.g. -0.9:0.9,1:30
    #[arg(long = "box")]
    bbox: Option<String>,
    /// lattice spacing for the center scan (default: largest box side / 4)
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// run every family against every bivariate margin scenario
    #[arg(long)]
    table1: bool,
    /// exp1 | exp2 | exp3 | exp4 | exp5 | tri (single-cell mode)
    #[arg(long)]
    exp: Option<String>,
    /// family for single-cell mode
    #[arg(long)]
    family: Option<String>,
    /// comma-separated family filter for --table1
    #[arg(long)]
    families: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    tau0: f64,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// likelihood kind override (default: non-informed, composite for tri)
    #[arg(long)]
    mode: Option<String>,
    /// Student degrees of freedom treated as known
    #[arg(long, default_value_t = 5.0)]
    nu: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpiArgs {
    /// CSV with `date` (ISO-8601) and `precip_mm` columns
    data: PathBuf,
    /// trailing moving-average window in days
    #[arg(long, default_value_t = 30)]
    window: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DroughtArgs {
    /// CSV with `date` (ISO-8601) and `precip_mm` columns
    data: PathBuf,
    #[arg(long, default_value_t = 30)]
    window: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegressArgs {
    /// events CSV with `duration_months` and `severity_months` columns
    events: PathBuf,
    /// candidate families (default: clayton,frank,gumbel,gaussian)
    #[arg(long)]
    families: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MIN_EVENTS)]
    min_events: usize,
    /// conditioning severities in months (default: observed quartiles)
    #[arg(long)]
    severities: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// ranking JSON path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// conditional curve CSV (severity, duration, probability)
    #[arg(long)]
    curves_out: Option<PathBuf>,
    /// conditional mean CSV (severity, expected duration)
    #[arg(long)]
    means_out: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    /// objective curve CSV (theta, naive, atom-aware)
    #[arg(long)]
    curve_out: Option<PathBuf>,
}

// ------------------------------------------------------------------ fit

#[derive(Serialize)]
struct FitOut {
    command: &'static str,
    input: String,
    family: &'static str,
    mode: String,
    seed: u64,
    n: usize,
    p: usize,
    q_n: usize,
    theta_hat: Vec<f64>,
    loglik: f64,
    tau_hat: f64,
    converged: bool,
    n_evals: usize,
    penalty_hits: usize,
    tainted: bool,
}

fn cmd_fit(a: &FitArgs) -> Result<i32> {
    let family = parse_family(&a.family)?;
    let kind = parse_kind(&a.mode)?;
    let table = ingest::read_numeric_csv(&a.data)?;
    let informed = matches!(
        kind,
        LikelihoodKind::Informed | LikelihoodKind::CompositeInformed
    );
    let margins: Vec<Margin> = if informed {
        if a.atoms.is_empty() && a.atoms_file.is_none() {
            return Err(Error::Config(
                "informed modes need atom declarations (--atoms col=v1,v2 or --atoms-file)".into(),
            ));
        }
        let atom_sets = ingest::parse_atoms(&a.atoms, a.atoms_file.as_deref(), &table.headers)?;
        table
            .columns
            .iter()
            .zip(&atom_sets)
            .map(|(c, set)| Ok(Margin::Empirical(EmpiricalMargin::fit_with_atoms(c, set)?)))
            .collect::<Result<_>>()?
    } else {
        table
            .columns
            .iter()
            .map(|c| Ok(Margin::Empirical(EmpiricalMargin::fit(c)?)))
            .collect::<Result<_>>()?
    };
    let mode = if informed { AtomMode::Informed } else { AtomMode::NonInformed };
    let rows = pseudo_observations(&table.columns, &margins, mode)?;
    let opts = FitOptions {
        kind,
        seed: a.seed,
        n_starts: a.starts,
        student_nu_grid: a.nu_grid.as_deref().map(ingest::parse_f64_list).transpose()?,
        waive_identifiability: a.waive_identifiability,
        ..FitOptions::default()
    };
    let fit = fit_rows(family, &rows, &opts)?;
    let out = FitOut {
        command: "fit",
        input: a.data.display().to_string(),
        family: family_name(family),
        mode: a.mode.clone(),
        seed: a.seed,
        n: rows.len(),
        p: family.param_count(),
        q_n: qn_for_rows(&rows),
        theta_hat: q6_vec(&fit.theta_hat),
        loglik: q6(fit.loglik),
        tau_hat: q6(fit.tau_hat),
        converged: fit.converged,
        n_evals: fit.n_evals,
        penalty_hits: fit.penalty_hits,
        tainted: fit.penalty_hits > 0,
    };
    write_json(&out, a.out.as_deref())?;
    Ok(if !fit.converged {
        3
    } else if fit.penalty_hits > 0 {
        2
    } else {
        0
    })
}

// ------------------------------------------------------------- identify

#[derive(Serialize)]
struct CenterOut {
    theta: Vec<f64>,
    rank: usize,
    min_sv: f64,
}

#[derive(Serialize)]
struct IdentifyOut {
    command: &'static str,
    input: Option<String>,
    family: &'static str,
    q_n: usize,
    p: usize,
    verdict: String,
    identifiable: bool,
    bbox: Vec<(f64, f64)>,
    delta: f64,
    centers: Vec<CenterOut>,
}

fn default_box(family: Family) -> Vec<(f64, f64)> {
    match family {
        Family::Clayton => vec![(0.3, 10.0)],
        Family::Frank => vec![(0.5, 20.0)],
        Family::Gumbel => vec![(1.05, 10.0)],
        Family::Plackett => vec![(0.2, 20.0)],
        Family::Gaussian => vec![(-0.9, 0.9)],
        Family::Student => vec![(-0.9, 0.9), (1.0, 30.0)],
    }
}

fn cmd_identify(a: &IdentifyArgs) -> Result<i32> {
    let family = parse_family(&a.family)?;
    let margins: Vec<Margin> = if a.bernoulli_margins {
        if a.data.is_some() {
            return Err(Error::Config(
                "--bernoulli-margins replaces the data file; pass one or the other".into(),
            ));
        }
        vec![Margin::Parametric(ParametricMargin::Bernoulli { p: 0.5 }); 2]
    } else {
        let path = a.data.as_ref().ok_or_else(|| {
            Error::Config("identify needs a data CSV or --bernoulli-margins".into())
        })?;
        empirical_margins(&ingest::read_numeric_csv(path)?.columns)?
    };
    let bbox = match &a.bbox {
        Some(s) => ingest::parse_box(s)?,
        None => default_box(family),
    };
    let delta = a.delta.unwrap_or_else(|| {
        bbox.iter().map(|(lo, hi)| hi - lo).fold(0.0f64, f64::max) / 4.0
    });
    let report = audit(family, &margins, &bbox, delta)?;
    let out = IdentifyOut {
        command: "identify",
        input: a.data.as_ref().map(|p| p.display().to_string()),
        family: family_name(family),
        q_n: report.q_n,
        p: report.p,
        verdict: report.verdict.to_string(),
        identifiable: report.verdict == Verdict::IdentifiableOnNeighborhood,
        bbox: report.bbox.iter().map(|&(lo, hi)| (q6(lo), q6(hi))).collect(),
        delta: q6(report.delta),
        centers: report
            .centers
            .iter()
            .map(|c| CenterOut { theta: q6_vec(&c.theta), rank: c.rank, min_sv: q6(c.min_sv) })
            .collect(),
    };
    write_json(&out, a.out.as_deref())?;
    Ok(0)
}

// ------------------------------------------------------------- simulate

fn parse_exp(s: &str) -> Result<ExpId> {
    match s.to_ascii_lowercase().as_str() {
        "exp1" => Ok(ExpId::Exp1),
        "exp2" => Ok(ExpId::Exp2),
        "exp3" => Ok(ExpId::Exp3),
        "exp4" => Ok(ExpId::Exp4),
        "exp5" => Ok(ExpId::Exp5),
        "tri" => Ok(ExpId::Tri),
        _ => Err(Error::Config(format!(
            "unknown experiment {s:?} (expected exp1..exp5 or tri)"
        ))),
    }
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let cells: Vec<(ExpId, Family)> = if a.table1 {
        let families = match &a.families {
            Some(s) => parse_families(s)?,
            None => TABLE_FAMILIES.to_vec(),
        };
        TABLE_EXPERIMENTS
            .iter()
            .flat_map(|&e| families.iter().map(move |&f| (e, f)))
            .collect()
    } else {
        let exp = parse_exp(a.exp.as_deref().ok_or_else(|| {
            Error::Config("single-cell mode needs --exp (or pass --table1)".into())
        })?)?;
        let family = parse_family(a.family.as_deref().ok_or_else(|| {
            Error::Config("single-cell mode needs --family (or pass --table1)".into())
        })?)?;
        vec![(exp, family)]
    };
    let kind_override = a.mode.as_deref().map(parse_kind).transpose()?;
    let mut rows = Vec::with_capacity(cells.len());
    for (i, &(exp_id, family)) in cells.iter().enumerate() {
        let cell_seed = a.seed.wrapping_add((i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut spec = ExperimentSpec::new(exp_id, family, a.tau0, a.n, a.reps, cell_seed);
        spec.student_nu = a.nu;
        if let Some(kind) = kind_override {
            spec.kind = kind;
        }
        let r = run_experiment(&spec)?;
        rows.push(vec![
            family_name(family).to_string(),
            exp_id.label().to_string(),
            a.n.to_string(),
            a.reps.to_string(),
            sig6(a.tau0),
            cell_seed.to_string(),
            sig6(r.rel_bias_pct),
            sig6(r.rel_rmse_pct),
            r.failures.to_string(),
            r.valid.to_string(),
        ]);
    }
    write_csv(
        &[
            "family",
            "exp",
            "n",
            "reps",
            "tau0",
            "seed",
            "rel_bias_pct",
            "rel_rmse_pct",
            "failures",
            "valid",
        ],
        &rows,
        a.out.as_deref(),
    )?;
    Ok(0)
}

// ------------------------------------------------------- spi and drought

fn cmd_spi(a: &SpiArgs) -> Result<i32> {
    let (dates, series) = ingest::read_precip_csv(&a.data)?;
    let z = spi(&series, a.window)?;
    let rows: Vec<Vec<String>> = z
        .iter()
        .enumerate()
        .map(|(i, &v)| vec![dates[i + a.window - 1].clone(), sig6(v)])
        .collect();
    write_csv(&["date", "spi"], &rows, a.out.as_deref())?;
    Ok(0)
}

fn cmd_drought(a: &DroughtArgs) -> Result<i32> {
    let (dates, series) = ingest::read_precip_csv(&a.data)?;
    let z = spi(&series, a.window)?;
    let events = extract_droughts(&z);
    let rows: Vec<Vec<String>> = events
        .iter()
        .map(|e| {
            vec![
                dates[e.start_index + a.window - 1].clone(),
                e.duration_days.to_string(),
                sig6(e.duration_months()),
                sig6(e.severity),
                sig6(e.severity_months()),
            ]
        })
        .collect();
    write_csv(
        &["start_date", "duration_days", "duration_months", "severity", "severity_months"],
        &rows,
        a.out.as_deref(),
    )?;
    Ok(0)
}

// -------------------------------------------------------------- regress

#[derive(Serialize)]
struct RankedOut {
    family: &'static str,
    theta_hat: Vec<f64>,
    tau_hat: f64,
    loglik: f64,
    converged: bool,
    penalty_hits: usize,
}

#[derive(Serialize)]
struct RegressOut {
    command: &'static str,
    input: String,
    seed: u64,
    n_events: usize,
    best_family: &'static str,
    severities: Vec<f64>,
    ranked: Vec<RankedOut>,
    failed: Vec<&'static str>,
}

fn quartiles(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    let mut out: Vec<f64> = [n / 4, n / 2, (3 * n) / 4]
        .iter()
        .map(|&i| values[i.min(n - 1)])
        .collect();
    out.dedup();
    out
}

fn cmd_regress(a: &RegressArgs) -> Result<i32> {
    let events = ingest::read_events_csv(&a.events)?;
    let candidates = match &a.families {
        Some(s) => parse_families(s)?,
        None => DEFAULT_CANDIDATES.to_vec(),
    };
    let opts = FitOptions { kind: LikelihoodKind::NonInformed, seed: a.seed, ..Default::default() };
    let ranking = fit_duration_severity(&events, &candidates, a.min_events, &opts)?;
    let model = DroughtModel::from_ranking(&events, &ranking)?;
    let severities = match &a.severities {
        Some(s) => ingest::parse_f64_list(s)?,
        None => quartiles(events.iter().map(|e| e.severity_months()).collect()),
    };

    let out = RegressOut {
        command: "regress",
        input: a.events.display().to_string(),
        seed: a.seed,
        n_events: events.len(),
        best_family: family_name(ranking.ranked[0].family),
        severities: q6_vec(&severities),
        ranked: ranking
            .ranked
            .iter()
            .map(|r| RankedOut {
                family: family_name(r.family),
                theta_hat: q6_vec(&r.fit.theta_hat),
                tau_hat: q6(r.fit.tau_hat),
                loglik: q6(r.fit.loglik),
                converged: r.fit.converged,
                penalty_hits: r.fit.penalty_hits,
            })
            .collect(),
        failed: ranking.failed.iter().map(|&f| family_name(f)).collect(),
    };
    write_json(&out, a.out.as_deref())?;

    if let Some(path) = &a.curves_out {
        let mut rows = Vec::new();
        for &s in &severities {
            for &y in model.duration_support() {
                let p = model.conditional_duration(s, y)?;
                rows.push(vec![sig6(s), sig6(y), sig6(p)]);
            }
        }
        write_csv(&["severity_months", "duration_months", "prob_le"], &rows, Some(path))?;
    }
    if let Some(path) = &a.means_out {
        let rows: Vec<Vec<String>> = severities
            .iter()
            .map(|&s| Ok(vec![sig6(s), sig6(model.conditional_mean_duration(s)?)]))
            .collect::<Result<_>>()?;
        write_csv(&["severity_months", "expected_duration_months"], &rows, Some(path))?;
    }
    Ok(0)
}

// -------------------------------------------------------- demo-bernoulli

#[derive(Serialize)]
struct DemoOut {
    command: &'static str,
    naive_argmax: f64,
    informed_argmax: f64,
}

fn cmd_demo(a: &DemoArgs) -> Result<i32> {
    let demo = population_limit_demo();
    let out = DemoOut {
        command: "demo-bernoulli",
        naive_argmax: q6(demo.naive_argmax),
        informed_argmax: q6(demo.informed_argmax),
    };
    write_json(&out, a.out.as_deref())?;
    if let Some(path) = &a.curve_out {
        let rows: Vec<Vec<String>> = demo
            .curve
            .iter()
            .map(|&(t, naive, informed)| vec![sig6(t), sig6(naive), sig6(informed)])
            .collect();
        write_csv(&["theta", "naive_objective", "atom_aware_objective"], &rows, Some(path))?;
    }
    Ok(0)
}

// ----------------------------------------------------------------- main

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::NonConvergence(_) => 3,
        _ => 1,
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("TIECOP_THREADS") {
        let threads: usize = raw
            .parse()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| {
                Error::Config(format!("TIECOP_THREADS={raw:?} is not a positive integer"))
            })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<i32> {
    configure_threads()?;
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Identify(a) => cmd_identify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Spi(a) => cmd_spi(a),
        Command::Drought(a) => cmd_drought(a),
        Command::Regress(a) => cmd_regress(a),
        Command::DemoBernoulli(a) => cmd_demo(a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap defaults to exit code 2 for usage errors, which this tool
            // reserves for tainted fits; usage problems are input errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    std::process::exit(code);
}
