//! Command-line front end.
//!
//! Exit codes: 0 when the analysis ran and found nothing, 2 when it ran and
//! found a constraint violation, 1 on any error (bad flags, unreadable
//! input). Survey arguments are file paths, or `builtin:NAME` for a bundled
//! dataset (`table1`, `table2`, `moore_clinton_first`, `moore_gore_first`).

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::Error;
use crate::feasibility::{
    chain_feasibility, classical_consistency_check, contraction_check, order_effect_check,
    ClassicalReport, FeasibilityReport, OrderEffectReport, SurveyChain,
};
use crate::fit::{fit_chain, FitOptions, FitResult};
use crate::nosignal::{
    no_signalling_check, no_signalling_suite, random_pure_state, series_from_fit, trial_rng,
    SuiteReport, FACTOR_DIMS,
};
use crate::sequential::{interference_region_scan, spin_order_demo, write_scan_csv};
use crate::survey::{fixtures, ingest, parse_survey};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FINDING: i32 = 2;

/// Environment variable that takes precedence over `--seed`.
pub const SEED_ENV: &str = "QCOG_SEED";

/// Deviation below which two fifth-factor marginals count as identical.
pub const NO_SIGNALLING_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "qcog", version, about = "Quantum-probability analysis of sequential survey questions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputFlags {
    /// Emit the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Law of total probability across two samples: compares the support
    /// and oppose shares of each sample's final question (bundled tables:
    /// 45% vs 34% in favour, 38% vs 48% against).
    CheckClassical {
        sample_a: String,
        sample_b: String,
        #[arg(long)]
        tol: f64,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Question-order effect between two orderings of the same pair of
    /// questions (Clinton/Gore honesty example).
    CheckOrder {
        /// Survey asking (X, Y).
        ordering_1: String,
        /// Survey asking (Y, X).
        ordering_2: String,
        #[arg(long)]
        tol: f64,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Contraction property on consecutive questions: the largest answer
    /// probability may not rise and the smallest may not fall.
    CheckContraction {
        #[arg(required = true)]
        surveys: Vec<String>,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Majorization feasibility of each transition, optionally treating the
    /// first question as an isolated tensor factor.
    CheckFeasibility {
        survey: String,
        /// Largest majorization slack accepted as within the error margin.
        #[arg(long)]
        tol: f64,
        #[arg(long)]
        isolate_first: bool,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Fit explicit frames on C^3 reproducing the chain's statistics.
    FitChain {
        survey: String,
        #[arg(long)]
        tol: f64,
        #[arg(long)]
        isolate_first: bool,
        /// Multi-start seed; QCOG_SEED overrides it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        starts: usize,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Scan P^F(B) against P(F) = p and P(B) = q over a cell-centred grid.
    ConjunctionScan {
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// CSV destination (header p,q,alpha,p_f_b,delta,in_region).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Spin-1/2 order effect: P(X=up) with and without a prior sigma_y
    /// measurement.
    SpinDemo {
        #[command(flatten)]
        output: OutputFlags,
    },
    /// No-signalling on five three-level factors: random entangled states
    /// and random local series on factors 1-4 never move factor 5.
    NosignalDemo {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 4)]
        steps: usize,
        /// Base seed; QCOG_SEED overrides it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fit this chain (isolating Q1) and use its frames as series A.
        #[arg(long, requires = "fit_b")]
        fit_a: Option<String>,
        /// Fit this chain (isolating Q1) and use its frames as series B.
        #[arg(long, requires = "fit_a")]
        fit_b: Option<String>,
        /// Feasibility tolerance for the two fits.
        #[arg(long, default_value_t = 0.07)]
        fit_tol: f64,
        #[command(flatten)]
        output: OutputFlags,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                CliError::Lib(Error::Infeasible { .. }) => EXIT_FINDING,
                _ => EXIT_ERROR,
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

type CliResult<T> = std::result::Result<T, CliError>;

fn load(source: &str) -> CliResult<SurveyChain> {
    if let Some(name) = source.strip_prefix("builtin:") {
        let json = fixtures::by_name(name)
            .ok_or_else(|| CliError::Usage(format!("no bundled dataset named {name:?}")))?;
        return Ok(parse_survey(json)?);
    }
    Ok(ingest(source)?)
}

fn seed_override(seed: u64) -> CliResult<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(seed),
    }
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    writeln!(out, "{text}")?;
    Ok(())
}

fn fmt_dist(p: &crate::state::ProbabilityVector) -> String {
    let parts: Vec<String> = p.as_slice().iter().map(|x| format!("{x:.4}")).collect();
    format!("({})", parts.join(", "))
}

#[derive(Serialize)]
struct ClassicalOutput<'a> {
    sample_a: &'a str,
    sample_b: &'a str,
    #[serde(flatten)]
    report: &'a ClassicalReport,
}

#[derive(Serialize)]
struct OrderOutput<'a> {
    questions: [&'a str; 2],
    #[serde(flatten)]
    report: &'a OrderEffectReport,
}

#[derive(Serialize)]
struct ScanSummary {
    grid: usize,
    cells: usize,
    in_region: usize,
    lower_triangle_cells: usize,
    lower_triangle_enhanced: usize,
    max_abs_diagonal_delta: f64,
}

#[derive(Serialize)]
struct SpinOutput {
    p_x_up_direct: f64,
    p_x_up_after_y: f64,
}

#[derive(Serialize)]
struct NosignalOutput {
    suite: SuiteReport,
    fitted: Option<FittedComparison>,
    tol: f64,
    signalling_detected: bool,
}

#[derive(Serialize)]
struct FittedComparison {
    sample_a: String,
    sample_b: String,
    deviations: Vec<f64>,
    max_deviation: f64,
    /// Final-question support gap actually observed between the samples.
    observed_support_gap: Option<f64>,
}

fn execute(command: Command, out: &mut dyn Write) -> CliResult<i32> {
    match command {
        Command::CheckClassical { sample_a, sample_b, tol, output } => {
            let (a, b) = (load(&sample_a)?, load(&sample_b)?);
            let (fa, fb) = (a.last(), b.last());
            let report = classical_consistency_check(
                (&fa.distribution, fa.polarity),
                (&fb.distribution, fb.polarity),
                tol,
            )?;
            if output.json {
                emit_json(out, &ClassicalOutput { sample_a: &a.label, sample_b: &b.label, report: &report })?;
            } else {
                writeln!(out, "final question: {:?} vs {:?}", fa.text, fb.text)?;
                writeln!(
                    out,
                    "support: {:.4} ({}) vs {:.4} ({}), difference {:.4}",
                    report.support[0], a.label, report.support[1], b.label, report.support_difference
                )?;
                writeln!(
                    out,
                    "oppose:  {:.4} ({}) vs {:.4} ({}), difference {:.4}",
                    report.oppose[0], a.label, report.oppose[1], b.label, report.oppose_difference
                )?;
                if report.polarity_warning {
                    writeln!(out, "warning: final questions have opposite wording; 'not opposing' is read as 'favouring'")?;
                }
                writeln!(
                    out,
                    "{}",
                    if report.is_violation() {
                        "VIOLATION: marginals differ beyond tolerance; no single classical joint distribution fits both samples"
                    } else {
                        "consistent within tolerance"
                    }
                )?;
            }
            Ok(if report.is_violation() { EXIT_FINDING } else { EXIT_OK })
        }
        Command::CheckOrder { ordering_1, ordering_2, tol, output } => {
            let (o1, o2) = (load(&ordering_1)?, load(&ordering_2)?);
            if o1.len() != 2 || o2.len() != 2 {
                return Err(CliError::Usage("each ordering must contain exactly two questions".into()));
            }
            if o1.questions[0].text != o2.questions[1].text || o1.questions[1].text != o2.questions[0].text {
                return Err(CliError::Usage("the two files must ask the same questions in opposite order".into()));
            }
            let report = order_effect_check(
                (o1.distribution(0), o1.distribution(1)),
                (o2.distribution(0), o2.distribution(1)),
                tol,
            )?;
            let names = [o1.questions[0].text.as_str(), o1.questions[1].text.as_str()];
            if output.json {
                emit_json(out, &OrderOutput { questions: names, report: &report })?;
            } else {
                for e in &report.entries {
                    writeln!(
                        out,
                        "{:?}: asked first {} / asked second {}, difference {:.4}{}",
                        names[e.question],
                        fmt_dist(&e.asked_first),
                        fmt_dist(&e.asked_second),
                        e.difference,
                        if e.flagged { "  ORDER EFFECT" } else { "" }
                    )?;
                }
            }
            Ok(if report.any_flagged() { EXIT_FINDING } else { EXIT_OK })
        }
        Command::CheckContraction { surveys, output } => {
            let reports = surveys
                .iter()
                .map(|s| load(s).map(|c| contraction_check(&c)))
                .collect::<CliResult<Vec<FeasibilityReport>>>()?;
            if output.json {
                emit_json(out, &reports)?;
            } else {
                for r in &reports {
                    print_transitions(out, r)?;
                }
            }
            Ok(if reports.iter().all(|r| r.feasible()) { EXIT_OK } else { EXIT_FINDING })
        }
        Command::CheckFeasibility { survey, tol, isolate_first, output } => {
            let chain = load(&survey)?;
            let report = chain_feasibility(&chain, isolate_first, tol);
            if output.json {
                emit_json(out, &report)?;
            } else {
                print_transitions(out, &report)?;
            }
            Ok(if report.feasible() { EXIT_OK } else { EXIT_FINDING })
        }
        Command::FitChain { survey, tol, isolate_first, seed, starts, output } => {
            let chain = load(&survey)?;
            let options = FitOptions { seed: seed_override(seed)?, starts, ..FitOptions::default() };
            let fit = fit_chain(&chain, isolate_first, tol, &options)?;
            if output.json {
                emit_json(out, &fit)?;
            } else {
                print_fit(out, &chain, &fit)?;
            }
            Ok(EXIT_OK)
        }
        Command::ConjunctionScan { grid, out: path, output } => {
            let cells = interference_region_scan(grid)?;
            if let Some(path) = path {
                let file = std::fs::File::create(&path)?;
                let mut w = std::io::BufWriter::new(file);
                write_scan_csv(&cells, &mut w)?;
                w.flush()?;
            }
            let lower: Vec<_> = cells.iter().filter(|c| c.q < c.p).collect();
            let summary = ScanSummary {
                grid,
                cells: cells.len(),
                in_region: cells.iter().filter(|c| c.in_region).count(),
                lower_triangle_cells: lower.len(),
                lower_triangle_enhanced: lower.iter().filter(|c| c.p_f_b > c.q).count(),
                max_abs_diagonal_delta: cells
                    .iter()
                    .filter(|c| c.p == c.q)
                    .map(|c| c.delta.abs())
                    .fold(0.0, f64::max),
            };
            if output.json {
                emit_json(out, &summary)?;
            } else {
                writeln!(out, "{}x{} grid, {} cells", grid, grid, summary.cells)?;
                writeln!(out, "P(F) > P^F(B) > P(B) in {} cells", summary.in_region)?;
                writeln!(
                    out,
                    "q < p: {} of {} cells have P^F(B) > q",
                    summary.lower_triangle_enhanced, summary.lower_triangle_cells
                )?;
                writeln!(out, "max |delta| on the diagonal: {:e}", summary.max_abs_diagonal_delta)?;
            }
            Ok(EXIT_OK)
        }
        Command::SpinDemo { output } => {
            let (direct, after) = spin_order_demo();
            if output.json {
                emit_json(out, &SpinOutput { p_x_up_direct: direct, p_x_up_after_y: after })?;
            } else {
                writeln!(out, "P(X=UP), X asked directly:      {direct}")?;
                writeln!(out, "P(X=UP), after asking Y first:  {after}")?;
            }
            Ok(EXIT_OK)
        }
        Command::NosignalDemo { trials, steps, seed, fit_a, fit_b, fit_tol, output } => {
            let seed = seed_override(seed)?;
            let suite = no_signalling_suite(trials, steps, seed)?;
            let fitted = match (fit_a, fit_b) {
                (Some(a), Some(b)) => Some(compare_fits(&a, &b, fit_tol, trials, seed)?),
                _ => None,
            };
            let worst = fitted
                .as_ref()
                .map_or(suite.max_deviation, |f| f.max_deviation.max(suite.max_deviation));
            let report = NosignalOutput {
                suite,
                fitted,
                tol: NO_SIGNALLING_TOL,
                signalling_detected: worst >= NO_SIGNALLING_TOL,
            };
            if output.json {
                emit_json(out, &report)?;
            } else {
                writeln!(
                    out,
                    "{} random entangled states, {}-step random series: max fifth-marginal deviation {:e}",
                    report.suite.trials, report.suite.steps, report.suite.max_deviation
                )?;
                if let Some(f) = &report.fitted {
                    writeln!(
                        out,
                        "fitted series {} vs {}: max deviation {:e} over {} states",
                        f.sample_a,
                        f.sample_b,
                        f.max_deviation,
                        f.deviations.len()
                    )?;
                    if let Some(gap) = f.observed_support_gap {
                        writeln!(out, "observed final-question support gap: {gap:.4}")?;
                    }
                }
                writeln!(
                    out,
                    "{}",
                    if report.signalling_detected { "SIGNALLING DETECTED" } else { "no signalling" }
                )?;
            }
            Ok(if report.signalling_detected { EXIT_FINDING } else { EXIT_OK })
        }
    }
}

fn compare_fits(a: &str, b: &str, tol: f64, trials: usize, seed: u64) -> CliResult<FittedComparison> {
    let (chain_a, chain_b) = (load(a)?, load(b)?);
    let options = FitOptions { seed, ..FitOptions::default() };
    let fit_a = fit_chain(&chain_a, true, tol, &options)?;
    let fit_b = fit_chain(&chain_b, true, tol, &options)?;
    let (series_a, series_b) = (series_from_fit(&fit_a)?, series_from_fit(&fit_b)?);
    let dim: usize = FACTOR_DIMS.iter().product();
    let deviations = (0..trials.max(1))
        .map(|t| {
            // separate stream block from the random suite
            let mut rng = trial_rng(seed ^ 0x05ee_df17, t);
            let state = random_pure_state(dim, &mut rng).to_density();
            no_signalling_check(&state, &series_a, &series_b)
        })
        .collect::<crate::Result<Vec<f64>>>()?;
    let (fa, fb) = (chain_a.last(), chain_b.last());
    let observed_support_gap = classical_consistency_check(
        (&fa.distribution, fa.polarity),
        (&fb.distribution, fb.polarity),
        0.0,
    )
    .ok()
    .map(|r| r.support_difference);
    Ok(FittedComparison {
        sample_a: chain_a.label,
        sample_b: chain_b.label,
        max_deviation: deviations.iter().copied().fold(0.0, f64::max),
        deviations,
        observed_support_gap,
    })
}

fn print_transitions(out: &mut dyn Write, r: &FeasibilityReport) -> CliResult<()> {
    writeln!(
        out,
        "{} (tol {}{})",
        r.label,
        r.tol,
        if r.isolated_first { ", Q1 isolated" } else { "" }
    )?;
    for t in &r.transitions {
        writeln!(
            out,
            "  Q{}->Q{}: max increase {:.4}, min decrease {:.4}, majorization slack {:.4}  {}",
            t.from_index + 1,
            t.to_index + 1,
            t.max_increase,
            t.min_decrease,
            t.majorization_slack,
            if t.feasible_at_tol { "ok" } else { "VIOLATION" }
        )?;
    }
    Ok(())
}

fn print_fit(out: &mut dyn Write, chain: &SurveyChain, fit: &FitResult) -> CliResult<()> {
    writeln!(out, "{}: {} questions", fit.label, chain.len())?;
    if let Some(d) = &fit.isolated_distribution {
        writeln!(out, "  Q1 isolated on its own factor: {}", fmt_dist(d))?;
    }
    writeln!(
        out,
        "  Q{} initial state sqrt{}",
        fit.first_modelled + 1,
        fmt_dist(&fit.initial_distribution)
    )?;
    for (k, t) in fit.transitions.iter().enumerate() {
        let q = fit.first_modelled + 2 + k;
        writeln!(
            out,
            "  Q{q}: target {} achieved {} residual {:e} ({} iterations)",
            fmt_dist(&t.target),
            fmt_dist(&fit.achieved[q - 1]),
            t.residual,
            t.iterations
        )?;
        if let Some(p) = &t.projection {
            writeln!(
                out,
                "       raw {} projected by max {:.4} (l2 {:.4})",
                fmt_dist(&p.raw_target),
                p.distance_max,
                p.distance_l2
            )?;
        }
    }
    Ok(())
}
