//! The four subcommands: load a channel spec, run the requested analysis,
//! render the report as text or JSON. Output is deterministic for fixed
//! flags; renormalization warnings go to standard error.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use avc_core::bounds::{bracket, lower_bound_unrestricted, BoundReport, LowerBound};
use avc_core::channel_spec::ChannelSpecDocument;
use avc_core::sim::{
    build_repetition_code, enumerate_restricted, monte_carlo_error, rate_vs_bracket, BlockCode,
};
use avc_core::symmetrizability::{analyze, SymmetrizabilityReport};
use avc_core::{Avc, Error};

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Core(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(msg) => write!(f, "{msg}"),
            CliError::Core(err) => write!(f, "{err}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::Core(err)
    }
}

type CmdResult = Result<(), CliError>;

fn load_avc(path: &Path) -> Result<(Avc, Option<String>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let doc = ChannelSpecDocument::from_json(&text)?;
    let name = doc.name.clone();
    let (avc, warnings) = doc.to_avc()?;
    for w in &warnings {
        eprintln!(
            "warning: w[{}][{}] summed to {:.9}; renormalized on load",
            w.s, w.x, w.sum
        );
    }
    Ok((avc, name))
}

fn emit<T: Serialize>(structured: bool, report: &T, text: impl FnOnce() -> String) -> CmdResult {
    if structured {
        println!(
            "{}",
            serde_json::to_string_pretty(report).expect("reports serialize")
        );
    } else {
        println!("{}", text());
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckReport {
    name: Option<String>,
    x_size: usize,
    s_size: usize,
    y_size: usize,
    symmetrizability: SymmetrizabilityReport,
}

pub fn check(spec: &Path, structured: bool) -> CmdResult {
    let (avc, name) = load_avc(spec)?;
    let report = CheckReport {
        name,
        x_size: avc.x_size(),
        s_size: avc.s_size(),
        y_size: avc.y_size(),
        symmetrizability: analyze(&avc)?,
    };
    emit(structured, &report, || render_check(&report))
}

fn render_check(report: &CheckReport) -> String {
    let sym = &report.symmetrizability;
    let mut out = String::new();
    if let Some(name) = &report.name {
        out.push_str(&format!("channel: {name}\n"));
    }
    out.push_str(&format!(
        "alphabets: |X| = {}, |S| = {}, |Y| = {}\n",
        report.x_size, report.s_size, report.y_size
    ));
    out.push_str(&format!(
        "max-error symmetrizable: {}\n",
        sym.max_error_symmetrizable
    ));
    out.push_str(&format!(
        "avg-error symmetrizable: {}\n",
        sym.avg_error_symmetrizable
            .map_or("undecided".to_string(), |b| b.to_string())
    ));
    out.push_str(&format!("left-invertible: {}\n", sym.left_invertible));
    if sym.degenerate {
        out.push_str("note: fewer than two input letters\n");
    }
    if sym.marginal {
        out.push_str("note: a feasibility decision was marginal\n");
    }
    match &sym.max_witness {
        avc_core::symmetrizability::MaxSymWitness::DisjointPair { x, x_prime } => {
            out.push_str(&format!("separated input pair: ({x}, {x_prime})\n"));
        }
        avc_core::symmetrizability::MaxSymWitness::CommonPoints(points) => {
            out.push_str(&format!(
                "common hull points recorded for {} input pair(s)\n",
                points.len()
            ));
        }
        avc_core::symmetrizability::MaxSymWitness::Degenerate => {}
    }
    out.trim_end().to_string()
}

#[derive(Serialize)]
struct BoundsReport {
    name: Option<String>,
    bracket: BoundReport,
}

pub fn bounds(spec: &Path, j: usize, structured: bool) -> CmdResult {
    let (avc, name) = load_avc(spec)?;
    let report = BoundsReport {
        name,
        bracket: bracket(&avc, j)?,
    };
    emit(structured, &report, || render_bounds(&report.bracket))
}

fn render_bounds(b: &BoundReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("J: {}\n", b.j));
    out.push_str(&format!("lower bound: {:.6} bits/use", b.lower_bound));
    if b.lower_hypothesis_violated {
        out.push_str(" (repetition hypothesis violated; reported as zero)");
    } else if b.symmetrizable {
        out.push_str(" (symmetrizable)");
    }
    out.push('\n');
    out.push_str(&format!("upper bound: {:.6} bits/use\n", b.upper_bound));
    out.push_str(&format!(
        "worst i.i.d. jamming distribution: {:?}\n",
        b.adversarial_q.weights()
    ));
    if let Some(detail) = &b.hypothesis_detail {
        out.push_str(&format!("hypothesis detail: {detail}\n"));
    }
    out.push_str(&format!(
        "certified: lower {} / upper {}",
        b.diagnostics.lower_certified, b.diagnostics.upper_certified
    ));
    out
}

#[derive(Serialize)]
struct QuantizeReport {
    name: Option<String>,
    symmetrizable: bool,
    lower_bound: Option<LowerBound>,
}

pub fn quantize(spec: &Path, structured: bool) -> CmdResult {
    let (avc, name) = load_avc(spec)?;
    let lb = lower_bound_unrestricted(&avc)?;
    let report = QuantizeReport {
        name,
        symmetrizable: lb.symmetrizable,
        lower_bound: if lb.symmetrizable { None } else { Some(lb) },
    };
    emit(structured, &report, || render_quantize(&report))
}

fn render_quantize(report: &QuantizeReport) -> String {
    if report.symmetrizable {
        return "symmetrizable: no non-symmetrizability-preserving quantizer exists".into();
    }
    let lb = report.lower_bound.as_ref().expect("present when not symmetrizable");
    let mut out = String::new();
    out.push_str(&format!("achievable rate: {:.6} bits/use\n", lb.value));
    if let Some(q) = &lb.quantizer {
        out.push_str("quantizer rows (output letter -> P[0], P[1]):\n");
        for y in 0..q.input_size() {
            out.push_str(&format!(
                "  {y}: {:.6} {:.6}\n",
                q.prob(0, y),
                q.prob(1, y)
            ));
        }
    }
    if let Some(search) = &lb.search {
        out.push_str(&format!(
            "candidates: {} deterministic, {} evaluations, refinement gain {:.2e}\n",
            search.deterministic_candidates, search.evaluations, search.refinement_gain
        ));
        match (&search.reduction_trace, &search.reduction_skipped) {
            (Some(trace), _) => out.push_str(&format!(
                "hull reduction trace: {} stage(s)\n",
                trace.stages.len()
            )),
            (None, Some(reason)) => {
                out.push_str(&format!("hull reduction skipped: {reason}\n"))
            }
            (None, None) => {}
        }
    }
    out.trim_end().to_string()
}

#[derive(Serialize)]
struct SimulateReport {
    name: Option<String>,
    j: usize,
    n: usize,
    messages: usize,
    rate: f64,
    decoder: &'static str,
    symmetrizability: SymmetrizabilityReport,
    bounds: BoundReport,
    evaluation: Evaluation,
}

#[derive(Serialize)]
enum Evaluation {
    Exact {
        error: f64,
        worst_word: Vec<usize>,
        consistent: bool,
    },
    MonteCarlo {
        trials: u64,
        seed: u64,
        rows: Vec<McRow>,
        estimate: f64,
        standard_error: f64,
        worst_word: Vec<usize>,
    },
}

#[derive(Serialize)]
struct McRow {
    word: Vec<usize>,
    estimate: f64,
    standard_error: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    spec: &Path,
    j: usize,
    n: usize,
    messages: usize,
    trials: u64,
    seed: u64,
    structured: bool,
) -> CmdResult {
    let (avc, name) = load_avc(spec)?;
    let (code, decoder) = build_code(&avc, n, messages)?;
    let symmetrizability = analyze(&avc)?;

    let report = if trials == 0 {
        let consistency = rate_vs_bracket(&code, &avc, j)?;
        SimulateReport {
            name,
            j,
            n,
            messages,
            rate: consistency.rate,
            decoder,
            symmetrizability,
            bounds: consistency.bounds,
            evaluation: Evaluation::Exact {
                error: consistency.error,
                worst_word: consistency.worst_word,
                consistent: consistency.consistent,
            },
        }
    } else {
        let bounds = bracket(&avc, j)?;
        let mut rows = Vec::new();
        for word in enumerate_restricted(n, j, avc.s_size())? {
            let mc = monte_carlo_error(&code, &avc, &word, trials, seed)?;
            rows.push(McRow {
                word,
                estimate: mc.estimate,
                standard_error: mc.standard_error,
            });
        }
        let worst = rows
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| {
                a.estimate
                    .partial_cmp(&b.estimate)
                    .unwrap()
                    .then(ib.cmp(ia))
            })
            .map(|(_, row)| row)
            .expect("at least one jammer word");
        SimulateReport {
            name,
            j,
            n,
            messages,
            rate: code.rate(),
            decoder,
            symmetrizability,
            bounds,
            evaluation: Evaluation::MonteCarlo {
                trials,
                seed,
                estimate: worst.estimate,
                standard_error: worst.standard_error,
                worst_word: worst.word.clone(),
                rows,
            },
        }
    };
    emit(structured, &report, || render_simulate(&report))
}

/// Repetition code with the joint-likelihood decoder; when the channel
/// violates its distinct-outputs hypothesis (all-identical states, the XOR
/// channel), falls back to the literal repetition decoder.
fn build_code(avc: &Avc, n: usize, messages: usize) -> Result<(BlockCode, &'static str), CliError> {
    match build_repetition_code(avc, n, messages) {
        Ok(code) => Ok((code, "joint-ml")),
        Err(Error::HypothesisViolation(_)) => Ok((
            BlockCode::exact_repetition(avc.x_size(), avc.y_size(), n, messages)?,
            "exact-repetition",
        )),
        Err(e) => Err(e.into()),
    }
}

fn render_simulate(report: &SimulateReport) -> String {
    let sym = &report.symmetrizability;
    let mut out = String::new();
    out.push_str(&format!(
        "symmetrizability: max={} avg={} invertible={}\n",
        sym.max_error_symmetrizable,
        sym.avg_error_symmetrizable
            .map_or("undecided".to_string(), |b| b.to_string()),
        sym.left_invertible
    ));
    out.push_str(&format!(
        "bounds (J={}): lower={:.6}{} upper={:.6}\n",
        report.bounds.j,
        report.bounds.lower_bound,
        if report.bounds.lower_hypothesis_violated {
            " (hypothesis violated)"
        } else {
            ""
        },
        report.bounds.upper_bound
    ));
    out.push_str(&format!("decoder: {}\n", report.decoder));
    match &report.evaluation {
        Evaluation::Exact {
            error,
            worst_word,
            consistent,
        } => {
            out.push_str("J  n  messages  rate      error     worst_jammer  consistent\n");
            out.push_str(&format!(
                "{:<2} {:<2} {:<9} {:<9.6} {:<9.6} {:<13} {}\n",
                report.j,
                report.n,
                report.messages,
                report.rate,
                error,
                format!("{worst_word:?}"),
                if *consistent { "yes" } else { "NO" }
            ));
        }
        Evaluation::MonteCarlo {
            trials, seed, rows, ..
        } => {
            out.push_str(&format!("trials: {trials} per message, seed: {seed}\n"));
            out.push_str("J  n  messages  rate      estimate            jammer_word\n");
            for row in rows {
                out.push_str(&format!(
                    "{:<2} {:<2} {:<9} {:<9.6} {:.6} ± {:.6} {:?}\n",
                    report.j,
                    report.n,
                    report.messages,
                    report.rate,
                    row.estimate,
                    row.standard_error,
                    row.word
                ));
            }
        }
    }
    out.trim_end().to_string()
}
