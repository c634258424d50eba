//! Output documents and the convergence trace.
//!
//! JSON documents are pretty-printed with fixed key order (struct order), so
//! a fixed input and seed produce byte-identical output. CSV renderings are
//! flat: one row per component, probe, or certificate.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use power_affine::{AppSolution, ProbeReport, SolvabilityCertificate, SolveReport, Verdict};

use crate::{CliError, Format};

/// Writes to stdout, terminating quietly with the conventional SIGPIPE
/// status when the reader has gone away (e.g. `solve ... | head`).
pub fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if out.write_all(text.as_bytes()).is_err() || out.flush().is_err() {
        std::process::exit(141);
    }
}

pub fn print_json<T: serde::Serialize>(value: &T) {
    let doc = serde_json::to_string_pretty(value).expect("serializable output");
    emit(&doc);
    emit("\n");
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::UniqueSolution => "unique_solution",
        Verdict::NoSolution => "no_solution",
    }
}

pub fn certificate_csv(cert: &SolvabilityCertificate) -> String {
    let mut out = String::from("r,s,criterion,r_pow_s,verdict,margin,boundary_warning\n");
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{}",
        cert.r,
        cert.s,
        cert.criterion,
        cert.r_pow_s,
        verdict_str(cert.verdict),
        cert.margin,
        cert.boundary_warning
    );
    out
}

pub fn print_certificate(cert: &SolvabilityCertificate, format: Format) {
    match format {
        Format::Json => print_json(cert),
        Format::Csv => emit(&certificate_csv(cert)),
    }
}

pub fn print_solve_report(report: &SolveReport, format: Format) {
    match format {
        Format::Json => print_json(report),
        Format::Csv => {
            let mut out = String::from("index,x_star,y_star\n");
            for (i, (x, y)) in report
                .x_star
                .as_slice()
                .iter()
                .zip(report.y_star.as_slice())
                .enumerate()
            {
                let _ = writeln!(out, "{i},{x},{y}");
            }
            emit(&out);
        }
    }
}

pub fn print_probe_reports(reports: &[ProbeReport], format: Format) {
    match format {
        Format::Json => print_json(&reports),
        Format::Csv => {
            let mut out = String::from("probe,trials,tolerance,worst_violation,passed\n");
            for r in reports {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.probe_name, r.trials, r.tolerance, r.worst_violation, r.passed
                );
            }
            emit(&out);
        }
    }
}

pub fn print_app_solution(sol: &AppSolution, format: Format) {
    match format {
        Format::Json => print_json(sol),
        Format::Csv => {
            let mut out = String::from("index,value\n");
            for (i, v) in sol.primary_output.as_slice().iter().enumerate() {
                let _ = writeln!(out, "{i},{v}");
            }
            emit(&out);
        }
    }
}

/// Writes the per-iteration residual history. 17 significant digits, so the
/// binary64 values survive a round trip through the text file.
pub fn write_trace(path: &Path, history: &[f64]) -> Result<(), CliError> {
    let mut out = String::from("iter,residual_y\n");
    for (i, r) in history.iter().enumerate() {
        let _ = writeln!(out, "{i},{r:.16e}");
    }
    fs::write(path, out)
        .map_err(|e| CliError::io(format!("cannot write trace {}: {e}", path.display())))
}
