//! Report files: one JSON document and/or CSV tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::OutputFormat;
use super::run::{RunReport, Timings};
use crate::error::Result;

pub const REPORT_FILE: &str = "report.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const TRACE_FILE: &str = "preimage_trace.csv";
pub const EDGES_FILE: &str = "edge_comparison.csv";
pub const RATIO_FILE: &str = "ratio_test.csv";

/// Pretty JSON; floats use the shortest representation that reads back
/// to the same bits.
pub fn report_json(report: &RunReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_report(text: &str) -> Result<RunReport> {
    Ok(serde_json::from_str(text)?)
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trace_csv(report: &RunReport) -> Option<String> {
    let p = &report.pathway.as_ref()?.preimage;
    let mut s = String::from("iteration,distance,step_norm,denominator\n");
    for (r, ((d, st), den)) in p
        .distance_trace
        .iter()
        .zip(&p.step_trace)
        .zip(&p.denominator_trace)
        .enumerate()
    {
        writeln!(s, "{},{},{},{}", r + 1, num(*d), num(*st), num(*den)).unwrap();
    }
    Some(s)
}

pub fn edges_csv(report: &RunReport) -> Option<String> {
    let p = report.pathway.as_ref()?;
    let mut s = String::from("edge,i,j,omega_star,omega_sim,deviation\n");
    for (k, c) in p.comparison.iter().enumerate() {
        writeln!(
            s,
            "{k},{},{},{},{},{}",
            c.edge.0,
            c.edge.1,
            num(c.omega_star),
            num(c.omega_sim),
            num(c.deviation)
        )
        .unwrap();
    }
    Some(s)
}

pub fn ratio_csv(report: &RunReport) -> Option<String> {
    let t = report.state.ratio_test.as_ref()?;
    let mut s = String::from("delta,f_star,f_sim,gap,scaled_gap\n");
    for r in &t.rows {
        writeln!(
            s,
            "{},{},{},{},{}",
            num(r.delta),
            num(r.f_star),
            num(r.f_sim),
            num(r.gap),
            num(r.scaled_gap)
        )
        .unwrap();
    }
    Some(s)
}

/// Writes the selected formats into `dir` and returns the paths written.
pub fn emit_report(report: &RunReport, timings: Option<&Timings>, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        written.push(path);
        Ok(())
    };
    if format.json() {
        put(REPORT_FILE, report_json(report)?)?;
    }
    if format.csv() {
        for (name, text) in [
            (TRACE_FILE, trace_csv(report)),
            (EDGES_FILE, edges_csv(report)),
            (RATIO_FILE, ratio_csv(report)),
        ] {
            if let Some(text) = text {
                put(name, text)?;
            }
        }
    }
    if let Some(t) = timings {
        put(TIMINGS_FILE, serde_json::to_string_pretty(t)? + "\n")?;
    }
    Ok(written)
}
