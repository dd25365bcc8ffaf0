//! Report files: `run.csv`, `lineage.csv`, `checks.csv`, `summary.json` and
//! an optional `loss.svg`.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which parses
//! back to the identical `f64`. Missing values are empty fields.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RngSeed;

pub const RUN_CSV_HEADER: &str = "step,loss,cos_es,cos_ours,ratio,consec_cos,update_norm,wall_ms";
pub const LINEAGE_CSV_HEADER: &str = "step,seed";
pub const CHECKS_CSV_HEADER: &str = "name,measured,expected,std_err,tolerance,passed";

/// One parameter update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub step: usize,
    /// Training loss after the update.
    pub loss: f64,
    /// Cosine between an ES estimate and the exact gradient.
    pub cos_es: Option<f64>,
    /// Cosine between the guided estimate and the exact gradient.
    pub cos_ours: Option<f64>,
    /// `cos_ours / cos_es`, present when both exist and `cos_es > 0`.
    pub ratio: Option<f64>,
    /// Cosine between this update's exact gradient and the previous one's
    /// (each on its own mini-batch); empty for the first update.
    pub consec_cos: Option<f64>,
    pub update_norm: f64,
    pub wall_ms: Option<f64>,
    /// Seed of this update; rerunning the update from the same parameters
    /// and history with it reproduces it exactly.
    pub seed: RngSeed,
}

pub fn ratio(cos_ours: Option<f64>, cos_es: Option<f64>) -> Option<f64> {
    match (cos_ours, cos_es) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

pub fn run_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RUN_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.step,
            fmt_f(r.loss),
            fmt_opt(r.cos_es),
            fmt_opt(r.cos_ours),
            fmt_opt(r.ratio),
            fmt_opt(r.consec_cos),
            fmt_f(r.update_norm),
            fmt_opt(r.wall_ms)
        );
    }
    out
}

pub fn lineage_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(LINEAGE_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{}", r.step, r.seed.0);
    }
    out
}

fn parse_err(line: usize, message: String) -> Error {
    Error::Parse { offset: line, message }
}

fn parse_f(field: &str, line: usize) -> Result<f64> {
    field.parse().map_err(|_| parse_err(line, format!("line {line}: bad number '{field}'")))
}

fn parse_opt(field: &str, line: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f(field, line).map(Some)
    }
}

fn data_lines<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header => Ok(lines.map(|(i, l)| (i + 1, l))),
        other => Err(parse_err(0, format!("expected header '{header}', found {:?}", other.map(|(_, h)| h)))),
    }
}

/// Parses `run.csv` text and the matching `lineage.csv` text.
pub fn parse_run_csv(run: &str, lineage: &str) -> Result<Vec<RunRecord>> {
    let seeds: Vec<(usize, u64)> = data_lines(lineage, LINEAGE_CSV_HEADER)?
        .map(|(n, l)| {
            let (s, seed) = l.split_once(',').ok_or_else(|| parse_err(n, format!("line {n}: expected 2 fields")))?;
            let s = s.parse().map_err(|_| parse_err(n, format!("line {n}: bad step '{s}'")))?;
            let seed = seed.parse().map_err(|_| parse_err(n, format!("line {n}: bad seed '{seed}'")))?;
            Ok((s, seed))
        })
        .collect::<Result<_>>()?;
    let records: Vec<RunRecord> = data_lines(run, RUN_CSV_HEADER)?
        .zip(seeds.iter().map(Some).chain(std::iter::repeat(None)))
        .map(|((n, l), seed)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 8 {
                return Err(parse_err(n, format!("line {n}: expected 8 fields, found {}", f.len())));
            }
            let step: usize = f[0].parse().map_err(|_| parse_err(n, format!("line {n}: bad step '{}'", f[0])))?;
            let seed = match seed {
                Some(&(s, seed)) if s == step => RngSeed(seed),
                _ => return Err(parse_err(n, format!("line {n}: no lineage entry for step {step}"))),
            };
            Ok(RunRecord {
                step,
                loss: parse_f(f[1], n)?,
                cos_es: parse_opt(f[2], n)?,
                cos_ours: parse_opt(f[3], n)?,
                ratio: parse_opt(f[4], n)?,
                consec_cos: parse_opt(f[5], n)?,
                update_norm: parse_f(f[6], n)?,
                wall_ms: parse_opt(f[7], n)?,
                seed,
            })
        })
        .collect::<Result<_>>()?;
    if records.len() != seeds.len() {
        return Err(parse_err(0, format!("{} run rows but {} lineage rows", records.len(), seeds.len())));
    }
    Ok(records)
}

/// Writes `run.csv`, `lineage.csv` and (unless disabled) `loss.svg`.
pub fn write_run(dir: &Path, records: &[RunRecord], svg: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("run.csv"), run_csv(records))?;
    fs::write(dir.join("lineage.csv"), lineage_csv(records))?;
    if svg {
        let series: Vec<(f64, f64)> = records.iter().map(|r| (r.step as f64, r.loss)).collect();
        fs::write(dir.join("loss.svg"), line_chart_svg(&[("loss", &series)], "update", "loss"))?;
    }
    Ok(())
}

pub fn read_run(dir: &Path) -> Result<Vec<RunRecord>> {
    parse_run_csv(&fs::read_to_string(dir.join("run.csv"))?, &fs::read_to_string(dir.join("lineage.csv"))?)
}

/// Outcome of one statistical or qualitative check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub std_err: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// `|measured - expected| <= tolerance`
    pub fn near(name: impl Into<String>, measured: f64, expected: f64, std_err: Option<f64>, tolerance: f64) -> Check {
        let passed = (measured - expected).abs() <= tolerance;
        Check { name: name.into(), measured, expected, std_err, tolerance, passed }
    }

    /// `measured <= bound`
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64, std_err: Option<f64>) -> Check {
        Check { name: name.into(), measured, expected: bound, std_err, tolerance: 0.0, passed: measured <= bound }
    }

    /// `measured >= bound`
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64, std_err: Option<f64>) -> Check {
        Check { name: name.into(), measured, expected: bound, std_err, tolerance: 0.0, passed: measured >= bound }
    }
}

pub fn checks_csv(checks: &[Check]) -> String {
    let mut out = String::from(CHECKS_CSV_HEADER);
    out.push('\n');
    for c in checks {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.name,
            fmt_f(c.measured),
            fmt_f(c.expected),
            fmt_opt(c.std_err),
            fmt_f(c.tolerance),
            c.passed
        );
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary<'a, C: Serialize> {
    pub experiment: &'a str,
    pub seed: u64,
    pub git_describe: Option<String>,
    pub config: &'a C,
    pub metrics: serde_json::Value,
    pub checks: &'a [Check],
    pub passed: bool,
}

pub fn write_summary<C: Serialize>(dir: &Path, summary: &Summary<'_, C>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(summary).map_err(|e| Error::Io(e.into()))?;
    fs::write(dir.join("summary.json"), text + "\n")?;
    Ok(())
}

pub fn write_checks(dir: &Path, checks: &[Check]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("checks.csv"), checks_csv(checks))?;
    Ok(())
}

/// `git describe --always --dirty` of the working directory, if available.
pub fn git_describe() -> Option<String> {
    let out = std::process::Command::new("git").args(["describe", "--always", "--dirty"]).output().ok()?;
    if !out.status.success() {
        return None;
    }
    let s = String::from_utf8(out.stdout).ok()?.trim().to_string();
    (!s.is_empty()).then_some(s)
}

const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Minimal SVG line chart of one or more named series.
pub fn line_chart_svg(series: &[(&str, &[(f64, f64)])], x_label: &str, y_label: &str) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let pts = series.iter().flat_map(|(_, s)| s.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <line x1=\"{pad}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{ty}\" text-anchor=\"middle\" font-size=\"12\">{x_label}</text>\n\
         <text x=\"12\" y=\"{cy}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 12 {cy})\">{y_label}</text>\n\
         <text x=\"{pad}\" y=\"{ty}\" font-size=\"10\">{x0:.4}</text>\n\
         <text x=\"{r}\" y=\"{ty}\" font-size=\"10\" text-anchor=\"end\">{x1:.4}</text>\n\
         <text x=\"{lx}\" y=\"{b}\" font-size=\"10\" text-anchor=\"end\">{y0:.4}</text>\n\
         <text x=\"{lx}\" y=\"{pad}\" font-size=\"10\" text-anchor=\"end\">{y1:.4}</text>\n",
        b = h - pad,
        r = w - pad,
        cx = w / 2.0,
        cy = h / 2.0,
        ty = h - pad / 2.0,
        lx = pad - 4.0,
    );
    for (i, (name, s)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            points.join(" ")
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" fill=\"{color}\">{name}</text>",
            w - pad - 80.0,
            pad + 14.0 * (i as f64 + 1.0)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
