//! Distance reports and their text serializations.
//!
//! A report file starts with the line `# otrefine report` and holds one record
//! per line as space-separated `key:value` fields; absent values are `-`.
//! Plot data is CSV with one row per approximate report.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::io::save_plan;
use crate::measure::cost_to_distance;
use crate::plan::TransportPlan;

pub const REPORT_HEADER: &str = "# otrefine report";
pub const PLOT_HEADER: &str = "method,kappa,rel_error,time_s";

/// Which estimate a report describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    /// Sum of the two hub distances.
    Barycenter,
    /// Plan composed through the hubs, without refinement.
    Block,
    Multiscale,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Barycenter => "barycenter",
            Method::Block => "block",
            Method::Multiscale => "multiscale",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Method::Exact, Method::Barycenter, Method::Block, Method::Multiscale]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

/// One distance estimate with its parameters and timing.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceReport {
    pub method: Method,
    pub p: f64,
    pub kappa: Option<usize>,
    pub threshold: Option<usize>,
    /// `W_p^p`.
    pub cost: f64,
    /// `W_p`.
    pub distance: f64,
    pub plan_entries: Option<usize>,
    pub wall_time: Duration,
    /// `(approx - exact) / exact` on the distance scale.
    pub rel_error: Option<f64>,
    pub seed: Option<u64>,
}

impl DistanceReport {
    pub fn new(method: Method, p: f64, cost: f64, wall_time: Duration) -> Self {
        Self {
            method,
            p,
            kappa: None,
            threshold: None,
            cost,
            distance: cost_to_distance(cost, p),
            plan_entries: None,
            wall_time,
            rel_error: None,
            seed: None,
        }
    }

    /// Sets `rel_error` against an exact distance. Two zero distances agree exactly.
    pub fn with_reference(mut self, exact_distance: f64) -> Self {
        self.rel_error = Some(relative_error(self.distance, exact_distance));
        self
    }
}

pub fn relative_error(approx: f64, exact: f64) -> f64 {
    if exact > 0.0 {
        (approx - exact) / exact
    } else if approx == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl fmt::Display for DistanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "method:{} p:{} kappa:{} threshold:{} cost:{} distance:{} nnz:{} time_s:{} rel_error:{} seed:{}",
            self.method,
            self.p,
            opt(&self.kappa),
            opt(&self.threshold),
            self.cost,
            self.distance,
            opt(&self.plan_entries),
            self.wall_time.as_secs_f64(),
            opt(&self.rel_error),
            opt(&self.seed),
        )
    }
}

fn field<T: FromStr>(value: &str, key: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad value `{value}` for `{key}`"),
    })
}

fn opt_field<T: FromStr>(value: &str, key: &str, line: usize) -> Result<Option<T>> {
    if value == "-" {
        Ok(None)
    } else {
        field(value, key, line).map(Some)
    }
}

fn parse_record(body: &str, line: usize) -> Result<DistanceReport> {
    let mut r = DistanceReport::new(Method::Exact, 2.0, 0.0, Duration::ZERO);
    let mut seen = Vec::new();
    for tok in body.split_whitespace() {
        let (key, value) = tok.split_once(':').ok_or_else(|| Error::Parse {
            line,
            msg: format!("`{tok}` is not a key:value pair"),
        })?;
        match key {
            "method" => r.method = value.parse().map_err(|_| Error::Parse { line, msg: format!("unknown method `{value}`") })?,
            "p" => r.p = field(value, key, line)?,
            "kappa" => r.kappa = opt_field(value, key, line)?,
            "threshold" => r.threshold = opt_field(value, key, line)?,
            "cost" => r.cost = field(value, key, line)?,
            "distance" => r.distance = field(value, key, line)?,
            "nnz" => r.plan_entries = opt_field(value, key, line)?,
            "time_s" => {
                let secs: f64 = field(value, key, line)?;
                r.wall_time = Duration::try_from_secs_f64(secs).map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad duration {secs}"),
                })?;
            }
            "rel_error" => r.rel_error = opt_field(value, key, line)?,
            "seed" => r.seed = opt_field(value, key, line)?,
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key `{key}`"),
                })
            }
        }
        seen.push(key);
    }
    for required in ["method", "p", "cost", "distance"] {
        if !seen.contains(&required) {
            return Err(Error::Parse {
                line,
                msg: format!("missing `{required}`"),
            });
        }
    }
    Ok(r)
}

pub fn write_reports(mut out: impl Write, reports: &[DistanceReport]) -> Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

pub fn parse_reports(text: &str) -> Result<Vec<DistanceReport>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == REPORT_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("missing `{REPORT_HEADER}` header"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| parse_record(l, i + 1))
        .collect()
}

/// CSV of every report that has a hub count.
pub fn write_plot_csv(mut out: impl Write, reports: &[DistanceReport]) -> Result<()> {
    writeln!(out, "{PLOT_HEADER}")?;
    for r in reports.iter().filter(|r| r.kappa.is_some()) {
        writeln!(
            out,
            "{},{},{},{}",
            r.method,
            opt(&r.kappa),
            r.rel_error.map_or_else(String::new, |e| e.to_string()),
            r.wall_time.as_secs_f64()
        )?;
    }
    Ok(())
}

/// Destinations of [`emit_outputs`]; `None` skips that output.
#[derive(Clone, Debug, Default)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    pub plan: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    f(&mut out)?;
    out.flush()?;
    Ok(())
}

pub fn emit_outputs(reports: &[DistanceReport], plan: Option<&TransportPlan>, paths: &OutputPaths) -> Result<()> {
    if let Some(path) = &paths.report {
        write_file(path, |out| write_reports(out, reports))?;
    }
    if let (Some(path), Some(plan)) = (&paths.plan, plan) {
        save_plan(path, plan)?;
    }
    if let Some(path) = &paths.plot {
        write_file(path, |out| write_plot_csv(out, reports))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trip() {
        let mut r = DistanceReport::new(Method::Multiscale, 1.5, 0.123_456_789, Duration::from_millis(1500));
        r.kappa = Some(16);
        r.threshold = Some(2000);
        r.plan_entries = Some(42);
        r.seed = Some(7);
        let r = r.with_reference(0.3);
        let plain = DistanceReport::new(Method::Exact, 2.0, 0.25, Duration::ZERO);
        let mut buf = Vec::new();
        write_reports(&mut buf, &[r.clone(), plain.clone()]).unwrap();
        let back = parse_reports(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, vec![r, plain]);
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        write_reports(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{REPORT_HEADER}\n"));
        assert!(parse_reports(&format!("{REPORT_HEADER}\n")).unwrap().is_empty());
        assert!(parse_reports("method:exact\n").is_err());
    }

    #[test]
    fn plot_rows_skip_exact() {
        let mut bar = DistanceReport::new(Method::Barycenter, 2.0, 1.0, Duration::from_secs(2)).with_reference(0.5);
        bar.kappa = Some(4);
        let exact = DistanceReport::new(Method::Exact, 2.0, 0.25, Duration::ZERO);
        let mut buf = Vec::new();
        write_plot_csv(&mut buf, &[exact, bar]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{PLOT_HEADER}\nbarycenter,4,1,2\n"));
    }

    #[test]
    fn zero_reference() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert_eq!(relative_error(1.0, 0.0), f64::INFINITY);
        assert_eq!(relative_error(1.5, 1.0), 0.5);
    }
}
