//! Text formats for measures and plans.
//!
//! A point cloud holds one atom per line, `w x_1 .. x_d`, separated by
//! whitespace. A CSV image holds one pixel row per line; pixel `(r, c)` becomes
//! an atom at `(c + 0.5, r + 0.5)`. A plan holds one entry per line,
//! `i j mass`, with 0-based indices. In all three, `#` starts a comment and
//! blank lines are skipped.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, PointCloud};
use crate::plan::{PlanEntry, TransportPlan};
use crate::synth::image_measure;

/// Normalized inputs whose mass was off by more than this trigger a warning.
pub const MASS_WARN_TOLERANCE: f64 = 1e-6;

/// Layout of a measure file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    Cloud,
    CsvImage,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cloud" => Ok(InputFormat::Cloud),
            "csv-image" => Ok(InputFormat::CsvImage),
            _ => Err(Error::invalid(format!("unknown format `{s}` (expected cloud or csv-image)"))),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Cloud => "cloud",
            InputFormat::CsvImage => "csv-image",
        })
    }
}

/// Content lines with comments stripped, paired with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let body = line.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((i + 1, body))
    })
}

fn parse_number(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("`{token}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("`{token}` is not finite"),
        });
    }
    Ok(v)
}

fn normalize_weights(mut weights: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("measure has no mass"));
    }
    if (total - 1.0).abs() > MASS_WARN_TOLERANCE {
        log::warn!("input mass {total} renormalized to 1");
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(weights)
}

/// Parses a point cloud; weights are normalized to total mass 1.
pub fn parse_cloud(text: &str) -> Result<DiscreteMeasure> {
    let mut dim = None;
    let mut weights = Vec::new();
    let mut coords = Vec::new();
    for (line, body) in content_lines(text) {
        let mut fields = body.split_whitespace();
        let w = parse_number(fields.next().unwrap_or(""), line)?;
        if w < 0.0 {
            return Err(Error::Parse {
                line,
                msg: format!("negative weight {w}"),
            });
        }
        let before = coords.len();
        for tok in fields {
            coords.push(parse_number(tok, line)?);
        }
        let d = coords.len() - before;
        match dim {
            None if d == 0 => {
                return Err(Error::Parse {
                    line,
                    msg: "an atom needs at least one coordinate".into(),
                })
            }
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {expected} coordinates, found {d}"),
                })
            }
            Some(_) => {}
        }
        weights.push(w);
    }
    let dim = dim.ok_or_else(|| Error::invalid("point cloud has no atoms"))?;
    let weights = normalize_weights(weights)?;
    DiscreteMeasure::new(PointCloud::new(dim, coords)?, weights)
}

/// Parses a comma-separated grayscale image; weights are pixel values over their total.
pub fn parse_csv_image(text: &str) -> Result<DiscreteMeasure> {
    let mut cols = None;
    let mut values = Vec::new();
    let mut rows = 0;
    for (line, body) in content_lines(text) {
        let before = values.len();
        for tok in body.split(',') {
            let v = parse_number(tok, line)?;
            if v < 0.0 {
                return Err(Error::Parse {
                    line,
                    msg: format!("negative pixel value {v}"),
                });
            }
            values.push(v);
        }
        let width = values.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Parse {
                    line,
                    msg: format!("row has {width} pixels, expected {c}"),
                })
            }
            Some(_) => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::invalid("image has no pixels"))?;
    image_measure(&values, rows, cols)
}

/// Reads a measure file in the given format.
pub fn load_measure(path: impl AsRef<Path>, format: InputFormat) -> Result<DiscreteMeasure> {
    let text = fs::read_to_string(path)?;
    match format {
        InputFormat::Cloud => parse_cloud(&text),
        InputFormat::CsvImage => parse_csv_image(&text),
    }
}

/// Writes a measure as a point cloud.
pub fn write_cloud(mut out: impl Write, mu: &DiscreteMeasure) -> Result<()> {
    writeln!(out, "# weight x_1 .. x_{}", mu.dim())?;
    for (w, pt) in mu.weights().iter().zip(mu.points().iter()) {
        write!(out, "{w}")?;
        for v in pt {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes row-major pixel values as a CSV image.
pub fn write_csv_image(mut out: impl Write, values: &[f64], cols: usize) -> Result<()> {
    if cols == 0 || values.len() % cols != 0 {
        return Err(Error::invalid(format!("{} values do not fill rows of {cols}", values.len())));
    }
    for row in values.chunks(cols) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Writes a plan with a `# rows cols` header. Masses use the shortest
/// representation that parses back to the same value.
pub fn write_plan(mut out: impl Write, plan: &TransportPlan) -> Result<()> {
    writeln!(out, "# {} {}", plan.rows(), plan.cols())?;
    for e in plan.entries() {
        writeln!(out, "{} {} {}", e.row, e.col, e.mass)?;
    }
    Ok(())
}

fn parse_index(token: &str, line: usize) -> Result<usize> {
    token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("`{token}` is not an index"),
    })
}

/// Parses a plan. The shape comes from a leading `# rows cols` header when
/// present, otherwise from the largest indices.
pub fn parse_plan(text: &str) -> Result<TransportPlan> {
    let header = text.lines().find(|l| !l.trim().is_empty()).and_then(|l| {
        let mut f = l.trim().strip_prefix('#')?.split_whitespace();
        let rows = f.next()?.parse::<usize>().ok()?;
        let cols = f.next()?.parse::<usize>().ok()?;
        f.next().is_none().then_some((rows, cols))
    });
    let mut entries = Vec::new();
    for (line, body) in content_lines(text) {
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `i j mass`, found {} fields", f.len()),
            });
        }
        let mass = parse_number(f[2], line)?;
        if mass < 0.0 {
            return Err(Error::Parse {
                line,
                msg: format!("negative mass {mass}"),
            });
        }
        entries.push(PlanEntry {
            row: parse_index(f[0], line)?,
            col: parse_index(f[1], line)?,
            mass,
        });
    }
    let (rows, cols) = header.unwrap_or_else(|| {
        let rows = entries.iter().map(|e| e.row + 1).max().unwrap_or(0);
        let cols = entries.iter().map(|e| e.col + 1).max().unwrap_or(0);
        (rows, cols)
    });
    TransportPlan::new(rows, cols, entries)
}

pub fn save_plan(path: impl AsRef<Path>, plan: &TransportPlan) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write_plan(&mut out, plan)?;
    out.flush()?;
    Ok(())
}

pub fn load_plan(path: impl AsRef<Path>) -> Result<TransportPlan> {
    parse_plan(&fs::read_to_string(path)?)
}
