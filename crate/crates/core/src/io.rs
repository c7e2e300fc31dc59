//! CSV formats for frames, ground truth, estimates and per-step scores.
//!
//! A frame file starts with a `# eta=.. rows=.. cols=.. side=..` line
//! followed by a `cell_index,amplitude` table of the detections. Track-like
//! files (truth, estimates) only need `step`, `p1` and `p2` columns when read
//! back for scoring; other columns are ignored.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::Estimate;
use crate::gospa::GospaResult;
use crate::model::{Detection, GridGeometry, ThresholdedFrame};
use crate::scenario::GroundTruth;

fn parse_error(path: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

pub fn write_frame<W: Write>(frame: &ThresholdedFrame, mut out: W) -> Result<()> {
    let g = frame.geometry();
    writeln!(
        out,
        "# eta={} rows={} cols={} side={}",
        frame.eta(),
        g.n_rows(),
        g.n_cols(),
        g.cell_side()
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell_index", "amplitude"])?;
    for d in frame.detections() {
        w.write_record([d.cell.to_string(), d.amplitude.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a frame; `name` is used in error messages.
pub fn read_frame<R: Read>(input: R, name: &str) -> Result<ThresholdedFrame> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let meta = first
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| parse_error(name, 1, "expected '# eta=.. rows=.. cols=.. side=..'"))?;
    let mut fields = BTreeMap::new();
    for part in meta.split_whitespace() {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| parse_error(name, 1, format!("malformed field '{part}'")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| parse_error(name, 1, format!("'{k}' is not a number: '{v}'")))?;
        fields.insert(k.to_string(), v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| parse_error(name, 1, format!("missing '{k}'")));
    let (eta, rows, cols, side) = (get("eta")?, get("rows")?, get("cols")?, get("side")?);
    if rows.fract() != 0.0 || cols.fract() != 0.0 || rows < 1.0 || cols < 1.0 {
        return Err(parse_error(name, 1, "rows and cols must be positive integers"));
    }
    let geometry = GridGeometry::new(rows as usize, cols as usize, side, (0.0, 0.0))
        .map_err(|e| parse_error(name, 1, e.to_string()))?;

    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers().map_err(|e| parse_error(name, 2, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["cell_index", "amplitude"] {
        return Err(parse_error(name, 2, "expected header 'cell_index,amplitude'"));
    }
    let mut detections = Vec::new();
    for rec in csv.records() {
        // the metadata line precedes the csv reader's first line
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() + 1);
            parse_error(name, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() + 1);
        let cell: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| parse_error(name, line, format!("bad cell index '{}'", &rec[0])))?;
        let amplitude: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| parse_error(name, line, format!("bad amplitude '{}'", &rec[1])))?;
        detections.push(Detection { cell, amplitude });
    }
    ThresholdedFrame::new(geometry, eta, detections).map_err(|e| parse_error(name, 0, e.to_string()))
}

#[derive(Serialize)]
struct TruthRow {
    object_id: usize,
    step: u32,
    p1: f64,
    p2: f64,
    v1: f64,
    v2: f64,
    gamma: f64,
}

pub fn write_truth<W: Write>(truth: &GroundTruth, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (object_id, step, s) in truth.rows() {
        w.serialize(TruthRow {
            object_id,
            step,
            p1: s.p1,
            p2: s.p2,
            v1: s.v1,
            v2: s.v2,
            gamma: s.gamma,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EstimateRow {
    step: u32,
    label: String,
    r: f64,
    p1: f64,
    p2: f64,
    v1: f64,
    v2: f64,
    gamma: f64,
}

/// Writes `(step, estimates)` pairs as `step,label,r,p1,p2,v1,v2,gamma`.
pub fn write_estimates<'a, W: Write>(steps: impl IntoIterator<Item = (u32, &'a [Estimate])>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["step", "label", "r", "p1", "p2", "v1", "v2", "gamma"])?;
    for (step, ests) in steps {
        for e in ests {
            w.serialize(EstimateRow {
                step,
                label: e.label.to_string(),
                r: e.r,
                p1: e.state.p1,
                p2: e.state.p2,
                v1: e.state.v1,
                v2: e.state.v2,
                gamma: e.state.gamma,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Positions per step from any CSV with `step`, `p1` and `p2` columns. An
/// empty input yields no steps.
pub fn read_positions<R: Read>(input: R, name: &str) -> Result<BTreeMap<u32, Vec<[f64; 2]>>> {
    let mut csv = csv::Reader::from_reader(input);
    let headers = csv.headers().map_err(|e| parse_error(name, 1, e.to_string()))?.clone();
    let mut out: BTreeMap<u32, Vec<[f64; 2]>> = BTreeMap::new();
    if headers.is_empty() {
        return Ok(out);
    }
    let col = |n: &str| {
        headers
            .iter()
            .position(|h| h.trim() == n)
            .ok_or_else(|| parse_error(name, 1, format!("missing column '{n}'")))
    };
    let (ks, c1, c2) = (col("step")?, col("p1")?, col("p2")?);
    for rec in csv.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(name, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize, what: &str| -> Result<f64> {
            let v: f64 = rec[i]
                .trim()
                .parse()
                .map_err(|_| parse_error(name, line, format!("bad {what} '{}'", &rec[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_error(name, line, format!("non-finite {what}")))
            }
        };
        let step: u32 = rec[ks]
            .trim()
            .parse()
            .map_err(|_| parse_error(name, line, format!("bad step '{}'", &rec[ks])))?;
        out.entry(step).or_default().push([num(c1, "p1")?, num(c2, "p2")?]);
    }
    Ok(out)
}

#[derive(Serialize)]
struct ScoreRow {
    step: u32,
    gospa_total: f64,
    gospa_loc: f64,
    gospa_missed: f64,
    gospa_false: f64,
}

pub fn write_scores<W: Write>(scores: &[(u32, GospaResult)], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["step", "gospa_total", "gospa_loc", "gospa_missed", "gospa_false"])?;
    for (step, g) in scores {
        w.serialize(ScoreRow {
            step: *step,
            gospa_total: g.total,
            gospa_loc: g.localization,
            gospa_missed: g.missed,
            gospa_false: g.false_,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}
