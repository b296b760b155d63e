//! CSV readers and writers for the four on-disk formats.
//!
//! All files are headed, comma-separated, LF-terminated, with frames counted
//! from 0. Floats are written with Rust's shortest round-trip formatting, so
//! a read followed by a write reproduces a well-formed file byte for byte.
//!
//! ```text
//! detections:   frame,id,x,y,w,h,score,class
//! connections:  src_id,dst_id,strength
//! ground truth: frame,track_id,x,y,w,h
//! tracks:       frame,track_id,x,y,w,h,score
//! pr curves:    delta_t,threshold,precision,recall   (write-only)
//! ```

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::metrics::{GroundTruth, PRCurve};
use crate::model::{BoundingBox, Connection, Detection, ObjectClass};
use crate::tracks::{Track, TrackPoint, TrackSet};
use crate::{Error, Result};

const DETECTIONS_HEADER: &str = "frame,id,x,y,w,h,score,class";
const CONNECTIONS_HEADER: &str = "src_id,dst_id,strength";
const GROUND_TRUTH_HEADER: &str = "frame,track_id,x,y,w,h";
const TRACKS_HEADER: &str = "frame,track_id,x,y,w,h,score";
const PR_CURVES_HEADER: &str = "delta_t,threshold,precision,recall";

fn parse_err(path: &Path, line: usize, msg: impl Display) -> Error {
    Error::Parse { path: path.display().to_string(), line, msg: msg.to_string() }
}

/// Splits a data file into (1-based line number, row) pairs after checking
/// the header.
fn read_rows(path: &Path, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim_end_matches('\r') == header => {}
        Some((_, first)) => {
            return Err(parse_err(path, 1, format!("expected header {header:?}, found {first:?}")))
        }
        None => return Err(parse_err(path, 1, format!("empty file, expected header {header:?}"))),
    }
    let n_cols = header.split(',').count();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != n_cols {
            return Err(parse_err(
                path,
                idx + 1,
                format!("expected {n_cols} columns, found {}", fields.len()),
            ));
        }
        rows.push((idx + 1, fields));
    }
    Ok(rows)
}

fn field<T: FromStr>(path: &Path, line: usize, name: &str, raw: &str) -> Result<T>
where
    T::Err: Display,
{
    raw.parse().map_err(|e| parse_err(path, line, format!("column {name}: {e} (got {raw:?})")))
}

fn boxed(path: &Path, line: usize, x: f64, y: f64, w: f64, h: f64) -> Result<BoundingBox> {
    BoundingBox::new(x, y, w, h).map_err(|e| parse_err(path, line, e))
}

/// Reads a detection file. Ids must be unique; density is checked later when
/// the graph is assembled.
pub fn read_detections(path: &Path) -> Result<Vec<Detection>> {
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new(); // id -> line
    let mut out = Vec::new();
    for (line, f) in read_rows(path, DETECTIONS_HEADER)? {
        let frame: u32 = field(path, line, "frame", &f[0])?;
        let id: usize = field(path, line, "id", &f[1])?;
        if let Some(prev) = seen.insert(id, line) {
            return Err(parse_err(path, line, format!("duplicate detection id {id} (first seen on line {prev})")));
        }
        let x: f64 = field(path, line, "x", &f[2])?;
        let y: f64 = field(path, line, "y", &f[3])?;
        let w: f64 = field(path, line, "w", &f[4])?;
        let h: f64 = field(path, line, "h", &f[5])?;
        let score: f64 = field(path, line, "score", &f[6])?;
        let class: ObjectClass = field(path, line, "class", &f[7])?;
        let bbox = boxed(path, line, x, y, w, h)?;
        let det = Detection::new(id, frame, bbox, score, class)
            .map_err(|e| parse_err(path, line, e))?;
        out.push(det);
    }
    Ok(out)
}

pub fn write_detections(path: &Path, detections: &[Detection]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{DETECTIONS_HEADER}")?;
    for d in detections {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            d.frame, d.id, d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h, d.confidence, d.class
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_connections(path: &Path) -> Result<Vec<Connection>> {
    let mut out = Vec::new();
    for (line, f) in read_rows(path, CONNECTIONS_HEADER)? {
        let src: usize = field(path, line, "src_id", &f[0])?;
        let dst: usize = field(path, line, "dst_id", &f[1])?;
        let strength: f64 = field(path, line, "strength", &f[2])?;
        out.push(Connection::new(src, dst, strength).map_err(|e| parse_err(path, line, e))?);
    }
    Ok(out)
}

pub fn write_connections(path: &Path, connections: &[Connection]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{CONNECTIONS_HEADER}")?;
    for c in connections {
        writeln!(w, "{},{},{}", c.src, c.dst, c.strength)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    let mut tracks: BTreeMap<u64, Vec<(u32, BoundingBox)>> = BTreeMap::new();
    for (line, f) in read_rows(path, GROUND_TRUTH_HEADER)? {
        let frame: u32 = field(path, line, "frame", &f[0])?;
        let track_id: u64 = field(path, line, "track_id", &f[1])?;
        let x: f64 = field(path, line, "x", &f[2])?;
        let y: f64 = field(path, line, "y", &f[3])?;
        let w: f64 = field(path, line, "w", &f[4])?;
        let h: f64 = field(path, line, "h", &f[5])?;
        tracks.entry(track_id).or_default().push((frame, boxed(path, line, x, y, w, h)?));
    }
    for boxes in tracks.values_mut() {
        boxes.sort_by_key(|&(f, _)| f);
    }
    GroundTruth::new(tracks)
}

pub fn write_ground_truth(path: &Path, gt: &GroundTruth) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{GROUND_TRUTH_HEADER}")?;
    for (id, boxes) in gt.tracks() {
        for (frame, b) in boxes {
            writeln!(w, "{},{},{},{},{},{}", frame, id, b.x, b.y, b.w, b.h)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes tracker output, one row per (frame, track) box, ordered by track
/// then frame.
pub fn write_tracks(path: &Path, tracks: &TrackSet) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{TRACKS_HEADER}")?;
    for t in &tracks.tracks {
        for p in &t.points {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                p.frame, t.id, p.bbox.x, p.bbox.y, p.bbox.w, p.bbox.h, p.confidence
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes precision/recall curves, one row per operating point, grouped by
/// time gap. Gaps whose curve is empty contribute no rows.
pub fn write_pr_curves(path: &Path, curves: &[PRCurve]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{PR_CURVES_HEADER}")?;
    for curve in curves {
        for p in &curve.points {
            writeln!(w, "{},{},{},{}", curve.delta_t, p.threshold, p.precision, p.recall)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads tracker output back. The format carries no class, link strengths, or
/// detection ids, so those come back as body / 0.0 / absent.
pub fn read_tracks(path: &Path) -> Result<TrackSet> {
    let mut by_id: BTreeMap<usize, Vec<TrackPoint>> = BTreeMap::new();
    for (line, f) in read_rows(path, TRACKS_HEADER)? {
        let frame: u32 = field(path, line, "frame", &f[0])?;
        let track_id: usize = field(path, line, "track_id", &f[1])?;
        let x: f64 = field(path, line, "x", &f[2])?;
        let y: f64 = field(path, line, "y", &f[3])?;
        let w: f64 = field(path, line, "w", &f[4])?;
        let h: f64 = field(path, line, "h", &f[5])?;
        let score: f64 = field(path, line, "score", &f[6])?;
        by_id.entry(track_id).or_default().push(TrackPoint {
            frame,
            bbox: boxed(path, line, x, y, w, h)?,
            confidence: score,
            detection: None,
            link_strength: 0.0,
        });
    }
    let mut tracks = Vec::new();
    for (id, mut points) in by_id {
        points.sort_by_key(|p| p.frame);
        tracks.push(Track { id, class: ObjectClass::Body, points });
    }
    Ok(TrackSet { tracks })
}
