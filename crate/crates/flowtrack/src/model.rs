//! Core data model: bounding boxes, detections, correspondence candidates,
//! and the flow graph whose unit-capacity edges double as the optimization
//! variables.
//!
//! Every detection contributes three variables (select the detection, start a
//! track at it, end a track at it) and every candidate correspondence one
//! more. The graph assigns each variable a fixed index so that cost vectors,
//! quadratic couplings, and flow solutions all live in one shared coordinate
//! space.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense detection index, also the detection's variable index.
pub type DetId = usize;

/// Axis-aligned box, origin at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    /// Validates that the extent is positive and all coordinates are finite.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let finite = x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite();
        if !finite || w <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidBox { x, y, w, h });
        }
        Ok(Self { x, y, w, h })
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    /// The top `frac` portion of the box (same x-extent, reduced height).
    /// Used when comparing a head box against the upper part of a body box.
    pub fn top_region(&self, frac: f64) -> BoundingBox {
        BoundingBox { x: self.x, y: self.y, w: self.w, h: self.h * frac }
    }

    /// Linear interpolation of all four coordinates; `t = 0` gives `a`,
    /// `t = 1` gives `b`.
    pub fn lerp(a: &BoundingBox, b: &BoundingBox, t: f64) -> BoundingBox {
        BoundingBox {
            x: a.x + (b.x - a.x) * t,
            y: a.y + (b.y - a.y) * t,
            w: a.w + (b.w - a.w) * t,
            h: a.h + (b.h - a.h) * t,
        }
    }
}

/// Intersection-over-union of two boxes. Always in [0, 1]; 0 for disjoint
/// boxes, 1 only for identical ones.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    inter / union
}

/// Class of the detector that produced a box. Flow is routed within one
/// class; classes interact only through quadratic couplings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Body,
    Head,
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectClass::Body => write!(f, "body"),
            ObjectClass::Head => write!(f, "head"),
        }
    }
}

impl FromStr for ObjectClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "body" => Ok(ObjectClass::Body),
            "head" => Ok(ObjectClass::Head),
            other => Err(format!("unknown class {other:?} (expected \"body\" or \"head\")")),
        }
    }
}

/// One detector response: a box at a frame with a confidence.
/// Confidences may be negative (a detector may score clutter below zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub id: DetId,
    pub frame: u32,
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub class: ObjectClass,
}

impl Detection {
    pub fn new(id: DetId, frame: u32, bbox: BoundingBox, confidence: f64, class: ObjectClass) -> Result<Self> {
        if !confidence.is_finite() {
            return Err(Error::NonFinite { what: "detection confidence", value: confidence });
        }
        Ok(Self { id, frame, bbox, confidence, class })
    }
}

/// Candidate correspondence between a detection and a later one, with a
/// strength in [0, 1] (e.g. from appearance or point-track evidence).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub src: DetId,
    pub dst: DetId,
    pub strength: f64,
}

impl Connection {
    pub fn new(src: DetId, dst: DetId, strength: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&strength) || !strength.is_finite() {
            return Err(Error::StrengthOutOfRange { src, dst, strength });
        }
        Ok(Self { src, dst, strength })
    }
}

/// Decoded meaning of a variable index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Select detection `d`.
    Det(DetId),
    /// Route a track from `src` to `dst`.
    Conn { src: DetId, dst: DetId },
    /// Start a track at detection `d` (source edge).
    Start(DetId),
    /// End a track at detection `d` (sink edge).
    End(DetId),
}

/// The candidate graph. Holds detections (sorted by id), candidate
/// connections (sorted by `(src, dst)`), the default track count, and the
/// variable indexing shared by every solver in the crate.
///
/// Variable order: detections by id, then connections by `(src, dst)`, then
/// start edges by detection id, then end edges by detection id. The order is
/// part of the contract: rebuilding from the same inputs yields identical
/// indices.
#[derive(Debug, Clone)]
pub struct TrackingGraph {
    detections: Vec<Detection>,
    connections: Vec<Connection>,
    k: usize,
    max_skip: u32,
    conn_out: Vec<Vec<usize>>,
    conn_in: Vec<Vec<usize>>,
    classes: Vec<ObjectClass>,
    class_dets: BTreeMap<ObjectClass, Vec<DetId>>,
    frames: BTreeMap<u32, Vec<DetId>>,
}

/// Validates inputs and assembles the graph.
///
/// Detection ids must form the dense range `0..n`. Connections must point
/// strictly forward in time, skip at most `max_skip` frames, stay within one
/// class, and be unique. `k` is the default number of tracks and must be at
/// least 1 (solvers may still be asked for other budgets, including 0).
pub fn build_graph(
    detections: Vec<Detection>,
    connections: Vec<Connection>,
    k: usize,
    max_skip: u32,
) -> Result<TrackingGraph> {
    if k == 0 {
        return Err(Error::ZeroTrackCount(k));
    }
    let n = detections.len();
    let mut dets = detections;
    dets.sort_by_key(|d| d.id);
    for (pos, d) in dets.iter().enumerate() {
        if d.id == pos {
            continue;
        }
        if pos > 0 && dets[pos - 1].id == d.id {
            return Err(Error::DuplicateDetection(d.id));
        }
        return Err(Error::SparseDetectionIds { expected: n, missing: pos });
    }

    let mut conns = connections;
    conns.sort_by_key(|c| (c.src, c.dst));
    for w in conns.windows(2) {
        if w[0].src == w[1].src && w[0].dst == w[1].dst {
            return Err(Error::DuplicateConnection { src: w[0].src, dst: w[0].dst });
        }
    }
    for c in &conns {
        for end in [c.src, c.dst] {
            if end >= n {
                return Err(Error::DanglingConnection { src: c.src, dst: c.dst, missing: end });
            }
        }
        let (sf, df) = (dets[c.src].frame, dets[c.dst].frame);
        if df <= sf {
            return Err(Error::BackwardConnection { src: c.src, dst: c.dst, src_frame: sf, dst_frame: df });
        }
        let gap = df - sf;
        if gap > max_skip {
            return Err(Error::SkipTooLarge { src: c.src, dst: c.dst, gap, max_skip });
        }
        if dets[c.src].class != dets[c.dst].class {
            return Err(Error::ClassMismatch {
                src: c.src,
                dst: c.dst,
                src_class: dets[c.src].class,
                dst_class: dets[c.dst].class,
            });
        }
        Connection::new(c.src, c.dst, c.strength)?;
    }

    let mut conn_out = vec![Vec::new(); n];
    let mut conn_in = vec![Vec::new(); n];
    for (i, c) in conns.iter().enumerate() {
        conn_out[c.src].push(i);
        conn_in[c.dst].push(i);
    }

    let mut class_dets: BTreeMap<ObjectClass, Vec<DetId>> = BTreeMap::new();
    let mut frames: BTreeMap<u32, Vec<DetId>> = BTreeMap::new();
    for d in &dets {
        class_dets.entry(d.class).or_default().push(d.id);
        frames.entry(d.frame).or_default().push(d.id);
    }
    let classes = class_dets.keys().copied().collect();

    Ok(TrackingGraph {
        detections: dets,
        connections: conns,
        k,
        max_skip,
        conn_out,
        conn_in,
        classes,
        class_dets,
        frames,
    })
}

impl TrackingGraph {
    pub fn n_detections(&self) -> usize {
        self.detections.len()
    }

    pub fn n_connections(&self) -> usize {
        self.connections.len()
    }

    /// Total number of variables: one per detection, one per connection, one
    /// start edge and one end edge per detection.
    pub fn n_vars(&self) -> usize {
        3 * self.detections.len() + self.connections.len()
    }

    /// Default track count the graph was built with.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn max_skip(&self) -> u32 {
        self.max_skip
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn detection(&self, id: DetId) -> &Detection {
        &self.detections[id]
    }

    /// Classes present, in sorted order. The flow decomposes over these.
    pub fn classes(&self) -> &[ObjectClass] {
        &self.classes
    }

    /// Detection ids of one class, ascending. Empty slice if absent.
    pub fn class_detections(&self, class: ObjectClass) -> &[DetId] {
        self.class_dets.get(&class).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Frames that contain at least one detection, with their detection ids.
    pub fn frames(&self) -> impl Iterator<Item = (u32, &[DetId])> {
        self.frames.iter().map(|(f, ids)| (*f, ids.as_slice()))
    }

    /// Smallest and largest frame carrying a detection of `class`.
    pub fn class_frame_range(&self, class: ObjectClass) -> Option<(u32, u32)> {
        let ids = self.class_detections(class);
        let min = ids.iter().map(|&d| self.detections[d].frame).min()?;
        let max = ids.iter().map(|&d| self.detections[d].frame).max()?;
        Some((min, max))
    }

    /// Indices (into `connections()`) of edges leaving detection `d`.
    pub fn connections_out(&self, d: DetId) -> &[usize] {
        &self.conn_out[d]
    }

    /// Indices (into `connections()`) of edges entering detection `d`.
    pub fn connections_in(&self, d: DetId) -> &[usize] {
        &self.conn_in[d]
    }

    pub fn det_var(&self, d: DetId) -> usize {
        d
    }

    /// Variable index of the `idx`-th connection (in `connections()` order).
    pub fn conn_var(&self, idx: usize) -> usize {
        self.detections.len() + idx
    }

    pub fn start_var(&self, d: DetId) -> usize {
        self.detections.len() + self.connections.len() + d
    }

    pub fn end_var(&self, d: DetId) -> usize {
        2 * self.detections.len() + self.connections.len() + d
    }

    /// Position of connection `(src, dst)` in `connections()`, if present.
    pub fn conn_index(&self, src: DetId, dst: DetId) -> Option<usize> {
        self.connections.binary_search_by_key(&(src, dst), |c| (c.src, c.dst)).ok()
    }

    /// Decodes a variable index. Inverse of `index_of`.
    pub fn var(&self, index: usize) -> Var {
        let n = self.detections.len();
        let m = self.connections.len();
        if index < n {
            Var::Det(index)
        } else if index < n + m {
            let c = &self.connections[index - n];
            Var::Conn { src: c.src, dst: c.dst }
        } else if index < 2 * n + m {
            Var::Start(index - n - m)
        } else {
            assert!(index < 3 * n + m, "variable index {index} out of range");
            Var::End(index - 2 * n - m)
        }
    }

    /// Encodes a variable. Inverse of `var`.
    pub fn index_of(&self, v: Var) -> Option<usize> {
        match v {
            Var::Det(d) => (d < self.detections.len()).then_some(self.det_var(d)),
            Var::Conn { src, dst } => self.conn_index(src, dst).map(|i| self.conn_var(i)),
            Var::Start(d) => (d < self.detections.len()).then_some(self.start_var(d)),
            Var::End(d) => (d < self.detections.len()).then_some(self.end_var(d)),
        }
    }

    /// Number of active start edges per class in a solution vector; used to
    /// recover the per-class track counts a solver actually chose.
    pub fn active_budgets(&self, z: &[f64]) -> BTreeMap<ObjectClass, usize> {
        let mut out = BTreeMap::new();
        for &class in &self.classes {
            let count = self
                .class_detections(class)
                .iter()
                .filter(|&&d| z[self.start_var(d)] > 0.5)
                .count();
            out.insert(class, count);
        }
        out
    }
}

/// Per-variable linear costs aligned with a graph's variable indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVector(Vec<f64>);

impl CostVector {
    /// All entries must be finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "cost entry", value: v });
            }
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, z: &[f64]) -> f64 {
        self.0.iter().zip(z).map(|(c, z)| c * z).sum()
    }
}

impl std::ops::Index<usize> for CostVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Builds the linear cost vector:
///
/// * detection `d` costs `-det_weight * confidence(d)` (selecting a confident
///   detection pays off),
/// * connection `(i, j)` costs `-conn_weight * strength(i, j)`,
/// * start and end edges cost `start_cost` and `end_cost`.
pub fn assemble_cost_vector(
    graph: &TrackingGraph,
    det_weight: f64,
    conn_weight: f64,
    start_cost: f64,
    end_cost: f64,
) -> Result<CostVector> {
    for (what, v) in [
        ("det_weight", det_weight),
        ("conn_weight", conn_weight),
        ("start_cost", start_cost),
        ("end_cost", end_cost),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite { what, value: v });
        }
    }
    let mut c = vec![0.0; graph.n_vars()];
    for d in graph.detections() {
        c[graph.det_var(d.id)] = -det_weight * d.confidence;
        c[graph.start_var(d.id)] = start_cost;
        c[graph.end_var(d.id)] = end_cost;
    }
    for (i, conn) in graph.connections().iter().enumerate() {
        c[graph.conn_var(i)] = -conn_weight * conn.strength;
    }
    CostVector::new(c)
}

/// Radius multiplier for the fallback connection heuristic: two detections
/// are linked when their centers are closer than this many times the larger
/// side of the earlier box.
pub const PROXIMITY_RADIUS_FACTOR: f64 = 2.0;

/// Proposes connections when no correspondence evidence is available: any
/// same-class pair at most `max_skip` frames apart whose centers lie within
/// `PROXIMITY_RADIUS_FACTOR * max(w, h)` of each other, with strength
/// decaying exponentially in the center distance.
pub fn propose_connections(detections: &[Detection], max_skip: u32) -> Vec<Connection> {
    let mut dets: Vec<&Detection> = detections.iter().collect();
    dets.sort_by_key(|d| d.id);
    let mut out = Vec::new();
    for a in &dets {
        let radius = PROXIMITY_RADIUS_FACTOR * a.bbox.w.max(a.bbox.h);
        for b in &dets {
            if b.class != a.class || b.frame <= a.frame || b.frame - a.frame > max_skip {
                continue;
            }
            let (ax, ay) = a.bbox.center();
            let (bx, by) = b.bbox.center();
            let dist = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
            if dist <= radius {
                let strength = (-dist / radius).exp();
                out.push(Connection { src: a.id, dst: b.id, strength });
            }
        }
    }
    out.sort_by_key(|c| (c.src, c.dst));
    out
}
