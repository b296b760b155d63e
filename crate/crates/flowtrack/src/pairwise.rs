//! Sparse quadratic couplings between selection variables and the machinery
//! that turns them into a convex objective.
//!
//! Two builders produce couplings from geometry:
//!
//! * overlap penalties: same-frame, same-class detection pairs whose boxes
//!   overlap get a positive cost, so the optimizer avoids selecting both;
//! * co-occurrence bonuses: a head detection sitting in the top region of a
//!   body box (or of a box interpolated along a frame-skipping connection)
//!   gets a negative cost, so consistent head and body tracks support each
//!   other.
//!
//! The quadratic matrix these entries form is indefinite in general. Adding
//! `sum_j |q_ij|` to each diagonal entry makes it diagonally dominant, hence
//! positive semidefinite, and subtracting the same amount from the linear
//! term leaves the objective unchanged on 0/1 points (where `z^2 = z`). The
//! whole objective is scaled so that `|c^T z + z^T Q z| <= 1` on the feasible
//! box, which makes gap tolerances and certificates comparable across
//! instances.

use crate::model::{iou, CostVector, ObjectClass, TrackingGraph, Var};
use crate::{Error, Result};

/// Sparse symmetric couplings, stored once per unordered pair with `i < j`.
/// Each entry contributes a single term `q * z_i * z_j` to the objective.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairwiseCostSet {
    entries: Vec<(usize, usize, f64)>,
}

impl PairwiseCostSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from raw triples; indices are canonicalized to `i < j` and
    /// repeated pairs are summed.
    pub fn from_entries<I: IntoIterator<Item = (usize, usize, f64)>>(iter: I) -> Result<Self> {
        let mut set = Self::new();
        for (i, j, q) in iter {
            set.add(i, j, q)?;
        }
        Ok(set)
    }

    /// Adds `q * z_i * z_j`; accumulates if the pair already exists.
    pub fn add(&mut self, i: usize, j: usize, q: f64) -> Result<()> {
        if i == j {
            return Err(Error::PairwiseDiagonal(i));
        }
        if !q.is_finite() {
            return Err(Error::NonFinite { what: "pairwise cost", value: q });
        }
        let key = (i.min(j), i.max(j));
        match self.entries.binary_search_by_key(&key, |e| (e.0, e.1)) {
            Ok(p) => self.entries[p].2 += q,
            Err(p) => self.entries.insert(p, (key.0, key.1, q)),
        }
        Ok(())
    }

    /// Sums another set into this one.
    pub fn merge(&mut self, other: &PairwiseCostSet) -> Result<()> {
        for &(i, j, q) in &other.entries {
            self.add(i, j, q)?;
        }
        Ok(())
    }

    /// Entries as `(i, j, q)` with `i < j`, sorted.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All indices must address variables of `graph`.
    pub fn check_against(&self, graph: &TrackingGraph) -> Result<()> {
        let n = graph.n_vars();
        for &(i, j, _) in &self.entries {
            if i >= n || j >= n {
                return Err(Error::PairwiseOutOfRange { i, j, n_vars: n });
            }
        }
        Ok(())
    }

    /// `z^T Q z` with one term per stored pair.
    pub fn quad(&self, z: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, j, q)| q * z[i] * z[j]).sum()
    }

    /// Adds `(Q + Q^T) z` into `out`.
    pub fn add_grad(&self, z: &[f64], out: &mut [f64]) {
        for &(i, j, q) in &self.entries {
            out[i] += q * z[j];
            out[j] += q * z[i];
        }
    }

    /// Scales every entry by `s`.
    fn scaled(&self, s: f64) -> Self {
        Self { entries: self.entries.iter().map(|&(i, j, q)| (i, j, q * s)).collect() }
    }
}

/// Positive penalty between every same-frame, same-class detection pair whose
/// boxes overlap at least `o_thres`. Selecting both then costs `q_ov` extra,
/// which suppresses duplicate detections of one object across tracks.
pub fn build_overlap_costs(graph: &TrackingGraph, q_ov: f64, o_thres: f64) -> Result<PairwiseCostSet> {
    if !q_ov.is_finite() || q_ov < 0.0 {
        return Err(Error::Config(format!("q_ov must be finite and non-negative, got {q_ov}")));
    }
    let mut set = PairwiseCostSet::new();
    if q_ov == 0.0 {
        return Ok(set);
    }
    for (_, ids) in graph.frames() {
        for (a, &i) in ids.iter().enumerate() {
            for &j in &ids[a + 1..] {
                let (di, dj) = (graph.detection(i), graph.detection(j));
                if di.class != dj.class {
                    continue;
                }
                if iou(&di.bbox, &dj.bbox) >= o_thres {
                    set.add(graph.det_var(i), graph.det_var(j), q_ov)?;
                }
            }
        }
    }
    Ok(set)
}

/// Negative (rewarding) couplings between head and body evidence:
///
/// * a head detection whose box overlaps the top `head_region_frac` of a
///   same-frame body box by at least `o_thres` couples the two detection
///   variables;
/// * a head detection at a frame that a body connection skips couples the
///   head detection with that connection variable, using the linearly
///   interpolated body box at the head's frame (and symmetrically for body
///   detections against frame-skipping head connections).
///
/// The graph must contain detections of both classes with intersecting frame
/// ranges.
pub fn build_cooccurrence_costs(
    graph: &TrackingGraph,
    q_co: f64,
    o_thres: f64,
    head_region_frac: f64,
) -> Result<PairwiseCostSet> {
    if !q_co.is_finite() || q_co < 0.0 {
        return Err(Error::Config(format!("q_co must be finite and non-negative, got {q_co}")));
    }
    if !(0.0..=1.0).contains(&head_region_frac) || head_region_frac == 0.0 {
        return Err(Error::Config(format!(
            "head_region_frac must lie in (0, 1], got {head_region_frac}"
        )));
    }
    for class in [ObjectClass::Head, ObjectClass::Body] {
        if graph.class_detections(class).is_empty() {
            return Err(Error::CooccurrenceMissingClass { missing: class });
        }
    }
    let (head_min, head_max) = graph.class_frame_range(ObjectClass::Head).unwrap();
    let (body_min, body_max) = graph.class_frame_range(ObjectClass::Body).unwrap();
    if head_max < body_min || body_max < head_min {
        return Err(Error::CooccurrenceFrameMismatch { head_min, head_max, body_min, body_max });
    }

    let mut set = PairwiseCostSet::new();
    if q_co == 0.0 {
        return Ok(set);
    }

    // Detection-detection consistency at shared frames.
    for (_, ids) in graph.frames() {
        for &h in ids {
            if graph.detection(h).class != ObjectClass::Head {
                continue;
            }
            for &b in ids {
                if graph.detection(b).class != ObjectClass::Body {
                    continue;
                }
                let head_box = graph.detection(h).bbox;
                let body_top = graph.detection(b).bbox.top_region(head_region_frac);
                if iou(&head_box, &body_top) >= o_thres {
                    set.add(graph.det_var(h), graph.det_var(b), -q_co)?;
                }
            }
        }
    }

    // Detection-connection consistency: detections of one class against
    // frame-skipping connections of the other.
    for (ci, conn) in graph.connections().iter().enumerate() {
        let src = graph.detection(conn.src);
        let dst = graph.detection(conn.dst);
        if dst.frame - src.frame < 2 {
            continue;
        }
        let other_class = match src.class {
            ObjectClass::Body => ObjectClass::Head,
            ObjectClass::Head => ObjectClass::Body,
        };
        for frame in src.frame + 1..dst.frame {
            let t = (frame - src.frame) as f64 / (dst.frame - src.frame) as f64;
            let interp = crate::model::BoundingBox::lerp(&src.bbox, &dst.bbox, t);
            for &d in graph.class_detections(other_class) {
                let det = graph.detection(d);
                if det.frame != frame {
                    continue;
                }
                // Always compare a head box against the top region of the
                // body box, whichever side the connection is on.
                let consistent = match other_class {
                    ObjectClass::Head => iou(&det.bbox, &interp.top_region(head_region_frac)),
                    ObjectClass::Body => iou(&interp, &det.bbox.top_region(head_region_frac)),
                };
                if consistent >= o_thres {
                    set.add(graph.det_var(d), graph.conn_var(ci), -q_co)?;
                }
            }
        }
    }
    Ok(set)
}

/// A convex quadratic objective ready for the Frank-Wolfe loop:
/// `f(z) = c_adjusted^T z + sum_i diag_i z_i^2 + sum_(i<j) q_ij z_i z_j`.
///
/// On binary points this equals the original `c^T z + z^T Q z` (scaled by
/// `1 / normalization`).
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedObjective {
    /// Off-diagonal couplings, unchanged by the shift (already scaled).
    pub q: PairwiseCostSet,
    /// Convexifying diagonal: `diag[i] = sum_j |q_ij|`.
    pub diag: Vec<f64>,
    /// Linear term with the shift folded in: `c[i] - diag[i]`.
    pub c_adjusted: Vec<f64>,
    /// The scale the original objective was divided by.
    pub normalization: f64,
}

impl ShiftedObjective {
    pub fn n_vars(&self) -> usize {
        self.c_adjusted.len()
    }

    /// The linear term of the objective before the shift (still scaled).
    pub fn original_linear(&self) -> Vec<f64> {
        self.c_adjusted.iter().zip(&self.diag).map(|(c, d)| c + d).collect()
    }

    /// Objective value at any point of the box.
    pub fn value(&self, z: &[f64]) -> f64 {
        let lin: f64 = self.c_adjusted.iter().zip(z).map(|(c, z)| c * z).sum();
        let sq: f64 = self.diag.iter().zip(z).map(|(d, z)| d * z * z).sum();
        lin + sq + self.q.quad(z)
    }

    /// Gradient `c_adjusted + 2 diag .* z + (Q + Q^T) z`.
    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> =
            self.c_adjusted.iter().zip(&self.diag).zip(z).map(|((c, d), z)| c + 2.0 * d * z).collect();
        self.q.add_grad(z, &mut g);
        g
    }

    /// Quadratic form `d^T Q_shifted d`; the curvature term of a line search.
    pub fn curvature(&self, d: &[f64]) -> f64 {
        let sq: f64 = self.diag.iter().zip(d).map(|(dd, v)| dd * v * v).sum();
        sq + self.q.quad(d)
    }
}

/// Scales `c` and `q` by `S = sum |c_v| + sum |q_ij|` (or 1 if that is zero),
/// so the objective magnitude is at most 1 on the unit box. Applying it to an
/// already-normalized objective is a no-op (its scale is exactly 1).
pub fn normalize_objective(c: &CostVector, q: &PairwiseCostSet) -> Result<(CostVector, PairwiseCostSet, f64)> {
    let mut s: f64 = c.as_slice().iter().map(|v| v.abs()).sum();
    s += q.entries().iter().map(|&(_, _, v)| v.abs()).sum::<f64>();
    let s = if s == 0.0 { 1.0 } else { s };
    let scaled_c = CostVector::new(c.as_slice().iter().map(|v| v / s).collect())?;
    Ok((scaled_c, q.scaled(1.0 / s), s))
}

/// Folds the convexifying diagonal into the objective without changing its
/// values on binary points. The result records no scaling
/// (`normalization = 1`); see [`prepare_objective`] for the full pipeline.
pub fn diagonal_shift(c: &CostVector, q: &PairwiseCostSet) -> Result<ShiftedObjective> {
    let n = c.len();
    let mut diag = vec![0.0; n];
    for &(i, j, v) in q.entries() {
        if i >= n || j >= n {
            return Err(Error::PairwiseOutOfRange { i, j, n_vars: n });
        }
        diag[i] += v.abs();
        diag[j] += v.abs();
    }
    let c_adjusted = c.as_slice().iter().zip(&diag).map(|(c, d)| c - d).collect();
    Ok(ShiftedObjective { q: q.clone(), diag, c_adjusted, normalization: 1.0 })
}

/// Normalizes and then shifts: the standard preparation before Frank-Wolfe.
pub fn prepare_objective(c: &CostVector, q: &PairwiseCostSet) -> Result<ShiftedObjective> {
    let (c_scaled, q_scaled, s) = normalize_objective(c, q)?;
    let mut shifted = diagonal_shift(&c_scaled, &q_scaled)?;
    shifted.normalization = s;
    Ok(shifted)
}

/// Human-readable description of a pairwise entry, for logs and debugging.
pub fn describe_entry(graph: &TrackingGraph, i: usize, j: usize) -> String {
    let show = |v: Var| match v {
        Var::Det(d) => format!("det {d}"),
        Var::Conn { src, dst } => format!("conn {src}->{dst}"),
        Var::Start(d) => format!("start {d}"),
        Var::End(d) => format!("end {d}"),
    };
    format!("({}, {})", show(graph.var(i)), show(graph.var(j)))
}
