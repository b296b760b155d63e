//! Tracking quality metrics.
//!
//! Two families live here:
//!
//! * a re-detection measure: a tracker is probed with pairs of positions a
//!   fixed number of frames apart ("does the track that was here still cover
//!   the same object delta_t frames later?"), scored as an average-precision
//!   number per delta_t;
//! * the CLEAR-MOT suite (MOTA, MOTP, mostly-tracked/lost counts, identity
//!   switches, fragmentations) with frame-by-frame matching that prefers to
//!   keep the previous frame's correspondence before running an optimal
//!   assignment on whatever is left.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{iou, BoundingBox};
use crate::tracks::{Track, TrackPoint, TrackSet};
use crate::{Error, Result};

/// Default overlap threshold for counting a box as covering an annotation.
pub const DEFAULT_IOU_THRESH: f64 = 0.5;

/// Annotated trajectories: track id -> frame-sorted boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    tracks: BTreeMap<u64, Vec<(u32, BoundingBox)>>,
}

impl GroundTruth {
    /// Builds ground truth from per-track box lists. Frames within a track
    /// must be strictly increasing and at least one box must be present.
    pub fn new(tracks: BTreeMap<u64, Vec<(u32, BoundingBox)>>) -> Result<Self> {
        if tracks.is_empty() || tracks.values().all(|t| t.is_empty()) {
            return Err(Error::Config("ground truth has no annotated boxes".into()));
        }
        for (id, boxes) in &tracks {
            for w in boxes.windows(2) {
                if w[1].0 <= w[0].0 {
                    return Err(Error::Config(format!(
                        "ground-truth track {id} has out-of-order frames {} and {}",
                        w[0].0, w[1].0
                    )));
                }
            }
        }
        Ok(Self { tracks })
    }

    pub fn tracks(&self) -> &BTreeMap<u64, Vec<(u32, BoundingBox)>> {
        &self.tracks
    }

    pub fn n_tracks(&self) -> usize {
        self.tracks.len()
    }

    /// Total number of annotated boxes across all tracks.
    pub fn total_boxes(&self) -> usize {
        self.tracks.values().map(Vec::len).sum()
    }

    /// Smallest and largest annotated frame.
    pub fn frame_range(&self) -> (u32, u32) {
        let mut lo = u32::MAX;
        let mut hi = 0;
        for boxes in self.tracks.values() {
            if let Some(&(f, _)) = boxes.first() {
                lo = lo.min(f);
            }
            if let Some(&(f, _)) = boxes.last() {
                hi = hi.max(f);
            }
        }
        (lo, hi)
    }

    /// Box of track `id` at `frame`, if annotated there.
    pub fn box_at(&self, id: u64, frame: u32) -> Option<BoundingBox> {
        let boxes = self.tracks.get(&id)?;
        boxes
            .binary_search_by_key(&frame, |&(f, _)| f)
            .ok()
            .map(|i| boxes[i].1)
    }

    /// Upper median of per-track frame spans (last frame minus first frame).
    /// A sensible largest probe gap: at least half the tracks live that long.
    pub fn median_track_span(&self) -> u32 {
        let mut spans: Vec<u32> = self
            .tracks
            .values()
            .filter(|b| !b.is_empty())
            .map(|b| b.last().unwrap().0 - b.first().unwrap().0)
            .collect();
        spans.sort_unstable();
        spans[spans.len() / 2]
    }
}

/// Builds an output track set that reproduces the annotations exactly, every
/// box carrying the same `confidence`. Useful as an upper-bound baseline.
pub fn perfect_tracks(gt: &GroundTruth, confidence: f64) -> TrackSet {
    let mut tracks = Vec::new();
    for (idx, boxes) in gt.tracks.values().enumerate() {
        let points = boxes
            .iter()
            .map(|&(frame, bbox)| TrackPoint {
                frame,
                bbox,
                confidence,
                detection: None,
                link_strength: 0.0,
            })
            .collect();
        tracks.push(Track {
            id: idx,
            class: crate::model::ObjectClass::Body,
            points,
        });
    }
    TrackSet { tracks }
}

/// How a probe pair was scored against the annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtrackLabel {
    Tp,
    Fp,
    Unassigned,
}

/// A probe pair: the same track's boxes `delta_t` frames apart.
#[derive(Debug, Clone, PartialEq)]
pub struct Subtrack {
    pub track: usize,
    pub frame: u32,
    pub delta_t: u32,
    pub first: BoundingBox,
    pub second: BoundingBox,
    /// Accumulated detection confidences plus link strengths over the
    /// spanned segment of the track.
    pub confidence: f64,
    pub label: SubtrackLabel,
}

/// One operating point of a precision/recall sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PRPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Precision/recall curve with its average precision (all-points area
/// under the precision envelope).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PRCurve {
    pub delta_t: u32,
    pub points: Vec<PRPoint>,
    pub ap: f64,
}

/// Enumerates every probe pair the tracker offers at gap `delta_t`: for each
/// track point at frame t, the same track's point at t + delta_t if one
/// exists. With `delta_t == 0` each point pairs with itself, which makes the
/// score coincide with plain detection average precision.
pub fn collect_subtracks(tracks: &TrackSet, delta_t: u32) -> Vec<Subtrack> {
    let mut subs = Vec::new();
    for track in &tracks.tracks {
        for (i, p) in track.points.iter().enumerate() {
            let target = p.frame + delta_t;
            let Some(j) = track
                .points
                .binary_search_by_key(&target, |q| q.frame)
                .ok()
            else {
                continue;
            };
            let mut confidence = 0.0;
            for q in &track.points[i..=j] {
                confidence += q.confidence;
            }
            for q in &track.points[i + 1..=j] {
                confidence += q.link_strength;
            }
            subs.push(Subtrack {
                track: track.id,
                frame: p.frame,
                delta_t,
                first: p.bbox,
                second: track.points[j].bbox,
                confidence,
                label: SubtrackLabel::Unassigned,
            });
        }
    }
    subs
}

/// Labels probe pairs against the annotations. A pair is a true positive if
/// some annotated track has boxes at both of its frames, each end overlapping
/// its annotation with intersection-over-union at least `iou_thresh`, and no
/// higher-confidence pair has already claimed that (annotation, frame) slot.
/// Pairs are processed by descending confidence (ties: track id, then frame).
pub fn label_subtracks(
    tracks: &TrackSet,
    gt: &GroundTruth,
    delta_t: u32,
    iou_thresh: f64,
) -> Vec<Subtrack> {
    let mut subs = collect_subtracks(tracks, delta_t);
    subs.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then(a.track.cmp(&b.track))
            .then(a.frame.cmp(&b.frame))
    });
    let mut claimed: BTreeSet<(u64, u32)> = BTreeSet::new();
    for sub in &mut subs {
        // Best-overlap candidate, no fallback: if that slot is taken the
        // pair counts as a false positive.
        let mut best: Option<(f64, u64)> = None;
        for &gid in gt.tracks().keys() {
            let (Some(a), Some(b)) = (gt.box_at(gid, sub.frame), gt.box_at(gid, sub.frame + delta_t))
            else {
                continue;
            };
            let qa = iou(&sub.first, &a);
            let qb = iou(&sub.second, &b);
            if qa < iou_thresh || qb < iou_thresh {
                continue;
            }
            let quality = qa.min(qb);
            if best.is_none_or(|(bq, _)| quality > bq) {
                best = Some((quality, gid));
            }
        }
        sub.label = match best {
            Some((_, gid)) if claimed.insert((gid, sub.frame)) => SubtrackLabel::Tp,
            _ => SubtrackLabel::Fp,
        };
    }
    subs
}

/// Number of (annotation, frame) slots a tracker could possibly hit at gap
/// `delta_t`: annotated tracks with boxes at both t and t + delta_t.
fn count_gt_pairs(gt: &GroundTruth, delta_t: u32) -> usize {
    let mut n = 0;
    for boxes in gt.tracks().values() {
        for &(f, _) in boxes {
            if boxes.binary_search_by_key(&(f + delta_t), |&(g, _)| g).is_ok() {
                n += 1;
            }
        }
    }
    n
}

/// Re-detection score at a single gap. Returns the precision/recall sweep
/// over confidence thresholds and its all-points average precision.
pub fn redetection_ap(
    tracks: &TrackSet,
    gt: &GroundTruth,
    delta_t: u32,
    iou_thresh: f64,
) -> PRCurve {
    let n_gt = count_gt_pairs(gt, delta_t);
    if n_gt == 0 {
        log::warn!(
            "no annotated pairs {delta_t} frames apart (annotation range {:?}); curve is empty",
            gt.frame_range()
        );
        return PRCurve { delta_t, points: Vec::new(), ap: 0.0 };
    }
    let subs = label_subtracks(tracks, gt, delta_t, iou_thresh);
    let mut points = Vec::with_capacity(subs.len());
    let mut tp = 0usize;
    let mut fp = 0usize;
    for sub in &subs {
        match sub.label {
            SubtrackLabel::Tp => tp += 1,
            _ => fp += 1,
        }
        points.push(PRPoint {
            threshold: sub.confidence,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / n_gt as f64,
        });
    }
    let ap = all_points_ap(&points);
    PRCurve { delta_t, points, ap }
}

/// Area under the monotone precision envelope: sum over recall increments of
/// the best precision at that recall or beyond.
fn all_points_ap(points: &[PRPoint]) -> f64 {
    let mut envelope = vec![0.0; points.len()];
    let mut run = 0.0f64;
    for (i, p) in points.iter().enumerate().rev() {
        run = run.max(p.precision);
        envelope[i] = run;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (i, p) in points.iter().enumerate() {
        if p.recall > prev_recall {
            ap += (p.recall - prev_recall) * envelope[i];
            prev_recall = p.recall;
        }
    }
    ap
}

/// Re-detection curves for every gap in `delta_ts`.
pub fn redetection_profile(
    tracks: &TrackSet,
    gt: &GroundTruth,
    delta_ts: &[u32],
    iou_thresh: f64,
) -> Vec<PRCurve> {
    delta_ts
        .iter()
        .map(|&dt| redetection_ap(tracks, gt, dt, iou_thresh))
        .collect()
}

/// CLEAR-MOT summary over a whole sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotReport {
    pub recall: f64,
    pub precision: f64,
    pub gt_tracks: usize,
    pub mostly_tracked: usize,
    pub partly_tracked: usize,
    pub mostly_lost: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub id_switches: usize,
    pub fragmentations: usize,
    pub mota: f64,
    pub motp: f64,
    pub matches: usize,
    pub total_gt_boxes: usize,
}

/// Frame-by-frame CLEAR-MOT evaluation.
///
/// Matching per frame: correspondences from the previous frame are kept as
/// long as both parties are present and still overlap at least `iou_thresh`;
/// the remaining boxes are matched by an optimal assignment maximizing total
/// overlap. An annotation matched to a different track than the last one it
/// was ever matched to counts one identity switch.
pub fn clear_mot(tracks: &TrackSet, gt: &GroundTruth, iou_thresh: f64) -> MotReport {
    let mut track_boxes: BTreeMap<u32, Vec<(usize, BoundingBox)>> = BTreeMap::new();
    for track in &tracks.tracks {
        for p in &track.points {
            track_boxes.entry(p.frame).or_default().push((track.id, p.bbox));
        }
    }
    for boxes in track_boxes.values_mut() {
        boxes.sort_by_key(|&(id, _)| id);
    }
    let mut gt_boxes: BTreeMap<u32, Vec<(u64, BoundingBox)>> = BTreeMap::new();
    for (&gid, boxes) in gt.tracks() {
        for &(f, b) in boxes {
            gt_boxes.entry(f).or_default().push((gid, b));
        }
    }

    let mut frames: BTreeSet<u32> = BTreeSet::new();
    frames.extend(track_boxes.keys());
    frames.extend(gt_boxes.keys());

    let mut prev_match: BTreeMap<u64, usize> = BTreeMap::new(); // matches alive last frame
    let mut last_known: BTreeMap<u64, usize> = BTreeMap::new(); // last track ever matched
    let mut matched_frames: BTreeMap<u64, Vec<bool>> = BTreeMap::new();

    let mut fp = 0usize;
    let mut fn_ = 0usize;
    let mut idsw = 0usize;
    let mut matches = 0usize;
    let mut iou_sum = 0.0f64;

    static EMPTY_GT: Vec<(u64, BoundingBox)> = Vec::new();
    static EMPTY_TR: Vec<(usize, BoundingBox)> = Vec::new();
    for &frame in &frames {
        let gts = gt_boxes.get(&frame).unwrap_or(&EMPTY_GT);
        let trs = track_boxes.get(&frame).unwrap_or(&EMPTY_TR);

        let mut gt_taken = vec![false; gts.len()];
        let mut tr_taken = vec![false; trs.len()];
        let mut pairs: Vec<(usize, usize, f64)> = Vec::new(); // (gt idx, tr idx, iou)

        // Keep yesterday's correspondences that still hold up.
        for (gi, &(gid, gb)) in gts.iter().enumerate() {
            let Some(&tid) = prev_match.get(&gid) else { continue };
            let Some(ti) = trs.iter().position(|&(id, _)| id == tid) else { continue };
            if tr_taken[ti] {
                continue;
            }
            let q = iou(&gb, &trs[ti].1);
            if q >= iou_thresh {
                gt_taken[gi] = true;
                tr_taken[ti] = true;
                pairs.push((gi, ti, q));
            }
        }

        // Optimal assignment on the rest.
        let free_gt: Vec<usize> = (0..gts.len()).filter(|&i| !gt_taken[i]).collect();
        let free_tr: Vec<usize> = (0..trs.len()).filter(|&i| !tr_taken[i]).collect();
        if !free_gt.is_empty() && !free_tr.is_empty() {
            let weights: Vec<Vec<f64>> = free_gt
                .iter()
                .map(|&gi| {
                    free_tr
                        .iter()
                        .map(|&ti| {
                            let q = iou(&gts[gi].1, &trs[ti].1);
                            if q >= iou_thresh {
                                q
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
            for (r, c) in max_weight_assignment(&weights) {
                let q = weights[r][c];
                if q >= iou_thresh && q > 0.0 {
                    pairs.push((free_gt[r], free_tr[c], q));
                    gt_taken[free_gt[r]] = true;
                    tr_taken[free_tr[c]] = true;
                }
            }
        }

        prev_match.clear();
        for &(gi, ti, q) in &pairs {
            let gid = gts[gi].0;
            let tid = trs[ti].0;
            if let Some(&old) = last_known.get(&gid) {
                if old != tid {
                    idsw += 1;
                }
            }
            last_known.insert(gid, tid);
            prev_match.insert(gid, tid);
            matches += 1;
            iou_sum += q;
        }
        fn_ += gts.len() - pairs.len();
        fp += trs.len() - pairs.len();
        for (gi, &(gid, _)) in gts.iter().enumerate() {
            matched_frames.entry(gid).or_default().push(gt_taken[gi]);
        }
    }

    let total_gt = gt.total_boxes();
    let mut mostly_tracked = 0;
    let mut partly_tracked = 0;
    let mut mostly_lost = 0;
    let mut fragmentations = 0;
    for flags in matched_frames.values() {
        let covered = flags.iter().filter(|&&m| m).count() as f64 / flags.len() as f64;
        if covered >= 0.8 {
            mostly_tracked += 1;
        } else if covered <= 0.2 {
            mostly_lost += 1;
        } else {
            partly_tracked += 1;
        }
        // A fragmentation is an unmatched run strictly between matched frames.
        let mut seen_match = false;
        let mut in_gap = false;
        for &m in flags {
            if m {
                if seen_match && in_gap {
                    fragmentations += 1;
                }
                seen_match = true;
                in_gap = false;
            } else if seen_match {
                in_gap = true;
            }
        }
    }

    let total_out: usize = tracks.tracks.iter().map(|t| t.points.len()).sum();
    MotReport {
        recall: if total_gt > 0 { matches as f64 / total_gt as f64 } else { 0.0 },
        precision: if total_out > 0 { matches as f64 / total_out as f64 } else { 0.0 },
        gt_tracks: gt.n_tracks(),
        mostly_tracked,
        partly_tracked,
        mostly_lost,
        false_positives: fp,
        false_negatives: fn_,
        id_switches: idsw,
        fragmentations,
        mota: if total_gt > 0 {
            1.0 - (fn_ + fp + idsw) as f64 / total_gt as f64
        } else {
            0.0
        },
        motp: if matches > 0 { iou_sum / matches as f64 } else { 0.0 },
        matches,
        total_gt_boxes: total_gt,
    }
}

/// Maximum-total-weight assignment between rows and columns of `weights`
/// (rectangular allowed). Returns (row, column) pairs; zero-weight pairs may
/// appear and carry no value. Cubic-time Hungarian algorithm on potentials.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    let m = weights[0].len();
    if m == 0 {
        return Vec::new();
    }
    if n > m {
        // Transpose so rows never outnumber columns.
        let t: Vec<Vec<f64>> = (0..m)
            .map(|j| (0..n).map(|i| weights[i][j]).collect())
            .collect();
        return max_weight_assignment(&t)
            .into_iter()
            .map(|(r, c)| (c, r))
            .collect();
    }
    // Minimize negated weights; every row gets a column.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1]; // p[j] = row (1-based) matched to column j
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = -weights[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for (j, &pj) in p.iter().enumerate().skip(1) {
        if pj != 0 {
            out.push((pj - 1, j - 1));
        }
    }
    out.sort_unstable();
    out
}
