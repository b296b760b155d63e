//! Decoding an integer flow into trajectories.
//!
//! Each unit of flow enters at some detection's start edge, walks along
//! selected connections, and leaves through an end edge. Tracks copy the
//! frame, box, confidence, and link strength of every visited detection so
//! downstream consumers (metrics, file output) never need the graph again.

use serde::Serialize;

use crate::flow::FlowSolution;
use crate::model::{BoundingBox, DetId, ObjectClass, TrackingGraph};
use crate::{Error, Result};

/// One visited detection within a track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackPoint {
    pub frame: u32,
    pub bbox: BoundingBox,
    pub confidence: f64,
    /// Which detection this point came from; absent for synthetic tracks
    /// built directly from annotations.
    pub detection: Option<DetId>,
    /// Strength of the connection that led here; 0 for the first point.
    pub link_strength: f64,
}

/// An ordered sequence of detections forming one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Track {
    pub id: usize,
    pub class: ObjectClass,
    pub points: Vec<TrackPoint>,
}

impl Track {
    pub fn first_frame(&self) -> u32 {
        self.points.first().map(|p| p.frame).unwrap_or(0)
    }

    pub fn last_frame(&self) -> u32 {
        self.points.last().map(|p| p.frame).unwrap_or(0)
    }

    /// The point at `frame`, if the track visits it.
    pub fn at_frame(&self, frame: u32) -> Option<&TrackPoint> {
        self.points.binary_search_by_key(&frame, |p| p.frame).ok().map(|i| &self.points[i])
    }
}

/// All decoded trajectories of one solve, ids dense from 0 in a
/// deterministic order (class, then first frame, then first detection id).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrackSet {
    pub tracks: Vec<Track>,
}

impl TrackSet {
    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Tracks of one class only, ids re-densified.
    pub fn filter_class(&self, class: ObjectClass) -> TrackSet {
        let mut tracks: Vec<Track> =
            self.tracks.iter().filter(|t| t.class == class).cloned().collect();
        for (i, t) in tracks.iter_mut().enumerate() {
            t.id = i;
        }
        TrackSet { tracks }
    }
}

/// Follows every unit of flow from its start edge to its end edge.
///
/// The solution must be integral; conservation guarantees each selected
/// detection has exactly one selected way in and one way out, so the walk is
/// unambiguous. A frame-skipping connection simply yields consecutive points
/// more than one frame apart; nothing is interpolated.
pub fn extract_tracks(solution: &FlowSolution, graph: &TrackingGraph) -> Result<TrackSet> {
    if solution.z.len() != graph.n_vars() {
        return Err(Error::LengthMismatch {
            what: "solution vector",
            got: solution.z.len(),
            expected: graph.n_vars(),
        });
    }
    let z = &solution.z;
    for (i, &v) in z.iter().enumerate() {
        if v != 0.0 && v != 1.0 {
            return Err(Error::FractionalSolution { index: i, value: v });
        }
    }
    solution.validate(graph)?;

    let on = |idx: usize| z[idx] == 1.0;
    let mut used = vec![false; graph.n_detections()];
    let mut tracks = Vec::new();
    for start in 0..graph.n_detections() {
        if !on(graph.start_var(start)) {
            continue;
        }
        let mut points = Vec::new();
        let mut current = start;
        let mut strength = 0.0;
        loop {
            if used[current] {
                return Err(Error::ConservationViolated {
                    detection: current,
                    inflow: 2.0,
                    outflow: 1.0,
                    node: 1.0,
                });
            }
            used[current] = true;
            let det = graph.detection(current);
            points.push(TrackPoint {
                frame: det.frame,
                bbox: det.bbox,
                confidence: det.confidence,
                detection: Some(current),
                link_strength: strength,
            });
            if on(graph.end_var(current)) {
                break;
            }
            let next = graph
                .connections_out(current)
                .iter()
                .find(|&&ci| on(graph.conn_var(ci)))
                .copied();
            match next {
                Some(ci) => {
                    strength = graph.connections()[ci].strength;
                    current = graph.connections()[ci].dst;
                }
                None => {
                    return Err(Error::ConservationViolated {
                        detection: current,
                        inflow: 1.0,
                        outflow: 0.0,
                        node: 1.0,
                    })
                }
            }
        }
        tracks.push(Track { id: 0, class: graph.detection(start).class, points });
    }
    // Every selected detection must have been visited by exactly one walk.
    for (d, &visited) in used.iter().enumerate() {
        if on(graph.det_var(d)) && !visited {
            return Err(Error::ConservationViolated {
                detection: d,
                inflow: 0.0,
                outflow: 0.0,
                node: 1.0,
            });
        }
    }
    tracks.sort_by_key(|t| (t.class, t.first_frame(), t.points[0].detection));
    for (i, t) in tracks.iter_mut().enumerate() {
        t.id = i;
    }
    Ok(TrackSet { tracks })
}
