//! Synthetic tracking scenes with known ground truth, plus exhaustive
//! reference solvers for small instances.
//!
//! The generators produce detection sets whose failure modes are controlled
//! and labeled: parallel lanes (the easy case), lane pairs that cross mid
//! sequence (identity ambiguity), low-confidence duplicate boxes riding on
//! real objects (over-segmentation), and a two-class scene where head boxes
//! vanish at random and body evidence weakens (the case mutual-support costs
//! are meant to rescue). Ground truth is always the noise-free trajectory.
//!
//! The exhaustive solvers enumerate every feasible set of disjoint paths on
//! a (small) graph and evaluate the full objective including pairwise terms,
//! giving an independent optimum to compare optimizers against.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::GroundTruth;
use crate::model::{
    build_graph, propose_connections, BoundingBox, Connection, CostVector, Detection, ObjectClass,
    TrackingGraph,
};
use crate::pairwise::PairwiseCostSet;
use crate::{Error, Result};

/// Largest detection count the exhaustive solvers accept.
pub const ORACLE_MAX_DETECTIONS: usize = 12;

/// Frame gap allowed when the generators propose connections.
pub const SCENARIO_MAX_SKIP: u32 = 3;

/// Which controlled failure mode a scene exhibits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Objects move in well-separated parallel lanes.
    ParallelCrowd,
    /// Lane pairs whose members swap sides halfway through the sequence.
    CrossingPair,
    /// Parallel lanes where low-confidence duplicate boxes shadow the
    /// real detections.
    DuplicateDetections,
    /// Bodies plus head boxes; heads drop out at random and body evidence
    /// weakens at the same rate.
    HeadBodyDropout,
}

/// Full description of a synthetic scene; equal specs generate identical
/// scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n_frames: u32,
    pub n_objects: usize,
    /// Positional jitter amplitude in pixels, applied to detections only.
    pub noise: f64,
    /// Probability that a head box is missing; also the probability that a
    /// body box carries weak (negative) evidence in the two-class scene.
    pub dropout_rate: f64,
    /// Probability that a detection gets a low-confidence duplicate.
    pub duplicate_rate: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            n_frames: 20,
            n_objects: 4,
            noise: 0.5,
            dropout_rate: 0.0,
            duplicate_rate: 0.0,
            seed: 7,
        }
    }
}

/// A generated scene: observations plus the noise-free trajectories they
/// came from. Ground truth covers body objects only.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub detections: Vec<Detection>,
    pub connections: Vec<Connection>,
    pub ground_truth: GroundTruth,
}

impl Scenario {
    /// Assembles the tracking graph for this scene.
    pub fn build_graph(&self, k: usize) -> Result<TrackingGraph> {
        build_graph(self.detections.clone(), self.connections.clone(), k, SCENARIO_MAX_SKIP)
    }
}

const BODY_W: f64 = 10.0;
const BODY_H: f64 = 20.0;
const HEAD_FRAC: f64 = 0.25;

/// Generates the scene described by `spec`. Deterministic: the same spec
/// always produces byte-identical detections and connections.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    if spec.n_frames < 2 {
        return Err(Error::Config(format!("n_frames must be at least 2, got {}", spec.n_frames)));
    }
    if spec.n_objects == 0 {
        return Err(Error::Config("n_objects must be at least 1".into()));
    }
    if spec.kind == ScenarioKind::CrossingPair && spec.n_objects < 2 {
        return Err(Error::Config("crossing scenes need at least 2 objects".into()));
    }
    for (what, v) in [("noise", spec.noise), ("dropout_rate", spec.dropout_rate), ("duplicate_rate", spec.duplicate_rate)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Config(format!("{what} must be finite and nonnegative, got {v}")));
        }
    }
    for (what, v) in [("dropout_rate", spec.dropout_rate), ("duplicate_rate", spec.duplicate_rate)] {
        if v > 1.0 {
            return Err(Error::Config(format!("{what} must be at most 1, got {v}")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ideal = ideal_boxes(spec);

    let mut raw: Vec<(u32, BoundingBox, f64, ObjectClass)> = Vec::new();
    for f in 0..spec.n_frames {
        for boxes in &ideal {
            let body = boxes[f as usize];
            match spec.kind {
                ScenarioKind::HeadBodyDropout => {
                    let weak = rng.gen_bool(spec.dropout_rate);
                    let conf = if weak {
                        rng.gen_range(-0.3..-0.15)
                    } else {
                        rng.gen_range(0.8..0.95)
                    };
                    raw.push((f, jittered(&body, spec.noise, &mut rng), conf, ObjectClass::Body));
                    let head_dropped = rng.gen_bool(spec.dropout_rate);
                    let head_conf = rng.gen_range(0.7..0.9);
                    if !head_dropped {
                        let head = jittered(&body.top_region(HEAD_FRAC), 0.5 * spec.noise, &mut rng);
                        raw.push((f, head, head_conf, ObjectClass::Head));
                    }
                }
                _ => {
                    let dropped = rng.gen_bool(spec.dropout_rate);
                    let conf = rng.gen_range(0.8..0.95);
                    if !dropped {
                        raw.push((f, jittered(&body, spec.noise, &mut rng), conf, ObjectClass::Body));
                    }
                    if rng.gen_bool(spec.duplicate_rate) {
                        let dup = jittered(&body, 1.5, &mut rng);
                        let dup_conf = rng.gen_range(0.05..0.15);
                        raw.push((f, dup, dup_conf, ObjectClass::Body));
                    }
                }
            }
        }
    }

    let mut detections = Vec::with_capacity(raw.len());
    for (id, (frame, bbox, conf, class)) in raw.into_iter().enumerate() {
        detections.push(Detection::new(id, frame, bbox, conf, class)?);
    }
    let connections = propose_connections(&detections, SCENARIO_MAX_SKIP);

    let mut gt = BTreeMap::new();
    for (o, boxes) in ideal.iter().enumerate() {
        let track: Vec<(u32, BoundingBox)> =
            boxes.iter().enumerate().map(|(f, b)| (f as u32, *b)).collect();
        gt.insert(o as u64, track);
    }
    Ok(Scenario {
        spec: spec.clone(),
        detections,
        connections,
        ground_truth: GroundTruth::new(gt)?,
    })
}

/// Noise-free body trajectory of every object, one box per frame.
fn ideal_boxes(spec: &ScenarioSpec) -> Vec<Vec<BoundingBox>> {
    let bx = |x: f64, y: f64| BoundingBox::new(x, y, BODY_W, BODY_H).expect("generator boxes are valid");
    let mut out = Vec::with_capacity(spec.n_objects);
    match spec.kind {
        ScenarioKind::CrossingPair => {
            // Members of a pair trade sides; they meet halfway through.
            let step = 3.0;
            let span = step * (spec.n_frames - 1) as f64;
            for o in 0..spec.n_objects {
                let pair = o / 2;
                let base_y = 60.0 * pair as f64;
                let boxes = (0..spec.n_frames)
                    .map(|f| {
                        let t = f as f64;
                        if o % 2 == 0 {
                            bx(5.0 + step * t, base_y)
                        } else {
                            bx(5.0 + span - step * t, base_y + 4.0)
                        }
                    })
                    .collect();
                out.push(boxes);
            }
        }
        _ => {
            // Parallel lanes with slightly different speeds.
            for o in 0..spec.n_objects {
                let speed = 1.5 + 0.25 * (o % 4) as f64;
                let lane_y = 30.0 * o as f64;
                let boxes = (0..spec.n_frames)
                    .map(|f| bx(5.0 + speed * f as f64 + o as f64, lane_y))
                    .collect();
                out.push(boxes);
            }
        }
    }
    out
}

fn jittered(b: &BoundingBox, amp: f64, rng: &mut ChaCha8Rng) -> BoundingBox {
    if amp <= 0.0 {
        return *b;
    }
    let dx = rng.gen_range(-amp..=amp);
    let dy = rng.gen_range(-amp..=amp);
    BoundingBox::new(b.x + dx, b.y + dy, b.w, b.h).expect("jitter keeps boxes valid")
}

// ---------------------------------------------------------------------------
// Exhaustive reference solvers
// ---------------------------------------------------------------------------

/// Result of an exhaustive search over disjoint path sets.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub optimal_objective: f64,
    pub optimal_z: Vec<f64>,
    /// Number of feasible configurations evaluated (including the empty one
    /// where applicable).
    pub n_enumerated: usize,
}

#[derive(Debug, Clone)]
struct ClassConfig {
    n_paths: usize,
    vars: Vec<usize>,
    linear: f64,
}

/// Exhaustive optimum over all disjoint path sets with at most `k_max`
/// tracks per class, evaluating `c` plus the pairwise terms exactly.
/// Instances beyond [`ORACLE_MAX_DETECTIONS`] detections are refused.
pub fn brute_force_iqp(
    graph: &TrackingGraph,
    c: &CostVector,
    q: &PairwiseCostSet,
    k_max: usize,
) -> Result<OracleResult> {
    brute_force(graph, c, q, k_max, None)
}

/// Exhaustive optimum over path sets with exactly `k` tracks per class.
/// This matches the feasible set the relaxation optimizes over, so its
/// optimum sits between the relaxation's lower bound and any rounded value.
pub fn brute_force_iqp_exact(
    graph: &TrackingGraph,
    c: &CostVector,
    q: &PairwiseCostSet,
    k: usize,
) -> Result<OracleResult> {
    brute_force(graph, c, q, k, Some(k))
}

fn brute_force(
    graph: &TrackingGraph,
    c: &CostVector,
    q: &PairwiseCostSet,
    k_limit: usize,
    exact: Option<usize>,
) -> Result<OracleResult> {
    if graph.n_detections() > ORACLE_MAX_DETECTIONS {
        return Err(Error::InstanceTooLarge {
            n_detections: graph.n_detections(),
            cap: ORACLE_MAX_DETECTIONS,
        });
    }
    if c.len() != graph.n_vars() {
        return Err(Error::LengthMismatch {
            what: "cost vector",
            got: c.len(),
            expected: graph.n_vars(),
        });
    }
    q.check_against(graph)?;

    let mut per_class: Vec<Vec<ClassConfig>> = Vec::new();
    for &class in graph.classes() {
        let mut configs = Vec::new();
        let mut used = vec![false; graph.n_detections()];
        let mut vars = Vec::new();
        enumerate_paths(graph, c, graph.class_detections(class), 0, k_limit, &mut used, &mut vars, 0, &mut configs);
        if let Some(k) = exact {
            let max_feasible = configs.iter().map(|cfg| cfg.n_paths).max().unwrap_or(0);
            configs.retain(|cfg| cfg.n_paths == k);
            if configs.is_empty() {
                return Err(Error::InfeasibleTrackCount { class, requested: k, max_feasible });
            }
        }
        per_class.push(configs);
    }

    let mut best_objective = f64::INFINITY;
    let mut best_vars: Vec<usize> = Vec::new();
    let mut n_enumerated = 0usize;
    let mut active = vec![false; graph.n_vars()];
    let mut choice = vec![0usize; per_class.len()];
    loop {
        // Evaluate the current combination of per-class configurations.
        let mut linear = 0.0;
        for (ci, &pick) in choice.iter().enumerate() {
            let cfg = &per_class[ci][pick];
            linear += cfg.linear;
            for &v in &cfg.vars {
                active[v] = true;
            }
        }
        let mut quad = 0.0;
        for &(i, j, v) in q.entries() {
            if active[i] && active[j] {
                quad += v;
            }
        }
        let objective = linear + quad;
        n_enumerated += 1;
        if objective < best_objective {
            best_objective = objective;
            best_vars.clear();
            for (ci, &pick) in choice.iter().enumerate() {
                best_vars.extend_from_slice(&per_class[ci][pick].vars);
            }
        }
        for (ci, &pick) in choice.iter().enumerate() {
            let cfg = &per_class[ci][pick];
            for &v in &cfg.vars {
                active[v] = false;
            }
        }
        // Advance the odometer over configuration indices.
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                let mut z = vec![0.0; graph.n_vars()];
                for &v in &best_vars {
                    z[v] = 1.0;
                }
                return Ok(OracleResult { optimal_objective: best_objective, optimal_z: z, n_enumerated });
            }
            choice[pos] += 1;
            if choice[pos] < per_class[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// Recursively enumerates disjoint path sets over one class. Paths are added
/// in increasing order of their first detection, which makes every set appear
/// exactly once. Records a configuration at every recursion state.
#[allow(clippy::too_many_arguments)]
fn enumerate_paths(
    graph: &TrackingGraph,
    c: &CostVector,
    class_dets: &[usize],
    min_pos: usize,
    k_limit: usize,
    used: &mut Vec<bool>,
    vars: &mut Vec<usize>,
    n_paths: usize,
    out: &mut Vec<ClassConfig>,
) {
    out.push(ClassConfig {
        n_paths,
        vars: vars.clone(),
        linear: vars.iter().map(|&v| c[v]).sum(),
    });
    if n_paths == k_limit {
        return;
    }
    for pos in min_pos..class_dets.len() {
        let s = class_dets[pos];
        if used[s] {
            continue;
        }
        used[s] = true;
        vars.push(graph.start_var(s));
        vars.push(graph.det_var(s));
        extend_path(graph, c, class_dets, pos, s, k_limit, used, vars, n_paths, out);
        vars.pop();
        vars.pop();
        used[s] = false;
    }
}

/// Extends the path currently ending at `current`: either close it here or
/// follow any outgoing connection to an unused detection.
#[allow(clippy::too_many_arguments)]
fn extend_path(
    graph: &TrackingGraph,
    c: &CostVector,
    class_dets: &[usize],
    start_pos: usize,
    current: usize,
    k_limit: usize,
    used: &mut Vec<bool>,
    vars: &mut Vec<usize>,
    n_paths: usize,
    out: &mut Vec<ClassConfig>,
) {
    vars.push(graph.end_var(current));
    enumerate_paths(graph, c, class_dets, start_pos + 1, k_limit, used, vars, n_paths + 1, out);
    vars.pop();
    for &ci in graph.connections_out(current) {
        let dst = graph.connections()[ci].dst;
        if used[dst] {
            continue;
        }
        used[dst] = true;
        vars.push(graph.conn_var(ci));
        vars.push(graph.det_var(dst));
        extend_path(graph, c, class_dets, start_pos, dst, k_limit, used, vars, n_paths, out);
        vars.pop();
        vars.pop();
        used[dst] = false;
    }
}

// ---------------------------------------------------------------------------
// Random instances for tests
// ---------------------------------------------------------------------------

/// A random small instance: graph, linear costs, and (optionally) pairwise
/// costs on random variable pairs.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub graph: TrackingGraph,
    pub costs: CostVector,
    pub pairwise: PairwiseCostSet,
}

/// Builds a random instance with between 2 and `max_dets` detections spread
/// over a handful of frames. Deterministic in `seed`. With `with_quadratic`
/// the pairwise set carries 1 to 6 entries on random variable pairs, both
/// signs.
pub fn random_instance(seed: u64, max_dets: usize, with_quadratic: bool) -> RandomInstance {
    assert!(max_dets >= 2, "need at least two detections");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_dets);
    let mut dets = Vec::with_capacity(n);
    for id in 0..n {
        let frame = rng.gen_range(0..4u32);
        let b = BoundingBox::new(
            rng.gen_range(0.0..50.0),
            rng.gen_range(0.0..50.0),
            10.0,
            10.0,
        )
        .unwrap();
        let conf = rng.gen_range(-0.2..1.0);
        dets.push(Detection::new(id, frame, b, conf, ObjectClass::Body).unwrap());
    }
    let conns = propose_connections(&dets, 3);
    let graph = build_graph(dets, conns, 1, 3).unwrap();

    let mut c = Vec::with_capacity(graph.n_vars());
    for idx in 0..graph.n_vars() {
        let v = match graph.var(idx) {
            crate::model::Var::Det(_) => rng.gen_range(-1.0..0.1),
            crate::model::Var::Conn { .. } => rng.gen_range(-0.8..0.05),
            _ => rng.gen_range(0.0..0.15),
        };
        c.push(v);
    }
    let costs = CostVector::new(c).unwrap();

    let mut pairwise = PairwiseCostSet::new();
    if with_quadratic {
        let n_entries = rng.gen_range(1..=6usize);
        for _ in 0..n_entries {
            let a = rng.gen_range(0..graph.n_vars());
            let b = rng.gen_range(0..graph.n_vars());
            if a == b {
                continue;
            }
            pairwise.add(a.min(b), a.max(b), rng.gen_range(-0.4..0.4)).unwrap();
        }
        if pairwise.is_empty() {
            pairwise.add(0, 1, 0.2).unwrap();
        }
    }
    RandomInstance { graph, costs, pairwise }
}
