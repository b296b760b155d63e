//! Error type shared across the crate.

use crate::model::ObjectClass;

/// Everything that can go wrong while building graphs, solving, or doing I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A bounding box with non-positive extent or non-finite coordinates.
    #[error("invalid bounding box (x={x}, y={y}, w={w}, h={h}): width and height must be positive and finite")]
    InvalidBox { x: f64, y: f64, w: f64, h: f64 },

    /// A detection confidence or cost term that is NaN or infinite.
    #[error("non-finite value for {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    /// Two detections share an id.
    #[error("duplicate detection id {0}")]
    DuplicateDetection(usize),

    /// Detection ids must form the dense range 0..n.
    #[error("detection ids must be dense 0..{expected}; id {missing} is missing")]
    SparseDetectionIds { expected: usize, missing: usize },

    /// A connection referencing a detection id that does not exist.
    #[error("connection {src} -> {dst} references unknown detection {missing}")]
    DanglingConnection { src: usize, dst: usize, missing: usize },

    /// A connection that does not move forward in time.
    #[error("connection {src} -> {dst} goes from frame {src_frame} to frame {dst_frame}; destination frame must be strictly later")]
    BackwardConnection { src: usize, dst: usize, src_frame: u32, dst_frame: u32 },

    /// A connection spanning more frames than the graph allows.
    #[error("connection {src} -> {dst} skips {gap} frames but max_skip is {max_skip}")]
    SkipTooLarge { src: usize, dst: usize, gap: u32, max_skip: u32 },

    /// The same (src, dst) connection listed twice.
    #[error("duplicate connection {src} -> {dst}")]
    DuplicateConnection { src: usize, dst: usize },

    /// A connection joining detections of different classes.
    #[error("connection {src} -> {dst} joins classes {src_class} and {dst_class}; flow stays within one class")]
    ClassMismatch { src: usize, dst: usize, src_class: ObjectClass, dst_class: ObjectClass },

    /// A correspondence strength outside [0, 1].
    #[error("connection {src} -> {dst} has strength {strength}; strengths must lie in [0, 1]")]
    StrengthOutOfRange { src: usize, dst: usize, strength: f64 },

    /// Track count or budget that the graph cannot carry.
    #[error("cannot route {requested} tracks through class {class}: at most {max_feasible} node-disjoint paths exist")]
    InfeasibleTrackCount { class: ObjectClass, requested: usize, max_feasible: usize },

    /// A budget was requested for a class with no detections.
    #[error("no detections of class {0} in the graph")]
    MissingClass(ObjectClass),

    /// Track count must be at least one when building a graph.
    #[error("track count must be at least 1 (got {0})")]
    ZeroTrackCount(usize),

    /// A vector whose length does not match the graph's variable count.
    #[error("{what} has length {got} but the graph has {expected} variables")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },

    /// A quadratic entry referencing a variable index outside the graph.
    #[error("pairwise entry ({i}, {j}) references a variable outside 0..{n_vars}")]
    PairwiseOutOfRange { i: usize, j: usize, n_vars: usize },

    /// A pairwise entry coupling a variable with itself.
    #[error("pairwise entry couples variable {0} with itself; diagonal terms are not allowed")]
    PairwiseDiagonal(usize),

    /// Co-occurrence costs need both a head and a body population.
    #[error("co-occurrence costs need detections of both classes; {missing} is absent")]
    CooccurrenceMissingClass { missing: ObjectClass },

    /// Head and body detections that never share a frame cannot co-occur.
    #[error("head frames [{head_min}, {head_max}] and body frames [{body_min}, {body_max}] do not intersect")]
    CooccurrenceFrameMismatch { head_min: u32, head_max: u32, body_min: u32, body_max: u32 },

    /// An operation that requires a 0/1 solution got a fractional one.
    #[error("expected an integer flow but variable {index} has value {value}")]
    FractionalSolution { index: usize, value: f64 },

    /// A solution that violates flow conservation; indicates solver breakage.
    #[error("flow conservation violated at detection {detection}: in={inflow}, out={outflow}, node={node}")]
    ConservationViolated { detection: usize, inflow: f64, outflow: f64, node: f64 },

    /// Brute-force enumeration refuses instances above its hard cap.
    #[error("instance has {n_detections} detections; exhaustive enumeration is capped at {cap}")]
    InstanceTooLarge { n_detections: usize, cap: usize },

    /// Certificates require the rounded and relaxed solutions to share one scale.
    #[error("normalization mismatch: relaxed solution used {relaxed}, objective uses {objective}")]
    NormalizationMismatch { relaxed: f64, objective: f64 },

    /// The solver produced a non-finite objective; inputs were likely degenerate.
    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    /// The bound ordering `lower <= relaxed <= integer` broke down by more
    /// than round-off; indicates solver breakage.
    #[error("inconsistent certificate: integer objective {integer_objective}, relaxed {relaxed}, lower bound {lower_bound}")]
    CertificateInconsistent { integer_objective: f64, relaxed: f64, lower_bound: f64 },

    /// A malformed row in a CSV input.
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    /// A bad run configuration value.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
