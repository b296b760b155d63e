//! Multi-object tracking by selecting detections and frame-to-frame
//! correspondences out of a min-cost network-flow candidate graph.
//!
//! The linear part of the objective is solved exactly as a min-cost flow.
//! Interactions between selection variables (overlap penalties between
//! competing detections, co-occurrence bonuses between head and body
//! candidates) enter as a sparse quadratic term. The quadratic program is
//! made convex by a diagonal shift that leaves binary solutions untouched,
//! relaxed, and solved with the Frank-Wolfe method, where every linear
//! subproblem is again a min-cost flow. Integer solutions are recovered by
//! one of two rounding schemes, each reporting a suboptimality certificate
//! against the relaxation's lower bound.
//!
//! Start with the runnable examples:
//!
//! ```text
//! cargo run --example linear_tracking
//! cargo run --example overlap_penalty
//! cargo run --example head_body_cooccurrence
//! cargo run --example certificates
//! cargo run --example redetection_curves
//! cargo run --example lp_export
//! cargo run --example oracle_check
//! cargo run --example file_pipeline
//! ```
//!
//! A thin command-line binary (`flowtrack`) drives the same pipeline from
//! CSV detection files; see the README for the file formats.

pub mod error;
pub mod flow;
pub mod io;
pub mod lp;
pub mod metrics;
pub mod model;
pub mod pairwise;
pub mod pipeline;
pub mod scenarios;
pub mod solver;
pub mod tracks;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
