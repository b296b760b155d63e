//! Frank-Wolfe over the flow polytope, plus rounding and certificates.
//!
//! The convex (shifted, normalized) quadratic objective is minimized over the
//! polytope of `k`-track flows. Frank-Wolfe only ever touches the feasible
//! set through linear minimizations, and here every one of those is an exact
//! min-cost flow solve, so each iteration visits a 0/1 vertex. The loop
//! records the best vertex seen, a certified lower bound on the optimum
//! (objective minus duality gap), and the gap trace.
//!
//! Two ways to recover an integer solution from the relaxed optimum:
//!
//! * gradient rounding: minimize the first-order model of the objective at
//!   the relaxed solution (one more min-cost flow);
//! * Hamming rounding: find the feasible 0/1 point closest in Hamming
//!   distance, i.e. minimize `(1 - 2 z_star)^T z` (also one flow solve).
//!
//! Both come with a certificate: integer objective minus lower bound, in
//! normalized units, which bounds how far the integer solution can be from
//! the unknown integer optimum.

use serde::{Deserialize, Serialize};

use crate::flow::{lmo, Budgets, FlowSolution};
use crate::model::{CostVector, TrackingGraph};
use crate::pairwise::{PairwiseCostSet, ShiftedObjective};
use crate::{Error, Result};

pub const DEFAULT_GAP_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 2000;

/// Stopping parameters for the Frank-Wolfe loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrankWolfeOptions {
    /// Stop once the duality gap (in normalized objective units) falls below
    /// this.
    pub gap_tol: f64,
    /// Hard iteration cap; at least 1.
    pub max_iters: usize,
}

impl Default for FrankWolfeOptions {
    fn default() -> Self {
        Self { gap_tol: DEFAULT_GAP_TOL, max_iters: DEFAULT_MAX_ITERS }
    }
}

/// Result of the relaxation.
#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    /// The (possibly fractional) minimizer found.
    pub z_star: Vec<f64>,
    /// Objective value at `z_star`.
    pub relaxed_objective: f64,
    /// Largest `f(z_t) - gap_t` seen: a valid lower bound on the optimum over
    /// the polytope, hence also on every integer solution.
    pub lower_bound: f64,
    /// Iterations actually run.
    pub iterations: usize,
    /// `(iteration, duality gap)` per iteration.
    pub gap_trace: Vec<(usize, f64)>,
    /// The vertex with the best objective among all iterates (the start
    /// vertex and every oracle answer are 0/1 points).
    pub best_integer: FlowSolution,
    /// Objective value of `best_integer` under the quadratic objective.
    pub best_integer_objective: f64,
    /// Scale of the objective this was solved under; certificates check it.
    pub normalization: f64,
}

/// Which rounding produced an integer solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingMethod {
    FrankWolfe,
    Hamming,
}

impl std::fmt::Display for RoundingMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RoundingMethod::FrankWolfe => write!(f, "frank_wolfe"),
            RoundingMethod::Hamming => write!(f, "hamming"),
        }
    }
}

/// Distance between an integer solution's objective and the relaxation's
/// lower bound, in normalized units. Zero means provably optimal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub method: RoundingMethod,
    /// Quadratic objective of the integer solution (normalized units).
    pub integer_objective: f64,
    /// Lower bound on any feasible solution, integer or not.
    pub lower_bound: f64,
    /// `integer_objective - lower_bound` (non-negative up to round-off).
    pub suboptimality: f64,
}

/// Minimizes the shifted objective over the `budgets`-track polytope.
///
/// Starts from the minimizer of the linear part alone, then repeats: take the
/// gradient, call the flow oracle, step with exact line search. The step is
/// taken before the gap check, so the final point is at least as good as
/// every vertex the oracle returned.
pub fn frank_wolfe_relax(
    graph: &TrackingGraph,
    shifted: &ShiftedObjective,
    budgets: &Budgets,
    opts: &FrankWolfeOptions,
) -> Result<RelaxedSolution> {
    if shifted.n_vars() != graph.n_vars() {
        return Err(Error::LengthMismatch {
            what: "shifted objective",
            got: shifted.n_vars(),
            expected: graph.n_vars(),
        });
    }
    shifted.q.check_against(graph)?;
    if opts.max_iters == 0 {
        return Err(Error::Config("max_iters must be at least 1".into()));
    }
    if !(opts.gap_tol.is_finite() && opts.gap_tol >= 0.0) {
        return Err(Error::Config(format!("gap_tol must be finite and >= 0, got {}", opts.gap_tol)));
    }

    // Pure linear solution as the starting vertex.
    let linear = CostVector::new(shifted.original_linear())?;
    let start = lmo(graph, &linear, budgets)?;
    let mut z = start.z.clone();
    let mut best_integer = start;
    let mut best_integer_objective = shifted.value(&best_integer.z);

    let mut lower_bound = f64::NEG_INFINITY;
    let mut gap_trace = Vec::new();
    let mut iterations = 0;

    for t in 0..opts.max_iters {
        let g = shifted.gradient(&z);
        let s = lmo(graph, &CostVector::new(g.clone())?, budgets)?;
        let gap: f64 = g.iter().zip(z.iter().zip(&s.z)).map(|(g, (z, s))| g * (z - s)).sum();
        let f_z = shifted.value(&z);
        if !f_z.is_finite() || !gap.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: t });
        }
        gap_trace.push((t, gap));
        lower_bound = lower_bound.max(f_z - gap);

        let f_s = shifted.value(&s.z);
        if f_s < best_integer_objective {
            best_integer = s.clone();
            best_integer_objective = f_s;
        }

        // Exact line search along d = s - z: the objective is quadratic in
        // gamma with curvature d^T Q_shifted d >= 0.
        let d: Vec<f64> = s.z.iter().zip(&z).map(|(s, z)| s - z).collect();
        let slope: f64 = g.iter().zip(&d).map(|(g, d)| g * d).sum();
        let curv = shifted.curvature(&d);
        let gamma = if curv <= 1e-15 { 1.0 } else { (-slope / (2.0 * curv)).clamp(0.0, 1.0) };
        for (zi, di) in z.iter_mut().zip(&d) {
            *zi += gamma * di;
        }
        iterations = t + 1;

        if gap <= opts.gap_tol {
            break;
        }
    }

    let relaxed_objective = shifted.value(&z);
    Ok(RelaxedSolution {
        z_star: z,
        relaxed_objective,
        lower_bound,
        iterations,
        gap_trace,
        best_integer,
        best_integer_objective,
        normalization: shifted.normalization,
    })
}

/// Entries this close to 0 or 1 count as integral when deciding whether a
/// relaxed point needs rounding at all.
const SNAP_TOL: f64 = 1e-7;

/// If `z_star` is already (numerically) a vertex, snap it and skip the solve.
fn snap_if_integral(graph: &TrackingGraph, z_star: &[f64]) -> Option<FlowSolution> {
    let mut z = Vec::with_capacity(z_star.len());
    for &v in z_star {
        if (v - 0.0).abs() <= SNAP_TOL {
            z.push(0.0);
        } else if (v - 1.0).abs() <= SNAP_TOL {
            z.push(1.0);
        } else {
            return None;
        }
    }
    let k_used = graph.active_budgets(&z).values().sum();
    let solution = FlowSolution { z, objective: 0.0, is_integer: true, k_used };
    solution.validate(graph).ok()?;
    Some(solution)
}

/// Rounds by minimizing the linear model of the objective at `z_star`
/// (its gradient) over the same polytope: one min-cost flow solve. The
/// result can only improve on `z_star` under that linearization; with no
/// quadratic term it reproduces the linear optimum itself.
pub fn frank_wolfe_round(
    graph: &TrackingGraph,
    shifted: &ShiftedObjective,
    z_star: &[f64],
    budgets: &Budgets,
) -> Result<FlowSolution> {
    check_point(graph, z_star)?;
    let g = shifted.gradient(z_star);
    lmo(graph, &CostVector::new(g)?, budgets)
}

/// Rounds to the feasible 0/1 point with minimal Hamming distance to
/// `z_star`: minimize `(1 - 2 z_star)^T z`. Blind to the objective; serves
/// as the baseline rounding. An already-integral `z_star` is returned
/// unchanged.
pub fn hamming_round(graph: &TrackingGraph, z_star: &[f64], budgets: &Budgets) -> Result<FlowSolution> {
    check_point(graph, z_star)?;
    if let Some(mut snapped) = snap_if_integral(graph, z_star) {
        snapped.objective =
            snapped.z.iter().zip(z_star).map(|(z, zs)| (1.0 - 2.0 * zs) * z).sum();
        return Ok(snapped);
    }
    let costs: Vec<f64> = z_star.iter().map(|v| 1.0 - 2.0 * v).collect();
    lmo(graph, &CostVector::new(costs)?, budgets)
}

fn check_point(graph: &TrackingGraph, z: &[f64]) -> Result<()> {
    if z.len() != graph.n_vars() {
        return Err(Error::LengthMismatch { what: "point", got: z.len(), expected: graph.n_vars() });
    }
    for (i, &v) in z.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::FractionalSolution { index: i, value: v });
        }
    }
    Ok(())
}

/// Evaluates an integer solution against the relaxation's lower bound.
///
/// The rounded solution must be integral and the objective must be the one
/// the relaxation was solved under (same normalization). The sandwich
/// `lower_bound <= relaxed <= integer` is asserted up to round-off; a gross
/// violation means a solver bug and is reported as an error.
pub fn certificate(
    rounded: &FlowSolution,
    relaxed: &RelaxedSolution,
    shifted: &ShiftedObjective,
    method: RoundingMethod,
) -> Result<Certificate> {
    if !rounded.is_integer {
        for (i, &v) in rounded.z.iter().enumerate() {
            if v != 0.0 && v != 1.0 {
                return Err(Error::FractionalSolution { index: i, value: v });
            }
        }
    }
    let rel = relaxed.normalization;
    let obj = shifted.normalization;
    if (rel - obj).abs() > 1e-12 * rel.abs().max(obj.abs()).max(1.0) {
        return Err(Error::NormalizationMismatch { relaxed: rel, objective: obj });
    }
    let integer_objective = shifted.value(&rounded.z);
    let suboptimality = integer_objective - relaxed.lower_bound;
    const GROSS: f64 = 1e-6;
    if suboptimality < -GROSS || relaxed.lower_bound - relaxed.relaxed_objective > GROSS {
        return Err(Error::CertificateInconsistent {
            integer_objective,
            relaxed: relaxed.relaxed_objective,
            lower_bound: relaxed.lower_bound,
        });
    }
    Ok(Certificate {
        method,
        integer_objective,
        lower_bound: relaxed.lower_bound,
        suboptimality,
    })
}

/// Picks a track count per class when none is configured.
///
/// For each class, the flow solver produces the optimal linear-cost solution
/// at every exact count `0..=k_max` (stopping early if a count becomes
/// infeasible). The full objective, pairwise terms included, is then
/// evaluated on every combination of per-class counts and the cheapest
/// combination wins; ties go to fewer tracks. The candidate solutions come
/// from the linear part alone, so this is a heuristic when pairwise terms
/// are present, but it reacts to them: counts whose extra tracks trigger
/// penalties are rejected, counts unlocking rewards are kept.
pub fn auto_track_counts(
    graph: &TrackingGraph,
    c: &CostVector,
    q: &PairwiseCostSet,
    k_max: usize,
) -> Result<std::collections::BTreeMap<crate::model::ObjectClass, usize>> {
    use crate::flow::solve_with_budgets;
    if c.len() != graph.n_vars() {
        return Err(Error::LengthMismatch {
            what: "cost vector",
            got: c.len(),
            expected: graph.n_vars(),
        });
    }
    q.check_against(graph)?;

    let classes: Vec<_> = graph.classes().to_vec();
    let mut snapshots: Vec<Vec<Vec<f64>>> = Vec::with_capacity(classes.len());
    for &class in &classes {
        let mut per_k = vec![vec![0.0; graph.n_vars()]];
        for k in 1..=k_max {
            let mut budgets = std::collections::BTreeMap::new();
            for &other in &classes {
                budgets.insert(other, if other == class { k } else { 0 });
            }
            match solve_with_budgets(graph, c, &Budgets::PerClass(budgets)) {
                Ok(s) => per_k.push(s.z),
                Err(Error::InfeasibleTrackCount { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        snapshots.push(per_k);
    }

    let mut best = f64::INFINITY;
    let mut best_choice = vec![0usize; classes.len()];
    let mut choice = vec![0usize; classes.len()];
    let mut z = vec![0.0; graph.n_vars()];
    loop {
        for v in z.iter_mut() {
            *v = 0.0;
        }
        for (ci, &pick) in choice.iter().enumerate() {
            for (i, &val) in snapshots[ci][pick].iter().enumerate() {
                z[i] += val;
            }
        }
        let objective = c.dot(&z) + q.quad(&z);
        if objective < best {
            best = objective;
            best_choice.copy_from_slice(&choice);
        }
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                return Ok(classes
                    .iter()
                    .zip(&best_choice)
                    .map(|(&class, &k)| (class, k))
                    .collect());
            }
            choice[pos] += 1;
            if choice[pos] < snapshots[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}
