//! Export of the linearized problem in LP text format.
//!
//! Every quadratic coupling `q_ij z_i z_j` is replaced by a product variable
//! `u_i_j` tied to its factors by the three standard linearization rows
//!
//! ```text
//! u_ij <= z_i        (local_a)
//! u_ij <= z_j        (local_b)
//! z_i + z_j <= 1 + u_ij   (local_c)
//! ```
//!
//! which are exact on 0/1 points. Together with the flow-conservation and
//! track-budget rows this gives a linear program any off-the-shelf solver
//! can consume; its relaxed optimum is a lower bound on the integer optimum,
//! like the in-repo quadratic relaxation. A flag switches between the
//! relaxed export and the integer variant (identical except for a trailing
//! integrality section).

use std::fmt::Write as _;
use std::path::Path;

use crate::flow::Budgets;
use crate::model::{CostVector, TrackingGraph};
use crate::pairwise::PairwiseCostSet;
use crate::{Error, Result};

/// Writes the linearized problem for `k` tracks per class to `path`.
/// With `integer` set, all variables are declared integral.
pub fn export_local_lp(
    graph: &TrackingGraph,
    c: &CostVector,
    q: &PairwiseCostSet,
    k: usize,
    path: &Path,
    integer: bool,
) -> Result<()> {
    export_local_lp_with(graph, c, q, &Budgets::Uniform(k), path, integer)
}

/// Like [`export_local_lp`] with an explicit per-class budget.
pub fn export_local_lp_with(
    graph: &TrackingGraph,
    c: &CostVector,
    q: &PairwiseCostSet,
    budgets: &Budgets,
    path: &Path,
    integer: bool,
) -> Result<()> {
    let text = render_local_lp(graph, c, q, budgets, integer)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Renders the LP text; see [`export_local_lp`].
pub fn render_local_lp(
    graph: &TrackingGraph,
    c: &CostVector,
    q: &PairwiseCostSet,
    budgets: &Budgets,
    integer: bool,
) -> Result<String> {
    if c.len() != graph.n_vars() {
        return Err(Error::LengthMismatch {
            what: "cost vector",
            got: c.len(),
            expected: graph.n_vars(),
        });
    }
    q.check_against(graph)?;

    let var_name = |i: usize| format!("z{i}");
    let u_name = |i: usize, j: usize| format!("u_{i}_{j}");

    let mut out = String::new();
    let _ = writeln!(out, "\\ {} detections, {} connections, {} couplings", graph.n_detections(), graph.n_connections(), q.len());
    let _ = writeln!(out, "\\ variables z<i> follow the graph's variable order");
    out.push_str("Minimize\n");

    let mut terms: Vec<(f64, String)> = Vec::new();
    for i in 0..graph.n_vars() {
        if c[i] != 0.0 {
            terms.push((c[i], var_name(i)));
        }
    }
    for &(i, j, v) in q.entries() {
        if v != 0.0 {
            terms.push((v, u_name(i, j)));
        }
    }
    if terms.is_empty() {
        // A constant-zero objective still needs one term to be well-formed.
        terms.push((0.0, var_name(0)));
    }
    push_expr(&mut out, " obj:", &terms, None);

    out.push_str("Subject To\n");
    for d in 0..graph.n_detections() {
        let mut in_terms = vec![(1.0, var_name(graph.start_var(d)))];
        for &ci in graph.connections_in(d) {
            in_terms.push((1.0, var_name(graph.conn_var(ci))));
        }
        in_terms.push((-1.0, var_name(graph.det_var(d))));
        push_expr(&mut out, &format!(" flow_in_{d}:"), &in_terms, Some(("=", 0.0)));

        let mut out_terms = vec![(1.0, var_name(graph.end_var(d)))];
        for &ci in graph.connections_out(d) {
            out_terms.push((1.0, var_name(graph.conn_var(ci))));
        }
        out_terms.push((-1.0, var_name(graph.det_var(d))));
        push_expr(&mut out, &format!(" flow_out_{d}:"), &out_terms, Some(("=", 0.0)));
    }
    for &class in graph.classes() {
        let k = budgets.for_class(class)?;
        let starts: Vec<(f64, String)> =
            graph.class_detections(class).iter().map(|&d| (1.0, var_name(graph.start_var(d)))).collect();
        push_expr(&mut out, &format!(" flow_source_{class}:"), &starts, Some(("=", k as f64)));
        let ends: Vec<(f64, String)> =
            graph.class_detections(class).iter().map(|&d| (1.0, var_name(graph.end_var(d)))).collect();
        push_expr(&mut out, &format!(" flow_sink_{class}:"), &ends, Some(("=", k as f64)));
    }
    for &(i, j, _) in q.entries() {
        let u = u_name(i, j);
        push_expr(
            &mut out,
            &format!(" local_a_{i}_{j}:"),
            &[(1.0, u.clone()), (-1.0, var_name(i))],
            Some(("<=", 0.0)),
        );
        push_expr(
            &mut out,
            &format!(" local_b_{i}_{j}:"),
            &[(1.0, u.clone()), (-1.0, var_name(j))],
            Some(("<=", 0.0)),
        );
        push_expr(
            &mut out,
            &format!(" local_c_{i}_{j}:"),
            &[(1.0, var_name(i)), (1.0, var_name(j)), (-1.0, u)],
            Some(("<=", 1.0)),
        );
    }

    out.push_str("Bounds\n");
    for i in 0..graph.n_vars() {
        let _ = writeln!(out, " 0 <= {} <= 1", var_name(i));
    }
    for &(i, j, _) in q.entries() {
        let _ = writeln!(out, " 0 <= {} <= 1", u_name(i, j));
    }

    if integer {
        out.push_str("Generals\n");
        let mut line = String::from(" ");
        let mut names: Vec<String> = (0..graph.n_vars()).map(var_name).collect();
        names.extend(q.entries().iter().map(|&(i, j, _)| u_name(i, j)));
        for name in names {
            if line.len() + name.len() + 1 > 200 {
                let _ = writeln!(out, "{line}");
                line = String::from(" ");
            }
            line.push_str(&name);
            line.push(' ');
        }
        if line.trim().is_empty() {
            out.pop();
        } else {
            let _ = writeln!(out, "{}", line.trim_end());
        }
    }
    out.push_str("End\n");
    Ok(out)
}

/// Writes `label: t1 + t2 - t3 ... [op rhs]`, wrapping long expressions.
/// Coefficients use the shortest round-trip float formatting.
fn push_expr(out: &mut String, label: &str, terms: &[(f64, String)], rel: Option<(&str, f64)>) {
    let mut line = String::from(label);
    for (pos, (coef, name)) in terms.iter().enumerate() {
        let mag = coef.abs();
        let piece = if pos == 0 {
            if *coef < 0.0 {
                format!(" - {mag} {name}")
            } else {
                format!(" {mag} {name}")
            }
        } else if *coef < 0.0 {
            format!(" - {mag} {name}")
        } else {
            format!(" + {mag} {name}")
        };
        if line.len() + piece.len() > 200 {
            let _ = writeln!(out, "{line}");
            line = String::from("  ");
        }
        line.push_str(&piece);
    }
    if let Some((op, rhs)) = rel {
        let _ = writeln!(out, "{line} {op} {rhs}");
    } else {
        let _ = writeln!(out, "{line}");
    }
}
