//! Exporting the linearized problem in LP format: each pairwise product
//! z_i * z_j becomes an auxiliary variable u_ij tied to its factors by the
//! standard three linearization rows. Any off-the-shelf LP/MIP solver can
//! then reproduce (continuous) or beat (integral) the relaxation, which is
//! how the solver in this crate is cross-checked.

use flowtrack::flow::Budgets;
use flowtrack::lp::{export_local_lp, render_local_lp};
use flowtrack::model::assemble_cost_vector;
use flowtrack::pairwise::build_overlap_costs;
use flowtrack::scenarios::{generate, ScenarioKind, ScenarioSpec};

fn main() -> flowtrack::Result<()> {
    let mut spec = ScenarioSpec::new(ScenarioKind::DuplicateDetections);
    spec.n_frames = 3;
    spec.n_objects = 2;
    spec.duplicate_rate = 1.0;
    spec.seed = 1;
    let scene = generate(&spec)?;
    let graph = scene.build_graph(1)?;
    let costs = assemble_cost_vector(&graph, 0.1, 0.01, 0.0, 0.0)?;
    let q = build_overlap_costs(&graph, 0.0223, 0.5)?;

    let text = render_local_lp(&graph, &costs, &q, &Budgets::Uniform(2), false)?;
    println!(
        "{} detections, {} couplings -> {} flow variables + {} products, {} constraint rows\n",
        graph.n_detections(),
        q.len(),
        graph.n_vars(),
        q.len(),
        2 * graph.n_detections() + 2 * graph.classes().len() + 3 * q.len()
    );

    // One representative line per row family; the objective line is long.
    let sample = |prefix: &str, n: usize| {
        text.lines()
            .filter(|l| l.trim_start().starts_with(prefix))
            .take(n)
            .map(|l| {
                if l.len() > 90 {
                    format!("{} ...", &l[..90])
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    for (prefix, n) in [
        ("\\", 2),
        ("obj:", 1),
        ("flow_in_0:", 1),
        ("flow_out_0:", 1),
        ("flow_source_body:", 1),
        ("flow_sink_body:", 1),
        ("local_a_0_1:", 1),
        ("local_b_0_1:", 1),
        ("local_c_0_1:", 1),
        ("0 <= z0 ", 1),
        ("0 <= u_0_1 ", 1),
    ] {
        println!("{}", sample(prefix, n));
    }
    println!("  ... ({} lines total)\n", text.lines().count());

    let dir = std::env::temp_dir();
    let continuous = dir.join("tracking_relaxation.lp");
    let integral = dir.join("tracking_integer.lp");
    export_local_lp(&graph, &costs, &q, 2, &continuous, false)?;
    export_local_lp(&graph, &costs, &q, 2, &integral, true)?;
    println!("wrote {} (continuous bounds)", continuous.display());
    println!("wrote {} (same model plus a Generals section)", integral.display());
    println!("solve with e.g.:  scipy.optimize.linprog / HiGHS / CBC / Gurobi");
    Ok(())
}
