//! Cross-class evidence sharing: body detections sometimes carry weak
//! (negative) confidence, which a body-only tracker drops, cutting the
//! track short. A head box sitting in the upper region of a body box is
//! independent evidence that the body is real. Rewarding head/body
//! co-occurrence lets strong heads pull weak bodies back into the tracks.

use flowtrack::flow::Budgets;
use flowtrack::metrics::clear_mot;
use flowtrack::model::{assemble_cost_vector, ObjectClass, TrackingGraph};
use flowtrack::pairwise::{build_cooccurrence_costs, prepare_objective, PairwiseCostSet};
use flowtrack::scenarios::{generate, Scenario, ScenarioKind, ScenarioSpec};
use flowtrack::solver::{frank_wolfe_relax, frank_wolfe_round, FrankWolfeOptions};
use flowtrack::tracks::extract_tracks;

fn body_recall(scene: &Scenario, graph: &TrackingGraph, q: PairwiseCostSet) -> flowtrack::Result<f64> {
    let costs = assemble_cost_vector(graph, 0.1, 0.01, 0.0, 0.0)?;
    let budgets = Budgets::Uniform(4);
    let shifted = prepare_objective(&costs, &q)?;
    let relaxed = frank_wolfe_relax(graph, &shifted, &budgets, &FrankWolfeOptions::default())?;
    let rounded = frank_wolfe_round(graph, &shifted, &relaxed.z_star, &budgets)?;
    let tracks = extract_tracks(&rounded, graph)?.filter_class(ObjectClass::Body);

    // Ground truth covers bodies only, so heads are scored by what they
    // recover, not tracked for their own sake.
    let mot = clear_mot(&tracks, &scene.ground_truth, 0.5);
    println!(
        "  body recall {:.4}, mota {:.4}, {} false negatives",
        mot.recall, mot.mota, mot.false_negatives
    );
    Ok(mot.recall)
}

fn main() -> flowtrack::Result<()> {
    let mut spec = ScenarioSpec::new(ScenarioKind::HeadBodyDropout);
    spec.n_frames = 60;
    spec.n_objects = 4;
    spec.dropout_rate = 0.3;
    spec.seed = 8;
    let scene = generate(&spec)?;
    let graph = scene.build_graph(1)?;
    let weak = scene.detections.iter().filter(|d| d.confidence < 0.0).count();
    let heads =
        scene.detections.iter().filter(|d| d.class == ObjectClass::Head).count();
    println!(
        "scene: {} detections ({} heads, {} weak bodies), 4 objects over 60 frames",
        scene.detections.len(),
        heads,
        weak
    );

    println!("bodies and heads tracked independently:");
    let plain = body_recall(&scene, &graph, PairwiseCostSet::new())?;

    let q = build_cooccurrence_costs(&graph, 0.0223, 0.5, 0.25)?;
    println!("with co-occurrence reward (q_co = 0.0223): {} head/body couplings", q.len());
    let rewarded = body_recall(&scene, &graph, q)?;

    println!("recall gain from sharing evidence across classes: {:+.4}", rewarded - plain);
    Ok(())
}
