//! The whole pipeline driven through files, exactly as the `flowtrack`
//! binary runs it: detections and ground truth go in as CSV, a JSON config
//! picks the costs and the rounding, and every artifact comes back out as
//! a file. Connections are proposed from detection proximity because none
//! are supplied.

use flowtrack::io;
use flowtrack::pipeline::{run, RoundingChoice, RunConfig, RunRequest, TrackCount};
use flowtrack::scenarios::{generate, ScenarioKind, ScenarioSpec};

fn main() -> flowtrack::Result<()> {
    let dir = tempfile::tempdir()?;
    let mut spec = ScenarioSpec::new(ScenarioKind::CrossingPair);
    spec.n_frames = 24;
    spec.n_objects = 4;
    spec.seed = 9;
    let scene = generate(&spec)?;

    let detections = dir.path().join("detections.csv");
    let ground_truth = dir.path().join("ground_truth.csv");
    io::write_detections(&detections, &scene.detections)?;
    io::write_ground_truth(&ground_truth, &scene.ground_truth)?;

    let config = RunConfig {
        conn_weight: 0.01,
        q_co: 0.0, // single-class scene
        k: TrackCount::Keyword("auto".into()),
        k_max: 10,
        max_skip: 3,
        ..RunConfig::default()
    };

    let out_dir = dir.path().join("out");
    let summary = run(&RunRequest {
        config,
        detections,
        connections: None, // proposed from proximity
        ground_truth: Some(ground_truth),
        out_dir: out_dir.clone(),
        rounding: Some(RoundingChoice::Both),
        export_lp: None,
    })?;

    println!(
        "budgets {:?}, relaxed objective {:.6}, lower bound {:.6}, {} iterations\n",
        summary.budgets, summary.relaxed_objective, summary.lower_bound, summary.iterations
    );
    for output in &summary.outputs {
        let mot = output.mot.as_ref().unwrap();
        println!(
            "{}: {} tracks, suboptimality {:.3e}, mota {:.4}",
            output.method,
            output.tracks.len(),
            output.certificate.suboptimality,
            mot.mota
        );
    }

    println!("\nartifacts:");
    let mut names: Vec<_> = std::fs::read_dir(&out_dir)?
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    for name in &names {
        let len = std::fs::metadata(out_dir.join(name))?.len();
        println!("  {name} ({len} bytes)");
    }

    let tracks_csv = std::fs::read_to_string(out_dir.join("tracks_frank_wolfe.csv"))?;
    println!("\ntracks_frank_wolfe.csv starts with:");
    for line in tracks_csv.lines().take(4) {
        println!("  {line}");
    }
    let reread = io::read_tracks(&out_dir.join("tracks_frank_wolfe.csv"))?;
    println!("read back: {} tracks, ids {:?}", reread.len(),
        reread.tracks.iter().map(|t| t.id).collect::<Vec<_>>());
    Ok(())
}
