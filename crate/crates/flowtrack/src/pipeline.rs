//! End-to-end runs: files in, tracks plus certificates (and metrics) out.
//!
//! A run reads detections (and optionally connections and ground truth),
//! assembles the graph and costs from a JSON configuration, solves the
//! relaxation, rounds it, and writes everything into an output directory:
//!
//! ```text
//! resolved_config.json          config echo with the track counts resolved
//! tracks_<method>.csv           one file per rounding method
//! certificate_<method>.json     bound gap of that method's solution
//! metrics_<method>.json         CLEAR-MOT numbers (only with ground truth)
//! redetection_<method>.json     re-detection curves (only with ground truth)
//! redetection_<method>.csv      the same curves as flat precision/recall rows
//! ```
//!
//! Runs are deterministic: the same inputs produce byte-identical outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::flow::Budgets;
use crate::io;
use crate::lp::export_local_lp_with;
use crate::metrics::{clear_mot, redetection_profile, GroundTruth, MotReport, PRCurve, DEFAULT_IOU_THRESH};
use crate::model::{
    assemble_cost_vector, build_graph, propose_connections, ObjectClass, TrackingGraph,
};
use crate::pairwise::{
    build_cooccurrence_costs, build_overlap_costs, normalize_objective, prepare_objective,
    PairwiseCostSet,
};
use crate::solver::{
    auto_track_counts, certificate, frank_wolfe_relax, frank_wolfe_round, hamming_round,
    Certificate, FrankWolfeOptions, RoundingMethod,
};
use crate::tracks::{extract_tracks, TrackSet};
use crate::{Error, Result};

/// Number of tracks to route: a fixed count for every class, explicit
/// per-class counts, or the string `"auto"` to pick counts that minimize the
/// full objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrackCount {
    Fixed(usize),
    PerClass(BTreeMap<ObjectClass, usize>),
    Keyword(String),
}

impl Default for TrackCount {
    fn default() -> Self {
        TrackCount::Keyword("auto".into())
    }
}

impl TrackCount {
    fn validate(&self) -> Result<()> {
        match self {
            TrackCount::Keyword(s) if s != "auto" => Err(Error::Config(format!(
                "k must be a number, a per-class object, or \"auto\"; got {s:?}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Which integer recoveries to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingChoice {
    FrankWolfe,
    Hamming,
    Both,
}

impl RoundingChoice {
    pub fn methods(self) -> Vec<RoundingMethod> {
        match self {
            RoundingChoice::FrankWolfe => vec![RoundingMethod::FrankWolfe],
            RoundingChoice::Hamming => vec![RoundingMethod::Hamming],
            RoundingChoice::Both => vec![RoundingMethod::FrankWolfe, RoundingMethod::Hamming],
        }
    }
}

/// Everything a run needs besides the input files. Unknown fields are
/// rejected; absent fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Weight on detection confidences (detection cost is `-weight * score`).
    pub det_weight: f64,
    /// Weight on connection strengths.
    pub conn_weight: f64,
    /// Cost of opening a track.
    pub start_cost: f64,
    /// Cost of closing a track.
    pub end_cost: f64,
    /// Penalty per same-class overlapping detection pair; 0 disables.
    pub q_ov: f64,
    /// Reward per head/body co-occurrence; 0 disables.
    pub q_co: f64,
    /// Overlap threshold used by both pairwise terms.
    pub o_thres: f64,
    /// Fraction of a body box (from the top) where its head lives.
    pub head_region_frac: f64,
    /// Track counts; see [`TrackCount`].
    pub k: TrackCount,
    /// Cap on the per-class count that `"auto"` may pick.
    pub k_max: usize,
    /// Largest frame gap a connection may bridge.
    pub max_skip: u32,
    /// Duality-gap stopping tolerance (normalized objective units).
    pub gap_tol: f64,
    /// Iteration cap for the relaxation.
    pub max_iters: usize,
    /// Which integer recoveries to run.
    pub rounding: RoundingChoice,
    /// Free-form seed echoed into the resolved config; the pipeline itself
    /// draws no random numbers.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            det_weight: 0.1,
            conn_weight: 1.0,
            start_cost: 0.0,
            end_cost: 0.0,
            q_ov: 0.0223,
            q_co: 0.0223,
            o_thres: 0.5,
            head_region_frac: 0.25,
            k: TrackCount::default(),
            k_max: 50,
            max_skip: 10,
            gap_tol: 1e-6,
            max_iters: 2000,
            rounding: RoundingChoice::FrankWolfe,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("det_weight", self.det_weight),
            ("conn_weight", self.conn_weight),
            ("q_ov", self.q_ov),
            ("q_co", self.q_co),
            ("gap_tol", self.gap_tol),
        ];
        for (what, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{what} must be finite and nonnegative, got {v}")));
            }
        }
        for (what, v) in [("start_cost", self.start_cost), ("end_cost", self.end_cost)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{what} must be finite, got {v}")));
            }
        }
        for (what, v) in [("o_thres", self.o_thres), ("head_region_frac", self.head_region_frac)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{what} must lie in (0, 1], got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.k_max == 0 {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        if self.max_skip == 0 {
            return Err(Error::Config("max_skip must be at least 1".into()));
        }
        self.k.validate()
    }

    /// Parses a configuration from a JSON file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }
}

/// One run: configuration plus file locations.
#[derive(Debug, Clone)]
pub struct RunRequest {
    pub config: RunConfig,
    pub detections: PathBuf,
    /// Absent: connections are proposed from detection proximity.
    pub connections: Option<PathBuf>,
    /// Absent: no metrics are computed.
    pub ground_truth: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Overrides the configured rounding choice when set.
    pub rounding: Option<RoundingChoice>,
    /// Writes the linearized problem to this path when set (relaxed variant,
    /// normalized objective units).
    pub export_lp: Option<PathBuf>,
}

/// Results of one rounding method.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub method: RoundingMethod,
    pub tracks: TrackSet,
    pub certificate: Certificate,
    pub mot: Option<MotReport>,
    pub redetection: Option<Vec<PRCurve>>,
}

/// What a run produced, mirrored on disk in the output directory.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub resolved_config: RunConfig,
    pub budgets: BTreeMap<ObjectClass, usize>,
    pub relaxed_objective: f64,
    pub lower_bound: f64,
    pub iterations: usize,
    pub outputs: Vec<MethodOutput>,
}

/// Runs the whole pipeline; see the module docs for the artifact layout.
pub fn run(req: &RunRequest) -> Result<RunSummary> {
    req.config.validate()?;
    let config = &req.config;

    let detections = io::read_detections(&req.detections)?;
    if detections.is_empty() {
        return Err(Error::Config(format!(
            "no detections in {}",
            req.detections.display()
        )));
    }
    let connections = match &req.connections {
        Some(path) => io::read_connections(path)?,
        None => {
            let proposed = propose_connections(&detections, config.max_skip);
            log::info!(
                "no connections file; proposed {} connections from proximity",
                proposed.len()
            );
            proposed
        }
    };
    log::info!("{} detections, {} connections", detections.len(), connections.len());

    let graph = build_graph(detections, connections, 1, config.max_skip)?;
    let costs = assemble_cost_vector(
        &graph,
        config.det_weight,
        config.conn_weight,
        config.start_cost,
        config.end_cost,
    )?;
    let pairwise = assemble_pairwise(&graph, config)?;
    log::info!("{} pairwise cost entries", pairwise.len());

    let budgets_map = resolve_budgets(&graph, config, &costs, &pairwise)?;
    log::info!("track budgets: {budgets_map:?}");
    let budgets = Budgets::PerClass(budgets_map.clone());

    let shifted = prepare_objective(&costs, &pairwise)?;
    let opts = FrankWolfeOptions { gap_tol: config.gap_tol, max_iters: config.max_iters };
    let relaxed = frank_wolfe_relax(&graph, &shifted, &budgets, &opts)?;
    log::info!(
        "relaxation: objective {:.6e}, lower bound {:.6e}, {} iterations",
        relaxed.relaxed_objective,
        relaxed.lower_bound,
        relaxed.iterations
    );

    let gt = match &req.ground_truth {
        Some(path) => Some(io::read_ground_truth(path)?),
        None => None,
    };

    std::fs::create_dir_all(&req.out_dir)?;
    let mut resolved_config = config.clone();
    resolved_config.k = TrackCount::PerClass(budgets_map.clone());
    write_json(&req.out_dir.join("resolved_config.json"), &resolved_config)?;

    if let Some(lp_path) = &req.export_lp {
        let (c_n, q_n, _) = normalize_objective(&costs, &pairwise)?;
        export_local_lp_with(&graph, &c_n, &q_n, &budgets, lp_path, false)?;
        log::info!("exported linearized problem to {}", lp_path.display());
    }

    let choice = req.rounding.unwrap_or(config.rounding);
    let mut outputs = Vec::new();
    for method in choice.methods() {
        let rounded = match method {
            RoundingMethod::FrankWolfe => {
                frank_wolfe_round(&graph, &shifted, &relaxed.z_star, &budgets)?
            }
            RoundingMethod::Hamming => hamming_round(&graph, &relaxed.z_star, &budgets)?,
        };
        let cert = certificate(&rounded, &relaxed, &shifted, method)?;
        let tracks = extract_tracks(&rounded, &graph)?;
        log::info!(
            "{method}: {} tracks, suboptimality {:.3e}",
            tracks.len(),
            cert.suboptimality
        );

        io::write_tracks(&req.out_dir.join(format!("tracks_{method}.csv")), &tracks)?;
        write_json(&req.out_dir.join(format!("certificate_{method}.json")), &cert)?;

        let (mot, redetection) = match &gt {
            Some(gt) => {
                let eval = eval_tracks(&graph, &tracks);
                let mot = clear_mot(&eval, gt, DEFAULT_IOU_THRESH);
                let deltas = default_probe_gaps(gt);
                let curves = redetection_profile(&eval, gt, &deltas, DEFAULT_IOU_THRESH);
                write_json(&req.out_dir.join(format!("metrics_{method}.json")), &mot)?;
                write_json(&req.out_dir.join(format!("redetection_{method}.json")), &curves)?;
                io::write_pr_curves(
                    &req.out_dir.join(format!("redetection_{method}.csv")),
                    &curves,
                )?;
                (Some(mot), Some(curves))
            }
            None => (None, None),
        };
        outputs.push(MethodOutput { method, tracks, certificate: cert, mot, redetection });
    }

    Ok(RunSummary {
        resolved_config,
        budgets: budgets_map,
        relaxed_objective: relaxed.relaxed_objective,
        lower_bound: relaxed.lower_bound,
        iterations: relaxed.iterations,
        outputs,
    })
}

/// Ground truth carries no class, so score body tracks when both classes
/// were tracked; with a single class everything is scored.
fn eval_tracks(graph: &TrackingGraph, tracks: &TrackSet) -> TrackSet {
    if graph.classes().contains(&ObjectClass::Body) && graph.classes().len() > 1 {
        tracks.filter_class(ObjectClass::Body)
    } else {
        tracks.clone()
    }
}

/// Probe gaps for the re-detection curves: 0, 1, and half / all of the
/// median annotated track span.
fn default_probe_gaps(gt: &GroundTruth) -> Vec<u32> {
    let span = gt.median_track_span();
    let mut gaps = vec![0, 1, span / 2, span];
    gaps.sort_unstable();
    gaps.dedup();
    gaps
}

fn assemble_pairwise(graph: &TrackingGraph, config: &RunConfig) -> Result<PairwiseCostSet> {
    let mut q = PairwiseCostSet::new();
    if config.q_ov > 0.0 {
        let overlap = build_overlap_costs(graph, config.q_ov, config.o_thres)?;
        q.merge(&overlap)?;
    }
    if config.q_co > 0.0 {
        let both = graph.classes().contains(&ObjectClass::Body)
            && graph.classes().contains(&ObjectClass::Head);
        if both {
            let co = build_cooccurrence_costs(
                graph,
                config.q_co,
                config.o_thres,
                config.head_region_frac,
            )?;
            q.merge(&co)?;
        } else {
            log::info!("co-occurrence costs skipped: only one class present");
        }
    }
    Ok(q)
}

fn resolve_budgets(
    graph: &TrackingGraph,
    config: &RunConfig,
    costs: &crate::model::CostVector,
    pairwise: &PairwiseCostSet,
) -> Result<BTreeMap<ObjectClass, usize>> {
    match &config.k {
        TrackCount::Keyword(_) => auto_track_counts(graph, costs, pairwise, config.k_max),
        TrackCount::Fixed(n) => {
            Ok(graph.classes().iter().map(|&class| (class, *n)).collect())
        }
        TrackCount::PerClass(map) => {
            let mut out = BTreeMap::new();
            for &class in graph.classes() {
                match map.get(&class) {
                    Some(&n) => {
                        out.insert(class, n);
                    }
                    None => return Err(Error::MissingClass(class)),
                }
            }
            for class in map.keys() {
                if !graph.classes().contains(class) {
                    log::warn!("configured count for class {class} ignored: no such detections");
                }
            }
            Ok(out)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{generate, ScenarioKind, ScenarioSpec};

    fn write_scene(kind: ScenarioKind, dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
        let mut spec = ScenarioSpec::new(kind);
        spec.n_frames = 10;
        spec.n_objects = 3;
        if kind == ScenarioKind::HeadBodyDropout {
            spec.dropout_rate = 0.3;
        }
        let s = generate(&spec).unwrap();
        let dets = dir.join("detections.csv");
        let conns = dir.join("connections.csv");
        let gt = dir.join("gt.csv");
        io::write_detections(&dets, &s.detections).unwrap();
        io::write_connections(&conns, &s.connections).unwrap();
        io::write_ground_truth(&gt, &s.ground_truth).unwrap();
        (dets, conns, gt)
    }

    fn base_request(dir: &Path) -> RunRequest {
        let (dets, conns, gt) = write_scene(ScenarioKind::ParallelCrowd, dir);
        RunRequest {
            config: RunConfig::default(),
            detections: dets,
            connections: Some(conns),
            ground_truth: Some(gt),
            out_dir: dir.join("out"),
            rounding: None,
            export_lp: None,
        }
    }

    #[test]
    fn config_defaults_parse_from_an_empty_object() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.k, TrackCount::Keyword("auto".into()));
        assert_eq!(c.q_ov, 0.0223);
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        let err = serde_json::from_str::<RunConfig>("{\"det_wieght\": 1.0}");
        assert!(err.is_err());
    }

    #[test]
    fn all_three_track_count_forms_parse() {
        let c: RunConfig = serde_json::from_str("{\"k\": 3}").unwrap();
        assert_eq!(c.k, TrackCount::Fixed(3));
        let c: RunConfig = serde_json::from_str("{\"k\": \"auto\"}").unwrap();
        assert_eq!(c.k, TrackCount::Keyword("auto".into()));
        let c: RunConfig =
            serde_json::from_str("{\"k\": {\"body\": 2, \"head\": 1}}").unwrap();
        match &c.k {
            TrackCount::PerClass(m) => {
                assert_eq!(m[&ObjectClass::Body], 2);
                assert_eq!(m[&ObjectClass::Head], 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        let c: RunConfig = serde_json::from_str("{\"k\": \"many\"}").unwrap();
        assert!(c.validate().is_err(), "only \"auto\" is a valid keyword");
    }

    #[test]
    fn full_run_writes_all_artifacts_and_tracks_every_object() {
        let dir = tempfile::tempdir().unwrap();
        let req = base_request(dir.path());
        let summary = run(&req).unwrap();
        assert_eq!(summary.budgets[&ObjectClass::Body], 3, "auto count finds all lanes");
        assert_eq!(summary.outputs.len(), 1);
        let out = &summary.outputs[0];
        assert_eq!(out.tracks.len(), 3);
        let mot = out.mot.as_ref().unwrap();
        assert!(mot.mota > 0.99, "clean scene should track perfectly, mota {}", mot.mota);
        for name in [
            "resolved_config.json",
            "tracks_frank_wolfe.csv",
            "certificate_frank_wolfe.json",
            "metrics_frank_wolfe.json",
            "redetection_frank_wolfe.json",
            "redetection_frank_wolfe.csv",
        ] {
            assert!(req.out_dir.join(name).exists(), "{name} missing");
        }
        let pr = std::fs::read_to_string(req.out_dir.join("redetection_frank_wolfe.csv")).unwrap();
        assert!(pr.starts_with("delta_t,threshold,precision,recall\n"));
        // The resolved echo parses and carries per-class counts.
        let echoed = RunConfig::from_file(&req.out_dir.join("resolved_config.json")).unwrap();
        match echoed.k {
            TrackCount::PerClass(m) => assert_eq!(m[&ObjectClass::Body], 3),
            other => panic!("expected resolved counts, got {other:?}"),
        }
    }

    #[test]
    fn both_roundings_write_both_sets_of_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut req = base_request(dir.path());
        req.rounding = Some(RoundingChoice::Both);
        let summary = run(&req).unwrap();
        assert_eq!(summary.outputs.len(), 2);
        assert!(req.out_dir.join("tracks_frank_wolfe.csv").exists());
        assert!(req.out_dir.join("tracks_hamming.csv").exists());
        assert!(req.out_dir.join("certificate_hamming.json").exists());
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let req = base_request(dir.path());
        run(&req).unwrap();
        let mut first = BTreeMap::new();
        for entry in std::fs::read_dir(&req.out_dir).unwrap() {
            let p = entry.unwrap().path();
            first.insert(p.file_name().unwrap().to_owned(), std::fs::read(&p).unwrap());
        }
        run(&req).unwrap();
        for (name, bytes) in &first {
            let again = std::fs::read(req.out_dir.join(name)).unwrap();
            assert_eq!(&again, bytes, "{name:?} changed between identical runs");
        }
    }

    #[test]
    fn missing_connections_file_falls_back_to_proposals() {
        let dir = tempfile::tempdir().unwrap();
        let mut req = base_request(dir.path());
        req.connections = None;
        let summary = run(&req).unwrap();
        assert_eq!(summary.outputs[0].tracks.len(), 3);
    }

    #[test]
    fn fixed_and_per_class_counts_are_respected() {
        let dir = tempfile::tempdir().unwrap();
        let mut req = base_request(dir.path());
        req.config.k = TrackCount::Fixed(2);
        let summary = run(&req).unwrap();
        assert_eq!(summary.budgets[&ObjectClass::Body], 2);
        assert_eq!(summary.outputs[0].tracks.len(), 2);

        req.config.k = TrackCount::PerClass([(ObjectClass::Head, 1)].into());
        let err = run(&req).unwrap_err();
        assert!(matches!(err, Error::MissingClass(ObjectClass::Body)), "{err}");
    }

    #[test]
    fn lp_export_hook_writes_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut req = base_request(dir.path());
        req.export_lp = Some(dir.path().join("problem.lp"));
        run(&req).unwrap();
        let text = std::fs::read_to_string(dir.path().join("problem.lp")).unwrap();
        assert!(text.starts_with("\\ "));
        assert!(text.contains("Minimize"));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn head_body_scene_runs_with_cooccurrence_costs() {
        let dir = tempfile::tempdir().unwrap();
        let (dets, conns, gt) = write_scene(ScenarioKind::HeadBodyDropout, dir.path());
        let config = RunConfig { k: TrackCount::Fixed(3), ..RunConfig::default() };
        let req = RunRequest {
            config,
            detections: dets,
            connections: Some(conns),
            ground_truth: Some(gt),
            out_dir: dir.path().join("out"),
            rounding: None,
            export_lp: None,
        };
        let summary = run(&req).unwrap();
        // Three body tracks plus three head tracks, but metrics are scored
        // on bodies only.
        let out = &summary.outputs[0];
        assert_eq!(out.tracks.len(), 6);
        assert!(out.mot.is_some());
    }

    #[test]
    fn empty_detection_files_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let dets = dir.path().join("detections.csv");
        std::fs::write(&dets, "frame,id,x,y,w,h,score,class\n").unwrap();
        let req = RunRequest {
            config: RunConfig::default(),
            detections: dets,
            connections: None,
            ground_truth: None,
            out_dir: dir.path().join("out"),
            rounding: None,
            export_lp: None,
        };
        assert!(matches!(run(&req), Err(Error::Config(_))));
    }
}
