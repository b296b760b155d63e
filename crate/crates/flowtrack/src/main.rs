use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use flowtrack::pipeline::{run, RoundingChoice, RunConfig, RunRequest};

/// Multi-object tracker: min-cost-flow data association with pairwise
/// overlap/co-occurrence costs, solved by rounding a convex relaxation.
#[derive(Debug, Parser)]
#[command(name = "flowtrack", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long, value_name = "path")]
    config: PathBuf,
    /// Detections CSV (frame,id,x,y,w,h,score,class).
    #[arg(long, value_name = "path")]
    detections: PathBuf,
    /// Connections CSV (src_id,dst_id,strength); proposed from detection
    /// proximity when absent.
    #[arg(long, value_name = "path")]
    connections: Option<PathBuf>,
    /// Ground-truth CSV (frame,track_id,x,y,w,h); enables metrics output.
    #[arg(long, value_name = "path")]
    gt: Option<PathBuf>,
    /// Output directory for tracks, certificates, and metrics.
    #[arg(long, value_name = "dir")]
    out: PathBuf,
    /// Integer recovery to run; overrides the configured choice.
    #[arg(long, value_name = "fw|hamming|both")]
    rounding: Option<RoundingArg>,
    /// Also write the linearized problem to this path in LP format.
    #[arg(long, value_name = "path")]
    export_lp: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RoundingArg {
    #[value(name = "fw")]
    Fw,
    Hamming,
    Both,
}

impl From<RoundingArg> for RoundingChoice {
    fn from(arg: RoundingArg) -> Self {
        match arg {
            RoundingArg::Fw => RoundingChoice::FrankWolfe,
            RoundingArg::Hamming => RoundingChoice::Hamming,
            RoundingArg::Both => RoundingChoice::Both,
        }
    }
}

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let args = Args::parse();
    let config = RunConfig::from_file(&args.config)?;
    let req = RunRequest {
        config,
        detections: args.detections,
        connections: args.connections,
        ground_truth: args.gt,
        out_dir: args.out,
        rounding: args.rounding.map(RoundingChoice::from),
        export_lp: args.export_lp,
    };
    let summary = run(&req)?;

    let budgets = summary
        .budgets
        .iter()
        .map(|(class, n)| format!("{class}={n}"))
        .collect::<Vec<_>>()
        .join(" ");
    println!("track budgets: {budgets}");
    println!(
        "relaxed objective {:.6} (lower bound {:.6}, {} iterations)",
        summary.relaxed_objective, summary.lower_bound, summary.iterations
    );
    for out in &summary.outputs {
        println!(
            "{}: {} tracks, objective {:.6}, suboptimality {:.3e}",
            out.method,
            out.tracks.len(),
            out.certificate.integer_objective,
            out.certificate.suboptimality
        );
        if let Some(mot) = &out.mot {
            println!(
                "  mota {:.4}, motp {:.4}, id switches {}, mostly tracked {}/{}",
                mot.mota, mot.motp, mot.id_switches, mot.mostly_tracked, mot.gt_tracks
            );
        }
        if let Some(curves) = &out.redetection {
            let aps = curves
                .iter()
                .map(|c| format!("ap@{} {:.4}", c.delta_t, c.ap))
                .collect::<Vec<_>>()
                .join(", ");
            println!("  re-detection: {aps}");
        }
    }
    Ok(())
}
