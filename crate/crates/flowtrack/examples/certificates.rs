//! Suboptimality certificates: the convex relaxation yields a lower bound
//! on the best integer objective, so any rounded solution can report how
//! far, at worst, it sits from the (unknown) integer optimum. The instance
//! here is small enough for exhaustive enumeration, which confirms that the
//! true optimum really does lie inside every certified interval.

use flowtrack::flow::Budgets;
use flowtrack::pairwise::prepare_objective;
use flowtrack::scenarios::{brute_force_iqp_exact, random_instance};
use flowtrack::solver::{
    certificate, frank_wolfe_relax, frank_wolfe_round, hamming_round, FrankWolfeOptions,
    RoundingMethod,
};

fn main() -> flowtrack::Result<()> {
    let inst = random_instance(6, 12, true);
    println!(
        "random instance: {} detections, {} connections, pairwise couplings: {}",
        inst.graph.n_detections(),
        inst.graph.n_connections(),
        inst.pairwise.len()
    );

    // Normalize, then shift the quadratic to be convex; binary points keep
    // their objective value, so bounds transfer to the original problem.
    let shifted = prepare_objective(&inst.costs, &inst.pairwise)?;
    let budgets = Budgets::Uniform(1);
    let relaxed = frank_wolfe_relax(&inst.graph, &shifted, &budgets, &FrankWolfeOptions::default())?;
    let fractional =
        relaxed.z_star.iter().filter(|&&v| v > 1e-9 && v < 1.0 - 1e-9).count();
    println!(
        "relaxation: objective {:.6}, lower bound {:.6}, {} iterations, {} fractional variables",
        relaxed.relaxed_objective, relaxed.lower_bound, relaxed.iterations, fractional
    );
    for (it, gap) in &relaxed.gap_trace {
        println!("  iteration {it:2}: duality gap {gap:.3e}");
    }

    let roundings = [
        ("gradient rounding", RoundingMethod::FrankWolfe,
            frank_wolfe_round(&inst.graph, &shifted, &relaxed.z_star, &budgets)?),
        ("hamming rounding ", RoundingMethod::Hamming,
            hamming_round(&inst.graph, &relaxed.z_star, &budgets)?),
    ];
    let mut certified = Vec::new();
    for (name, method, rounded) in roundings {
        let cert = certificate(&rounded, &relaxed, &shifted, method)?;
        println!(
            "{name}: integer objective {:.6}, certified within {:.3e} of the integer optimum",
            cert.integer_objective, cert.suboptimality
        );
        certified.push(cert);
    }

    // The exhaustive optimum must sit inside [lower bound, rounded value]
    // for both roundings; the certificate bounds the true distance.
    let oracle = brute_force_iqp_exact(&inst.graph, &inst.costs, &inst.pairwise, 1)?;
    let optimum = oracle.optimal_objective / shifted.normalization;
    println!(
        "exhaustive check over {} path sets: optimum {:.6} (normalized)",
        oracle.n_enumerated, optimum
    );
    for cert in &certified {
        let true_dist = cert.integer_objective - optimum;
        assert!(relaxed.lower_bound <= optimum + 1e-9 && optimum <= cert.integer_objective + 1e-9);
        println!(
            "  {:?}: true distance {:.3e} <= certified {:.3e}",
            cert.method, true_dist, cert.suboptimality
        );
    }
    Ok(())
}
