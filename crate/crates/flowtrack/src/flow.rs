//! Exact min-cost flow over the candidate graph.
//!
//! Each detection is split into an in-node and an out-node joined by a
//! unit-capacity edge carrying the detection cost, so selecting a detection
//! and routing a track through it are the same thing. A virtual source feeds
//! every detection's in-node and every out-node drains into a virtual sink;
//! pushing exactly `k` units of flow selects `k` node-disjoint tracks.
//!
//! The solver runs successive shortest paths with node potentials: an initial
//! pass in topological order absorbs negative edge costs (the graph is a DAG
//! before any augmentation), after which every augmentation is a Dijkstra
//! search on reduced costs. Costs of successive augmenting paths are
//! nondecreasing, which makes the objective convex in `k` and lets
//! [`solve_best_k`] stop at the first non-improving path.
//!
//! Classes never exchange flow, so a graph holding several classes is solved
//! one class at a time against the shared variable space.

use std::collections::BTreeMap;

use crate::model::{CostVector, ObjectClass, TrackingGraph};
use crate::{Error, Result};

/// Track budgets for a solve: either the same count for every class in the
/// graph or an explicit per-class assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Budgets {
    Uniform(usize),
    PerClass(BTreeMap<ObjectClass, usize>),
}

impl Budgets {
    pub fn uniform(k: usize) -> Self {
        Budgets::Uniform(k)
    }

    pub fn per_class<I: IntoIterator<Item = (ObjectClass, usize)>>(iter: I) -> Self {
        Budgets::PerClass(iter.into_iter().collect())
    }

    /// Budget for one class. `PerClass` maps must cover every class asked for.
    pub fn for_class(&self, class: ObjectClass) -> Result<usize> {
        match self {
            Budgets::Uniform(k) => Ok(*k),
            Budgets::PerClass(map) => map
                .get(&class)
                .copied()
                .ok_or_else(|| Error::Config(format!("no track budget given for class {class}"))),
        }
    }

    /// Total budget over the classes present in `graph`.
    pub fn total(&self, graph: &TrackingGraph) -> Result<usize> {
        let mut sum = 0;
        for &c in graph.classes() {
            sum += self.for_class(c)?;
        }
        Ok(sum)
    }
}

/// A vertex of the flow polytope (or, for relaxed callers, any point whose
/// objective was evaluated against some cost vector).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    /// Value per variable, in graph variable order. Exactly 0.0 or 1.0 when
    /// produced by this module.
    pub z: Vec<f64>,
    /// Linear objective of `z` under the costs the solve was given.
    pub objective: f64,
    /// Whether every entry is exactly 0 or 1.
    pub is_integer: bool,
    /// Number of tracks routed (active start edges, summed over classes).
    pub k_used: usize,
}

impl FlowSolution {
    /// Checks bounds, flow conservation at every detection, and per-class
    /// equality of started and ended tracks. Works for fractional points too.
    pub fn validate(&self, graph: &TrackingGraph) -> Result<()> {
        if self.z.len() != graph.n_vars() {
            return Err(Error::LengthMismatch {
                what: "solution vector",
                got: self.z.len(),
                expected: graph.n_vars(),
            });
        }
        const TOL: f64 = 1e-9;
        for (i, &v) in self.z.iter().enumerate() {
            if !v.is_finite() || !(-TOL..=1.0 + TOL).contains(&v) {
                return Err(Error::FractionalSolution { index: i, value: v });
            }
        }
        for d in graph.detections() {
            let node = self.z[graph.det_var(d.id)];
            let inflow = self.z[graph.start_var(d.id)]
                + graph.connections_in(d.id).iter().map(|&c| self.z[graph.conn_var(c)]).sum::<f64>();
            let outflow = self.z[graph.end_var(d.id)]
                + graph.connections_out(d.id).iter().map(|&c| self.z[graph.conn_var(c)]).sum::<f64>();
            if (inflow - node).abs() > TOL || (outflow - node).abs() > TOL {
                return Err(Error::ConservationViolated { detection: d.id, inflow, outflow, node });
            }
        }
        for &class in graph.classes() {
            let ids = graph.class_detections(class);
            let started: f64 = ids.iter().map(|&d| self.z[graph.start_var(d)]).sum();
            let ended: f64 = ids.iter().map(|&d| self.z[graph.end_var(d)]).sum();
            if (started - ended).abs() > TOL {
                return Err(Error::ConservationViolated {
                    detection: ids[0],
                    inflow: started,
                    outflow: ended,
                    node: f64::NAN,
                });
            }
        }
        Ok(())
    }
}

/// Solves for exactly `k` tracks per class. `k = 0` returns the zero vector.
pub fn solve_min_cost_flow(graph: &TrackingGraph, costs: &CostVector, k: usize) -> Result<FlowSolution> {
    solve_with_budgets(graph, costs, &Budgets::Uniform(k))
}

/// Solves for an explicit per-class budget.
pub fn solve_with_budgets(
    graph: &TrackingGraph,
    costs: &CostVector,
    budgets: &Budgets,
) -> Result<FlowSolution> {
    solve_inner(graph, costs, budgets, Mode::Exact).map(|(s, _)| s)
}

/// Like [`solve_with_budgets`] but also returns the cost of every augmenting
/// path in the order taken. Within one class these are nondecreasing.
pub fn solve_with_trace(
    graph: &TrackingGraph,
    costs: &CostVector,
    budgets: &Budgets,
) -> Result<(FlowSolution, Vec<f64>)> {
    solve_inner(graph, costs, budgets, Mode::Exact)
}

/// Minimizes over all track counts from 0 to `k_max` per class: augments
/// while the next shortest path still has negative cost. Because path costs
/// are nondecreasing, stopping early is exact.
pub fn solve_best_k(graph: &TrackingGraph, costs: &CostVector, k_max: usize) -> Result<FlowSolution> {
    solve_inner(graph, costs, &Budgets::Uniform(k_max), Mode::Best).map(|(s, _)| s)
}

/// Linear minimization oracle over the `budgets`-track polytope: the exact
/// min-cost flow under arbitrary (also negative) costs. Every answer is a
/// 0/1 vertex.
pub fn lmo(graph: &TrackingGraph, costs: &CostVector, budgets: &Budgets) -> Result<FlowSolution> {
    solve_with_budgets(graph, costs, budgets)
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    /// Route exactly the requested budget or fail.
    Exact,
    /// Treat the budget as a cap and stop at the first non-negative path.
    Best,
}

/// Stop threshold for `Mode::Best`: a path is only worth taking if it lowers
/// the objective by more than this.
const IMPROVEMENT_EPS: f64 = 1e-12;

fn solve_inner(
    graph: &TrackingGraph,
    costs: &CostVector,
    budgets: &Budgets,
    mode: Mode,
) -> Result<(FlowSolution, Vec<f64>)> {
    if costs.len() != graph.n_vars() {
        return Err(Error::LengthMismatch {
            what: "cost vector",
            got: costs.len(),
            expected: graph.n_vars(),
        });
    }
    let mut z = vec![0.0; graph.n_vars()];
    let mut k_used = 0;
    let mut path_costs = Vec::new();
    for &class in graph.classes() {
        let k = budgets.for_class(class)?;
        if k == 0 {
            continue;
        }
        let mut net = ClassNetwork::build(graph, costs, class);
        let routed = net.route(k, mode, &mut path_costs);
        if mode == Mode::Exact && routed < k {
            return Err(Error::InfeasibleTrackCount { class, requested: k, max_feasible: routed });
        }
        k_used += routed;
        net.write_solution(&mut z);
    }
    let objective = costs.dot(&z);
    if !objective.is_finite() {
        return Err(Error::NonFiniteObjective { iteration: 0 });
    }
    let solution = FlowSolution { z, objective, is_integer: true, k_used };
    debug_assert!(solution.validate(graph).is_ok());
    Ok((solution, path_costs))
}

/// Marker for edges that do not carry a variable (reverse edges).
const NO_VAR: usize = usize::MAX;

struct EdgeRec {
    to: usize,
    rev: usize,
    cap: u8,
    cost: f64,
    var: usize,
}

/// Residual network for one class: source 0, sink 1, then in/out node pairs
/// for the class's detections in ascending id order (which keeps Dijkstra's
/// tie-breaking aligned with variable order).
struct ClassNetwork<'g> {
    graph: &'g TrackingGraph,
    class: ObjectClass,
    adj: Vec<Vec<EdgeRec>>,
    /// Node visit order for the initial potential pass (a topological order).
    topo: Vec<usize>,
    potential: Vec<f64>,
}

const SOURCE: usize = 0;
const SINK: usize = 1;

impl<'g> ClassNetwork<'g> {
    fn build(graph: &'g TrackingGraph, costs: &CostVector, class: ObjectClass) -> Self {
        let ids = graph.class_detections(class);
        let n = ids.len();
        // Local position of each class detection; dense ids make a Vec fine.
        let mut pos = vec![usize::MAX; graph.n_detections()];
        for (p, &d) in ids.iter().enumerate() {
            pos[d] = p;
        }
        let node_in = |p: usize| 2 + 2 * p;
        let node_out = |p: usize| 3 + 2 * p;

        let mut net = ClassNetwork {
            graph,
            class,
            adj: (0..2 + 2 * n).map(|_| Vec::new()).collect(),
            topo: Vec::with_capacity(2 + 2 * n),
            potential: vec![0.0; 2 + 2 * n],
        };
        for (p, &d) in ids.iter().enumerate() {
            net.add_edge(SOURCE, node_in(p), costs[graph.start_var(d)], graph.start_var(d));
            net.add_edge(node_in(p), node_out(p), costs[graph.det_var(d)], graph.det_var(d));
            net.add_edge(node_out(p), SINK, costs[graph.end_var(d)], graph.end_var(d));
        }
        for (ci, conn) in graph.connections().iter().enumerate() {
            if graph.detection(conn.src).class != class {
                continue;
            }
            net.add_edge(
                node_out(pos[conn.src]),
                node_in(pos[conn.dst]),
                costs[graph.conn_var(ci)],
                graph.conn_var(ci),
            );
        }

        // Topological order: source, then detections by (frame, id) with the
        // in-node before the out-node, then sink. All edges point forward.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&p| (graph.detection(ids[p]).frame, ids[p]));
        net.topo.push(SOURCE);
        for p in order {
            net.topo.push(node_in(p));
            net.topo.push(node_out(p));
        }
        net.topo.push(SINK);
        net.init_potentials();
        net
    }

    fn add_edge(&mut self, from: usize, to: usize, cost: f64, var: usize) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(EdgeRec { to, rev: rev_from, cap: 1, cost, var });
        self.adj[to].push(EdgeRec { to: from, rev: rev_to, cap: 0, cost: -cost, var: NO_VAR });
    }

    /// One relaxation sweep in topological order gives exact shortest-path
    /// distances on the yet-unaugmented DAG, even with negative costs.
    fn init_potentials(&mut self) {
        let mut dist = vec![f64::INFINITY; self.adj.len()];
        dist[SOURCE] = 0.0;
        for &u in &self.topo {
            if !dist[u].is_finite() {
                continue;
            }
            for e in &self.adj[u] {
                if e.cap > 0 && dist[u] + e.cost < dist[e.to] {
                    dist[e.to] = dist[u] + e.cost;
                }
            }
        }
        // Every node is reachable before augmentation (the source feeds each
        // in-node directly), so all potentials are finite.
        self.potential = dist;
    }

    /// Pushes up to `k` units; returns how many were routed. In `Best` mode
    /// stops as soon as the next path no longer lowers the objective.
    fn route(&mut self, k: usize, mode: Mode, path_costs: &mut Vec<f64>) -> usize {
        for unit in 0..k {
            let Some((dist, parent)) = self.dijkstra() else {
                return unit;
            };
            let true_cost = dist[SINK] + self.potential[SINK];
            if mode == Mode::Best && true_cost >= -IMPROVEMENT_EPS {
                return unit;
            }
            path_costs.push(true_cost);
            // Augment one unit along the parent chain.
            let mut v = SINK;
            while v != SOURCE {
                let (u, ei) = parent[v];
                let rev = self.adj[u][ei].rev;
                self.adj[u][ei].cap -= 1;
                self.adj[v][rev].cap += 1;
                v = u;
            }
            let sink_dist = dist[SINK];
            for (v, d) in dist.iter().enumerate() {
                self.potential[v] += d.min(sink_dist);
            }
        }
        k
    }

    /// Dijkstra on reduced costs. Ties broken by node index, so equal-cost
    /// alternatives resolve toward the lowest detection id. Returns node
    /// distances and, per node, the (parent, edge index) it was reached by.
    #[allow(clippy::type_complexity)]
    fn dijkstra(&self) -> Option<(Vec<f64>, Vec<(usize, usize)>)> {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;

        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![(usize::MAX, usize::MAX); n];
        let mut done = vec![false; n];
        let mut heap: BinaryHeap<Reverse<(HeapCost, usize)>> = BinaryHeap::new();
        dist[SOURCE] = 0.0;
        heap.push(Reverse((HeapCost(0.0), SOURCE)));
        while let Some(Reverse((HeapCost(du), u))) = heap.pop() {
            if done[u] || du > dist[u] {
                continue;
            }
            done[u] = true;
            for (ei, e) in self.adj[u].iter().enumerate() {
                if e.cap == 0 || !self.potential[e.to].is_finite() {
                    continue;
                }
                let reduced = e.cost + self.potential[u] - self.potential[e.to];
                // Tiny negatives from float round-off are clamped; the
                // invariant guarantees reduced costs are non-negative.
                let reduced = reduced.max(0.0);
                let cand = dist[u] + reduced;
                if cand < dist[e.to] {
                    dist[e.to] = cand;
                    parent[e.to] = (u, ei);
                    heap.push(Reverse((HeapCost(cand), e.to)));
                }
            }
        }
        dist[SINK].is_finite().then_some((dist, parent))
    }

    /// Marks saturated variable edges in the shared solution vector.
    fn write_solution(&self, z: &mut [f64]) {
        for edges in &self.adj {
            for e in edges {
                if e.var != NO_VAR && e.cap == 0 {
                    z[e.var] = 1.0;
                }
            }
        }
        let _ = (self.graph, self.class);
    }
}

/// f64 wrapper with a total order so Dijkstra can use the std binary heap.
#[derive(PartialEq)]
struct HeapCost(f64);

impl Eq for HeapCost {}

impl PartialOrd for HeapCost {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapCost {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
