//! Successive-shortest-path min-cost flow on real capacities.
//!
//! Dijkstra runs on reduced costs `c(u,v) + π(u) - π(v)`, which stay
//! nonnegative as long as the potentials are updated with the shortest
//! distances after every augmentation. All initial costs must be
//! nonnegative. The graphs built here are small and dense, so Dijkstra uses
//! the `O(V²)` array scan.

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    residual: f64,
    cost: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct MinCostFlow {
    adjacency: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    potential: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FlowOutcome {
    pub flow: f64,
    pub cost: f64,
    pub augmentations: usize,
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); nodes],
            edges: Vec::new(),
            potential: vec![0.0; nodes],
        }
    }

    /// Adds `from -> to`; returns the id whose flow [`flow`](Self::flow) reports.
    pub fn add_edge(&mut self, from: usize, to: usize, capacity: f64, cost: f64) -> usize {
        debug_assert!(capacity >= 0.0 && cost >= 0.0);
        let id = self.edges.len();
        self.edges.push(Edge {
            to,
            residual: capacity,
            cost,
        });
        self.edges.push(Edge {
            to: from,
            residual: 0.0,
            cost: -cost,
        });
        self.adjacency[from].push(id);
        self.adjacency[to].push(id + 1);
        id
    }

    /// Flow currently carried by edge `id`.
    pub fn flow(&self, id: usize) -> f64 {
        self.edges[id ^ 1].residual
    }

    /// Sends up to `demand` units from `source` to `sink` at minimum cost.
    /// Residual capacities at or below `eps` count as saturated.
    pub fn solve(&mut self, source: usize, sink: usize, demand: f64, eps: f64) -> FlowOutcome {
        let n = self.adjacency.len();
        let mut outcome = FlowOutcome {
            flow: 0.0,
            cost: 0.0,
            augmentations: 0,
        };
        // Each augmentation saturates an edge or finishes the demand; the
        // cap only guards against rounding-induced cycling.
        let max_rounds = 4 * (n + self.edges.len()) * (n + 1);
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut done = vec![false; n];

        while demand - outcome.flow > eps && outcome.augmentations < max_rounds {
            dist.fill(f64::INFINITY);
            parent.fill(usize::MAX);
            done.fill(false);
            dist[source] = 0.0;
            loop {
                let mut u = usize::MAX;
                let mut best = f64::INFINITY;
                for v in 0..n {
                    if !done[v] && dist[v] < best {
                        best = dist[v];
                        u = v;
                    }
                }
                if u == usize::MAX {
                    break;
                }
                done[u] = true;
                for &id in &self.adjacency[u] {
                    let e = &self.edges[id];
                    if e.residual <= eps || done[e.to] {
                        continue;
                    }
                    let reduced = (e.cost + self.potential[u] - self.potential[e.to]).max(0.0);
                    let candidate = dist[u] + reduced;
                    if candidate < dist[e.to] {
                        dist[e.to] = candidate;
                        parent[e.to] = id;
                    }
                }
            }
            if !dist[sink].is_finite() {
                break;
            }
            // Capping at the sink distance keeps reduced costs nonnegative on
            // edges into nodes that were not reached this round.
            let cap = dist[sink];
            for (p, d) in self.potential.iter_mut().zip(&dist) {
                *p += d.min(cap);
            }

            let mut push = demand - outcome.flow;
            let mut v = sink;
            while v != source {
                let id = parent[v];
                push = push.min(self.edges[id].residual);
                v = self.edges[id ^ 1].to;
            }
            let mut v = sink;
            while v != source {
                let id = parent[v];
                self.edges[id].residual -= push;
                self.edges[id ^ 1].residual += push;
                outcome.cost += push * self.edges[id].cost;
                v = self.edges[id ^ 1].to;
            }
            outcome.flow += push;
            outcome.augmentations += 1;
        }
        debug_assert!(
            outcome.augmentations < max_rounds,
            "min-cost flow failed to terminate"
        );
        outcome
    }
}
