use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::netlist::{CircuitGraph, Edge, EdgeKind};
use crate::error::{Error, Result};
use crate::linalg::{mat_vec, Cholesky};

/// Largest tolerated Kirchhoff current residual at a free node, amperes.
pub const KCL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Volts, indexed like `CircuitGraph::nodes`. Floating nodes read 0.
    pub node_potentials: Vec<f64>,
    /// Amperes from `a` to `b`, indexed like `CircuitGraph::edges`.
    pub branch_currents: Vec<f64>,
    pub load_voltage: f64,
    /// Whether drawn traces join the supply bar to the load bar.
    pub connected: bool,
    /// Largest |Σ I| over free nodes.
    pub kcl_residual: f64,
}

/// True when trace edges alone link the source and load terminals.
pub fn traces_connect(graph: &CircuitGraph) -> bool {
    let t = graph.terminals;
    let reach = reachable(graph.nodes.len(), graph.trace_edges(), &[t.source]);
    reach[t.load]
}

fn reachable<'a>(n: usize, edges: impl Iterator<Item = &'a Edge>, from: &[usize]) -> Vec<bool> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = from.iter().copied().collect();
    for &f in from {
        seen[f] = true;
    }
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen
}

/// Node potentials with the given nodes held fixed. Nodes not reachable from
/// any fixed node are floating and read 0. Returns potentials and the KCL
/// residual over free nodes.
fn solve_fixed(n: usize, edges: &[&Edge], fixed: &[(usize, f64)]) -> Result<(Vec<f64>, f64)> {
    let mut potentials = vec![0.0; n];
    let mut is_fixed = vec![false; n];
    for &(i, v) in fixed {
        potentials[i] = v;
        is_fixed[i] = true;
    }
    let starts: Vec<usize> = fixed.iter().map(|f| f.0).collect();
    let reach = reachable(n, edges.iter().copied(), &starts);

    let mut index = vec![usize::MAX; n];
    let mut free = Vec::new();
    for i in 0..n {
        if reach[i] && !is_fixed[i] {
            index[i] = free.len();
            free.push(i);
        }
    }
    let m = free.len();
    let mut g = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for e in edges {
        let c = 1.0 / e.resistance;
        for (p, q) in [(e.a, e.b), (e.b, e.a)] {
            let ip = index[p];
            if ip == usize::MAX {
                continue;
            }
            g[ip * m + ip] += c;
            if index[q] != usize::MAX {
                g[ip * m + index[q]] -= c;
            } else if is_fixed[q] {
                rhs[ip] += c * potentials[q];
            }
        }
    }

    if m > 0 {
        let chol = Cholesky::factor(&g, m).ok_or(Error::NotPositiveDefinite { jitter: 0.0 })?;
        let mut x = chol.solve(&rhs);
        // One step of iterative refinement.
        let gx = mat_vec(&g, m, &x);
        let r: Vec<f64> = rhs.iter().zip(&gx).map(|(b, y)| b - y).collect();
        for (xi, di) in x.iter_mut().zip(chol.solve(&r)) {
            *xi += di;
        }
        for (k, &i) in free.iter().enumerate() {
            potentials[i] = x[k];
        }
    }

    let mut net = vec![0.0; n];
    for e in edges {
        let i = (potentials[e.a] - potentials[e.b]) / e.resistance;
        net[e.a] += i;
        net[e.b] -= i;
    }
    let residual = free.iter().map(|&i| net[i].abs()).fold(0.0, f64::max);
    Ok((potentials, residual))
}

/// Nodal analysis with ground at 0 V and the supply bar at `source_volts`.
pub fn solve_network(graph: &CircuitGraph, source_volts: f64) -> Result<SolveResult> {
    let t = graph.terminals;
    let edges: Vec<&Edge> = graph.edges.iter().collect();
    let (node_potentials, kcl_residual) = solve_fixed(
        graph.nodes.len(),
        &edges,
        &[(t.ground, 0.0), (t.source, source_volts)],
    )?;
    if kcl_residual > KCL_TOL {
        return Err(Error::SolveResidual {
            residual: kcl_residual,
        });
    }
    let branch_currents = graph
        .edges
        .iter()
        .map(|e| (node_potentials[e.a] - node_potentials[e.b]) / e.resistance)
        .collect();
    let connected = traces_connect(graph);
    let load_voltage = if connected {
        node_potentials[t.load]
    } else {
        0.0
    };
    Ok(SolveResult {
        node_potentials,
        branch_currents,
        load_voltage,
        connected,
        kcl_residual,
    })
}

/// Equivalent resistance of the drawn traces between the two bars, ignoring
/// the load and any shunt. `None` when the bars are not connected.
pub fn connection_resistance(graph: &CircuitGraph) -> Result<Option<f64>> {
    if !traces_connect(graph) {
        return Ok(None);
    }
    let t = graph.terminals;
    let edges: Vec<&Edge> = graph
        .edges
        .iter()
        .filter(|e| e.kind == EdgeKind::Trace)
        .collect();
    let (v, residual) = solve_fixed(graph.nodes.len(), &edges, &[(t.source, 1.0), (t.load, 0.0)])?;
    if residual > KCL_TOL {
        return Err(Error::SolveResidual { residual });
    }
    let current: f64 = edges
        .iter()
        .map(|e| {
            if e.a == t.source {
                (1.0 - v[e.b]) / e.resistance
            } else if e.b == t.source {
                (1.0 - v[e.a]) / e.resistance
            } else {
                0.0
            }
        })
        .sum();
    Ok(Some(1.0 / current))
}
