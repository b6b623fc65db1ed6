use serde::{Deserialize, Serialize};

use super::geometry::{nearest_point, ring_angle, Conductor, Geometry, Point, MERGE_TOL};
use super::junctions::{fuse_traces, ElementId, Junction, Trace};
use crate::error::{Error, Result};
use crate::experiment::ExperimentSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeRole {
    Ground,
    Source,
    Load,
    Junction,
    /// Point where the obstacle touches the drawn circuit.
    Obstacle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// `None` for ground, which has no place on the drawing.
    pub position: Option<Point>,
    pub role: NodeRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    /// A piece of drawn conductor.
    Trace,
    /// The load resistor from the right bar to ground.
    Load,
    /// The obstacle's shunt resistor to ground.
    Shunt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub resistance: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terminals {
    pub source: usize,
    pub load: usize,
    pub ground: usize,
    pub obstacle: Option<usize>,
}

impl Terminals {
    fn contains(&self, n: usize) -> bool {
        n == self.source || n == self.load || n == self.ground || self.obstacle == Some(n)
    }
}

/// Resistor network extracted from a drawing. Edge resistances are strictly
/// positive and no edge is a self-loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub terminals: Terminals,
}

impl CircuitGraph {
    /// Builds a graph directly from edges; used for hand-made networks.
    /// Node 0 is ground, and the terminals must index into `nodes`.
    pub fn from_parts(nodes: Vec<Node>, edges: Vec<Edge>, terminals: Terminals) -> Result<Self> {
        let n = nodes.len();
        for e in &edges {
            if e.a >= n || e.b >= n || e.a == e.b {
                return Err(Error::InvalidGeometry(format!("bad edge {}-{}", e.a, e.b)));
            }
            if !(e.resistance > 0.0) || !e.resistance.is_finite() {
                return Err(Error::NonPositiveResistance {
                    a: e.a,
                    b: e.b,
                    ohms: e.resistance,
                });
            }
        }
        Ok(Self {
            nodes,
            edges,
            terminals,
        })
    }

    pub fn trace_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Trace)
    }

    /// Multiplies every resistance by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.resistance *= k;
        }
        g
    }
}

const GROUND: usize = 0;
const SOURCE: usize = 1;
const LOAD: usize = 2;

/// Splits each (fused) conductor at its junctions and wires the pieces into
/// a resistor network between the supply bar, the load bar and ground.
///
/// When `obstacle_contact` is set and the experiment defines a shunt, the
/// point of the drawing closest to the workspace center becomes the
/// obstacle node, tied to ground through the shunt resistance.
pub fn build_netlist(
    conductors: &[Conductor],
    junctions: &[Junction],
    experiment: &ExperimentSpec,
    obstacle_contact: bool,
) -> Result<CircuitGraph> {
    let traces = fuse_traces(conductors);
    let bars = experiment.bars();
    let mut nodes = vec![
        Node {
            position: None,
            role: NodeRole::Ground,
        },
        Node {
            position: Some(midpoint(bars.left)),
            role: NodeRole::Source,
        },
        Node {
            position: Some(midpoint(bars.right)),
            role: NodeRole::Load,
        },
    ];

    let junction_node: Vec<usize> = junctions
        .iter()
        .map(|j| {
            if j.members.contains(&ElementId::LeftBar) {
                SOURCE
            } else if j.members.contains(&ElementId::RightBar) {
                LOAD
            } else {
                nodes.push(Node {
                    position: Some(j.position),
                    role: NodeRole::Junction,
                });
                nodes.len() - 1
            }
        })
        .collect();

    let mut on_trace: Vec<Vec<(Point, usize)>> = traces
        .iter()
        .map(|t| {
            junctions
                .iter()
                .zip(&junction_node)
                .filter(|(j, _)| t.contains(j))
                .map(|(j, &n)| (j.position, n))
                .collect()
        })
        .collect();

    let obstacle = match experiment.obstacle_ohms {
        Some(_) if obstacle_contact && !traces.is_empty() => Some(attach_obstacle(
            &traces,
            &mut on_trace,
            &mut nodes,
            experiment.obstacle_center(),
        )),
        _ => None,
    };

    let mut edges = Vec::new();
    for (trace, points) in traces.iter().zip(&on_trace) {
        split_trace(trace, points, &mut edges)?;
    }

    let terminals = Terminals {
        source: SOURCE,
        load: LOAD,
        ground: GROUND,
        obstacle,
    };
    let (nodes, mut edges, terminals) = prune(nodes, edges, terminals);

    edges.push(Edge {
        a: terminals.load,
        b: terminals.ground,
        resistance: experiment.load_ohms,
        kind: EdgeKind::Load,
    });
    if let (Some(node), Some(ohms)) = (terminals.obstacle, experiment.obstacle_ohms) {
        edges.push(Edge {
            a: node,
            b: terminals.ground,
            resistance: ohms,
            kind: EdgeKind::Shunt,
        });
    }
    CircuitGraph::from_parts(nodes, edges, terminals)
}

fn midpoint((a, b): (Point, Point)) -> Point {
    (a + b) * 0.5
}

fn attach_obstacle(
    traces: &[Trace],
    on_trace: &mut [Vec<(Point, usize)>],
    nodes: &mut Vec<Node>,
    target: Point,
) -> usize {
    let mut best = (0, nearest_point(&traces[0].geometry, target));
    for (i, t) in traces.iter().enumerate().skip(1) {
        let p = nearest_point(&t.geometry, target);
        if p.dist(target) < best.1.dist(target) {
            best = (i, p);
        }
    }
    let (ti, p) = best;
    if let Some(&(_, n)) = on_trace[ti].iter().find(|(q, _)| q.dist(p) <= MERGE_TOL) {
        return n;
    }
    nodes.push(Node {
        position: Some(p),
        role: NodeRole::Obstacle,
    });
    let n = nodes.len() - 1;
    on_trace[ti].push((p, n));
    n
}

fn push_edge(edges: &mut Vec<Edge>, a: usize, b: usize, ohms: f64) -> Result<()> {
    if a == b {
        return Ok(());
    }
    if !(ohms > 0.0) {
        return Err(Error::NonPositiveResistance { a, b, ohms });
    }
    edges.push(Edge {
        a,
        b,
        resistance: ohms,
        kind: EdgeKind::Trace,
    });
    Ok(())
}

fn split_trace(trace: &Trace, points: &[(Point, usize)], edges: &mut Vec<Edge>) -> Result<()> {
    let rho = trace.linear_resistivity;
    match trace.geometry {
        Geometry::Segment { p0, p1 } => {
            let u = (p1 - p0) * (1.0 / p0.dist(p1));
            let mut along: Vec<(f64, usize)> =
                points.iter().map(|&(p, n)| ((p - p0).dot(u), n)).collect();
            along.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for w in along.windows(2) {
                push_edge(edges, w[0].1, w[1].1, rho * (w[1].0 - w[0].0))?;
            }
        }
        Geometry::Ring { center, radius } => {
            let mut around: Vec<(f64, usize)> = points
                .iter()
                .map(|&(p, n)| (ring_angle(center, p), n))
                .collect();
            around.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let m = around.len();
            if m < 2 {
                return Ok(());
            }
            for k in 0..m {
                let (t0, a) = around[k];
                let (mut t1, b) = around[(k + 1) % m];
                if k + 1 == m {
                    t1 += std::f64::consts::TAU;
                }
                push_edge(edges, a, b, rho * radius * (t1 - t0))?;
            }
        }
    }
    Ok(())
}

/// Removes dangling chains: repeatedly drops edges hanging off non-terminal
/// nodes of degree one, then compacts the node list.
fn prune(
    nodes: Vec<Node>,
    mut edges: Vec<Edge>,
    terminals: Terminals,
) -> (Vec<Node>, Vec<Edge>, Terminals) {
    loop {
        let mut degree = vec![0usize; nodes.len()];
        for e in &edges {
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
        let dangling = |n: usize| !terminals.contains(n) && degree[n] == 1;
        let before = edges.len();
        edges.retain(|e| !dangling(e.a) && !dangling(e.b));
        if edges.len() == before {
            break;
        }
    }
    let mut used = vec![false; nodes.len()];
    for e in &edges {
        used[e.a] = true;
        used[e.b] = true;
    }
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut kept = Vec::new();
    for (i, node) in nodes.into_iter().enumerate() {
        if used[i] || terminals.contains(i) {
            remap[i] = kept.len();
            kept.push(node);
        }
    }
    for e in &mut edges {
        e.a = remap[e.a];
        e.b = remap[e.b];
    }
    let terminals = Terminals {
        source: remap[terminals.source],
        load: remap[terminals.load],
        ground: remap[terminals.ground],
        obstacle: terminals.obstacle.map(|n| remap[n]),
    };
    (kept, edges, terminals)
}
