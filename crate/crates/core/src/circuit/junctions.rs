use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::geometry::{
    collinear, ring_ring, segment_ring, segment_segment, Conductor, Geometry, Point,
    SegmentContact, MERGE_TOL,
};

/// Identifies an electrical object that can take part in a junction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElementId {
    /// Index into the conductor list.
    Conductor(usize),
    /// Metal bar wired to the supply.
    LeftBar,
    /// Metal bar wired to the load.
    RightBar,
}

/// The two vertical metal terminal bars bounding the workspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bars {
    pub left: (Point, Point),
    pub right: (Point, Point),
}

impl Bars {
    /// Bars along the left and right edges of a `width × height` workspace.
    pub fn for_workspace(width: f64, height: f64) -> Self {
        Self {
            left: (Point::new(0.0, 0.0), Point::new(0.0, height)),
            right: (Point::new(width, 0.0), Point::new(width, height)),
        }
    }

    fn iter(&self) -> [(ElementId, (Point, Point)); 2] {
        [
            (ElementId::LeftBar, self.left),
            (ElementId::RightBar, self.right),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Junction {
    pub position: Point,
    /// Always at least two entries.
    pub members: BTreeSet<ElementId>,
}

/// A conductor after collinear fusion: overlapping or touching collinear
/// segments become a single trace covering their union.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub geometry: Geometry,
    /// Original conductor indices making up this trace, ascending.
    pub members: Vec<usize>,
    pub linear_resistivity: f64,
}

impl Trace {
    pub fn contains(&self, j: &Junction) -> bool {
        self.members
            .iter()
            .any(|&m| j.members.contains(&ElementId::Conductor(m)))
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        parent[hi] = lo;
    }
}

/// Group label per conductor: segments that are collinear and overlap or
/// touch share a label. Rings are always alone.
fn fusion_groups(conductors: &[Conductor]) -> Vec<usize> {
    let n = conductors.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if let (Geometry::Segment { p0: a0, p1: a1 }, Geometry::Segment { p0: b0, p1: b1 }) =
                (conductors[i].geometry, conductors[j].geometry)
            {
                if collinear(a0, a1, b0, b1, MERGE_TOL)
                    && segment_segment(a0, a1, b0, b1, MERGE_TOL) != SegmentContact::None
                {
                    union(&mut parent, i, j);
                }
            }
        }
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

/// Fuses collinear overlapping segments; traces are ordered by their lowest
/// member index.
pub fn fuse_traces(conductors: &[Conductor]) -> Vec<Trace> {
    let groups = fusion_groups(conductors);
    let mut traces = Vec::new();
    for root in 0..conductors.len() {
        let members: Vec<usize> = (0..conductors.len())
            .filter(|&i| groups[i] == root)
            .collect();
        if members.is_empty() {
            continue;
        }
        let first = &conductors[members[0]];
        let rho = members
            .iter()
            .map(|&m| conductors[m].linear_resistivity)
            .fold(f64::INFINITY, f64::min);
        let geometry = match first.geometry {
            Geometry::Ring { .. } => first.geometry,
            Geometry::Segment { p0, p1 } => {
                let u = (p1 - p0) * (1.0 / p0.dist(p1));
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for &m in &members {
                    if let Geometry::Segment { p0: q0, p1: q1 } = conductors[m].geometry {
                        for q in [q0, q1] {
                            let s = (q - p0).dot(u);
                            lo = lo.min(s);
                            hi = hi.max(s);
                        }
                    }
                }
                Geometry::Segment {
                    p0: p0 + u * lo,
                    p1: p0 + u * hi,
                }
            }
        };
        traces.push(Trace {
            geometry,
            members,
            linear_resistivity: rho,
        });
    }
    traces
}

fn contacts(a: &Geometry, b: &Geometry) -> Vec<Point> {
    match (*a, *b) {
        (Geometry::Segment { p0: a0, p1: a1 }, Geometry::Segment { p0: b0, p1: b1 }) => {
            match segment_segment(a0, a1, b0, b1, MERGE_TOL) {
                SegmentContact::Point(p) => vec![p],
                // Overlapping collinear segments are fused into one trace.
                SegmentContact::Overlap(..) | SegmentContact::None => Vec::new(),
            }
        }
        (Geometry::Segment { p0, p1 }, Geometry::Ring { center, radius })
        | (Geometry::Ring { center, radius }, Geometry::Segment { p0, p1 }) => {
            segment_ring(p0, p1, center, radius, MERGE_TOL)
        }
        (
            Geometry::Ring {
                center: c1,
                radius: r1,
            },
            Geometry::Ring {
                center: c2,
                radius: r2,
            },
        ) => ring_ring(c1, r1, c2, r2, MERGE_TOL),
    }
}

/// All electrical contacts among the conductors and the two bars. Points
/// closer than [`MERGE_TOL`] are unified into one junction positioned at
/// their mean. Collinear overlaps do not produce junctions: those segments
/// are fused into a single trace (see [`fuse_traces`]).
pub fn find_junctions(conductors: &[Conductor], bars: &Bars) -> Vec<Junction> {
    let groups = fusion_groups(conductors);
    let mut raw: Vec<(Point, ElementId, ElementId)> = Vec::new();
    for i in 0..conductors.len() {
        for j in (i + 1)..conductors.len() {
            if groups[i] == groups[j] {
                continue;
            }
            for p in contacts(&conductors[i].geometry, &conductors[j].geometry) {
                raw.push((p, ElementId::Conductor(i), ElementId::Conductor(j)));
            }
        }
        for (bar_id, (b0, b1)) in bars.iter() {
            let bar = Geometry::Segment { p0: b0, p1: b1 };
            for p in contacts(&conductors[i].geometry, &bar) {
                raw.push((p, ElementId::Conductor(i), bar_id));
            }
        }
    }

    let n = raw.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if raw[i].0.dist(raw[j].0) <= MERGE_TOL {
                union(&mut parent, i, j);
            }
        }
    }
    let mut junctions = Vec::new();
    for root in 0..n {
        let cluster: Vec<usize> = (0..n).filter(|&i| find(&mut parent, i) == root).collect();
        if cluster.is_empty() {
            continue;
        }
        let k = cluster.len() as f64;
        let sum = cluster
            .iter()
            .fold(Point::new(0.0, 0.0), |acc, &i| acc + raw[i].0);
        let mut members = BTreeSet::new();
        for &i in &cluster {
            members.insert(raw[i].1);
            members.insert(raw[i].2);
        }
        junctions.push(Junction {
            position: sum * (1.0 / k),
            members,
        });
    }
    junctions
}
