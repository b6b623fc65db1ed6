//! Simulated circuit drawing: turns a [`Pattern`] into conductor geometry,
//! finds where traces touch, builds the resistor network between the supply
//! and load bars, and solves it for the load voltage.

mod geometry;
mod junctions;
mod netlist;
mod pattern;
mod solve;

pub use geometry::{
    nearest_point, ring_ring, segment_ring, segment_segment, Conductor, Geometry, Point,
    SegmentContact, MERGE_TOL,
};
pub use junctions::{find_junctions, fuse_traces, Bars, ElementId, Junction, Trace};
pub use netlist::{build_netlist, CircuitGraph, Edge, EdgeKind, Node, NodeRole, Terminals};
pub use pattern::{parse_shapes, Pattern, ShapeKind, OFFSET_COUNT, OFFSET_LIMIT, SHAPE_COUNT};
pub use solve::{connection_resistance, solve_network, traces_connect, SolveResult, KCL_TOL};

use crate::error::Result;
use crate::experiment::ExperimentSpec;

/// Resistance per millimetre of a drawn trace (20 Ω per 100 mm line).
pub const LINEAR_RESISTIVITY: f64 = 0.2;
/// Line length and circle diameter, mm.
pub const SHAPE_SIZE: f64 = 100.0;
/// Height of the horizontal midline every shape is centered on, mm.
pub const MIDLINE_Y: f64 = 50.0;
/// Nominal x of each shape center before displacement, mm.
pub const NOMINAL_CENTERS: [f64; SHAPE_COUNT] = [50.0, 120.0, 190.0, 260.0, 330.0];

/// Center of shape `i` (0-based) after applying the pattern's offsets.
pub fn shape_center(pattern: &Pattern, i: usize) -> Point {
    let dx = match i {
        1..=3 => pattern.offsets[i - 1],
        _ => 0.0,
    };
    Point::new(NOMINAL_CENTERS[i] + dx, MIDLINE_Y)
}

/// The five conductors drawn for a pattern, left to right.
pub fn shape_geometry(pattern: &Pattern) -> Result<Vec<Conductor>> {
    pattern.validate()?;
    let half = SHAPE_SIZE / 2.0;
    (0..SHAPE_COUNT)
        .map(|i| {
            let c = shape_center(pattern, i);
            match pattern.shapes[i] {
                ShapeKind::Line => Conductor::segment(
                    Point::new(c.x - half, c.y),
                    Point::new(c.x + half, c.y),
                    LINEAR_RESISTIVITY,
                ),
                ShapeKind::Circle => Conductor::ring(c, half, LINEAR_RESISTIVITY),
            }
        })
        .collect()
}

/// Whether the drawing touches the central obstacle: shape 2 pushed right
/// of nominal, shape 4 pushed left of nominal, or a circle in the middle.
pub fn obstacle_contact(pattern: &Pattern) -> bool {
    pattern.offsets[0] >= 0.0 || pattern.offsets[2] <= 0.0 || pattern.shapes[2] == ShapeKind::Circle
}

/// Everything computed while evaluating one pattern.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub conductors: Vec<Conductor>,
    pub junctions: Vec<Junction>,
    pub graph: CircuitGraph,
    pub solution: SolveResult,
    /// Whether the obstacle shunt was attached.
    pub obstacle_attached: bool,
}

impl Simulation {
    pub fn load_voltage(&self) -> f64 {
        self.solution.load_voltage
    }

    /// Bar-to-bar resistance of the drawn traces; `None` when open.
    pub fn connection_resistance(&self) -> Result<Option<f64>> {
        connection_resistance(&self.graph)
    }
}

pub fn simulate(pattern: &Pattern, experiment: &ExperimentSpec) -> Result<Simulation> {
    let conductors = shape_geometry(pattern)?;
    let junctions = find_junctions(&conductors, &experiment.bars());
    let obstacle_attached = experiment.has_obstacle() && obstacle_contact(pattern);
    let graph = build_netlist(&conductors, &junctions, experiment, obstacle_attached)?;
    let solution = solve_network(&graph, experiment.source_volts)?;
    Ok(Simulation {
        conductors,
        junctions,
        graph,
        solution,
        obstacle_attached,
    })
}

/// The simulated objective: load voltage for a pattern.
pub fn load_voltage(pattern: &Pattern, experiment: &ExperimentSpec) -> Result<f64> {
    simulate(pattern, experiment).map(|s| s.load_voltage())
}
