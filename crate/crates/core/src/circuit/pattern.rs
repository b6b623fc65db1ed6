use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of drawn shapes.
pub const SHAPE_COUNT: usize = 5;
/// Number of movable shape centers (shapes 2 through 4).
pub const OFFSET_COUNT: usize = 3;
/// Horizontal displacement limit for the movable centers, mm.
pub const OFFSET_LIMIT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShapeKind {
    Line,
    Circle,
}

impl ShapeKind {
    /// Categorical encoding: 0 = line, 1 = circle.
    pub fn index(self) -> usize {
        match self {
            ShapeKind::Line => 0,
            ShapeKind::Circle => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(ShapeKind::Line),
            1 => Some(ShapeKind::Circle),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            ShapeKind::Line => 'L',
            ShapeKind::Circle => 'C',
        }
    }
}

/// The decision vector: five shape kinds drawn left to right plus the
/// horizontal displacement of the three middle shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub shapes: [ShapeKind; SHAPE_COUNT],
    /// Displacement of shapes 2..4 from their nominal centers, mm.
    pub offsets: [f64; OFFSET_COUNT],
}

impl Pattern {
    pub fn new(shapes: [ShapeKind; SHAPE_COUNT], offsets: [f64; OFFSET_COUNT]) -> Result<Self> {
        let p = Self { shapes, offsets };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &x) in self.offsets.iter().enumerate() {
            if !x.is_finite() || x.abs() > OFFSET_LIMIT {
                return Err(Error::OffsetOutOfRange {
                    index: i + 1,
                    value: x,
                    limit: OFFSET_LIMIT,
                });
            }
        }
        Ok(())
    }

    pub fn all(kind: ShapeKind) -> Self {
        Self {
            shapes: [kind; SHAPE_COUNT],
            offsets: [0.0; OFFSET_COUNT],
        }
    }

    /// Builds a pattern from a bit mask where bit `i` set means shape `i + 1`
    /// is a circle.
    pub fn from_mask(mask: u32, offsets: [f64; OFFSET_COUNT]) -> Result<Self> {
        let mut shapes = [ShapeKind::Line; SHAPE_COUNT];
        for (i, s) in shapes.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                *s = ShapeKind::Circle;
            }
        }
        Self::new(shapes, offsets)
    }

    pub fn circle_count(&self) -> usize {
        self.shapes
            .iter()
            .filter(|&&s| s == ShapeKind::Circle)
            .count()
    }

    /// Shape kinds as the `[LC]{5}` string used on the command line.
    pub fn shape_string(&self) -> String {
        self.shapes.iter().map(|s| s.letter()).collect()
    }

    /// Parses a `[LC]{5}` shape string and a comma separated offset list.
    pub fn parse(shapes: &str, offsets: &str) -> Result<Self> {
        let shapes = parse_shapes(shapes)?;
        let parts: Vec<&str> = offsets.split(',').map(str::trim).collect();
        if parts.len() != OFFSET_COUNT {
            return Err(Error::InvalidPattern(format!(
                "expected {OFFSET_COUNT} comma-separated offsets, got {:?}",
                offsets
            )));
        }
        let mut xs = [0.0; OFFSET_COUNT];
        for (x, part) in xs.iter_mut().zip(&parts) {
            *x = part
                .parse()
                .map_err(|_| Error::InvalidPattern(format!("bad offset {part:?}")))?;
        }
        Self::new(shapes, xs)
    }
}

pub fn parse_shapes(s: &str) -> Result<[ShapeKind; SHAPE_COUNT]> {
    let chars: Vec<char> = s.trim().chars().collect();
    if chars.len() != SHAPE_COUNT {
        return Err(Error::InvalidPattern(format!(
            "shape string {s:?} must have exactly {SHAPE_COUNT} letters from [LC]"
        )));
    }
    let mut out = [ShapeKind::Line; SHAPE_COUNT];
    for (o, c) in out.iter_mut().zip(chars) {
        *o = match c.to_ascii_uppercase() {
            'L' => ShapeKind::Line,
            'C' => ShapeKind::Circle,
            other => {
                return Err(Error::InvalidPattern(format!(
                    "unknown shape letter {other:?}; use L or C"
                )))
            }
        };
    }
    Ok(out)
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} @ {:.3},{:.3},{:.3}",
            self.shape_string(),
            self.offsets[0],
            self.offsets[1],
            self.offsets[2]
        )
    }
}

impl FromStr for Pattern {
    type Err = Error;

    /// Accepts `LLCLL@0,0,0` (whitespace around `@` allowed).
    fn from_str(s: &str) -> Result<Self> {
        let (shapes, offsets) = s
            .split_once('@')
            .ok_or_else(|| Error::InvalidPattern(format!("expected SHAPES@x1,x2,x3, got {s:?}")))?;
        Pattern::parse(shapes, offsets)
    }
}
