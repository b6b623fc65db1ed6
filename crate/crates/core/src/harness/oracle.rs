//! Exhaustive evaluation over all shape combinations and an offset grid.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{obstacle_contact, simulate, Pattern, OFFSET_LIMIT, SHAPE_COUNT};
use crate::error::{Error, Result};
use crate::experiment::ExperimentSpec;

use super::format::{mm3, sig9};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub pattern: Pattern,
    pub voltage: f64,
    /// Bar-to-bar resistance of the traces; `None` when open.
    pub resistance: Option<f64>,
    pub contact: bool,
}

/// Connection resistance summary over patterns with `circles` circles.
/// Open (disconnected) patterns are counted but excluded from the
/// statistics, whose fields are `None` when nothing is connected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleStats {
    pub circles: usize,
    pub connected: usize,
    pub disconnected: usize,
    pub mean_ohms: Option<f64>,
    pub min_ohms: Option<f64>,
    pub max_ohms: Option<f64>,
}

impl CircleStats {
    pub fn spread(&self) -> Option<f64> {
        Some(self.max_ohms? - self.min_ohms?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleTable {
    /// Descending by voltage; ties keep enumeration order.
    pub entries: Vec<OracleEntry>,
    /// Indexed by circle count 0..=5.
    pub by_circles: Vec<CircleStats>,
}

impl OracleTable {
    pub fn best(&self) -> &OracleEntry {
        &self.entries[0]
    }
}

/// Offsets `-20, -20 + step, …, 20`. The step must divide 40 mm.
pub fn offset_grid(step: f64) -> Result<Vec<f64>> {
    let span = 2.0 * OFFSET_LIMIT;
    let n = span / step;
    if !(step > 0.0) || (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "grid step {step} mm must evenly divide {span} mm"
        )));
    }
    let n = n.round() as usize;
    Ok((0..=n)
        .map(|i| -OFFSET_LIMIT + span * i as f64 / n as f64)
        .collect())
}

pub fn circle_stats(entries: &[OracleEntry]) -> Vec<CircleStats> {
    (0..=SHAPE_COUNT)
        .map(|k| {
            let of_k: Vec<&OracleEntry> = entries
                .iter()
                .filter(|e| e.pattern.circle_count() == k)
                .collect();
            let rs: Vec<f64> = of_k.iter().filter_map(|e| e.resistance).collect();
            let (mean, min, max) = if rs.is_empty() {
                (None, None, None)
            } else {
                (
                    Some(rs.iter().sum::<f64>() / rs.len() as f64),
                    Some(rs.iter().copied().fold(f64::INFINITY, f64::min)),
                    Some(rs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                )
            };
            CircleStats {
                circles: k,
                connected: rs.len(),
                disconnected: of_k.len() - rs.len(),
                mean_ohms: mean,
                min_ohms: min,
                max_ohms: max,
            }
        })
        .collect()
}

/// Evaluates all 32 shape combinations on the offset grid.
pub fn enumerate_oracle(experiment: &ExperimentSpec, grid_step: f64) -> Result<OracleTable> {
    let grid = offset_grid(grid_step)?;
    let mut patterns = Vec::new();
    for mask in 0..(1u32 << SHAPE_COUNT) {
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    patterns.push(Pattern::from_mask(mask, [a, b, c])?);
                }
            }
        }
    }
    let mut entries = patterns
        .par_iter()
        .map(|p| {
            let s = simulate(p, experiment)?;
            Ok(OracleEntry {
                pattern: *p,
                voltage: s.load_voltage(),
                resistance: s.connection_resistance()?,
                contact: obstacle_contact(p),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| b.voltage.total_cmp(&a.voltage));
    let by_circles = circle_stats(&entries);
    Ok(OracleTable {
        entries,
        by_circles,
    })
}

pub const ORACLE_HEADER: [&str; 13] = [
    "rank",
    "s1",
    "s2",
    "s3",
    "s4",
    "s5",
    "x1",
    "x2",
    "x3",
    "voltage_V",
    "resistance_ohm",
    "circles",
    "contact",
];

pub fn write_oracle(path: &Path, table: &OracleTable) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(ORACLE_HEADER).map_err(csv_err)?;
    for (i, e) in table.entries.iter().enumerate() {
        let mut f = vec![(i + 1).to_string()];
        f.extend(e.pattern.shapes.iter().map(|s| s.index().to_string()));
        f.extend(e.pattern.offsets.iter().map(|&x| mm3(x)));
        f.push(sig9(e.voltage));
        f.push(e.resistance.map(sig9).unwrap_or_default());
        f.push(e.pattern.circle_count().to_string());
        f.push(u8::from(e.contact).to_string());
        w.write_record(&f).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_oracle(path: &Path) -> Result<Vec<OracleEntry>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let bad = |m: String| Error::Format {
        path: path.to_path_buf(),
        message: m,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    if r.headers()
        .map_err(csv_err)?
        .iter()
        .ne(ORACLE_HEADER.iter().copied())
    {
        return Err(bad("not an enumeration table header".into()));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| {
            get(i)
                .parse::<f64>()
                .map_err(|_| bad(format!("{}: {:?}", ORACLE_HEADER[i], get(i))))
        };
        let shapes: String = (1..=5)
            .map(|i| match get(i) {
                "0" => Ok('L'),
                "1" => Ok('C'),
                other => Err(bad(format!("shape {other:?}"))),
            })
            .collect::<Result<_>>()?;
        let offsets = format!("{},{},{}", get(6), get(7), get(8));
        let pattern = Pattern::parse(&shapes, &offsets)?;
        let resistance = if get(10).is_empty() {
            None
        } else {
            Some(num(10)?)
        };
        out.push(OracleEntry {
            pattern,
            voltage: num(9)?,
            resistance,
            contact: get(12) == "1",
        });
    }
    Ok(out)
}
