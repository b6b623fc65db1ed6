//! `history.csv`: one row per trial.
//!
//! Columns: `iter, s1..s5` (0 = line, 1 = circle), `x1..x3` (mm, three
//! decimals), `voltage_V, reward_norm, best_so_far_V` and
//! `p_circle_s1..p_circle_s5`. Real values other than offsets carry nine
//! significant digits.

use std::path::Path;

use crate::circuit::{OFFSET_COUNT, SHAPE_COUNT};
use crate::cocabo::TrialRecord;
use crate::error::{Error, Result};

use super::format::{mm3, sig9};

pub const HISTORY_HEADER: [&str; 17] = [
    "iter",
    "s1",
    "s2",
    "s3",
    "s4",
    "s5",
    "x1",
    "x2",
    "x3",
    "voltage_V",
    "reward_norm",
    "best_so_far_V",
    "p_circle_s1",
    "p_circle_s2",
    "p_circle_s3",
    "p_circle_s4",
    "p_circle_s5",
];

/// A parsed `history.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub iter: usize,
    pub shapes: [usize; SHAPE_COUNT],
    pub offsets: [f64; OFFSET_COUNT],
    pub voltage: f64,
    pub reward_norm: f64,
    pub best_so_far: f64,
    pub p_circle: [f64; SHAPE_COUNT],
}

fn fields(r: &TrialRecord) -> Vec<String> {
    let mut f = vec![r.iteration.to_string()];
    f.extend(r.input.categorical.iter().map(|h| h.to_string()));
    f.extend(r.input.continuous.iter().map(|&x| mm3(x)));
    f.push(sig9(r.voltage));
    f.push(sig9(r.normalized_reward));
    f.push(sig9(r.best_so_far));
    f.extend(r.p_circle().into_iter().map(sig9));
    f
}

impl HistoryRow {
    /// The row a record becomes once written, i.e. rounded to the
    /// serialized precision.
    pub fn from_record(r: &TrialRecord) -> Result<Self> {
        parse_row(&fields(r), Path::new("<memory>"))
    }
}

pub fn history_to_string(records: &[TrialRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HISTORY_HEADER).expect("in-memory write");
    for r in records {
        w.write_record(fields(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn write_history(path: &Path, records: &[TrialRecord]) -> Result<()> {
    std::fs::write(path, history_to_string(records)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_row<S: AsRef<str>>(rec: &[S], path: &Path) -> Result<HistoryRow> {
    let bad = |m: String| Error::Format {
        path: path.to_path_buf(),
        message: m,
    };
    if rec.len() != HISTORY_HEADER.len() {
        return Err(bad(format!(
            "expected {} fields, got {}",
            HISTORY_HEADER.len(),
            rec.len()
        )));
    }
    let num = |i: usize| -> Result<f64> {
        rec[i].as_ref().parse::<f64>().map_err(|_| {
            bad(format!(
                "column {}: {:?}",
                HISTORY_HEADER[i],
                rec[i].as_ref()
            ))
        })
    };
    let int = |i: usize| -> Result<usize> {
        rec[i].as_ref().parse::<usize>().map_err(|_| {
            bad(format!(
                "column {}: {:?}",
                HISTORY_HEADER[i],
                rec[i].as_ref()
            ))
        })
    };
    let mut shapes = [0; SHAPE_COUNT];
    for (k, s) in shapes.iter_mut().enumerate() {
        *s = int(1 + k)?;
    }
    let mut offsets = [0.0; OFFSET_COUNT];
    for (k, x) in offsets.iter_mut().enumerate() {
        *x = num(6 + k)?;
    }
    let mut p_circle = [0.0; SHAPE_COUNT];
    for (k, p) in p_circle.iter_mut().enumerate() {
        *p = num(12 + k)?;
    }
    Ok(HistoryRow {
        iter: int(0)?,
        shapes,
        offsets,
        voltage: num(9)?,
        reward_norm: num(10)?,
        best_so_far: num(11)?,
        p_circle,
    })
}

pub fn read_history(path: &Path) -> Result<Vec<HistoryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let header = r.headers().map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    if header.iter().ne(HISTORY_HEADER.iter().copied()) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "not a history.csv header".into(),
        });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let v: Vec<&str> = rec.iter().collect();
        rows.push(parse_row(&v, path)?);
    }
    Ok(rows)
}
