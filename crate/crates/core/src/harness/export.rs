//! Plot-ready CSVs derived from run histories and oracle tables.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::format::sig9;
use super::history::read_history;
use super::oracle::{circle_stats, read_oracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    /// `iter, voltage, best_so_far` from a history.
    VoltageTrace,
    /// `iter, p_circle_s1..p_circle_s5` from a history.
    ProbabilityHeatmap,
    /// `k, connected, disconnected, mean_ohms, min_ohms, max_ohms` from an
    /// enumeration table.
    ResistanceByCircles,
}

impl ExportKind {
    pub const ALL: [ExportKind; 3] = [
        ExportKind::VoltageTrace,
        ExportKind::ProbabilityHeatmap,
        ExportKind::ResistanceByCircles,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExportKind::VoltageTrace => "voltage_trace",
            ExportKind::ProbabilityHeatmap => "probability_heatmap",
            ExportKind::ResistanceByCircles => "resistance_by_circles",
        }
    }
}

impl fmt::Display for ExportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown export kind {s:?}")))
    }
}

fn to_csv(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Reads `input` and renders the requested table.
pub fn export_plotdata(kind: ExportKind, input: &Path) -> Result<String> {
    Ok(match kind {
        ExportKind::VoltageTrace => {
            let rows = read_history(input)?
                .into_iter()
                .map(|r| vec![r.iter.to_string(), sig9(r.voltage), sig9(r.best_so_far)])
                .collect();
            to_csv(&["iter", "voltage", "best_so_far"], rows)
        }
        ExportKind::ProbabilityHeatmap => {
            let rows = read_history(input)?
                .into_iter()
                .map(|r| {
                    let mut f = vec![r.iter.to_string()];
                    f.extend(r.p_circle.iter().map(|&p| sig9(p)));
                    f
                })
                .collect();
            to_csv(
                &[
                    "iter",
                    "p_circle_s1",
                    "p_circle_s2",
                    "p_circle_s3",
                    "p_circle_s4",
                    "p_circle_s5",
                ],
                rows,
            )
        }
        ExportKind::ResistanceByCircles => {
            let opt = |v: Option<f64>| v.map(sig9).unwrap_or_default();
            let rows = circle_stats(&read_oracle(input)?)
                .into_iter()
                .map(|s| {
                    vec![
                        s.circles.to_string(),
                        s.connected.to_string(),
                        s.disconnected.to_string(),
                        opt(s.mean_ohms),
                        opt(s.min_ohms),
                        opt(s.max_ohms),
                    ]
                })
                .collect();
            to_csv(
                &[
                    "k",
                    "connected",
                    "disconnected",
                    "mean_ohms",
                    "min_ohms",
                    "max_ohms",
                ],
                rows,
            )
        }
    })
}

pub fn write_plotdata(kind: ExportKind, input: &Path, output: &Path) -> Result<()> {
    let text = export_plotdata(kind, input)?;
    std::fs::write(output, text).map_err(|source| Error::Io {
        path: output.to_path_buf(),
        source,
    })
}
