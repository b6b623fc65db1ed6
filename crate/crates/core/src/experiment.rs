use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{Bars, Point};
use crate::cocabo::OptimizerConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Plain bar-to-bar connection.
    Baseline,
    /// Adds a low-resistance obstacle at the workspace center.
    Obstacle,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Baseline => "baseline",
            ExperimentKind::Obstacle => "obstacle",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(ExperimentKind::Baseline),
            "obstacle" => Ok(ExperimentKind::Obstacle),
            other => Err(Error::InvalidConfig(format!(
                "unknown experiment {other:?}; expected baseline or obstacle"
            ))),
        }
    }
}

/// Drawing area between the two bars, mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentKind,
    pub source_volts: f64,
    pub load_ohms: f64,
    /// Shunt to ground when the drawing touches the obstacle.
    pub obstacle_ohms: Option<f64>,
    pub workspace: Workspace,
    pub config: OptimizerConfig,
}

impl ExperimentSpec {
    pub fn baseline() -> Self {
        Self {
            name: ExperimentKind::Baseline,
            source_volts: 30.0,
            load_ohms: 45.0,
            obstacle_ohms: None,
            workspace: Workspace {
                width: 380.0,
                height: 100.0,
            },
            config: OptimizerConfig {
                n_init: 5,
                n_iter: 40,
                ..OptimizerConfig::default()
            },
        }
    }

    pub fn obstacle() -> Self {
        Self {
            name: ExperimentKind::Obstacle,
            obstacle_ohms: Some(5.0),
            config: OptimizerConfig {
                n_init: 10,
                n_iter: 30,
                ..OptimizerConfig::default()
            },
            ..Self::baseline()
        }
    }

    pub fn of_kind(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Baseline => Self::baseline(),
            ExperimentKind::Obstacle => Self::obstacle(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.config.seed = seed;
        self
    }

    /// Same electrical setup with the obstacle removed.
    pub fn without_obstacle(&self) -> Self {
        Self {
            name: ExperimentKind::Baseline,
            obstacle_ohms: None,
            ..self.clone()
        }
    }

    pub fn has_obstacle(&self) -> bool {
        self.obstacle_ohms.is_some()
    }

    pub fn bars(&self) -> Bars {
        Bars::for_workspace(self.workspace.width, self.workspace.height)
    }

    pub fn obstacle_center(&self) -> Point {
        Point::new(self.workspace.width / 2.0, self.workspace.height / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.source_volts) || !positive(self.load_ohms) {
            return Err(Error::InvalidConfig(
                "source volts and load ohms must be positive".into(),
            ));
        }
        if !positive(self.workspace.width) || !positive(self.workspace.height) {
            return Err(Error::InvalidConfig(
                "workspace must have positive size".into(),
            ));
        }
        match (self.name, self.obstacle_ohms) {
            (ExperimentKind::Baseline, None) => {}
            (ExperimentKind::Obstacle, Some(r)) if positive(r) => {}
            (ExperimentKind::Baseline, Some(_)) => {
                return Err(Error::InvalidConfig(
                    "baseline experiment has no obstacle".into(),
                ))
            }
            (ExperimentKind::Obstacle, _) => {
                return Err(Error::InvalidConfig(
                    "obstacle resistance must be positive".into(),
                ))
            }
        }
        self.config.validate()
    }
}
