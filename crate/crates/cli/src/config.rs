use std::fs;
use std::path::{Path, PathBuf};

use mdiscord::{MeasParams, OptimizerConfig, QState, StateSpec};
use serde::{Deserialize, Serialize};

/// Settings read from `--config`; command-line flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub state: Option<StateSpec>,
    /// Path to a state file (matrix or spec JSON), relative to the config.
    pub state_file: Option<PathBuf>,
    pub order: Option<Vec<usize>>,
    pub level: Option<usize>,
    pub optimizer: Option<OptimizerConfig>,
    pub sweep: Option<SweepGrid>,
    /// Fixed tree for `flux`.
    pub params: Option<MeasParams>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 1.0,
            points: 21,
        }
    }
}

impl SweepGrid {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        let ok = |m: f64| (0.0..=1.0).contains(&m);
        if !ok(self.start) || !ok(self.stop) {
            return Err(format!("mu grid [{}, {}] leaves [0, 1]", self.start, self.stop));
        }
        match self.points {
            0 => Err("sweep needs at least one point".into()),
            1 => Ok(vec![self.start]),
            n => Ok((0..n)
                .map(|k| {
                    if k + 1 == n {
                        self.stop
                    } else {
                        self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64
                    }
                })
                .collect()),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if let (Some(f), Some(dir)) = (&cfg.state_file, path.parent()) {
            if f.is_relative() {
                cfg.state_file = Some(dir.join(f));
            }
        }
        Ok(cfg)
    }
}

/// Reads a state file holding either a density matrix or a state spec.
pub fn read_state_file(path: &Path) -> Result<QState, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    match serde_json::from_str::<QState>(&text) {
        Ok(s) => Ok(s),
        Err(matrix_err) => match serde_json::from_str::<StateSpec>(&text) {
            Ok(spec) => mdiscord::states::build(&spec).map_err(|e| e.to_string()),
            Err(_) => Err(format!("{}: {matrix_err}", path.display())),
        },
    }
}

pub fn read_params(path: &Path) -> Result<MeasParams, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}
