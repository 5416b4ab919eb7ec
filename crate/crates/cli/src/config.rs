use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use isosect_core::levelset::{DEFAULT_LEVEL_EPS, MIN_T_STEPS, MIN_XI_PER_THETA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    John,
    Levelset,
    Certify,
    Busemann,
    Starbodies,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::John => "john",
            Pipeline::Levelset => "levelset",
            Pipeline::Certify => "certify",
            Pipeline::Busemann => "busemann",
            Pipeline::Starbodies => "starbodies",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub theta: usize,
    pub xi: usize,
    pub t_steps: usize,
    /// Points on the section circle of the reference normal.
    pub circle: usize,
    pub planes: usize,
    pub plane_samples: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Grids { theta: 1000, xi: 32, t_steps: 32, circle: 720, planes: 50, plane_samples: 360 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Eps {
    pub john: f64,
    pub level: f64,
    /// Certificate and section-fit tolerance; derived from the other two
    /// when absent.
    pub cert: Option<f64>,
}

impl Default for Eps {
    fn default() -> Self {
        Eps { john: 1e-10, level: DEFAULT_LEVEL_EPS, cert: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub body_spec: String,
    pub pipeline: Pipeline,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub eps: Eps,
    #[serde(default)]
    pub seed: u64,
    /// Reference normal; the last coordinate axis when absent.
    #[serde(default)]
    pub xi0: Option<Vec<f64>>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(body_spec: impl Into<String>, pipeline: Pipeline) -> Self {
        ExperimentConfig {
            body_spec: body_spec.into(),
            pipeline,
            grids: Grids::default(),
            eps: Eps::default(),
            seed: 0,
            xi0: None,
            out_dir: default_out(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn cert_tol(&self) -> f64 {
        self.eps
            .cert
            .unwrap_or_else(|| isosect_core::starbodies::default_tol(self.eps.john, self.eps.level))
    }

    pub fn validate(&self) -> Result<()> {
        let mut checks = vec![("john", self.eps.john), ("level", self.eps.level)];
        if let Some(c) = self.eps.cert {
            checks.push(("cert", c));
        }
        for (name, e) in checks {
            if !(e > 0.0 && e <= 0.1) {
                bail!("config invalid: {name} eps must lie in (0, 0.1], got {e}");
            }
        }
        let g = &self.grids;
        let needs_table = matches!(self.pipeline, Pipeline::Levelset | Pipeline::Certify | Pipeline::Starbodies);
        if needs_table {
            if g.theta < 16 {
                bail!("config invalid: theta grid must have at least 16 points, got {}", g.theta);
            }
            if g.xi < MIN_XI_PER_THETA {
                bail!("config invalid: xi scan must have at least {MIN_XI_PER_THETA} points, got {}", g.xi);
            }
            if g.t_steps < MIN_T_STEPS {
                bail!("config invalid: t steps must be at least {MIN_T_STEPS}, got {}", g.t_steps);
            }
            if g.circle < 8 {
                bail!("config invalid: section circle must have at least 8 points, got {}", g.circle);
            }
        }
        if self.pipeline == Pipeline::Busemann && (g.planes < 20 || g.plane_samples < 6) {
            bail!("config invalid: need at least 20 planes and 6 samples per plane");
        }
        Ok(())
    }
}
