use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::Parser;

use crate::config::{ExperimentConfig, Pipeline};

/// Section geometry experiments on origin-symmetric convex bodies.
///
/// Exit status: 0 on success, 2 when `certify` rejects the body, 1 on error.
/// TOOL_THREADS caps the worker thread count.
#[derive(Debug, Parser)]
#[command(name = "isosect", version)]
pub struct Args {
    pub pipeline: Pipeline,
    /// Body spec: ball:n, ellipsoid:a1,..,an, lp:n:p, cube:n, crosspolytope:n,
    /// polytope-h:<file>, polytope-v:<file>.
    #[arg(long)]
    pub body: Option<String>,
    #[arg(long)]
    pub theta_grid: Option<usize>,
    #[arg(long)]
    pub xi_scan: Option<usize>,
    #[arg(long)]
    pub t_steps: Option<usize>,
    #[arg(long)]
    pub john_eps: Option<f64>,
    #[arg(long)]
    pub level_eps: Option<f64>,
    #[arg(long)]
    pub cert_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file mirroring the experiment config; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Args {
    /// The merged config and the directory relative polytope paths resolve
    /// against.
    pub fn into_config(self) -> Result<(ExperimentConfig, PathBuf)> {
        let (mut c, base) = match &self.config {
            Some(path) => {
                let mut c = ExperimentConfig::load(path)?;
                c.pipeline = self.pipeline;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (c, base)
            }
            None => {
                let Some(body) = &self.body else {
                    bail!("config invalid: --body is required without --config");
                };
                (ExperimentConfig::new(body.clone(), self.pipeline), PathBuf::from("."))
            }
        };
        if let Some(b) = self.body {
            c.body_spec = b;
        }
        if let Some(v) = self.theta_grid {
            c.grids.theta = v;
        }
        if let Some(v) = self.xi_scan {
            c.grids.xi = v;
        }
        if let Some(v) = self.t_steps {
            c.grids.t_steps = v;
        }
        if let Some(v) = self.john_eps {
            c.eps.john = v;
        }
        if let Some(v) = self.level_eps {
            c.eps.level = v;
        }
        if self.cert_tol.is_some() {
            c.eps.cert = self.cert_tol;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.out {
            c.out_dir = v;
        }
        Ok((c, base))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_defaults() {
        let a = Args::parse_from(["isosect", "certify", "--body", "cube:3", "--theta-grid", "64", "--level-eps", "0.01"]);
        let (c, _) = a.into_config().unwrap();
        assert_eq!(c.pipeline, Pipeline::Certify);
        assert_eq!(c.grids.theta, 64);
        assert_eq!(c.eps.level, 0.01);
        assert!(Args::parse_from(["isosect", "john"]).into_config().is_err());
    }
}
