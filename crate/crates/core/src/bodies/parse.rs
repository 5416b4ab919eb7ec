//! The body-spec mini-language:
//!
//! ```text
//! ball:n | ellipsoid:a1,...,an | lp:n:p | cube:n | crosspolytope:n
//! polytope-h:<path> | polytope-v:<path>
//! ```
//!
//! Polytope files hold a JSON array of row (or vertex) vectors.

use std::path::Path;

use nalgebra::DVector;

use super::BodyModel;
use crate::error::{Error, Result};

fn parse_dim(s: &str) -> Result<usize> {
    let n: usize = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad dimension `{s}`")))?;
    if n < 2 {
        return Err(Error::Parse(format!("dimension must be at least 2, got {n}")));
    }
    Ok(n)
}

fn parse_real(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad number `{s}`")))
}

fn read_vectors(path: &Path) -> Result<Vec<DVector<f64>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(rows.into_iter().map(DVector::from_vec).collect())
}

/// Parses a body spec; relative polytope paths resolve against the working
/// directory.
pub fn parse_body_spec(spec: &str) -> Result<BodyModel> {
    parse_body_spec_in(spec, Path::new("."))
}

/// Parses a body spec, resolving relative polytope paths against `base`.
pub fn parse_body_spec_in(spec: &str, base: &Path) -> Result<BodyModel> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("missing `:` in body spec `{spec}`")))?;
    match kind.trim() {
        "ball" => Ok(BodyModel::unit_ball(parse_dim(rest)?)),
        "ellipsoid" => {
            let axes = rest.split(',').map(parse_real).collect::<Result<Vec<_>>>()?;
            if axes.len() < 2 {
                return Err(Error::Parse("ellipsoid needs at least two semi-axes".into()));
            }
            BodyModel::ellipsoid_from_semi_axes(&axes)
        }
        "lp" => {
            let (n, p) = rest
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected lp:n:p, got `{spec}`")))?;
            BodyModel::lp_ball(parse_dim(n)?, parse_real(p)?)
        }
        "cube" => BodyModel::cube(parse_dim(rest)?),
        "crosspolytope" => BodyModel::cross_polytope(parse_dim(rest)?),
        "polytope-h" | "polytope-v" => {
            let path = Path::new(rest.trim());
            let path = if path.is_absolute() { path.to_path_buf() } else { base.join(path) };
            let vectors = read_vectors(&path)?;
            if kind.trim() == "polytope-h" {
                BodyModel::polytope_h(vectors)
            } else {
                BodyModel::polytope_v(vectors)
            }
        }
        other => Err(Error::Parse(format!("unknown body kind `{other}`"))),
    }
}
