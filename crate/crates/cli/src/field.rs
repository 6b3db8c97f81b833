//! Direct versus tree-code field evaluation over the configured initial
//! placement.

use std::io::Write;
use std::time::Instant;

use orgtree::kernels::{direct_fields, relative_error, tree_fields};
use orgtree::{NTree, Vec2};
use serde::Serialize;

use crate::config::Config;
use crate::error::RunError;
use crate::run::place_bodies;

#[derive(Clone, Debug, Serialize)]
struct FieldLine {
    id: usize,
    direct: Vec2,
    tree: Vec2,
    relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldSummary {
    pub bodies: usize,
    pub theta: f64,
    pub max_relative_error: f64,
    pub mean_relative_error: f64,
    pub direct_seconds: f64,
    pub tree_build_seconds: f64,
    pub tree_seconds: f64,
}

/// Writes one JSON line per body, then `{"summary": …}`.
pub fn field_run<W: Write>(config: &Config, mut out: W) -> Result<FieldSummary, RunError> {
    config.validate()?;
    let bodies = place_bodies(config);
    let dynamics = |source| RunError::Dynamics { step: 0, source };
    config.kernels.check_charges(&bodies).map_err(dynamics)?;

    let t0 = Instant::now();
    let direct = direct_fields(&bodies, &config.kernels).map_err(dynamics)?;
    let direct_seconds = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let tree = NTree::build(&bodies, config.world.root, config.world.capacity, config.world.max_depth)
        .map_err(dynamics)?;
    let tree_build_seconds = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let approx = tree_fields(&tree, &config.kernels).map_err(dynamics)?;
    let tree_seconds = t0.elapsed().as_secs_f64();

    let mut max = 0.0f64;
    let mut total = 0.0;
    for (b, (d, t)) in bodies.iter().zip(direct.iter().zip(&approx)) {
        let e = relative_error(*t, *d);
        max = max.max(e);
        total += e;
        let line = FieldLine {
            id: b.id,
            direct: *d,
            tree: *t,
            relative_error: e,
        };
        serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    let summary = FieldSummary {
        bodies: bodies.len(),
        theta: config.kernels.theta,
        max_relative_error: max,
        mean_relative_error: if bodies.is_empty() { 0.0 } else { total / bodies.len() as f64 },
        direct_seconds,
        tree_build_seconds,
        tree_seconds,
    };
    #[derive(Serialize)]
    struct Wrapped<'a> {
        summary: &'a FieldSummary,
    }
    serde_json::to_writer(&mut out, &Wrapped { summary: &summary }).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(summary)
}
