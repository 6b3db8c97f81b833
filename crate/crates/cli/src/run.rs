use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use orgtree::metrics::partition_from_organizations;
use orgtree::{detect, interaction_graph, modularity, Body, NTree, Organization, Vec2, World};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Config, ConfigError};
use crate::error::RunError;
use crate::render::{render_svg, svg_file_name};
use crate::trace::{find_frame, read_trace, Frame, TraceWriter};

pub const TRACE_FILE: &str = "trace.jsonl";

/// Placement seed of species `index` when the config gives none.
pub fn species_seed(config: &Config, index: usize) -> u64 {
    config.species[index]
        .seed
        .unwrap_or_else(|| config.seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index as u64 + 1))
}

/// Initial bodies: each species uniformly in its disk, ids assigned in
/// species order.
pub fn place_bodies(config: &Config) -> Vec<Body> {
    let mut bodies = Vec::with_capacity(config.body_count());
    for (s, sc) in config.species.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(species_seed(config, s));
        let center = sc.center.unwrap_or_else(|| config.world.root.center());
        for _ in 0..sc.count {
            let r = sc.radius * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let heading = rng.gen_range(0.0..std::f64::consts::TAU);
            let p = Vec2::new(center.x + r * a.cos(), center.y + r * a.sin());
            let root = config.world.root;
            // keep rounding at the disk rim from leaving the root box
            let p = Vec2::new(p.x.clamp(root.min.x, root.max.x), p.y.clamp(root.min.y, root.max.y));
            let v = Vec2::new(heading.cos(), heading.sin()) * sc.initial_speed;
            bodies.push(Body {
                id: bodies.len(),
                species: s,
                position: p,
                velocity: v,
                charge: sc.charge,
            });
        }
    }
    bodies
}

pub fn initial_world(config: &Config) -> Result<World, RunError> {
    World::new(config.world_params(), config.species_params(), place_bodies(config), config.seed).map_err(|e| {
        RunError::Config(ConfigError::Invalid {
            field: "species".into(),
            reason: e.to_string(),
        })
    })
}

/// Detection seed for a given step; the partition does not depend on it,
/// only the exploration order does.
fn detection_seed(config: &Config, step: u64) -> u64 {
    config.seed ^ step.rotate_left(32)
}

pub fn organizations(config: &Config, tree: &NTree, step: u64) -> Vec<Organization> {
    detect(
        tree,
        config.detection.depth_threshold,
        config.detection.min_org_size,
        detection_seed(config, step),
    )
}

/// Modularity of the detected partition (unassigned bodies form one extra
/// group). `None` with fewer than two bodies or no edge weight.
pub fn frame_modularity(config: &Config, bodies: &[Body], orgs: &[Organization]) -> Option<f64> {
    if bodies.len() < 2 {
        return None;
    }
    let g = interaction_graph(bodies, config.output.weights).ok()?;
    let groups = partition_from_organizations(bodies, orgs).ok()?;
    modularity(&g, &groups).ok()
}

fn observe(config: &Config, world: &World) -> Frame {
    let orgs = organizations(config, world.tree(), world.step_count());
    let q = if config.output.metrics {
        frame_modularity(config, world.bodies(), &orgs)
    } else {
        None
    };
    Frame::of(world, orgs, q)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: u64,
    pub frames: usize,
    pub svgs: usize,
    pub final_organizations: usize,
}

/// Runs the configured simulation, writing the trace to `trace` and SVG
/// snapshots into `svg_dir` when SVG output is enabled.
pub fn simulate_to<W: Write>(config: &Config, trace: W, svg_dir: Option<&Path>) -> Result<RunSummary, RunError> {
    config.validate()?;
    let mut world = initial_world(config)?;
    let mut writer = TraceWriter::new(trace, config)?;
    let mut summary = RunSummary {
        steps: config.steps,
        frames: 0,
        svgs: 0,
        final_organizations: 0,
    };
    let species = config.species.len();
    loop {
        let step = world.step_count();
        let last = step == config.steps;
        let want_frame = last || step % config.output.frame_every == 0;
        let want_svg = svg_dir.is_some() && config.output.svg_every > 0 && step % config.output.svg_every == 0;
        if want_frame || want_svg {
            let frame = observe(config, &world);
            if want_svg {
                let dir = svg_dir.expect("checked above");
                fs::write(dir.join(svg_file_name(step)), render_svg(world.tree(), &frame.organizations, species))?;
                summary.svgs += 1;
            }
            if want_frame {
                writer.frame(&frame)?;
                summary.frames += 1;
            }
            if last {
                summary.final_organizations = frame.organizations.len();
            }
        }
        if last {
            break;
        }
        world.step().map_err(|source| RunError::Dynamics { step, source })?;
    }
    writer.finish()?;
    Ok(summary)
}

/// [`simulate_to`] into `out_dir/trace.jsonl`, with SVGs alongside.
pub fn simulate(config: &Config, out_dir: &Path) -> Result<RunSummary, RunError> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let file = BufWriter::new(File::create(out_dir.join(TRACE_FILE))?);
    simulate_to(config, file, Some(out_dir))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OfflineDetection {
    pub step: u64,
    pub depth_threshold: u32,
    pub organizations: Vec<Organization>,
}

fn open_trace(path: &Path) -> Result<(crate::trace::Header, Vec<Frame>), RunError> {
    read_trace(BufReader::new(File::open(path)?))
}

/// Rebuilds the tree of a recorded frame and re-runs detection, at the
/// recorded depth threshold unless `depth` is given.
pub fn detect_offline(trace: &Path, step: u64, depth: Option<u32>) -> Result<OfflineDetection, RunError> {
    let (header, frames) = open_trace(trace)?;
    let mut config = header.config;
    let frame = find_frame(frames, step)?;
    if let Some(d) = depth {
        config.detection.depth_threshold = d;
    }
    let tree = frame_tree(&config, &frame)?;
    Ok(OfflineDetection {
        step,
        depth_threshold: config.detection.depth_threshold,
        organizations: organizations(&config, &tree, step),
    })
}

fn frame_tree(config: &Config, frame: &Frame) -> Result<NTree, RunError> {
    NTree::build(
        &frame.bodies(config),
        config.world.root,
        config.world.capacity,
        config.world.max_depth,
    )
    .map_err(|e| RunError::Trace(format!("step {}: {e}", frame.step)))
}

/// Re-renders recorded frames (all of them, or only `step`) into `out_dir`.
pub fn render_trace(trace: &Path, step: Option<u64>, out_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let (header, frames) = open_trace(trace)?;
    let frames = match step {
        Some(s) => vec![find_frame(frames, s)?],
        None => frames,
    };
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::with_capacity(frames.len());
    for f in &frames {
        let tree = frame_tree(&header.config, f)?;
        let path = out_dir.join(svg_file_name(f.step));
        fs::write(&path, render_svg(&tree, &f.organizations, header.config.species.len()))?;
        written.push(path);
    }
    Ok(written)
}
