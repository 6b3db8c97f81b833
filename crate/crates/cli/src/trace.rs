//! JSONL trace: a header line carrying the full config, then one frame per
//! line. Every line parses on its own.

use std::io::{BufRead, Write};

use orgtree::{Body, Organization, Vec2, World};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::RunError;

pub const TRACE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub config: Config,
    pub version: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyRecord {
    pub id: usize,
    pub species: usize,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl From<&Body> for BodyRecord {
    fn from(b: &Body) -> Self {
        Self {
            id: b.id,
            species: b.species,
            x: b.position.x,
            y: b.position.y,
            vx: b.velocity.x,
            vy: b.velocity.y,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub step: u64,
    pub bodies: Vec<BodyRecord>,
    pub organizations: Vec<Organization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modularity: Option<f64>,
}

impl Frame {
    pub fn of(world: &World, organizations: Vec<Organization>, modularity: Option<f64>) -> Self {
        Self {
            step: world.step_count(),
            bodies: world.bodies().iter().map(BodyRecord::from).collect(),
            organizations,
            modularity,
        }
    }

    /// Bodies with charges taken from the species config (frames do not
    /// record them).
    pub fn bodies(&self, config: &Config) -> Vec<Body> {
        self.bodies
            .iter()
            .map(|r| {
                let charge = config.species.get(r.species).map_or(1.0, |s| s.charge);
                Body {
                    id: r.id,
                    species: r.species,
                    position: Vec2::new(r.x, r.y),
                    velocity: Vec2::new(r.vx, r.vy),
                    charge,
                }
            })
            .collect()
    }
}

pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, config: &Config) -> Result<Self, RunError> {
        let header = Header {
            config: config.clone(),
            version: TRACE_VERSION,
        };
        write_line(&mut out, &header)?;
        Ok(Self { out })
    }

    pub fn frame(&mut self, frame: &Frame) -> Result<(), RunError> {
        write_line(&mut self.out, frame)
    }

    pub fn finish(mut self) -> Result<W, RunError> {
        self.out.flush()?;
        Ok(self.out)
    }
}

fn write_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<(), RunError> {
    serde_json::to_writer(&mut *out, value).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Reads a whole trace.
pub fn read_trace<R: BufRead>(input: R) -> Result<(Header, Vec<Frame>), RunError> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| RunError::Trace("empty trace".into()))??;
    let header: Header = serde_json::from_str(&first).map_err(|e| RunError::Trace(format!("line 1: {e}")))?;
    if header.version != TRACE_VERSION {
        return Err(RunError::Trace(format!("unsupported trace version {}", header.version)));
    }
    let mut frames = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Frame = serde_json::from_str(&line).map_err(|e| RunError::Trace(format!("line {}: {e}", k + 2)))?;
        frames.push(f);
    }
    Ok((header, frames))
}

/// The frame recorded at `step`.
pub fn find_frame(frames: Vec<Frame>, step: u64) -> Result<Frame, RunError> {
    frames
        .into_iter()
        .find(|f| f.step == step)
        .ok_or_else(|| RunError::Trace(format!("no frame for step {step}")))
}
