//! Run configuration. JSON, every section optional, unknown keys rejected.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "steps": 500,
//!   "world": { "root": { "min": [0, 0], "max": [100, 100] }, "capacity": 10 },
//!   "species": [ { "count": 100, "center": [30, 30], "radius": 10 } ],
//!   "detection": { "depth_threshold": 5 }
//! }
//! ```

use std::path::Path;

use orgtree::{Aabb, Boundary, CohesionMode, KernelParams, SpeciesParams, Vec2, WeightTransform, WorldParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
}

/// Prefixes a core parameter error with the config path it came from.
fn param_error(prefix: &str, e: orgtree::Error) -> ConfigError {
    match e {
        orgtree::Error::InvalidParameter { name, reason } => invalid(format!("{prefix}.{name}"), reason),
        other => invalid(prefix, other.to_string()),
    }
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Drives detection tie-breaking and the placement of species without
    /// their own seed.
    pub seed: u64,
    pub steps: u64,
    pub world: WorldConfig,
    pub species: Vec<SpeciesConfig>,
    pub detection: DetectionConfig,
    pub kernels: KernelParams,
    pub output: OutputConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            steps: 100,
            world: WorldConfig::default(),
            species: Vec::new(),
            detection: DetectionConfig::default(),
            kernels: KernelParams::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub root: Aabb,
    pub capacity: usize,
    pub max_depth: u32,
    pub dt: f64,
    pub boundary: Boundary,
}

impl Default for WorldConfig {
    fn default() -> Self {
        let w = WorldParams::default();
        Self {
            root: w.root,
            capacity: w.capacity,
            max_depth: w.max_depth,
            dt: w.dt,
            boundary: w.boundary,
        }
    }
}

/// One species: steering coefficients plus a uniform-disk initial placement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeciesConfig {
    pub count: usize,
    /// Disk center; the root box center when absent.
    pub center: Option<Vec2>,
    pub radius: f64,
    /// Placement seed; derived from the run seed and the species index when
    /// absent.
    pub seed: Option<u64>,
    /// Initial speed, in a uniformly random direction.
    pub initial_speed: f64,
    pub charge: f64,
    pub params: SpeciesParams,
}

impl Default for SpeciesConfig {
    fn default() -> Self {
        Self {
            count: 0,
            center: None,
            radius: 10.0,
            seed: None,
            initial_speed: 1.0,
            charge: 1.0,
            params: SpeciesParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub depth_threshold: u32,
    /// Groups with fewer cells are not reported.
    pub min_org_size: usize,
    pub cohesion: CohesionMode,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            depth_threshold: 5,
            min_org_size: 1,
            cohesion: CohesionMode::Normalized,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Write a frame every this many steps. The initial and final states are
    /// always written.
    pub frame_every: u64,
    /// Write an SVG every this many steps; 0 disables rendering.
    pub svg_every: u64,
    /// Add the modularity of the detected partition to each frame.
    pub metrics: bool,
    pub weights: WeightTransform,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            frame_every: 1,
            svg_every: 0,
            metrics: false,
            weights: WeightTransform::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let w = &self.world;
        w.root.validate().map_err(|e| invalid("world.root", e.to_string()))?;
        if w.capacity < 1 {
            return Err(invalid("world.capacity", "must be >= 1"));
        }
        if !(1..=orgtree::geometry::MAX_CELL_DEPTH).contains(&w.max_depth) {
            return Err(invalid(
                "world.max_depth",
                format!("must be in 1..={}", orgtree::geometry::MAX_CELL_DEPTH),
            ));
        }
        if !(w.dt > 0.0 && w.dt.is_finite()) {
            return Err(invalid("world.dt", "must be > 0"));
        }
        for (i, s) in self.species.iter().enumerate() {
            let field = |name: &str| format!("species[{i}].{name}");
            s.params.validate().map_err(|e| param_error(&field("params"), e))?;
            if !(s.radius >= 0.0 && s.radius.is_finite()) {
                return Err(invalid(field("radius"), "must be >= 0"));
            }
            if !(s.initial_speed >= 0.0 && s.initial_speed.is_finite()) {
                return Err(invalid(field("initial_speed"), "must be >= 0"));
            }
            if !s.charge.is_finite() {
                return Err(invalid(field("charge"), "must be finite"));
            }
            let c = s.center.unwrap_or_else(|| w.root.center());
            let r = s.radius;
            if !(c.x - r >= w.root.min.x && c.x + r <= w.root.max.x && c.y - r >= w.root.min.y && c.y + r <= w.root.max.y)
            {
                return Err(invalid(field("center"), "placement disk must lie inside world.root"));
            }
        }
        self.kernels.validate().map_err(|e| param_error("kernels", e))?;
        if self.output.frame_every == 0 {
            return Err(invalid("output.frame_every", "must be >= 1"));
        }
        self.output
            .weights
            .validate()
            .map_err(|e| param_error("output.weights", e))?;
        Ok(())
    }

    pub fn world_params(&self) -> WorldParams {
        WorldParams {
            root: self.world.root,
            capacity: self.world.capacity,
            max_depth: self.world.max_depth,
            dt: self.world.dt,
            boundary: self.world.boundary,
            cohesion: self.detection.cohesion,
        }
    }

    pub fn species_params(&self) -> Vec<SpeciesParams> {
        self.species.iter().map(|s| s.params).collect()
    }

    pub fn body_count(&self) -> usize {
        self.species.iter().map(|s| s.count).sum()
    }
}
