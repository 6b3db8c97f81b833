//! A 2D adaptive quadtree used for two jobs at once: accelerating pairwise
//! kernels (boids neighborhoods, inverse-square fields) and detecting dense
//! groups of bodies by grouping adjacent deep leaf cells.

pub mod boids;
pub mod detect;
pub mod error;
mod fsum;
pub mod geometry;
pub mod kernels;
pub mod metrics;
pub mod ntree;

pub use boids::{Boundary, CohesionMode, SpeciesParams, World, WorldParams};
pub use detect::{detect, group_cells, group_cells2, CellSet, Organization};
pub use error::{Error, Result};
pub use geometry::{boxes_overlap_or_touch, cell_box, cells_adjacent, Aabb, CellCoord, Vec2};
pub use kernels::{KernelMode, KernelParams};
pub use metrics::{interaction_graph, modularity, WeightTransform, WeightedGraph};
pub use ntree::{Body, NTree};
