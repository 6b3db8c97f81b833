//! Multi-species boids on top of the quadtree.
//!
//! Velocities for step `t + 1` are computed from the state at step `t` only,
//! then positions advance by explicit Euler and the tree is rebuilt. Neighbor
//! lists are sorted by id before any summation, so a body's new velocity does
//! not depend on the order bodies were stored or processed in.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec2};
use crate::ntree::{Body, NTree, DEFAULT_MAX_DEPTH};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeciesParams {
    /// Weight on the previous velocity.
    pub alpha: f64,
    /// Cohesion weight.
    pub beta: f64,
    /// Intra-species separation weight.
    pub gamma: f64,
    /// Alignment weight.
    pub delta: f64,
    pub neighbor_radius: f64,
    /// Separation weight against boids of other species.
    pub inter_species_gamma: f64,
    pub max_speed: f64,
}

impl Default for SpeciesParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.3,
            gamma: 0.5,
            delta: 0.3,
            neighbor_radius: 5.0,
            inter_species_gamma: 2.0,
            max_speed: 2.0,
        }
    }
}

impl SpeciesParams {
    /// Damped preset that holds a flock of tens of boids together for
    /// hundreds of steps. With the defaults (`alpha = 1`, so nothing damps
    /// the velocity) separation wins and tight flocks disperse.
    pub fn cohesive() -> Self {
        Self {
            alpha: 0.9,
            beta: 1.0,
            gamma: 0.05,
            delta: 0.3,
            neighbor_radius: 10.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.neighbor_radius > 0.0 && self.neighbor_radius.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "neighbor_radius",
                reason: format!("must be > 0, got {}", self.neighbor_radius),
            });
        }
        if !(self.max_speed > 0.0 && self.max_speed.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "max_speed",
                reason: format!("must be > 0, got {}", self.max_speed),
            });
        }
        let coefs = [self.alpha, self.beta, self.gamma, self.delta, self.inter_species_gamma];
        if coefs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "coefficients",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CohesionMode {
    /// `Σ wᵢ xᵢ / Σ wᵢ − xⱼ` with `wᵢ = 1/|xᵢ − xⱼ|²`.
    #[default]
    Normalized,
    /// `Σ xᵢ / |xᵢ − xⱼ|² − xⱼ`, unnormalized.
    Literal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Fold back into the box and negate the offending velocity component.
    #[default]
    Reflect,
    /// Periodic domain.
    Wrap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldParams {
    pub root: Aabb,
    pub capacity: usize,
    pub max_depth: u32,
    pub dt: f64,
    pub boundary: Boundary,
    pub cohesion: CohesionMode,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            root: Aabb {
                min: Vec2::new(0.0, 0.0),
                max: Vec2::new(100.0, 100.0),
            },
            capacity: 10,
            max_depth: DEFAULT_MAX_DEPTH,
            dt: 0.1,
            boundary: Boundary::Reflect,
            cohesion: CohesionMode::Normalized,
        }
    }
}

#[inline]
fn dist_sq_checked(j: &Body, i: &Body) -> Result<f64> {
    let d2 = (i.position - j.position).norm_sq();
    if d2 == 0.0 {
        return Err(Error::ZeroDistance { a: j.id, b: i.id });
    }
    Ok(d2)
}

pub fn cohesion(j: &Body, neighbors: &[&Body], mode: CohesionMode) -> Result<Vec2> {
    if neighbors.is_empty() {
        return Ok(Vec2::ZERO);
    }
    let mut weighted = Vec2::ZERO;
    let mut total = 0.0;
    for n in neighbors {
        let w = 1.0 / dist_sq_checked(j, n)?;
        weighted += n.position * w;
        total += w;
    }
    Ok(match mode {
        CohesionMode::Normalized => weighted / total - j.position,
        CohesionMode::Literal => weighted - j.position,
    })
}

/// `coefficient · Σ (xⱼ − xᵢ) / |xᵢ − xⱼ|³`
pub fn separation(j: &Body, neighbors: &[&Body], coefficient: f64) -> Result<Vec2> {
    let mut s = Vec2::ZERO;
    for n in neighbors {
        let d2 = dist_sq_checked(j, n)?;
        s += (j.position - n.position) / (d2 * d2.sqrt());
    }
    Ok(s * coefficient)
}

/// `Σ vᵢ / (|η| · |xᵢ − xⱼ|²)`
pub fn alignment(j: &Body, neighbors: &[&Body]) -> Result<Vec2> {
    let card = neighbors.len() as f64;
    let mut a = Vec2::ZERO;
    for n in neighbors {
        let d2 = dist_sq_checked(j, n)?;
        a += n.velocity / (card * d2);
    }
    Ok(a)
}

#[inline]
fn clamp_speed(v: Vec2, max_speed: f64) -> Vec2 {
    let s = v.norm();
    if s > max_speed {
        v * (max_speed / s)
    } else {
        v
    }
}

/// Bodies, their tree and the parameters that drive them.
///
/// Body ids are `0..n` and `bodies[id].id == id`.
#[derive(Clone, Debug)]
pub struct World {
    params: WorldParams,
    species: Vec<SpeciesParams>,
    bodies: Vec<Body>,
    tree: NTree,
    step: u64,
    seed: u64,
}

impl World {
    pub fn new(params: WorldParams, species: Vec<SpeciesParams>, mut bodies: Vec<Body>, seed: u64) -> Result<Self> {
        if !(params.dt.is_finite() && params.dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("must be > 0, got {}", params.dt),
            });
        }
        for s in &species {
            s.validate()?;
        }
        bodies.sort_by_key(|b| b.id);
        for (k, b) in bodies.iter().enumerate() {
            if b.id != k {
                return Err(Error::InvalidParameter {
                    name: "bodies",
                    reason: format!("ids must be 0..{}, found {} at rank {k}", bodies.len(), b.id),
                });
            }
            if b.species >= species.len() {
                return Err(Error::InvalidParameter {
                    name: "species",
                    reason: format!("body {} uses species {} of {}", b.id, b.species, species.len()),
                });
            }
            if !b.velocity.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "velocity",
                    reason: format!("body {} has non-finite velocity", b.id),
                });
            }
        }
        let tree = NTree::build(&bodies, params.root, params.capacity, params.max_depth)?;
        Ok(Self {
            params,
            species,
            bodies,
            tree,
            step: 0,
            seed,
        })
    }

    pub fn params(&self) -> &WorldParams {
        &self.params
    }

    pub fn species(&self) -> &[SpeciesParams] {
        &self.species
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn tree(&self) -> &NTree {
        &self.tree
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn body(&self, id: usize) -> Result<&Body> {
        self.bodies.get(id).ok_or(Error::UnknownBody(id))
    }

    /// Ids within the neighbor radius of `id`'s species, excluding `id`,
    /// restricted to its own species or to all other species. Sorted.
    pub fn neighborhood(&self, id: usize, same_species: bool) -> Result<Vec<usize>> {
        let j = self.body(id)?;
        let r = self.species[j.species].neighbor_radius;
        let mut ids: Vec<usize> = self
            .tree
            .query_radius(j.position, r)
            .into_iter()
            .filter(|&i| i != id && (self.bodies[i].species == j.species) == same_species)
            .collect();
        ids.sort_unstable();
        Ok(ids)
    }

    fn resolve(&self, ids: &[usize]) -> Vec<&Body> {
        ids.iter().map(|&i| &self.bodies[i]).collect()
    }

    /// Velocity of `id` for the next step, read from the current state.
    pub fn step_velocity(&self, id: usize) -> Result<Vec2> {
        let j = self.body(id)?;
        let sp = &self.species[j.species];
        let same = self.neighborhood(id, true)?;
        let same = self.resolve(&same);

        // zero-weight terms are skipped so that e.g. alpha = 1 alone keeps v bitwise
        let mut v = j.velocity * sp.alpha;
        if sp.beta != 0.0 {
            v += cohesion(j, &same, self.params.cohesion)? * sp.beta;
        }
        if sp.gamma != 0.0 {
            v += separation(j, &same, sp.gamma)?;
        }
        if sp.delta != 0.0 {
            v += alignment(j, &same)? * sp.delta;
        }
        if sp.inter_species_gamma != 0.0 {
            let others = self.neighborhood(id, false)?;
            if !others.is_empty() {
                v += separation(j, &self.resolve(&others), sp.inter_species_gamma)?;
            }
        }
        Ok(clamp_speed(v, sp.max_speed))
    }

    /// Synchronous step: all velocities from the current state, then
    /// positions, boundary policy and a fresh tree.
    pub fn step(&mut self) -> Result<()> {
        let velocities: Vec<Vec2> = (0..self.bodies.len())
            .into_par_iter()
            .map(|id| self.step_velocity(id))
            .collect::<Result<_>>()?;
        let root = self.params.root;
        let dt = self.params.dt;
        for (b, v) in self.bodies.iter_mut().zip(velocities) {
            b.velocity = v;
            b.position += v * dt;
            apply_boundary(b, &root, self.params.boundary);
        }
        self.tree = NTree::build(&self.bodies, root, self.params.capacity, self.params.max_depth)?;
        self.step += 1;
        Ok(())
    }
}

fn apply_boundary(b: &mut Body, root: &Aabb, policy: Boundary) {
    let (px, vx) = fold_axis(b.position.x, b.velocity.x, root.min.x, root.max.x, policy);
    let (py, vy) = fold_axis(b.position.y, b.velocity.y, root.min.y, root.max.y, policy);
    b.position = Vec2::new(px, py);
    b.velocity = Vec2::new(vx, vy);
}

fn fold_axis(x: f64, v: f64, lo: f64, hi: f64, policy: Boundary) -> (f64, f64) {
    if x >= lo && x <= hi {
        return (x, v);
    }
    match policy {
        Boundary::Reflect => {
            let folded = if x < lo { 2.0 * lo - x } else { 2.0 * hi - x };
            // a jump longer than the box width would fold out the other side
            (folded.clamp(lo, hi), -v)
        }
        Boundary::Wrap => {
            let w = hi - lo;
            let wrapped = lo + (x - lo).rem_euclid(w);
            (wrapped.clamp(lo, hi), v)
        }
    }
}
