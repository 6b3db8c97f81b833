//! Adaptive quadtree over bodies.
//!
//! The tree is rebuilt from scratch every step. A cell splits when it holds
//! more than `capacity` bodies, so a leaf may hold exactly `capacity`. Leaves at
//! `max_depth` never split and may exceed capacity (coincident bodies would
//! otherwise recurse forever). Nodes live in an arena in pre-order; the root
//! is at index 0 and children are stored in the order
//! `(0,0), (1,0), (0,1), (1,1)`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cell_box, Aabb, CellCoord, Vec2, MAX_CELL_DEPTH};

pub const DEFAULT_MAX_DEPTH: u32 = 24;

/// A simulated entity. `charge` is the mass in gravity mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub id: usize,
    pub species: usize,
    pub position: Vec2,
    pub velocity: Vec2,
    pub charge: f64,
}

impl Body {
    pub fn at(id: usize, position: Vec2) -> Self {
        Self {
            id,
            species: 0,
            position,
            velocity: Vec2::ZERO,
            charge: 1.0,
        }
    }

    pub fn with_charge(mut self, charge: f64) -> Self {
        self.charge = charge;
        self
    }

    pub fn with_species(mut self, species: usize) -> Self {
        self.species = species;
        self
    }

    pub fn with_velocity(mut self, velocity: Vec2) -> Self {
        self.velocity = velocity;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    /// Arena indices of the four children.
    Internal([usize; 4]),
    /// Indices into [`NTree::bodies`], in input order.
    Leaf(Vec<usize>),
}

/// Cached subtree totals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregates {
    pub count: usize,
    pub total_charge: f64,
    /// `None` for an empty subtree or one whose charges cancel exactly.
    pub center_of_charge: Option<Vec2>,
}

impl Aggregates {
    /// Totals over `bodies` summed in iteration order.
    pub fn of<'a, I: IntoIterator<Item = &'a Body>>(bodies: I) -> Self {
        let mut count = 0;
        let mut total = 0.0;
        let mut moment = Vec2::ZERO;
        for b in bodies {
            count += 1;
            total += b.charge;
            moment += b.position * b.charge;
        }
        let center_of_charge = (count > 0 && total != 0.0).then(|| moment / total);
        Self {
            count,
            total_charge: total,
            center_of_charge,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub coord: CellCoord,
    pub kind: NodeKind,
    pub aggregates: Aggregates,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf(_))
    }

    pub fn children(&self) -> Option<&[usize; 4]> {
        match &self.kind {
            NodeKind::Internal(c) => Some(c),
            NodeKind::Leaf(_) => None,
        }
    }

    pub fn body_indices(&self) -> &[usize] {
        match &self.kind {
            NodeKind::Leaf(v) => v,
            NodeKind::Internal(_) => &[],
        }
    }
}

/// A non-empty or empty leaf cell together with the ids of its bodies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafCell {
    pub coord: CellCoord,
    pub ids: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NTree {
    root_box: Aabb,
    capacity: usize,
    max_depth: u32,
    nodes: Vec<Node>,
    bodies: Vec<Body>,
}

impl NTree {
    pub fn build(bodies: &[Body], root_box: Aabb, capacity: usize, max_depth: u32) -> Result<Self> {
        root_box.validate()?;
        if capacity < 1 {
            return Err(Error::InvalidCapacity);
        }
        if max_depth == 0 || max_depth > MAX_CELL_DEPTH {
            return Err(Error::InvalidParameter {
                name: "max_depth",
                reason: format!("must lie in 1..={MAX_CELL_DEPTH}, got {max_depth}"),
            });
        }
        for b in bodies {
            if !b.position.is_finite() || !root_box.contains(b.position) {
                return Err(Error::OutsideRoot {
                    id: b.id,
                    position: b.position,
                });
            }
        }
        let mut tree = Self {
            root_box,
            capacity,
            max_depth,
            nodes: Vec::new(),
            bodies: bodies.to_vec(),
        };
        let all: Vec<usize> = (0..bodies.len()).collect();
        tree.build_node(CellCoord::ROOT, all);
        Ok(tree)
    }

    fn build_node(&mut self, coord: CellCoord, indices: Vec<usize>) -> usize {
        let slot = self.nodes.len();
        let aggregates = Aggregates::of(indices.iter().map(|&i| &self.bodies[i]));
        self.nodes.push(Node {
            coord,
            kind: NodeKind::Leaf(Vec::new()),
            aggregates,
        });
        if indices.len() <= self.capacity || coord.depth() >= self.max_depth {
            self.nodes[slot].kind = NodeKind::Leaf(indices);
            return slot;
        }
        let kids = coord.children();
        // Split lines taken from the child boxes so that every body lies in
        // the closed box of the leaf that receives it.
        let split_x = cell_box(&self.root_box, kids[1]).min.x;
        let split_y = cell_box(&self.root_box, kids[2]).min.y;
        let mut buckets: [Vec<usize>; 4] = Default::default();
        for i in indices {
            let p = self.bodies[i].position;
            let q = usize::from(p.x >= split_x) + 2 * usize::from(p.y >= split_y);
            buckets[q].push(i);
        }
        let mut children = [0usize; 4];
        for (k, bucket) in buckets.into_iter().enumerate() {
            children[k] = self.build_node(kids[k], bucket);
        }
        self.nodes[slot].kind = NodeKind::Internal(children);
        slot
    }

    pub fn root_box(&self) -> &Aabb {
        &self.root_box
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, index: usize) -> &Node {
        &self.nodes[index]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Bodies in the order they were passed to [`NTree::build`].
    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    pub fn cell_box(&self, coord: CellCoord) -> Aabb {
        cell_box(&self.root_box, coord)
    }

    pub fn node_aggregates(&self, node: &Node) -> Aggregates {
        node.aggregates
    }

    /// Deepest leaf depth.
    pub fn height(&self) -> u32 {
        self.nodes
            .iter()
            .filter(|n| n.is_leaf())
            .map(|n| n.coord.depth())
            .max()
            .unwrap_or(0)
    }

    /// Leaves in depth-first child order.
    pub fn leaves(&self) -> impl Iterator<Item = &Node> + '_ {
        LeafIter {
            tree: self,
            stack: vec![0],
        }
    }

    /// Non-empty leaves whose depth is at least `depth` (inclusive cut).
    pub fn leaf_cells_at_or_below_depth(&self, depth: u32) -> Vec<LeafCell> {
        self.leaves()
            .filter(|n| n.coord.depth() >= depth && n.aggregates.count > 0)
            .map(|n| LeafCell {
                coord: n.coord,
                ids: n.body_indices().iter().map(|&i| self.bodies[i].id).collect(),
            })
            .collect()
    }

    /// Ids of bodies with `|position - center| <= r`, in traversal order.
    pub fn query_radius(&self, center: Vec2, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.bodies.is_empty() || r.is_nan() || r < 0.0 {
            return out;
        }
        let r2 = r * r;
        let mut stack = vec![0usize];
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx];
            if node.aggregates.count == 0 {
                continue;
            }
            if self.cell_box(node.coord).distance_sq_to(center) > r2 {
                continue;
            }
            match &node.kind {
                NodeKind::Internal(children) => stack.extend(children.iter().rev()),
                NodeKind::Leaf(indices) => {
                    for &i in indices {
                        let b = &self.bodies[i];
                        if (b.position - center).norm_sq() <= r2 {
                            out.push(b.id);
                        }
                    }
                }
            }
        }
        out
    }

    /// One line per leaf: `depth ix iy count`.
    pub fn dump_leaves(&self) -> String {
        let mut s = String::new();
        for leaf in self.leaves() {
            let _ = writeln!(s, "{} {}", leaf.coord, leaf.aggregates.count);
        }
        s
    }
}

struct LeafIter<'a> {
    tree: &'a NTree,
    stack: Vec<usize>,
}

impl<'a> Iterator for LeafIter<'a> {
    type Item = &'a Node;

    fn next(&mut self) -> Option<&'a Node> {
        while let Some(idx) = self.stack.pop() {
            let node = &self.tree.nodes[idx];
            match &node.kind {
                NodeKind::Internal(children) => self.stack.extend(children.iter().rev()),
                NodeKind::Leaf(_) => return Some(node),
            }
        }
        None
    }
}
