//! Brute-force reference implementations used only by tests.
//!
//! Nothing here calls the tree or grouping code it is used to check: boxes
//! come from repeated bisection, adjacency from floating-point closed boxes,
//! components from a union-find over all pairs.

use orgtree::{Aabb, Body, CellCoord, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Cell box by halving `root` one level at a time, following the bits of
/// `(ix, iy)` from the most significant down.
pub fn bisect_box(root: &Aabb, depth: u32, ix: u32, iy: u32) -> Aabb {
    let mut b = *root;
    for level in (0..depth).rev() {
        let mx = 0.5 * (b.min.x + b.max.x);
        let my = 0.5 * (b.min.y + b.max.y);
        if (ix >> level) & 1 == 1 {
            b.min.x = mx;
        } else {
            b.max.x = mx;
        }
        if (iy >> level) & 1 == 1 {
            b.min.y = my;
        } else {
            b.max.y = my;
        }
    }
    b
}

pub fn coord_box(root: &Aabb, c: &CellCoord) -> Aabb {
    bisect_box(root, c.depth(), c.ix(), c.iy())
}

fn closed_overlap(a: &Aabb, b: &Aabb) -> bool {
    a.min.x <= b.max.x && b.min.x <= a.max.x && a.min.y <= b.max.y && b.min.y <= a.max.y
}

pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Connected components over all `O(n²)` pairs, adjacency decided on
/// bisected unit-square boxes. Canonically sorted.
pub fn brute_components(cells: &[CellCoord]) -> Vec<Vec<CellCoord>> {
    let root = Aabb::unit();
    let boxes: Vec<Aabb> = cells.iter().map(|c| coord_box(&root, c)).collect();
    let mut uf = UnionFind::new(cells.len());
    for i in 0..cells.len() {
        for j in (i + 1)..cells.len() {
            if closed_overlap(&boxes[i], &boxes[j]) {
                uf.union(i, j);
            }
        }
    }
    let mut by_root: std::collections::BTreeMap<usize, Vec<CellCoord>> = Default::default();
    for (i, c) in cells.iter().enumerate() {
        let r = uf.find(i);
        by_root.entry(r).or_default().push(*c);
    }
    let mut groups: Vec<Vec<CellCoord>> = by_root.into_values().collect();
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_unstable();
    groups
}

/// Ids within `r` of `center` by linear scan, sorted.
pub fn linear_scan(bodies: &[Body], center: Vec2, r: f64) -> Vec<usize> {
    let mut ids: Vec<usize> = bodies
        .iter()
        .filter(|b| {
            let dx = b.position.x - center.x;
            let dy = b.position.y - center.y;
            dx * dx + dy * dy <= r * r
        })
        .map(|b| b.id)
        .collect();
    ids.sort_unstable();
    ids
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_bodies(rng: &mut ChaCha8Rng, n: usize, root: &Aabb) -> Vec<Body> {
    (0..n)
        .map(|i| {
            let p = Vec2::new(
                rng.gen_range(root.min.x..=root.max.x),
                rng.gen_range(root.min.y..=root.max.y),
            );
            Body::at(i, p)
        })
        .collect()
}

/// Uniform points in a disk of `radius` around `center`, ids from `first_id`.
pub fn disk_bodies(rng: &mut ChaCha8Rng, n: usize, center: Vec2, radius: f64, first_id: usize) -> Vec<Body> {
    (0..n)
        .map(|i| {
            let r = radius * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            Body::at(first_id + i, Vec2::new(center.x + r * a.cos(), center.y + r * a.sin()))
        })
        .collect()
}

/// Gaussian blob clipped to the unit square.
pub fn gaussian_bodies(rng: &mut ChaCha8Rng, n: usize, center: Vec2, sigma: f64, first_id: usize) -> Vec<Body> {
    let normal = Normal::new(0.0, sigma).expect("sigma > 0");
    (0..n)
        .map(|i| {
            let x = (center.x + normal.sample(rng)).clamp(0.0, 1.0);
            let y = (center.y + normal.sample(rng)).clamp(0.0, 1.0);
            Body::at(first_id + i, Vec2::new(x, y))
        })
        .collect()
}

/// A random mix of uniform background and a few blobs in the unit square.
pub fn mixed_scene(rng: &mut ChaCha8Rng, n: usize) -> Vec<Body> {
    let blobs = rng.gen_range(0..4);
    let background = if blobs == 0 { n } else { rng.gen_range(0..=n / 2) };
    let mut bodies = uniform_bodies(rng, background, &Aabb::unit());
    let mut left = n - background;
    for k in 0..blobs {
        let m = if k + 1 == blobs { left } else { rng.gen_range(0..=left) };
        left -= m;
        let c = Vec2::new(rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
        let sigma = rng.gen_range(0.01..0.08);
        let first = bodies.len();
        bodies.extend(gaussian_bodies(rng, m, c, sigma, first));
    }
    bodies
}

/// Two uniform disks far apart in the unit square. Returns bodies and the
/// generating label of each body.
pub fn two_cluster_scene(rng: &mut ChaCha8Rng, per_cluster: usize, radius: f64) -> (Vec<Body>, Vec<usize>) {
    let jitter = |rng: &mut ChaCha8Rng| rng.gen_range(-0.03..0.03);
    let a = Vec2::new(0.27 + jitter(rng), 0.3 + jitter(rng));
    let b = Vec2::new(0.72 + jitter(rng), 0.7 + jitter(rng));
    let mut bodies = disk_bodies(rng, per_cluster, a, radius, 0);
    bodies.extend(disk_bodies(rng, per_cluster, b, radius, per_cluster));
    let labels = (0..2 * per_cluster).map(|i| i / per_cluster).collect();
    (bodies, labels)
}

/// Every violated tree invariant, recomputed from scratch. Empty when the
/// tree is sound.
pub fn tree_violations(tree: &orgtree::NTree, input: &[Body]) -> Vec<String> {
    use orgtree::ntree::NodeKind;
    let mut out = Vec::new();
    let root = *tree.root_box();

    // bodies below each node, gathered by walking the arena
    fn collect(tree: &orgtree::NTree, idx: usize, acc: &mut Vec<usize>) {
        match &tree.node(idx).kind {
            NodeKind::Internal(c) => c.iter().for_each(|&k| collect(tree, k, acc)),
            NodeKind::Leaf(v) => acc.extend(v.iter().copied()),
        }
    }

    let mut seen = vec![0usize; tree.bodies().len()];
    for (idx, node) in tree.nodes().iter().enumerate() {
        let mut below = Vec::new();
        collect(tree, idx, &mut below);
        below.sort_unstable();
        let bodies: Vec<&Body> = below.iter().map(|&i| &tree.bodies()[i]).collect();
        let agg = node.aggregates;
        if agg.count != bodies.len() {
            out.push(format!("{:?}: count {} != {}", node.coord, agg.count, bodies.len()));
        }
        let total: f64 = bodies.iter().map(|b| b.charge).sum();
        let scale = bodies.iter().map(|b| b.charge.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        if (agg.total_charge - total).abs() > 1e-12 * scale {
            out.push(format!("{:?}: total charge {} != {}", node.coord, agg.total_charge, total));
        }
        if !bodies.is_empty() && total != 0.0 {
            let mx: f64 = bodies.iter().map(|b| b.charge * b.position.x).sum::<f64>() / total;
            let my: f64 = bodies.iter().map(|b| b.charge * b.position.y).sum::<f64>() / total;
            match agg.center_of_charge {
                Some(c) => {
                    let mag = mx.abs().max(my.abs()).max(1.0);
                    if (c.x - mx).abs() > 1e-12 * mag || (c.y - my).abs() > 1e-12 * mag {
                        out.push(format!("{:?}: center {:?} != ({mx}, {my})", node.coord, c));
                    }
                }
                None => out.push(format!("{:?}: missing center", node.coord)),
            }
        } else if bodies.is_empty() && agg.center_of_charge.is_some() {
            out.push(format!("{:?}: empty node has a center", node.coord));
        }
        match &node.kind {
            NodeKind::Leaf(v) => {
                if v.len() > tree.capacity() && node.coord.depth() < tree.max_depth() {
                    out.push(format!("{:?}: leaf over capacity ({})", node.coord, v.len()));
                }
                let cell = coord_box(&root, &node.coord);
                for &i in v {
                    seen[i] += 1;
                    let p = tree.bodies()[i].position;
                    if !(p.x >= cell.min.x && p.x <= cell.max.x && p.y >= cell.min.y && p.y <= cell.max.y) {
                        out.push(format!("body {} outside leaf {:?}", tree.bodies()[i].id, node.coord));
                    }
                }
            }
            NodeKind::Internal(children) => {
                if agg.count <= tree.capacity() {
                    out.push(format!("{:?}: internal node could be a leaf ({})", node.coord, agg.count));
                }
                let expect = [(0, 0), (1, 0), (0, 1), (1, 1)];
                for (k, &c) in children.iter().enumerate() {
                    let child = tree.node(c).coord;
                    let (qx, qy) = expect[k];
                    if child.depth() != node.coord.depth() + 1
                        || child.ix() != 2 * node.coord.ix() + qx
                        || child.iy() != 2 * node.coord.iy() + qy
                    {
                        out.push(format!("{:?}: child {k} is {:?}", node.coord, child));
                    }
                }
            }
        }
    }
    if let Some(i) = seen.iter().position(|&s| s != 1) {
        out.push(format!("body index {i} referenced by {} leaves", seen[i]));
    }
    let mut a: Vec<(usize, u64, u64)> = input.iter().map(|b| (b.id, b.position.x.to_bits(), b.position.y.to_bits())).collect();
    let mut b: Vec<(usize, u64, u64)> = tree.bodies().iter().map(|b| (b.id, b.position.x.to_bits(), b.position.y.to_bits())).collect();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        out.push("leaf multiset differs from input".into());
    }
    out
}

/// Bodies packed so tightly that the tree must hit `max_depth`.
pub fn near_coincident_scene(rng: &mut ChaCha8Rng, n: usize) -> Vec<Body> {
    let c = Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
    (0..n)
        .map(|i| {
            let dx = rng.gen_range(-1e-12..1e-12);
            let dy = rng.gen_range(-1e-12..1e-12);
            let p = Vec2::new((c.x + dx).clamp(0.0, 1.0), (c.y + dy).clamp(0.0, 1.0));
            Body::at(i, p).with_charge(rng.gen_range(0.1..3.0))
        })
        .collect()
}
