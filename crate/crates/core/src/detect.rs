//! Organization detection.
//!
//! The tree is cut at a depth threshold, the surviving non-empty leaves are
//! grouped into connected components under face/edge/corner contact, and each
//! component becomes an [`Organization`].
//!
//! Two grouping routines are provided. [`group_cells`] sweeps the whole cell
//! set and repeats the sweep until nothing joins the current group.
//! [`group_cells2`] pulls candidates from the tree with [`neighbors_of`] and
//! expands a frontier. Both produce the same partition for any seed.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, CellCoord, Vec2};
use crate::ntree::{NTree, NodeKind};

/// Non-empty leaves at or below a depth threshold, with their body ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CellSet {
    cells: BTreeMap<CellCoord, Vec<usize>>,
}

impl CellSet {
    pub fn cut(tree: &NTree, depth: u32) -> Self {
        Self {
            cells: tree
                .leaf_cells_at_or_below_depth(depth)
                .into_iter()
                .map(|l| (l.coord, l.ids))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: &CellCoord) -> bool {
        self.cells.contains_key(c)
    }

    pub fn coords(&self) -> impl Iterator<Item = &CellCoord> + '_ {
        self.cells.keys()
    }

    pub fn members(&self, c: &CellCoord) -> &[usize] {
        self.cells.get(c).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellCoord, &Vec<usize>)> + '_ {
        self.cells.iter()
    }
}

impl FromIterator<(CellCoord, Vec<usize>)> for CellSet {
    fn from_iter<I: IntoIterator<Item = (CellCoord, Vec<usize>)>>(iter: I) -> Self {
        Self {
            cells: iter.into_iter().collect(),
        }
    }
}

pub type Group = Vec<CellCoord>;

/// Sorts every group and the list of groups, giving a canonical set of sets.
pub fn canonical(mut groups: Vec<Group>) -> Vec<Group> {
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_unstable();
    groups
}

fn take_random<T>(pool: &mut Vec<T>, rng: &mut ChaCha8Rng) -> T {
    let k = rng.gen_range(0..pool.len());
    pool.swap_remove(k)
}

/// Connected components by repeated full sweeps.
///
/// A random seed cell starts each group. Every pass moves the remaining cells
/// that touch a cell added in the previous pass; passes repeat until one adds
/// nothing. Cells already tested against older members are only retested
/// against newcomers, which keeps the whole run quadratic in `|C|`.
pub fn group_cells(cells: &CellSet, seed: u64) -> Vec<Group> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining: Vec<CellCoord> = cells.coords().copied().collect();
    let mut groups = Vec::new();
    while !remaining.is_empty() {
        let c = take_random(&mut remaining, &mut rng);
        let mut group = vec![c];
        let mut fresh = 0;
        while fresh < group.len() {
            let newest = group.len();
            let mut kept = Vec::with_capacity(remaining.len());
            for d in remaining.drain(..) {
                if group[fresh..newest].iter().any(|g| g.touches(&d)) {
                    group.push(d);
                } else {
                    kept.push(d);
                }
            }
            remaining = kept;
            fresh = newest;
        }
        groups.push(group);
    }
    groups
}

/// Cells of `cells` reachable from `node` whose closed box touches `c`.
///
/// Only children touching `c` are descended into, so untouchable subtrees are
/// never visited. The result may include `c` itself if it is still in `cells`.
pub fn neighbors_of(tree: &NTree, node: usize, c: &CellCoord, cells: &BTreeSet<CellCoord>) -> Vec<CellCoord> {
    let mut out = Vec::new();
    collect_neighbors(tree, node, c, cells, &mut out);
    out
}

fn collect_neighbors(tree: &NTree, node: usize, c: &CellCoord, cells: &BTreeSet<CellCoord>, out: &mut Vec<CellCoord>) {
    let n = tree.node(node);
    match &n.kind {
        NodeKind::Internal(children) => {
            for &k in children {
                if tree.node(k).coord.touches(c) {
                    collect_neighbors(tree, k, c, cells, out);
                }
            }
        }
        NodeKind::Leaf(_) => {
            if cells.contains(&n.coord) {
                out.push(n.coord);
            }
        }
    }
}

/// Connected components by tree-guided frontier expansion.
///
/// `cells` must come from `tree`.
pub fn group_cells2(cells: &CellSet, tree: &NTree, seed: u64) -> Vec<Group> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining: BTreeSet<CellCoord> = cells.coords().copied().collect();
    // removeRandom needs an indexable pool; stale entries are skipped lazily
    let mut pool: Vec<CellCoord> = remaining.iter().copied().collect();
    let mut groups = Vec::new();
    while !remaining.is_empty() {
        let c = loop {
            let c = take_random(&mut pool, &mut rng);
            if remaining.remove(&c) {
                break c;
            }
        };
        let mut group = vec![c];
        // pending candidates, paired with the member that found them
        let mut pending: Vec<(CellCoord, CellCoord)> = neighbors_of(tree, 0, &c, &remaining)
            .into_iter()
            .map(|d| (d, c))
            .collect();
        while let Some((d, found_by)) = pending.pop() {
            if !remaining.contains(&d) {
                continue;
            }
            let adjacent = d.touches(&found_by) || group.iter().any(|g| g.touches(&d));
            if adjacent {
                remaining.remove(&d);
                group.push(d);
                pending.extend(neighbors_of(tree, 0, &d, &remaining).into_iter().map(|e| (e, d)));
            }
        }
        groups.push(group);
    }
    groups
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Organization {
    pub id: usize,
    pub cells: Vec<CellCoord>,
    pub members: Vec<usize>,
    pub centroid: Vec2,
    pub bbox: Aabb,
}

/// Materializes groups. Ids go by descending member count, ties broken by
/// the smallest cell coordinate. Groups with fewer than `min_cells` cells are
/// dropped before numbering.
pub fn organizations_from(groups: &[Group], cells: &CellSet, tree: &NTree, min_cells: usize) -> Vec<Organization> {
    let position_of: BTreeMap<usize, Vec2> = tree.bodies().iter().map(|b| (b.id, b.position)).collect();
    let mut orgs: Vec<Organization> = groups
        .iter()
        .filter(|g| !g.is_empty() && g.len() >= min_cells)
        .map(|g| {
            let mut group = g.clone();
            group.sort_unstable();
            let mut members: Vec<usize> = group.iter().flat_map(|c| cells.members(c).iter().copied()).collect();
            members.sort_unstable();
            members.dedup();
            let points: Vec<Vec2> = members.iter().map(|id| position_of[id]).collect();
            let n = points.len().max(1) as f64;
            let sum = points.iter().fold(Vec2::ZERO, |acc, p| acc + *p);
            let bbox = Aabb::covering(points.iter().copied()).unwrap_or_else(|| tree.cell_box(group[0]));
            Organization {
                id: 0,
                cells: group,
                members,
                centroid: sum / n,
                bbox,
            }
        })
        .collect();
    orgs.sort_by(|a, b| b.members.len().cmp(&a.members.len()).then_with(|| a.cells[0].cmp(&b.cells[0])));
    for (k, o) in orgs.iter_mut().enumerate() {
        o.id = k;
    }
    orgs
}

/// Cut at `depth`, group with [`group_cells2`] and materialize.
pub fn detect(tree: &NTree, depth: u32, min_cells: usize, seed: u64) -> Vec<Organization> {
    let cells = CellSet::cut(tree, depth);
    let groups = group_cells2(&cells, tree, seed);
    organizations_from(&groups, &cells, tree, min_cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ntree::Body;

    fn cc(d: u32, x: u32, y: u32) -> CellCoord {
        CellCoord::new(d, x, y).unwrap()
    }

    fn set(coords: &[CellCoord]) -> CellSet {
        coords.iter().enumerate().map(|(i, c)| (*c, vec![i])).collect()
    }

    /// The grouping loop exactly as printed: a single sweep per seed cell.
    fn group_cells_single_pass(cells: &CellSet, order: &[CellCoord]) -> Vec<Group> {
        let mut remaining: Vec<CellCoord> = order.iter().copied().filter(|c| cells.contains(c)).collect();
        let mut groups = Vec::new();
        while !remaining.is_empty() {
            let c = remaining.remove(0);
            let mut group = vec![c];
            let mut kept = Vec::new();
            for d in remaining.drain(..) {
                if group.iter().any(|g| g.touches(&d)) {
                    group.push(d);
                } else {
                    kept.push(d);
                }
            }
            remaining = kept;
            groups.push(group);
        }
        groups
    }

    #[test]
    fn empty_and_singleton() {
        assert!(group_cells(&CellSet::default(), 1).is_empty());
        let one = set(&[cc(3, 2, 2)]);
        assert_eq!(group_cells(&one, 1), vec![vec![cc(3, 2, 2)]]);
    }

    #[test]
    fn corner_contact_joins() {
        let cells = set(&[cc(2, 0, 0), cc(2, 1, 1), cc(2, 3, 3)]);
        for seed in 0..10 {
            assert_eq!(
                canonical(group_cells(&cells, seed)),
                vec![vec![cc(2, 0, 0), cc(2, 1, 1)], vec![cc(2, 3, 3)]]
            );
        }
    }

    #[test]
    fn single_pass_misses_chains() {
        // seed (0,0); (2,2) is scanned before (1,1) joins and is left behind
        let chain = [cc(3, 0, 0), cc(3, 2, 2), cc(3, 1, 1)];
        let cells = set(&chain);
        let literal = group_cells_single_pass(&cells, &chain);
        assert_eq!(literal.len(), 2);
        for seed in 0..10 {
            assert_eq!(group_cells(&cells, seed).len(), 1);
        }
    }

    fn tree_of(points: &[(f64, f64)], capacity: usize) -> NTree {
        let bodies: Vec<Body> = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Body::at(i, Vec2::new(x, y)))
            .collect();
        NTree::build(&bodies, Aabb::unit(), capacity, 24).unwrap()
    }

    #[test]
    fn group_cells2_matches_on_small_tree() {
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let t = i as f64 / 40.0;
                (0.05 + 0.9 * t, 0.5 + 0.3 * (6.0 * t).sin())
            })
            .collect();
        let tree = tree_of(&pts, 1);
        for depth in 0..6 {
            let cells = CellSet::cut(&tree, depth);
            for seed in 0..5 {
                assert_eq!(
                    canonical(group_cells2(&cells, &tree, seed)),
                    canonical(group_cells(&cells, seed + 100))
                );
            }
        }
        assert!(group_cells2(&CellSet::default(), &tree, 0).is_empty());
    }

    #[test]
    fn neighbors_of_isolated_cell_is_itself() {
        let tree = tree_of(&[(0.1, 0.1), (0.12, 0.11), (0.9, 0.9)], 1);
        let cells = CellSet::cut(&tree, 0);
        let all: BTreeSet<CellCoord> = cells.coords().copied().collect();
        let far = tree
            .leaves()
            .find(|n| n.aggregates.count == 1 && tree.bodies()[n.body_indices()[0]].id == 2)
            .unwrap()
            .coord;
        assert_eq!(neighbors_of(&tree, 0, &far, &all), vec![far]);
    }

    #[test]
    fn neighbors_of_center_corner_spans_quadrants() {
        let e = 1e-3;
        let tree = tree_of(&[(0.5 - e, 0.5 - e), (0.5 + e, 0.5 - e), (0.5 - e, 0.5 + e), (0.5 + e, 0.5 + e)], 1);
        let cells = CellSet::cut(&tree, 0);
        let all: BTreeSet<CellCoord> = cells.coords().copied().collect();
        let first = *cells.coords().next().unwrap();
        let got: BTreeSet<CellCoord> = neighbors_of(&tree, 0, &first, &all).into_iter().collect();
        assert_eq!(got, all);
    }

    #[test]
    fn organization_geometry() {
        let tree = tree_of(&[(0.0, 0.0), (1.0, 1.0)], 4);
        let cells = CellSet::cut(&tree, 0);
        let groups = group_cells(&cells, 0);
        let orgs = organizations_from(&groups, &cells, &tree, 1);
        assert_eq!(orgs.len(), 1);
        assert_eq!(orgs[0].centroid, Vec2::new(0.5, 0.5));
        assert_eq!(orgs[0].bbox, Aabb::unit());
        assert_eq!(orgs[0].members, vec![0, 1]);

        let tree = tree_of(&[(0.3, 0.7)], 4);
        let cells = CellSet::cut(&tree, 0);
        let orgs = organizations_from(&group_cells(&cells, 0), &cells, &tree, 1);
        assert_eq!(orgs[0].centroid, Vec2::new(0.3, 0.7));
        assert_eq!(orgs[0].cells, vec![CellCoord::ROOT]);
    }

    #[test]
    fn ids_follow_size_then_coord() {
        let pts: Vec<(f64, f64)> = (0..7).map(|i| (0.1 * i as f64, 0.5)).collect();
        let tree = tree_of(&pts, 100);
        let cells: CellSet = [
            (cc(3, 0, 0), vec![1, 2, 3]),
            (cc(3, 5, 5), vec![4]),
            (cc(3, 2, 6), vec![5]),
            (cc(3, 7, 7), vec![0, 6]),
        ]
        .into_iter()
        .collect();
        let groups: Vec<Group> = cells.coords().map(|c| vec![*c]).collect();
        let orgs = organizations_from(&groups, &cells, &tree, 1);
        let order: Vec<CellCoord> = orgs.iter().map(|o| o.cells[0]).collect();
        assert_eq!(order, vec![cc(3, 0, 0), cc(3, 7, 7), cc(3, 2, 6), cc(3, 5, 5)]);
        assert_eq!(orgs.iter().map(|o| o.id).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert_eq!(orgs[1].members, vec![0, 6]);
        assert!(detect(&tree, tree.height() + 1, 1, 0).is_empty());
    }

    #[test]
    fn min_cells_filters_small_groups() {
        // two depth-3 cells near the origin, one depth-1 cell far away
        let tree = tree_of(&[(0.1, 0.1), (0.15, 0.1), (0.9, 0.9)], 1);
        assert_eq!(detect(&tree, 0, 1, 0).len(), 2);
        let big = detect(&tree, 0, 2, 0);
        assert_eq!(big.len(), 1);
        assert_eq!(big[0].members, vec![0, 1]);
    }
}
