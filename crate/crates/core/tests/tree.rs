use orgtree::ntree::DEFAULT_MAX_DEPTH;
use orgtree::{cell_box, Aabb, Body, CellCoord, NTree, Vec2};
use orgtree_testkit as kit;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn cell_box_agrees_with_repeated_bisection() {
    let u = Aabb::unit();
    let c = CellCoord::new(2, 3, 3).unwrap();
    assert_eq!(cell_box(&u, c), kit::bisect_box(&u, 2, 3, 3));
}

proptest! {
    #[test]
    fn cell_box_bisection_oracle(d in 0u32..20, fx in 0.0f64..1.0, fy in 0.0f64..1.0, ox in -4i32..4, k in 0i32..5) {
        let side = 1u32 << d;
        let ix = ((fx * f64::from(side)) as u32).min(side - 1);
        let iy = ((fy * f64::from(side)) as u32).min(side - 1);
        let s = 2f64.powi(k);
        let root = Aabb::new(Vec2::new(f64::from(ox), 0.0), Vec2::new(f64::from(ox) + s, s)).unwrap();
        let c = CellCoord::new(d, ix, iy).unwrap();
        prop_assert_eq!(cell_box(&root, c), kit::bisect_box(&root, d, ix, iy));
    }
}

#[test]
fn four_quadrants_match_point_in_box_assignment() {
    let pts = [Vec2::new(0.1, 0.3), Vec2::new(0.6, 0.2), Vec2::new(0.4, 0.9), Vec2::new(0.7, 0.55)];
    let bodies: Vec<Body> = pts.iter().enumerate().map(|(i, p)| Body::at(i, *p)).collect();
    let tree = NTree::build(&bodies, Aabb::unit(), 3, DEFAULT_MAX_DEPTH).unwrap();
    let root = tree.root();
    let kids = root.children().expect("four bodies exceed capacity three");
    for &k in kids {
        let node = tree.node(k);
        assert!(node.is_leaf());
        let bx = kit::coord_box(&Aabb::unit(), &node.coord);
        let brute = pts
            .iter()
            .filter(|p| p.x >= bx.min.x && p.x <= bx.max.x && p.y >= bx.min.y && p.y <= bx.max.y)
            .count();
        assert_eq!(node.aggregates.count, brute);
        assert_eq!(node.aggregates.count, 1);
    }
}

#[test]
fn invariants_over_random_builds() {
    let mut rng = kit::rng(2024);
    for trial in 0..300 {
        let n = rng.gen_range(0..600);
        let capacity = [1, 2, 3, 10, 25][trial % 5];
        let max_depth = rng.gen_range(4..=DEFAULT_MAX_DEPTH);
        let mut bodies = if trial % 7 == 0 {
            kit::near_coincident_scene(&mut rng, n)
        } else {
            kit::mixed_scene(&mut rng, n)
        };
        for b in &mut bodies {
            b.charge = rng.gen_range(0.1..5.0);
        }
        let tree = NTree::build(&bodies, Aabb::unit(), capacity, max_depth).unwrap();
        let v = kit::tree_violations(&tree, &bodies);
        assert!(v.is_empty(), "trial {trial}: {v:?}");
        let again = NTree::build(&bodies, Aabb::unit(), capacity, max_depth).unwrap();
        assert_eq!(tree, again, "trial {trial}: build not deterministic");
    }
}

#[test]
fn near_coincident_inputs_reach_max_depth() {
    let mut rng = kit::rng(5);
    let bodies = kit::near_coincident_scene(&mut rng, 40);
    let tree = NTree::build(&bodies, Aabb::unit(), 3, 12).unwrap();
    assert_eq!(tree.height(), 12);
    assert!(tree.leaves().any(|l| l.aggregates.count > 3));
    assert!(kit::tree_violations(&tree, &bodies).is_empty());
}

#[test]
fn deep_cut_matches_brute_filter_on_two_clusters() {
    let mut rng = kit::rng(77);
    let mut bodies = kit::gaussian_bodies(&mut rng, 400, Vec2::new(0.25, 0.3), 0.03, 0);
    bodies.extend(kit::gaussian_bodies(&mut rng, 400, Vec2::new(0.75, 0.7), 0.03, 400));
    bodies.extend(kit::uniform_bodies(&mut rng, 60, &Aabb::unit()).into_iter().map(|mut b| {
        b.id += 800;
        b
    }));
    let tree = NTree::build(&bodies, Aabb::unit(), 10, DEFAULT_MAX_DEPTH).unwrap();
    for d in 0..=tree.height() + 1 {
        let got = tree.leaf_cells_at_or_below_depth(d);
        let brute: Vec<(CellCoord, usize)> = tree
            .leaves()
            .filter(|l| l.coord.depth() >= d && !l.body_indices().is_empty())
            .map(|l| (l.coord, l.body_indices().len()))
            .collect();
        let got_pairs: Vec<(CellCoord, usize)> = got.iter().map(|c| (c.coord, c.ids.len())).collect();
        assert_eq!(got_pairs, brute, "depth {d}");
    }
    let all = tree.leaf_cells_at_or_below_depth(0);
    assert_eq!(all.len(), tree.leaves().filter(|l| l.aggregates.count > 0).count());
    // the sparse background never reaches the cluster depths
    let deep = tree.leaf_cells_at_or_below_depth(5);
    assert!(!deep.is_empty());
    for c in &deep {
        for id in &c.ids {
            let p = bodies[*id].position;
            let near_a = (p - Vec2::new(0.25, 0.3)).norm() < 0.2;
            let near_b = (p - Vec2::new(0.75, 0.7)).norm() < 0.2;
            assert!(near_a || near_b, "body {id} at {p:?} in deep cell {:?}", c.coord);
        }
    }
}

#[test]
fn radius_query_matches_linear_scan() {
    let mut rng = kit::rng(99);
    let bodies = kit::uniform_bodies(&mut rng, 500, &Aabb::unit());
    let tree = NTree::build(&bodies, Aabb::unit(), 4, DEFAULT_MAX_DEPTH).unwrap();
    for _ in 0..200 {
        let c = Vec2::new(rng.gen(), rng.gen());
        let mut got = tree.query_radius(c, 0.1);
        got.sort_unstable();
        assert_eq!(got, kit::linear_scan(&bodies, c, 0.1));
    }
}

#[test]
fn radius_query_includes_exact_boundary() {
    let center = Vec2::new(0.5, 0.5);
    let r = 0.25;
    let pts = [
        Vec2::new(0.75, 0.5),
        Vec2::new(0.25, 0.5),
        Vec2::new(0.5, 0.75),
        Vec2::new(0.5, 0.25),
        Vec2::new(0.5, 0.5 + 0.25 + 1e-12),
        Vec2::new(0.5, 0.5),
    ];
    let bodies: Vec<Body> = pts.iter().enumerate().map(|(i, p)| Body::at(i, *p)).collect();
    let tree = NTree::build(&bodies, Aabb::unit(), 1, DEFAULT_MAX_DEPTH).unwrap();
    let mut got = tree.query_radius(center, r);
    got.sort_unstable();
    assert_eq!(got, vec![0, 1, 2, 3, 5]);
    assert_eq!(got, kit::linear_scan(&bodies, center, r));
}
