//! Inverse-square field evaluation: exact direct summation and a monopole
//! tree code over [`NTree`].
//!
//! Every per-target sum goes through a correctly rounded accumulator, so the
//! result depends only on the multiset of contributions and not on the order
//! they were visited in. With `theta = 0` the tree walk opens every node and
//! reproduces [`direct_field`] bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsum::ExactSum;
use crate::geometry::Vec2;
use crate::ntree::{Body, NTree, NodeKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMode {
    /// Positive masses, constant `G`.
    #[default]
    Gravity,
    /// Signed charges, constant `K`.
    Coulomb,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelParams {
    pub mode: KernelMode,
    pub constant: f64,
    /// Plummer softening length; 0 reproduces the bare kernel.
    pub softening: f64,
    /// Opening parameter: a node of side `s` at distance `d` is collapsed
    /// when `s / d < theta`.
    pub theta: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            mode: KernelMode::Gravity,
            constant: 1.0,
            softening: 0.0,
            theta: 0.5,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: format!("must be finite and >= 0, got {}", self.theta),
            });
        }
        if !(self.softening >= 0.0 && self.softening.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "softening",
                reason: format!("must be finite and >= 0, got {}", self.softening),
            });
        }
        if !self.constant.is_finite() {
            return Err(Error::InvalidParameter {
                name: "constant",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    /// Gravity requires positive masses; Coulomb accepts any nonzero charge.
    pub fn check_charges(&self, bodies: &[Body]) -> Result<()> {
        for b in bodies {
            let ok = match self.mode {
                KernelMode::Gravity => b.charge > 0.0,
                KernelMode::Coulomb => b.charge != 0.0,
            };
            if !ok || !b.charge.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "charge",
                    reason: format!("body {} has charge {} in {:?} mode", b.id, b.charge, self.mode),
                });
            }
        }
        Ok(())
    }
}

/// `constant · charge · (source − target) / (|source − target|² + ε²)^(3/2)`,
/// or `None` when the denominator vanishes.
#[inline]
fn contribution(source: Vec2, charge: f64, target: Vec2, p: &KernelParams) -> Option<Vec2> {
    let d = source - target;
    let r2 = d.norm_sq() + p.softening * p.softening;
    if r2 == 0.0 {
        return None;
    }
    Some(d * (p.constant * charge / (r2 * r2.sqrt())))
}

pub fn pair_field(source: &Body, target: Vec2, p: &KernelParams) -> Result<Vec2> {
    contribution(source.position, source.charge, target, p).ok_or(Error::Singular {
        source_id: source.id,
        target_id: None,
    })
}

struct FieldSum {
    x: ExactSum,
    y: ExactSum,
}

impl FieldSum {
    fn new() -> Self {
        Self {
            x: ExactSum::new(),
            y: ExactSum::new(),
        }
    }

    #[inline]
    fn push(&mut self, v: Vec2) {
        self.x.add(v.x);
        self.y.add(v.y);
    }

    fn finish(self) -> Vec2 {
        // An exactly zero total is reported as +0 whatever the term order.
        let clean = |s: f64| if s == 0.0 { 0.0 } else { s };
        Vec2::new(clean(self.x.value()), clean(self.y.value()))
    }
}

/// Field at body `target` from every other body.
pub fn direct_field(bodies: &[Body], target: usize, p: &KernelParams) -> Result<Vec2> {
    let t = bodies.get(target).ok_or(Error::UnknownBody(target))?;
    let mut acc = FieldSum::new();
    for (i, b) in bodies.iter().enumerate() {
        if i == target {
            continue;
        }
        let f = contribution(b.position, b.charge, t.position, p).ok_or(Error::Singular {
            source_id: b.id,
            target_id: Some(t.id),
        })?;
        acc.push(f);
    }
    Ok(acc.finish())
}

/// Tree-code field at `target`, skipping the body whose id is `skip`.
///
/// A node whose closed box contains the target is always opened, so a
/// target's own cell is never collapsed into a pseudo-body.
pub fn tree_field(tree: &NTree, target: Vec2, skip: Option<usize>, p: &KernelParams) -> Result<Vec2> {
    let mut acc = FieldSum::new();
    let mut stack = vec![0usize];
    while let Some(idx) = stack.pop() {
        let node = tree.node(idx);
        let agg = node.aggregates;
        if agg.count == 0 {
            continue;
        }
        if p.theta > 0.0 {
            if let Some(com) = agg.center_of_charge {
                let cell = tree.cell_box(node.coord);
                let dist = (com - target).norm();
                let side = cell.width().max(cell.height());
                if !cell.contains(target) && side < p.theta * dist {
                    // dist > 0 here, so the pseudo-body is never singular
                    if let Some(f) = contribution(com, agg.total_charge, target, p) {
                        acc.push(f);
                        continue;
                    }
                }
            }
        }
        match &node.kind {
            NodeKind::Internal(children) => stack.extend(children.iter().rev()),
            NodeKind::Leaf(indices) => {
                for &i in indices {
                    let b = &tree.bodies()[i];
                    if Some(b.id) == skip {
                        continue;
                    }
                    let f = contribution(b.position, b.charge, target, p).ok_or(Error::Singular {
                        source_id: b.id,
                        target_id: skip,
                    })?;
                    acc.push(f);
                }
            }
        }
    }
    Ok(acc.finish())
}

/// [`direct_field`] for every body, in body order.
pub fn direct_fields(bodies: &[Body], p: &KernelParams) -> Result<Vec<Vec2>> {
    (0..bodies.len()).map(|i| direct_field(bodies, i, p)).collect()
}

/// [`tree_field`] at every body of the tree, in body order.
pub fn tree_fields(tree: &NTree, p: &KernelParams) -> Result<Vec<Vec2>> {
    tree.bodies()
        .iter()
        .map(|b| tree_field(tree, b.position, Some(b.id), p))
        .collect()
}

/// `|approx − exact| / |exact|`, with `0/0` taken as 0.
pub fn relative_error(approx: Vec2, exact: Vec2) -> f64 {
    let diff = (approx - exact).norm();
    if diff == 0.0 {
        0.0
    } else {
        diff / exact.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_g() -> KernelParams {
        KernelParams {
            theta: 0.0,
            ..KernelParams::default()
        }
    }

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn pair_field_examples() {
        let p = unit_g();
        assert_eq!(pair_field(&Body::at(0, v(1.0, 0.0)), Vec2::ZERO, &p).unwrap(), v(1.0, 0.0));
        assert_eq!(pair_field(&Body::at(0, v(2.0, 0.0)), Vec2::ZERO, &p).unwrap(), v(0.25, 0.0));
        let g2 = KernelParams { constant: 2.0, ..p };
        // 2 · 3 · (0, 1) / 1³
        let src = Body::at(0, v(0.0, 1.0)).with_charge(3.0);
        assert_eq!(pair_field(&src, Vec2::ZERO, &g2).unwrap(), v(0.0, 6.0));
    }

    #[test]
    fn singular_pair_is_an_error() {
        let src = Body::at(4, v(0.5, 0.5));
        assert_eq!(
            pair_field(&src, v(0.5, 0.5), &unit_g()),
            Err(Error::Singular {
                source_id: 4,
                target_id: None
            })
        );
        let soft = KernelParams { softening: 0.1, ..unit_g() };
        assert_eq!(pair_field(&src, v(0.5, 0.5), &soft).unwrap(), Vec2::ZERO);
    }

    #[test]
    fn direct_field_examples() {
        let p = unit_g();
        assert_eq!(direct_field(&[Body::at(0, v(0.0, 0.0))], 0, &p).unwrap(), Vec2::ZERO);

        let cross: Vec<Body> = [v(0.0, 0.0), v(1.0, 0.0), v(-1.0, 0.0), v(0.0, 1.0), v(0.0, -1.0)]
            .iter()
            .enumerate()
            .map(|(i, q)| Body::at(i, *q))
            .collect();
        assert_eq!(direct_field(&cross, 0, &p).unwrap(), Vec2::ZERO);

        let line: Vec<Body> = (0..3).map(|i| Body::at(i, v(i as f64, 0.0))).collect();
        // 1/1 + 2/8
        assert_eq!(direct_field(&line, 0, &p).unwrap(), v(1.25, 0.0));
    }

    #[test]
    fn direct_field_reports_pair() {
        let b = [Body::at(10, v(0.1, 0.1)), Body::at(11, v(0.1, 0.1))];
        assert_eq!(
            direct_field(&b, 0, &unit_g()),
            Err(Error::Singular {
                source_id: 11,
                target_id: Some(10)
            })
        );
    }

    #[test]
    fn distant_cluster_collapses_to_monopole() {
        let cluster: Vec<Body> = (0..12)
            .map(|i| {
                let a = i as f64 * 0.5;
                Body::at(i, v(0.9 + 0.01 * a.cos(), 0.9 + 0.01 * a.sin())).with_charge(1.0 + i as f64)
            })
            .collect();
        let tree = NTree::build(&cluster, Aabb::unit(), 100, 24).unwrap();
        let agg = tree.root().aggregates;
        let p = KernelParams { theta: 0.5, ..unit_g() };
        // the probe sits outside the root box so the root itself is collapsed
        let probe = v(-5.0, -5.0);
        let pseudo = Body::at(99, agg.center_of_charge.unwrap()).with_charge(agg.total_charge);
        assert_eq!(
            tree_field(&tree, probe, None, &p).unwrap(),
            pair_field(&pseudo, probe, &p).unwrap()
        );
    }

    #[test]
    fn theta_zero_is_bitwise_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bodies: Vec<Body> = (0..300)
            .map(|i| Body::at(i, v(rng.gen(), rng.gen())).with_charge(rng.gen_range(0.5..2.0)))
            .collect();
        let tree = NTree::build(&bodies, Aabb::unit(), 3, 24).unwrap();
        let p = unit_g();
        let direct = direct_fields(&bodies, &p).unwrap();
        let approx = tree_fields(&tree, &p).unwrap();
        for (a, b) in direct.iter().zip(&approx) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
    }

    #[test]
    fn accuracy_improves_as_theta_shrinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bodies: Vec<Body> = (0..600).map(|i| Body::at(i, v(rng.gen(), rng.gen()))).collect();
        let tree = NTree::build(&bodies, Aabb::unit(), 4, 24).unwrap();
        let p0 = unit_g();
        let exact = direct_fields(&bodies, &p0).unwrap();
        let mut last = f64::INFINITY;
        for theta in [1.0, 0.7, 0.5, 0.3, 0.1] {
            let p = KernelParams { theta, ..p0 };
            let approx = tree_fields(&tree, &p).unwrap();
            let worst = approx
                .iter()
                .zip(&exact)
                .map(|(a, e)| relative_error(*a, *e))
                .fold(0.0, f64::max);
            assert!(worst <= last, "theta {theta}: {worst} > {last}");
            last = worst;
        }
    }

    #[test]
    fn charge_checks() {
        let g = KernelParams::default();
        assert!(g.check_charges(&[Body::at(0, Vec2::ZERO).with_charge(-1.0)]).is_err());
        let c = KernelParams { mode: KernelMode::Coulomb, ..g };
        assert!(c.check_charges(&[Body::at(0, Vec2::ZERO).with_charge(-1.0)]).is_ok());
        assert!(c.check_charges(&[Body::at(0, Vec2::ZERO).with_charge(0.0)]).is_err());
        assert!(KernelParams { theta: -0.1, ..g }.validate().is_err());
        assert!(KernelParams { softening: f64::NAN, ..g }.validate().is_err());
    }

    #[test]
    fn coulomb_tree_handles_neutral_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bodies: Vec<Body> = (0..200)
            .map(|i| Body::at(i, v(rng.gen(), rng.gen())).with_charge(if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        let tree = NTree::build(&bodies, Aabb::unit(), 2, 24).unwrap();
        let p = KernelParams {
            mode: KernelMode::Coulomb,
            theta: 0.0,
            ..KernelParams::default()
        };
        assert_eq!(tree_fields(&tree, &p).unwrap(), direct_fields(&bodies, &p).unwrap());
    }

    proptest! {
        #[test]
        fn pair_forces_balance(
            ax in -5.0f64..5.0, ay in -5.0f64..5.0,
            bx in -5.0f64..5.0, by in -5.0f64..5.0,
            ma in 0.1f64..10.0, mb in 0.1f64..10.0,
        ) {
            let a = Body::at(0, v(ax, ay)).with_charge(ma);
            let b = Body::at(1, v(bx, by)).with_charge(mb);
            prop_assume!((a.position - b.position).norm() > 1e-3);
            let p = unit_g();
            let on_b = pair_field(&a, b.position, &p).unwrap() * mb;
            let on_a = pair_field(&b, a.position, &p).unwrap() * ma;
            let scale = on_a.norm().max(1e-300);
            prop_assert!((on_a + on_b).norm() <= 1e-12 * scale);
        }

        #[test]
        fn direct_field_translation_equivariant(seed in 0u64..1000, tx in -10i32..10, ty in -10i32..10) {
            // dyadic positions and integer shifts keep every difference exact
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let grid = |r: &mut ChaCha8Rng| f64::from(r.gen_range(0u32..1 << 20)) / f64::from(1u32 << 20);
            let bodies: Vec<Body> = (0..20).map(|i| Body::at(i, v(grid(&mut rng), grid(&mut rng)))).collect();
            let shift = v(f64::from(tx), f64::from(ty));
            let moved: Vec<Body> = bodies.iter().map(|b| Body::at(b.id, b.position + shift)).collect();
            let p = unit_g();
            for i in 0..bodies.len() {
                let a = direct_field(&bodies, i, &p).unwrap();
                let b = direct_field(&moved, i, &p).unwrap();
                prop_assert!((a - b).norm() <= 1e-12 * a.norm(), "{a:?} vs {b:?}");
            }
        }
    }
}
