//! Complete weighted interaction graph over bodies and Newman modularity of a
//! given partition.
//!
//! Raw inter-body distance grows with separation, which is the opposite of
//! the similarity modularity expects, so distances are mapped through a
//! [`WeightTransform`]. The default is `1 / (d + ε₀)`. `Raw` keeps the
//! distance itself.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::Organization;
use crate::error::{Error, Result};
use crate::ntree::Body;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightTransform {
    Inverse { epsilon: f64 },
    Gaussian { sigma: f64 },
    Raw,
}

impl Default for WeightTransform {
    fn default() -> Self {
        WeightTransform::Inverse { epsilon: 1e-9 }
    }
}

impl WeightTransform {
    #[inline]
    pub fn apply(&self, d: f64) -> f64 {
        match *self {
            WeightTransform::Inverse { epsilon } => 1.0 / (d + epsilon),
            WeightTransform::Gaussian { sigma } => (-d * d / (2.0 * sigma * sigma)).exp(),
            WeightTransform::Raw => d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightTransform::Inverse { epsilon } if !(epsilon > 0.0 && epsilon.is_finite()) => {
                Err(Error::InvalidParameter {
                    name: "epsilon",
                    reason: format!("must be > 0, got {epsilon}"),
                })
            }
            WeightTransform::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::InvalidParameter {
                    name: "sigma",
                    reason: format!("must be > 0, got {sigma}"),
                })
            }
            _ => Ok(()),
        }
    }
}

/// Dense symmetric weight matrix with a zero diagonal. Node `i` is the
/// `i`-th body passed to [`interaction_graph`].
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    weights: Vec<f64>,
}

impl WeightedGraph {
    /// From a full row-major matrix; symmetry and the zero diagonal are
    /// checked.
    pub fn from_dense(n: usize, weights: Vec<f64>) -> Result<Self> {
        let bad = |reason: String| Error::InvalidParameter { name: "weights", reason };
        if weights.len() != n * n {
            return Err(bad(format!("expected {} entries, got {}", n * n, weights.len())));
        }
        for i in 0..n {
            if weights[i * n + i] != 0.0 {
                return Err(bad(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let w = weights[i * n + j];
                if w != weights[j * n + i] || w.is_nan() || w < 0.0 || !w.is_finite() {
                    return Err(bad(format!("entry ({i}, {j}) is asymmetric, negative or non-finite")));
                }
            }
        }
        Ok(Self { n, weights })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    /// Multiplies every weight by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            n: self.n,
            weights: self.weights.iter().map(|w| w * k).collect(),
        }
    }
}

pub fn interaction_graph(bodies: &[Body], transform: WeightTransform) -> Result<WeightedGraph> {
    transform.validate()?;
    let n = bodies.len();
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "bodies",
            reason: format!("need at least 2 bodies, got {n}"),
        });
    }
    let mut weights = vec![0.0; n * n];
    weights.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, w) in row.iter_mut().enumerate() {
            if i != j {
                *w = transform.apply((bodies[i].position - bodies[j].position).norm());
            }
        }
    });
    Ok(WeightedGraph { n, weights })
}

/// `Q = Σ_c [ e_c / W − (D_c / 2W)² ]` where `W` is the total edge weight,
/// `e_c` the weight inside group `c`, and `D_c` the summed weighted degree of
/// its nodes.
///
/// `groups` list node indices and must cover every node exactly once.
pub fn modularity(g: &WeightedGraph, groups: &[Vec<usize>]) -> Result<f64> {
    let n = g.n;
    let mut label = vec![usize::MAX; n];
    for (c, group) in groups.iter().enumerate() {
        for &i in group {
            if i >= n || label[i] != usize::MAX {
                return Err(Error::BadPartition(i));
            }
            label[i] = c;
        }
    }
    if let Some(i) = label.iter().position(|&l| l == usize::MAX) {
        return Err(Error::BadPartition(i));
    }

    let mut total = 0.0;
    let mut inside = vec![0.0; groups.len()];
    let mut cut = vec![0.0; groups.len()];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = g.weight(i, j);
            total += w;
            if label[i] == label[j] {
                inside[label[i]] += w;
            } else {
                cut[label[i]] += w;
                cut[label[j]] += w;
            }
        }
    }
    if total == 0.0 {
        return Err(Error::ZeroTotalWeight);
    }
    let q = inside
        .iter()
        .zip(&cut)
        .map(|(&e, &x)| {
            let degree = 2.0 * e + x;
            e / total - (degree / (2.0 * total)).powi(2)
        })
        .sum();
    Ok(q)
}

/// Node groups for [`modularity`]: one per organization, plus a final group
/// of every body no organization claims (omitted when empty).
pub fn partition_from_organizations(bodies: &[Body], orgs: &[Organization]) -> Result<Vec<Vec<usize>>> {
    let index_of: std::collections::HashMap<usize, usize> =
        bodies.iter().enumerate().map(|(k, b)| (b.id, k)).collect();
    let mut claimed = vec![false; bodies.len()];
    let mut groups = Vec::with_capacity(orgs.len() + 1);
    for o in orgs {
        let mut g = Vec::with_capacity(o.members.len());
        for id in &o.members {
            let k = *index_of.get(id).ok_or(Error::UnknownBody(*id))?;
            if claimed[k] {
                return Err(Error::BadPartition(k));
            }
            claimed[k] = true;
            g.push(k);
        }
        groups.push(g);
    }
    let unassigned: Vec<usize> = (0..bodies.len()).filter(|&k| !claimed[k]).collect();
    if !unassigned.is_empty() {
        groups.push(unassigned);
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use proptest::prelude::*;

    fn pair_graph(w: f64) -> WeightedGraph {
        // two disjoint edges 0–1 and 2–3
        let mut m = vec![0.0; 16];
        for (i, j) in [(0, 1), (2, 3)] {
            m[i * 4 + j] = w;
            m[j * 4 + i] = w;
        }
        WeightedGraph::from_dense(4, m).unwrap()
    }

    #[test]
    fn interaction_graph_examples() {
        let b = [Body::at(0, Vec2::new(0.0, 0.0)), Body::at(1, Vec2::new(2.0, 0.0))];
        let g = interaction_graph(&b, WeightTransform::default()).unwrap();
        assert!((g.weight(0, 1) - 0.5).abs() < 1e-9);
        let c = [Body::at(0, Vec2::new(1.0, 1.0)), Body::at(1, Vec2::new(1.0, 1.0))];
        let g = interaction_graph(&c, WeightTransform::default()).unwrap();
        assert_eq!(g.weight(0, 1), 1.0 / 1e-9);
        assert!(interaction_graph(&c[..1], WeightTransform::Raw).is_err());
    }

    #[test]
    fn gaussian_transform() {
        let t = WeightTransform::Gaussian { sigma: 2.0 };
        assert_eq!(t.apply(0.0), 1.0);
        assert!((t.apply(2.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!(WeightTransform::Gaussian { sigma: 0.0 }.validate().is_err());
    }

    #[test]
    fn modularity_examples() {
        let g = pair_graph(1.0);
        assert_eq!(modularity(&g, &[vec![0, 1, 2, 3]]).unwrap(), 0.0);
        let q = modularity(&g, &[vec![0, 1], vec![2, 3]]).unwrap();
        assert!((q - 0.5).abs() <= 1e-12);

        let edge = WeightedGraph::from_dense(2, vec![0.0, 3.0, 3.0, 0.0]).unwrap();
        let q = modularity(&edge, &[vec![0], vec![1]]).unwrap();
        assert!((q + 0.5).abs() <= 1e-12);
    }

    #[test]
    fn modularity_errors() {
        let g = pair_graph(1.0);
        assert_eq!(modularity(&g, &[vec![0, 1], vec![2]]), Err(Error::BadPartition(3)));
        assert_eq!(modularity(&g, &[vec![0, 1, 1], vec![2, 3]]), Err(Error::BadPartition(1)));
        let empty = WeightedGraph::from_dense(3, vec![0.0; 9]).unwrap();
        assert_eq!(modularity(&empty, &[vec![0, 1, 2]]), Err(Error::ZeroTotalWeight));
        assert!(WeightedGraph::from_dense(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn unassigned_bodies_form_one_group() {
        let bodies: Vec<Body> = (0..5).map(|i| Body::at(i, Vec2::new(i as f64, 0.0))).collect();
        let org = Organization {
            id: 0,
            cells: vec![],
            members: vec![1, 3],
            centroid: Vec2::ZERO,
            bbox: crate::geometry::Aabb::unit(),
        };
        let p = partition_from_organizations(&bodies, &[org]).unwrap();
        assert_eq!(p, vec![vec![1, 3], vec![0, 2, 4]]);
    }

    fn random_graph(seed: u64, n: usize) -> WeightedGraph {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let bodies: Vec<Body> = (0..n).map(|i| Body::at(i, Vec2::new(rng.gen(), rng.gen()))).collect();
        interaction_graph(&bodies, WeightTransform::default()).unwrap()
    }

    proptest! {
        #[test]
        fn modularity_scale_invariant(seed in 0u64..500, k in 0.001f64..1000.0, split in 1usize..11) {
            let g = random_graph(seed, 12);
            let groups = vec![(0..split).collect::<Vec<_>>(), (split..12).collect()];
            let a = modularity(&g, &groups).unwrap();
            let b = modularity(&g.scaled(k), &groups).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn all_in_one_is_exactly_zero(seed in 0u64..500, n in 2usize..30) {
            let g = random_graph(seed, n);
            prop_assert_eq!(modularity(&g, &[(0..n).collect()]).unwrap(), 0.0);
        }

        #[test]
        fn modularity_in_range(seed in 0u64..500, labels in proptest::collection::vec(0usize..4, 10)) {
            let g = random_graph(seed, 10);
            let mut groups = vec![Vec::new(); 4];
            for (i, l) in labels.iter().enumerate() {
                groups[*l].push(i);
            }
            groups.retain(|g| !g.is_empty());
            let q = modularity(&g, &groups).unwrap();
            prop_assert!((-0.5..1.0).contains(&q), "{q}");
        }
    }
}
