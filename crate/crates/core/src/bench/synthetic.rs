use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{BgnnError, Result};
use crate::graph::{rescale_columns, BipartiteDataset, LabelVector};
use crate::rng::rng_for;
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DegreeModel {
    /// Degrees as even as possible on both sides.
    Uniform,
    /// Chung–Lu style expected degrees with tail exponent `alpha` on both sides.
    PowerLaw { alpha: f64 },
}

impl DegreeModel {
    pub const DEFAULT_ALPHA: f64 = 2.5;

    pub fn power_law() -> Self {
        DegreeModel::PowerLaw {
            alpha: Self::DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_u: usize,
    pub num_v: usize,
    pub num_edges: usize,
    pub feat_u_dim: usize,
    pub feat_v_dim: usize,
    pub degree_model: DegreeModel,
    pub num_classes_u: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// The shape of the large production graph: 619,030 users, 90,044 items,
    /// 991,734 edges, 8 and 16 features, 2 classes.
    pub fn large_scale(seed: u64) -> Self {
        Self {
            num_u: 619_030,
            num_v: 90_044,
            num_edges: 991_734,
            feat_u_dim: 8,
            feat_v_dim: 16,
            degree_model: DegreeModel::power_law(),
            num_classes_u: 2,
            seed,
        }
    }

    /// Same node-to-edge ratios and dimensions as [`SyntheticSpec::large_scale`],
    /// resized to `num_edges`.
    pub fn scaled(num_edges: usize, seed: u64) -> Self {
        let full = Self::large_scale(seed);
        let ratio = num_edges as f64 / full.num_edges as f64;
        Self {
            num_u: ((full.num_u as f64 * ratio).round() as usize).max(2),
            num_v: ((full.num_v as f64 * ratio).round() as usize).max(2),
            num_edges,
            ..full
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(BgnnError::Validation(m));
        if self.num_u == 0 || self.num_v == 0 {
            return fail("both partitions need at least one node".into());
        }
        if self.feat_u_dim == 0 || self.feat_v_dim == 0 || self.num_classes_u == 0 {
            return fail("feature dimensions and class count must be at least 1".into());
        }
        let cap = self.num_u as u128 * self.num_v as u128;
        if self.num_edges as u128 > cap {
            return fail(format!(
                "{} edges requested but a {}x{} bipartite graph holds at most {cap}",
                self.num_edges, self.num_u, self.num_v
            ));
        }
        if let DegreeModel::PowerLaw { alpha } = self.degree_model {
            if !(alpha > 1.0 && alpha.is_finite()) {
                return fail(format!("power-law alpha must be > 1, got {alpha}"));
            }
        }
        Ok(())
    }
}

/// Seeded synthetic graph: duplicate-free edges under the degree model,
/// labelled U nodes with class-conditional Gaussian features, V nodes with
/// features from their own latent groups. Features are rescaled to `[-1, 1]`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<BipartiteDataset> {
    spec.validate()?;
    let edges = sample_edges(spec);
    let mut rng = rng_for(spec.seed, "synthetic/features");
    let labels: Vec<usize> = (0..spec.num_u)
        .map(|_| rng.random_range(0..spec.num_classes_u))
        .collect();
    let x_u = class_gaussian(&labels, spec.num_classes_u, spec.feat_u_dim, &mut rng);
    let groups: Vec<usize> = (0..spec.num_v)
        .map(|_| rng.random_range(0..spec.num_classes_u))
        .collect();
    let x_v = class_gaussian(&groups, spec.num_classes_u, spec.feat_v_dim, &mut rng);
    let labels = LabelVector::new(labels.into_iter().map(Some).collect(), spec.num_classes_u)?;
    BipartiteDataset::new(
        edges,
        rescale_columns(&x_u),
        rescale_columns(&x_v),
        Some(labels),
        None,
    )
}

/// Two-block 2-D problem for checking that alignment pulls one side's
/// aggregates onto the other side's features. U features are `N(0, 0.3²)`;
/// V features sit at `offset ∓ 0.3` per coordinate (first block minus,
/// second block plus) with `N(0, 0.2²)` noise. Each U node
/// links to 5 distinct V nodes of its own block (first or second half).
pub fn alignment_toy(num_per_side: usize, offset: f64, seed: u64) -> Result<BipartiteDataset> {
    let n = num_per_side;
    if n < 10 {
        return Err(BgnnError::Validation(
            "alignment toy needs at least 10 nodes per side".into(),
        ));
    }
    let mut rng = rng_for(seed, "toy");
    let half = n / 2;
    let mut edges = Vec::with_capacity(5 * n);
    for u in 0..n {
        let (lo, hi) = if u < half { (0, half) } else { (half, n) };
        let mut picked = HashSet::new();
        while picked.len() < 5 {
            picked.insert(rng.random_range(lo..hi));
        }
        let mut picked: Vec<usize> = picked.into_iter().collect();
        picked.sort_unstable();
        edges.extend(picked.into_iter().map(|v| (u, v)));
    }
    let x_u = Matrix::from_fn(n, 2, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        0.3 * z
    });
    let x_v = Matrix::from_fn(n, 2, |v, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        let side = if v < half { -0.3 } else { 0.3 };
        offset + side + 0.2 * z
    });
    let labels = LabelVector::new((0..n).map(|u| Some(usize::from(u >= half))).collect(), 2)?;
    BipartiteDataset::new(edges, x_u, x_v, Some(labels), None)
}

fn class_gaussian<R: Rng>(
    classes: &[usize],
    num_classes: usize,
    dim: usize,
    rng: &mut R,
) -> Matrix {
    let means = Matrix::from_fn(num_classes, dim, |_, _| StandardNormal.sample(rng));
    Matrix::from_fn(classes.len(), dim, |i, j| {
        let noise: f64 = StandardNormal.sample(rng);
        means.get(classes[i], j) + noise
    })
}

fn sample_edges(spec: &SyntheticSpec) -> Vec<(usize, usize)> {
    let (m, n, e) = (spec.num_u, spec.num_v, spec.num_edges);
    let mut rng = rng_for(spec.seed, "synthetic/edges");
    // dense requests: pick from the full pair list instead of rejecting
    if (e as u128) * 2 > (m as u128) * (n as u128) {
        let mut all: Vec<(usize, usize)> =
            (0..m).flat_map(|u| (0..n).map(move |v| (u, v))).collect();
        let (chosen, _) = all.partial_shuffle(&mut rng, e);
        let mut chosen = chosen.to_vec();
        chosen.sort_unstable();
        return chosen;
    }
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(e);
    let mut edges = Vec::with_capacity(e);
    let mut push = |pair: (usize, usize), edges: &mut Vec<(usize, usize)>| {
        if seen.insert(pair) {
            edges.push(pair);
            true
        } else {
            false
        }
    };
    match spec.degree_model {
        DegreeModel::Uniform => {
            // every node appears ceil/floor(E / side) times; repeats get a fresh v
            let mut vs: Vec<usize> = (0..e).map(|k| k % n).collect();
            vs.shuffle(&mut rng);
            for (k, &v) in vs.iter().enumerate() {
                let u = k % m;
                if !push((u, v), &mut edges) {
                    while !push((u, rng.random_range(0..n)), &mut edges) {}
                }
            }
        }
        DegreeModel::PowerLaw { alpha } => {
            let su = WeightedIndex::chung_lu(m, alpha, &mut rng);
            let sv = WeightedIndex::chung_lu(n, alpha, &mut rng);
            let max_tries = 50 * e + 1000;
            let mut tries = 0;
            while edges.len() < e && tries < max_tries {
                tries += 1;
                let pair = (su.sample(&mut rng), sv.sample(&mut rng));
                push(pair, &mut edges);
            }
            // heavy nodes saturate on very dense requests; top up uniformly
            while edges.len() < e {
                push((rng.random_range(0..m), rng.random_range(0..n)), &mut edges);
            }
        }
    }
    edges
}

/// Inverse-CDF sampler over node weights `w_i ∝ (i + 1)^(-1 / (alpha - 1))`
/// assigned to nodes in shuffled order.
struct WeightedIndex {
    cumulative: Vec<f64>,
    order: Vec<usize>,
}

impl WeightedIndex {
    fn chung_lu<R: Rng>(n: usize, alpha: f64, rng: &mut R) -> Self {
        let gamma = 1.0 / (alpha - 1.0);
        let mut total = 0.0;
        let cumulative = (0..n)
            .map(|i| {
                total += ((i + 1) as f64).powf(-gamma);
                total
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Self { cumulative, order }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let x = rng.random::<f64>() * total;
        let i = self
            .cumulative
            .partition_point(|&c| c <= x)
            .min(self.order.len() - 1);
        self.order[i]
    }
}
