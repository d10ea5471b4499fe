//! CART classification trees (Gini impurity) and tree ensembles.

use ndarray::{ArrayView1, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, d: usize) -> usize {
        let m = match self {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => (d as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (d as f64).log2().floor() as usize,
            MaxFeatures::Count(c) => c,
        };
        m.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
        }
    }
}

/// Tree node. Samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Leaf {
        score: f64,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SplitMode {
    /// Exhaustive search over midpoints of sorted values.
    Best,
    /// One uniform random threshold per candidate feature.
    Random,
}

/// Training matrix stored feature-major for cache-friendly column scans.
struct Columns {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl Columns {
    fn new(x: ArrayView2<'_, f64>) -> Self {
        let (n, d) = x.dim();
        let mut data = Vec::with_capacity(n * d);
        for f in 0..d {
            data.extend(x.column(f).iter().copied());
        }
        Self { data, n, d }
    }

    #[inline]
    fn column(&self, f: usize) -> &[f64] {
        &self.data[f * self.n..(f + 1) * self.n]
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    cost: f64,
}

struct Builder<'a> {
    cols: &'a Columns,
    y: &'a [u8],
    params: &'a TreeParams,
    max_features: usize,
    mode: SplitMode,
    rng: ChaCha8Rng,
    buf: Vec<(f64, u8)>,
    features: Vec<usize>,
    nodes: Vec<Node>,
}

/// Weighted Gini cost of a partition (up to a constant factor):
/// Σ p·(n−p)/n over both sides.
#[inline]
fn gini_cost(pos_l: usize, n_l: usize, pos_r: usize, n_r: usize) -> f64 {
    let side = |p: usize, n: usize| {
        let (p, n) = (p as f64, n as f64);
        p * (n - p) / n
    };
    side(pos_l, n_l) + side(pos_r, n_r)
}

impl Builder<'_> {
    fn build(mut self, mut idx: Vec<usize>) -> DecisionTree {
        // (node slot, start, end, depth)
        let mut stack = vec![(0usize, 0usize, idx.len(), 0usize)];
        self.nodes.push(Node::Leaf { score: 0.0 });
        while let Some((slot, start, end, depth)) = stack.pop() {
            let slice = &mut idx[start..end];
            let pos = slice.iter().filter(|&&i| self.y[i] == 1).count();
            let score = pos as f64 / slice.len() as f64;
            let splittable = pos > 0
                && pos < slice.len()
                && slice.len() >= 2 * self.params.min_samples_leaf
                && self.params.max_depth.is_none_or(|m| depth < m);
            let split = if splittable { self.find_split(slice, pos) } else { None };
            let Some(split) = split else {
                self.nodes[slot] = Node::Leaf { score };
                continue;
            };
            let col = self.cols.column(split.feature);
            let mut n_left = 0;
            for k in 0..slice.len() {
                if col[slice[k]] <= split.threshold {
                    slice.swap(k, n_left);
                    n_left += 1;
                }
            }
            let left = self.nodes.len();
            self.nodes.push(Node::Leaf { score: 0.0 });
            self.nodes.push(Node::Leaf { score: 0.0 });
            self.nodes[slot] = Node::Split {
                feature: split.feature as u32,
                threshold: split.threshold,
                left: left as u32,
                right: left as u32 + 1,
            };
            stack.push((left + 1, start + n_left, end, depth + 1));
            stack.push((left, start, start + n_left, depth + 1));
        }
        DecisionTree { nodes: self.nodes }
    }

    fn find_split(&mut self, slice: &[usize], pos: usize) -> Option<Split> {
        let d = self.cols.d;
        let mut best: Option<Split> = None;
        let mut informative = 0;
        let sample_features = self.max_features < d;
        if sample_features {
            self.features.clear();
            self.features.extend(0..d);
        }
        for i in 0..d {
            let f = if sample_features {
                let j = self.rng.random_range(i..d);
                self.features.swap(i, j);
                self.features[i]
            } else {
                i
            };
            let candidate = match self.mode {
                SplitMode::Best => self.best_threshold(f, slice, pos),
                SplitMode::Random => self.random_threshold(f, slice, pos),
            };
            let Some(candidate) = candidate else {
                continue; // constant on this node
            };
            informative += 1;
            if let Some(c) = candidate {
                if best.as_ref().is_none_or(|b| c.cost < b.cost) {
                    best = Some(c);
                }
            }
            if informative >= self.max_features {
                break;
            }
        }
        best
    }

    /// `None` if the feature is constant on the node; `Some(None)` if no
    /// split satisfies the leaf-size constraint.
    fn best_threshold(&mut self, f: usize, slice: &[usize], pos: usize) -> Option<Option<Split>> {
        let col = self.cols.column(f);
        self.buf.clear();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in slice {
            let v = col[i];
            lo = lo.min(v);
            hi = hi.max(v);
            self.buf.push((v, self.y[i]));
        }
        if lo >= hi {
            return None;
        }
        self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let n = self.buf.len();
        let min_leaf = self.params.min_samples_leaf;
        let mut best: Option<Split> = None;
        let mut pos_l = 0;
        for k in 0..n - 1 {
            pos_l += usize::from(self.buf[k].1);
            let (a, b) = (self.buf[k].0, self.buf[k + 1].0);
            let n_l = k + 1;
            if a == b || n_l < min_leaf || n - n_l < min_leaf {
                continue;
            }
            let cost = gini_cost(pos_l, n_l, pos - pos_l, n - n_l);
            if best.as_ref().is_none_or(|s| cost < s.cost) {
                let mid = 0.5 * (a + b);
                best = Some(Split {
                    feature: f,
                    threshold: if mid < b { mid } else { a },
                    cost,
                });
            }
        }
        Some(best)
    }

    fn random_threshold(&mut self, f: usize, slice: &[usize], pos: usize) -> Option<Option<Split>> {
        let col = self.cols.column(f);
        let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(col[i]), hi.max(col[i]))
        });
        if lo >= hi {
            return None;
        }
        let mut threshold = self.rng.random_range(lo..hi);
        if threshold >= hi {
            threshold = lo;
        }
        let (mut n_l, mut pos_l) = (0, 0);
        for &i in slice {
            if col[i] <= threshold {
                n_l += 1;
                pos_l += usize::from(self.y[i]);
            }
        }
        let n = slice.len();
        let min_leaf = self.params.min_samples_leaf;
        if n_l < min_leaf || n - n_l < min_leaf || n_l == 0 || n_l == n {
            return Some(None);
        }
        Some(Some(Split {
            feature: f,
            threshold,
            cost: gini_cost(pos_l, n_l, pos - pos_l, n - n_l),
        }))
    }
}

fn grow(
    cols: &Columns,
    y: &[u8],
    idx: Vec<usize>,
    params: &TreeParams,
    max_features: usize,
    mode: SplitMode,
    rng: ChaCha8Rng,
) -> DecisionTree {
    Builder {
        cols,
        y,
        params,
        max_features,
        mode,
        rng,
        buf: Vec::with_capacity(idx.len()),
        features: Vec::with_capacity(cols.d),
        nodes: Vec::new(),
    }
    .build(idx)
}

impl DecisionTree {
    /// A single tree over all features with exhaustive split search.
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &TreeParams, rng: &mut ChaCha8Rng) -> Self {
        let cols = Columns::new(x);
        let child = seed::rng(rng.random());
        grow(&cols, y, (0..y.len()).collect(), params, cols.d, SplitMode::Best, child)
    }

    pub fn score(&self, x: ArrayView1<'_, f64>) -> f64 {
        let mut node = 0usize;
        loop {
            match self.nodes[node] {
                Node::Leaf { score } => return score,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left as usize).max(walk(nodes, right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Probability-averaging ensemble of trees (random forest, extra trees,
/// bagging).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub trees: Vec<DecisionTree>,
}

impl TreeEnsemble {
    #[allow(clippy::too_many_arguments)]
    fn fit_many(
        x: ArrayView2<'_, f64>,
        y: &[u8],
        n_trees: usize,
        bootstrap: bool,
        max_features: MaxFeatures,
        mode: SplitMode,
        params: &TreeParams,
        seed: u64,
    ) -> Self {
        let cols = Columns::new(x);
        let n = y.len();
        let m = max_features.resolve(cols.d);
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::stream(seed, &format!("tree/{t}"));
                let idx: Vec<usize> = if bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                grow(&cols, y, idx, params, m, mode, rng)
            })
            .collect();
        Self { trees }
    }

    pub fn random_forest(
        x: ArrayView2<'_, f64>,
        y: &[u8],
        forest: &ForestParams,
        tree: &TreeParams,
        seed: u64,
    ) -> Self {
        Self::fit_many(
            x,
            y,
            forest.n_trees,
            forest.bootstrap,
            forest.max_features,
            SplitMode::Best,
            tree,
            seed,
        )
    }

    pub fn extra_trees(x: ArrayView2<'_, f64>, y: &[u8], forest: &ForestParams, tree: &TreeParams, seed: u64) -> Self {
        Self::fit_many(
            x,
            y,
            forest.n_trees,
            false,
            forest.max_features,
            SplitMode::Random,
            tree,
            seed,
        )
    }

    /// Ten bootstrapped full-feature trees.
    pub fn bagging(x: ArrayView2<'_, f64>, y: &[u8], tree: &TreeParams, seed: u64) -> Self {
        Self::fit_many(x, y, 10, true, MaxFeatures::All, SplitMode::Best, tree, seed)
    }

    pub fn score_batch(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|row| self.trees.iter().map(|t| t.score(row)).sum::<f64>() / self.trees.len() as f64)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn oracle_feature_gives_depth_one_split() {
        let y = [0u8, 1, 0, 1, 1, 0, 0, 1];
        let x = ndarray::Array2::from_shape_fn((8, 3), |(i, j)| match j {
            1 => f64::from(y[i]),
            _ => ((i * 7 + j * 3) % 5) as f64,
        });
        let tree = DecisionTree::fit(x.view(), &y, &TreeParams::default(), &mut seed::rng(1));
        assert_eq!(tree.depth(), 1);
        match tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 1);
                assert_eq!(threshold, 0.5);
            }
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn grows_until_pure() {
        let x = array![[0.0], [1.0], [2.0], [3.0], [4.0]];
        let y = [0u8, 1, 0, 1, 0];
        let tree = DecisionTree::fit(x.view(), &y, &TreeParams::default(), &mut seed::rng(0));
        for (row, &label) in x.rows().into_iter().zip(&y) {
            assert_eq!(tree.score(row), f64::from(label));
        }
    }

    #[test]
    fn identical_rows_with_mixed_labels_become_a_leaf() {
        let x = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]];
        let tree = DecisionTree::fit(x.view(), &[0, 1, 1], &TreeParams::default(), &mut seed::rng(0));
        assert_eq!(tree.nodes.len(), 1);
        assert!((tree.score(x.row(0)) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn max_depth_and_min_leaf_are_respected() {
        let x = ndarray::Array2::from_shape_fn((64, 2), |(i, j)| ((i * (j + 3)) % 17) as f64);
        let y: Vec<u8> = (0..64).map(|i| u8::from((i * 5) % 7 < 3)).collect();
        let params = TreeParams {
            max_depth: Some(3),
            min_samples_leaf: 4,
        };
        let tree = DecisionTree::fit(x.view(), &y, &params, &mut seed::rng(0));
        assert!(tree.depth() <= 3);
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(900), 30);
        assert_eq!(MaxFeatures::All.resolve(80), 80);
        assert_eq!(MaxFeatures::Count(0).resolve(10), 1);
    }
}
