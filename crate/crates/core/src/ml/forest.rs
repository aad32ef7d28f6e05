use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, Matrix};
use crate::error::{Error, Result};
use crate::rng::substream_seed;

pub const DEFAULT_TREE_COUNTS: [usize; 3] = [50, 100, 200];
pub const DEFAULT_DEPTHS: [Option<usize>; 4] = [Some(4), Some(8), Some(16), None];

const BOOTSTRAP_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until nodes are pure or cannot be split.
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` means `⌊√d⌋`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    /// Rows with `x[feature] <= threshold` go left.
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Training samples per class reaching this node, bootstrap copies
    /// included.
    pub histogram: Vec<u32>,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub seed: u64,
    /// Root first.
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_classes: usize,
    /// Multiplies class counts in impurities and leaf votes.
    pub class_weights: Vec<f64>,
    pub config: ForestConfig,
    pub trees: Vec<Tree>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    /// Out-of-bag F-score of the positive class (class 1), or the macro
    /// average over classes when there are more than two.
    pub validation_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub points: Vec<GridPoint>,
    pub selected: usize,
}

/// `1 − Σ p_k²` of (weighted) class totals.
pub fn gini(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>()
}

fn weighted_argmax(histogram: &[u32], weights: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (k, (&h, w)) in histogram.iter().zip(weights).enumerate() {
        let v = f64::from(h) * w;
        if v > best_v {
            best_v = v;
            best = k;
        }
    }
    best
}

struct Grower<'a> {
    x: &'a Matrix,
    labels: &'a [usize],
    weights: &'a [f64],
    n_classes: usize,
    mtry: usize,
    max_depth: Option<usize>,
}

impl Grower<'_> {
    fn histogram(&self, rows: &[usize]) -> Vec<u32> {
        let mut h = vec![0u32; self.n_classes];
        for &r in rows {
            h[self.labels[r]] += 1;
        }
        h
    }

    /// Best split of `rows` over a random feature order, stopping after
    /// `mtry` non-constant features.
    fn best_split(&self, rows: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let mut features: Vec<usize> = (0..self.x.cols()).collect();
        features.shuffle(rng);
        let k = self.n_classes;
        let mut total = vec![0.0; k];
        for &r in rows {
            total[self.labels[r]] += self.weights[self.labels[r]];
        }
        let mut best: Option<(f64, usize, f64)> = None;
        let mut examined = 0;
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        for f in features {
            if examined == self.mtry {
                break;
            }
            order.clear();
            order.extend(rows.iter().map(|&r| (self.x.row(r)[f], self.labels[r])));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            if order[0].0 == order[order.len() - 1].0 {
                continue;
            }
            examined += 1;
            let mut left = vec![0.0; k];
            let mut wl = 0.0;
            let wt: f64 = total.iter().sum();
            for s in 0..order.len() - 1 {
                let w = self.weights[order[s].1];
                left[order[s].1] += w;
                wl += w;
                if order[s].0 == order[s + 1].0 {
                    continue;
                }
                let right: Vec<f64> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let cost = wl * gini(&left) + (wt - wl) * gini(&right);
                if best.is_none_or(|(c, _, _)| cost < c) {
                    let mid = 0.5 * (order[s].0 + order[s + 1].0);
                    // Guard against the midpoint rounding onto the right value.
                    let threshold = if mid < order[s + 1].0 {
                        mid
                    } else {
                        order[s].0
                    };
                    best = Some((cost, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&self, rows: Vec<usize>, seed: u64) -> Vec<Node> {
        let mut nodes: Vec<Node> = Vec::new();
        // (rows, depth, node seed, slot in parent to patch)
        let mut stack: Vec<(Vec<usize>, usize, u64, Option<(usize, bool)>)> =
            vec![(rows, 0, seed, None)];
        while let Some((rows, depth, node_seed, parent)) = stack.pop() {
            let id = nodes.len();
            if let Some((p, is_left)) = parent {
                let split: &mut Split = nodes[p].split.as_mut().unwrap();
                if is_left {
                    split.left = id;
                } else {
                    split.right = id;
                }
            }
            let histogram = self.histogram(&rows);
            let pure = histogram.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_left = self.max_depth.is_none_or(|d| depth < d);
            let mut rng = ChaCha8Rng::seed_from_u64(node_seed);
            let split = if !pure && depth_left && rows.len() >= 2 {
                self.best_split(&rows, &mut rng)
            } else {
                None
            };
            match split {
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = rows
                        .iter()
                        .partition(|&&row| self.x.row(row)[feature] <= threshold);
                    nodes.push(Node {
                        histogram,
                        split: Some(Split {
                            feature,
                            threshold,
                            left: 0,
                            right: 0,
                        }),
                    });
                    stack.push((
                        r,
                        depth + 1,
                        substream_seed(node_seed, 2),
                        Some((id, false)),
                    ));
                    stack.push((l, depth + 1, substream_seed(node_seed, 1), Some((id, true))));
                }
                None => nodes.push(Node {
                    histogram,
                    split: None,
                }),
            }
        }
        nodes
    }
}

impl Tree {
    /// Node where `x` stops when the tree is cut at `max_depth`.
    pub fn leaf(&self, x: &[f64], max_depth: Option<usize>) -> &Node {
        let mut node = &self.nodes[0];
        let mut depth = 0;
        while let Some(s) = node.split {
            if max_depth.is_some_and(|d| depth >= d) {
                break;
            }
            node = &self.nodes[if x[s.feature] <= s.threshold {
                s.left
            } else {
                s.right
            }];
            depth += 1;
        }
        node
    }

    /// Copy with every node at `max_depth` turned into a leaf.
    pub fn truncated(&self, max_depth: Option<usize>) -> Tree {
        let Some(limit) = max_depth else {
            return self.clone();
        };
        let mut nodes = Vec::new();
        let mut stack = vec![(0usize, 0usize, None::<(usize, bool)>)];
        while let Some((old, depth, parent)) = stack.pop() {
            let id = nodes.len();
            if let Some((p, is_left)) = parent {
                let s: &mut Split = nodes
                    .get_mut(p)
                    .and_then(|n: &mut Node| n.split.as_mut())
                    .unwrap();
                if is_left {
                    s.left = id;
                } else {
                    s.right = id;
                }
            }
            let node = &self.nodes[old];
            match node.split {
                Some(s) if depth < limit => {
                    nodes.push(Node {
                        histogram: node.histogram.clone(),
                        split: Some(Split {
                            left: 0,
                            right: 0,
                            ..s
                        }),
                    });
                    stack.push((s.right, depth + 1, Some((id, false))));
                    stack.push((s.left, depth + 1, Some((id, true))));
                }
                _ => nodes.push(Node {
                    histogram: node.histogram.clone(),
                    split: None,
                }),
            }
        }
        Tree {
            seed: self.seed,
            nodes,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match t.nodes[i].split {
                Some(s) => 1 + walk(t, s.left).max(walk(t, s.right)),
                None => 0,
            }
        }
        walk(self, 0)
    }
}

fn validate_inputs(x: &Matrix, labels: &[usize], class_weights: &[f64]) -> Result<()> {
    check_dim(x.rows(), labels.len())?;
    let k = class_weights.len();
    if k < 2 {
        return Err(Error::invalid("class_weights", "need at least two classes"));
    }
    if class_weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::invalid(
            "class_weights",
            "must be positive and finite",
        ));
    }
    let mut seen = vec![0usize; k];
    for &l in labels {
        if l >= k {
            return Err(Error::Data(format!("label {l} outside 0..{k}")));
        }
        seen[l] += 1;
    }
    if let Some(c) = seen.iter().position(|&n| n == 0) {
        return Err(Error::InsufficientClass {
            class: c,
            count: 0,
            required: 1,
        });
    }
    Ok(())
}

/// Grows tree `t` of a forest; returns the tree and its in-bag mask.
fn grow_tree(
    x: &Matrix,
    labels: &[usize],
    class_weights: &[f64],
    config: &ForestConfig,
    max_depth: Option<usize>,
    t: usize,
) -> Result<(Tree, Vec<bool>)> {
    let n = x.rows();
    let k = class_weights.len();
    let seed = substream_seed(config.seed, t as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<usize> = if config.bootstrap {
        let mut attempt = 0;
        loop {
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut present = vec![false; k];
            rows.iter().for_each(|&r| present[labels[r]] = true);
            if present.iter().all(|&p| p) {
                break rows;
            }
            attempt += 1;
            if attempt == BOOTSTRAP_RETRIES {
                return Err(Error::Data("bootstrap samples keep missing a class".into()));
            }
        }
    } else {
        (0..n).collect()
    };
    let mut in_bag = vec![false; n];
    rows.iter().for_each(|&r| in_bag[r] = true);
    let d = x.cols();
    let mtry = config
        .features_per_split
        .unwrap_or(((d as f64).sqrt().floor() as usize).max(1))
        .clamp(1, d.max(1));
    let grower = Grower {
        x,
        labels,
        weights: class_weights,
        n_classes: k,
        mtry,
        max_depth,
    };
    let node_seed = rng.random::<u64>();
    Ok((
        Tree {
            seed,
            nodes: grower.grow(rows, node_seed),
        },
        in_bag,
    ))
}

/// Trains one forest with `config`.
pub fn rf_train(
    x: &Matrix,
    labels: &[usize],
    class_weights: &[f64],
    config: &ForestConfig,
) -> Result<ForestModel> {
    validate_inputs(x, labels, class_weights)?;
    if config.n_trees == 0 {
        return Err(Error::invalid("n_trees", "must be at least 1"));
    }
    let trees = (0..config.n_trees)
        .map(|t| Ok(grow_tree(x, labels, class_weights, config, config.max_depth, t)?.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        n_classes: class_weights.len(),
        class_weights: class_weights.to_vec(),
        config: *config,
        trees,
    })
}

/// F-score from per-class vote predictions: positive class 1 with precision
/// `w·TP/(w·TP+FP)` for two classes, macro average otherwise.
fn validation_f(pred: &[(usize, usize)], class_weights: &[f64]) -> f64 {
    let k = class_weights.len();
    let f_of = |c: usize, w: f64| {
        let tp = pred.iter().filter(|&&(p, t)| p == c && t == c).count() as f64;
        let fp = pred.iter().filter(|&&(p, t)| p == c && t != c).count() as f64;
        let fn_ = pred.iter().filter(|&&(p, t)| p != c && t == c).count() as f64;
        if tp == 0.0 {
            return 0.0;
        }
        let precision = w * tp / (w * tp + fp);
        let recall = tp / (tp + fn_);
        2.0 * precision * recall / (precision + recall)
    };
    if k == 2 {
        f_of(1, class_weights[1] / class_weights[0])
    } else {
        (0..k).map(|c| f_of(c, 1.0)).sum::<f64>() / k as f64
    }
}

/// Grid search over `(n_trees, max_depth)` scored by out-of-bag
/// predictions. All points share the trees of the largest forest: a
/// smaller forest is a prefix of it and a depth-limited tree is the
/// unlimited tree cut at that depth, so every point is exactly the forest
/// [`rf_train`] would grow. Ties go to the earliest grid point.
pub fn rf_train_grid(
    x: &Matrix,
    labels: &[usize],
    class_weights: &[f64],
    grid: &[(usize, Option<usize>)],
    base: &ForestConfig,
) -> Result<(ForestModel, GridReport)> {
    validate_inputs(x, labels, class_weights)?;
    if grid.is_empty() || grid.iter().any(|&(n, _)| n == 0) {
        return Err(Error::invalid(
            "grid",
            "must be non-empty with positive tree counts",
        ));
    }
    if grid.len() > 1 && !base.bootstrap {
        return Err(Error::invalid(
            "grid",
            "out-of-bag scoring needs bootstrap samples",
        ));
    }
    let max_trees = grid.iter().map(|g| g.0).max().unwrap_or(1);
    let grow_depth = if grid.iter().any(|g| g.1.is_none()) {
        None
    } else {
        grid.iter().filter_map(|g| g.1).max()
    };
    let k = class_weights.len();
    let n = x.rows();
    let mut depths: Vec<Option<usize>> = grid.iter().map(|g| g.1).collect();
    depths.dedup();
    depths.sort();
    depths.dedup();
    let mut counts: Vec<usize> = grid.iter().map(|g| g.0).collect();
    counts.sort_unstable();
    counts.dedup();

    // votes[depth][row][class]
    let mut votes = vec![vec![vec![0u32; k]; n]; depths.len()];
    let mut scores: Vec<Vec<f64>> = vec![vec![0.0; counts.len()]; depths.len()];
    let mut trees = Vec::with_capacity(max_trees);
    let mut next_count = 0;
    for t in 0..max_trees {
        let (tree, in_bag) = grow_tree(x, labels, class_weights, base, grow_depth, t)?;
        if grid.len() > 1 {
            for (row, _) in in_bag.iter().enumerate().filter(|(_, &b)| !b) {
                for (di, &depth) in depths.iter().enumerate() {
                    let leaf = tree.leaf(x.row(row), depth);
                    votes[di][row][weighted_argmax(&leaf.histogram, class_weights)] += 1;
                }
            }
        }
        trees.push(tree);
        if next_count < counts.len() && trees.len() == counts[next_count] {
            if grid.len() > 1 {
                for di in 0..depths.len() {
                    let pred: Vec<(usize, usize)> = (0..n)
                        .filter(|&r| votes[di][r].iter().any(|&v| v > 0))
                        .map(|r| (majority(&votes[di][r]), labels[r]))
                        .collect();
                    scores[di][next_count] = validation_f(&pred, class_weights);
                }
            }
            next_count += 1;
        }
    }
    let points: Vec<GridPoint> = grid
        .iter()
        .map(|&(n_trees, max_depth)| {
            let di = depths.iter().position(|&d| d == max_depth).unwrap();
            let ci = counts.iter().position(|&c| c == n_trees).unwrap();
            GridPoint {
                n_trees,
                max_depth,
                validation_f: scores[di][ci],
            }
        })
        .collect();
    let mut selected = 0;
    for (i, p) in points.iter().enumerate() {
        if p.validation_f > points[selected].validation_f {
            selected = i;
        }
    }
    let GridPoint {
        n_trees, max_depth, ..
    } = points[selected];
    trees.truncate(n_trees);
    let trees = trees.iter().map(|t| t.truncated(max_depth)).collect();
    let model = ForestModel {
        n_classes: k,
        class_weights: class_weights.to_vec(),
        config: ForestConfig {
            n_trees,
            max_depth,
            ..*base
        },
        trees,
    };
    Ok((model, GridReport { points, selected }))
}

fn majority(votes: &[u32]) -> usize {
    let mut best = 0;
    for (k, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = k;
        }
    }
    best
}

impl ForestModel {
    /// One vote per tree for its leaf's weighted majority class.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<u32>> {
        let mut v = vec![0u32; self.n_classes];
        for tree in &self.trees {
            if let Some(s) = tree.nodes[0].split {
                if s.feature >= x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: s.feature + 1,
                        found: x.len(),
                    });
                }
            }
            v[weighted_argmax(&tree.leaf(x, None).histogram, &self.class_weights)] += 1;
        }
        Ok(v)
    }

    /// Majority vote; ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(majority(&self.votes(x)?))
    }

    /// Vote shares.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = self.votes(x)?;
        let n = self.trees.len() as f64;
        Ok(v.iter().map(|&c| f64::from(c) / n).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(seed: u64, n: usize) -> (Matrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let c = usize::from(rng.random_bool(0.4));
            let shift = if c == 1 { 0.7 } else { 0.0 };
            data.extend((0..4).map(|_| rng.random_range(-1.0..1.0) + shift));
            labels.push(c);
        }
        (Matrix::new(n, 4, data).unwrap(), labels)
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[5.0, 0.0]), 0.0);
        assert_eq!(gini(&[3.0, 3.0]), 0.5);
        assert!((gini(&[1.0, 1.0, 1.0]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_full_tree_interpolates() {
        let (x, labels) = blobs(1, 120);
        let config = ForestConfig {
            n_trees: 1,
            bootstrap: false,
            features_per_split: Some(4),
            ..Default::default()
        };
        let m = rf_train(&x, &labels, &[1.0, 1.0], &config).unwrap();
        for (r, &l) in x.iter_rows().zip(&labels) {
            assert_eq!(m.predict(r).unwrap(), l);
        }
    }

    #[test]
    fn leaf_histograms_count_their_samples() {
        let (x, labels) = blobs(2, 90);
        let m = rf_train(
            &x,
            &labels,
            &[1.0, 2.0],
            &ForestConfig {
                n_trees: 5,
                ..Default::default()
            },
        )
        .unwrap();
        for tree in &m.trees {
            let root: u32 = tree.nodes[0].histogram.iter().sum();
            assert_eq!(root as usize, x.rows());
            let leaves: u32 = tree
                .nodes
                .iter()
                .filter(|n| n.split.is_none())
                .map(|n| n.histogram.iter().sum::<u32>())
                .sum();
            assert_eq!(leaves, root);
            for n in &tree.nodes {
                if let Some(s) = n.split {
                    let children: Vec<u32> = (0..2)
                        .map(|k| tree.nodes[s.left].histogram[k] + tree.nodes[s.right].histogram[k])
                        .collect();
                    assert_eq!(children, n.histogram);
                }
            }
        }
    }

    #[test]
    fn prediction_is_the_majority_of_stored_trees() {
        let (x, labels) = blobs(3, 100);
        let m = rf_train(
            &x,
            &labels,
            &[1.0, 1.0],
            &ForestConfig {
                n_trees: 15,
                ..Default::default()
            },
        )
        .unwrap();
        for r in x.iter_rows() {
            let mut votes = [0usize; 2];
            for tree in &m.trees {
                let mut i = 0;
                while let Some(s) = tree.nodes[i].split {
                    i = if r[s.feature] <= s.threshold {
                        s.left
                    } else {
                        s.right
                    };
                }
                let h = &tree.nodes[i].histogram;
                votes[usize::from(h[1] > h[0])] += 1;
            }
            assert_eq!(m.predict(r).unwrap(), usize::from(votes[1] > votes[0]));
        }
    }

    #[test]
    fn rebuild_from_seed_is_identical() {
        let (x, labels) = blobs(4, 80);
        let config = ForestConfig {
            n_trees: 10,
            seed: 42,
            ..Default::default()
        };
        let a = rf_train(&x, &labels, &[1.0, 1.0], &config).unwrap();
        let b = rf_train(&x, &labels, &[1.0, 1.0], &config).unwrap();
        assert_eq!(a, b);
        let c = rf_train(
            &x,
            &labels,
            &[1.0, 1.0],
            &ForestConfig { seed: 43, ..config },
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn grid_points_equal_directly_trained_forests() {
        let (x, labels) = blobs(5, 150);
        let grid: Vec<(usize, Option<usize>)> = [3usize, 6]
            .iter()
            .flat_map(|&n| [(n, Some(2)), (n, None)])
            .collect();
        let base = ForestConfig {
            seed: 9,
            ..Default::default()
        };
        let (model, report) = rf_train_grid(&x, &labels, &[1.0, 1.0], &grid, &base).unwrap();
        assert_eq!(report.points.len(), 4);
        let p = &report.points[report.selected];
        let direct = rf_train(
            &x,
            &labels,
            &[1.0, 1.0],
            &ForestConfig {
                n_trees: p.n_trees,
                max_depth: p.max_depth,
                ..base
            },
        )
        .unwrap();
        assert_eq!(model, direct);
        for &(n, d) in &grid {
            let f = rf_train(
                &x,
                &labels,
                &[1.0, 1.0],
                &ForestConfig {
                    n_trees: n,
                    max_depth: d,
                    ..base
                },
            )
            .unwrap();
            assert!(f.trees.iter().all(|t| d.is_none_or(|d| t.depth() <= d)));
        }
    }
}
