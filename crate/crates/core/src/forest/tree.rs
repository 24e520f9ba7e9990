//! CART classification trees grown with Gini impurity.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, Hyperparams, N_CLASSES};

/// One node of a tree stored in preorder: an internal node's left child is
/// the next node in the array, its right child sits at `right`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal { feature: usize, threshold: f64, right: usize },
    Leaf { counts: [u32; N_CLASSES] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

/// Index of the largest count; ties go to the lowest class index.
pub fn majority(counts: &[u32; N_CLASSES]) -> usize {
    let mut best = 0;
    for c in 1..N_CLASSES {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    best
}

impl Tree {
    pub fn leaf(counts: [u32; N_CLASSES]) -> Tree {
        Tree { nodes: vec![TreeNode::Leaf { counts }] }
    }

    /// Class counts of the leaf reached by `row`.
    pub fn leaf_counts(&self, row: &[f64]) -> &[u32; N_CLASSES] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { counts } => return counts,
                TreeNode::Internal { feature, threshold, right } => {
                    i = if row[*feature] <= *threshold { i + 1 } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        majority(self.leaf_counts(row))
    }

    /// Depth of the deepest leaf; a single leaf has depth 0.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> (usize, usize) {
            // Returns (depth below i, index after the subtree).
            match &nodes[i] {
                TreeNode::Leaf { .. } => (0, i + 1),
                TreeNode::Internal { right, .. } => {
                    let (dl, _) = walk(nodes, i + 1);
                    let (dr, end) = walk(nodes, *right);
                    (1 + dl.max(dr), end)
                }
            }
        }
        walk(&self.nodes, 0).0
    }

    /// Checks the preorder layout and feature bounds.
    pub fn is_well_formed(&self, n_features: usize) -> bool {
        fn walk(nodes: &[TreeNode], i: usize, n_features: usize) -> Option<usize> {
            match nodes.get(i)? {
                TreeNode::Leaf { counts } => (counts.iter().any(|&c| c > 0)).then_some(i + 1),
                TreeNode::Internal { feature, threshold, right } => {
                    if *feature >= n_features || !threshold.is_finite() {
                        return None;
                    }
                    let after_left = walk(nodes, i + 1, n_features)?;
                    if after_left != *right {
                        return None;
                    }
                    walk(nodes, *right, n_features)
                }
            }
        }
        walk(&self.nodes, 0, n_features) == Some(self.nodes.len())
    }
}

fn gini(counts: &[u32; N_CLASSES], total: u32) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn class_counts(labels: &[u8], rows: &[usize]) -> [u32; N_CLASSES] {
    let mut counts = [0u32; N_CLASSES];
    for &r in rows {
        counts[labels[r] as usize] += 1;
    }
    counts
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

struct Grower<'a, R> {
    x: &'a FeatureMatrix,
    labels: &'a [u8],
    hp: &'a Hyperparams,
    rng: &'a mut R,
    nodes: Vec<TreeNode>,
    buf: Vec<(f64, u8)>,
}

impl<R: Rng> Grower<'_, R> {
    /// Best split of `rows` on `feature`, as weighted child Gini.
    fn best_on_feature(&mut self, rows: &[usize], feature: usize, parent: &[u32; N_CLASSES]) -> Option<(f64, f64)> {
        self.buf.clear();
        self.buf.extend(rows.iter().map(|&r| (self.x.get(r, feature), self.labels[r])));
        self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if self.buf[0].0 == self.buf[self.buf.len() - 1].0 {
            return None;
        }
        let n = self.buf.len() as u32;
        let mut left = [0u32; N_CLASSES];
        let mut best: Option<(f64, f64)> = None;
        for i in 0..self.buf.len() - 1 {
            left[self.buf[i].1 as usize] += 1;
            let (v, next) = (self.buf[i].0, self.buf[i + 1].0);
            if v == next {
                continue;
            }
            let nl = i as u32 + 1;
            let mut right = *parent;
            for c in 0..N_CLASSES {
                right[c] -= left[c];
            }
            let score = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, v + (next - v) / 2.0));
            }
        }
        best
    }

    fn find_split(&mut self, rows: &[usize], counts: &[u32; N_CLASSES]) -> Option<Split> {
        let mut order: Vec<usize> = (0..self.x.cols).collect();
        order.shuffle(self.rng);
        let mut best: Option<Split> = None;
        for (tried, &f) in order.iter().enumerate() {
            // Keep drawing past the quota only while nothing splittable was found.
            if tried >= self.hp.features_per_split && best.is_some() {
                break;
            }
            if let Some((score, threshold)) = self.best_on_feature(rows, f, counts) {
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(Split { feature: f, threshold, score });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) {
        let counts = class_counts(self.labels, rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.hp.max_depth || rows.len() < self.hp.min_samples_split.max(2) {
            self.nodes.push(TreeNode::Leaf { counts });
            return;
        }
        let Some(split) = self.find_split(rows, &counts) else {
            self.nodes.push(TreeNode::Leaf { counts });
            return;
        };
        // Partition rows in place: left block <= threshold.
        let mut mid = 0;
        for i in 0..rows.len() {
            if self.x.get(rows[i], split.feature) <= split.threshold {
                rows.swap(i, mid);
                mid += 1;
            }
        }
        let at = self.nodes.len();
        self.nodes.push(TreeNode::Internal { feature: split.feature, threshold: split.threshold, right: 0 });
        let (left, right) = rows.split_at_mut(mid);
        self.grow(left, depth + 1);
        let right_at = self.nodes.len();
        if let TreeNode::Internal { right, .. } = &mut self.nodes[at] {
            *right = right_at;
        }
        self.grow(right, depth + 1);
    }
}

/// Grows one tree on the rows listed in `sample` (duplicates allowed).
///
/// At each node a random subset of `features_per_split` features is scanned
/// for the threshold with the lowest weighted child Gini; thresholds are
/// midpoints between consecutive distinct values. If none of the drawn
/// features can split the node, the remaining features are tried in random
/// order. Growth stops at `max_depth`, below `min_samples_split` rows, on
/// purity, or when no feature varies.
pub fn train_tree<R: Rng>(x: &FeatureMatrix, labels: &[u8], sample: &[usize], hp: &Hyperparams, rng: &mut R) -> Tree {
    if sample.is_empty() {
        return Tree::leaf([1, 0, 0]);
    }
    let mut rows = sample.to_vec();
    let mut g = Grower { x, labels, hp, rng, nodes: Vec::new(), buf: Vec::with_capacity(rows.len()) };
    g.grow(&mut rows, 0);
    Tree { nodes: g.nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;

    fn hp() -> Hyperparams {
        Hyperparams { n_trees: 1, max_depth: 16, min_samples_split: 2, features_per_split: 15 }
    }

    #[test]
    fn pure_data_gives_single_leaf() {
        let x = FeatureMatrix::new(2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let t = train_tree(&x, &[2, 2, 2], &[0, 1, 2], &hp(), &mut RngSeed(0).rng());
        assert_eq!(t.nodes, vec![TreeNode::Leaf { counts: [0, 0, 3] }]);
    }

    #[test]
    fn two_point_split_at_midpoint() {
        let x = FeatureMatrix::new(1, vec![0.0, 1.0]).unwrap();
        let t = train_tree(&x, &[0, 1], &[0, 1], &hp(), &mut RngSeed(0).rng());
        match &t.nodes[0] {
            TreeNode::Internal { feature, threshold, right } => {
                assert_eq!((*feature, *threshold, *right), (0, 0.5, 2));
            }
            other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(t.predict(&[0.2]), 0);
        assert_eq!(t.predict(&[0.9]), 1);
    }

    #[test]
    fn constant_features_give_majority_leaf() {
        let x = FeatureMatrix::new(3, vec![1.0; 12]).unwrap();
        let t = train_tree(&x, &[1, 2, 1, 2], &[0, 1, 2, 3], &hp(), &mut RngSeed(0).rng());
        assert_eq!(t.nodes.len(), 1);
        // Tie between PVC and AF resolves to the lower index.
        assert_eq!(t.predict(&[1.0, 1.0, 1.0]), 1);
    }

    #[test]
    fn depth_limit_respected() {
        let vals: Vec<f64> = (0..64).map(f64::from).collect();
        let labels: Vec<u8> = (0..64).map(|i| (i % 3) as u8).collect();
        let x = FeatureMatrix::new(1, vals).unwrap();
        let rows: Vec<usize> = (0..64).collect();
        for depth in [0, 1, 3, 5] {
            let h = Hyperparams { max_depth: depth, ..hp() };
            let t = train_tree(&x, &labels, &rows, &h, &mut RngSeed(1).rng());
            assert!(t.depth() <= depth);
            assert!(t.is_well_formed(1));
        }
    }

    #[test]
    fn exhaustive_oracle_agrees_on_root_split() {
        // Brute force over every feature and midpoint for the minimum weighted Gini.
        let rows = 30;
        let cols = 3;
        let mut rng = RngSeed(77).rng();
        let vals: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(0..10) as f64).collect();
        let labels: Vec<u8> = (0..rows).map(|_| rng.random_range(0..3)).collect();
        let x = FeatureMatrix::new(cols, vals.clone()).unwrap();
        let sample: Vec<usize> = (0..rows).collect();
        let t =
            train_tree(&x, &labels, &sample, &Hyperparams { max_depth: 1, features_per_split: cols, ..hp() }, &mut rng);

        let mut best = f64::INFINITY;
        for f in 0..cols {
            let mut distinct: Vec<f64> = (0..rows).map(|r| vals[r * cols + f]).collect();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            for w in distinct.windows(2) {
                let thr = (w[0] + w[1]) / 2.0;
                let (mut l, mut r) = ([0u32; 3], [0u32; 3]);
                for i in 0..rows {
                    if vals[i * cols + f] <= thr {
                        l[labels[i] as usize] += 1
                    } else {
                        r[labels[i] as usize] += 1
                    }
                }
                let (nl, nr) = (l.iter().sum::<u32>(), r.iter().sum::<u32>());
                let s = (nl as f64 * gini(&l, nl) + nr as f64 * gini(&r, nr)) / rows as f64;
                best = best.min(s);
            }
        }
        let TreeNode::Internal { feature, threshold, .. } = t.nodes[0] else { panic!("no split") };
        let (mut l, mut r) = ([0u32; 3], [0u32; 3]);
        for i in 0..rows {
            if vals[i * cols + feature] <= threshold {
                l[labels[i] as usize] += 1
            } else {
                r[labels[i] as usize] += 1
            }
        }
        let (nl, nr) = (l.iter().sum::<u32>(), r.iter().sum::<u32>());
        let got = (nl as f64 * gini(&l, nl) + nr as f64 * gini(&r, nr)) / rows as f64;
        assert!((got - best).abs() < 1e-12);
    }
}
