//! Random forest classifier over the three rhythm classes, with stratified
//! splitting, grid search and confusion-matrix metrics.
//!
//! Every tree draws its bootstrap sample and feature subsets from its own
//! stream, `seed.derive(Tree, tree_index)`, so a forest of `n` trees is the
//! first `n` trees of any larger forest with the same seed, and training in
//! parallel gives the same model as training serially.

mod metrics;
mod split;
mod tree;

pub use self::metrics::{evaluate, MetricsReport};
pub use self::split::{split_dataset, DatasetSplit};
pub use self::tree::{majority, train_tree, Tree, TreeNode};

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ecg::BeatClass;
use crate::error::{Error, Result};
use crate::features::{feature_names, FeatureVector, N_FEATURES};
use crate::rng::{RngSeed, Stream};

pub const N_CLASSES: usize = 3;

pub const MODEL_FORMAT: &str = "noisepulse-forest";
pub const MODEL_VERSION: u32 = 1;

/// Dense row-major feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols == 0 || data.len() % cols != 0 {
            return Err(Error::param(format!("{} values do not form rows of {cols}", data.len())));
        }
        Ok(FeatureMatrix { rows: data.len() / cols, cols, data })
    }

    pub fn from_vectors(rows: &[FeatureVector]) -> Self {
        let data = rows.iter().flat_map(|r| r.0).collect();
        FeatureMatrix { rows: rows.len(), cols: N_FEATURES, data }
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix { rows: indices.len(), cols: self.cols, data }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub features_per_split: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_trees: 100,
            max_depth: 12,
            min_samples_split: 2,
            features_per_split: default_features_per_split(N_FEATURES),
        }
    }
}

/// ceil(sqrt(p)).
pub fn default_features_per_split(p: usize) -> usize {
    (p as f64).sqrt().ceil() as usize
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::param("n_trees must be > 0"));
        }
        if self.features_per_split == 0 {
            return Err(Error::param("features_per_split must be > 0"));
        }
        Ok(())
    }
}

pub fn class_indices(labels: &[BeatClass]) -> Vec<u8> {
    labels.iter().map(|c| c.index() as u8).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub hyperparams: Hyperparams,
    pub seed: RngSeed,
    pub n_features: usize,
}

/// Serialized form of a [`ForestModel`].
#[derive(Debug, Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    seed: RngSeed,
    hyperparams: Hyperparams,
    classes: Vec<String>,
    feature_names: Vec<String>,
    trees: Vec<Tree>,
}

/// Plurality vote of a forest for one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub class: BeatClass,
    pub votes: [f64; N_CLASSES],
}

impl ForestModel {
    /// Assembles a model from already-built trees.
    pub fn from_trees(trees: Vec<Tree>, n_features: usize, seed: RngSeed) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::param("a forest needs at least one tree"));
        }
        if let Some(i) = trees.iter().position(|t| !t.is_well_formed(n_features)) {
            return Err(Error::param(format!("tree {i} is malformed")));
        }
        let max_depth = trees.iter().map(Tree::depth).max().unwrap_or(0);
        let hyperparams = Hyperparams {
            n_trees: trees.len(),
            max_depth,
            min_samples_split: 2,
            features_per_split: default_features_per_split(n_features),
        };
        Ok(ForestModel { trees, hyperparams, seed, n_features })
    }

    /// Vote tallies of every tree for one row.
    pub fn vote_counts(&self, row: &[f64]) -> Result<[u32; N_CLASSES]> {
        if row.len() != self.n_features {
            return Err(Error::Dimension { expected: self.n_features, actual: row.len() });
        }
        let mut votes = [0u32; N_CLASSES];
        for t in &self.trees {
            votes[t.predict(row)] += 1;
        }
        Ok(votes)
    }

    /// Each tree votes for its leaf's majority class; the plurality wins and
    /// ties go to the lowest class index.
    pub fn predict_row(&self, row: &[f64]) -> Result<Prediction> {
        let votes = self.vote_counts(row)?;
        let total = self.trees.len() as f64;
        let class = BeatClass::from_index(majority(&votes)).expect("class index");
        Ok(Prediction { class, votes: votes.map(|v| v as f64 / total) })
    }

    pub fn predict(&self, fv: &FeatureVector) -> Result<Prediction> {
        self.predict_row(fv.as_slice())
    }

    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<BeatClass>> {
        (0..x.rows).into_par_iter().map(|r| self.predict_row(x.row(r)).map(|p| p.class)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut names: Vec<String> = feature_names().iter().map(|s| s.to_string()).collect();
        if self.n_features != N_FEATURES {
            names = (0..self.n_features).map(|i| format!("f{i}")).collect();
        }
        let doc = ModelDocument {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            seed: self.seed,
            hyperparams: self.hyperparams,
            classes: BeatClass::ALL.iter().map(|c| c.name().to_string()).collect(),
            feature_names: names,
            trees: self.trees.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::Parse(format!("unsupported model format {} v{}", doc.format, doc.version)));
        }
        let n_features = doc.feature_names.len();
        if doc.trees.len() != doc.hyperparams.n_trees {
            return Err(Error::Parse("tree count does not match hyperparams".into()));
        }
        if doc.trees.iter().any(|t| !t.is_well_formed(n_features)) {
            return Err(Error::Parse("malformed tree in model".into()));
        }
        Ok(ForestModel { trees: doc.trees, hyperparams: doc.hyperparams, seed: doc.seed, n_features })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Labelled training rows. `ids` give each row a stable identity; bootstrap
/// draws index rows in increasing-id order, so shuffling the rows (with
/// their ids) does not change the trained forest.
#[derive(Debug, Clone)]
pub struct TrainingSet<'a> {
    pub x: &'a FeatureMatrix,
    pub labels: &'a [u8],
    pub ids: Option<&'a [u64]>,
}

impl<'a> TrainingSet<'a> {
    pub fn new(x: &'a FeatureMatrix, labels: &'a [u8]) -> Self {
        TrainingSet { x, labels, ids: None }
    }

    fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.x.rows).collect();
        if let Some(ids) = self.ids {
            order.sort_by_key(|&i| ids[i]);
        }
        order
    }
}

/// Bootstrap sample (with replacement, same size as the data) for tree `t`,
/// followed by that tree's remaining random stream.
fn bootstrap(order: &[usize], seed: RngSeed, t: usize) -> (Vec<usize>, rand_chacha::ChaCha8Rng) {
    let mut rng = seed.derive(Stream::Tree, t as u64).rng();
    let n = order.len();
    let sample = (0..n).map(|_| order[rng.random_range(0..n)]).collect();
    (sample, rng)
}

fn train_trees(set: &TrainingSet<'_>, hp: &Hyperparams, seed: RngSeed, n_trees: usize) -> Vec<Tree> {
    let order = set.canonical_order();
    (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let (sample, mut rng) = bootstrap(&order, seed, t);
            train_tree(set.x, set.labels, &sample, hp, &mut rng)
        })
        .collect()
}

pub fn train_forest(set: &TrainingSet<'_>, hp: &Hyperparams, seed: RngSeed) -> Result<ForestModel> {
    hp.validate()?;
    if set.x.rows == 0 {
        return Err(Error::param("empty training set"));
    }
    if set.labels.len() != set.x.rows {
        return Err(Error::Dimension { expected: set.x.rows, actual: set.labels.len() });
    }
    if let Some(ids) = set.ids {
        if ids.len() != set.x.rows {
            return Err(Error::Dimension { expected: set.x.rows, actual: ids.len() });
        }
    }
    if set.labels.iter().any(|&l| l as usize >= N_CLASSES) {
        return Err(Error::param("label outside class range"));
    }
    let trees = train_trees(set, hp, seed, hp.n_trees);
    Ok(ForestModel { trees, hyperparams: *hp, seed, n_features: set.x.cols })
}

/// Hyperparameter grid searched exhaustively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub max_depth: Vec<usize>,
    pub n_trees: Vec<usize>,
    pub min_samples_split: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { max_depth: vec![4, 8, 12, 16], n_trees: vec![50, 100, 200], min_samples_split: vec![2, 5, 10] }
    }
}

impl Grid {
    pub fn singleton(hp: &Hyperparams) -> Self {
        Grid { max_depth: vec![hp.max_depth], n_trees: vec![hp.n_trees], min_samples_split: vec![hp.min_samples_split] }
    }

    pub fn len(&self) -> usize {
        self.max_depth.len() * self.n_trees.len() * self.min_samples_split.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: Hyperparams,
    /// Validation macro-F1 of `best`.
    pub best_score: f64,
    /// Every evaluated configuration with its validation macro-F1.
    pub scores: Vec<(Hyperparams, f64)>,
}

/// Evaluates every grid point on the validation rows and keeps the highest
/// macro-F1; ties prefer fewer trees, then shallower trees, then a smaller
/// `min_samples_split`.
///
/// Forests that differ only in tree count share their leading trees, so each
/// (depth, min-split) pair trains the largest forest once and scores its
/// prefixes.
pub fn grid_search(
    train: &TrainingSet<'_>,
    validation: (&FeatureMatrix, &[u8]),
    grid: &Grid,
    features_per_split: usize,
    seed: RngSeed,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::param("empty hyperparameter grid"));
    }
    let (vx, vy) = validation;
    if vx.rows == 0 || vy.len() != vx.rows {
        return Err(Error::param("validation set empty or mislabelled"));
    }
    let mut sizes = grid.n_trees.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let largest = *sizes.last().unwrap();

    let mut scores = Vec::with_capacity(grid.len());
    for &max_depth in &grid.max_depth {
        for &min_samples_split in &grid.min_samples_split {
            let hp = Hyperparams { n_trees: largest, max_depth, min_samples_split, features_per_split };
            hp.validate()?;
            let trees = train_trees(train, &hp, seed, largest);
            // votes[row][class] accumulated tree by tree.
            let per_tree: Vec<Vec<u8>> =
                trees.par_iter().map(|t| (0..vx.rows).map(|r| t.predict(vx.row(r)) as u8).collect()).collect();
            let mut votes = vec![[0u32; N_CLASSES]; vx.rows];
            let mut done = 0;
            for &size in &sizes {
                for preds in &per_tree[done..size] {
                    for (v, &p) in votes.iter_mut().zip(preds) {
                        v[p as usize] += 1;
                    }
                }
                done = size;
                let predicted: Vec<u8> = votes.iter().map(|v| majority(v) as u8).collect();
                let f1 = MetricsReport::from_labels(vy, &predicted).macro_f1;
                scores.push((Hyperparams { n_trees: size, ..hp }, f1));
            }
        }
    }
    scores.retain(|(hp, _)| grid.n_trees.contains(&hp.n_trees));
    let (best, best_score) = scores
        .iter()
        .copied()
        .reduce(|a, b| {
            let key = |(hp, _): &(Hyperparams, f64)| (hp.n_trees, hp.max_depth, hp.min_samples_split);
            if b.1 > a.1 || (b.1 == a.1 && key(&b) < key(&a)) {
                b
            } else {
                a
            }
        })
        .unwrap();
    Ok(GridResult { best, best_score, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(n_per: usize, seed: u64) -> (FeatureMatrix, Vec<u8>) {
        let mut rng = RngSeed(seed).rng();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for c in 0..3u8 {
            for _ in 0..n_per {
                for f in 0..4 {
                    let centre = if f == c as usize { 2.0 } else { 0.0 };
                    data.push(centre + rng.random_range(-1.5..1.5));
                }
                labels.push(c);
            }
        }
        (FeatureMatrix::new(4, data).unwrap(), labels)
    }

    #[test]
    fn single_tree_forest_is_tree_on_its_bootstrap() {
        let (x, y) = blobs(20, 1);
        let hp = Hyperparams { n_trees: 1, max_depth: 8, min_samples_split: 2, features_per_split: 2 };
        let set = TrainingSet::new(&x, &y);
        let forest = train_forest(&set, &hp, RngSeed(5)).unwrap();
        let (sample, mut rng) = bootstrap(&set.canonical_order(), RngSeed(5), 0);
        let tree = train_tree(&x, &y, &sample, &hp, &mut rng);
        assert_eq!(forest.trees, vec![tree]);
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = blobs(30, 2);
        let hp = Hyperparams { n_trees: 10, max_depth: 6, min_samples_split: 2, features_per_split: 2 };
        let a = train_forest(&TrainingSet::new(&x, &y), &hp, RngSeed(9)).unwrap();
        let b = train_forest(&TrainingSet::new(&x, &y), &hp, RngSeed(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.predict_matrix(&x).unwrap(), b.predict_matrix(&x).unwrap());
        assert_eq!(Hyperparams::default().n_trees, 100);
        assert_eq!(Hyperparams::default().features_per_split, 4);
    }

    #[test]
    fn votes_are_fractions_of_tree_count() {
        let leaf = |c: usize| {
            let mut counts = [0; 3];
            counts[c] = 1;
            Tree::leaf(counts)
        };
        let f = ForestModel::from_trees(vec![leaf(0), leaf(0), leaf(1)], 15, RngSeed(0)).unwrap();
        let p = f.predict(&FeatureVector([0.0; 15])).unwrap();
        assert_eq!(p.class, BeatClass::Normal);
        assert!((p.votes[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.votes.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let all_normal = ForestModel::from_trees(vec![leaf(0); 5], 15, RngSeed(0)).unwrap();
        assert_eq!(all_normal.predict(&FeatureVector([0.0; 15])).unwrap().votes, [1.0, 0.0, 0.0]);

        // One vote each: tie goes to Normal.
        let tie = ForestModel::from_trees(vec![leaf(2), leaf(1), leaf(0)], 15, RngSeed(0)).unwrap();
        assert_eq!(tie.predict(&FeatureVector([0.0; 15])).unwrap().class, BeatClass::Normal);
    }

    #[test]
    fn wrong_dimension_rejected() {
        let f = ForestModel::from_trees(vec![Tree::leaf([1, 0, 0])], 15, RngSeed(0)).unwrap();
        assert!(matches!(f.predict_row(&[0.0; 14]), Err(Error::Dimension { expected: 15, actual: 14 })));
    }

    #[test]
    fn json_roundtrip() {
        let (x, y) = blobs(15, 3);
        let hp = Hyperparams { n_trees: 4, max_depth: 5, min_samples_split: 2, features_per_split: 2 };
        let f = train_forest(&TrainingSet::new(&x, &y), &hp, RngSeed(1)).unwrap();
        let back = ForestModel::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back, f);
        assert!(ForestModel::from_json("{\"format\":\"other\"}").is_err());
    }

    #[test]
    fn empty_training_set_rejected() {
        let x = FeatureMatrix::new(3, vec![]).unwrap();
        assert!(train_forest(&TrainingSet::new(&x, &[]), &Hyperparams::default(), RngSeed(0)).is_err());
    }

    #[test]
    fn row_permutation_with_ids_keeps_forest() {
        let (x, y) = blobs(25, 4);
        let ids: Vec<u64> = (0..x.rows as u64).collect();
        let hp = Hyperparams { n_trees: 8, max_depth: 6, min_samples_split: 2, features_per_split: 2 };
        let base = train_forest(&TrainingSet { x: &x, labels: &y, ids: Some(&ids) }, &hp, RngSeed(3)).unwrap();

        let mut perm: Vec<usize> = (0..x.rows).collect();
        perm.reverse();
        perm.swap(3, 40);
        let px = x.select(&perm);
        let py: Vec<u8> = perm.iter().map(|&i| y[i]).collect();
        let pids: Vec<u64> = perm.iter().map(|&i| ids[i]).collect();
        let shuffled = train_forest(&TrainingSet { x: &px, labels: &py, ids: Some(&pids) }, &hp, RngSeed(3)).unwrap();
        assert_eq!(base.predict_matrix(&x).unwrap(), shuffled.predict_matrix(&x).unwrap());
    }

    #[test]
    fn grid_search_singleton_and_reevaluation() {
        let (x, y) = blobs(40, 5);
        let (vx, vy) = blobs(20, 6);
        let set = TrainingSet::new(&x, &y);
        let hp = Hyperparams { n_trees: 7, max_depth: 3, min_samples_split: 5, features_per_split: 2 };
        let r = grid_search(&set, (&vx, &vy), &Grid::singleton(&hp), 2, RngSeed(1)).unwrap();
        assert_eq!(r.best, hp);

        let grid = Grid { max_depth: vec![1, 6], n_trees: vec![3, 10], min_samples_split: vec![2] };
        let r = grid_search(&set, (&vx, &vy), &grid, 2, RngSeed(1)).unwrap();
        assert_eq!(r.scores.len(), 4);
        let model = train_forest(&set, &r.best, RngSeed(1)).unwrap();
        let pred = class_indices(&model.predict_matrix(&vx).unwrap());
        assert_eq!(MetricsReport::from_labels(&vy, &pred).macro_f1, r.best_score);
        assert!(grid_search(&set, (&vx, &vy), &Grid { max_depth: vec![], ..grid }, 2, RngSeed(1)).is_err());
    }
}
