// Train a random forest on noisy features and score it on held-out rows.
//
//     cargo run --release --example forest

use noisepulse::bench::ml::prepare_data;
use noisepulse::bench::ExperimentConfig;
use noisepulse::ecg::BeatClass;
use noisepulse::forest::{
    class_indices, evaluate, split_dataset, train_forest, FeatureMatrix, Hyperparams, MetricsReport, TrainingSet,
};
use noisepulse::RngSeed;

pub fn run_example() -> noisepulse::Result<MetricsReport> {
    let mut cfg = ExperimentConfig::default();
    cfg.dataset.n_segments = 400;
    cfg.dataset.anomaly_fraction = 0.3;
    let seed = RngSeed(11);
    let data = prepare_data(&cfg, seed)?;

    let y = class_indices(&data.labels);
    let split = split_dataset(&y, (0.7, 0.0, 0.3), seed)?;
    let rows =
        |idx: &[usize]| FeatureMatrix::from_vectors(&idx.iter().map(|&i| data.noisy_features[i]).collect::<Vec<_>>());
    let train_x = rows(&split.train);
    let train_y: Vec<u8> = split.train.iter().map(|&i| y[i]).collect();
    let hp = Hyperparams { n_trees: 50, max_depth: 10, ..Hyperparams::default() };
    let model = train_forest(&TrainingSet::new(&train_x, &train_y), &hp, seed)?;

    let test_y: Vec<BeatClass> = split.test.iter().map(|&i| data.labels[i]).collect();
    evaluate(&model, &rows(&split.test), &test_y)
}

fn main() -> noisepulse::Result<()> {
    let m = run_example()?;
    println!("confusion (rows true, columns predicted: Normal PVC AF)");
    for row in m.confusion {
        println!("  {row:?}");
    }
    println!("accuracy {:.4}, macro-F1 {:.4}", m.accuracy, m.macro_f1);
    println!("sensitivity {:.4}, specificity {:.4}", m.sensitivity, m.specificity);
    Ok(())
}
