// Detect R peaks and extract the 15-value feature vector from one segment
// of each class.
//
//     cargo run --example features

use noisepulse::ecg::{synth_segment, BeatClass, MorphologyParams};
use noisepulse::features::{detect_r_peaks, extract_features, feature_names, FeatureVector};
use noisepulse::noise::{add_noise, NoiseSpec};
use noisepulse::RngSeed;

pub struct ClassFeatures {
    pub class: BeatClass,
    pub true_peaks: usize,
    pub detected_peaks: usize,
    pub features: FeatureVector,
}

pub fn run_example() -> noisepulse::Result<Vec<ClassFeatures>> {
    let params = MorphologyParams::default();
    BeatClass::ALL
        .iter()
        .enumerate()
        .map(|(i, &class)| {
            let clean = synth_segment(&params, class, 10.0, RngSeed(100 + i as u64))?;
            let noisy = add_noise(&clean, &NoiseSpec::new(0.1, RngSeed(200 + i as u64)))?;
            Ok(ClassFeatures {
                class,
                true_peaks: clean.r_peaks.len(),
                detected_peaks: detect_r_peaks(&noisy)?.len(),
                features: extract_features(&noisy, false)?,
            })
        })
        .collect()
}

fn main() -> noisepulse::Result<()> {
    let rows = run_example()?;
    print!("{:<16}", "feature");
    for r in &rows {
        print!("{:>12}", r.class.name());
    }
    println!();
    for (j, name) in feature_names().iter().enumerate() {
        print!("{name:<16}");
        for r in &rows {
            print!("{:>12.4}", r.features.0[j]);
        }
        println!();
    }
    for r in &rows {
        println!("{}: {} of {} beats detected", r.class.name(), r.detected_peaks, r.true_peaks);
    }
    Ok(())
}
