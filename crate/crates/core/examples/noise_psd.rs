// Inject white Gaussian noise into a clean segment, then check its
// statistics and the flatness of its spectrum.
//
//     cargo run --example noise_psd

use noisepulse::ecg::{synth_segment, BeatClass, MorphologyParams};
use noisepulse::noise::stats::{excess_kurtosis, linear_fit, mean, skewness};
use noisepulse::noise::{add_noise, baseline_filter, snr_db, welch, NoiseSpec};
use noisepulse::RngSeed;

pub struct NoiseSummary {
    pub snr_db: f64,
    pub filtered_snr_db: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Fitted PSD slope across the band, relative to the mean level.
    pub relative_slope: f64,
}

pub fn run_example() -> noisepulse::Result<NoiseSummary> {
    let clean = synth_segment(&MorphologyParams::default(), BeatClass::Normal, 10.0, RngSeed(1))?;
    let spec = NoiseSpec::new(0.2, RngSeed(2));
    let noisy = add_noise(&clean, &spec)?;
    let filtered = baseline_filter(&noisy)?;

    let noise = spec.sequence(100_000);
    let psd = welch(&noise, 250.0, 512, 0.5)?;
    let (_, slope) = linear_fit(&psd.frequencies, &psd.power);
    let nyquist = 125.0;

    Ok(NoiseSummary {
        snr_db: snr_db(&clean, &noisy)?,
        filtered_snr_db: snr_db(&clean, &filtered)?,
        skewness: skewness(&noise),
        excess_kurtosis: excess_kurtosis(&noise),
        relative_slope: slope * nyquist / mean(&psd.power),
    })
}

fn main() -> noisepulse::Result<()> {
    let s = run_example()?;
    println!("SNR after 0.2 mV noise: {:.2} dB ({:.2} dB after the 0.5-40 Hz filter)", s.snr_db, s.filtered_snr_db);
    println!("noise skewness {:+.4}, excess kurtosis {:+.4}", s.skewness, s.excess_kurtosis);
    println!("PSD slope over the band: {:+.3}% of the mean level", 100.0 * s.relative_slope);
    Ok(())
}
