use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{BeatClass, EcgSignal, MorphologyParams, SAMPLE_RATE_HZ, SEGMENT_SECONDS};
use crate::error::{Error, Result};
use crate::rng::{RngSeed, Stream};

/// QRS widening applied to ventricular beats.
pub const PVC_WIDTH_FACTOR: f64 = 1.8;
const PVC_AMPLITUDE_FACTOR: f64 = 1.25;
/// Premature coupling interval and the compensatory pause after it, as
/// fractions of the sinus RR interval. They sum to two sinus cycles.
const PVC_COUPLING: f64 = 0.7;
const PVC_PAUSE: f64 = 1.3;
/// Fibrillatory wave band in Hz.
const AF_BAND_HZ: (f64, f64) = (4.0, 8.0);
/// f-wave amplitude relative to the (absent) P wave.
const AF_WAVE_GAIN: f64 = 0.35;
/// Ventricular rate speeds up slightly under AF.
const AF_RATE_FACTOR: f64 = 1.1;
/// Multiplicative RR spread under AF: RR ~ base * U(1 - s, 1 + s).
const AF_RR_SPREAD: f64 = 0.4;

/// Gaussian sigma for a bump whose full width at 10% of peak is `width`.
fn sigma_for_width(width: f64) -> f64 {
    width / (2.0 * (2.0 * std::f64::consts::LN_10).sqrt())
}

#[derive(Debug, Clone, Copy)]
struct Wave {
    /// Seconds relative to the R peak.
    center: f64,
    sigma: f64,
    amplitude: f64,
}

impl Wave {
    fn new(center: f64, width_10pct: f64, amplitude: f64) -> Self {
        Wave { center, sigma: sigma_for_width(width_10pct), amplitude }
    }

    fn extent(&self) -> (f64, f64) {
        (self.center - 5.0 * self.sigma, self.center + 5.0 * self.sigma)
    }
}

fn beat_waves(p: &MorphologyParams, class: BeatClass) -> Vec<Wave> {
    let (qrs_w, qrs_a) = match class {
        BeatClass::Pvc => (p.qrs_width * PVC_WIDTH_FACTOR, p.qrs_amplitude * PVC_AMPLITUDE_FACTOR),
        _ => (p.qrs_width, p.qrs_amplitude),
    };
    let qrs_onset = -qrs_w / 2.0;
    let mut waves = Vec::with_capacity(5);
    if class == BeatClass::Normal {
        let p_center = qrs_onset - p.pq_interval + p.p_width / 2.0;
        waves.push(Wave::new(p_center, p.p_width, p.p_amplitude));
    }
    // Biphasic QRS: dominant R with small Q and deeper S deflections
    // placed outside the R wave's 10% crossings.
    let qs_width = qrs_w * 0.43;
    waves.push(Wave::new(-0.7 * qrs_w, qs_width, -0.1 * qrs_a));
    waves.push(Wave::new(0.0, qrs_w, qrs_a));
    waves.push(Wave::new(0.7 * qrs_w, qs_width, -0.25 * qrs_a));
    match class {
        BeatClass::Pvc => {
            // Discordant, broadened repolarisation.
            let t_w = p.t_width * 1.3;
            let t_center = qrs_onset + p.qt_interval * 1.1 - t_w / 2.0;
            waves.push(Wave::new(t_center, t_w, -1.2 * p.t_amplitude));
        }
        _ => {
            let t_center = qrs_onset + p.qt_interval - p.t_width / 2.0;
            waves.push(Wave::new(t_center, p.t_width, p.t_amplitude));
        }
    }
    waves
}

fn support(waves: &[Wave]) -> (f64, f64) {
    waves.iter().map(Wave::extent).fold((0.0f64, 0.0f64), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
}

/// Adds every wave of a beat centred at sample `r_index`.
fn render_beat(out: &mut [f64], r_index: usize, waves: &[Wave], fs: f64) {
    for w in waves {
        if w.amplitude == 0.0 {
            continue;
        }
        let center = r_index as f64 + w.center * fs;
        let reach = 5.0 * w.sigma * fs;
        let lo = (center - reach).floor().max(0.0) as usize;
        let hi = ((center + reach).ceil() as usize).min(out.len().saturating_sub(1));
        let inv = 1.0 / (2.0 * (w.sigma * fs).powi(2));
        for (i, v) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let d = i as f64 - center;
            *v += w.amplitude * (-d * d * inv).exp();
        }
    }
}

/// Phase-continuous atrial fibrillatory activity: two incommensurate tones
/// in the 4-8 Hz band.
fn add_fibrillatory_wave<R: Rng + ?Sized>(out: &mut [f64], fs: f64, amplitude: f64, rng: &mut R) {
    let f1 = rng.random_range(AF_BAND_HZ.0..AF_BAND_HZ.1);
    let f2 = rng.random_range(AF_BAND_HZ.0..AF_BAND_HZ.1);
    let ph1 = rng.random_range(0.0..std::f64::consts::TAU);
    let ph2 = rng.random_range(0.0..std::f64::consts::TAU);
    if amplitude == 0.0 {
        return;
    }
    let w1 = std::f64::consts::TAU * f1 / fs;
    let w2 = std::f64::consts::TAU * f2 / fs;
    for (i, v) in out.iter_mut().enumerate() {
        let n = i as f64;
        *v += amplitude * ((w1 * n + ph1).sin() + 0.5 * (w2 * n + ph2).sin());
    }
}

/// One rendered beat, padded so the whole morphology fits.
#[derive(Debug, Clone, PartialEq)]
pub struct Beat {
    pub samples: Vec<f64>,
    /// Index of the R peak within `samples`.
    pub r_index: usize,
    /// Set for ventricular beats: the next RR interval is a compensatory pause.
    pub compensatory_pause: bool,
}

/// Renders a single isolated beat at 250 Hz.
pub fn synth_beat<R: Rng + ?Sized>(params: &MorphologyParams, class: BeatClass, rng: &mut R) -> Result<Beat> {
    params.validate()?;
    let fs = SAMPLE_RATE_HZ;
    let waves = beat_waves(params, class);
    let (lo, hi) = support(&waves);
    let r_index = (-lo * fs).ceil() as usize;
    let len = r_index + (hi * fs).ceil() as usize + 1;
    let mut samples = vec![0.0; len];
    render_beat(&mut samples, r_index, &waves, fs);
    if class == BeatClass::Af {
        add_fibrillatory_wave(&mut samples, fs, AF_WAVE_GAIN * params.p_amplitude, rng);
    }
    Ok(Beat { samples, r_index, compensatory_pause: class == BeatClass::Pvc })
}

/// Generates a homogeneous segment of `class` rhythm.
///
/// R peaks land exactly on the sample grid and are recorded as ground truth.
/// The same `(params, class, duration, seed)` always yields identical output.
pub fn synth_segment(params: &MorphologyParams, class: BeatClass, duration: f64, seed: RngSeed) -> Result<EcgSignal> {
    params.validate()?;
    if !(duration.is_finite() && duration >= 2.0) {
        return Err(Error::param(format!("segment duration must be >= 2 s, got {duration}")));
    }
    let fs = SAMPLE_RATE_HZ;
    let n = (duration * fs).round() as usize;
    let waves = beat_waves(params, class);
    let (lo, hi) = support(&waves);
    // Earliest / latest R positions that keep the whole beat inside the segment.
    let first = (-lo).max(0.4);
    let last = duration - hi.max(0.4);
    if last < first {
        return Err(Error::param(format!("duration {duration} s cannot hold one beat")));
    }

    let mut rng = seed.rng();
    let jitter = Normal::new(0.0, params.rr_jitter_sigma).map_err(|e| Error::param(e.to_string()))?;
    let base = params.base_rr();
    let mut r_times = Vec::new();
    let mut t = first;
    let mut k = 0usize;
    while t <= last {
        r_times.push(t);
        let nominal = match class {
            BeatClass::Normal => base,
            BeatClass::Pvc => base * if k % 2 == 0 { PVC_COUPLING } else { PVC_PAUSE },
            BeatClass::Af => base / AF_RATE_FACTOR * rng.random_range(1.0 - AF_RR_SPREAD..1.0 + AF_RR_SPREAD),
        };
        let rr = (nominal + jitter.sample(&mut rng)).max(0.3 * base);
        t += rr;
        k += 1;
    }

    let mut samples = vec![0.0; n];
    let mut r_peaks: Vec<usize> = Vec::with_capacity(r_times.len());
    for &rt in &r_times {
        let idx = (rt * fs).round() as usize;
        if r_peaks.last().is_some_and(|&p| p >= idx) || idx >= n {
            continue;
        }
        render_beat(&mut samples, idx, &waves, fs);
        r_peaks.push(idx);
    }
    if class == BeatClass::Af {
        add_fibrillatory_wave(&mut samples, fs, AF_WAVE_GAIN * params.p_amplitude, &mut rng);
    }
    let beat_labels = vec![class; r_peaks.len()];
    Ok(EcgSignal { samples, sample_rate: fs, r_peaks, beat_labels, segment_label: class })
}

/// Inclusive uniform bounds for per-segment morphology draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationBounds {
    pub p_amplitude: (f64, f64),
    pub p_width: (f64, f64),
    pub qrs_amplitude: (f64, f64),
    pub qrs_width: (f64, f64),
    pub t_amplitude: (f64, f64),
    pub t_width: (f64, f64),
    pub pq_interval: (f64, f64),
    pub qt_interval: (f64, f64),
    pub baseline_heart_rate: (f64, f64),
    pub rr_jitter_sigma: (f64, f64),
}

impl Default for PopulationBounds {
    fn default() -> Self {
        PopulationBounds {
            p_amplitude: (0.10, 0.20),
            p_width: (0.08, 0.11),
            qrs_amplitude: (0.8, 1.2),
            qrs_width: (0.07, 0.11),
            t_amplitude: (0.2, 0.4),
            t_width: (0.14, 0.18),
            pq_interval: (0.14, 0.18),
            qt_interval: (0.36, 0.42),
            baseline_heart_rate: (60.0, 95.0),
            rr_jitter_sigma: (0.01, 0.03),
        }
    }
}

impl PopulationBounds {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MorphologyParams {
        let mut u = |(lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..=hi) } else { lo };
        MorphologyParams {
            p_amplitude: u(self.p_amplitude),
            p_width: u(self.p_width),
            qrs_amplitude: u(self.qrs_amplitude),
            qrs_width: u(self.qrs_width),
            t_amplitude: u(self.t_amplitude),
            t_width: u(self.t_width),
            pq_interval: u(self.pq_interval),
            qt_interval: u(self.qt_interval),
            baseline_heart_rate: u(self.baseline_heart_rate),
            rr_jitter_sigma: u(self.rr_jitter_sigma),
        }
    }
}

/// Class of every segment in a dataset of `n` with `anomaly_fraction`
/// anomalies, before shuffling: PVC first (taking the odd one out), then AF,
/// then Normal.
pub(crate) fn class_counts(n: usize, anomaly_fraction: f64) -> [usize; 3] {
    let anomalies = ((n as f64) * anomaly_fraction).round() as usize;
    let pvc = anomalies.div_ceil(2);
    let af = anomalies / 2;
    [n - anomalies, pvc, af]
}

/// Labelled dataset of 10 s segments with default population bounds.
pub fn generate_dataset(n: usize, anomaly_fraction: f64, seed: RngSeed) -> Result<Vec<EcgSignal>> {
    generate_dataset_with(n, anomaly_fraction, SEGMENT_SECONDS, &PopulationBounds::default(), seed)
}

/// Seed of segment `index` in a dataset generated from `seed`.
pub fn segment_seed(seed: RngSeed, index: usize) -> RngSeed {
    seed.derive(Stream::Segment, index as u64)
}

pub fn generate_dataset_with(
    n: usize,
    anomaly_fraction: f64,
    duration: f64,
    bounds: &PopulationBounds,
    seed: RngSeed,
) -> Result<Vec<EcgSignal>> {
    if n == 0 {
        return Err(Error::param("dataset size must be > 0"));
    }
    if !(0.0..=1.0).contains(&anomaly_fraction) {
        return Err(Error::param(format!("anomaly_fraction must be in [0, 1], got {anomaly_fraction}")));
    }
    let counts = class_counts(n, anomaly_fraction);
    let mut labels: Vec<BeatClass> =
        BeatClass::ALL.iter().zip(counts).flat_map(|(&c, k)| std::iter::repeat_n(c, k)).collect();
    labels.shuffle(&mut seed.derive(Stream::LabelShuffle, 0).rng());

    labels
        .par_iter()
        .enumerate()
        .map(|(i, &class)| {
            let params = bounds.sample(&mut seed.derive(Stream::SegmentParams, i as u64).rng());
            synth_segment(&params, class, duration, segment_seed(seed, i))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_amplitudes() -> MorphologyParams {
        MorphologyParams { p_amplitude: 0.0, qrs_amplitude: 0.0, t_amplitude: 0.0, ..Default::default() }
    }

    /// Width of the lobe around `peak` at 10% of its height, in samples.
    fn width_at_10pct(x: &[f64], peak: usize) -> f64 {
        let level = 0.1 * x[peak];
        let mut l = peak;
        while l > 0 && x[l] >= level {
            l -= 1;
        }
        let mut r = peak;
        while r + 1 < x.len() && x[r] >= level {
            r += 1;
        }
        // Linear interpolation of both crossings.
        let lf = l as f64 + (level - x[l]) / (x[l + 1] - x[l]);
        let rf = (r - 1) as f64 + (x[r - 1] - level) / (x[r - 1] - x[r]);
        rf - lf
    }

    #[test]
    fn zero_amplitude_beat_is_silent() {
        let mut rng = RngSeed(1).rng();
        for class in BeatClass::ALL {
            let beat = synth_beat(&zero_amplitudes(), class, &mut rng).unwrap();
            assert!(beat.samples.iter().all(|&v| v == 0.0), "{class}");
        }
    }

    #[test]
    fn pvc_qrs_is_at_least_1_6_times_wider() {
        let p = MorphologyParams::default();
        let mut rng = RngSeed(2).rng();
        let normal = synth_beat(&p, BeatClass::Normal, &mut rng).unwrap();
        let pvc = synth_beat(&p, BeatClass::Pvc, &mut rng).unwrap();
        assert!(pvc.compensatory_pause && !normal.compensatory_pause);
        let wn = width_at_10pct(&normal.samples, normal.r_index) / SAMPLE_RATE_HZ;
        let wp = width_at_10pct(&pvc.samples, pvc.r_index) / SAMPLE_RATE_HZ;
        assert!(wp >= 1.6 * p.qrs_width, "pvc width {wp} vs param {}", p.qrs_width);
        assert!(wp >= 1.6 * wn);
    }

    #[test]
    fn normal_beat_has_single_r_peak() {
        let p = MorphologyParams::default();
        let beat = synth_beat(&p, BeatClass::Normal, &mut RngSeed(3).rng()).unwrap();
        let x = &beat.samples;
        let peaks: Vec<usize> =
            (1..x.len() - 1).filter(|&i| x[i] > x[i - 1] && x[i] >= x[i + 1] && x[i] > 0.5 * p.qrs_amplitude).collect();
        assert_eq!(peaks, vec![beat.r_index]);
    }

    #[test]
    fn ten_second_segment_at_75_bpm_has_12_or_13_beats() {
        let p = MorphologyParams::default();
        for s in 0..20 {
            let sig = synth_segment(&p, BeatClass::Normal, 10.0, RngSeed(s)).unwrap();
            assert!((12..=13).contains(&sig.r_peaks.len()), "{}", sig.r_peaks.len());
            assert_eq!(sig.len(), 2500);
            sig.validate().unwrap();
        }
    }

    #[test]
    fn segment_is_deterministic() {
        let p = MorphologyParams::default();
        for class in BeatClass::ALL {
            let a = synth_segment(&p, class, 10.0, RngSeed(9)).unwrap();
            let b = synth_segment(&p, class, 10.0, RngSeed(9)).unwrap();
            assert_eq!(a, b);
        }
    }

    fn std_dev(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    }

    #[test]
    fn af_rr_spread_is_three_times_normal() {
        let p = MorphologyParams::default();
        for s in 0..20 {
            let n = synth_segment(&p, BeatClass::Normal, 10.0, RngSeed(s)).unwrap();
            let a = synth_segment(&p, BeatClass::Af, 10.0, RngSeed(s)).unwrap();
            assert!(std_dev(&a.rr_intervals()) >= 3.0 * std_dev(&n.rr_intervals()), "seed {s}");
        }
    }

    #[test]
    fn annotations_sit_on_the_absolute_maximum() {
        let p = MorphologyParams::default();
        for class in BeatClass::ALL {
            let sig = synth_segment(&p, class, 10.0, RngSeed(5)).unwrap();
            for &r in &sig.r_peaks {
                let lo = r.saturating_sub(40);
                let hi = (r + 40).min(sig.len() - 1);
                let argmax = (lo..=hi).max_by(|&a, &b| sig.samples[a].abs().total_cmp(&sig.samples[b].abs())).unwrap();
                assert!(argmax.abs_diff(r) <= 2, "{class}: {argmax} vs {r}");
            }
        }
    }

    #[test]
    fn short_duration_rejected() {
        let p = MorphologyParams::default();
        assert!(synth_segment(&p, BeatClass::Normal, 1.5, RngSeed(0)).is_err());
    }

    #[test]
    fn dataset_class_counts_follow_rounding_rule() {
        assert_eq!(class_counts(10000, 0.10), [9000, 500, 500]);
        assert_eq!(class_counts(10, 0.0), [10, 0, 0]);
        assert_eq!(class_counts(10, 0.3), [7, 2, 1]);

        let ds = generate_dataset(10, 0.3, RngSeed(4)).unwrap();
        let count = |c| ds.iter().filter(|s| s.segment_label == c).count();
        assert_eq!([count(BeatClass::Normal), count(BeatClass::Pvc), count(BeatClass::Af)], [7, 2, 1]);
    }

    #[test]
    fn dataset_errors() {
        assert!(generate_dataset(0, 0.1, RngSeed(0)).is_err());
        assert!(generate_dataset(10, 1.5, RngSeed(0)).is_err());
        assert!(generate_dataset(10, -0.1, RngSeed(0)).is_err());
    }
}
