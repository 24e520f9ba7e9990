//! R-peak detection in the style of Pan and Tompkins: band-pass, derivative,
//! squaring, moving-window integration, then adaptive dual thresholds with
//! search-back.

use crate::ecg::EcgSignal;
use crate::error::{Error, Result};
use crate::noise::SosFilter;

/// Minimum spacing between two reported beats, in seconds.
pub const REFRACTORY_S: f64 = 0.200;
const INTEGRATION_S: f64 = 0.150;
const QRS_BAND_HZ: (f64, f64) = (5.0, 15.0);
const SEARCH_BACK_FACTOR: f64 = 1.66;
/// Candidates this soon after a beat must have comparable slope, otherwise
/// they are taken for T waves.
const T_WAVE_WINDOW_S: f64 = 0.360;
/// Half-width of the window searched for the R peak around an integrated peak.
const REFINE_S: f64 = 0.150;
const REFINE_LOWPASS_HZ: f64 = 20.0;
const REFINE_STEPS: usize = 3;
/// QRS-band amplitude, relative to the previous beat, below which a nearby
/// candidate is a T wave.
const T_WAVE_RATIO: f64 = 0.6;
/// Band amplitude or excursion, relative to the recording's median beat,
/// below which a detection is discarded.
const MIN_RATIO: f64 = 0.5;

struct Beat {
    index: usize,
    strength: f64,
    band: f64,
}

/// Local maxima of `x` that are at least `min_gap` samples apart, keeping the
/// larger of any two that are closer.
fn spaced_maxima(x: &[f64], min_gap: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        if !(x[i] > x[i - 1] && x[i] >= x[i + 1] && x[i] > 0.0) {
            continue;
        }
        match out.last() {
            Some(&prev) if i - prev < min_gap => {
                if x[i] > x[prev] {
                    *out.last_mut().unwrap() = i;
                }
            }
            _ => out.push(i),
        }
    }
    out
}

/// Moving-window integration centred on each sample.
fn integrate(x: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / width as f64
        })
        .collect()
}

/// Detects R peaks and returns their sample indices in increasing order.
pub fn detect_r_peaks(signal: &EcgSignal) -> Result<Vec<usize>> {
    let fs = signal.sample_rate;
    if signal.duration() < 2.0 {
        return Err(Error::param(format!("detector needs >= 2 s of signal, got {:.3} s", signal.duration())));
    }
    let x = &signal.samples;
    let n = x.len();
    let band = SosFilter::bandpass(4, QRS_BAND_HZ.0, QRS_BAND_HZ.1, fs)?.filtfilt(x)?;

    // Five-point derivative, squared.
    let mut slope = vec![0.0; n];
    for i in 2..n - 2 {
        slope[i] = (2.0 * band[i + 1] + band[i + 2] - band[i - 2] - 2.0 * band[i - 1]) / 8.0;
    }
    let energy: Vec<f64> = slope.iter().map(|d| d * d).collect();
    let width = ((INTEGRATION_S * fs).round() as usize).max(1);
    let mwi = integrate(&energy, width);
    let refractory = (REFRACTORY_S * fs).round() as usize;

    let candidates = spaced_maxima(&mwi, refractory);
    if candidates.is_empty() {
        return Err(Error::NoPeaks);
    }

    let learn = ((2.0 * fs) as usize).min(n);
    let mut spk = 0.25 * mwi[..learn].iter().cloned().fold(0.0, f64::max);
    let mut npk = 0.5 * mwi[..learn].iter().sum::<f64>() / learn as f64;
    let threshold = |spk: f64, npk: f64| npk + 0.25 * (spk - npk);
    let t_window = (T_WAVE_WINDOW_S * fs).round() as usize;
    let max_slope = |c: usize| {
        let lo = c.saturating_sub(width / 2);
        let hi = (c + width / 2).min(n - 1);
        slope[lo..=hi].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };

    let mut accepted: Vec<usize> = Vec::new();
    let mut skipped: Vec<usize> = Vec::new();
    for &c in &candidates {
        let v = mwi[c];
        let t_wave = accepted.last().is_some_and(|&last| c - last < t_window && max_slope(c) < 0.5 * max_slope(last));
        if v > threshold(spk, npk) && !t_wave {
            accepted.push(c);
            spk = 0.125 * v + 0.875 * spk;
            skipped.clear();
        } else {
            npk = 0.125 * v + 0.875 * npk;
            skipped.push(c);
        }

        // Search back for a missed beat when the current gap is too long.
        if accepted.len() >= 2 && !skipped.is_empty() {
            let recent = &accepted[accepted.len().saturating_sub(9)..];
            let mean_rr = (recent[recent.len() - 1] - recent[0]) as f64 / (recent.len() - 1) as f64;
            let last = *accepted.last().unwrap();
            if (c - last) as f64 > SEARCH_BACK_FACTOR * mean_rr {
                let half = 0.5 * threshold(spk, npk);
                let best = skipped
                    .iter()
                    .copied()
                    .filter(|&s| s > last + refractory && mwi[s] > half)
                    .max_by(|&a, &b| mwi[a].total_cmp(&mwi[b]));
                if let Some(b) = best {
                    spk = 0.25 * mwi[b] + 0.75 * spk;
                    accepted.push(b);
                    accepted.sort_unstable();
                    skipped.retain(|&s| s > b);
                }
            }
        }
    }

    // Refine each integrated peak to the largest excursion of the smoothed
    // signal from its local mean; candidates whose excursion sits on the
    // signal boundary are edge transients.
    let smooth = SosFilter::lowpass(4, REFINE_LOWPASS_HZ, fs)?.filtfilt(x)?;
    let reach = (REFINE_S * fs).round() as usize;
    let half_width = width / 2;
    let band_amplitude = |r: usize| {
        let lo = r.saturating_sub(half_width);
        let hi = (r + half_width).min(n - 1);
        band[lo..=hi].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };
    let mut refined: Vec<Beat> = accepted
        .iter()
        .filter_map(|&c| {
            // Wide complexes put the integrated peak off the R wave; follow
            // the excursion when it sits on the window edge.
            let mut centre = c;
            let (mut index, mut strength) = (c, 0.0);
            for _ in 0..REFINE_STEPS {
                let lo = centre.saturating_sub(reach);
                let hi = (centre + reach).min(n - 1);
                let local_mean = smooth[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
                (index, strength) =
                    (lo..=hi).map(|i| (i, (smooth[i] - local_mean).abs())).max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
                if (index != lo || lo == 0) && (index != hi || hi == n - 1) {
                    break;
                }
                centre = index;
            }
            (index != 0 && index != n - 1).then(|| Beat { index, strength, band: band_amplitude(index) })
        })
        .collect();
    refined.sort_by_key(|b| b.index);

    let mut kept: Vec<Beat> = Vec::with_capacity(refined.len());
    for beat in refined {
        match kept.last_mut() {
            Some(prev) if beat.index - prev.index < refractory => {
                if beat.strength > prev.strength {
                    *prev = beat;
                }
            }
            Some(prev) if beat.index - prev.index < t_window && beat.band < T_WAVE_RATIO * prev.band => {}
            _ => kept.push(beat),
        }
    }
    // Noise peaks and stray waves are much weaker than the beats of the same
    // recording, both in the QRS band and in raw excursion.
    if !kept.is_empty() {
        let median = |f: fn(&Beat) -> f64| {
            let mut v: Vec<f64> = kept.iter().map(f).collect();
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        let (band_floor, strength_floor) = (MIN_RATIO * median(|b| b.band), MIN_RATIO * median(|b| b.strength));
        kept.retain(|b| b.band >= band_floor && b.strength >= strength_floor);
    }
    let peaks: Vec<usize> = kept.into_iter().map(|b| b.index).collect();
    if peaks.is_empty() {
        return Err(Error::NoPeaks);
    }
    Ok(peaks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecg::{synth_segment, BeatClass, MorphologyParams};
    use crate::rng::RngSeed;

    #[test]
    fn clean_normal_segment_matches_ground_truth() {
        let p = MorphologyParams::default();
        for class in BeatClass::ALL {
            for s in 0..10 {
                let sig = synth_segment(&p, class, 10.0, RngSeed(s)).unwrap();
                let found = detect_r_peaks(&sig).unwrap();
                assert_eq!(found.len(), sig.r_peaks.len(), "{class} seed {s}: {found:?} vs {:?}", sig.r_peaks);
                for (a, b) in found.iter().zip(&sig.r_peaks) {
                    assert!(a.abs_diff(*b) <= 5, "{class} seed {s}");
                }
            }
        }
    }

    #[test]
    fn silent_signal_has_no_peaks() {
        let s = EcgSignal::unannotated(vec![0.0; 2500], 250.0, BeatClass::Normal);
        assert!(matches!(detect_r_peaks(&s), Err(Error::NoPeaks)));
    }

    #[test]
    fn short_signal_rejected() {
        let s = EcgSignal::unannotated(vec![0.0; 400], 250.0, BeatClass::Normal);
        assert!(detect_r_peaks(&s).is_err());
    }

    #[test]
    fn spaced_maxima_keeps_larger_neighbour() {
        let x = [0.0, 1.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0, 0.0];
        assert_eq!(spaced_maxima(&x, 3), vec![3, 7]);
    }
}
