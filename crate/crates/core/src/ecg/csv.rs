//! Plain-text dataset exchange.
//!
//! A dataset is two files: a metadata table (`id,label,seed`, one row per
//! segment) and a samples sidecar with one row per segment and one column per
//! sample, in mV with six decimals. Single signals use a one-column format
//! whose first line carries the sample rate.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::synth::segment_seed;
use super::{BeatClass, EcgSignal};
use crate::error::{Error, Result};
use crate::rng::RngSeed;

pub fn write_dataset_csv(meta: &Path, samples: &Path, signals: &[EcgSignal], root_seed: RngSeed) -> Result<()> {
    let mut m = BufWriter::new(fs::File::create(meta)?);
    writeln!(m, "id,label,seed")?;
    for (i, s) in signals.iter().enumerate() {
        writeln!(m, "{i},{},{}", s.segment_label, segment_seed(root_seed, i).0)?;
    }
    m.flush()?;

    let mut w = BufWriter::new(fs::File::create(samples)?);
    let mut line = String::new();
    for s in signals {
        line.clear();
        for (j, v) in s.samples.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:.6}"));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset_csv`]. The returned signals
/// carry labels but no beat annotations.
pub fn read_dataset_csv(meta: &Path, samples: &Path, sample_rate: f64) -> Result<Vec<EcgSignal>> {
    let meta_file = BufReader::new(fs::File::open(meta)?);
    let mut labels = Vec::new();
    for (n, line) in meta_file.lines().enumerate().skip(1) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let label = line
            .split(',')
            .nth(1)
            .ok_or_else(|| Error::Parse(format!("{}:{}: missing label column", meta.display(), n + 1)))?;
        labels.push(label.parse::<BeatClass>()?);
    }

    let sample_file = BufReader::new(fs::File::open(samples)?);
    let mut out = Vec::with_capacity(labels.len());
    for (n, line) in sample_file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", samples.display(), n + 1)))?;
        let label =
            *labels.get(out.len()).ok_or_else(|| Error::Parse("samples file has more rows than metadata".into()))?;
        out.push(EcgSignal::unannotated(values, sample_rate, label));
    }
    if out.len() != labels.len() {
        return Err(Error::Parse(format!("metadata lists {} segments, samples file has {}", labels.len(), out.len())));
    }
    Ok(out)
}

pub fn write_signal_csv(path: &Path, signal: &EcgSignal) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "sample_rate={}", signal.sample_rate)?;
    for v in &signal.samples {
        writeln!(w, "{v:.6}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a user-supplied single-channel signal. The first line holds the
/// sample rate (`sample_rate=250`, `sample_rate,250` or just `250`); every
/// following non-empty line holds one sample in mV.
pub fn read_signal_csv(path: &Path) -> Result<EcgSignal> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?;
    let rate_text = header.trim().trim_start_matches("sample_rate").trim_start_matches(['=', ',', ':', ' ']);
    let sample_rate: f64 = rate_text
        .parse()
        .map_err(|_| Error::Parse(format!("{}: bad sample rate header {header:?}", path.display())))?;
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::Parse(format!("{}: sample rate must be positive", path.display())));
    }
    let samples = lines
        .enumerate()
        .map(|(i, l)| l.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), i + 2))))
        .collect::<Result<Vec<_>>>()?;
    let signal = EcgSignal::unannotated(samples, sample_rate, BeatClass::Normal);
    signal.validate()?;
    Ok(signal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecg::generate_dataset;

    #[test]
    fn dataset_roundtrip_keeps_labels_and_six_decimals() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_dataset(6, 0.5, RngSeed(11)).unwrap();
        let (m, s) = (dir.path().join("dataset.csv"), dir.path().join("samples.csv"));
        write_dataset_csv(&m, &s, &ds, RngSeed(11)).unwrap();
        let back = read_dataset_csv(&m, &s, 250.0).unwrap();
        assert_eq!(back.len(), 6);
        for (a, b) in ds.iter().zip(&back) {
            assert_eq!(a.segment_label, b.segment_label);
            assert_eq!(b.samples.len(), 2500);
            for (x, y) in a.samples.iter().zip(&b.samples) {
                assert!((x - y).abs() <= 5e-7);
            }
        }
        let meta = fs::read_to_string(&m).unwrap();
        assert!(meta.starts_with("id,label,seed\n0,"));
    }

    #[test]
    fn external_signal_headers() {
        let dir = tempfile::tempdir().unwrap();
        for header in ["sample_rate=360", "sample_rate,360", "360"] {
            let p = dir.path().join("sig.csv");
            fs::write(&p, format!("{header}\n0.1\n-0.25\n\n1.5\n")).unwrap();
            let s = read_signal_csv(&p).unwrap();
            assert_eq!(s.sample_rate, 360.0);
            assert_eq!(s.samples, vec![0.1, -0.25, 1.5]);
        }
        let p = dir.path().join("bad.csv");
        fs::write(&p, "sample_rate=abc\n1\n").unwrap();
        assert!(read_signal_csv(&p).is_err());
    }
}
