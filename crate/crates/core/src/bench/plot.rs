//! Self-contained SVG charts.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::RunReport;
use crate::error::Result;
use crate::noise::PsdEstimate;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, x_label: &str, y_label: &str) {
    let (x0, y0, x1, y1) = (LEFT, H - BOTTOM, W - RIGHT, TOP);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

/// One bar. `value` is printed verbatim into a `data-value` attribute and,
/// as a percentage, into the label.
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
    pub color: &'static str,
}

/// Vertical bars on a 0..1 axis.
pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar]) -> String {
    let mut s = header(title);
    axes(&mut s, "", y_label);
    let plot_h = H - TOP - BOTTOM;
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let y = H - BOTTOM - v * plot_h;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.2}</text>"#, LEFT - 6.0, y + 4.0, v);
    }
    let slot = (W - LEFT - RIGHT) / bars.len().max(1) as f64;
    for (i, b) in bars.iter().enumerate() {
        let h = b.value.clamp(0.0, 1.0) * plot_h;
        let x = LEFT + i as f64 * slot + slot * 0.2;
        let y = H - BOTTOM - h;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{h:.2}" fill="{}" data-value="{}"/>"#,
            slot * 0.6,
            b.color,
            b.value
        );
        let cx = x + slot * 0.3;
        let _ =
            writeln!(s, r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{:.2}%</text>"#, y - 5.0, b.value * 100.0);
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            H - BOTTOM + 18.0,
            escape(&b.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Mean test accuracy per arm beside the published reference values.
pub fn accuracy_chart(report: &RunReport) -> Option<String> {
    let ml = report.ml.as_ref()?;
    let r = &report.reference;
    let bars = [
        Bar { label: "noise-augmented".into(), value: ml.noise_augmented.accuracy_mean, color: "#1f77b4" },
        Bar { label: "filtered".into(), value: ml.filtered.accuracy_mean, color: "#ff7f0e" },
        Bar { label: "reference augmented".into(), value: r.accuracy_noise_augmented, color: "#aec7e8" },
        Bar { label: "reference filtered".into(), value: r.accuracy_filtered, color: "#ffbb78" },
    ];
    Some(bar_chart("Test accuracy on noisy segments", "accuracy", &bars))
}

pub fn puf_chart(report: &RunReport) -> Option<String> {
    let p = &report.puf.as_ref()?.stats;
    let mut bars = vec![
        Bar { label: "mean inter-device HD".into(), value: p.uniqueness_mean_fractional_hd, color: "#2ca02c" },
        Bar { label: "bit stability".into(), value: p.bit_stability, color: "#9467bd" },
        Bar { label: "1 - raw BER".into(), value: 1.0 - p.intra_device_ber, color: "#8c564b" },
    ];
    if let Some(f) = p.key_failure_rate {
        bars.push(Bar { label: "key success".into(), value: 1.0 - f, color: "#17becf" });
    }
    Some(bar_chart("PUF population statistics", "fraction", &bars))
}

/// Clean against noisy PSD on a log power axis from 0 Hz to Nyquist.
pub fn psd_chart(clean: &PsdEstimate, noisy: &PsdEstimate) -> String {
    let mut s = header("Power spectral density");
    axes(&mut s, "frequency (Hz)", "log10 power (mV²/Hz)");
    let nyquist = clean.sample_rate / 2.0;
    let logs = |p: &PsdEstimate| p.power.iter().map(|&v| v.max(1e-30).log10()).collect::<Vec<_>>();
    let (lc, ln) = (logs(clean), logs(noisy));
    let lo = lc.iter().chain(&ln).copied().fold(f64::INFINITY, f64::min).floor();
    let hi = lc.iter().chain(&ln).copied().fold(f64::NEG_INFINITY, f64::max).ceil().max(lo + 1.0);
    let px = |f: f64| LEFT + f / nyquist * (W - LEFT - RIGHT);
    let py = |l: f64| H - BOTTOM - (l - lo) / (hi - lo) * (H - TOP - BOTTOM);

    for k in 0..=5 {
        let f = nyquist * k as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{f:.0}</text>"#, px(f), H - BOTTOM + 16.0);
    }
    let step = ((hi - lo) / 5.0).ceil().max(1.0);
    let mut l = lo;
    while l <= hi {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{l:.0}</text>"#, LEFT - 6.0, py(l) + 4.0);
        l += step;
    }
    for (p, logp, color, name, y) in
        [(clean, &lc, "#1f77b4", "clean", TOP + 4.0), (noisy, &ln, "#d62728", "noisy", TOP + 20.0)]
    {
        let pts: Vec<String> =
            p.frequencies.iter().zip(logp).map(|(&f, &v)| format!("{:.2},{:.2}", px(f), py(v))).collect();
        let _ =
            writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(s, r#"<text x="{}" y="{y}" fill="{color}">{name}</text>"#, W - RIGHT - 60.0);
    }
    s.push_str("</svg>\n");
    s
}

/// What [`emit_plots`] wrote and what it skipped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlotManifest {
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

/// Writes the charts the report has data for into `dir`.
pub fn emit_plots(report: &RunReport, psd: Option<(&PsdEstimate, &PsdEstimate)>, dir: &Path) -> Result<PlotManifest> {
    std::fs::create_dir_all(dir)?;
    let mut m = PlotManifest::default();
    let mut put = |name: &str, svg: Option<String>, missing: &str| -> Result<()> {
        match svg {
            Some(svg) => {
                std::fs::write(dir.join(name), svg)?;
                m.files.push(format!("plots/{name}"));
            }
            None => m.notes.push(format!("plots/{name} omitted: {missing}")),
        }
        Ok(())
    };
    put("accuracy.svg", accuracy_chart(report), "no ML results")?;
    put("psd.svg", psd.map(|(c, n)| psd_chart(c, n)), "no PSD data")?;
    put("puf.svg", puf_chart(report), "empty PUF statistics")?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::config::ExperimentConfig;

    #[test]
    fn bar_labels_carry_exact_values() {
        let svg = bar_chart("t", "y", &[Bar { label: "a".into(), value: 0.123456789, color: "red" }]);
        assert!(svg.contains(r#"data-value="0.123456789""#));
        assert!(svg.contains("12.35%"));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn psd_axis_spans_nyquist() {
        let p = PsdEstimate {
            frequencies: (0..=128).map(|i| i as f64 * 125.0 / 128.0).collect(),
            power: vec![1e-3; 129],
            window_length: 256,
            overlap: 0.5,
            sample_rate: 250.0,
            segments: 1,
        };
        let svg = psd_chart(&p, &p);
        assert!(svg.contains(">0</text>"));
        assert!(svg.contains(">125</text>"));
    }

    #[test]
    fn empty_puf_section_is_omitted_and_noted() {
        let dir = tempfile::tempdir().unwrap();
        let r = RunReport::new(ExperimentConfig::default(), None, None);
        let m = emit_plots(&r, None, dir.path()).unwrap();
        assert!(m.files.is_empty());
        assert!(m.notes.iter().any(|n| n.starts_with("plots/puf.svg omitted")));
        assert!(!dir.path().join("puf.svg").exists());
    }
}
