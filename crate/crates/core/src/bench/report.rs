use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::ExperimentConfig;
use super::ml::MlResults;
use super::puf::PufResults;
use crate::error::Result;

pub const SCHEMA: &str = "noisepulse-run-report";
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Decimal places kept for every float in emitted JSON.
pub const FLOAT_DECIMALS: i32 = 12;

pub const MODELED: &str = "modeled, not measured";

/// Static power and latency budget of the hardware platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLedger {
    pub power_uw: BTreeMap<String, f64>,
    pub latency_ms: BTreeMap<String, f64>,
    pub total_power_uw: f64,
    pub total_latency_ms: f64,
    pub provenance: String,
}

impl PowerLedger {
    pub fn new(power_uw: BTreeMap<String, f64>, latency_ms: BTreeMap<String, f64>) -> Self {
        PowerLedger {
            total_power_uw: power_uw.values().sum(),
            total_latency_ms: latency_ms.values().sum(),
            power_uw,
            latency_ms,
            provenance: MODELED.into(),
        }
    }
}

impl Default for PowerLedger {
    fn default() -> Self {
        let map = |kv: &[(&str, f64)]| kv.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        PowerLedger::new(
            map(&[("puf", 5.0), ("ml_inference", 30.0), ("noise_processing", 15.0)]),
            map(&[("feature_extraction", 6.0), ("classification", 4.0)]),
        )
    }
}

/// A row of the static comparison table. `None` means not applicable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiteratureRow {
    pub method: String,
    pub accuracy: Option<String>,
    pub power_uw: Option<String>,
    pub latency: Option<String>,
    pub source: String,
}

pub fn literature_rows() -> Vec<LiteratureRow> {
    let row = |m: &str, a: Option<&str>, p: &str, l: Option<&str>, src: &str| LiteratureRow {
        method: m.into(),
        accuracy: a.map(Into::into),
        power_uw: Some(p.into()),
        latency: l.map(Into::into),
        source: src.into(),
    };
    vec![
        row("noise-driven platform", Some("92%"), "50", Some("1 ms (PUF)"), "published platform figures"),
        row("CNN systems", Some("90-95%"), "100-500", None, "published CNN ECG classifiers, static literature values"),
        row("AES-128", None, "20", Some("5 ms"), "published low-power AES cores, static literature values"),
    ]
}

/// Published figures reported next to ours for reference only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValues {
    pub accuracy_noise_augmented: f64,
    pub accuracy_filtered: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub af_true_positive_rate: f64,
    pub pvc_true_positive_rate: f64,
    pub af_false_negative_rate: f64,
    pub pvc_false_negative_rate: f64,
    pub puf_uniqueness_score: f64,
    pub puf_ber_upper: f64,
    pub puf_bit_stability_lower: f64,
    pub keygen_latency_ms_upper: f64,
    pub note: String,
}

impl Default for ReferenceValues {
    fn default() -> Self {
        ReferenceValues {
            accuracy_noise_augmented: 0.92,
            accuracy_filtered: 0.85,
            sensitivity: 0.90,
            specificity: 0.93,
            af_true_positive_rate: 0.95,
            pvc_true_positive_rate: 0.88,
            af_false_negative_rate: 0.05,
            pvc_false_negative_rate: 0.12,
            puf_uniqueness_score: 0.98,
            puf_ber_upper: 0.005,
            puf_bit_stability_lower: 0.99,
            keygen_latency_ms_upper: 1.0,
            note: "published figures from a different signal generator; not expected to match".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub schema_version: u32,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub ml: Option<MlResults>,
    pub puf: Option<PufResults>,
    pub power: PowerLedger,
    pub literature: Vec<LiteratureRow>,
    pub reference: ReferenceValues,
    /// Wall-clock timings live in this sibling file so the report itself
    /// stays byte-stable.
    pub timings_file: String,
}

impl RunReport {
    pub fn new(config: ExperimentConfig, ml: Option<MlResults>, puf: Option<PufResults>) -> Self {
        RunReport {
            schema: SCHEMA.into(),
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.into(),
            config,
            ml,
            puf,
            power: PowerLedger::default(),
            literature: literature_rows(),
            reference: ReferenceValues::default(),
            timings_file: TIMINGS_FILE.into(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        canonical_json(self)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

pub const TIMINGS_FILE: &str = "timings.json";

/// Wall-clock seconds per pipeline stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub seconds: BTreeMap<String, f64>,
}

impl Timings {
    pub fn record(&mut self, stage: &str, elapsed: std::time::Duration) {
        self.seconds.insert(stage.to_string(), elapsed.as_secs_f64());
    }
}

fn round(v: f64) -> f64 {
    let scale = 10f64.powi(FLOAT_DECIMALS);
    let r = (v * scale).round() / scale;
    if r.is_finite() {
        r
    } else {
        v
    }
}

fn normalize(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|f| serde_json::Number::from_f64(round(f))) {
                *n = x;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(normalize),
        Value::Object(o) => o.values_mut().for_each(normalize),
        _ => {}
    }
}

/// Pretty JSON with sorted object keys and floats rounded to
/// [`FLOAT_DECIMALS`] places, so equal inputs give equal bytes.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    normalize(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}
