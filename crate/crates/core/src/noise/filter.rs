//! Butterworth IIR filters as cascades of second-order sections, with
//! zero-phase forward-backward application.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One second-order section, normalised so that `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn from_raw(b: [f64; 3], a: [f64; 3]) -> Self {
        Biquad { b: [b[0] / a[0], b[1] / a[0], b[2] / a[0]], a: [a[1] / a[0], a[2] / a[0]] }
    }

    /// DC gain.
    fn gain_at_dc(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Steady-state transposed direct-form II state for a constant input `u`.
    fn steady_state(&self, u: f64) -> [f64; 2] {
        let y = self.gain_at_dc() * u;
        let z2 = self.b[2] * u - self.a[1] * y;
        let z1 = self.b[1] * u - self.a[0] * y + z2;
        [z1, z2]
    }

    fn run(&self, x: &mut [f64], mut z: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        for v in x.iter_mut() {
            let u = *v;
            let y = b0 * u + z[0];
            z[0] = b1 * u - a1 * y + z[1];
            z[1] = b2 * u - a2 * y;
            *v = y;
        }
    }

    /// Complex response at normalised angular frequency `w` (rad/sample).
    fn response(&self, w: f64) -> (f64, f64) {
        // H = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2), z = e^{jw}
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let nr = self.b[0] + self.b[1] * c1 + self.b[2] * c2;
        let ni = self.b[1] * s1 + self.b[2] * s2;
        let dr = 1.0 + self.a[0] * c1 + self.a[1] * c2;
        let di = self.a[0] * s1 + self.a[1] * s2;
        let den = dr * dr + di * di;
        ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    LowPass,
    HighPass,
}

/// A cascade of biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

fn butterworth(kind: Kind, order: usize, cutoff_hz: f64, fs: f64) -> Result<Vec<Biquad>> {
    if order == 0 || order % 2 != 0 {
        return Err(Error::param(format!("filter order must be even and > 0, got {order}")));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return Err(Error::param(format!("cutoff {cutoff_hz} Hz outside (0, {})", fs / 2.0)));
    }
    // Bilinear transform prewarped at the cutoff; section Qs place the poles
    // of the analog Butterworth prototype.
    let w0 = 2.0 * PI * cutoff_hz / fs;
    let (sin, cos) = w0.sin_cos();
    Ok((0..order / 2)
        .map(|k| {
            let q = 1.0 / (2.0 * (PI * (2 * k + 1) as f64 / (2 * order) as f64).cos());
            let alpha = sin / (2.0 * q);
            let a = [1.0 + alpha, -2.0 * cos, 1.0 - alpha];
            let b = match kind {
                Kind::LowPass => [(1.0 - cos) / 2.0, 1.0 - cos, (1.0 - cos) / 2.0],
                Kind::HighPass => [(1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0],
            };
            Biquad::from_raw(b, a)
        })
        .collect())
}

impl SosFilter {
    pub fn lowpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<Self> {
        Ok(SosFilter { sections: butterworth(Kind::LowPass, order, cutoff_hz, fs)? })
    }

    pub fn highpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<Self> {
        Ok(SosFilter { sections: butterworth(Kind::HighPass, order, cutoff_hz, fs)? })
    }

    /// Band-pass built from an `order` high-pass edge and an `order` low-pass edge.
    pub fn bandpass(order: usize, low_hz: f64, high_hz: f64, fs: f64) -> Result<Self> {
        if low_hz >= high_hz {
            return Err(Error::param(format!("band edges reversed: {low_hz} >= {high_hz}")));
        }
        let mut sections = butterworth(Kind::HighPass, order, low_hz, fs)?;
        sections.extend(butterworth(Kind::LowPass, order, high_hz, fs)?);
        Ok(SosFilter { sections })
    }

    /// Causal single pass, starting from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            s.run(&mut y, [0.0, 0.0]);
        }
        y
    }

    /// Single pass starting from the steady state for a constant input equal
    /// to the first sample.
    fn filter_steady(&self, y: &mut [f64]) {
        let mut u = y.first().copied().unwrap_or(0.0);
        for s in &self.sections {
            let z = s.steady_state(u);
            u *= s.gain_at_dc();
            s.run(y, z);
        }
    }

    /// Edge padding used by [`SosFilter::filtfilt`].
    pub fn pad_len(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }

    /// Zero-phase forward-backward filtering with odd-reflection padding and
    /// steady-state initial conditions. The magnitude response is squared.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        if n < 2 {
            return Err(Error::InsufficientData(format!("filtfilt needs at least 2 samples, got {n}")));
        }
        let pad = self.pad_len().min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        self.filter_steady(&mut ext);
        ext.reverse();
        self.filter_steady(&mut ext);
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }

    /// |H(f)| of one causal pass.
    pub fn magnitude(&self, freq_hz: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / fs;
        self.sections
            .iter()
            .map(|s| {
                let (re, im) = s.response(w);
                (re * re + im * im).sqrt()
            })
            .product()
    }
}
