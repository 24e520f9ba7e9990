//! Multilevel discrete wavelet transform with the Daubechies-4 (8-tap,
//! four vanishing moments) orthogonal filter pair.
//!
//! Coefficient layout for one analysis step on `x` of length `N` with
//! analysis low-pass `h` and high-pass `g` (length `L = 8`):
//!
//! ```text
//! a[i] = sum_k h[k] * e[2i - k]      d[i] = sum_k g[k] * e[2i - k]
//! ```
//!
//! where `e` is `x` extended by half-sample symmetric reflection
//! (`x[-1] = x[0]`, `x[N] = x[N-1]`). This is the even-phase decimation of the
//! full linear convolution, so each subband has `ceil((N + L - 1) / 2)`
//! coefficients. The cascade feeds `a` into the next level; after five
//! levels the set holds `d1..d5` (finest first) and `a5`.
//!
//! [`Boundary::Periodic`] instead wraps indices modulo `N` and keeps `N / 2`
//! coefficients per band. That variant is an orthogonal transform, so it
//! preserves energy exactly, but needs an even length at every level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Daubechies-4 analysis low-pass filter.
pub const DB4_DEC_LO: [f64; 8] = [
    -0.010597401785069032,
    0.032883011666885,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
];

/// Analysis high-pass, the quadrature mirror of [`DB4_DEC_LO`]:
/// `g[k] = (-1)^(k+1) h[L-1-k]`.
pub fn db4_dec_hi() -> [f64; 8] {
    let mut g = [0.0; 8];
    for (k, v) in g.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        *v = sign * DB4_DEC_LO[7 - k];
    }
    g
}

pub const DEFAULT_LEVELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Boundary {
    #[default]
    Symmetric,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandSet {
    /// `details[0]` is d1 (highest frequencies).
    pub details: Vec<Vec<f64>>,
    pub approximation: Vec<f64>,
    /// Input length seen by each level, `input_lengths[0]` is the signal length.
    pub input_lengths: Vec<usize>,
    pub boundary: Boundary,
    pub wavelet_order: usize,
}

impl SubbandSet {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Subbands in feature order: d1, d2, ..., dL, aL.
    pub fn bands(&self) -> impl Iterator<Item = &[f64]> {
        self.details.iter().map(Vec::as_slice).chain(std::iter::once(self.approximation.as_slice()))
    }

    pub fn energy(&self) -> f64 {
        self.bands().flatten().map(|c| c * c).sum()
    }
}

/// Half-sample symmetric reflection of index `j` into `0..n`.
fn reflect(j: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let r = j.rem_euclid(period) as usize;
    if r < n {
        r
    } else {
        2 * n - 1 - r
    }
}

pub fn coefficient_len(n: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Symmetric => (n + DB4_DEC_LO.len() - 1).div_ceil(2),
        Boundary::Periodic => n / 2,
    }
}

fn analysis_step(x: &[f64], boundary: Boundary, g: &[f64; 8]) -> (Vec<f64>, Vec<f64>) {
    let h = &DB4_DEC_LO;
    let n = x.len();
    let len = coefficient_len(n, boundary);
    let mut a = vec![0.0; len];
    let mut d = vec![0.0; len];
    for i in 0..len {
        let (mut sa, mut sd) = (0.0, 0.0);
        for k in 0..h.len() {
            let j = 2 * i as isize - k as isize;
            let idx = match boundary {
                Boundary::Symmetric => reflect(j, n),
                Boundary::Periodic => j.rem_euclid(n as isize) as usize,
            };
            sa += h[k] * x[idx];
            sd += g[k] * x[idx];
        }
        a[i] = sa;
        d[i] = sd;
    }
    (a, d)
}

fn synthesis_step(a: &[f64], d: &[f64], n: usize, boundary: Boundary, g: &[f64; 8]) -> Vec<f64> {
    let h = &DB4_DEC_LO;
    let taps = h.len();
    let mut x = vec![0.0; n];
    match boundary {
        Boundary::Symmetric => {
            // x[m] = sum over i with 0 <= 2i - m < L of a[i] h[2i-m] + d[i] g[2i-m]
            for (m, out) in x.iter_mut().enumerate() {
                let lo = m.div_ceil(2);
                let hi = ((m + taps - 1) / 2).min(a.len() - 1);
                *out = (lo..=hi).map(|i| a[i] * h[2 * i - m] + d[i] * g[2 * i - m]).sum();
            }
        }
        Boundary::Periodic => {
            // Transpose of the orthogonal analysis operator.
            for i in 0..a.len() {
                for k in 0..taps {
                    let idx = (2 * i as isize - k as isize).rem_euclid(n as isize) as usize;
                    x[idx] += h[k] * a[i] + g[k] * d[i];
                }
            }
        }
    }
    x
}

/// `levels`-deep db4 decomposition with symmetric extension.
pub fn dwt(x: &[f64], levels: usize) -> Result<SubbandSet> {
    dwt_with(x, levels, Boundary::Symmetric)
}

pub fn dwt_with(x: &[f64], levels: usize, boundary: Boundary) -> Result<SubbandSet> {
    if levels == 0 {
        return Err(Error::param("levels must be >= 1"));
    }
    if levels >= usize::BITS as usize || x.len() < (1usize << levels) {
        return Err(Error::InsufficientData(format!(
            "{}-level transform needs at least {} samples, got {}",
            levels,
            1usize.checked_shl(levels as u32).unwrap_or(usize::MAX),
            x.len()
        )));
    }
    let g = db4_dec_hi();
    let mut details = Vec::with_capacity(levels);
    let mut input_lengths = Vec::with_capacity(levels);
    let mut approx = x.to_vec();
    for level in 1..=levels {
        if boundary == Boundary::Periodic && approx.len() % 2 != 0 {
            return Err(Error::param(format!(
                "periodic boundary needs even length at level {level}, got {}",
                approx.len()
            )));
        }
        input_lengths.push(approx.len());
        let (a, d) = analysis_step(&approx, boundary, &g);
        details.push(d);
        approx = a;
    }
    Ok(SubbandSet { details, approximation: approx, input_lengths, boundary, wavelet_order: 4 })
}

/// Inverse cascade; exact inverse of [`dwt_with`] for either boundary.
pub fn idwt(set: &SubbandSet) -> Vec<f64> {
    let g = db4_dec_hi();
    let mut approx = set.approximation.clone();
    for level in (0..set.levels()).rev() {
        approx = synthesis_step(&approx, &set.details[level], set.input_lengths[level], set.boundary, &g);
    }
    approx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_are_orthonormal() {
        let h = DB4_DEC_LO;
        let g = db4_dec_hi();
        for shift in 0..4 {
            let hh: f64 = (0..8 - 2 * shift).map(|k| h[k] * h[k + 2 * shift]).sum();
            let gg: f64 = (0..8 - 2 * shift).map(|k| g[k] * g[k + 2 * shift]).sum();
            let expected = if shift == 0 { 1.0 } else { 0.0 };
            assert!((hh - expected).abs() < 1e-12, "hh shift {shift}: {hh}");
            assert!((gg - expected).abs() < 1e-12);
        }
        assert!((h.iter().sum::<f64>() - 2f64.sqrt()).abs() < 1e-12);
        // Four vanishing moments.
        for p in 0..4 {
            let m: f64 = g.iter().enumerate().map(|(k, v)| v * (k as f64).powi(p)).sum();
            assert!(m.abs() < 1e-9, "moment {p}: {m}");
        }
    }

    #[test]
    fn subband_lengths_follow_formula() {
        let set = dwt(&vec![1.0; 2500], 5).unwrap();
        let mut n = 2500;
        for (level, d) in set.details.iter().enumerate() {
            assert_eq!(set.input_lengths[level], n);
            assert_eq!(d.len(), (n + 7).div_ceil(2));
            n = d.len();
        }
        assert_eq!(set.approximation.len(), n);
    }

    #[test]
    fn too_short_input_rejected() {
        assert!(dwt(&[0.0; 31], 5).is_err());
        assert!(dwt(&[0.0; 32], 5).is_ok());
        assert!(dwt(&[0.0; 32], 0).is_err());
        assert!(dwt_with(&[0.0; 48], 5, Boundary::Periodic).is_err());
    }

    #[test]
    fn periodic_roundtrip_small() {
        let x: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64).collect();
        let set = dwt_with(&x, 5, Boundary::Periodic).unwrap();
        let y = idwt(&set);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
