//! Binary BCH(127, 64) code with designed distance 21 (t = 10).
//!
//! A word is a `u128` whose bit `j` is the coefficient of `x^j`. Codewords
//! are systematic: the message occupies bits 63..127 and the parity
//! `m(x) x^63 mod g(x)` bits 0..63.

use std::sync::OnceLock;

use super::gf::{self, ORDER};
use crate::error::{Error, Result};

pub const N: usize = 127;
pub const K: usize = 64;
pub const T: usize = 10;
pub const PARITY_BITS: usize = N - K;
pub const WORD_MASK: u128 = (1u128 << N) - 1;

/// Product over a cyclotomic coset of (x - alpha^j), as a GF(2) bitmask.
fn minimal_polynomial(coset: &[usize]) -> u128 {
    // Coefficients in GF(128), lowest degree first.
    let mut poly = vec![1u8];
    for &j in coset {
        let root = gf::alpha_pow(j as i64);
        let mut next = vec![0u8; poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i + 1] ^= c;
            next[i] ^= gf::mul(c, root);
        }
        poly = next;
    }
    poly.iter().enumerate().fold(0u128, |acc, (i, &c)| {
        assert!(c <= 1, "minimal polynomial must have binary coefficients");
        acc | (u128::from(c) << i)
    })
}

fn cyclotomic_coset(s: usize) -> Vec<usize> {
    let mut coset = vec![s];
    let mut j = s * 2 % ORDER;
    while j != s {
        coset.push(j);
        j = j * 2 % ORDER;
    }
    coset
}

fn clmul(a: u128, b: u128) -> u128 {
    let mut out = 0u128;
    for i in 0..128 {
        if b >> i & 1 == 1 {
            out ^= a << i;
        }
    }
    out
}

/// The BCH code and its generator polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BchCode {
    /// Bit `j` is the coefficient of `x^j`; degree 63.
    pub generator: u128,
}

impl BchCode {
    /// The shared instance. The generator is the least common multiple of
    /// the minimal polynomials of alpha^1 .. alpha^20.
    pub fn get() -> &'static BchCode {
        static CODE: OnceLock<BchCode> = OnceLock::new();
        CODE.get_or_init(|| {
            let mut covered = [false; ORDER];
            let mut generator = 1u128;
            for s in 1..=2 * T {
                if covered[s] {
                    continue;
                }
                let coset = cyclotomic_coset(s);
                for &j in &coset {
                    covered[j] = true;
                }
                generator = clmul(generator, minimal_polynomial(&coset));
            }
            BchCode { generator }
        })
    }

    pub fn generator_degree(&self) -> usize {
        127 - self.generator.leading_zeros() as usize
    }

    /// Remainder of `word` divided by the generator.
    fn remainder(&self, mut word: u128) -> u128 {
        for bit in (PARITY_BITS..128).rev() {
            if word >> bit & 1 == 1 {
                word ^= self.generator << (bit - PARITY_BITS);
            }
        }
        word
    }

    pub fn encode(&self, message: u64) -> u128 {
        let shifted = u128::from(message) << PARITY_BITS;
        shifted | self.remainder(shifted)
    }

    /// Bit-vector form: `message.len()` must be 64, first bit most significant.
    pub fn encode_bits(&self, message: &[bool]) -> Result<u128> {
        if message.len() != K {
            return Err(Error::Dimension { expected: K, actual: message.len() });
        }
        Ok(self.encode(message.iter().fold(0u64, |acc, &b| acc << 1 | u64::from(b))))
    }

    pub fn syndromes(&self, word: u128) -> [u8; 2 * T] {
        let mut s = [0u8; 2 * T];
        let mut w = word & WORD_MASK;
        while w != 0 {
            let i = w.trailing_zeros() as i64;
            w &= w - 1;
            for (j, sj) in s.iter_mut().enumerate() {
                *sj ^= gf::alpha_pow(i * (j as i64 + 1));
            }
        }
        s
    }

    /// Corrects up to `T` errors. Returns the message and the number of
    /// flipped bits.
    pub fn decode(&self, word: u128) -> Result<(u64, usize)> {
        if word & !WORD_MASK != 0 {
            return Err(Error::param("word wider than 127 bits"));
        }
        let s = self.syndromes(word);
        if s.iter().all(|&v| v == 0) {
            return Ok(((word >> PARITY_BITS) as u64, 0));
        }
        let locator = berlekamp_massey(&s);
        let degree = locator.len() - 1;
        if degree > T {
            return Err(Error::DecodeFailure { t: T });
        }
        // Chien search: error at position i iff locator(alpha^-i) = 0.
        let mut errors = 0u128;
        let mut found = 0;
        for i in 0..N {
            let x = gf::alpha_pow(-(i as i64));
            let mut acc = 0u8;
            for &c in locator.iter().rev() {
                acc = gf::mul(acc, x) ^ c;
            }
            if acc == 0 {
                errors |= 1u128 << i;
                found += 1;
            }
        }
        if found != degree {
            return Err(Error::DecodeFailure { t: T });
        }
        let corrected = word ^ errors;
        if self.remainder(corrected) != 0 {
            return Err(Error::DecodeFailure { t: T });
        }
        Ok(((corrected >> PARITY_BITS) as u64, found))
    }
}

/// Error-locator polynomial (lowest degree first, constant term 1) from the
/// syndromes S_1 .. S_2t.
fn berlekamp_massey(s: &[u8]) -> Vec<u8> {
    let mut c = vec![1u8];
    let mut b = vec![1u8];
    let mut l = 0usize;
    let mut m = 1usize;
    let mut last_discrepancy = 1u8;
    for n in 0..s.len() {
        let mut d = s[n];
        for i in 1..=l.min(c.len() - 1) {
            d ^= gf::mul(c[i], s[n - i]);
        }
        if d == 0 {
            m += 1;
            continue;
        }
        let coef = gf::mul(d, gf::inv(last_discrepancy));
        let mut next = c.clone();
        if next.len() < b.len() + m {
            next.resize(b.len() + m, 0);
        }
        for (i, &bi) in b.iter().enumerate() {
            next[i + m] ^= gf::mul(coef, bi);
        }
        if 2 * l <= n {
            l = n + 1 - l;
            b = c;
            last_discrepancy = d;
            m = 1;
        } else {
            m += 1;
        }
        c = next;
    }
    c.truncate(l + 1);
    while c.len() > 1 && *c.last().unwrap() == 0 {
        c.pop();
    }
    c
}

#[cfg(test)]
mod tests {
    use rand::seq::index::sample;
    use rand::Rng;

    use super::*;
    use crate::rng::RngSeed;

    fn code() -> &'static BchCode {
        BchCode::get()
    }

    #[test]
    fn generator_has_degree_63_and_divides_x127_minus_1() {
        assert_eq!(code().generator_degree(), 63);
        assert_eq!(code().generator & 1, 1);
        // x^127 + 1 mod g == 0, computed by long division.
        let mut r = 1u128;
        for _ in 0..127 {
            r <<= 1;
            if r >> 63 & 1 == 1 {
                r ^= code().generator;
            }
        }
        assert_eq!(r, 1);
    }

    #[test]
    fn zero_message_and_linearity() {
        assert_eq!(code().encode(0), 0);
        let mut rng = RngSeed(1).rng();
        for _ in 0..200 {
            let (a, b): (u64, u64) = (rng.random(), rng.random());
            assert_eq!(code().encode(a) ^ code().encode(b), code().encode(a ^ b));
            assert_eq!((code().encode(a) >> PARITY_BITS) as u64, a);
        }
    }

    #[test]
    fn codewords_have_zero_syndromes() {
        let mut rng = RngSeed(2).rng();
        for _ in 0..100 {
            let m: u64 = rng.random();
            assert_eq!(code().syndromes(code().encode(m)), [0; 2 * T]);
            assert_eq!(code().decode(code().encode(m)).unwrap(), (m, 0));
        }
    }

    #[test]
    fn single_flip_of_zero_word() {
        for i in 0..N {
            assert_eq!(code().decode(1u128 << i).unwrap(), (0, 1));
        }
    }

    #[test]
    fn corrects_up_to_t_errors() {
        let mut rng = RngSeed(3).rng();
        for trial in 0..500 {
            let m: u64 = rng.random();
            let weight = trial % (T + 1);
            let e = sample(&mut rng, N, weight).iter().fold(0u128, |acc, i| acc | 1u128 << i);
            assert_eq!(code().decode(code().encode(m) ^ e).unwrap(), (m, weight));
        }
    }

    #[test]
    fn heavy_corruption_never_returns_a_non_codeword() {
        let mut rng = RngSeed(4).rng();
        let mut failures = 0;
        for _ in 0..200 {
            let m: u64 = rng.random();
            let e = sample(&mut rng, N, 30).iter().fold(0u128, |acc, i| acc | 1u128 << i);
            match code().decode(code().encode(m) ^ e) {
                Ok((decoded, n)) => assert!(n <= T && decoded != m),
                Err(Error::DecodeFailure { t: T }) => failures += 1,
                Err(other) => panic!("{other}"),
            }
        }
        assert!(failures > 150);
    }

    #[test]
    fn bit_vector_entry_point() {
        let bits: Vec<bool> = (0..64).map(|i| i % 3 == 0).collect();
        let m = bits.iter().fold(0u64, |acc, &b| acc << 1 | u64::from(b));
        assert_eq!(code().encode_bits(&bits).unwrap(), code().encode(m));
        assert!(code().encode_bits(&bits[..63]).is_err());
    }
}
