//! GF(2^7) arithmetic with primitive polynomial x^7 + x^3 + 1.

use std::sync::OnceLock;

pub const FIELD_BITS: u32 = 7;
pub const ORDER: usize = 127;
pub const PRIMITIVE_POLY: u16 = 0b1000_1001;

pub struct Tables {
    /// `exp[i] = alpha^i`, doubled so products need no reduction.
    pub exp: [u8; 2 * ORDER],
    /// `log[alpha^i] = i`; `log[0]` unused.
    pub log: [u8; ORDER + 1],
}

pub fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut exp = [0u8; 2 * ORDER];
        let mut log = [0u8; ORDER + 1];
        let mut x: u16 = 1;
        for i in 0..ORDER {
            exp[i] = x as u8;
            exp[i + ORDER] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & (1 << FIELD_BITS) != 0 {
                x ^= PRIMITIVE_POLY;
            }
        }
        Tables { exp, log }
    })
}

#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    let t = tables();
    t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize]
}

#[inline]
pub fn inv(a: u8) -> u8 {
    assert_ne!(a, 0, "zero has no inverse");
    let t = tables();
    t.exp[(ORDER - t.log[a as usize] as usize) % ORDER]
}

/// alpha^e for any integer exponent.
#[inline]
pub fn alpha_pow(e: i64) -> u8 {
    tables().exp[e.rem_euclid(ORDER as i64) as usize]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Carry-less multiply then reduce, no tables.
    fn slow_mul(a: u8, b: u8) -> u8 {
        let mut acc: u16 = 0;
        for i in 0..7 {
            if b >> i & 1 == 1 {
                acc ^= (a as u16) << i;
            }
        }
        for bit in (7..14).rev() {
            if acc >> bit & 1 == 1 {
                acc ^= PRIMITIVE_POLY << (bit - 7);
            }
        }
        acc as u8
    }

    #[test]
    fn alpha_generates_the_whole_group() {
        let mut seen = [false; 128];
        for i in 0..ORDER {
            seen[alpha_pow(i as i64) as usize] = true;
        }
        assert!(!seen[0] && seen[1..].iter().all(|&s| s));
    }

    #[test]
    fn table_mul_matches_shift_and_reduce() {
        for a in 0..128u8 {
            for b in 0..128u8 {
                assert_eq!(mul(a, b), slow_mul(a, b));
            }
            if a != 0 {
                assert_eq!(mul(a, inv(a)), 1);
            }
        }
    }
}
