//! Binary primitive narrow-sense BCH codes of length 2^m - 1 (m <= 7).
//!
//! Words are held in a `u128` with bit i the coefficient of x^i. The code is
//! cyclic with generator g(x) = lcm of the minimal polynomials of alpha^1..alpha^2t;
//! the parity-check syndrome of a word is its remainder modulo g(x).

use std::collections::BTreeSet;

use super::gf::GaloisField;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BchCode {
    field: GaloisField,
    n: usize,
    k: usize,
    t: usize,
    generator: u128,
}

fn mask(bits: usize) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

impl BchCode {
    /// Builds the code over GF(2^m) with designed correction capability `t`.
    pub fn new(m: u32, t: usize) -> Result<Self> {
        let field = GaloisField::new(m)?;
        let n = field.order();
        if t == 0 || 2 * t >= n {
            return Err(Error::config(format!("t = {t} out of range for n = {n}")));
        }
        let roots = Self::roots(n, t);

        // g(x) = prod (x - alpha^r) over the conjugacy classes of alpha^1..alpha^2t
        let mut g: Vec<u8> = vec![1];
        for &r in &roots {
            let root = field.alpha_pow(r as i64);
            let mut next = vec![0u8; g.len() + 1];
            for (i, &c) in g.iter().enumerate() {
                next[i + 1] ^= c;
                next[i] ^= field.mul(c, root);
            }
            g = next;
        }
        let generator = g.iter().enumerate().try_fold(0u128, |acc, (i, &c)| match c {
            0 => Ok(acc),
            1 => Ok(acc | 1u128 << i),
            _ => Err(Error::config("generator has non-binary coefficient")),
        })?;
        let k = n - roots.len();
        if k == 0 {
            return Err(Error::config(format!("t = {t} leaves no information bits for n = {n}")));
        }
        Ok(BchCode {
            field,
            n,
            k,
            t,
            generator,
        })
    }

    /// Exponents r of the roots alpha^r of the generator.
    fn roots(n: usize, t: usize) -> BTreeSet<usize> {
        let mut roots = BTreeSet::new();
        for j in 1..=2 * t {
            let mut r = j % n;
            while roots.insert(r) {
                r = (2 * r) % n;
            }
        }
        roots
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn generator(&self) -> u128 {
        self.generator
    }

    pub fn parity_bits(&self) -> usize {
        self.n - self.k
    }

    /// Length of the run of consecutive roots alpha^1, alpha^2, ... of g(x);
    /// the BCH bound gives minimum distance at least this plus one.
    pub fn consecutive_roots(&self) -> usize {
        let roots = Self::roots(self.n, self.t);
        (1..self.n).take_while(|r| roots.contains(r)).count()
    }

    /// Remainder of `word` modulo g(x); `n - k` bits.
    pub fn syndrome(&self, word: u128) -> u128 {
        let deg = self.parity_bits();
        let mut r = word & mask(self.n);
        for i in (deg..self.n).rev() {
            if r >> i & 1 == 1 {
                r ^= self.generator << (i - deg);
            }
        }
        r
    }

    /// Systematic encoding: message in the high `k` positions, parity below.
    pub fn encode(&self, message: u128) -> u128 {
        let shifted = (message & mask(self.k)) << self.parity_bits();
        shifted ^ self.syndrome(shifted)
    }

    /// Finds the error pattern of weight at most `t` whose syndrome is `syndrome`.
    ///
    /// Returns `None` when no such pattern exists (the decoder's locator
    /// polynomial does not split into distinct roots inside the code length).
    pub fn decode_syndrome(&self, syndrome: u128) -> Option<u128> {
        if syndrome == 0 {
            return Some(0);
        }
        let f = &self.field;
        let power_sums: Vec<u8> = (1..=2 * self.t).map(|j| f.eval_binary(syndrome, j)).collect();
        let locator = self.berlekamp_massey(&power_sums);
        let degree = locator.len() - 1;
        if degree == 0 || degree > self.t {
            return None;
        }

        // Chien search: position i is in error iff locator(alpha^-i) = 0
        let mut pattern = 0u128;
        let mut found = 0;
        for i in 0..self.n {
            if f.eval(&locator, f.alpha_pow(-(i as i64))) == 0 {
                pattern |= 1u128 << i;
                found += 1;
            }
        }
        if found != degree || self.syndrome(pattern) != syndrome {
            return None;
        }
        Some(pattern)
    }

    fn berlekamp_massey(&self, s: &[u8]) -> Vec<u8> {
        let f = &self.field;
        let mut c: Vec<u8> = vec![1];
        let mut b: Vec<u8> = vec![1];
        let mut l = 0usize;
        let mut shift = 1usize;
        let mut last_discrepancy = 1u8;
        for step in 0..s.len() {
            let mut d = s[step];
            for i in 1..=l.min(c.len() - 1) {
                d ^= f.mul(c[i], s[step - i]);
            }
            if d == 0 {
                shift += 1;
                continue;
            }
            let coef = f.div(d, last_discrepancy);
            let mut updated = c.clone();
            if updated.len() < b.len() + shift {
                updated.resize(b.len() + shift, 0);
            }
            for (i, &bi) in b.iter().enumerate() {
                updated[i + shift] ^= f.mul(coef, bi);
            }
            if 2 * l <= step {
                l = step + 1 - l;
                b = c;
                last_discrepancy = d;
                shift = 1;
            } else {
                shift += 1;
            }
            c = updated;
        }
        while c.len() > 1 && *c.last().unwrap() == 0 {
            c.pop();
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_code_parameters() {
        let c = BchCode::new(4, 2).unwrap();
        assert_eq!((c.n(), c.k()), (15, 7));
        // g(x) = x^8 + x^7 + x^6 + x^4 + 1
        assert_eq!(c.generator(), 0b1_1101_0001);
        let c = BchCode::new(5, 3).unwrap();
        assert_eq!((c.n(), c.k()), (31, 16));
    }

    #[test]
    fn codewords_have_zero_syndrome() {
        let c = BchCode::new(7, 13).unwrap();
        for msg in [0u128, 1, 0xdead_beef_cafe, (1u128 << 50) - 1] {
            let cw = c.encode(msg);
            assert_eq!(c.syndrome(cw), 0);
            assert_eq!(cw >> c.parity_bits(), msg & ((1u128 << c.k()) - 1));
        }
    }

    #[test]
    fn decodes_every_single_and_double_error() {
        let c = BchCode::new(4, 2).unwrap();
        let cw = c.encode(0b101_1001);
        for i in 0..15 {
            for j in i..15 {
                let e = (1u128 << i) | (1u128 << j);
                let received = cw ^ e;
                let pattern = c.decode_syndrome(c.syndrome(received)).unwrap();
                assert_eq!(received ^ pattern, cw, "errors at {i},{j}");
            }
        }
    }

    #[test]
    fn rejects_t_out_of_range() {
        assert!(BchCode::new(7, 0).is_err());
        assert!(BchCode::new(7, 64).is_err());
    }
}
