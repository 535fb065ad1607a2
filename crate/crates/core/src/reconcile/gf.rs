//! Arithmetic in GF(2^m) for 3 <= m <= 7 via log/antilog tables.

use crate::error::{Error, Result};

/// Primitive polynomials, indexed by m (bit i = coefficient of x^i).
const PRIMITIVE_POLYS: [(u32, u32); 5] = [
    (3, 0b1011),      // x^3 + x + 1
    (4, 0b1_0011),    // x^4 + x + 1
    (5, 0b10_0101),   // x^5 + x^2 + 1
    (6, 0b100_0011),  // x^6 + x + 1
    (7, 0b1000_1001), // x^7 + x^3 + 1
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaloisField {
    m: u32,
    /// Multiplicative order, 2^m - 1.
    order: usize,
    exp: Vec<u8>,
    log: Vec<usize>,
}

impl GaloisField {
    pub fn new(m: u32) -> Result<Self> {
        let poly = PRIMITIVE_POLYS
            .iter()
            .find(|(deg, _)| *deg == m)
            .map(|(_, p)| *p)
            .ok_or_else(|| Error::config(format!("unsupported field degree {m}")))?;
        let order = (1usize << m) - 1;
        let mut exp = vec![0u8; 2 * order];
        let mut log = vec![0usize; order + 1];
        let mut x: u32 = 1;
        for i in 0..order {
            exp[i] = x as u8;
            exp[i + order] = x as u8;
            log[x as usize] = i;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= poly;
            }
        }
        debug_assert_eq!(x, 1, "polynomial for m = {m} is not primitive");
        Ok(GaloisField { m, order, exp, log })
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// alpha^i for any integer exponent.
    pub fn alpha_pow(&self, i: i64) -> u8 {
        self.exp[i.rem_euclid(self.order as i64) as usize]
    }

    pub fn mul(&self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] + self.log[b as usize]]
    }

    pub fn inv(&self, a: u8) -> u8 {
        assert!(a != 0, "zero has no inverse");
        self.exp[(self.order - self.log[a as usize]) % self.order]
    }

    pub fn div(&self, a: u8, b: u8) -> u8 {
        self.mul(a, self.inv(b))
    }

    /// Evaluates a binary polynomial (bit i = coefficient of x^i) at alpha^j.
    pub fn eval_binary(&self, poly: u128, j: usize) -> u8 {
        let mut acc = 0u8;
        let mut bits = poly;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            acc ^= self.exp[(i * j) % self.order];
            bits &= bits - 1;
        }
        acc
    }

    /// Evaluates a polynomial with field coefficients (index i = coefficient of x^i).
    pub fn eval(&self, poly: &[u8], x: u8) -> u8 {
        poly.iter().rev().fold(0u8, |acc, &c| self.mul(acc, x) ^ c)
    }
}
