//! Fixed-length bit strings used for preliminary, reconciled and final keys.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An owned string of bits, index 0 first.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn new(bits: Vec<bool>) -> Self {
        Bits(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Bits(vec![false; len])
    }

    /// Parses a string of `'0'` / `'1'` characters.
    pub fn from_ascii(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::config(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Bits)
    }

    /// Low `len` bits of `word`, bit `i` of the string taken from bit `i` of the word.
    pub fn from_u128(word: u128, len: usize) -> Self {
        assert!(len <= 128);
        Bits((0..len).map(|i| word >> i & 1 == 1).collect())
    }

    /// Inverse of [`Bits::from_u128`]; only valid for strings of at most 128 bits.
    pub fn to_u128(&self) -> u128 {
        assert!(self.0.len() <= 128);
        self.0
            .iter()
            .enumerate()
            .fold(0u128, |acc, (i, &b)| acc | (b as u128) << i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// First `len` bits.
    pub fn prefix(&self, len: usize) -> Bits {
        Bits(self.0[..len.min(self.0.len())].to_vec())
    }

    pub fn extend_from(&mut self, other: &Bits) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn hamming(&self, other: &Bits) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count())
    }

    /// Packs the bits most-significant-first into bytes, zero padding the last byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (b as u8) << (7 - i))
            })
            .collect()
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() * 8 < len {
            return Err(Error::LengthMismatch {
                expected: len.div_ceil(8),
                actual: bytes.len(),
            });
        }
        Ok(Bits(
            (0..len).map(|i| bytes[i / 8] >> (7 - i % 8) & 1 == 1).collect(),
        ))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str, len: usize) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::config(format!("bad hex {s:?}: {e}")))?;
        Self::from_bytes(&bytes, len)
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Bits(iter.into_iter().collect())
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl From<Bits> for String {
    fn from(b: Bits) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for Bits {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Bits::from_ascii(&s)
    }
}
