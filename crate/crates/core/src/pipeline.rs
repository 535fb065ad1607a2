//! Channel profile pre-processing and one-bit-per-sample quantization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::trace::{ChannelProfile, Party, DEFAULT_BLOCK_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantizer {
    /// Bit is 1 when the sample lies above the block mean.
    Threshold,
    /// Bit is 1 when the sample exceeds its predecessor (cyclically).
    Difference,
}

impl Quantizer {
    pub const ALL: [Quantizer; 2] = [Quantizer::Threshold, Quantizer::Difference];

    pub fn label(self) -> &'static str {
        match self {
            Quantizer::Threshold => "threshold",
            Quantizer::Difference => "difference",
        }
    }

    pub fn quantize(self, profile: &ChannelProfile) -> PreliminaryKey {
        match self {
            Quantizer::Threshold => quantize_threshold(profile),
            Quantizer::Difference => quantize_difference(profile),
        }
    }
}

impl fmt::Display for Quantizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Quantizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "threshold" => Ok(Quantizer::Threshold),
            "difference" => Ok(Quantizer::Difference),
            other => Err(Error::config(format!("unknown quantizer {other:?}"))),
        }
    }
}

/// Block size and bits per sample; the preliminary key length is their product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerConfig {
    pub method: Quantizer,
    pub bits_per_sample: usize,
    pub block_size: usize,
}

impl QuantizerConfig {
    pub fn new(method: Quantizer) -> Self {
        QuantizerConfig {
            method,
            bits_per_sample: 1,
            block_size: DEFAULT_BLOCK_SIZE,
        }
    }

    pub fn key_len(&self) -> usize {
        self.block_size * self.bits_per_sample
    }

    pub fn validate(&self) -> Result<()> {
        if self.bits_per_sample != 1 {
            return Err(Error::config("only one bit per sample is supported"));
        }
        if self.block_size < 2 {
            return Err(Error::config("block size must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreliminaryKey {
    pub bits: Bits,
    pub party: Party,
    pub block_index: usize,
}

impl PreliminaryKey {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Removes the block mean and scales to unit population variance.
///
/// A constant block has no variance to scale and maps to all zeros.
pub fn normalize(profile: &ChannelProfile) -> ChannelProfile {
    let v = &profile.values;
    if v.iter().all(|&x| x == v[0]) {
        return profile.with_values(vec![0.0; v.len()]);
    }
    let m = mean(v);
    let centered: Vec<f64> = v.iter().map(|x| x - m).collect();
    let std = (centered.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    profile.with_values(centered.into_iter().map(|x| x / std).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least-squares polynomial fit of the block against its sample index.
///
/// The fit is built from an orthonormal polynomial basis on the sample grid
/// (Lanczos recurrence with full re-orthogonalization), which stays well
/// conditioned up to `degree = len - 1` where the fit interpolates exactly.
pub fn enhance(profile: &ChannelProfile, degree: usize) -> Result<ChannelProfile> {
    let m = profile.len();
    if degree >= m {
        return Err(Error::config(format!(
            "polynomial degree {degree} must be below the block length {m}"
        )));
    }
    let x: Vec<f64> = if m == 1 {
        vec![0.0]
    } else {
        (0..m).map(|i| 2.0 * i as f64 / (m - 1) as f64 - 1.0).collect()
    };

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(degree + 1);
    let mut q = vec![1.0 / (m as f64).sqrt(); m];
    let mut fit = vec![0.0; m];
    let mut residual = profile.values.clone();
    for j in 0..=degree {
        let c = dot(&residual, &q);
        for i in 0..m {
            fit[i] += c * q[i];
            residual[i] -= c * q[i];
        }
        if j == degree {
            break;
        }
        let mut next: Vec<f64> = x.iter().zip(&q).map(|(xi, qi)| xi * qi).collect();
        basis.push(q);
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&next, b);
                next.iter_mut().zip(b).for_each(|(n, bi)| *n -= p * bi);
            }
        }
        let norm = dot(&next, &next).sqrt();
        q = next.into_iter().map(|v| v / norm).collect();
    }
    Ok(profile.with_values(fit))
}

/// Normalization followed by the optional polynomial enhancement.
pub fn preprocess(profile: &ChannelProfile, enhance_degree: Option<usize>) -> Result<ChannelProfile> {
    let normalized = normalize(profile);
    match enhance_degree {
        Some(d) => enhance(&normalized, d),
        None => Ok(normalized),
    }
}

/// `bit[k] = value[k] > block mean`; ties quantize to 0.
pub fn quantize_threshold(profile: &ChannelProfile) -> PreliminaryKey {
    let theta = if profile.is_empty() { 0.0 } else { mean(&profile.values) };
    PreliminaryKey {
        bits: profile.values.iter().map(|&v| v > theta).collect(),
        party: profile.party,
        block_index: profile.block_index,
    }
}

/// `bit[k] = value[k] > value[k-1]`, with `bit[0]` comparing against the last
/// sample so the key keeps the block length; ties quantize to 0.
pub fn quantize_difference(profile: &ChannelProfile) -> PreliminaryKey {
    let v = &profile.values;
    let m = v.len();
    PreliminaryKey {
        bits: (0..m).map(|k| v[k] > v[(k + m - 1) % m]).collect(),
        party: profile.party,
        block_index: profile.block_index,
    }
}

/// Fraction of disagreeing bits.
pub fn bdr(a: &PreliminaryKey, b: &PreliminaryKey) -> Result<f64> {
    bdr_bits(&a.bits, &b.bits)
}

pub fn bdr_bits(a: &Bits, b: &Bits) -> Result<f64> {
    let d = a.hamming(b)?;
    if a.is_empty() {
        return Err(Error::EmptyKey);
    }
    Ok(d as f64 / a.len() as f64)
}
