//! Randomness testing of reconciled keys and privacy amplification by hashing.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::function::erf::erfc;

use crate::bits::Bits;
use crate::error::{Error, Result};

/// Length of every emitted session key.
pub const FINAL_KEY_BITS: usize = 128;

/// Default significance level of the randomness tests.
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Below this many bits the randomness tests are not statistically meaningful.
pub const MIN_TEST_BITS: usize = 100;

/// Domain label prefixed to the hash input.
pub const CONTEXT_LABEL: &[u8] = b"physec-lorawan-v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomnessReport {
    pub monobit_p: f64,
    pub runs_p: f64,
    pub passed: bool,
    /// Set when the key is shorter than [`MIN_TEST_BITS`].
    pub advisory: bool,
}

/// Frequency (monobit) test p-value: `erfc(|S| / sqrt(2n))`, `S = sum(2b - 1)`.
pub fn monobit_p(key: &Bits) -> f64 {
    let n = key.len() as f64;
    let s = 2.0 * key.count_ones() as f64 - n;
    erfc(s.abs() / (2.0 * n).sqrt())
}

/// Runs test p-value. Fails outright (p = 0) when the ones proportion is too far
/// from one half for the runs statistic to be meaningful.
pub fn runs_p(key: &Bits) -> f64 {
    let n = key.len() as f64;
    let pi = key.count_ones() as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return 0.0;
    }
    let transitions = key.as_slice().windows(2).filter(|w| w[0] != w[1]).count();
    let runs = 1.0 + transitions as f64;
    let spread = pi * (1.0 - pi);
    erfc((runs - 2.0 * n * spread).abs() / (2.0 * (2.0 * n).sqrt() * spread))
}

pub fn test_randomness(key: &Bits, alpha: f64) -> Result<RandomnessReport> {
    if key.is_empty() {
        return Err(Error::EmptyKey);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha {alpha} outside (0, 1)")));
    }
    let monobit_p = monobit_p(key);
    let runs_p = if key.len() > 1 { runs_p(key) } else { 0.0 };
    Ok(RandomnessReport {
        monobit_p,
        runs_p,
        passed: monobit_p >= alpha && runs_p >= alpha,
        advisory: key.len() < MIN_TEST_BITS,
    })
}

/// A block both parties hold after successful reconciliation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconciledBlock {
    pub block_index: usize,
    pub bits: Bits,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalKey {
    pub bits: Bits,
    pub source_blocks: Vec<usize>,
    /// Bits disclosed during reconciliation of the source blocks.
    pub leakage_total: usize,
}

impl FinalKey {
    pub fn to_hex(&self) -> String {
        self.bits.to_hex()
    }
}

/// `"physec-lorawan-v1"` followed by each source block index as a big-endian u32.
pub fn key_context(block_indices: &[usize]) -> Vec<u8> {
    let mut ctx = CONTEXT_LABEL.to_vec();
    for &i in block_indices {
        ctx.extend_from_slice(&(i as u32).to_be_bytes());
    }
    ctx
}

fn hash_blocks(blocks: &[ReconciledBlock], context: &[u8]) -> Bits {
    let mut material = Bits::default();
    for b in blocks {
        material.extend_from(&b.bits);
    }
    let mut h = Sha256::new();
    h.update(context);
    h.update(material.to_bytes());
    let digest = h.finalize();
    Bits::from_bytes(&digest, FINAL_KEY_BITS).expect("digest is 256 bits")
}

/// Compresses reconciled blocks into a 128-bit key with truncated SHA-256 over
/// `context || blocks`. Refuses when the disclosed bits leave less than 128 bits.
pub fn amplify(blocks: &[ReconciledBlock], transcript_leakage: usize, context: &[u8]) -> Result<FinalKey> {
    let input_bits: usize = blocks.iter().map(|b| b.bits.len()).sum();
    let residual = input_bits as i64 - transcript_leakage as i64;
    if residual < FINAL_KEY_BITS as i64 {
        return Err(Error::InsufficientEntropy {
            need: FINAL_KEY_BITS,
            have: residual,
        });
    }
    Ok(FinalKey {
        bits: hash_blocks(blocks, context),
        source_blocks: blocks.iter().map(|b| b.block_index).collect(),
        leakage_total: transcript_leakage,
    })
}

/// Whether the residual-entropy gate applies when turning blocks into keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplifyPolicy {
    /// Accumulate blocks until `bits - leakage >= 128`.
    #[default]
    EntropyGated,
    /// Hash every accepted block into its own key, ignoring leakage.
    PaperMode,
}

/// Collects reconciled blocks and emits a key whenever the policy allows.
#[derive(Debug, Clone, Default)]
pub struct KeyAccumulator {
    policy: AmplifyPolicy,
    pending: Vec<ReconciledBlock>,
    pending_leakage: usize,
}

impl KeyAccumulator {
    pub fn new(policy: AmplifyPolicy) -> Self {
        KeyAccumulator {
            policy,
            pending: Vec::new(),
            pending_leakage: 0,
        }
    }

    /// Residual bits currently held, `bits - leakage`.
    pub fn residual_bits(&self) -> i64 {
        let bits: usize = self.pending.iter().map(|b| b.bits.len()).sum();
        bits as i64 - self.pending_leakage as i64
    }

    pub fn pending_blocks(&self) -> usize {
        self.pending.len()
    }

    pub fn push(&mut self, block: ReconciledBlock, leakage: usize) -> Option<FinalKey> {
        self.pending.push(block);
        self.pending_leakage += leakage;
        let indices: Vec<usize> = self.pending.iter().map(|b| b.block_index).collect();
        let context = key_context(&indices);
        let key = match self.policy {
            AmplifyPolicy::PaperMode => Some(FinalKey {
                bits: hash_blocks(&self.pending, &context),
                source_blocks: indices,
                leakage_total: self.pending_leakage,
            }),
            AmplifyPolicy::EntropyGated => amplify(&self.pending, self.pending_leakage, &context).ok(),
        };
        if key.is_some() {
            self.pending.clear();
            self.pending_leakage = 0;
        }
        key
    }
}

/// LoRaWAN session key a generated key is installed as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeyRole {
    AppSKey,
    NwkSEncKey,
}

impl KeyRole {
    /// Keys are handed out alternately, application key first.
    pub fn for_sequence(i: usize) -> Self {
        if i.is_multiple_of(2) {
            KeyRole::AppSKey
        } else {
            KeyRole::NwkSEncKey
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            KeyRole::AppSKey => "AppSKey",
            KeyRole::NwkSEncKey => "NwkSEncKey",
        }
    }
}
