//! Full key generation run over an aligned trace:
//! segment, pre-process, quantize, filter by BDR, reconcile, test, amplify.

use serde::{Deserialize, Serialize};

use crate::amplify::{
    test_randomness, AmplifyPolicy, FinalKey, KeyAccumulator, RandomnessReport, ReconciledBlock,
    DEFAULT_ALPHA,
};
use crate::error::{Error, Result};
use crate::metrics::{eve_advantage, evaluate, BlockKeys, BlockSet, EvalReport, EveSummary, EveTarget};
use crate::pipeline::{preprocess, Quantizer, QuantizerConfig};
use crate::reconcile::{alice_message, default_codes, reconcile, CodeParams, ReconcileMessage};
use crate::trace::{segment, segment_series, Party, ProbeTrace, DEFAULT_BLOCK_SIZE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeygenConfig {
    pub block_size: usize,
    pub quantizers: Vec<Quantizer>,
    /// Polynomial degree of the optional reciprocity enhancement.
    pub enhance_degree: Option<usize>,
    /// Maximum preliminary-key BDR accepted for reconciliation.
    pub cutoff: f64,
    /// Code to reconcile with; picked from the cutoff when absent.
    pub code: Option<String>,
    pub alpha: f64,
    pub policy: AmplifyPolicy,
    pub eve_target: EveTarget,
}

impl Default for KeygenConfig {
    fn default() -> Self {
        KeygenConfig {
            block_size: DEFAULT_BLOCK_SIZE,
            quantizers: Quantizer::ALL.to_vec(),
            enhance_degree: None,
            cutoff: 0.2,
            code: None,
            alpha: DEFAULT_ALPHA,
            policy: AmplifyPolicy::EntropyGated,
            eve_target: EveTarget::Alice,
        }
    }
}

impl KeygenConfig {
    pub fn key_len(&self) -> usize {
        self.block_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.quantizers.is_empty() {
            return Err(Error::config("at least one quantizer is required"));
        }
        for &q in &self.quantizers {
            QuantizerConfig {
                block_size: self.block_size,
                ..QuantizerConfig::new(q)
            }
            .validate()?;
        }
        if !(self.cutoff > 0.0 && self.cutoff <= 0.25) {
            return Err(Error::config(format!("cutoff {} outside (0, 0.25]", self.cutoff)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

/// Quantizes every block of an aligned trace with each configured method.
pub fn block_sets(trace: &ProbeTrace, eve: Option<&[f64]>, cfg: &KeygenConfig) -> Result<Vec<BlockSet>> {
    let pairs = segment(trace, cfg.block_size).map_err(|e| e.at_stage("segment"))?;
    let eve_profiles = eve
        .map(|values| {
            if values.len() != trace.len() {
                return Err(Error::LengthMismatch {
                    expected: trace.len(),
                    actual: values.len(),
                });
            }
            segment_series(values, cfg.block_size, Party::Eve)
        })
        .transpose()
        .map_err(|e| e.at_stage("segment"))?;

    let prep = |p| preprocess(p, cfg.enhance_degree).map_err(|e| e.at_stage("preprocess"));
    let mut processed = Vec::with_capacity(pairs.len());
    for (i, (alice, bob)) in pairs.iter().enumerate() {
        let eve = eve_profiles.as_ref().map(|e| prep(&e[i])).transpose()?;
        processed.push((prep(alice)?, prep(bob)?, eve));
    }

    Ok(cfg
        .quantizers
        .iter()
        .map(|&q| BlockSet {
            quantizer: q,
            blocks: processed
                .iter()
                .map(|(a, b, e)| BlockKeys {
                    block_index: a.block_index,
                    alice: q.quantize(a).bits,
                    bob: q.quantize(b).bits,
                    eve: e.as_ref().map(|e| q.quantize(e).bits),
                })
                .collect(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRandomness {
    pub block_index: usize,
    #[serde(flatten)]
    pub report: RandomnessReport,
}

/// Everything produced for one quantization method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerOutcome {
    pub eval: EvalReport,
    pub code: CodeParams,
    pub reconciled: usize,
    pub reconcile_failures: usize,
    pub randomness_failures: usize,
    /// Syndrome and digest bits sent over the air.
    pub reconciliation_bits_sent: usize,
    pub randomness: Vec<BlockRandomness>,
    /// Keys derived on the gateway side; Bob's side is checked against these.
    pub keys: Vec<FinalKey>,
    pub keys_agree: bool,
    /// Residual bits left in the accumulator when the trace ended.
    pub pending_residual_bits: i64,
    pub eve: Option<EveSummary>,
    #[serde(skip)]
    pub transcript: Vec<ReconcileMessage>,
}

/// Runs reconciliation, randomness testing and amplification over one block set.
pub fn distill(set: &BlockSet, cfg: &KeygenConfig, probe_period: f64) -> Result<QuantizerOutcome> {
    let key_len = cfg.key_len();
    let eval = evaluate(set, cfg.cutoff, probe_period, key_len).map_err(|e| e.at_stage("evaluate"))?;
    let code = match &cfg.code {
        Some(id) => default_codes()
            .by_id(id)
            .cloned()
            .ok_or_else(|| Error::config(format!("unknown code {id:?}"))),
        None => default_codes().pick(cfg.cutoff, key_len).cloned(),
    }
    .map_err(|e| e.at_stage("reconcile"))?;

    let mut alice_acc = KeyAccumulator::new(cfg.policy);
    let mut bob_acc = KeyAccumulator::new(cfg.policy);
    let mut outcome = QuantizerOutcome {
        eval,
        code: code.params(),
        reconciled: 0,
        reconcile_failures: 0,
        randomness_failures: 0,
        reconciliation_bits_sent: 0,
        randomness: Vec::new(),
        keys: Vec::new(),
        keys_agree: true,
        pending_residual_bits: 0,
        eve: None,
        transcript: Vec::new(),
    };

    for (block, verdict) in set.blocks.iter().zip(&outcome.eval.per_block) {
        if !verdict.accepted {
            continue;
        }
        let as_key = |bits: &crate::bits::Bits, party| crate::pipeline::PreliminaryKey {
            bits: bits.clone(),
            party,
            block_index: block.block_index,
        };
        let alice = as_key(&block.alice, Party::Alice);
        let msg = alice_message(&alice, &code).map_err(|e| e.at_stage("reconcile"))?;
        let result = reconcile(&as_key(&block.bob, Party::Bob), &msg, &code)
            .map_err(|e| e.at_stage("reconcile"))?;
        outcome.reconciliation_bits_sent += msg.transmitted_bits();
        outcome.transcript.push(msg);
        let Some(bob_block) = result.key.clone() else {
            outcome.reconcile_failures += 1;
            continue;
        };
        outcome.reconciled += 1;

        let report = test_randomness(&bob_block, cfg.alpha).map_err(|e| e.at_stage("randomness"))?;
        outcome.randomness.push(BlockRandomness {
            block_index: block.block_index,
            report,
        });
        if !report.passed {
            outcome.randomness_failures += 1;
            continue;
        }

        let leakage = result.total_leakage();
        let alice_block = alice.bits.prefix(code.n());
        let a = alice_acc.push(
            ReconciledBlock {
                block_index: block.block_index,
                bits: alice_block,
            },
            leakage,
        );
        let b = bob_acc.push(
            ReconciledBlock {
                block_index: block.block_index,
                bits: bob_block,
            },
            leakage,
        );
        outcome.keys_agree &= a == b;
        outcome.keys.extend(a);
    }
    outcome.pending_residual_bits = alice_acc.residual_bits();
    outcome.eve = match eve_advantage(set, cfg.eve_target) {
        Ok(s) => Some(s),
        Err(Error::NoEveData) => None,
        Err(e) => return Err(e.at_stage("evaluate")),
    };
    Ok(outcome)
}

/// Complete run over an aligned trace, one outcome per configured quantizer.
pub fn run_keygen(trace: &ProbeTrace, eve: Option<&[f64]>, cfg: &KeygenConfig) -> Result<Vec<QuantizerOutcome>> {
    cfg.validate()?;
    block_sets(trace, eve, cfg)?
        .iter()
        .map(|set| distill(set, cfg, trace.probe_period))
        .collect()
}
