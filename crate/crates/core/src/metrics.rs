//! Bit disagreement, acceptance filtering and key generation rate.
//!
//! The key generation rate counts all probing time, including blocks rejected by the
//! BDR cutoff: `kgr = accepted * L / (total * L * probe_period)`, so the mean time to
//! a key is exactly `L / kgr`. Reconciliation airtime is not included.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::pipeline::{bdr_bits, Quantizer};

/// Eve blocks closer than this to the target key are flagged.
pub const EVE_CLOSE_BDR: f64 = 0.25;

pub const KGR_NOTE: &str =
    "kgr counts all probed time including rejected blocks; mean_key_time = key_len / kgr";

/// Preliminary keys of one block for every observer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockKeys {
    pub block_index: usize,
    pub alice: Bits,
    pub bob: Bits,
    pub eve: Option<Bits>,
}

/// All blocks quantized with one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSet {
    pub quantizer: Quantizer,
    pub blocks: Vec<BlockKeys>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEval {
    pub block_index: usize,
    pub bdr_ab: f64,
    pub bdr_ea: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub quantizer: Quantizer,
    pub max_bdr_cutoff: f64,
    pub key_len: usize,
    pub probe_period: f64,
    pub block_count: usize,
    pub accepted_count: usize,
    pub mean_bdr: f64,
    /// Secret bits per second.
    pub kgr: f64,
    /// Seconds per key; absent when no block is accepted.
    pub mean_key_time: Option<f64>,
    pub note: String,
    pub per_block: Vec<BlockEval>,
}

impl EvalReport {
    pub fn acceptance_fraction(&self) -> f64 {
        self.accepted_count as f64 / self.block_count as f64
    }
}

pub fn evaluate(set: &BlockSet, cutoff: f64, probe_period: f64, key_len: usize) -> Result<EvalReport> {
    if set.blocks.is_empty() {
        return Err(Error::config("evaluation needs at least one block"));
    }
    if !(probe_period > 0.0) {
        return Err(Error::config("probe period must be positive"));
    }
    let per_block = set
        .blocks
        .iter()
        .map(|b| {
            let bdr_ab = bdr_bits(&b.alice, &b.bob)?;
            let bdr_ea = b.eve.as_ref().map(|e| bdr_bits(e, &b.alice)).transpose()?;
            Ok(BlockEval {
                block_index: b.block_index,
                bdr_ab,
                bdr_ea,
                accepted: bdr_ab <= cutoff,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let total = per_block.len();
    let accepted = per_block.iter().filter(|b| b.accepted).count();
    let kgr = (accepted * key_len) as f64 / ((total * key_len) as f64 * probe_period);
    Ok(EvalReport {
        quantizer: set.quantizer,
        max_bdr_cutoff: cutoff,
        key_len,
        probe_period,
        block_count: total,
        accepted_count: accepted,
        mean_bdr: per_block.iter().map(|b| b.bdr_ab).sum::<f64>() / total as f64,
        kgr,
        mean_key_time: (kgr > 0.0).then(|| key_len as f64 / kgr),
        note: KGR_NOTE.to_string(),
        per_block,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgrRow {
    pub cutoff: f64,
    /// One rate per block set, in the order the sets were given.
    pub kgr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgrCurve {
    pub quantizers: Vec<Quantizer>,
    pub rows: Vec<KgrRow>,
}

impl KgrCurve {
    pub fn column(&self, quantizer: Quantizer) -> Option<Vec<f64>> {
        let col = self.quantizers.iter().position(|&q| q == quantizer)?;
        Some(self.rows.iter().map(|r| r.kgr[col]).collect())
    }

    /// Plot data: `cutoff,kgr_threshold,kgr_difference` (one column per quantizer).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let to_err = |e: csv::Error| Error::InvalidTrace(e.to_string());
        let mut header = vec!["cutoff".to_string()];
        header.extend(self.quantizers.iter().map(|q| format!("kgr_{q}")));
        w.write_record(&header).map_err(to_err)?;
        for row in &self.rows {
            let mut rec = vec![row.cutoff.to_string()];
            rec.extend(row.kgr.iter().map(f64::to_string));
            w.write_record(&rec).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::io("<plot csv>", e))
    }
}

/// Key generation rate of every block set at every cutoff.
pub fn kgr_curve(sets: &[BlockSet], cutoffs: &[f64], probe_period: f64, key_len: usize) -> Result<KgrCurve> {
    if cutoffs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::config("cutoffs must be sorted ascending"));
    }
    let rows = cutoffs
        .iter()
        .map(|&cutoff| {
            let kgr = sets
                .iter()
                .map(|s| evaluate(s, cutoff, probe_period, key_len).map(|r| r.kgr))
                .collect::<Result<Vec<_>>>()?;
            Ok(KgrRow { cutoff, kgr })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KgrCurve {
        quantizers: sets.iter().map(|s| s.quantizer).collect(),
        rows,
    })
}

/// Which legitimate key Eve's key is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EveTarget {
    #[default]
    Alice,
    /// The closer of Alice's and Bob's keys, block by block.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EveSummary {
    pub target: EveTarget,
    pub blocks: usize,
    pub mean_bdr_ea: f64,
    /// Fraction of blocks where Eve's BDR is below [`EVE_CLOSE_BDR`].
    pub close_fraction: f64,
    /// Set when any block is that close.
    pub flagged: bool,
}

pub fn eve_advantage(set: &BlockSet, target: EveTarget) -> Result<EveSummary> {
    let rates = set
        .blocks
        .iter()
        .filter_map(|b| b.eve.as_ref().map(|e| (b, e)))
        .map(|(b, e)| {
            let to_alice = bdr_bits(e, &b.alice)?;
            Ok(match target {
                EveTarget::Alice => to_alice,
                EveTarget::Both => to_alice.min(bdr_bits(e, &b.bob)?),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    if rates.is_empty() {
        return Err(Error::NoEveData);
    }
    let close = rates.iter().filter(|&&r| r < EVE_CLOSE_BDR).count();
    Ok(EveSummary {
        target,
        blocks: rates.len(),
        mean_bdr_ea: rates.iter().sum::<f64>() / rates.len() as f64,
        close_fraction: close as f64 / rates.len() as f64,
        flagged: close > 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(i: usize, agree: bool) -> BlockKeys {
        let alice: Bits = (0..128).map(|j: usize| (j * 7 + i).is_multiple_of(3)).collect();
        let bob = if agree {
            alice.clone()
        } else {
            alice.iter().map(|b| !b).collect()
        };
        BlockKeys {
            block_index: i,
            alice,
            bob,
            eve: None,
        }
    }

    fn set_with_fraction(accepted: usize, total: usize) -> BlockSet {
        BlockSet {
            quantizer: Quantizer::Difference,
            blocks: (0..total).map(|i| pair(i, i < accepted)).collect(),
        }
    }

    #[test]
    fn reference_rates() {
        let r = evaluate(&set_with_fraction(848, 1000), 0.2, 10.0, 128).unwrap();
        assert!((r.kgr - 0.0848).abs() < 1e-12);
        let minutes = r.mean_key_time.unwrap() / 60.0;
        assert!((minutes / 25.15 - 1.0).abs() < 0.01, "{minutes}");

        let r = evaluate(&set_with_fraction(677, 1000), 0.2, 10.0, 128).unwrap();
        assert!((r.kgr - 0.0677).abs() < 1e-12);
        assert!((r.mean_key_time.unwrap() / 60.0 / 31.5 - 1.0).abs() < 0.01);
    }

    #[test]
    fn nothing_accepted() {
        let r = evaluate(&set_with_fraction(0, 10), 0.2, 10.0, 128).unwrap();
        assert_eq!(r.kgr, 0.0);
        assert_eq!(r.mean_key_time, None);
        assert_eq!(r.mean_bdr, 1.0);
    }

    #[test]
    fn empty_set_rejected() {
        let set = BlockSet {
            quantizer: Quantizer::Threshold,
            blocks: vec![],
        };
        assert!(evaluate(&set, 0.2, 10.0, 128).is_err());
    }

    #[test]
    fn curve_shape_and_ceiling() {
        let sets = vec![
            BlockSet {
                quantizer: Quantizer::Threshold,
                ..set_with_fraction(3, 10)
            },
            set_with_fraction(7, 10),
        ];
        let curve = kgr_curve(&sets, &[0.05, 0.10, 0.20, 1.0], 10.0, 128).unwrap();
        assert_eq!(curve.rows.len(), 4);
        assert_eq!(curve.rows[3].kgr, vec![0.1, 0.1]);
        assert_eq!(curve.column(Quantizer::Difference).unwrap()[0], 0.07);

        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("cutoff,kgr_threshold,kgr_difference"));
        assert_eq!(lines.next(), Some("0.05,0.03,0.07"));
        assert!(kgr_curve(&sets, &[0.2, 0.1], 10.0, 128).is_err());
    }

    #[test]
    fn eve_identical_to_alice_is_flagged() {
        let mut set = set_with_fraction(5, 5);
        for b in &mut set.blocks {
            b.eve = Some(b.alice.clone());
        }
        let s = eve_advantage(&set, EveTarget::Alice).unwrap();
        assert_eq!(s.mean_bdr_ea, 0.0);
        assert_eq!(s.close_fraction, 1.0);
        assert!(s.flagged);
    }

    #[test]
    fn eve_compared_to_both_takes_closer() {
        let mut set = set_with_fraction(0, 2);
        for b in &mut set.blocks {
            b.eve = Some(b.bob.clone());
        }
        assert_eq!(eve_advantage(&set, EveTarget::Alice).unwrap().mean_bdr_ea, 1.0);
        assert_eq!(eve_advantage(&set, EveTarget::Both).unwrap().mean_bdr_ea, 0.0);
    }

    #[test]
    fn missing_eve_is_an_error() {
        assert!(matches!(
            eve_advantage(&set_with_fraction(1, 2), EveTarget::Alice),
            Err(Error::NoEveData)
        ));
    }
}
