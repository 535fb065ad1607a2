//! One-way information reconciliation by syndrome exchange.
//!
//! Alice sends the BCH syndrome of the first `n` bits of her preliminary key
//! together with a short digest of that block. Bob subtracts his own syndrome,
//! decodes the difference into an error pattern and flips those bits. The block is
//! accepted only if the corrected block reproduces Alice's digest, so a decoder
//! miscorrection is reported as a failure rather than a silently wrong key.

mod bch;
mod gf;

use std::io::{Read, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use bch::BchCode;
pub use gf::GaloisField;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::pipeline::PreliminaryKey;

/// Length of the verification digest sent with each syndrome.
pub const VERIFY_DIGEST_BITS: usize = 32;

const VERIFY_DOMAIN: &[u8] = b"physec-lorawan-verify";

/// Designed correction capabilities of the standard primitive BCH codes of length 127.
pub const BCH_127_T: [usize; 17] = [1, 2, 3, 4, 5, 6, 7, 9, 10, 11, 13, 14, 15, 21, 23, 27, 31];

/// Largest bit disagreement rate a configured code may be asked to cover.
pub const MAX_COVERABLE_BDR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub t: usize,
}

impl CodeParams {
    pub fn id(&self) -> String {
        format!("bch-{}-{}-{}", self.n, self.k, self.t)
    }

    pub fn parse_id(id: &str) -> Result<Self> {
        let parts: Vec<&str> = id.split('-').collect();
        let bad = || Error::config(format!("malformed code id {id:?}"));
        if parts.len() != 4 || parts[0] != "bch" {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        Ok(CodeParams {
            n: num(parts[1])?,
            k: num(parts[2])?,
            t: num(parts[3])?,
        })
    }

    /// Correctable fraction of disagreeing bits.
    pub fn rate_covered(&self) -> f64 {
        self.t as f64 / self.n as f64
    }

    pub fn leakage_bits(&self) -> usize {
        self.n - self.k
    }
}

impl BchCode {
    pub fn params(&self) -> CodeParams {
        CodeParams {
            n: self.n(),
            k: self.k(),
            t: self.t(),
        }
    }

    pub fn id(&self) -> String {
        self.params().id()
    }
}

/// Immutable table of codes to choose from.
#[derive(Debug, Clone)]
pub struct CodeTable {
    codes: Vec<BchCode>,
}

impl CodeTable {
    pub fn new(codes: Vec<BchCode>) -> Self {
        CodeTable { codes }
    }

    /// All standard primitive BCH codes of length 127.
    pub fn bch_127() -> Self {
        let codes = BCH_127_T
            .iter()
            .map(|&t| BchCode::new(7, t).expect("standard BCH(127) parameters"))
            .collect();
        CodeTable { codes }
    }

    pub fn codes(&self) -> &[BchCode] {
        &self.codes
    }

    pub fn by_id(&self, id: &str) -> Option<&BchCode> {
        self.codes.iter().find(|c| c.id() == id)
    }

    /// Highest-rate code whose correctable fraction `t / n` reaches `max_bdr`.
    pub fn pick(&self, max_bdr: f64, key_len: usize) -> Result<&BchCode> {
        if !(max_bdr > 0.0 && max_bdr <= MAX_COVERABLE_BDR) {
            return Err(Error::config(format!(
                "maximum BDR {max_bdr} outside (0, {MAX_COVERABLE_BDR}]"
            )));
        }
        self.codes
            .iter()
            .filter(|c| c.n() <= key_len && c.params().rate_covered() >= max_bdr)
            .max_by_key(|c| c.k())
            .ok_or(Error::NoCodeCovers(max_bdr))
    }
}

/// The shared default table of length-127 codes.
pub fn default_codes() -> &'static CodeTable {
    static TABLE: OnceLock<CodeTable> = OnceLock::new();
    TABLE.get_or_init(CodeTable::bch_127)
}

/// Picks from the default table; see [`CodeTable::pick`].
pub fn pick_code(max_bdr: f64, key_len: usize) -> Result<BchCode> {
    default_codes().pick(max_bdr, key_len).cloned()
}

fn block_word(block: &Bits, code: &BchCode) -> Result<u128> {
    if block.len() != code.n() {
        return Err(Error::LengthMismatch {
            expected: code.n(),
            actual: block.len(),
        });
    }
    Ok(block.to_u128())
}

/// Parity-check syndrome of an `n`-bit block; bit i is the coefficient of x^i of
/// the block polynomial reduced modulo the generator.
pub fn syndrome(block: &Bits, code: &BchCode) -> Result<Bits> {
    let word = block_word(block, code)?;
    Ok(Bits::from_u128(code.syndrome(word), code.parity_bits()))
}

/// Truncated SHA-256 of a reconciled block.
pub fn verify_digest(block: &Bits) -> [u8; 4] {
    let mut h = Sha256::new();
    h.update(VERIFY_DOMAIN);
    h.update((block.len() as u32).to_be_bytes());
    h.update(block.to_bytes());
    let out = h.finalize();
    [out[0], out[1], out[2], out[3]]
}

fn key_prefix(key: &PreliminaryKey, code: &BchCode) -> Result<Bits> {
    if key.len() < code.n() {
        return Err(Error::LengthMismatch {
            expected: code.n(),
            actual: key.len(),
        });
    }
    Ok(key.bits.prefix(code.n()))
}

/// What Alice sends for one block: one transcript record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconcileMessage {
    pub block_index: usize,
    pub code_id: String,
    pub syndrome: Bits,
    pub verify_digest: [u8; 4],
}

impl ReconcileMessage {
    /// Bits put on air for this block.
    pub fn transmitted_bits(&self) -> usize {
        self.syndrome.len() + VERIFY_DIGEST_BITS
    }
}

/// Alice's side: syndrome and digest of the first `n` key bits.
pub fn alice_message(alice_key: &PreliminaryKey, code: &BchCode) -> Result<ReconcileMessage> {
    let block = key_prefix(alice_key, code)?;
    Ok(ReconcileMessage {
        block_index: alice_key.block_index,
        code_id: code.id(),
        syndrome: syndrome(&block, code)?,
        verify_digest: verify_digest(&block),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconcileResult {
    pub block_index: usize,
    /// Bob's corrected block; withheld unless reconciliation succeeded.
    pub key: Option<Bits>,
    pub corrected_errors: usize,
    /// Syndrome bits disclosed, `n - k`.
    pub leakage_bits: usize,
    /// Verification digest bits disclosed.
    pub digest_bits: usize,
    pub success: bool,
}

impl ReconcileResult {
    pub fn total_leakage(&self) -> usize {
        self.leakage_bits + self.digest_bits
    }
}

/// Bob's side: corrects the first `n` bits of his key toward Alice's block.
pub fn reconcile(bob_key: &PreliminaryKey, msg: &ReconcileMessage, code: &BchCode) -> Result<ReconcileResult> {
    if msg.code_id != code.id() {
        return Err(Error::config(format!(
            "message for code {} decoded with {}",
            msg.code_id,
            code.id()
        )));
    }
    if msg.syndrome.len() != code.parity_bits() {
        return Err(Error::LengthMismatch {
            expected: code.parity_bits(),
            actual: msg.syndrome.len(),
        });
    }
    let bob_block = key_prefix(bob_key, code)?;
    let word = bob_block.to_u128();
    let difference = code.syndrome(word) ^ msg.syndrome.to_u128();

    let mut result = ReconcileResult {
        block_index: bob_key.block_index,
        key: None,
        corrected_errors: 0,
        leakage_bits: code.parity_bits(),
        digest_bits: VERIFY_DIGEST_BITS,
        success: false,
    };
    if let Some(pattern) = code.decode_syndrome(difference) {
        let corrected = Bits::from_u128(word ^ pattern, code.n());
        if verify_digest(&corrected) == msg.verify_digest {
            result.corrected_errors = pattern.count_ones() as usize;
            result.key = Some(corrected);
            result.success = true;
        }
    }
    Ok(result)
}

const TRANSCRIPT_HEADER: [&str; 4] = ["block_index", "code_id", "syndrome_hex", "verify_digest_hex"];

/// Writes `block_index,code_id,syndrome_hex,verify_digest_hex` records.
pub fn write_transcript<W: Write>(messages: &[ReconcileMessage], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::InvalidTrace(e.to_string());
    w.write_record(TRANSCRIPT_HEADER).map_err(to_err)?;
    for m in messages {
        w.write_record([
            m.block_index.to_string(),
            m.code_id.clone(),
            m.syndrome.to_hex(),
            hex::encode(m.verify_digest),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io("<transcript>", e))
}

pub fn parse_transcript<R: Read>(input: R) -> Result<Vec<ReconcileMessage>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |message: String| Error::Parse { line, message };
        if record.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, got {}", record.len())));
        }
        let params = CodeParams::parse_id(&record[1]).map_err(|e| parse_err(e.to_string()))?;
        let digest = hex::decode(&record[3]).map_err(|e| parse_err(e.to_string()))?;
        let verify_digest: [u8; 4] = digest
            .try_into()
            .map_err(|_| parse_err("digest must be 4 bytes".into()))?;
        out.push(ReconcileMessage {
            block_index: record[0].parse().map_err(|e| parse_err(format!("block_index: {e}")))?,
            code_id: record[1].to_string(),
            syndrome: Bits::from_hex(&record[2], params.leakage_bits())
                .map_err(|e| parse_err(e.to_string()))?,
            verify_digest,
        });
    }
    Ok(out)
}
