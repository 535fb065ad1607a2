//! Paired probe traces: CSV ingestion, counter-based alignment and block segmentation.
//!
//! A trace pairs, per uplink, the RSSI the gateway measured on that uplink with the
//! RSSI the device reported for the previous downlink acknowledgement. Alice is the
//! gateway side (`rssi_gw`), Bob the device side (`rssi_dev`).

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nominal probing period assumed when it cannot be estimated from timestamps.
pub const DEFAULT_PROBE_PERIOD: f64 = 10.0;

/// Default channel profile length.
pub const DEFAULT_BLOCK_SIZE: usize = 128;

const REQUIRED_COLUMNS: [&str; 4] = ["uplink_counter", "t", "rssi_dev", "rssi_gw"];
const OPTIONAL_COLUMNS: [&str; 2] = ["snr_dev", "snr_gw"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub uplink_counter: u64,
    /// Seconds since the start of the capture.
    pub t: f64,
    /// Device-measured RSSI of the previous downlink ack, dBm.
    pub rssi_dev: Option<f64>,
    /// Gateway-measured RSSI of this uplink, dBm.
    pub rssi_gw: Option<f64>,
    pub snr_dev: Option<f64>,
    pub snr_gw: Option<f64>,
}

impl ProbeSample {
    pub fn paired(uplink_counter: u64, t: f64, rssi_dev: f64, rssi_gw: f64) -> Self {
        ProbeSample {
            uplink_counter,
            t,
            rssi_dev: Some(rssi_dev),
            rssi_gw: Some(rssi_gw),
            snr_dev: None,
            snr_gw: None,
        }
    }

    pub fn is_paired(&self) -> bool {
        self.rssi_dev.is_some() && self.rssi_gw.is_some()
    }
}

/// Bookkeeping carried along with a trace through ingestion and alignment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    /// Free-form labels such as band, bandwidth or spreading factor.
    pub labels: BTreeMap<String, String>,
    /// Pairwise counter inversions repaired while sorting the input.
    pub inversions: usize,
    /// Samples removed by alignment because one side was missing.
    pub dropped: usize,
    /// Number of discontinuities in the counter sequence.
    pub gaps: usize,
    /// Total number of counter values skipped across all gaps.
    pub missing_counters: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTrace {
    samples: Vec<ProbeSample>,
    pub probe_period: f64,
    pub meta: TraceMeta,
}

impl ProbeTrace {
    /// Builds a trace, checking that counters strictly increase, timestamps do not
    /// decrease and all present RSSI values are finite.
    pub fn new(samples: Vec<ProbeSample>, probe_period: f64) -> Result<Self> {
        if !(probe_period.is_finite() && probe_period > 0.0) {
            return Err(Error::config(format!("probe period {probe_period} must be positive")));
        }
        for s in &samples {
            for v in [s.rssi_dev, s.rssi_gw].into_iter().flatten() {
                if !v.is_finite() {
                    return Err(Error::InvalidTrace(format!(
                        "non-finite RSSI at counter {}",
                        s.uplink_counter
                    )));
                }
            }
            if !s.t.is_finite() {
                return Err(Error::InvalidTrace(format!(
                    "non-finite timestamp at counter {}",
                    s.uplink_counter
                )));
            }
        }
        for w in samples.windows(2) {
            if w[1].uplink_counter == w[0].uplink_counter {
                return Err(Error::DuplicateCounter(w[1].uplink_counter));
            }
            if w[1].uplink_counter < w[0].uplink_counter {
                return Err(Error::Unordered(w[1].uplink_counter));
            }
            if w[1].t < w[0].t {
                return Err(Error::InvalidTrace(format!(
                    "timestamp decreases at counter {}",
                    w[1].uplink_counter
                )));
            }
        }
        let mut trace = ProbeTrace {
            samples,
            probe_period,
            meta: TraceMeta::default(),
        };
        trace.recount_gaps();
        Ok(trace)
    }

    pub fn samples(&self) -> &[ProbeSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn counters(&self) -> impl Iterator<Item = u64> + '_ {
        self.samples.iter().map(|s| s.uplink_counter)
    }

    fn recount_gaps(&mut self) {
        let (gaps, missing) = self
            .samples
            .windows(2)
            .map(|w| w[1].uplink_counter - w[0].uplink_counter - 1)
            .filter(|&skipped| skipped > 0)
            .fold((0, 0), |(g, m), skipped| (g + 1, m + skipped));
        self.meta.gaps = gaps;
        self.meta.missing_counters = missing;
    }
}

/// One party's view of one block of consecutive probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub values: Vec<f64>,
    pub party: Party,
    pub block_index: usize,
}

impl ChannelProfile {
    pub fn new(values: Vec<f64>, party: Party, block_index: usize) -> Self {
        ChannelProfile {
            values,
            party,
            block_index,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        ChannelProfile {
            values,
            party: self.party,
            block_index: self.block_index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
    Eve,
}

fn parse_field<T: std::str::FromStr>(raw: &str, column: &str, line: u64) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim().parse::<T>().map_err(|e| Error::Parse {
        line,
        message: format!("column {column}: {e} ({raw:?})"),
    })
}

fn parse_optional(raw: Option<&str>, column: &str, line: u64) -> Result<Option<f64>> {
    match raw.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => parse_field::<f64>(v, column, line).map(Some),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Counts pairs `i < j` with `v[i] > v[j]` by merge sort, returning the sorted vector.
fn sort_counting_inversions<T: Clone>(v: Vec<T>, key: impl Fn(&T) -> u64 + Copy) -> (Vec<T>, usize) {
    if v.len() <= 1 {
        return (v, 0);
    }
    let mut left = v;
    let right = left.split_off(left.len() / 2);
    let (left, a) = sort_counting_inversions(left, key);
    let (right, b) = sort_counting_inversions(right, key);
    let mut merged = Vec::with_capacity(left.len() + right.len());
    let mut inversions = a + b;
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if key(&right[j]) < key(&left[i]) {
            inversions += left.len() - i;
            merged.push(right[j].clone());
            j += 1;
        } else {
            merged.push(left[i].clone());
            i += 1;
        }
    }
    merged.extend_from_slice(&left[i..]);
    merged.extend_from_slice(&right[j..]);
    (merged, inversions)
}

/// Median of per-counter time steps, or [`DEFAULT_PROBE_PERIOD`] when it cannot be estimated.
fn estimate_probe_period(samples: &[ProbeSample]) -> f64 {
    let mut steps: Vec<f64> = samples
        .windows(2)
        .filter(|w| w[1].uplink_counter > w[0].uplink_counter)
        .map(|w| (w[1].t - w[0].t) / (w[1].uplink_counter - w[0].uplink_counter) as f64)
        .filter(|s| s.is_finite() && *s > 0.0)
        .collect();
    if steps.is_empty() {
        return DEFAULT_PROBE_PERIOD;
    }
    steps.sort_by(f64::total_cmp);
    steps[steps.len() / 2]
}

/// Parses the trace CSV format (`uplink_counter,t,rssi_dev,rssi_gw[,snr_dev,snr_gw]`).
///
/// Empty RSSI/SNR fields are read as missing. Rows out of counter order are sorted;
/// the number of repaired inversions is recorded in `meta.inversions`.
pub fn parse_trace_csv<R: Read>(input: R) -> Result<ProbeTrace> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers().map_err(csv_error)?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < REQUIRED_COLUMNS.len() || names[..4] != REQUIRED_COLUMNS {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header starting with {}, got {}",
                REQUIRED_COLUMNS.join(","),
                names.join(",")
            ),
        });
    }
    for (i, name) in names[4..].iter().enumerate() {
        if OPTIONAL_COLUMNS.get(i) != Some(name) {
            return Err(Error::Parse {
                line: 1,
                message: format!("unexpected column {name:?}"),
            });
        }
    }

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let sample = ProbeSample {
            uplink_counter: parse_field(&record[0], "uplink_counter", line)?,
            t: parse_field(&record[1], "t", line)?,
            rssi_dev: parse_optional(record.get(2), "rssi_dev", line)?,
            rssi_gw: parse_optional(record.get(3), "rssi_gw", line)?,
            snr_dev: parse_optional(record.get(4), "snr_dev", line)?,
            snr_gw: parse_optional(record.get(5), "snr_gw", line)?,
        };
        for (name, v) in [("rssi_dev", sample.rssi_dev), ("rssi_gw", sample.rssi_gw)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::Validation {
                        line,
                        message: format!("{name} is not finite ({v})"),
                    });
                }
            }
        }
        if !sample.t.is_finite() {
            return Err(Error::Validation {
                line,
                message: format!("t is not finite ({})", sample.t),
            });
        }
        samples.push(sample);
    }

    let (samples, inversions) = sort_counting_inversions(samples, |s| s.uplink_counter);
    let probe_period = estimate_probe_period(&samples);
    let mut trace = ProbeTrace::new(samples, probe_period)?;
    trace.meta.inversions = inversions;
    Ok(trace)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn io_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io("<csv writer>", e),
        other => Error::InvalidTrace(format!("{other:?}")),
    }
}

/// Writes a trace in the format read by [`parse_trace_csv`].
pub fn write_trace_csv<W: Write>(trace: &ProbeTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = REQUIRED_COLUMNS.iter().chain(&OPTIONAL_COLUMNS).copied().collect();
    w.write_record(&header).map_err(io_err)?;
    for s in trace.samples() {
        w.write_record([
            s.uplink_counter.to_string(),
            s.t.to_string(),
            fmt_opt(s.rssi_dev),
            fmt_opt(s.rssi_gw),
            fmt_opt(s.snr_dev),
            fmt_opt(s.snr_gw),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))
}

/// Keeps only samples observed by both parties. Gaps in the counter sequence are
/// allowed and recorded in the metadata.
pub fn align(trace: &ProbeTrace) -> Result<ProbeTrace> {
    let kept: Vec<ProbeSample> = trace.samples.iter().filter(|s| s.is_paired()).copied().collect();
    if kept.is_empty() {
        return Err(Error::NoAlignedSamples);
    }
    let dropped = trace.len() - kept.len();
    let mut out = ProbeTrace::new(kept, trace.probe_period)?;
    out.meta.labels = trace.meta.labels.clone();
    out.meta.inversions = trace.meta.inversions;
    out.meta.dropped = trace.meta.dropped + dropped;
    Ok(out)
}

/// Splits an aligned trace into `floor(len / block_size)` (alice, bob) profile pairs.
/// Alice carries the gateway RSSI, Bob the device RSSI; the trailing remainder is discarded.
pub fn segment(trace: &ProbeTrace, block_size: usize) -> Result<Vec<(ChannelProfile, ChannelProfile)>> {
    if block_size == 0 {
        return Err(Error::config("block size must be positive"));
    }
    if trace.len() < block_size {
        return Err(Error::InsufficientSamples {
            have: trace.len(),
            need: block_size,
        });
    }
    if let Some(s) = trace.samples.iter().find(|s| !s.is_paired()) {
        return Err(Error::InvalidTrace(format!(
            "trace not aligned: counter {} lacks a paired measurement",
            s.uplink_counter
        )));
    }
    Ok(trace
        .samples
        .chunks_exact(block_size)
        .enumerate()
        .map(|(i, chunk)| {
            let alice = chunk.iter().filter_map(|s| s.rssi_gw).collect();
            let bob = chunk.iter().filter_map(|s| s.rssi_dev).collect();
            (
                ChannelProfile::new(alice, Party::Alice, i),
                ChannelProfile::new(bob, Party::Bob, i),
            )
        })
        .collect())
}

/// Splits a single measurement series into profiles; used for the eavesdropper's view.
pub fn segment_series(values: &[f64], block_size: usize, party: Party) -> Result<Vec<ChannelProfile>> {
    if block_size == 0 {
        return Err(Error::config("block size must be positive"));
    }
    if values.len() < block_size {
        return Err(Error::InsufficientSamples {
            have: values.len(),
            need: block_size,
        });
    }
    Ok(values
        .chunks_exact(block_size)
        .enumerate()
        .map(|(i, c)| ChannelProfile::new(c.to_vec(), party, i))
        .collect())
}

/// One eavesdropper observation, aligned to an uplink instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveSample {
    pub uplink_counter: u64,
    pub t: f64,
    pub rssi_eve: f64,
}

/// Writes the eavesdropper sibling file (`uplink_counter,t,rssi_eve`).
pub fn write_eve_csv<W: Write>(samples: &[EveSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))
}

pub fn parse_eve_csv<R: Read>(input: R) -> Result<Vec<EveSample>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize::<EveSample>() {
        let s = row.map_err(csv_error)?;
        if !s.rssi_eve.is_finite() {
            return Err(Error::Validation {
                line: out.len() as u64 + 2,
                message: format!("rssi_eve is not finite ({})", s.rssi_eve),
            });
        }
        out.push(s);
    }
    Ok(out)
}

/// Picks the eavesdropper value for every counter of an aligned trace.
pub fn eve_series_for(trace: &ProbeTrace, eve: &[EveSample]) -> Result<Vec<f64>> {
    let by_counter: BTreeMap<u64, f64> = eve.iter().map(|s| (s.uplink_counter, s.rssi_eve)).collect();
    trace
        .counters()
        .map(|c| {
            by_counter
                .get(&c)
                .copied()
                .ok_or_else(|| Error::InvalidTrace(format!("eve trace missing counter {c}")))
        })
        .collect()
}
