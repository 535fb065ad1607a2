//! `physec` command line: `simulate`, `run`, `sweep` and `report`.
//!
//! Settings come from an optional JSON config (`--config`) with flags taking
//! precedence. Output files are written atomically (temp file + rename).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::amplify::{AmplifyPolicy, KeyRole, DEFAULT_ALPHA};
use crate::chansim::{simulate, SimConfig, REFERENCE_SAMPLE_COUNT};
use crate::error::{Error, Result};
use crate::keygen::{block_sets, distill, KeygenConfig, QuantizerOutcome};
use crate::metrics::{kgr_curve, EveTarget, KgrCurve};
use crate::pipeline::Quantizer;
use crate::reconcile::write_transcript;
use crate::trace::{
    align, eve_series_for, parse_eve_csv, parse_trace_csv, write_eve_csv, write_trace_csv, ProbeTrace,
    TraceMeta, DEFAULT_BLOCK_SIZE,
};

pub const REPORT_FILE: &str = "report.json";
pub const KEYS_FILE: &str = "keys.csv";
pub const PLOT_FILE: &str = "kgr.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const EVE_FILE: &str = "eve.csv";

/// Default cutoff grid of the `sweep` command.
pub const DEFAULT_CUTOFFS: [f64; 5] = [0.05, 0.10, 0.15, 0.20, 0.25];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum QuantizerChoice {
    Threshold,
    Difference,
    #[default]
    Both,
}

impl QuantizerChoice {
    pub fn methods(self) -> Vec<Quantizer> {
        match self {
            QuantizerChoice::Threshold => vec![Quantizer::Threshold],
            QuantizerChoice::Difference => vec![Quantizer::Difference],
            QuantizerChoice::Both => Quantizer::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSource {
    Csv { path: PathBuf, eve: Option<PathBuf> },
    Sim(SimConfig),
}

impl Default for InputSource {
    fn default() -> Self {
        InputSource::Sim(SimConfig::indoor(REFERENCE_SAMPLE_COUNT, 0))
    }
}

/// Settings of `run` and `sweep`, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSource,
    pub quantizer: QuantizerChoice,
    pub block_size: usize,
    pub enhance_degree: Option<usize>,
    pub cutoff: f64,
    pub cutoffs: Vec<f64>,
    /// Code id such as `bch-127-50-13`; chosen from the cutoff when absent.
    pub code: Option<String>,
    pub alpha: f64,
    pub paper_mode: bool,
    pub eve_target: EveTarget,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: InputSource::default(),
            quantizer: QuantizerChoice::Both,
            block_size: DEFAULT_BLOCK_SIZE,
            enhance_degree: None,
            cutoff: 0.2,
            cutoffs: DEFAULT_CUTOFFS.to_vec(),
            code: None,
            alpha: DEFAULT_ALPHA,
            paper_mode: false,
            eve_target: EveTarget::Alice,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn keygen(&self) -> KeygenConfig {
        KeygenConfig {
            block_size: self.block_size,
            quantizers: self.quantizer.methods(),
            enhance_degree: self.enhance_degree,
            cutoff: self.cutoff,
            code: self.code.clone(),
            alpha: self.alpha,
            policy: if self.paper_mode {
                AmplifyPolicy::PaperMode
            } else {
                AmplifyPolicy::EntropyGated
            },
            eve_target: self.eve_target,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &c in std::iter::once(&self.cutoff).chain(&self.cutoffs) {
            if !(c > 0.0 && c <= 0.25) {
                return Err(Error::config(format!("cutoff {c} outside (0, 0.25]")));
            }
        }
        if self.cutoffs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::config("cutoffs must be sorted ascending"));
        }
        self.keygen().validate()
    }
}

/// Aligned trace plus optional eavesdropper series.
pub struct LoadedInput {
    pub trace: ProbeTrace,
    pub eve: Option<Vec<f64>>,
    pub raw_samples: usize,
    pub warnings: Vec<String>,
}

pub fn load_input(input: &InputSource) -> Result<LoadedInput> {
    match input {
        InputSource::Csv { path, eve } => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let raw = parse_trace_csv(file).map_err(|e| e.at_stage("ingest"))?;
            let trace = align(&raw).map_err(|e| e.at_stage("align"))?;
            let mut warnings = Vec::new();
            if raw.meta.inversions > 0 {
                warnings.push(format!("re-sorted {} counter inversions", raw.meta.inversions));
            }
            let eve = eve
                .as_ref()
                .map(|p| {
                    let f = fs::File::open(p).map_err(|e| Error::io(p, e))?;
                    let samples = parse_eve_csv(f)?;
                    eve_series_for(&trace, &samples)
                })
                .transpose()
                .map_err(|e| e.at_stage("ingest"))?;
            Ok(LoadedInput {
                raw_samples: raw.len(),
                trace,
                eve,
                warnings,
            })
        }
        InputSource::Sim(cfg) => {
            let warnings = cfg.validate().map_err(|e| e.at_stage("simulate"))?;
            let link = simulate(cfg).map_err(|e| e.at_stage("simulate"))?;
            let trace = align(&link.to_trace(cfg.probe_period)).map_err(|e| e.at_stage("align"))?;
            Ok(LoadedInput {
                raw_samples: link.len(),
                trace,
                eve: Some(link.eve),
                warnings,
            })
        }
    }
}

fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub samples: usize,
    pub trace_path: PathBuf,
    pub eve_path: PathBuf,
    pub warnings: Vec<String>,
}

/// Writes `trace.csv` and the sibling `eve.csv` for a simulated link.
pub fn cmd_simulate(config: &SimConfig, out: &Path) -> Result<SimulateSummary> {
    let warnings = config.validate().map_err(|e| e.at_stage("simulate"))?;
    let link = simulate(config).map_err(|e| e.at_stage("simulate"))?;
    let trace = link.to_trace(config.probe_period);
    let trace_path = out.join(TRACE_FILE);
    let eve_path = out.join(EVE_FILE);
    write_atomic(&trace_path, |w| write_trace_csv(&trace, w))?;
    write_atomic(&eve_path, |w| write_eve_csv(&link.eve_samples(), w))?;
    Ok(SimulateSummary {
        samples: link.len(),
        trace_path,
        eve_path,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRecord {
    pub quantizer: Quantizer,
    pub role: KeyRole,
    pub key_hex: String,
    pub source_blocks: Vec<usize>,
    pub leakage_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub input: InputSource,
    pub raw_samples: usize,
    pub aligned_samples: usize,
    pub probe_period: f64,
    pub trace_meta: TraceMeta,
    pub settings: KeygenConfig,
    pub outcomes: Vec<QuantizerOutcome>,
    pub keys: Vec<KeyRecord>,
}

fn key_records(outcomes: &[QuantizerOutcome]) -> Vec<KeyRecord> {
    outcomes
        .iter()
        .flat_map(|o| {
            o.keys.iter().enumerate().map(|(i, k)| KeyRecord {
                quantizer: o.eval.quantizer,
                role: KeyRole::for_sequence(i),
                key_hex: k.to_hex(),
                source_blocks: k.source_blocks.clone(),
                leakage_total: k.leakage_total,
            })
        })
        .collect()
}

/// Runs the whole pipeline and writes the report, transcripts and keys under `config.out`.
pub fn cmd_run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let input = load_input(&config.input)?;
    let keygen = config.keygen();
    let sets = block_sets(&input.trace, input.eve.as_deref(), &keygen)?;
    let outcomes = sets
        .iter()
        .map(|s| distill(s, &keygen, input.trace.probe_period))
        .collect::<Result<Vec<_>>>()?;

    let report = RunReport {
        input: config.input.clone(),
        raw_samples: input.raw_samples,
        aligned_samples: input.trace.len(),
        probe_period: input.trace.probe_period,
        trace_meta: input.trace.meta.clone(),
        settings: keygen,
        keys: key_records(&outcomes),
        outcomes,
    };

    for o in &report.outcomes {
        let path = config.out.join(format!("transcript_{}.csv", o.eval.quantizer));
        write_atomic(&path, |w| write_transcript(&o.transcript, w))?;
    }
    write_atomic(&config.out.join(KEYS_FILE), |w| {
        let mut csv = csv::Writer::from_writer(w);
        let to_err = |e: csv::Error| Error::InvalidTrace(e.to_string());
        csv.write_record(["quantizer", "role", "key_hex", "source_blocks", "leakage_bits"])
            .map_err(to_err)?;
        for k in &report.keys {
            let blocks: Vec<String> = k.source_blocks.iter().map(usize::to_string).collect();
            csv.write_record([
                k.quantizer.label(),
                k.role.label(),
                &k.key_hex,
                &blocks.join(";"),
                &k.leakage_total.to_string(),
            ])
            .map_err(to_err)?;
        }
        csv.flush().map_err(|e| Error::io(KEYS_FILE, e))
    })?;
    write_atomic(&config.out.join(REPORT_FILE), |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        w.write_all(b"\n").map_err(|e| Error::io(REPORT_FILE, e))
    })?;
    Ok(report)
}

/// Key generation rate over the configured cutoff grid, written as `kgr.csv`.
pub fn cmd_sweep(config: &RunConfig) -> Result<KgrCurve> {
    config.validate()?;
    let input = load_input(&config.input)?;
    let keygen = config.keygen();
    let sets = block_sets(&input.trace, input.eve.as_deref(), &keygen)?;
    let curve = kgr_curve(&sets, &config.cutoffs, input.trace.probe_period, keygen.key_len())
        .map_err(|e| e.at_stage("evaluate"))?;
    write_atomic(&config.out.join(PLOT_FILE), |w| curve.write_csv(w))?;
    Ok(curve)
}

/// Human-readable summary of a written report.
pub fn cmd_report(path: &Path) -> Result<String> {
    let file = if path.is_dir() {
        path.join(REPORT_FILE)
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
    let report: RunReport = serde_json::from_str(&text)?;
    Ok(summarize(&report))
}

pub fn summarize(report: &RunReport) -> String {
    let mut s = format!(
        "{} aligned of {} samples, probe period {} s, cutoff {}\n",
        report.aligned_samples, report.raw_samples, report.probe_period, report.settings.cutoff
    );
    s.push_str("quantizer   blocks accepted mean_bdr  kgr[bit/s] key_time[min] code            keys eve_bdr\n");
    for o in &report.outcomes {
        let e = &o.eval;
        s.push_str(&format!(
            "{:<11} {:>6} {:>8} {:>8.4} {:>11.4} {:>13} {:<15} {:>4} {}\n",
            e.quantizer.label(),
            e.block_count,
            e.accepted_count,
            e.mean_bdr,
            e.kgr,
            e.mean_key_time
                .map(|t| format!("{:.2}", t / 60.0))
                .unwrap_or_else(|| "-".into()),
            o.code.id(),
            o.keys.len(),
            o.eve
                .as_ref()
                .map(|v| format!("{:.4}", v.mean_bdr_ea))
                .unwrap_or_else(|| "-".into()),
        ));
    }
    s
}

#[derive(Debug, Parser)]
#[command(name = "physec", version, about = "RSSI-based secret key generation for LoRaWAN links")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic paired trace (trace.csv) and eavesdropper trace (eve.csv).
    Simulate(SimulateArgs),
    /// Run the full key generation pipeline and write report, transcripts and keys.
    Run(RunArgs),
    /// Key generation rate against the maximum accepted BDR, as plot CSV.
    Sweep(RunArgs),
    /// Summarize a report written by `run`.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulator config JSON; defaults to the indoor scenario.
    #[arg(long, value_name = "PATH")]
    pub sim: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of probes.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run config JSON; flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Paired trace CSV.
    #[arg(long, value_name = "PATH", conflicts_with = "sim")]
    pub input: Option<PathBuf>,
    /// Eavesdropper CSV accompanying --input.
    #[arg(long, value_name = "PATH", requires = "input")]
    pub eve: Option<PathBuf>,
    /// Simulate the input; optionally from a simulator config JSON.
    #[arg(long, value_name = "PATH", num_args = 0..=1, default_missing_value = "")]
    pub sim: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of simulated probes.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub quantizer: Option<QuantizerChoice>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Option<Vec<f64>>,
    #[arg(long)]
    pub enhance_degree: Option<usize>,
    /// Reconciliation code id, e.g. bch-127-50-13.
    #[arg(long)]
    pub code: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Hash each accepted block into its own key without the residual-entropy gate.
    #[arg(long)]
    pub paper_mode: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// report.json, or the directory holding it.
    #[arg(value_name = "PATH")]
    pub path: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_sim(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

impl SimulateArgs {
    pub fn resolve(&self) -> Result<SimConfig> {
        let mut cfg = match &self.sim {
            Some(p) => load_sim(p)?,
            None => SimConfig::indoor(REFERENCE_SAMPLE_COUNT, 0),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(n) = self.samples {
            cfg.n_samples = n;
        }
        Ok(cfg)
    }
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.input {
            cfg.input = InputSource::Csv {
                path: path.clone(),
                eve: self.eve.clone(),
            };
        }
        if let Some(sim) = &self.sim {
            cfg.input = InputSource::Sim(if sim.is_empty() {
                SimConfig::indoor(REFERENCE_SAMPLE_COUNT, 0)
            } else {
                load_sim(Path::new(sim))?
            });
        }
        if let InputSource::Sim(sim) = &mut cfg.input {
            if let Some(seed) = self.seed {
                sim.seed = seed;
            }
            if let Some(n) = self.samples {
                sim.n_samples = n;
            }
        } else if self.seed.is_some() || self.samples.is_some() {
            return Err(Error::config("--seed and --samples only apply to simulated input"));
        }
        if let Some(q) = self.quantizer {
            cfg.quantizer = q;
        }
        if let Some(c) = self.cutoff {
            cfg.cutoff = c;
        }
        if let Some(c) = &self.cutoffs {
            cfg.cutoffs = c.clone();
        }
        if self.enhance_degree.is_some() {
            cfg.enhance_degree = self.enhance_degree;
        }
        if self.code.is_some() {
            cfg.code = self.code.clone();
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        cfg.paper_mode |= self.paper_mode;
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.resolve()?;
            let summary = cmd_simulate(&cfg, &args.out)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "simulated {} probes (seed {}) -> {}, {}",
                summary.samples,
                cfg.seed,
                summary.trace_path.display(),
                summary.eve_path.display()
            );
        }
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let report = cmd_run(&cfg)?;
            print!("{}", summarize(&report));
            println!("wrote {}", cfg.out.join(REPORT_FILE).display());
        }
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            let curve = cmd_sweep(&cfg)?;
            curve.write_csv(std::io::stdout().lock())?;
        }
        Command::Report(args) => {
            let path = args
                .path
                .or(args.out)
                .unwrap_or_else(|| PathBuf::from("out"));
            print!("{}", cmd_report(&path)?);
        }
    }
    Ok(())
}

/// Entry point of the `physec` binary.
pub fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
