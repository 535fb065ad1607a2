//! Full run through the same entry points as `physec run`: simulate, quantize,
//! reconcile, test and amplify, writing report and key files to a directory.
//!
//! cargo run --example end_to_end -- [out_dir]

use physec_lora::chansim::{SimConfig, REFERENCE_SAMPLE_COUNT};
use physec_lora::cli::{cmd_run, summarize, InputSource, QuantizerChoice, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/end_to_end".into());
    let config = RunConfig {
        input: InputSource::Sim(SimConfig::indoor(REFERENCE_SAMPLE_COUNT, 11)),
        quantizer: QuantizerChoice::Difference,
        cutoff: 0.1,
        out: out.into(),
        ..RunConfig::default()
    };
    let report = cmd_run(&config)?;
    print!("{}", summarize(&report));
    for key in &report.keys {
        println!("{:<10} {} blocks {:?}", key.role.label(), key.key_hex, key.source_blocks);
    }
    println!("files in {}", config.out.display());
    Ok(())
}
