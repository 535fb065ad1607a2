//! Normalizes one simulated block pair and compares both quantizers, with and
//! without polynomial enhancement.

use physec_lora::chansim::{simulate, SimConfig};
use physec_lora::pipeline::{bdr, preprocess, Quantizer};
use physec_lora::trace::{align, segment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SimConfig::indoor(128 * 8, 3);
    let trace = align(&simulate(&cfg)?.to_trace(cfg.probe_period))?;
    let blocks = segment(&trace, 128)?;

    for degree in [None, Some(12)] {
        println!("enhancement degree {degree:?}");
        for q in Quantizer::ALL {
            let rates = blocks
                .iter()
                .map(|(a, b)| {
                    let ka = q.quantize(&preprocess(a, degree)?);
                    let kb = q.quantize(&preprocess(b, degree)?);
                    bdr(&ka, &kb)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let shown: Vec<String> = rates.iter().map(|r| format!("{r:.3}")).collect();
            println!("  {q:<10} {}", shown.join(" "));
        }
    }

    let (a, _) = &blocks[0];
    let key = Quantizer::Difference.quantize(&preprocess(a, None)?);
    println!("block 0 difference key: {}", key.bits.to_hex());
    Ok(())
}
