//! How much an eavesdropper learns as her channel correlation with the
//! legitimate link grows.

use physec_lora::chansim::{simulate, SimConfig};
use physec_lora::keygen::{block_sets, KeygenConfig};
use physec_lora::metrics::{eve_advantage, EveTarget};
use physec_lora::trace::align;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = KeygenConfig::default();
    println!("eve_corr  quantizer   mean_bdr_ea  close_fraction  flagged");
    for eve_corr in [0.0, 0.5, 0.9, 0.99, 1.0] {
        let sim = SimConfig { eve_corr, ..SimConfig::indoor(128 * 100, 4) };
        let link = simulate(&sim)?;
        let trace = align(&link.to_trace(sim.probe_period))?;
        for set in block_sets(&trace, Some(&link.eve), &cfg)? {
            let s = eve_advantage(&set, EveTarget::Alice)?;
            println!(
                "{eve_corr:<9} {:<11} {:<12.4} {:<15.3} {}",
                set.quantizer.label(),
                s.mean_bdr_ea,
                s.close_fraction,
                s.flagged
            );
        }
    }
    Ok(())
}
