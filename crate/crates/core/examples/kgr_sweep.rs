//! Key generation rate against the maximum accepted disagreement rate.

use physec_lora::chansim::{simulate, SimConfig};
use physec_lora::keygen::{block_sets, KeygenConfig};
use physec_lora::metrics::kgr_curve;
use physec_lora::trace::align;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = SimConfig::indoor(22912, 0);
    let trace = align(&simulate(&sim)?.to_trace(sim.probe_period))?;
    let cfg = KeygenConfig::default();
    let sets = block_sets(&trace, None, &cfg)?;
    let cutoffs: Vec<f64> = (1..=25).map(|i| i as f64 / 100.0).collect();
    let curve = kgr_curve(&sets, &cutoffs, trace.probe_period, cfg.key_len())?;
    curve.write_csv(std::io::stdout().lock())?;
    Ok(())
}
