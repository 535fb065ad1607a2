//! Parses a small hand-written trace with a reordered row, an unpaired sample
//! and a counter gap, then aligns and segments it.

use physec_lora::trace::{align, parse_trace_csv, segment};

const TRACE: &str = "\
uplink_counter,t,rssi_dev,rssi_gw,snr_dev,snr_gw
1,0,-81.5,-70.0,6.0,7.5
3,20,-83.0,-71.5,5.5,7.0
2,10,-82.0,-70.5,,
4,30,,-72.0,,6.5
5,40,-84.5,-73.0,5.0,6.0
7,60,-80.0,-69.5,6.5,8.0
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = parse_trace_csv(TRACE.as_bytes())?;
    println!("parsed {} rows, period {} s, meta {:?}", raw.len(), raw.probe_period, raw.meta);

    let aligned = align(&raw)?;
    println!("aligned {} rows, meta {:?}", aligned.len(), aligned.meta);
    for s in aligned.samples() {
        println!("  #{:<2} t={:<4} dev={:?} gw={:?}", s.uplink_counter, s.t, s.rssi_dev, s.rssi_gw);
    }

    let blocks = segment(&aligned, 2)?;
    println!("{} blocks of 2 samples", blocks.len());
    Ok(())
}
