//! Simulates the calibrated indoor link and prints per-party statistics.
//!
//! cargo run --example simulate_link -- [seed]

use physec_lora::chansim::{schedule, simulate, SimConfig};

fn stats(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let ((ma, sa), (mb, sb)) = (stats(a), stats(b));
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 * sa * sb)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let cfg = SimConfig::indoor(22912, seed);
    for warning in cfg.validate()? {
        eprintln!("warning: {warning}");
    }
    let instants = schedule(&cfg)?;
    println!("first probes (uplink, downlink): {:?}", &instants[..3]);

    let link = simulate(&cfg)?;
    for (name, xs) in [("alice", &link.alice), ("bob", &link.bob), ("eve", &link.eve)] {
        let (mean, std) = stats(xs);
        println!("{name:<5} mean {mean:8.2} dBm  std {std:5.2} dB");
    }
    println!("corr(alice, bob) = {:.4}", corr(&link.alice, &link.bob));
    println!("corr(alice, eve) = {:.4}", corr(&link.alice, &link.eve));
    println!("reciprocity correlation of the delayed sample: {:.4}", cfg.reciprocity_corr());
    Ok(())
}
