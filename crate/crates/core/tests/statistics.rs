use physec_lora::amplify::{amplify, key_context, ReconciledBlock};
use physec_lora::chansim::{simulate, SimConfig};
use physec_lora::keygen::{block_sets, KeygenConfig};
use physec_lora::metrics::evaluate;
use physec_lora::pipeline::{bdr_bits, Quantizer};
use physec_lora::trace::align;
use physec_lora::Bits;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> Bits {
    (0..len).map(|_| rng.random::<bool>()).collect()
}

#[test]
fn single_bit_flip_avalanches() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 1000;
    let mut total = 0usize;
    for _ in 0..trials {
        let blocks = vec![
            ReconciledBlock { block_index: 0, bits: random_bits(&mut rng, 127) },
            ReconciledBlock { block_index: 1, bits: random_bits(&mut rng, 127) },
        ];
        let ctx = key_context(&[0, 1]);
        let base = amplify(&blocks, 0, &ctx).unwrap();
        let mut flipped = blocks.clone();
        let which = rng.random_range(0..2);
        flipped[which].bits.flip(rng.random_range(0..127));
        let other = amplify(&flipped, 0, &ctx).unwrap();
        let d = base.bits.hamming(&other.bits).unwrap();
        assert!((40..=88).contains(&d), "{d}");
        total += d;
    }
    let mean = total as f64 / trials as f64;
    assert!((60.0..=68.0).contains(&mean), "{mean}");
}

#[test]
fn independent_random_keys_disagree_half_the_time() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 2000;
    let mean: f64 = (0..n)
        .map(|_| bdr_bits(&random_bits(&mut rng, 128), &random_bits(&mut rng, 128)).unwrap())
        .sum::<f64>()
        / n as f64;
    assert!((mean - 0.5).abs() <= 0.02, "{mean}");
}

fn mean_bdr(noise_bob: f64, quantizer: Quantizer) -> f64 {
    let cfg = KeygenConfig { quantizers: vec![quantizer], ..KeygenConfig::default() };
    let seeds = 5;
    (0..seeds)
        .map(|seed| {
            let sim = SimConfig { noise_std_bob: noise_bob, ..SimConfig::indoor(128 * 40, seed) };
            let trace = align(&simulate(&sim).unwrap().to_trace(sim.probe_period)).unwrap();
            let sets = block_sets(&trace, None, &cfg).unwrap();
            evaluate(&sets[0], 0.25, sim.probe_period, 128).unwrap().mean_bdr
        })
        .sum::<f64>()
        / seeds as f64
}

#[test]
fn bob_noise_never_improves_agreement() {
    for q in Quantizer::ALL {
        let curve: Vec<f64> = [0.05, 0.3, 1.0].iter().map(|&s| mean_bdr(s, q)).collect();
        assert!(curve.windows(2).all(|w| w[0] <= w[1]), "{q}: {curve:?}");
    }
}

#[test]
fn calibrated_indoor_link_hits_target_rates() {
    let cfg = KeygenConfig { quantizers: vec![Quantizer::Difference], ..KeygenConfig::default() };
    let (mut bdr, mut kgr) = (0.0, 0.0);
    for seed in 0..4 {
        let sim = SimConfig::indoor(22912, seed);
        let trace = align(&simulate(&sim).unwrap().to_trace(sim.probe_period)).unwrap();
        let sets = block_sets(&trace, None, &cfg).unwrap();
        let eval = evaluate(&sets[0], 0.20, sim.probe_period, 128).unwrap();
        bdr += eval.mean_bdr / 4.0;
        kgr += eval.kgr / 4.0;
    }
    assert!((bdr - 0.1165).abs() < 0.01, "{bdr}");
    assert!((0.07..=0.1).contains(&kgr), "{kgr}");
}
