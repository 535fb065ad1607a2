//! Randomness tests and entropy-gated amplification of reconciled blocks.

use physec_lora::amplify::{test_randomness, AmplifyPolicy, KeyAccumulator, KeyRole, ReconciledBlock, DEFAULT_ALPHA};
use physec_lora::reconcile::{default_codes, VERIFY_DIGEST_BITS};
use physec_lora::Bits;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let code = default_codes().by_id("bch-127-50-13").ok_or("unknown code")?;
    let leakage = code.parity_bits() + VERIFY_DIGEST_BITS;

    for (name, key) in [
        ("all ones", Bits::new(vec![true; 128])),
        ("alternating", (0..128).map(|i| i % 2 == 1).collect()),
    ] {
        println!("{name:<12} {:?}", test_randomness(&key, DEFAULT_ALPHA)?);
    }

    for policy in [AmplifyPolicy::EntropyGated, AmplifyPolicy::PaperMode] {
        let mut acc = KeyAccumulator::new(policy);
        let mut emitted = 0;
        for block_index in 0..16 {
            let bits: Bits = (0..127).map(|_| rng.random::<bool>()).collect();
            if let Some(key) = acc.push(ReconciledBlock { block_index, bits }, leakage) {
                println!(
                    "{policy:?}: {} from blocks {:?} = {}",
                    KeyRole::for_sequence(emitted).label(),
                    key.source_blocks,
                    key.to_hex()
                );
                emitted += 1;
            }
        }
        println!("{policy:?}: {emitted} keys, residual {} bits pending", acc.residual_bits());
    }
    Ok(())
}
