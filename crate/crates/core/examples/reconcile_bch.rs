//! Code-offset reconciliation of one block: Alice sends a BCH syndrome and a
//! short digest, Bob corrects his disagreeing bits.

use physec_lora::pipeline::PreliminaryKey;
use physec_lora::reconcile::{alice_message, pick_code, reconcile};
use physec_lora::trace::Party;
use physec_lora::Bits;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let code = pick_code(0.12, 128)?;
    println!("{}: n={} k={} t={}, covers BDR up to {:.3}", code.id(), code.n(), code.k(), code.t(), code.params().rate_covered());

    let alice: Bits = (0..128).map(|_| rng.random::<bool>()).collect();
    for errors in [code.t(), code.t() + 4] {
        let mut bob = alice.clone();
        let mut hit = std::collections::BTreeSet::new();
        while hit.len() < errors {
            hit.insert(rng.random_range(0..code.n()));
        }
        hit.iter().for_each(|&i| bob.flip(i));

        let msg = alice_message(&PreliminaryKey { bits: alice.clone(), party: Party::Alice, block_index: 0 }, &code)?;
        let res = reconcile(&PreliminaryKey { bits: bob, party: Party::Bob, block_index: 0 }, &msg, &code)?;
        println!(
            "{errors:>2} errors: success={} corrected={} disclosed={} bits, syndrome {}",
            res.success,
            res.corrected_errors,
            res.total_leakage(),
            msg.syndrome.to_hex()
        );
    }
    Ok(())
}
