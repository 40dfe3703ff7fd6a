//! Candidate mining and cross-class purification on random data.
//!
//! Run:
//!   cargo run --release --example mine_and_purify

use igdetect::mine::{mine_class, MineProgress};
use igdetect::purify::{reject_covered, rejection_witnesses};
use igdetect::synth::random_matrix;
use igdetect::{ClassTag, KernelConfig, ParallelCpuBackend};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> igdetect::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let attack = random_matrix(&mut rng, 400, 80, 0.3, ClassTag::Attack);
    let normal = random_matrix(&mut rng, 400, 80, 0.3, ClassTag::Normal);

    let backend = ParallelCpuBackend::new(4)?;
    let cfg = KernelConfig { pair_batch: 64, ..Default::default() };
    let progress = |p: MineProgress| {
        if let Some(c) = p.candidates {
            println!("  {} pairs scanned, {c} distinct candidates", p.pairs_total);
        }
    };

    println!("attack:");
    let b_attack = mine_class(&attack, &backend, &cfg, &progress)?;
    println!("normal:");
    let b_normal = mine_class(&normal, &backend, &cfg, &progress)?;

    let top = b_attack.patterns.iter().max_by_key(|p| p.score).unwrap();
    println!(
        "best attack candidate: {} tokens, support {}, score {}",
        top.size, top.support, top.score
    );

    let witnesses = rejection_witnesses(&b_attack, &normal);
    if let Some(&(cand, row)) = witnesses.first() {
        println!(
            "{} attack candidates are covered by a normal row, e.g. candidate {cand} ⊆ normal row {row}",
            witnesses.len()
        );
    }

    let p_attack = reject_covered(b_attack, &normal, &backend, &cfg)?;
    let p_normal = reject_covered(b_normal, &attack, &backend, &cfg)?;
    println!("pure attack: {} patterns, total score {}", p_attack.len(), p_attack.total_score());
    println!("pure normal: {} patterns, total score {}", p_normal.len(), p_normal.total_score());
    assert_eq!(p_attack.first_violation(&normal), None);
    Ok(())
}
