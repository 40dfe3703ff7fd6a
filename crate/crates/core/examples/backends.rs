//! Reference and parallel-cpu backends side by side: identical results, different speed.
//!
//! Run:
//!   cargo run --release --example backends -- [rows] [workers]

use std::time::Instant;

use igdetect::synth::random_matrix;
use igdetect::{select_backend, ClassTag, KernelConfig, PackedMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> igdetect::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|v| v.parse().ok()).unwrap_or(2000);
    let workers: usize = args
        .next()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |c| c.get()));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows = random_matrix(&mut rng, n, 300, 0.2, ClassTag::Attack);
    let tests = random_matrix(&mut rng, n, 300, 0.4, ClassTag::Unlabeled);
    let patterns = neighbour_intersections(&rows)?;
    let scores: Vec<i64> = (0..patterns.n_rows() as i64).collect();
    let cfg = KernelConfig::default();
    println!("{n} rows, {} words/row, pair window {}", rows.words_per_row(), cfg.effective_pair_batch(rows.words_per_row()));

    let mut results = Vec::new();
    for name in ["reference", "parallel-cpu"] {
        let backend = select_backend(name, workers)?;
        let t = Instant::now();
        let pairs = backend.pair_intersect_batch(&rows, 0, 1..n)?;
        let covered = backend.coverage_any(&patterns, &tests, &cfg)?;
        let counts = backend.coverage_count(&patterns, &tests, &cfg)?;
        let fused = backend.fused_score(&patterns, &scores, &tests, &cfg)?;
        println!(
            "{name:>12}: {:?}, {} covered, {} total hits",
            t.elapsed(),
            covered.iter().filter(|&&c| c).count(),
            counts.iter().sum::<u64>()
        );
        results.push((pairs, covered, counts, fused));
    }
    println!("bit-identical: {}", results[0] == results[1]);

    match select_backend("gpu", 1) {
        Err(e) => println!("{e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}

/// Intersections of neighbouring rows: realistic, sparse patterns.
fn neighbour_intersections(m: &PackedMatrix) -> igdetect::Result<PackedMatrix> {
    let mut out = PackedMatrix::empty(m.logical_len(), ClassTag::Attack);
    for i in 1..m.n_rows() {
        out.push(&m.row_owned(i - 1).intersect(&m.row_owned(i))?)?;
    }
    Ok(out)
}
