//! The nine train/test ratios on one dataset, as a table.
//!
//! Run:
//!   cargo run --release --example ratio_benchmark -- [rows]

use igdetect::eval::{render_table, run_benchmark, BenchOptions, Ratio};
use igdetect::pipeline::SchemaOptions;
use igdetect::synth::nsl_like_table;
use igdetect::{KernelConfig, ParallelCpuBackend, TrainOptions, Trainer};

fn main() -> igdetect::Result<()> {
    let rows: usize = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(800);
    let table = nsl_like_table(77, rows);
    let backend = ParallelCpuBackend::new(std::thread::available_parallelism().map_or(1, |n| n.get()))?;
    let trainer = Trainer::new(&backend, KernelConfig::default());
    let options = BenchOptions {
        train: TrainOptions {
            schema: SchemaOptions { label_column: "class".into(), ..Default::default() },
            ..Default::default()
        },
        shuffle_seed: Some(1),
    };
    let outcomes = run_benchmark(&table, &Ratio::all(), &trainer, &options);
    print!("{}", render_table(&outcomes));
    Ok(())
}
