//! Train on one slice of synthetic traffic, score another, compare the two
//! sources of normal-evidence statistics.
//!
//! Run:
//!   cargo run --release --example train_and_predict

use igdetect::eval::compute_metrics;
use igdetect::infer::StatsMode;
use igdetect::pipeline::SchemaOptions;
use igdetect::synth::nsl_like_table;
use igdetect::{KernelConfig, ParallelCpuBackend, TrainOptions, Trainer};

fn main() -> igdetect::Result<()> {
    let table = nsl_like_table(2024, 3000);
    let (train, test) = (table.slice(0, 600), table.slice(600, 3000));
    let backend = ParallelCpuBackend::new(std::thread::available_parallelism().map_or(1, |n| n.get()))?;
    let trainer = Trainer::new(&backend, KernelConfig::default());

    for stats_mode in [StatsMode::Batch, StatsMode::Train] {
        let options = TrainOptions {
            schema: SchemaOptions { label_column: "class".into(), ..Default::default() },
            stats_mode,
            ..Default::default()
        };
        let (model, summary) = trainer.train(&train, &options)?;
        let batch = model.encode(&test)?;
        let pred = model.predict(&batch.rows, &backend, trainer.config())?;
        let m = compute_metrics(&pred.labels, batch.labels.as_ref().unwrap(), &pred.margins())?;

        println!("stats from {stats_mode:?}:");
        println!(
            "  {} + {} pure patterns from {} + {} candidates, mined in {:.2}s",
            summary.pure_attack, summary.pure_normal, summary.candidates_attack, summary.candidates_normal, summary.times.mine
        );
        println!(
            "  threshold {:.1} (mu {:.1}, sigma {:.1}, r {})",
            pred.params.threshold(),
            pred.params.mu_n,
            pred.params.sigma_n,
            pred.params.r
        );
        println!(
            "  accuracy {:.4}  recall {:.4}  precision {:.4}  f1 {:.4}  rank AUC {:.4}",
            m.accuracy, m.recall, m.precision, m.f1, m.rank_auc
        );
    }
    Ok(())
}
