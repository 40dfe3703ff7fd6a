//! Every verdict comes with the patterns that produced it.
//!
//! Run:
//!   cargo run --release --example explain_verdicts

use igdetect::infer::Regulation;
use igdetect::pipeline::SchemaOptions;
use igdetect::synth::nsl_like_table;
use igdetect::{KernelConfig, ReferenceBackend, TrainOptions, Trainer};

fn main() -> igdetect::Result<()> {
    let table = nsl_like_table(9, 700);
    let (train, test) = (table.slice(0, 300), table.slice(300, 700));
    let options = TrainOptions {
        schema: SchemaOptions { label_column: "class".into(), ..Default::default() },
        ..Default::default()
    };
    let trainer = Trainer::new(&ReferenceBackend, KernelConfig::default());
    let (model, _) = trainer.train(&train, &options)?;

    let batch = model.encode(&test)?;
    let pred = model.predict(&batch.rows, &ReferenceBackend, trainer.config())?;

    // the first row decided by each rule
    for rule in [Regulation::R1Attack, Regulation::R1Normal, Regulation::R2, Regulation::R3] {
        let Some(i) = pred.regulations.iter().position(|&r| r == rule) else {
            println!("no row decided by {rule}\n");
            continue;
        };
        let mut report = model.explain(&batch.rows.row_owned(i), &pred.params)?;
        let (na, nn) = (report.matched_attack_patterns.len(), report.matched_normal_patterns.len());
        report.matched_attack_patterns.sort_by_key(|m| -m.score);
        report.matched_normal_patterns.sort_by_key(|m| -m.score);
        report.matched_attack_patterns.truncate(3);
        report.matched_normal_patterns.truncate(3);
        println!("test row {} (truth {}), {na} attack and {nn} normal matches, top 3 each:", i + 1, test.records[i][41]);
        println!("{}", report.to_text());
    }
    Ok(())
}
