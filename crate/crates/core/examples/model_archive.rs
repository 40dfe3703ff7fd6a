//! Save a trained model, load it back, and check nothing changed.
//!
//! Run:
//!   cargo run --release --example model_archive

use igdetect::pipeline::SchemaOptions;
use igdetect::synth::nsl_like_table;
use igdetect::{KernelConfig, ModelArchive, Provenance, ReferenceBackend, TrainOptions, Trainer};

fn main() -> igdetect::Result<()> {
    let table = nsl_like_table(5, 400);
    let csv = table.to_csv_string()?;
    let options = TrainOptions {
        schema: SchemaOptions { label_column: "class".into(), ..Default::default() },
        ..Default::default()
    };
    let trainer = Trainer::new(&ReferenceBackend, KernelConfig::default());
    let (model, _) = trainer.train(&table.slice(0, 200), &options)?;

    let dir = tempfile::tempdir().expect("temporary directory");
    let path = dir.path().join("model.json");
    let archive = ModelArchive::new(model, Provenance::for_input(csv.as_bytes()));
    archive.save(&path)?;
    let loaded = ModelArchive::load(&path)?;

    let bytes = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
    println!("saved {} ({bytes} bytes)", path.display());
    println!("provenance: {:?}", loaded.provenance);
    println!("vocabulary: {} tokens", loaded.model.vocabulary.len());
    println!("identical after load: {}", loaded == archive);
    println!("re-serialized byte-identical: {}", loaded.to_json()? == archive.to_json()?);

    let test = table.slice(200, 400);
    let before = archive.model.predict(&archive.model.encode(&test)?.rows, &ReferenceBackend, trainer.config())?;
    let after = loaded.model.predict(&loaded.model.encode(&test)?.rows, &ReferenceBackend, trainer.config())?;
    println!("same predictions: {}", before == after);
    Ok(())
}
