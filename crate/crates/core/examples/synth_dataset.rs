//! Writes an NSL-KDD-shaped synthetic CSV for trying the `ig` binary.
//!
//! ```text
//! cargo run --example synth_dataset -- traffic.csv 5000 7
//! ig train --data traffic.csv --label-col class --out model.json
//! ```

use igdetect::synth::nsl_like_table;

fn main() -> igdetect::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "traffic.csv".into());
    let rows: usize = args.next().and_then(|v| v.parse().ok()).unwrap_or(5000);
    let seed: u64 = args.next().and_then(|v| v.parse().ok()).unwrap_or(7);

    let table = nsl_like_table(seed, rows);
    std::fs::write(&path, table.to_csv_string()?).map_err(|e| igdetect::Error::Data(format!("{path}: {e}")))?;
    let attacks = table.records.iter().filter(|r| r[41] != "normal").count();
    println!("wrote {path}: {rows} rows, {attacks} attack, {} normal", rows - attacks);
    Ok(())
}
