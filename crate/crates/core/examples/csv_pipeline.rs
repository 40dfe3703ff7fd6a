//! From CSV text to packed class matrices: typing, z-score tokens,
//! vocabulary, contradiction filtering, and test-time encoding.
//!
//! Run:
//!   cargo run --example csv_pipeline

use igdetect::pipeline::{encode_dataset, encode_rows, infer_schema, RawTable, SchemaOptions};

const TRAIN: &str = "\
duration,protocol,bytes,note,label
0,tcp,215,\"plain, quoted\",normal
0,tcp,162,,normal
2,udp,105,,neptune
0,tcp,162,,smurf
1,icmp,1032,\"say \"\"hi\"\"\",neptune
";

const TEST: &str = "\
protocol,duration,bytes,note
tcp,0,215,brand new
sctp,9,0,
";

fn main() -> igdetect::Result<()> {
    let train = RawTable::parse_str(TRAIN)?;
    let schema = infer_schema(&train, &SchemaOptions::default())?;
    for c in &schema.columns {
        println!("{:>9}: {:?}", c.name, c.kind);
    }

    let enc = encode_dataset(&train, &schema, None)?;
    println!("\nvocabulary ({} tokens): {:?}", enc.vocabulary.len(), enc.vocabulary.tokens());
    let filter = enc.filter.as_ref().unwrap();
    println!("removed rows {:?}, seen under both labels: {:?}", filter.removed, filter.contradicted);
    println!("attack rows {:?}, normal rows {:?}", enc.attack_rows, enc.normal_rows);

    // columns are matched by name; unknown tokens are dropped
    let test = RawTable::parse_str(TEST)?;
    let batch = encode_rows(&test, &schema, &enc.vocabulary)?;
    for i in 0..batch.rows.n_rows() {
        println!("test row {}: {:?}", i + 1, enc.vocabulary.tokens_of(&batch.rows.row_owned(i))?);
    }
    Ok(())
}
