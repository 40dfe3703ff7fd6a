//! Packed rows: set algebra on 64-bit words.
//!
//! Run:
//!   cargo run --example bitpack_basics

use igdetect::bitpack::{intersect, is_subset, pack, popcount};
use igdetect::{ClassTag, PackedMatrix};

fn main() -> igdetect::Result<()> {
    // 130 bits span three words; bit 63 is the sign bit of the first.
    let len = 130;
    let x = pack([0, 5, 63, 64, 129], len)?;
    let y = pack([5, 63, 100, 129], len)?;
    let both = intersect(&x, &y)?;

    println!("x words     {:?}", x.words());
    println!("x ∩ y       {:?} ({} bits)", both.unpack(), popcount(&both));
    println!("x ∩ y ⊆ x   {}", is_subset(&both, &x)?);
    println!("y ⊆ x       {}", is_subset(&y, &x)?);

    let m = PackedMatrix::from_rows([&x, &y, &both], len, ClassTag::Attack)?;
    println!(
        "matrix: {} rows × {} words, {} logical bits, tag {}",
        m.n_rows(),
        m.words_per_row(),
        m.logical_len(),
        m.tag()
    );
    for (i, row) in m.rows().enumerate() {
        println!("  row {i}: {row:?}");
    }

    // bits past the logical length are rejected
    println!("pack bit 130 of 130: {}", pack([130], len).unwrap_err());
    Ok(())
}
