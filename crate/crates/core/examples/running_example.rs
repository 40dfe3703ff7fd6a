//! The five-token hand example, end to end at library level.
//!
//! Attack rows {abc, abd, acd}, normal rows {abe, cde}, probes {acde, abe, b}.
//!
//! Run:
//!   cargo run --example running_example

use igdetect::infer::{evidence_scores, explain, fit_normal_stats, DEFAULT_R};
use igdetect::mine::mine_class;
use igdetect::pipeline::build_vocabulary;
use igdetect::purify::reject_covered;
use igdetect::{ClassTag, KernelConfig, PackedMatrix, ReferenceBackend};

fn rows(vocab: &igdetect::pipeline::TokenVocabulary, sets: &[&str], tag: ClassTag) -> PackedMatrix {
    let mut m = PackedMatrix::empty(vocab.len(), tag);
    for set in sets {
        let tokens: Vec<String> = set.chars().map(|c| format!("{}:{c}", c as u8 - b'a')).collect();
        m.push(&vocab.pack(&tokens)).unwrap();
    }
    m
}

fn main() -> igdetect::Result<()> {
    let vocab = build_vocabulary([["0:a", "1:b", "2:c", "3:d", "4:e"]]);
    let attack = rows(&vocab, &["abc", "abd", "acd"], ClassTag::Attack);
    let normal = rows(&vocab, &["abe", "cde"], ClassTag::Normal);
    let probes = rows(&vocab, &["acde", "abe", "b"], ClassTag::Unlabeled);

    let backend = ReferenceBackend;
    let cfg = KernelConfig::default();
    let b_attack = mine_class(&attack, &backend, &cfg, &|_| {})?;
    let b_normal = mine_class(&normal, &backend, &cfg, &|_| {})?;
    println!("candidates: {} attack, {} normal", b_attack.len(), b_normal.len());

    let p_attack = reject_covered(b_attack, &normal, &backend, &cfg)?;
    let p_normal = reject_covered(b_normal, &attack, &backend, &cfg)?;
    for dict in [&p_attack, &p_normal] {
        println!("pure {} dictionary (total score {}):", dict.class(), dict.total_score());
        for p in dict.patterns() {
            println!("  {:?} support={} score={}", vocab.tokens_of(&p.bits)?, p.support, p.score);
        }
    }

    let (a, n) = evidence_scores(&probes, &p_attack, &p_normal, &backend, &cfg)?;
    let params = fit_normal_stats(&n, DEFAULT_R);
    println!("N statistics: mu={} sigma={} threshold={}", params.mu_n, params.sigma_n, params.threshold());
    for i in 0..probes.n_rows() {
        let report = explain(&probes.row_owned(i), &p_attack, &p_normal, &vocab, &params)?;
        assert_eq!((report.abnormal_score, report.normal_score), (a[i], n[i]));
        print!("probe {}: {}", i + 1, report.to_text());
    }
    Ok(())
}
