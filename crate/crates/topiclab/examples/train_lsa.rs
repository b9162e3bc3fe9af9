// Trains a rank-3 LSA model on the bundled tweets and prints the singular
// values and the strongest terms of each latent component.

use std::fs;
use std::path::Path;

use topiclab::corpus::{bow_matrix, build_vocabulary, tfidf_weight};
use topiclab::ingest::{parse_record, ParsedRecord};
use topiclab::lsa::train_lsa;
use topiclab::preprocess::{preprocess_corpus, StopwordSet};

fn main() -> anyhow::Result<()> {
    let data = Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/sample_tweets.jsonl"
    ));
    let mut docs = Vec::new();
    for line in fs::read_to_string(data)?.lines() {
        if let ParsedRecord::Tweet(doc) = parse_record(line)? {
            docs.push(doc);
        }
    }
    let (tokenized, _) = preprocess_corpus(&docs, &StopwordSet::standard(), 2, 1.0);
    let vocab = build_vocabulary(&tokenized, 2, 0.9)?;
    let tfidf = tfidf_weight(&bow_matrix(&tokenized, &vocab), &vocab);
    println!(
        "corpus: {} documents, {} terms after frequency filtering",
        tfidf.n_rows,
        vocab.len()
    );

    let model = train_lsa(&tfidf, 3, 42)?;
    println!("singular values: {:?}", model.singular_values);
    for (idx, row) in model.term_loadings.rows().into_iter().enumerate() {
        let mut terms: Vec<(usize, f64)> =
            row.iter().copied().enumerate().collect();
        terms.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap());
        let top: Vec<String> = terms
            .iter()
            .take(6)
            .map(|&(t, w)| format!("{}:{w:.3}", vocab.token(t)))
            .collect();
        println!("component {idx}: {}", top.join(" "));
    }
    Ok(())
}
