// Trains skip-gram embeddings with negative sampling on the tweet corpus
// and prints nearest neighbors for a few health terms, then scores one
// topic's term list with the embedding-based coherence measure.

use std::fs;
use std::path::Path;

use topiclab::coherence::sgns::{train_sgns, DEFAULT_LR, DEFAULT_NEGATIVES};
use topiclab::coherence::{tcw2v_coherence, Algorithm};
use topiclab::ingest::{parse_record, ParsedRecord};
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

    // Small dimension and many epochs suit this tiny corpus.
    let table = train_sgns(&tokenized, 24, 3, DEFAULT_NEGATIVES, 40, DEFAULT_LR, 42);
    println!("trained {}-dim vectors for {} tokens", table.dim, table.vectors.len());

    for probe in ["yoga", "diet", "swim"] {
        if !table.vectors.contains_key(probe) {
            continue;
        }
        let mut sims: Vec<(&str, f64)> = table
            .vectors
            .keys()
            .filter(|t| t.as_str() != probe)
            .map(|t| (t.as_str(), table.cosine(probe, t).unwrap()))
            .collect();
        sims.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let top: Vec<String> = sims
            .iter()
            .take(5)
            .map(|(t, s)| format!("{t} ({s:.2})"))
            .collect();
        println!("  {probe:<6} -> {}", top.join(", "));
    }

    let topic_terms = vec![vec![
        "yoga".to_string(),
        "pilat".to_string(),
        "fit".to_string(),
        "workout".to_string(),
    ]];
    let report = tcw2v_coherence(Algorithm::Lda, &topic_terms, &table);
    println!(
        "\ntcw2v coherence of {:?}: {:.3}",
        topic_terms[0], report.aggregate
    );
    Ok(())
}
