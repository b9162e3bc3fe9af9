// Factorizes the tweet corpus with NMF and shows the monotone objective
// trace plus the top terms of each additive topic.

use std::fs;
use std::path::Path;

use topiclab::corpus::{bow_matrix, build_vocabulary, tfidf_weight};
use topiclab::ingest::{parse_record, ParsedRecord};
use topiclab::nmf::train_nmf;
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

    let model = train_nmf(&tfidf, 3, 200, 1e-6, 42)?;
    let trace = &model.objective_trace;
    println!(
        "objective: {:.6} -> {:.6} over {} iterations",
        trace.first().unwrap(),
        trace.last().unwrap(),
        model.n_iters
    );
    let monotone = trace.windows(2).all(|w| w[1] <= w[0] + 1e-10);
    println!("trace non-increasing: {monotone}");

    for (idx, row) in model.h.rows().into_iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
        terms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let top: Vec<String> = terms
            .iter()
            .take(6)
            .map(|&(t, w)| format!("{}:{w:.3}", vocab.token(t)))
            .collect();
        println!("topic {idx}: {}", top.join(" "));
    }
    Ok(())
}
