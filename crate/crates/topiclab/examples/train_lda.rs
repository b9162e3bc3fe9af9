// Trains LDA with collapsed Gibbs sampling on the tweet corpus, printing
// per-topic term lists, a few document assignments and the corpus log
// likelihood of the final state.

use std::fs;
use std::path::Path;

use topiclab::corpus::{bow_matrix, build_vocabulary};
use topiclab::ingest::{parse_record, ParsedRecord};
use topiclab::lda::{corpus_log_likelihood, default_alpha, dominant_topics, train_lda};
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
    let bow = bow_matrix(&tokenized, &vocab);

    let k = 3;
    let model = train_lda(&bow, k, default_alpha(k), 0.01, 500, 42)?;
    println!(
        "trained k={k}, alpha={:.2}, beta={}, {} sweeps",
        model.alpha, model.beta, model.n_iters
    );
    println!(
        "corpus log likelihood: {:.2}",
        corpus_log_likelihood(&model.phi, &model.theta_train, &bow)
    );

    for (t, row) in model.phi.rows().into_iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
        terms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let top: Vec<&str> = terms.iter().take(8).map(|&(w, _)| vocab.token(w)).collect();
        println!("topic {}: {}", t + 1, top.join(" "));
    }

    println!("\nsample assignments:");
    for (d, doc) in tokenized.iter().enumerate().take(5) {
        let theta: Vec<f64> = model.theta_train.row(d).to_vec();
        let a = dominant_topics(&theta, &doc.doc_id);
        println!(
            "  [{}] topic {} ({:.0}%)",
            a.doc_id,
            a.dominant_topic + 1,
            a.dominant_pct
        );
    }
    Ok(())
}
