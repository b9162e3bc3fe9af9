// Trains LDA on the tweet corpus and exports the browsing bundle: topic
// proportions, 2-D topic map, saliency-ranked default terms and
// relevance-ranked per-topic terms.

use std::fs;
use std::path::Path;

use topiclab::corpus::{bow_matrix, build_vocabulary};
use topiclab::ingest::{parse_record, ParsedRecord};
use topiclab::lda::{default_alpha, train_lda};
use topiclab::preprocess::{preprocess_corpus, StopwordSet};
use topiclab::visexport::{export_vis, write_vis_file, DEFAULT_LAMBDA};

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
    let model = train_lda(&bow, 3, default_alpha(3), 0.01, 500, 42)?;

    let vis = export_vis(&model, &bow, &vocab, DEFAULT_LAMBDA)?;
    println!("topic map (proportion, x, y):");
    for t in &vis.topics {
        println!(
            "  topic {}: {:.1}% at ({:+.4}, {:+.4})",
            t.id,
            t.proportion * 100.0,
            t.x,
            t.y
        );
    }
    println!("\nmost salient terms overall:");
    for term in vis.default_terms.iter().take(8) {
        println!(
            "  {:<14} saliency {:.4}  corpus freq {:.1}",
            term.token, term.saliency, term.corpus_frequency
        );
    }
    println!("\ntopic 1 by relevance (lambda = {}):", vis.lambda);
    for term in vis.per_topic_terms[0].iter().take(8) {
        println!(
            "  {:<14} est freq {:.1} of {:.1}",
            term.token, term.estimated_frequency, term.corpus_frequency
        );
    }

    let out = std::env::temp_dir().join("topiclab_vis.json");
    write_vis_file(&vis, &out)?;
    println!("\nwrote {}", out.display());
    Ok(())
}
