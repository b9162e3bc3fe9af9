// Plants four topics in a synthetic corpus, sweeps k from 2 to 7 with LDA
// and the c_v coherence measure, and checks that the sweep recovers the
// planted count.

use topiclab::coherence::{select_k_detailed, Algorithm, Measure, SelectKInputs};
use topiclab::corpus::{bow_matrix, build_vocabulary, tfidf_weight};
use topiclab::synth::{generate, SynthConfig};

fn main() -> anyhow::Result<()> {
    let config = SynthConfig {
        n_docs: 400,
        k: 4,
        vocab_size: 200,
        ..SynthConfig::default()
    };
    let corpus = generate(&config, 7);
    println!(
        "generated {} documents over {} planted topics",
        corpus.docs.len(),
        config.k
    );

    let vocab = build_vocabulary(&corpus.docs, 1, 1.0)?;
    let bow = bow_matrix(&corpus.docs, &vocab);
    let tfidf = tfidf_weight(&bow, &vocab);
    let mut inputs = SelectKInputs::new(&corpus.docs, &bow, &tfidf, &vocab);
    inputs.lda_iters = 200;

    let (result, reports) =
        select_k_detailed(Algorithm::Lda, 2..=7, Measure::Cv, &inputs, 42)?;
    println!("\n k  aggregate c_v");
    for (k, score) in &result.scores {
        let marker = if *k == result.best_k { "  <- best" } else { "" };
        println!(" {k}  {score:.4}{marker}");
    }
    let per_topic = &reports[&result.best_k].per_topic;
    println!(
        "\nper-topic scores at k={}: {:?}",
        result.best_k,
        per_topic.iter().map(|s| (s * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    );
    println!("planted k was {}", config.k);
    Ok(())
}
