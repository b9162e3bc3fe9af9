// Trains LDA on one synthetic corpus slice, folds held-out documents in
// with frozen topics, aligns the learned topics to the planted ones, and
// scores the assignments against the gold labels alongside the random
// baseline and a topic histogram.

use topiclab::corpus::{bow_matrix, build_vocabulary, doc_to_bow};
use topiclab::eval::{accuracy, random_baseline, topic_histogram};
use topiclab::lda::{default_alpha, dominant_topics, infer_theta, train_lda};
use topiclab::synth::{generate, SynthConfig};

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn main() -> anyhow::Result<()> {
    let config = SynthConfig {
        n_docs: 500,
        k: 4,
        vocab_size: 300,
        ..SynthConfig::default()
    };
    let corpus = generate(&config, 11);
    let split = 400;
    let train_docs = &corpus.docs[..split];
    let held_out = &corpus.docs[split..];

    let vocab = build_vocabulary(train_docs, 1, 1.0)?;
    let bow = bow_matrix(train_docs, &vocab);
    let model = train_lda(&bow, config.k, default_alpha(config.k), 0.01, 400, 3)?;
    println!("trained on {split} documents, holding out {}", held_out.len());

    // Trained topic indices are arbitrary, so match each learned topic to
    // its closest planted topic before comparing labels.
    let phi_star = corpus.phi_star_for_vocab(&vocab);
    let mut to_planted = vec![0usize; config.k];
    for t in 0..config.k {
        let row: Vec<f64> = model.phi.row(t).to_vec();
        let (best, score) = (0..config.k)
            .map(|p| (p, cosine(&row, &phi_star.row(p).to_vec())))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        println!("learned topic {} ~ planted topic {} (cosine {score:.3})", t + 1, best + 1);
        to_planted[t] = best;
    }

    let mut assignments = Vec::new();
    for (idx, doc) in held_out.iter().enumerate() {
        let theta = infer_theta(&model, &doc_to_bow(doc, &vocab), 100, 1000 + idx as u64)?;
        let mut a = dominant_topics(&theta, &doc.doc_id);
        a.dominant_topic = to_planted[a.dominant_topic];
        a.second_topic = a.second_topic.map(|t| to_planted[t]);
        assignments.push(a);
    }

    let gold = &corpus.gold[split..];
    let report = accuracy(&assignments, gold)?;
    println!(
        "\nheld-out accuracy: top1={:.3} top2={:.3} over n={}",
        report.top1_accuracy, report.top2_accuracy, report.n
    );
    let chance = random_baseline(config.k, report.n, 500, 99);
    println!("random baseline at k={}: {:.3}", config.k, chance);

    let (dominant, second) = topic_histogram(&assignments, config.k);
    println!("\ntopic  dominant  second");
    for topic in dominant.keys() {
        println!("  {topic}       {:>3}     {:>3}", dominant[topic], second[topic]);
    }

    println!("\nconfusion matrix (rows: gold, cols: predicted):");
    for (g, row) in report.per_topic_confusion.iter().enumerate() {
        println!("  gold {}: {row:?}", g + 1);
    }
    Ok(())
}
