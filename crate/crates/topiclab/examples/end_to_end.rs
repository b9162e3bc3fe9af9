// The full pipeline in one run: broker, keyword-filtered ingestion,
// consumption, preprocessing, LDA training, topic assignment and the
// visualization export, all driven through the command-line interface so
// every stage exchanges data through files, exactly as separate processes
// would.

use std::sync::Arc;

use topiclab::broker::{serve, Broker, BrokerConfig};
use topiclab::cli::run;

fn must(code: i32, stage: &str) {
    if code != 0 {
        panic!("{stage} exited with {code}");
    }
}

fn main() -> anyhow::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample_tweets.jsonl");
    let dir = tempfile::tempdir()?;
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    let broker = Arc::new(Broker::open(BrokerConfig {
        listen_address: "127.0.0.1:0".to_string(),
        ..BrokerConfig::default()
    })?);
    let server = serve(broker)?;
    let addr = server.addr().to_string();
    println!("broker up at {addr}");

    must(
        run(["topiclab", "ingest", "--in", data, "--addr", &addr]),
        "ingest",
    );
    let consumed = p("tweets.jsonl");
    must(
        run(["topiclab", "consume", "--addr", &addr, "--out", &consumed]),
        "consume",
    );
    let tokens = p("tokens.jsonl");
    must(
        run([
            "topiclab",
            "preprocess",
            "--in",
            &consumed,
            "--min-count",
            "2",
            "--threshold",
            "1.0",
            "--out",
            &tokens,
        ]),
        "preprocess",
    );
    let model = p("model.tlab");
    let vocab = p("vocab.tsv");
    must(
        run([
            "topiclab",
            "train",
            "--algo",
            "lda",
            "--k",
            "3",
            "--seed",
            "42",
            "--iters",
            "500",
            "--no-below",
            "2",
            "--no-above",
            "0.9",
            "--in",
            &tokens,
            "--out",
            &model,
            "--vocab-out",
            &vocab,
        ]),
        "train",
    );
    let assignments = p("assignments.csv");
    must(
        run([
            "topiclab",
            "infer",
            "--model",
            &model,
            "--vocab",
            &vocab,
            "--in",
            &tokens,
            "--seed",
            "42",
            "--out",
            &assignments,
        ]),
        "infer",
    );
    must(
        run(["topiclab", "histogram", "--assignments", &assignments]),
        "histogram",
    );
    let vis = p("vis.json");
    must(
        run([
            "topiclab",
            "export-vis",
            "--model",
            &model,
            "--vocab",
            &vocab,
            "--in",
            &tokens,
            "--out",
            &vis,
        ]),
        "export-vis",
    );

    server.shutdown();
    println!("\nartifacts:");
    for name in ["tweets.jsonl", "tokens.jsonl", "model.tlab", "vocab.tsv", "assignments.csv", "vis.json"] {
        let path = dir.path().join(name);
        println!("  {name}: {} bytes", std::fs::metadata(&path)?.len());
    }
    Ok(())
}
