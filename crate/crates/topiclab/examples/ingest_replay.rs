// Replays the bundled tweet file into an in-process broker, keeping only
// records that match the health keyword list, then consumes them back as
// parsed documents.

use std::path::Path;
use std::sync::Arc;

use topiclab::broker::{serve, Broker, BrokerConfig};
use topiclab::ingest::{consume_documents, replay_produce, KeywordSet};

fn main() -> anyhow::Result<()> {
    let data = Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/sample_tweets.jsonl"
    ));
    let config = BrokerConfig {
        listen_address: "127.0.0.1:0".to_string(),
        ..BrokerConfig::default()
    };
    let broker = Arc::new(Broker::open(config)?);
    let server = serve(broker)?;

    let keywords = KeywordSet::standard();
    println!("tracking {} keywords", keywords.len());

    let published = replay_produce(data, server.addr(), "health_tweets", &keywords)?;
    println!("published {published} matching tweets");

    let docs = consume_documents(server.addr(), "health_tweets", 0)?;
    println!("consumed {} documents:", docs.len());
    for doc in docs.iter().take(5) {
        let kw: Vec<&str> = doc.matched_keywords.iter().map(|s| s.as_str()).collect();
        println!("  [{}] {:?} {}", doc.id, kw, doc.text);
    }
    println!("  ...");

    server.shutdown();
    Ok(())
}
