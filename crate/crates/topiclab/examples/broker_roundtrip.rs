// Starts the log broker on a loopback port, publishes a few messages over
// the TCP line protocol and fetches them back, showing dense offsets and
// the payload size limit.

use std::sync::Arc;

use topiclab::broker::{serve, Broker, BrokerConfig, Client, ClientError};

fn main() -> anyhow::Result<()> {
    let config = BrokerConfig {
        listen_address: "127.0.0.1:0".to_string(),
        ..BrokerConfig::default()
    };
    let max_payload = config.max_payload_bytes;
    let broker = Arc::new(Broker::open(config)?);
    let server = serve(broker)?;
    println!("broker listening on {}", server.addr());

    let mut client = Client::connect(server.addr())?;
    for text in ["first", "second", "third"] {
        let offset = client.publish("demo", text.as_bytes())?;
        println!("PUB demo {text:?} -> offset {offset}");
    }
    client.publish("other", b"lonely message")?;

    let records = client.fetch("demo", 0, 10)?;
    println!("FETCH demo from 0:");
    for (offset, payload) in &records {
        println!("  offset {offset}: {}", String::from_utf8_lossy(payload));
    }

    println!("TOPICS:");
    for (name, next_offset) in client.topics()? {
        println!("  {name} (next offset {next_offset})");
    }

    let oversized = vec![b'x'; max_payload + 1];
    match client.publish("demo", &oversized) {
        Err(ClientError::Server(code)) => println!("oversized publish rejected: {code}"),
        other => println!("unexpected result for oversized publish: {other:?}"),
    }

    server.shutdown();
    Ok(())
}
