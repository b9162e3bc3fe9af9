//! Line-protocol client. One connection per client, safe to use from one
//! thread at a time.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("server error: {0}")]
    Server(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
}

pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Client> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Client {
            reader: BufReader::new(stream.try_clone()?),
            writer: stream,
        })
    }

    fn send(&mut self, line: &str) -> Result<(), ClientError> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        Ok(())
    }

    fn recv(&mut self) -> Result<Vec<String>, ClientError> {
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Err(ClientError::Protocol("connection closed".to_string()));
        }
        Ok(line.split_whitespace().map(str::to_string).collect())
    }

    /// Publishes one payload and returns its offset.
    pub fn publish(&mut self, topic: &str, payload: &[u8]) -> Result<u64, ClientError> {
        check_topic(topic)?;
        if payload.is_empty() {
            self.send(&format!("PUB {topic}"))?;
        } else {
            self.send(&format!("PUB {topic} {}", BASE64.encode(payload)))?;
        }
        let reply = self.recv()?;
        match reply.as_slice() {
            [ok, offset] if ok == "OK" => offset
                .parse()
                .map_err(|_| ClientError::Protocol(format!("bad offset {offset:?}"))),
            [err, code] if err == "ERR" => Err(ClientError::Server(code.clone())),
            other => Err(ClientError::Protocol(format!("unexpected reply {other:?}"))),
        }
    }

    /// Fetches up to `max_count` records from `from_offset` on.
    pub fn fetch(
        &mut self,
        topic: &str,
        from_offset: u64,
        max_count: u64,
    ) -> Result<Vec<(u64, Vec<u8>)>, ClientError> {
        check_topic(topic)?;
        self.send(&format!("FETCH {topic} {from_offset} {max_count}"))?;
        let mut records = Vec::new();
        loop {
            let reply = self.recv()?;
            match reply.as_slice() {
                [end] if end == "END" => return Ok(records),
                [err, code] if err == "ERR" => return Err(ClientError::Server(code.clone())),
                [msg, offset] if msg == "MSG" => {
                    let offset = offset
                        .parse()
                        .map_err(|_| ClientError::Protocol(format!("bad offset {offset:?}")))?;
                    records.push((offset, Vec::new()));
                }
                [msg, offset, b64] if msg == "MSG" => {
                    let offset = offset
                        .parse()
                        .map_err(|_| ClientError::Protocol(format!("bad offset {offset:?}")))?;
                    let payload = BASE64
                        .decode(b64)
                        .map_err(|e| ClientError::Protocol(format!("bad payload: {e}")))?;
                    records.push((offset, payload));
                }
                other => return Err(ClientError::Protocol(format!("unexpected reply {other:?}"))),
            }
        }
    }

    /// Lists all topics with their next offsets.
    pub fn topics(&mut self) -> Result<Vec<(String, u64)>, ClientError> {
        self.send("TOPICS")?;
        let mut topics = Vec::new();
        loop {
            let reply = self.recv()?;
            match reply.as_slice() {
                [end] if end == "END" => return Ok(topics),
                [err, code] if err == "ERR" => return Err(ClientError::Server(code.clone())),
                [tag, name, next] if tag == "TOPIC" => {
                    let next = next
                        .parse()
                        .map_err(|_| ClientError::Protocol(format!("bad offset {next:?}")))?;
                    topics.push((name.clone(), next));
                }
                other => return Err(ClientError::Protocol(format!("unexpected reply {other:?}"))),
            }
        }
    }
}

fn check_topic(topic: &str) -> Result<(), ClientError> {
    if topic.is_empty() || topic.contains(char::is_whitespace) {
        return Err(ClientError::Protocol(format!("bad topic name {topic:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broker::{serve, Broker, BrokerConfig, ServerHandle};
    use std::sync::Arc;
    use std::thread;

    fn start() -> ServerHandle {
        let broker = Arc::new(
            Broker::open(BrokerConfig {
                listen_address: "127.0.0.1:0".to_string(),
                ..BrokerConfig::default()
            })
            .unwrap(),
        );
        serve(broker).unwrap()
    }

    #[test]
    fn publish_fetch_topics_round_trip() {
        let server = start();
        let mut client = Client::connect(server.addr()).unwrap();
        assert_eq!(client.publish("health", b"hello").unwrap(), 0);
        assert_eq!(client.publish("health", b"world").unwrap(), 1);
        let records = client.fetch("health", 0, 10).unwrap();
        assert_eq!(
            records,
            vec![(0, b"hello".to_vec()), (1, b"world".to_vec())]
        );
        assert_eq!(client.fetch("health", 1, 10).unwrap().len(), 1);
        assert_eq!(client.topics().unwrap(), vec![("health".to_string(), 2)]);
    }

    #[test]
    fn binary_and_empty_payloads_survive() {
        let server = start();
        let mut client = Client::connect(server.addr()).unwrap();
        let binary: Vec<u8> = (0u16..=255).map(|b| b as u8).collect();
        client.publish("bin", &binary).unwrap();
        client.publish("bin", b"").unwrap();
        let records = client.fetch("bin", 0, 10).unwrap();
        assert_eq!(records[0].1, binary);
        assert_eq!(records[1].1, Vec::<u8>::new());
    }

    #[test]
    fn server_errors_surface_with_codes() {
        let server = start();
        let mut client = Client::connect(server.addr()).unwrap();
        match client.fetch("nope", 0, 1) {
            Err(ClientError::Server(code)) => assert_eq!(code, "UNKNOWN_TOPIC"),
            other => panic!("expected server error, got {other:?}"),
        }
        assert!(matches!(
            client.publish("bad topic", b"x"),
            Err(ClientError::Protocol(_))
        ));
    }

    #[test]
    fn concurrent_clients_interleave_into_dense_offsets() {
        let server = start();
        let addr = server.addr();
        let mut handles = Vec::new();
        for p in 0..4 {
            handles.push(thread::spawn(move || {
                let mut client = Client::connect(addr).unwrap();
                for i in 0..50 {
                    client
                        .publish("shared", format!("{p}:{i}").as_bytes())
                        .unwrap();
                }
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        let mut client = Client::connect(addr).unwrap();
        let records = client.fetch("shared", 0, 1000).unwrap();
        assert_eq!(records.len(), 200);
        for (i, (offset, _)) in records.iter().enumerate() {
            assert_eq!(*offset, i as u64);
        }
        let mut last = [-1i64; 4];
        for (_, payload) in records {
            let text = String::from_utf8(payload).unwrap();
            let (p, i) = text.split_once(':').unwrap();
            let (p, i): (usize, i64) = (p.parse().unwrap(), i.parse().unwrap());
            assert!(i > last[p]);
            last[p] = i;
        }
    }
}
