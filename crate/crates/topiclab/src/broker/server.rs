//! TCP front end: line-delimited UTF-8, one request per line, one response
//! per request.
//!
//! Requests:
//!   PUB <topic> <base64-payload>     -> OK <offset> | ERR <code>
//!   FETCH <topic> <from> <max>       -> MSG <offset> <base64>... END | ERR <code>
//!   TOPICS                           -> TOPIC <name> <next_offset>... END
//!
//! Error codes are PAYLOAD_TOO_LARGE, UNKNOWN_TOPIC and MALFORMED. A PUB
//! or MSG line with no payload token carries the empty payload.

use super::{Broker, BrokerError};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

/// Running server; shuts down when dropped or via [`ServerHandle::shutdown`].
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept_thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        if let Some(handle) = self.accept_thread.take() {
            self.stop.store(true, Ordering::SeqCst);
            let _ = TcpStream::connect(self.addr);
            let _ = handle.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}

/// Binds the configured listen address and serves connections, one thread
/// each, until shut down.
pub fn serve(broker: Arc<Broker>) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(&broker.config().listen_address)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let accept_stop = stop.clone();
    let accept_thread = thread::spawn(move || {
        for stream in listener.incoming() {
            if accept_stop.load(Ordering::SeqCst) {
                break;
            }
            let stream = match stream {
                Ok(s) => s,
                Err(_) => continue,
            };
            let broker = broker.clone();
            thread::spawn(move || {
                let _ = handle_connection(&broker, stream);
            });
        }
    });
    Ok(ServerHandle {
        addr,
        stop,
        accept_thread: Some(accept_thread),
    })
}

fn handle_connection(broker: &Broker, stream: TcpStream) -> io::Result<()> {
    let line_limit = line_limit_for(broker.config().max_payload_bytes);
    let mut reader = BufReader::new(stream.try_clone()?).take(0);
    let mut writer = BufWriter::new(stream);
    let mut line = Vec::new();
    loop {
        line.clear();
        reader.set_limit(line_limit);
        let n = reader.read_until(b'\n', &mut line)?;
        if n == 0 {
            return Ok(());
        }
        let complete = line.last() == Some(&b'\n');
        if !complete && n as u64 == line_limit {
            drain_to_newline(&mut reader)?;
            respond(&mut writer, "ERR MALFORMED")?;
            continue;
        }
        handle_request(broker, &line, &mut writer)?;
        if !complete {
            return Ok(());
        }
    }
}

/// Generous bound on request lines: enough for a base64 payload a few
/// times over the payload limit, so oversized payloads still get the
/// specific PAYLOAD_TOO_LARGE answer rather than MALFORMED.
fn line_limit_for(max_payload_bytes: usize) -> u64 {
    (max_payload_bytes as u64).saturating_mul(8) + 1024
}

fn drain_to_newline(reader: &mut io::Take<BufReader<TcpStream>>) -> io::Result<()> {
    let mut scratch = Vec::new();
    loop {
        scratch.clear();
        reader.set_limit(64 * 1024);
        let n = reader.read_until(b'\n', &mut scratch)?;
        if n == 0 || scratch.last() == Some(&b'\n') {
            return Ok(());
        }
    }
}

fn respond(writer: &mut BufWriter<TcpStream>, line: &str) -> io::Result<()> {
    writer.write_all(line.as_bytes())?;
    writer.write_all(b"\n")?;
    writer.flush()
}

fn handle_request(broker: &Broker, raw: &[u8], writer: &mut BufWriter<TcpStream>) -> io::Result<()> {
    let Ok(text) = std::str::from_utf8(raw) else {
        return respond(writer, "ERR MALFORMED");
    };
    let tokens: Vec<&str> = text.split_whitespace().collect();
    match tokens.as_slice() {
        ["PUB", topic, rest @ ..] if rest.len() <= 1 => {
            let payload = match rest {
                [] => Vec::new(),
                [b64] => match BASE64.decode(b64) {
                    Ok(p) => p,
                    Err(_) => return respond(writer, "ERR MALFORMED"),
                },
                _ => unreachable!(),
            };
            match broker.publish(topic, payload) {
                Ok(offset) => respond(writer, &format!("OK {offset}")),
                Err(BrokerError::PayloadTooLarge { .. }) => {
                    respond(writer, "ERR PAYLOAD_TOO_LARGE")
                }
                Err(BrokerError::InvalidTopic(_)) => respond(writer, "ERR MALFORMED"),
                Err(BrokerError::UnknownTopic(_)) => respond(writer, "ERR UNKNOWN_TOPIC"),
                Err(BrokerError::Io(e)) => Err(e),
            }
        }
        ["FETCH", topic, from, max] => {
            let (Ok(from), Ok(max)) = (from.parse::<u64>(), max.parse::<u64>()) else {
                return respond(writer, "ERR MALFORMED");
            };
            if max == 0 {
                return respond(writer, "ERR MALFORMED");
            }
            match broker.fetch(topic, from, max) {
                Ok(records) => {
                    for (offset, payload) in records {
                        if payload.is_empty() {
                            writeln!(writer, "MSG {offset}")?;
                        } else {
                            writeln!(writer, "MSG {offset} {}", BASE64.encode(&payload))?;
                        }
                    }
                    respond(writer, "END")
                }
                Err(BrokerError::UnknownTopic(_)) => respond(writer, "ERR UNKNOWN_TOPIC"),
                Err(BrokerError::Io(e)) => Err(e),
                Err(_) => respond(writer, "ERR MALFORMED"),
            }
        }
        ["TOPICS"] => {
            for (name, next_offset) in broker.list_topics() {
                writeln!(writer, "TOPIC {name} {next_offset}")?;
            }
            respond(writer, "END")
        }
        _ => respond(writer, "ERR MALFORMED"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broker::BrokerConfig;

    fn start(max_payload_bytes: usize) -> ServerHandle {
        let broker = Arc::new(
            Broker::open(BrokerConfig {
                listen_address: "127.0.0.1:0".to_string(),
                max_payload_bytes,
                data_dir: None,
            })
            .unwrap(),
        );
        serve(broker).unwrap()
    }

    struct RawConn {
        reader: BufReader<TcpStream>,
        writer: TcpStream,
    }

    impl RawConn {
        fn connect(addr: SocketAddr) -> Self {
            let stream = TcpStream::connect(addr).unwrap();
            RawConn {
                reader: BufReader::new(stream.try_clone().unwrap()),
                writer: stream,
            }
        }

        fn send(&mut self, line: &str) {
            self.writer.write_all(line.as_bytes()).unwrap();
        }

        fn recv(&mut self) -> String {
            let mut line = String::new();
            self.reader.read_line(&mut line).unwrap();
            line.trim_end_matches(['\r', '\n']).to_string()
        }
    }

    #[test]
    fn protocol_round_trip() {
        let server = start(65536);
        let mut conn = RawConn::connect(server.addr());
        conn.send("PUB health aGVsbG8=\n");
        assert_eq!(conn.recv(), "OK 0");
        conn.send("PUB health aGk=\n");
        assert_eq!(conn.recv(), "OK 1");
        conn.send("FETCH health 0 10\n");
        assert_eq!(conn.recv(), "MSG 0 aGVsbG8=");
        assert_eq!(conn.recv(), "MSG 1 aGk=");
        assert_eq!(conn.recv(), "END");
        conn.send("FETCH health 1 1\n");
        assert_eq!(conn.recv(), "MSG 1 aGk=");
        assert_eq!(conn.recv(), "END");
        conn.send("TOPICS\n");
        assert_eq!(conn.recv(), "TOPIC health 2");
        assert_eq!(conn.recv(), "END");
    }

    #[test]
    fn protocol_error_codes() {
        let server = start(8);
        let mut conn = RawConn::connect(server.addr());
        conn.send("FETCH nope 0 1\n");
        assert_eq!(conn.recv(), "ERR UNKNOWN_TOPIC");
        conn.send("PUB t MTIzNDU2Nzg5\n");
        assert_eq!(conn.recv(), "ERR PAYLOAD_TOO_LARGE");
        conn.send("PUB t !!notbase64!!\n");
        assert_eq!(conn.recv(), "ERR MALFORMED");
        conn.send("PUB bad/name aGk=\n");
        assert_eq!(conn.recv(), "ERR MALFORMED");
        conn.send("FETCH t 0 0\n");
        assert_eq!(conn.recv(), "ERR MALFORMED");
        conn.send("FETCH t zero 1\n");
        assert_eq!(conn.recv(), "ERR MALFORMED");
        conn.send("NOPE\n");
        assert_eq!(conn.recv(), "ERR MALFORMED");
        conn.send("\n");
        assert_eq!(conn.recv(), "ERR MALFORMED");
        conn.send("TOPICS extra\n");
        assert_eq!(conn.recv(), "ERR MALFORMED");
        conn.send("TOPICS\n");
        assert_eq!(conn.recv(), "END");
    }

    #[test]
    fn empty_payload_round_trips() {
        let server = start(65536);
        let mut conn = RawConn::connect(server.addr());
        conn.send("PUB t\n");
        assert_eq!(conn.recv(), "OK 0");
        conn.send("FETCH t 0 5\n");
        assert_eq!(conn.recv(), "MSG 0");
        assert_eq!(conn.recv(), "END");
    }

    #[test]
    fn crlf_lines_are_accepted() {
        let server = start(65536);
        let mut conn = RawConn::connect(server.addr());
        conn.send("PUB t aGk=\r\n");
        assert_eq!(conn.recv(), "OK 0");
        conn.send("TOPICS\r\n");
        assert_eq!(conn.recv(), "TOPIC t 1");
        assert_eq!(conn.recv(), "END");
    }

    #[test]
    fn oversized_line_is_rejected_and_connection_survives() {
        let server = start(8);
        let mut conn = RawConn::connect(server.addr());
        let huge = "A".repeat(10_000);
        conn.send(&format!("PUB t {huge}\n"));
        assert_eq!(conn.recv(), "ERR MALFORMED");
        conn.send("PUB t aGk=\n");
        assert_eq!(conn.recv(), "OK 0");
    }

    #[test]
    fn two_connections_share_one_log() {
        let server = start(65536);
        let mut a = RawConn::connect(server.addr());
        let mut b = RawConn::connect(server.addr());
        a.send("PUB t YQ==\n");
        assert_eq!(a.recv(), "OK 0");
        b.send("PUB t Yg==\n");
        assert_eq!(b.recv(), "OK 1");
        a.send("FETCH t 0 10\n");
        assert_eq!(a.recv(), "MSG 0 YQ==");
        assert_eq!(a.recv(), "MSG 1 Yg==");
        assert_eq!(a.recv(), "END");
    }

    #[test]
    fn shutdown_stops_accepting() {
        let server = start(65536);
        let addr = server.addr();
        server.shutdown();
        // The listener is gone; a fresh connect must not yield a usable
        // broker connection.
        if let Ok(mut stream) = TcpStream::connect(addr) {
            stream
                .set_read_timeout(Some(std::time::Duration::from_secs(2)))
                .unwrap();
            let _ = stream.write_all(b"TOPICS\n");
            let mut buf = String::new();
            let n = BufReader::new(stream).read_line(&mut buf).unwrap_or(0);
            assert_eq!(n, 0, "got response after shutdown: {buf:?}");
        }
    }
}
