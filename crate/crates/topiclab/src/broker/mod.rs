//! Single-node append-only message log with offset-based consumption.
//!
//! Topics auto-create on first publish, offsets are dense per topic, and
//! records are immutable once appended. The broker state is safe to share
//! across threads; the TCP front end lives in [`server`] and a matching
//! line-protocol client in [`client`].

pub mod client;
pub mod server;

pub use client::{Client, ClientError};
pub use server::{serve, ServerHandle};

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use thiserror::Error;

pub const DEFAULT_MAX_PAYLOAD_BYTES: usize = 65536;

#[derive(Debug, Clone)]
pub struct BrokerConfig {
    pub listen_address: String,
    pub max_payload_bytes: usize,
    /// When set, every topic appends to `<data_dir>/<topic>.log` and a
    /// restarted broker replays those files.
    pub data_dir: Option<PathBuf>,
}

impl Default for BrokerConfig {
    fn default() -> Self {
        BrokerConfig {
            listen_address: "127.0.0.1:7171".to_string(),
            max_payload_bytes: DEFAULT_MAX_PAYLOAD_BYTES,
            data_dir: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum BrokerError {
    #[error("payload of {size} bytes exceeds limit of {limit}")]
    PayloadTooLarge { size: usize, limit: usize },
    #[error("unknown topic {0:?}")]
    UnknownTopic(String),
    #[error("invalid topic name {0:?}")]
    InvalidTopic(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// One topic's records. Offsets are dense, so the record at offset `i` is
/// simply `records[i]`.
#[derive(Debug)]
pub struct MessageLog {
    records: Vec<Vec<u8>>,
    file: Option<File>,
}

impl MessageLog {
    fn new(file: Option<File>) -> Self {
        MessageLog {
            records: Vec::new(),
            file,
        }
    }

    pub fn next_offset(&self) -> u64 {
        self.records.len() as u64
    }

    fn append(&mut self, payload: Vec<u8>) -> io::Result<u64> {
        if let Some(file) = &mut self.file {
            file.write_all(&(payload.len() as u32).to_be_bytes())?;
            file.write_all(&payload)?;
            file.flush()?;
        }
        let offset = self.records.len() as u64;
        self.records.push(payload);
        Ok(offset)
    }

    fn fetch(&self, from_offset: u64, max_count: u64) -> Vec<(u64, Vec<u8>)> {
        if from_offset >= self.records.len() as u64 {
            return Vec::new();
        }
        let start = from_offset as usize;
        let end = (from_offset.saturating_add(max_count)).min(self.records.len() as u64) as usize;
        self.records[start..end]
            .iter()
            .enumerate()
            .map(|(i, payload)| ((start + i) as u64, payload.clone()))
            .collect()
    }
}

/// Thread-safe multi-topic log. A short-lived lock guards the topic map;
/// each topic has its own lock so appends to different topics do not
/// contend.
pub struct Broker {
    config: BrokerConfig,
    topics: Mutex<BTreeMap<String, Arc<Mutex<MessageLog>>>>,
}

fn valid_topic_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 255
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'.' || b == b'-' || b == b'_')
        && name != "."
        && name != ".."
}

impl Broker {
    /// Opens a broker, replaying any persisted topic logs under the
    /// configured data directory. A partial trailing record (from a crash
    /// mid-append) is truncated away.
    pub fn open(config: BrokerConfig) -> Result<Self, BrokerError> {
        let mut topics = BTreeMap::new();
        if let Some(dir) = &config.data_dir {
            fs::create_dir_all(dir)?;
            let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "log"))
                .collect();
            paths.sort();
            for path in paths {
                let name = match path.file_stem().and_then(|s| s.to_str()) {
                    Some(s) if valid_topic_name(s) => s.to_string(),
                    _ => continue,
                };
                let log = replay_log(&path)?;
                topics.insert(name, Arc::new(Mutex::new(log)));
            }
        }
        Ok(Broker {
            config,
            topics: Mutex::new(topics),
        })
    }

    pub fn in_memory() -> Self {
        Self::open(BrokerConfig::default()).expect("in-memory broker cannot fail to open")
    }

    pub fn config(&self) -> &BrokerConfig {
        &self.config
    }

    fn topic(&self, name: &str) -> Option<Arc<Mutex<MessageLog>>> {
        self.topics.lock().unwrap().get(name).cloned()
    }

    fn topic_or_create(&self, name: &str) -> Result<Arc<Mutex<MessageLog>>, BrokerError> {
        if let Some(log) = self.topic(name) {
            return Ok(log);
        }
        let mut topics = self.topics.lock().unwrap();
        if let Some(log) = topics.get(name) {
            return Ok(log.clone());
        }
        let file = match &self.config.data_dir {
            Some(dir) => Some(
                OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(dir.join(format!("{name}.log")))?,
            ),
            None => None,
        };
        let log = Arc::new(Mutex::new(MessageLog::new(file)));
        topics.insert(name.to_string(), log.clone());
        Ok(log)
    }

    /// Appends a payload, creating the topic if needed, and returns its
    /// offset.
    pub fn publish(&self, topic_name: &str, payload: Vec<u8>) -> Result<u64, BrokerError> {
        if !valid_topic_name(topic_name) {
            return Err(BrokerError::InvalidTopic(topic_name.to_string()));
        }
        if payload.len() > self.config.max_payload_bytes {
            return Err(BrokerError::PayloadTooLarge {
                size: payload.len(),
                limit: self.config.max_payload_bytes,
            });
        }
        let log = self.topic_or_create(topic_name)?;
        let mut log = log.lock().unwrap();
        Ok(log.append(payload)?)
    }

    /// Returns up to `max_count` records with offsets at or past
    /// `from_offset`, in offset order. Reading past the end yields an
    /// empty list, not an error.
    pub fn fetch(
        &self,
        topic_name: &str,
        from_offset: u64,
        max_count: u64,
    ) -> Result<Vec<(u64, Vec<u8>)>, BrokerError> {
        let log = self
            .topic(topic_name)
            .ok_or_else(|| BrokerError::UnknownTopic(topic_name.to_string()))?;
        let log = log.lock().unwrap();
        Ok(log.fetch(from_offset, max_count))
    }

    /// All topics with their next offsets, sorted by name.
    pub fn list_topics(&self) -> Vec<(String, u64)> {
        let topics = self.topics.lock().unwrap();
        topics
            .iter()
            .map(|(name, log)| (name.clone(), log.lock().unwrap().next_offset()))
            .collect()
    }
}

fn replay_log(path: &PathBuf) -> Result<MessageLog, BrokerError> {
    let mut file = OpenOptions::new().read(true).append(true).open(path)?;
    let mut records = Vec::new();
    let mut good_end: u64 = 0;
    loop {
        let mut len_buf = [0u8; 4];
        match file.read_exact(&mut len_buf) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let len = u32::from_be_bytes(len_buf) as usize;
        let mut payload = vec![0u8; len];
        match file.read_exact(&mut payload) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        records.push(payload);
        good_end += 4 + len as u64;
    }
    file.set_len(good_end)?;
    file.seek(SeekFrom::End(0))?;
    let mut log = MessageLog::new(Some(file));
    log.records = records;
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    #[test]
    fn offsets_are_dense_and_sequential() {
        let broker = Broker::in_memory();
        assert_eq!(broker.publish("health", b"m1".to_vec()).unwrap(), 0);
        assert_eq!(broker.publish("health", b"m2".to_vec()).unwrap(), 1);
        assert_eq!(broker.publish("health", b"m3".to_vec()).unwrap(), 2);
    }

    #[test]
    fn topics_auto_create() {
        let broker = Broker::in_memory();
        assert!(broker.list_topics().is_empty());
        assert_eq!(broker.publish("new-topic", b"m".to_vec()).unwrap(), 0);
        assert_eq!(broker.list_topics(), vec![("new-topic".to_string(), 1)]);
    }

    #[test]
    fn fetch_slices_the_log() {
        let broker = Broker::in_memory();
        for m in [b"a".to_vec(), b"b".to_vec(), b"c".to_vec()] {
            broker.publish("health", m).unwrap();
        }
        let got = broker.fetch("health", 0, 2).unwrap();
        assert_eq!(got, vec![(0, b"a".to_vec()), (1, b"b".to_vec())]);
        assert_eq!(broker.fetch("health", 99, 10).unwrap(), vec![]);
        assert_eq!(broker.fetch("health", 2, 10).unwrap(), vec![(2, b"c".to_vec())]);
    }

    #[test]
    fn unknown_topic_is_an_error() {
        let broker = Broker::in_memory();
        assert!(matches!(
            broker.fetch("nope", 0, 1),
            Err(BrokerError::UnknownTopic(_))
        ));
    }

    #[test]
    fn payload_limit_is_enforced() {
        let broker = Broker::open(BrokerConfig {
            max_payload_bytes: 4,
            ..BrokerConfig::default()
        })
        .unwrap();
        assert!(broker.publish("t", b"1234".to_vec()).is_ok());
        assert!(matches!(
            broker.publish("t", b"12345".to_vec()),
            Err(BrokerError::PayloadTooLarge { size: 5, limit: 4 })
        ));
    }

    #[test]
    fn topic_names_are_validated() {
        let broker = Broker::in_memory();
        for bad in ["", "has space", "a/b", ".", "..", "newline\n"] {
            assert!(
                matches!(
                    broker.publish(bad, b"m".to_vec()),
                    Err(BrokerError::InvalidTopic(_))
                ),
                "accepted {bad:?}"
            );
        }
    }

    #[test]
    fn listing_reports_counts_sorted_by_name() {
        let broker = Broker::in_memory();
        broker.publish("b", b"1".to_vec()).unwrap();
        broker.publish("a", b"1".to_vec()).unwrap();
        broker.publish("a", b"2".to_vec()).unwrap();
        assert_eq!(
            broker.list_topics(),
            vec![("a".to_string(), 2), ("b".to_string(), 1)]
        );
        broker.publish("a", b"3".to_vec()).unwrap();
        assert_eq!(broker.list_topics()[0], ("a".to_string(), 3));
    }

    #[test]
    fn fetch_does_not_mutate() {
        let broker = Broker::in_memory();
        broker.publish("t", b"x".to_vec()).unwrap();
        let first = broker.fetch("t", 0, 10).unwrap();
        let second = broker.fetch("t", 0, 10).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn concurrent_publishers_keep_per_producer_order() {
        let broker = Arc::new(Broker::in_memory());
        let n_producers = 4;
        let per_producer = 100u64;
        let mut handles = Vec::new();
        for p in 0..n_producers {
            let broker = broker.clone();
            handles.push(thread::spawn(move || {
                for i in 0..per_producer {
                    broker
                        .publish("t", format!("{p}:{i}").into_bytes())
                        .unwrap();
                }
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        let all = broker.fetch("t", 0, u64::MAX).unwrap();
        assert_eq!(all.len(), (n_producers as usize) * per_producer as usize);
        for (i, (offset, _)) in all.iter().enumerate() {
            assert_eq!(*offset, i as u64);
        }
        let mut last_seen = vec![-1i64; n_producers as usize];
        for (_, payload) in &all {
            let text = String::from_utf8(payload.clone()).unwrap();
            let (p, i) = text.split_once(':').unwrap();
            let (p, i): (usize, i64) = (p.parse().unwrap(), i.parse().unwrap());
            assert!(i > last_seen[p], "producer {p} out of order");
            last_seen[p] = i;
        }
    }

    #[test]
    fn persisted_topics_survive_restart() {
        let dir = tempfile::tempdir().unwrap();
        let config = BrokerConfig {
            data_dir: Some(dir.path().to_path_buf()),
            ..BrokerConfig::default()
        };
        {
            let broker = Broker::open(config.clone()).unwrap();
            broker.publish("health", b"m1".to_vec()).unwrap();
            broker.publish("health", b"m2".to_vec()).unwrap();
            broker.publish("other", b"x".to_vec()).unwrap();
        }
        let broker = Broker::open(config).unwrap();
        assert_eq!(
            broker.list_topics(),
            vec![("health".to_string(), 2), ("other".to_string(), 1)]
        );
        assert_eq!(
            broker.fetch("health", 0, 10).unwrap(),
            vec![(0, b"m1".to_vec()), (1, b"m2".to_vec())]
        );
        assert_eq!(broker.publish("health", b"m3".to_vec()).unwrap(), 2);
    }

    #[test]
    fn partial_trailing_record_is_dropped_on_replay() {
        let dir = tempfile::tempdir().unwrap();
        let config = BrokerConfig {
            data_dir: Some(dir.path().to_path_buf()),
            ..BrokerConfig::default()
        };
        {
            let broker = Broker::open(config.clone()).unwrap();
            broker.publish("t", b"good".to_vec()).unwrap();
        }
        let path = dir.path().join("t.log");
        let mut file = OpenOptions::new().append(true).open(&path).unwrap();
        file.write_all(&[0, 0, 0, 9, b'p', b'a', b'r']).unwrap();
        drop(file);
        let broker = Broker::open(config).unwrap();
        assert_eq!(broker.fetch("t", 0, 10).unwrap(), vec![(0, b"good".to_vec())]);
        assert_eq!(broker.publish("t", b"next".to_vec()).unwrap(), 1);
        assert_eq!(
            broker.fetch("t", 1, 10).unwrap(),
            vec![(1, b"next".to_vec())]
        );
    }
}
