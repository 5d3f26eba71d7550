//! Append-only log of every simulated message.

use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageType {
    Submission,
    Aggregate,
    BetaBroadcast,
}

/// Wire form of one message, one JSON object per transcript line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub msg_type: MessageType,
    pub iteration: usize,
    pub sender: String,
    pub receiver: String,
    pub body: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub msg_type: MessageType,
    pub iteration: usize,
    pub sender: String,
    pub receiver: String,
    /// Length of the serialized envelope.
    pub bytes: usize,
    /// Seconds since the transcript was opened.
    pub timestamp: f64,
    /// Present when the transcript retains bodies.
    pub body: Option<Value>,
}

#[derive(Debug)]
pub struct Transcript {
    opened: Instant,
    keep_bodies: bool,
    records: Mutex<Vec<MessageRecord>>,
}

impl Clone for Transcript {
    fn clone(&self) -> Self {
        Transcript {
            opened: self.opened,
            keep_bodies: self.keep_bodies,
            records: Mutex::new(self.records().to_vec()),
        }
    }
}

impl Transcript {
    pub fn new(keep_bodies: bool) -> Self {
        Transcript {
            opened: Instant::now(),
            keep_bodies,
            records: Mutex::new(Vec::new()),
        }
    }

    pub fn keeps_bodies(&self) -> bool {
        self.keep_bodies
    }

    /// Serializes and appends; returns the byte size of the message.
    pub fn append(&self, envelope: Envelope) -> Result<usize> {
        let bytes = serde_json::to_vec(&envelope)?.len();
        let record = MessageRecord {
            msg_type: envelope.msg_type,
            iteration: envelope.iteration,
            sender: envelope.sender,
            receiver: envelope.receiver,
            bytes,
            timestamp: self.opened.elapsed().as_secs_f64(),
            body: self.keep_bodies.then_some(envelope.body),
        };
        self.records.lock().expect("transcript lock").push(record);
        Ok(bytes)
    }

    pub fn records(&self) -> std::sync::MutexGuard<'_, Vec<MessageRecord>> {
        self.records.lock().expect("transcript lock")
    }

    pub fn len(&self) -> usize {
        self.records().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total_bytes(&self) -> u64 {
        self.records().iter().map(|r| r.bytes as u64).sum()
    }

    pub fn bytes_by_type(&self, msg_type: MessageType) -> u64 {
        self.records()
            .iter()
            .filter(|r| r.msg_type == msg_type)
            .map(|r| r.bytes as u64)
            .sum()
    }

    /// Writes one JSON object per line.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for r in self.records().iter() {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_jsonl(path: &Path) -> Result<Transcript> {
        let text = std::fs::read_to_string(path)?;
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<MessageRecord>, _>>()?;
        let keep_bodies = records.iter().all(|r| r.body.is_some());
        Ok(Transcript {
            opened: Instant::now(),
            keep_bodies,
            records: Mutex::new(records),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn append_counts_bytes_and_roundtrips() {
        let t = Transcript::new(true);
        let env = Envelope {
            msg_type: MessageType::BetaBroadcast,
            iteration: 1,
            sender: "center-1".into(),
            receiver: "institution-0".into(),
            body: json!({"beta": ["0"]}),
        };
        let expected = serde_json::to_string(&env).unwrap().len();
        assert_eq!(t.append(env).unwrap(), expected);
        assert_eq!(t.total_bytes(), expected as u64);
        let line = serde_json::to_value(&t.records()[0]).unwrap();
        assert_eq!(line["msg_type"], "beta_broadcast");

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        t.write_jsonl(&path).unwrap();
        let back = Transcript::read_jsonl(&path).unwrap();
        assert_eq!(back.records().as_slice(), t.records().as_slice());

        let lean = Transcript::new(false);
        lean.append(Envelope {
            msg_type: MessageType::Aggregate,
            iteration: 1,
            sender: "a".into(),
            receiver: "b".into(),
            body: json!({}),
        })
        .unwrap();
        assert!(lean.records()[0].body.is_none());
    }
}
