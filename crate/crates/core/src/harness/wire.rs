//! Referee/player wire format: one JSON object per line, UTF-8.
//!
//! ```text
//! player  -> referee  {"type":"hello","party":0,"protocol_version":1}
//! referee -> player   {"type":"dealt","tape":"<base64>","bits_per_round":3,"rounds":1000}
//! referee -> player   {"type":"question","round":0,"observables":[{"slot":1,"kind":"X"}]}
//! player  -> referee  {"type":"answer","round":0,"values":[1]}
//! referee -> player   {"type":"end","reason":"complete"}
//! ```
//!
//! Unknown fields are ignored; an unknown `type` is a protocol error.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::qsim::{ObservableKind, Sign, SiteObservable};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireObservable {
    /// Global qubit index owned by the receiving party.
    pub slot: usize,
    pub kind: ObservableKind,
}

impl From<SiteObservable> for WireObservable {
    fn from(o: SiteObservable) -> Self {
        WireObservable { slot: o.qubit, kind: o.kind }
    }
}

impl From<WireObservable> for SiteObservable {
    fn from(o: WireObservable) -> Self {
        SiteObservable::new(o.kind, o.slot)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    Hello { party: usize, protocol_version: u32 },
    Dealt { tape: String, bits_per_round: usize, rounds: u64 },
    Question { round: u64, observables: Vec<WireObservable> },
    Answer { round: u64, values: Vec<Sign> },
    End { reason: String },
}

impl Message {
    /// Serialized form including the trailing newline.
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("messages always serialize");
        s.push('\n');
        s
    }

    pub fn parse(line: &str) -> Result<Message, String> {
        serde_json::from_str(line.trim_end()).map_err(|e| e.to_string())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "hello",
            Message::Dealt { .. } => "dealt",
            Message::Question { .. } => "question",
            Message::Answer { .. } => "answer",
            Message::End { .. } => "end",
        }
    }
}

/// Packs ±1 values MSB-first (`-1` is a set bit) and base64-encodes them.
pub fn encode_tape(values: &[Sign]) -> String {
    let mut bytes = vec![0u8; values.len().div_ceil(8)];
    for (i, v) in values.iter().enumerate() {
        if v.is_minus() {
            bytes[i / 8] |= 0x80 >> (i % 8);
        }
    }
    STANDARD.encode(bytes)
}

pub fn decode_tape(tape: &str, len: usize) -> Result<Vec<Sign>, String> {
    let bytes = STANDARD.decode(tape).map_err(|e| e.to_string())?;
    if bytes.len() != len.div_ceil(8) {
        return Err(format!("tape has {} bytes, expected {}", bytes.len(), len.div_ceil(8)));
    }
    Ok((0..len).map(|i| Sign::from_bit(bytes[i / 8] & (0x80 >> (i % 8)) != 0)).collect())
}
