//! Line-delimited JSON wire format spoken with external predictor processes.
//!
//! ```text
//! child  -> {"protocol": 1, "input_rate": R, "input_length": L, "tags": [...]}
//! parent -> {"id": N, "sample_rate": R, "pcm": "<base64 f32le mono>"}
//! child  -> {"id": N, "scores": {"tag": p, ...}}  |  {"id": N, "error": "..."}
//! ```

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub protocol: u32,
    pub input_rate: u32,
    pub input_length: usize,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub sample_rate: u32,
    pub pcm: String,
}

impl Request {
    pub fn new(id: u64, clip: &AudioClip) -> Self {
        Self {
            id,
            sample_rate: clip.sample_rate(),
            pcm: encode_pcm(clip.samples()),
        }
    }

    /// Decodes the payload, rejecting bad base64 and byte counts that are
    /// not a whole number of `f32` samples.
    pub fn samples(&self) -> Result<Vec<f32>, String> {
        decode_pcm(&self.pcm)
    }
}

pub fn encode_pcm(samples: &[f32]) -> String {
    let bytes: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

pub fn decode_pcm(pcm: &str) -> Result<Vec<f32>, String> {
    let bytes = STANDARD
        .decode(pcm)
        .map_err(|e| format!("pcm: invalid base64: {e}"))?;
    if bytes.len() % 4 != 0 {
        return Err(format!(
            "pcm: {} bytes is not a multiple of 4 (float-32 samples)",
            bytes.len()
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

/// A reply line from the child.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reply {
    Scores {
        id: u64,
        scores: BTreeMap<String, f64>,
    },
    Error {
        id: u64,
        error: String,
    },
}

impl Reply {
    pub fn id(&self) -> u64 {
        match self {
            Reply::Scores { id, .. } | Reply::Error { id, .. } => *id,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn request_line_layout() {
        let clip = AudioClip::new(vec![1.0, -0.5], 16000).unwrap();
        let line = serde_json::to_string(&Request::new(7, &clip)).unwrap();
        assert_eq!(line, r#"{"id":7,"sample_rate":16000,"pcm":"AACAPwAAAL8="}"#);
    }

    #[test]
    fn replies_parse_both_shapes() {
        let r: Reply = serde_json::from_str(r#"{"id": 3, "scores": {"rock": 0.9}}"#).unwrap();
        assert_eq!(r.id(), 3);
        let r: Reply = serde_json::from_str(r#"{"id": 4, "error": "boom"}"#).unwrap();
        assert!(matches!(r, Reply::Error { id: 4, .. }));
        assert!(serde_json::from_str::<Reply>(r#"{"scores": {}}"#).is_err());
    }

    #[test]
    fn truncated_payload_names_pcm() {
        // 3 bytes of payload
        let err = decode_pcm("AAAA").unwrap_err();
        assert!(err.starts_with("pcm"), "{err}");
        assert!(decode_pcm("***").unwrap_err().starts_with("pcm"));
    }

    proptest! {
        #[test]
        fn pcm_round_trips_bit_exactly(v in proptest::collection::vec(any::<f32>(), 0..64)) {
            let back = decode_pcm(&encode_pcm(&v)).unwrap();
            prop_assert_eq!(
                back.iter().map(|f| f.to_bits()).collect::<Vec<_>>(),
                v.iter().map(|f| f.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
