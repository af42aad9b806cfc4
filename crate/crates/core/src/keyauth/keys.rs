//! Key strings accumulated over accepted keyed rounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::{KeyBits, Transcript};
use crate::quantum::BellLabel;

/// Keys one verifier shares with the prover after `rounds` accepted rounds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPair {
    pub rounds: usize,
    /// Verifier-side `K_V`.
    pub k_v: Vec<u8>,
    /// Verifier-side `K_P`.
    pub k_p: Vec<u8>,
    /// Prover-side `K_V`; absent when the prover never learns it.
    pub prover_k_v: Option<Vec<u8>>,
    /// Prover-side `K_P`.
    pub prover_k_p: Vec<u8>,
}

impl KeyPair {
    fn push(&mut self, k: &KeyBits) {
        self.rounds += 1;
        self.k_v.extend(k.k_v.bits());
        self.k_p.extend(k.k_p.bits());
        self.prover_k_p.extend(k.prover_k_p.bits());
        match (&mut self.prover_k_v, k.prover_k_v) {
            (Some(v), Some(l)) => v.extend(l.bits()),
            (slot, _) => *slot = None,
        }
    }

    /// Whether both ends hold the same `K_P`.
    pub fn k_p_agrees(&self) -> bool {
        self.k_p == self.prover_k_p
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccumulatedKeys {
    pub v0: KeyPair,
    pub v1: KeyPair,
}

/// Concatenates per-round secrets in round order.
pub fn accumulate_keys(transcripts: &[Transcript]) -> Result<AccumulatedKeys> {
    let mut out = AccumulatedKeys::default();
    out.v0.prover_k_v = Some(Vec::new());
    out.v1.prover_k_v = Some(Vec::new());
    if let Some(first) = transcripts.first() {
        if !first.scheme.has_keys() {
            return Err(Error::arg(format!("scheme {} does not produce keys", first.scheme)));
        }
    }
    let mut sorted: Vec<&Transcript> = transcripts.iter().collect();
    sorted.sort_by_key(|t| (t.trial, t.round));
    for t in sorted {
        if t.scheme != transcripts[0].scheme {
            return Err(Error::arg("transcripts mix schemes"));
        }
        let keys = match (&t.outcome.round_keys, t.outcome.accepted) {
            (Some(k), true) => k,
            _ => return Err(Error::arg(format!("round {} of trial {} was not accepted", t.round, t.trial))),
        };
        out.v0.push(&keys.v0);
        out.v1.push(&keys.v1);
    }
    Ok(out)
}

/// Packs bits most-significant first and renders them as hex; the final
/// byte is zero-padded.
pub fn bits_to_hex(bits: &[u8]) -> String {
    let bytes: Vec<u8> = bits.chunks(8).map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i)))).collect();
    hex::encode(bytes)
}

pub fn hex_to_bits(s: &str, len: usize) -> Result<Vec<u8>> {
    let bytes = hex::decode(s).map_err(|e| Error::arg(format!("bad hex key: {e}")))?;
    if bytes.len() * 8 < len {
        return Err(Error::arg("hex key shorter than requested length"));
    }
    Ok((0..len).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1).collect())
}

pub fn labels_to_bits(labels: &[BellLabel]) -> Vec<u8> {
    labels.iter().flat_map(|l| l.bits()).collect()
}
