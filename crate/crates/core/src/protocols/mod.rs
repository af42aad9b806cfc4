//! Protocol state machines. Each `run_*` function plays one round on a fresh
//! register and returns its [`Transcript`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adversaries::AdversaryReport;
use crate::bell::QubitId;
use crate::error::{Error, Result};
use crate::quantum::BellLabel;
use crate::spacetime::{DEFAULT_TOLERANCE, Event, WorldLine};

pub mod engine;
pub mod keyed;
mod pv_bb84;
mod scheme_a;
mod scheme_b;
mod scheme_i;
mod scheme_ii;
mod scheme_iii;
mod scheme_iv;

pub use engine::{Payload, Protocol, Sim, drive};
pub use keyed::{decode_keyed_message, encode_keyed_message};
pub use pv_bb84::{Pv84Round, run_pv_bb84};
pub use scheme_a::run_scheme_a;
pub use scheme_b::run_scheme_b;
pub use scheme_i::{SchemeIKey, run_scheme_i};
pub use scheme_ii::run_scheme_ii;
pub use scheme_iii::run_scheme_iii;
pub use scheme_iv::run_scheme_iv;

/// Transcript schema version.
pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "pv-bb84")]
    PvBb84,
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    II,
    #[serde(rename = "iii")]
    III,
    #[serde(rename = "iv")]
    IV,
    #[default]
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [Scheme::PvBb84, Scheme::I, Scheme::II, Scheme::III, Scheme::IV, Scheme::A, Scheme::B];

    pub fn id(self) -> &'static str {
        match self {
            Scheme::PvBb84 => "pv-bb84",
            Scheme::I => "i",
            Scheme::II => "ii",
            Scheme::III => "iii",
            Scheme::IV => "iv",
            Scheme::A => "a",
            Scheme::B => "b",
        }
    }

    /// Whether the scheme yields per-round key material.
    pub fn has_keys(self) -> bool {
        matches!(self, Scheme::A | Scheme::B)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

/// Bell outcomes pinned in advance, keyed by the unordered qubit pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Branches {
    pub(crate) map: BTreeMap<(QubitId, QubitId), BellLabel>,
}

impl Branches {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn force(mut self, a: QubitId, b: QubitId, label: BellLabel) -> Self {
        self.map.insert((a.min(b), a.max(b)), label);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Everything a single round needs besides the adversary.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub world: WorldLine,
    pub seed: u64,
    pub tolerance: f64,
    pub forced: Branches,
    /// Keyed-message length in bits for schemes A and B.
    pub message_bits: Option<usize>,
    /// Scheme IV dense-coded messages of V0 and V1.
    pub messages: Option<(BellLabel, BellLabel)>,
}

impl Scenario {
    pub fn new(world: WorldLine, seed: u64) -> Self {
        Scenario { world, seed, tolerance: DEFAULT_TOLERANCE, forced: Branches::new(), message_bits: None, messages: None }
    }

    pub fn canonical(d: f64, seed: u64) -> Result<Self> {
        Ok(Self::new(WorldLine::canonical(d)?, seed))
    }

    pub fn with_forced(mut self, forced: Branches) -> Self {
        self.forced = forced;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_message_bits(mut self, bits: usize) -> Self {
        self.message_bits = Some(bits);
        self
    }

    pub fn with_messages(mut self, v0: BellLabel, v1: BellLabel) -> Self {
        self.messages = Some((v0, v1));
        self
    }
}

/// Two-bit secrets one verifier and the prover hold after a keyed round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyBits {
    /// The verifier's own private Bell outcome.
    pub k_v: BellLabel,
    /// The prover-side secret as the verifier computes it.
    pub k_p: BellLabel,
    /// The verifier secret as the prover infers it; scheme A never reveals it.
    pub prover_k_v: Option<BellLabel>,
    /// The prover-side secret as the prover measured it.
    pub prover_k_p: BellLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundKeys {
    pub v0: KeyBits,
    pub v1: KeyBits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub accepted: bool,
    pub detected_adversary: bool,
    /// Longest round trip measured by a verifier.
    pub elapsed: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub round_keys: Option<RoundKeys>,
    /// Bell outcomes in the order they happened.
    pub branch: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub adversary: Option<AdversaryReport>,
    /// Scheme-specific values worth auditing.
    #[serde(skip_serializing_if = "serde_json::Value::is_null", default)]
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub v: u32,
    pub scheme: Scheme,
    pub backend: String,
    pub seed: u64,
    pub trial: u64,
    pub round: u64,
    pub events: Vec<Event>,
    pub outcome: Outcome,
}

impl Transcript {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("transcripts always serialize")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::arg(format!("bad transcript line: {e}")))
    }
}

pub(crate) const START: u32 = 0;
pub(crate) const PRE: u32 = 1;

/// Send times for `V0` and `V1` such that both payloads reach `P` together.
pub(crate) fn sync_send_times(world: &WorldLine) -> Result<(f64, f64)> {
    let (a0, a1) = (world.arm(crate::spacetime::Party::V0)?, world.arm(crate::spacetime::Party::V1)?);
    let t = a0.max(a1);
    Ok((t - a0, t - a1))
}

/// Start of the preparation phase, early enough for any announcement to
/// cross the whole network before the timed phase.
pub(crate) fn pre_round_time(world: &WorldLine) -> f64 {
    -2.0 * world.span()
}

/// Collects the verdicts of one round.
#[derive(Debug, Default)]
pub(crate) struct Verdict {
    failures: Vec<String>,
    checks: usize,
    elapsed: f64,
}

impl Verdict {
    pub(crate) fn check(&mut self, name: &str, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failures.push(name.to_string());
        }
    }

    pub(crate) fn value<B: crate::backend::Backend>(
        &mut self,
        sim: &mut Sim<B>,
        actor: crate::spacetime::Party,
        name: &str,
        ok: bool,
        detail: serde_json::Value,
    ) -> bool {
        let ok = sim.verify(actor, name, ok, detail);
        self.check(name, ok);
        ok
    }

    /// Checks a measured round trip of `actor` against twice its arm length.
    pub(crate) fn round_trip<B: crate::backend::Backend>(
        &mut self,
        sim: &mut Sim<B>,
        actor: crate::spacetime::Party,
        name: &str,
        sent_at: f64,
    ) -> Result<bool> {
        let observed = sim.now() - sent_at;
        let expected = 2.0 * sim.world().arm(actor)?;
        self.elapsed = self.elapsed.max(observed);
        let ok = sim.verify_time(actor, name, expected, observed);
        self.check(name, ok);
        Ok(ok)
    }

    /// Checks a reported interval, e.g. one relayed by another verifier.
    pub(crate) fn interval<B: crate::backend::Backend>(
        &mut self,
        sim: &mut Sim<B>,
        actor: crate::spacetime::Party,
        name: &str,
        expected: f64,
        observed: f64,
    ) -> bool {
        self.elapsed = self.elapsed.max(observed);
        let ok = sim.verify_time(actor, name, expected, observed);
        self.check(name, ok);
        ok
    }

    /// Accepts only if every expected check ran and passed.
    pub(crate) fn finish<B: crate::backend::Backend>(
        self,
        sim: &mut Sim<B>,
        expected_checks: usize,
        scheme: Scheme,
        seed: u64,
        round_keys: Option<RoundKeys>,
        adversary: Option<AdversaryReport>,
        detail: serde_json::Value,
    ) -> Transcript {
        let mut failures = self.failures;
        if self.checks < expected_checks {
            sim.log(crate::spacetime::Party::V0, crate::spacetime::EventKind::Timeout, serde_json::json!({ "missing": expected_checks - self.checks }));
            failures.push(format!("missing {} of {expected_checks} checks", expected_checks - self.checks));
        }
        let accepted = failures.is_empty();
        let (events, branch) = sim.take_log();
        Transcript {
            v: TRANSCRIPT_VERSION,
            scheme,
            backend: B::NAME.to_string(),
            seed,
            trial: 0,
            round: 0,
            events,
            outcome: Outcome {
                accepted,
                detected_adversary: !accepted,
                elapsed: self.elapsed,
                round_keys: if accepted { round_keys } else { None },
                branch,
                adversary,
                detail,
            },
        }
    }
}
